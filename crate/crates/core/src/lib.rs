//! Discrete-time average consensus over unreliable directed networks.
//!
//! The crate implements ratio consensus (push-sum) and its variants that
//! tolerate bounded delays and packet drops, most notably the ARQ-based
//! ratio consensus protocol in which ACK/NACK feedback drives
//! retransmissions and per-link running sums recover the mass of packets
//! that exhaust their retransmission budget.
//!
//! Module map:
//!
//! * [`graph`]: directed topologies and the column-stochastic weights.
//! * [`channel`]: per-link packet error / retransmission model.
//! * [`engine`]: RC, RRC, RC-RS and ARQ-RC (MTMF / STSF) state machines.
//! * [`augmented`]: the augmented-digraph matrix model used as an oracle.
//! * [`harness`]: experiment configuration, metrics and CSV output.

pub mod augmented;
pub mod channel;
pub mod engine;
mod error;
pub mod graph;
pub mod harness;
mod running_sum;

pub use error::{Error, Result};
pub use running_sum::RunningSum;
