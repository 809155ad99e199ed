//! Synchronous discrete-time consensus engines.
//!
//! All nodes move in lockstep: within slot `k` every node originates
//! weighted copies of `(x_j[k], y_j[k])` for its out-neighbors, links carry
//! them subject to the channel, feedback arrives within the slot, and each
//! node forms `x_j[k+1]` from its retained self mass plus everything
//! delivered to it during the slot.
//!
//! | kind       | links                                   | recovery            |
//! |------------|-----------------------------------------|---------------------|
//! | `Rc`       | reliable, no delay                      | none needed         |
//! | `Rrc`      | bounded delay, no drops                 | none needed         |
//! | `RcRs`     | i.i.d. loss, no feedback                | running sums        |
//! | `ArqMtmf`  | ARQ, one packet and feedback per mass   | per-link buffers    |
//! | `ArqStsf`  | ARQ, one aggregate packet per slot      | per-link buffers    |

mod simulation;
mod state;
mod trace;

use std::fmt;
use std::str::FromStr;

pub use simulation::{ConstantDelay, DelaySchedule, InFlightPacket, Simulation, TruncatedArqDelays};
pub use state::{init_states, InLink, NodeState, OutLink};
pub use trace::{Trace, TraceRow};

use crate::channel::{LinkParamTable, RandomChannel};
use crate::graph::{assign_weights, Digraph, WeightMatrix};
use crate::{Error, Result};

/// Protocol selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgorithmKind {
    Rc,
    Rrc,
    RcRs,
    ArqMtmf,
    ArqStsf,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 5] =
        [AlgorithmKind::Rc, AlgorithmKind::Rrc, AlgorithmKind::RcRs, AlgorithmKind::ArqMtmf, AlgorithmKind::ArqStsf];

    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmKind::Rc => "rc",
            AlgorithmKind::Rrc => "rrc",
            AlgorithmKind::RcRs => "rcrs",
            AlgorithmKind::ArqMtmf => "arq-mtmf",
            AlgorithmKind::ArqStsf => "arq-stsf",
        }
    }

    pub fn feedback_scheme(&self) -> Option<FeedbackScheme> {
        match self {
            AlgorithmKind::ArqMtmf => Some(FeedbackScheme::Mtmf),
            AlgorithmKind::ArqStsf => Some(FeedbackScheme::Stsf),
            _ => None,
        }
    }

    pub fn is_arq(&self) -> bool {
        self.feedback_scheme().is_some()
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmKind::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::config("algo", format!("unknown algorithm `{s}` (rc|rrc|rcrs|arq-stsf|arq-mtmf)")))
    }
}

/// How pending packets on one link share the channel within a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeedbackScheme {
    /// Multiple transmissions, multiple feedback: every pending packet is
    /// sent and acknowledged individually.
    Mtmf,
    /// Single transmission, single feedback: pending masses are summed into
    /// one packet whose age is that of its oldest constituent.
    Stsf,
}

impl FeedbackScheme {
    pub fn name(&self) -> &'static str {
        match self {
            FeedbackScheme::Mtmf => "mtmf",
            FeedbackScheme::Stsf => "stsf",
        }
    }
}

/// A topology together with its weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    graph: Digraph,
    weights: WeightMatrix,
}

impl Network {
    pub fn new(graph: Digraph) -> Self {
        let weights = assign_weights(&graph);
        Network { graph, weights }
    }

    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }
}

/// One error-free ratio-consensus iteration: `x <- P x`, `y <- P y`.
pub fn rc_step(states: &mut [NodeState], net: &Network) {
    let p = net.weights();
    let g = net.graph();
    let next: Vec<(f64, f64)> = (0..g.node_count())
        .map(|j| {
            let mut x = p.self_weight(j) * states[j].x;
            let mut y = p.self_weight(j) * states[j].y;
            for &i in g.in_neighbors(j) {
                x += p.get(j, i) * states[i].x;
                y += p.get(j, i) * states[i].y;
            }
            (x, y)
        })
        .collect();
    for (state, (x, y)) in states.iter_mut().zip(next) {
        state.x = x;
        state.y = y;
        state.refresh_ratio();
    }
}

/// Runs `algorithm` for `iterations` slots with i.i.d. channel errors
/// drawn from `(seed, replica 0)`.
pub fn run(
    net: &Network,
    x0: &[f64],
    algorithm: AlgorithmKind,
    params: &LinkParamTable,
    iterations: usize,
    seed: u64,
) -> Result<Trace> {
    run_replica(net, x0, algorithm, params, iterations, seed, 0)
}

/// As [`run`], with an explicit replica id for the random streams.
pub fn run_replica(
    net: &Network,
    x0: &[f64],
    algorithm: AlgorithmKind,
    params: &LinkParamTable,
    iterations: usize,
    seed: u64,
    replica: u32,
) -> Result<Trace> {
    let channel = RandomChannel::new(net.graph(), params, seed, replica);
    let mut sim = Simulation::new(net, x0, algorithm, params.clone(), channel)?;
    sim.record_realization(algorithm.is_arq());
    let mut trace = sim.run(iterations)?;
    trace.seed = seed;
    trace.replica = replica;
    Ok(trace)
}
