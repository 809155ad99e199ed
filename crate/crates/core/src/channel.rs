//! Per-link ARQ error model.
//!
//! Every data transmission on link `i -> j` is independently received in
//! error with probability `q`. The receiver answers each transmission with
//! an ACK or NACK over an error-free feedback channel within the same slot.
//! A packet is retransmitted after every NACK until it is acknowledged or
//! until `tau_max` retransmissions have failed, at which point it is
//! dropped. Self-loops never touch the channel.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Digraph, Link};
use crate::{Error, Result};

/// Error probability and retransmission limit of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    q: f64,
    tau_max: u32,
}

impl LinkParams {
    pub fn new(q: f64, tau_max: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::config("q", format!("{q} is not a probability")));
        }
        Ok(LinkParams { q, tau_max })
    }

    /// Error-free link.
    pub fn reliable() -> Self {
        LinkParams { q: 0.0, tau_max: 0 }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn tau_max(&self) -> u32 {
        self.tau_max
    }
}

/// ARQ feedback for one transmission attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feedback {
    Ack,
    Nack,
}

/// Realized outcome of one packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketFate {
    /// Acknowledged after `delay` NACKed attempts.
    Delivered { delay: u32 },
    /// All `tau_max + 1` attempts were NACKed.
    Dropped,
}

impl PacketFate {
    /// Per-slot feedback sequence that realizes this fate.
    pub fn feedback(&self, tau_max: u32) -> Vec<Feedback> {
        match *self {
            PacketFate::Delivered { delay } => {
                let mut seq = vec![Feedback::Nack; delay as usize];
                seq.push(Feedback::Ack);
                seq
            }
            PacketFate::Dropped => vec![Feedback::Nack; tau_max as usize + 1],
        }
    }
}

/// Probabilities of `Delivered(0..=tau_max)` followed by `Dropped`.
pub fn fate_distribution(params: LinkParams) -> Vec<f64> {
    let q = params.q;
    let mut probs: Vec<f64> = (0..=params.tau_max as i32).map(|r| q.powi(r) * (1.0 - q)).collect();
    probs.push(q.powi(params.tau_max as i32 + 1));
    probs
}

/// Deterministic random stream for one directed link of one replica.
///
/// Streams are keyed by the link's endpoints rather than its position in
/// the edge list, so adding links or renumbering iteration order leaves
/// the draws of every other link untouched.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, replica: u32, link: Link) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stream = (u64::from(replica) << 32) | ((link.src as u64 & 0xffff) << 16) | (link.dst as u64 & 0xffff);
        rng.set_stream(stream);
        RngStream { rng }
    }

    /// One Bernoulli(q) trial; `true` means the packet arrived in error.
    pub fn errs(&mut self, q: f64) -> bool {
        self.rng.random::<f64>() < q
    }
}

/// Samples a fate by running the sequential ARQ trials.
pub fn sample_fate(params: LinkParams, rng: &mut RngStream) -> PacketFate {
    for delay in 0..=params.tau_max {
        if !rng.errs(params.q) {
            return PacketFate::Delivered { delay };
        }
    }
    PacketFate::Dropped
}

/// Out-degree learned by broadcasting a dummy packet and counting the ARQ
/// feedback signals that come back. Feedback is error-free, so one round
/// is exact.
pub fn acquire_out_degree(g: &Digraph, j: usize) -> usize {
    g.edges().iter().filter(|link| link.src == j).map(|_| Feedback::Ack).filter(|f| *f == Feedback::Ack).count()
}

/// Link parameters: one global default plus optional per-link overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkParamTable {
    default: LinkParams,
    overrides: HashMap<Link, LinkParams>,
}

impl LinkParamTable {
    pub fn uniform(params: LinkParams) -> Self {
        LinkParamTable { default: params, overrides: HashMap::new() }
    }

    pub fn set(&mut self, link: Link, params: LinkParams) {
        self.overrides.insert(link, params);
    }

    pub fn get(&self, link: Link) -> LinkParams {
        self.overrides.get(&link).copied().unwrap_or(self.default)
    }

    pub fn default_params(&self) -> LinkParams {
        self.default
    }

    /// Largest retransmission limit used by any link of `g`.
    pub fn max_tau(&self, g: &Digraph) -> u32 {
        g.edges().iter().map(|&l| self.get(l).tau_max).max().unwrap_or(self.default.tau_max)
    }

    /// True when every link of `g` shares the same retransmission limit.
    pub fn uniform_tau(&self, g: &Digraph) -> bool {
        g.edges().iter().all(|&l| self.get(l).tau_max == self.default.tau_max)
    }

    /// Reads override lines `src dst q tau_max` (1-based nodes) on top of
    /// `default`. Links must exist in `g`.
    pub fn parse_overrides(text: &str, default: LinkParams, g: &Digraph) -> Result<Self> {
        let mut table = Self::uniform(default);
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [src, dst, q, tau] = fields.as_slice() else {
                return Err(Error::parse(line_no, "expected `src dst q tau_max`"));
            };
            let src: usize = src.parse().map_err(|_| Error::parse(line_no, "bad src"))?;
            let dst: usize = dst.parse().map_err(|_| Error::parse(line_no, "bad dst"))?;
            let q: f64 = q.parse().map_err(|_| Error::parse(line_no, "bad q"))?;
            let tau: u32 = tau.parse().map_err(|_| Error::parse(line_no, "bad tau_max"))?;
            if src == 0 || dst == 0 || g.link_index(src - 1, dst - 1).is_none() {
                return Err(Error::parse(line_no, format!("no link {src} -> {dst} in graph")));
            }
            let params = LinkParams::new(q, tau).map_err(|e| Error::parse(line_no, e.to_string()))?;
            table.set(Link { src: src - 1, dst: dst - 1 }, params);
        }
        Ok(table)
    }
}

/// One transmission attempt as seen by the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transmission {
    /// Index into `Digraph::edges`.
    pub link: usize,
    pub slot: u64,
    /// Origination slot of the packet (oldest constituent for aggregates).
    pub origin: u64,
    /// Number of failed attempts so far.
    pub age: u32,
}

/// Source of per-transmission error events.
pub trait Channel {
    /// Returns `true` when the attempt is received in error (NACK).
    fn errs(&mut self, tx: Transmission) -> bool;
}

/// Stationary i.i.d. Bernoulli errors, one stream per link.
#[derive(Debug, Clone)]
pub struct RandomChannel {
    q: Vec<f64>,
    streams: Vec<RngStream>,
}

impl RandomChannel {
    pub fn new(g: &Digraph, params: &LinkParamTable, seed: u64, replica: u32) -> Self {
        let q = g.edges().iter().map(|&l| params.get(l).q).collect();
        let streams = g.edges().iter().map(|&l| RngStream::new(seed, replica, l)).collect();
        RandomChannel { q, streams }
    }
}

impl Channel for RandomChannel {
    fn errs(&mut self, tx: Transmission) -> bool {
        self.streams[tx.link].errs(self.q[tx.link])
    }
}

/// Never errs.
#[derive(Debug, Clone, Copy, Default)]
pub struct PerfectChannel;

impl Channel for PerfectChannel {
    fn errs(&mut self, _tx: Transmission) -> bool {
        false
    }
}

/// Replays scripted error sequences keyed by `(link, origin slot)`: the
/// `age`-th entry decides the `age`-th attempt. Unscripted attempts succeed.
#[derive(Debug, Clone, Default)]
pub struct ScriptedChannel {
    script: HashMap<(usize, u64), Vec<bool>>,
}

impl ScriptedChannel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn script(mut self, link: usize, origin: u64, errors: Vec<bool>) -> Self {
        self.script.insert((link, origin), errors);
        self
    }
}

impl Channel for ScriptedChannel {
    fn errs(&mut self, tx: Transmission) -> bool {
        self.script.get(&(tx.link, tx.origin)).and_then(|seq| seq.get(tx.age as usize)).copied().unwrap_or(false)
    }
}
