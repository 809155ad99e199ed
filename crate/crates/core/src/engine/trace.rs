use crate::augmented::Realization;
use crate::engine::AlgorithmKind;

/// Snapshot of the network at the start of slot `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// Per-node running-sum magnitude. ARQ variants report the buffered
    /// mass not yet acknowledged (summed over out-links); RC-RS reports the
    /// node's broadcast running sum, which is never reset.
    pub sigma: Vec<f64>,
    /// Mass carried by packets awaiting (re)transmission or delayed arrival.
    pub inflight_x: f64,
    pub inflight_y: f64,
    /// Mass held in running-sum buffers not yet released to receivers.
    pub buffered_x: f64,
    pub buffered_y: f64,
}

impl TraceRow {
    /// Node mass plus in-flight and buffered mass.
    pub fn total_x(&self) -> f64 {
        self.x.iter().sum::<f64>() + self.inflight_x + self.buffered_x
    }

    pub fn total_y(&self) -> f64 {
        self.y.iter().sum::<f64>() + self.inflight_y + self.buffered_y
    }

    pub fn mean_sigma(&self) -> f64 {
        self.sigma.iter().sum::<f64>() / self.sigma.len() as f64
    }
}

/// Rows `0..=iterations` of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub algorithm: AlgorithmKind,
    pub seed: u64,
    pub replica: u32,
    pub rows: Vec<TraceRow>,
    /// Channel outcomes, recorded for ARQ variants.
    pub realization: Option<Realization>,
}

impl Trace {
    pub fn node_count(&self) -> usize {
        self.rows.first().map_or(0, |r| r.x.len())
    }

    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("trace has at least the initial row")
    }

    pub fn initial_sum(&self) -> f64 {
        self.rows[0].x.iter().sum()
    }
}
