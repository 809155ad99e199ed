use crate::graph::Digraph;
use crate::{Error, Result, RunningSum};

/// Sender side of one out-link: running sums of the mass pushed into the
/// link's drop buffer, and the portion the receiver has acknowledged.
#[derive(Debug, Clone, PartialEq)]
pub struct OutLink {
    pub dst: usize,
    pub sigma: RunningSum,
    pub eta: RunningSum,
    pub acked_sigma: RunningSum,
    pub acked_eta: RunningSum,
}

impl OutLink {
    fn new(dst: usize) -> Self {
        OutLink {
            dst,
            sigma: RunningSum::ZERO,
            eta: RunningSum::ZERO,
            acked_sigma: RunningSum::ZERO,
            acked_eta: RunningSum::ZERO,
        }
    }

    /// Buffered x mass not yet released to the receiver.
    pub fn outstanding_x(&self) -> f64 {
        self.sigma.since(&self.acked_sigma)
    }

    pub fn outstanding_y(&self) -> f64 {
        self.eta.since(&self.acked_eta)
    }
}

/// Receiver side of one in-link: last running sums received.
#[derive(Debug, Clone, PartialEq)]
pub struct InLink {
    pub src: usize,
    pub chi: RunningSum,
    pub psi: RunningSum,
}

/// Per-node protocol variables.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Ordered like `Digraph::out_neighbors`.
    pub out_links: Vec<OutLink>,
    /// Ordered like `Digraph::in_neighbors`.
    pub in_links: Vec<InLink>,
}

impl NodeState {
    /// Recomputes the ratio; it holds its previous value while `y` is not
    /// positive.
    pub(crate) fn refresh_ratio(&mut self) {
        if self.y > 0.0 {
            self.z = self.x / self.y;
        }
    }
}

/// Initial states: `x = x0`, `y = 1`, all running sums zero.
pub fn init_states(g: &Digraph, x0: &[f64]) -> Result<Vec<NodeState>> {
    if x0.len() != g.node_count() {
        return Err(Error::LengthMismatch { expected: g.node_count(), actual: x0.len() });
    }
    Ok(x0
        .iter()
        .enumerate()
        .map(|(j, &x)| NodeState {
            x,
            y: 1.0,
            z: x,
            out_links: g.out_neighbors(j).iter().map(|&dst| OutLink::new(dst)).collect(),
            in_links: g
                .in_neighbors(j)
                .iter()
                .map(|&src| InLink { src, chi: RunningSum::ZERO, psi: RunningSum::ZERO })
                .collect(),
        })
        .collect())
}
