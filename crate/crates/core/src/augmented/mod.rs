//! Augmented-digraph matrix model, used as an independent oracle for the
//! ARQ engine.
//!
//! Every link `i -> j` gets `tau` retransmission stages and one buffer node
//! on top of the `n` actual nodes. Stage `a` of a link holds the mass that
//! has failed exactly `a` attempts and is due for attempt `a + 1` in the
//! current slot; the buffer holds dropped mass until the link's next
//! acknowledged transmission. For a recorded channel realization each slot
//! is then a fixed column-stochastic matrix `Xi[k]` and
//! `x~[k+1] = Xi[k] x~[k]`.

mod realization;

pub use realization::{LinkSlot, Outcome, PacketRecord, Realization};

use crate::engine::{FeedbackScheme, Network};
use crate::graph::{Digraph, Link, WeightMatrix};
use crate::{Error, Result};

/// What a state slot of the augmented system represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotKind {
    Actual(usize),
    /// Mass on link `link` (index into the edge list) that has failed
    /// `stage` attempts, `1 <= stage <= tau`.
    Stage {
        link: usize,
        stage: u32,
    },
    /// Dropped mass of link `link` awaiting release.
    Buffer {
        link: usize,
    },
}

/// Ordering of the augmented state: actual nodes, then the stages of each
/// link, then one buffer per link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedIndex {
    n: usize,
    links: Vec<Link>,
    tau: u32,
}

pub fn build_index(g: &Digraph, tau: u32) -> AugmentedIndex {
    AugmentedIndex { n: g.node_count(), links: g.edges().to_vec(), tau }
}

impl AugmentedIndex {
    /// `|E| (tau + 1) + n`.
    pub fn dim(&self) -> usize {
        self.links.len() * (self.tau as usize + 1) + self.n
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> u32 {
        self.tau
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn position(&self, kind: SlotKind) -> usize {
        let tau = self.tau as usize;
        match kind {
            SlotKind::Actual(j) => {
                assert!(j < self.n);
                j
            }
            SlotKind::Stage { link, stage } => {
                assert!(link < self.links.len() && (1..=self.tau).contains(&stage));
                self.n + link * tau + stage as usize - 1
            }
            SlotKind::Buffer { link } => {
                assert!(link < self.links.len());
                self.n + self.links.len() * tau + link
            }
        }
    }

    pub fn kind(&self, pos: usize) -> SlotKind {
        let tau = self.tau as usize;
        let m = self.links.len();
        assert!(pos < self.dim());
        if pos < self.n {
            SlotKind::Actual(pos)
        } else if pos < self.n + m * tau {
            let off = pos - self.n;
            SlotKind::Stage { link: off / tau, stage: (off % tau) as u32 + 1 }
        } else {
            SlotKind::Buffer { link: pos - self.n - m * tau }
        }
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

/// One slot of the augmented system.
pub type XiMatrix = Matrix;

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::Dimension { expected: dim, actual: bad.len() });
        }
        Ok(Matrix { dim, data: rows.concat() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    fn add(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.dim + col] += v;
    }

    pub fn column_sum(&self, col: usize) -> f64 {
        (0..self.dim).map(|r| self.get(r, col)).sum()
    }

    /// Largest deviation of any column sum from 1.
    pub fn column_stochastic_error(&self) -> f64 {
        (0..self.dim).map(|c| (self.column_sum(c) - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, actual: v.len() });
        }
        Ok(self.data.chunks(self.dim).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect())
    }

    /// `self * rhs`.
    pub fn mul(&self, rhs: &Matrix) -> Result<Matrix> {
        if rhs.dim != self.dim {
            return Err(Error::Dimension { expected: self.dim, actual: rhs.dim });
        }
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a != 0.0 {
                    let src = &rhs.data[k * d..(k + 1) * d];
                    for (o, b) in out.data[i * d..(i + 1) * d].iter_mut().zip(src) {
                        *o += a * b;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `Xi[k]` for one recorded slot.
///
/// The index may be deeper than a link's own limit; stages beyond it stay
/// empty.
pub fn build_xi(index: &AugmentedIndex, p: &WeightMatrix, realization: &Realization, k: usize) -> Result<XiMatrix> {
    let slot =
        realization.slots.get(k).ok_or_else(|| Error::Realization { slot: k, message: "slot not recorded".into() })?;
    if realization.links != index.links || realization.n != index.n || p.size() != index.n {
        return Err(Error::Realization { slot: k, message: "realization does not match the index".into() });
    }
    if realization.max_tau() > index.tau {
        return Err(Error::Realization {
            slot: k,
            message: format!("limit {} exceeds index depth {}", realization.max_tau(), index.tau),
        });
    }
    realization.validate_slot(k, slot)?;

    let mut xi = Matrix::zeros(index.dim());
    for j in 0..index.n {
        xi.add(j, j, p.self_weight(j));
    }
    for (idx, (link, rec)) in index.links.iter().zip(slot).enumerate() {
        let target = |outcome: Outcome, age: u32| match outcome {
            Outcome::Success => link.dst,
            Outcome::Error => index.position(SlotKind::Stage { link: idx, stage: age + 1 }),
            Outcome::Drop => index.position(SlotKind::Buffer { link: idx }),
        };
        let w = p.get(link.dst, link.src);
        // Outcome applied to the mass of each age; unlisted ages are empty.
        let mut fate: Vec<Option<Outcome>> = vec![None; index.tau as usize + 1];
        match realization.scheme {
            FeedbackScheme::Mtmf => {
                for pkt in &rec.packets {
                    fate[pkt.age as usize] = Some(pkt.outcome);
                }
            }
            FeedbackScheme::Stsf => {
                let agg = rec.packets[0];
                for f in &mut fate[..=agg.age as usize] {
                    *f = Some(agg.outcome);
                }
            }
        }
        let fresh =
            fate[0].ok_or_else(|| Error::Realization { slot: k, message: format!("link {link}: no fresh packet") })?;
        xi.add(target(fresh, 0), link.src, w);
        for stage in 1..=index.tau {
            let col = index.position(SlotKind::Stage { link: idx, stage });
            let row = fate[stage as usize].map_or(link.dst, |o| target(o, stage));
            xi.add(row, col, 1.0);
        }
        let buffer = index.position(SlotKind::Buffer { link: idx });
        xi.add(if rec.release { link.dst } else { buffer }, buffer, 1.0);
    }
    Ok(xi)
}

/// Stacked state `(x~, y~)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl AugmentedState {
    /// Actual nodes carry `(x0, 1)`; every virtual slot starts empty.
    pub fn initial(index: &AugmentedIndex, x0: &[f64]) -> Result<Self> {
        if x0.len() != index.n {
            return Err(Error::LengthMismatch { expected: index.n, actual: x0.len() });
        }
        let mut x = vec![0.0; index.dim()];
        let mut y = vec![0.0; index.dim()];
        x[..index.n].copy_from_slice(x0);
        y[..index.n].fill(1.0);
        Ok(AugmentedState { x, y })
    }

    pub fn actual_x(&self, n: usize) -> &[f64] {
        &self.x[..n]
    }

    pub fn actual_y(&self, n: usize) -> &[f64] {
        &self.y[..n]
    }

    pub fn total_x(&self) -> f64 {
        self.x.iter().sum()
    }

    pub fn total_y(&self) -> f64 {
        self.y.iter().sum()
    }
}

pub fn step(state: &AugmentedState, xi: &XiMatrix) -> Result<AugmentedState> {
    Ok(AugmentedState { x: xi.mul_vec(&state.x)?, y: xi.mul_vec(&state.y)? })
}

/// `Xi[0..len]` for a whole realization.
pub fn xi_sequence(net: &Network, realization: &Realization) -> Result<(AugmentedIndex, Vec<XiMatrix>)> {
    let index = build_index(net.graph(), realization.max_tau());
    let xis =
        (0..realization.len()).map(|k| build_xi(&index, net.weights(), realization, k)).collect::<Result<Vec<_>>>()?;
    Ok((index, xis))
}

/// Evolves the matrix form along a recorded realization; returns states
/// `0..=len`.
pub fn replay(net: &Network, x0: &[f64], realization: &Realization) -> Result<Vec<AugmentedState>> {
    let (index, xis) = xi_sequence(net, realization)?;
    let mut states = vec![AugmentedState::initial(&index, x0)?];
    for xi in &xis {
        let next = step(states.last().expect("non-empty"), xi)?;
        states.push(next);
    }
    Ok(states)
}

/// `max_j max_{i1,i2} |L(j,i1) - L(j,i2)|`.
pub fn ergodicity_coefficient(l: &Matrix) -> f64 {
    l.data
        .chunks(l.dim.max(1))
        .map(|row| {
            let (lo, hi) = row.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            if row.is_empty() {
                0.0
            } else {
                hi - lo
            }
        })
        .fold(0.0, f64::max)
}

/// `L_k = Xi[k-1] ... Xi[0]`; the identity for an empty sequence.
pub fn forward_product(xis: &[XiMatrix]) -> Result<Matrix> {
    let dim = xis.first().map_or(0, Matrix::dim);
    xis.iter().try_fold(Matrix::identity(dim), |l, xi| xi.mul(&l))
}

/// `delta(L_k)` for `k = 0..=xis.len()`.
pub fn ergodicity_trace(xis: &[XiMatrix]) -> Result<Vec<f64>> {
    let dim = xis.first().map_or(0, Matrix::dim);
    let mut l = Matrix::identity(dim);
    let mut out = vec![ergodicity_coefficient(&l)];
    for xi in xis {
        l = xi.mul(&l)?;
        out.push(ergodicity_coefficient(&l));
    }
    Ok(out)
}

/// Result of the lower-bound check on the `y` iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct YBoundReport {
    /// `min_j 1 / (1 + d_j^+)`.
    pub c: f64,
    pub lambda: usize,
    /// `c^lambda`.
    pub threshold: f64,
    /// `10 * lambda`.
    pub window: usize,
    /// First `(node, window start)` with no `y_j[k] >= threshold`.
    pub first_miss: Option<(usize, usize)>,
}

impl YBoundReport {
    pub fn holds(&self) -> bool {
        self.first_miss.is_none()
    }
}

/// Default `lambda = n (tau + 2)`.
pub fn default_lambda(n: usize, tau: u32) -> usize {
    n * (tau as usize + 2)
}

/// Checks that each node's `y` reaches `c^lambda` at least once in every
/// full window of `10 lambda` slots. `y_rows[k][j]` is `y_j[k]`.
pub fn y_lower_bound(g: &Digraph, y_rows: &[Vec<f64>], lambda: usize) -> YBoundReport {
    let c = (0..g.node_count()).map(|j| 1.0 / (1.0 + g.out_degree(j) as f64)).fold(1.0, f64::min);
    let threshold = c.powi(lambda as i32);
    let window = (10 * lambda).max(1);
    let mut first_miss = None;
    'outer: for start in (0..y_rows.len()).step_by(window) {
        let chunk = &y_rows[start..(start + window).min(y_rows.len())];
        if chunk.len() < window {
            break;
        }
        for j in 0..g.node_count() {
            if !chunk.iter().any(|row| row[j] >= threshold) {
                first_miss = Some((j, start));
                break 'outer;
            }
        }
    }
    YBoundReport { c, lambda, threshold, window, first_miss }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{LinkParamTable, LinkParams, RandomChannel, ScriptedChannel};
    use crate::engine::{AlgorithmKind, Simulation};
    use proptest::prelude::*;

    const X5: [f64; 5] = [4.0, 5.0, 6.0, 3.0, 2.0];

    #[test]
    fn index_sizes() {
        let two = Digraph::new(2, [(0, 1), (1, 0)]).unwrap();
        assert_eq!(build_index(&two, 2).dim(), 8);
        assert_eq!(build_index(&Digraph::five_node(), 2).dim(), 29);
        assert_eq!(build_index(&Digraph::five_node(), 0).dim(), 8 + 5);
    }

    #[test]
    fn index_is_a_bijection() {
        let index = build_index(&Digraph::ten_node(), 3);
        for pos in 0..index.dim() {
            assert_eq!(index.position(index.kind(pos)), pos);
        }
    }

    #[test]
    fn ergodicity_examples() {
        assert_eq!(ergodicity_coefficient(&Matrix::identity(2)), 1.0);
        let rank_one = Matrix::from_rows(&[vec![0.3, 0.3], vec![0.7, 0.7]]).unwrap();
        assert_eq!(ergodicity_coefficient(&rank_one), 0.0);
    }

    #[test]
    fn forward_product_edges() {
        assert_eq!(forward_product(&[]).unwrap().dim(), 0);
        let a = Matrix::from_rows(&[vec![0.5, 1.0], vec![0.5, 0.0]]).unwrap();
        assert_eq!(forward_product(std::slice::from_ref(&a)).unwrap(), a);
        let b = Matrix::identity(3);
        assert!(matches!(forward_product(&[a, b]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn step_identity_and_mismatch() {
        let index = build_index(&Digraph::five_node(), 1);
        let s = AugmentedState::initial(&index, &X5).unwrap();
        assert_eq!(step(&s, &Matrix::identity(index.dim())).unwrap(), s);
        assert!(step(&s, &Matrix::identity(3)).is_err());
    }

    fn record(net: &Network, algo: AlgorithmKind, params: LinkParamTable, seed: u64, slots: usize) -> Realization {
        let channel = RandomChannel::new(net.graph(), &params, seed, 0);
        let mut sim = Simulation::new(net, &X5, algo, params, channel).unwrap();
        sim.record_realization(true);
        sim.run(slots).unwrap().realization.unwrap()
    }

    #[test]
    fn error_free_slot_embeds_p() {
        let net = Network::new(Digraph::five_node());
        let params = LinkParamTable::uniform(LinkParams::new(0.0, 2).unwrap());
        let r = record(&net, AlgorithmKind::ArqMtmf, params, 0, 1);
        let (index, xis) = xi_sequence(&net, &r).unwrap();
        for row in 0..5 {
            for col in 0..5 {
                assert_eq!(xis[0].get(row, col), net.weights().get(row, col));
            }
        }
        for pos in 5..index.dim() {
            if let SlotKind::Buffer { .. } = index.kind(pos) {
                assert_eq!(xis[0].get(pos, pos), 0.0, "nothing outstanding, release on success");
            }
        }
        assert!(xis[0].column_stochastic_error() < 1e-12);
    }

    #[test]
    fn two_node_scripted_replay_matches_engine() {
        let g = Digraph::new(2, [(0, 1), (1, 0)]).unwrap();
        let net = Network::new(g.clone());
        let mut params = LinkParamTable::uniform(LinkParams::new(0.5, 2).unwrap());
        params.set(Link { src: 1, dst: 0 }, LinkParams::new(0.5, 1).unwrap());
        let l12 = g.link_index(0, 1).unwrap();
        let l21 = g.link_index(1, 0).unwrap();
        let channel = ScriptedChannel::new().script(l12, 0, vec![true, true, true]).script(l21, 0, vec![true, false]);
        for algo in [AlgorithmKind::ArqMtmf, AlgorithmKind::ArqStsf] {
            let mut sim = Simulation::new(&net, &[4.0, 2.0], algo, params.clone(), channel.clone()).unwrap();
            sim.record_realization(true);
            let trace = sim.run(50).unwrap();
            let realization = trace.realization.as_ref().unwrap();
            let states = replay(&net, &[4.0, 2.0], realization).unwrap();
            for (row, s) in trace.rows.iter().zip(&states) {
                for j in 0..2 {
                    assert!((row.x[j] - s.x[j]).abs() <= 1e-12, "{algo} k={}", row.k);
                    assert!((row.y[j] - s.y[j]).abs() <= 1e-12);
                }
            }
            let index = build_index(&g, 2);
            let buffer = index.position(SlotKind::Buffer { link: l12 });
            assert!(states[3].x[buffer] > 0.0, "{algo}: drop lands in the buffer");
            assert_eq!(states[4].x[buffer], 0.0, "{algo}: released on next success");
            let (_, xis) = xi_sequence(&net, realization).unwrap();
            let l = forward_product(&xis).unwrap();
            let stacked = AugmentedState::initial(&index, &[4.0, 2.0]).unwrap();
            let x50 = l.mul_vec(&stacked.x).unwrap();
            for (a, b) in x50.iter().zip(&trace.rows[50].x) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn build_xi_rejects_mismatched_index() {
        let net = Network::new(Digraph::five_node());
        let params = LinkParamTable::uniform(LinkParams::new(0.5, 3).unwrap());
        let r = record(&net, AlgorithmKind::ArqMtmf, params, 1, 5);
        let shallow = build_index(net.graph(), 1);
        assert!(matches!(build_xi(&shallow, net.weights(), &r, 0), Err(Error::Realization { .. })));
        let index = build_index(net.graph(), 3);
        assert!(build_xi(&index, net.weights(), &r, 5).is_err());
    }

    #[test]
    fn y_bound_on_paper_graph() {
        let net = Network::new(Digraph::five_node());
        let params = LinkParamTable::uniform(LinkParams::new(0.6, 2).unwrap());
        let trace = crate::engine::run(&net, &X5, AlgorithmKind::ArqMtmf, &params, 1000, 3).unwrap();
        let ys: Vec<Vec<f64>> = trace.rows.iter().map(|r| r.y.clone()).collect();
        let report = y_lower_bound(net.graph(), &ys, default_lambda(5, 2));
        assert_eq!(report.lambda, 20);
        assert!((report.c - 1.0 / 3.0).abs() < 1e-15);
        assert!(report.holds());
        let always_low = vec![vec![0.0; 5]; 400];
        assert_eq!(y_lower_bound(net.graph(), &always_low, 20).first_miss, Some((0, 0)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn xi_columns_sum_to_one(seed in any::<u64>(), q in 0.0f64..1.0, tau in 0u32..4, stsf in any::<bool>()) {
            let net = Network::new(Digraph::five_node());
            let params = LinkParamTable::uniform(LinkParams::new(q, tau).unwrap());
            let algo = if stsf { AlgorithmKind::ArqStsf } else { AlgorithmKind::ArqMtmf };
            let r = record(&net, algo, params, seed, 40);
            let (_, xis) = xi_sequence(&net, &r).unwrap();
            for xi in &xis {
                prop_assert!(xi.column_stochastic_error() < 1e-12);
                prop_assert!(xi.data.iter().all(|&v| v >= 0.0));
            }
        }
    }
}
