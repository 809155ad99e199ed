use std::iter;

use crate::augmented::{LinkSlot, Outcome, PacketRecord, Realization};
use crate::channel::{Channel, LinkParamTable, Transmission};
use crate::engine::{init_states, AlgorithmKind, FeedbackScheme, Network, NodeState, Trace, TraceRow};
use crate::{Error, Result};

/// A packet (or STSF aggregate) waiting on a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InFlightPacket {
    pub src: usize,
    pub dst: usize,
    pub x_mass: f64,
    pub y_mass: f64,
    /// Failed attempts so far; 0 for a fresh packet.
    pub age: u32,
    /// Origination slot, used to match feedback to packets.
    pub seq: u64,
    /// Whether the header carried a non-empty running-sum difference when
    /// last transmitted.
    pub carries_buffer: bool,
}

/// Delay assignment for the robustified (delay-only) protocol.
pub trait DelaySchedule {
    /// Delay in slots for the packet originated at `origin` on `link`.
    fn delay(&mut self, link: usize, origin: u64) -> u32;
}

impl<F: FnMut(usize, u64) -> u32> DelaySchedule for F {
    fn delay(&mut self, link: usize, origin: u64) -> u32 {
        self(link, origin)
    }
}

/// Same delay on every link and slot.
#[derive(Debug, Clone, Copy)]
pub struct ConstantDelay(pub u32);

impl DelaySchedule for ConstantDelay {
    fn delay(&mut self, _link: usize, _origin: u64) -> u32 {
        self.0
    }
}

/// Default RRC delays: ARQ attempts on the channel, with the final attempt
/// forced through so that nothing is ever dropped.
#[derive(Debug)]
pub struct TruncatedArqDelays<'c, C> {
    channel: &'c mut C,
    taus: &'c [u32],
}

impl<C: Channel> DelaySchedule for TruncatedArqDelays<'_, C> {
    fn delay(&mut self, link: usize, origin: u64) -> u32 {
        let tau = self.taus[link];
        (0..tau)
            .find(|&age| !self.channel.errs(Transmission { link, slot: origin + age as u64, origin, age }))
            .unwrap_or(tau)
    }
}

#[derive(Debug, Clone, Copy)]
struct LinkSlotIndex {
    src: usize,
    dst: usize,
    /// Position in `states[src].out_links`.
    out_pos: usize,
    /// Position in `states[dst].in_links`.
    in_pos: usize,
    weight: f64,
}

#[derive(Debug, Clone, Copy)]
struct DelayedMass {
    arrival: u64,
    x: f64,
    y: f64,
}

/// One replica of a protocol run.
pub struct Simulation<'a, C> {
    net: &'a Network,
    algorithm: AlgorithmKind,
    taus: Vec<u32>,
    links: Vec<LinkSlotIndex>,
    channel: C,
    schedule: Option<Box<dyn DelaySchedule + 'a>>,
    states: Vec<NodeState>,
    pending: Vec<Vec<InFlightPacket>>,
    delayed: Vec<Vec<DelayedMass>>,
    slot: u64,
    realization: Option<Realization>,
}

impl<'a, C: Channel> Simulation<'a, C> {
    pub fn new(
        net: &'a Network,
        x0: &[f64],
        algorithm: AlgorithmKind,
        params: LinkParamTable,
        channel: C,
    ) -> Result<Self> {
        let g = net.graph();
        let states = init_states(g, x0)?;
        let links: Vec<LinkSlotIndex> = g
            .edges()
            .iter()
            .map(|l| LinkSlotIndex {
                src: l.src,
                dst: l.dst,
                out_pos: g.out_neighbors(l.src).iter().position(|&d| d == l.dst).expect("edge in out list"),
                in_pos: g.in_neighbors(l.dst).iter().position(|&s| s == l.src).expect("edge in in list"),
                weight: net.weights().get(l.dst, l.src),
            })
            .collect();
        let taus = g.edges().iter().map(|&l| params.get(l).tau_max()).collect();
        let m = links.len();
        Ok(Simulation {
            net,
            algorithm,
            taus,
            links,
            channel,
            schedule: None,
            states,
            pending: vec![Vec::new(); m],
            delayed: vec![Vec::new(); m],
            slot: 0,
            realization: None,
        })
    }

    /// Overrides the RRC delays (otherwise drawn from the channel).
    pub fn with_delay_schedule(mut self, schedule: impl DelaySchedule + 'a) -> Self {
        self.schedule = Some(Box::new(schedule));
        self
    }

    /// Starts (or stops) recording channel outcomes for ARQ variants.
    pub fn record_realization(&mut self, enabled: bool) {
        self.realization = match (enabled, self.algorithm.feedback_scheme()) {
            (true, Some(scheme)) => Some(Realization::new(
                scheme,
                self.net.node_count(),
                self.net.graph().edges().to_vec(),
                self.taus.clone(),
            )),
            _ => None,
        };
    }

    pub fn states(&self) -> &[NodeState] {
        &self.states
    }

    /// Packets currently queued on link `idx`.
    pub fn pending(&self, idx: usize) -> &[InFlightPacket] {
        &self.pending[idx]
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn realization(&self) -> Option<&Realization> {
        self.realization.as_ref()
    }

    /// Advances one slot.
    pub fn step(&mut self) -> Result<()> {
        let delivered = match self.algorithm {
            AlgorithmKind::Rc => self.deliver_reliable(),
            AlgorithmKind::Rrc => self.deliver_delayed()?,
            AlgorithmKind::RcRs => self.deliver_running_sums(),
            AlgorithmKind::ArqMtmf => self.deliver_arq(FeedbackScheme::Mtmf),
            AlgorithmKind::ArqStsf => self.deliver_arq(FeedbackScheme::Stsf),
        };
        self.update_nodes(&delivered);
        self.slot += 1;
        Ok(())
    }

    /// Runs `iterations` slots and returns rows `0..=iterations`.
    pub fn run(mut self, iterations: usize) -> Result<Trace> {
        let mut rows = Vec::with_capacity(iterations + 1);
        rows.push(self.snapshot());
        for _ in 0..iterations {
            self.step()?;
            rows.push(self.snapshot());
        }
        Ok(Trace { algorithm: self.algorithm, seed: 0, replica: 0, rows, realization: self.realization })
    }

    /// `x_j[k+1] = p_jj x_j[k] + sum of masses delivered to j`, in-links in
    /// ascending source order so that every variant reproduces plain RC
    /// bit for bit on a perfect channel.
    fn update_nodes(&mut self, delivered: &[(f64, f64)]) {
        let p = self.net.weights();
        let mut next: Vec<(f64, f64)> =
            self.states.iter().enumerate().map(|(j, s)| (p.self_weight(j) * s.x, p.self_weight(j) * s.y)).collect();
        // Links are sorted by (src, dst), so per receiver they arrive in
        // ascending source order.
        for (lk, &(dx, dy)) in self.links.iter().zip(delivered) {
            next[lk.dst].0 += dx;
            next[lk.dst].1 += dy;
        }
        for (state, (x, y)) in self.states.iter_mut().zip(next) {
            state.x = x;
            state.y = y;
            state.refresh_ratio();
        }
    }

    fn fresh(&self, idx: usize) -> InFlightPacket {
        let lk = self.links[idx];
        let src = &self.states[lk.src];
        let out = &src.out_links[lk.out_pos];
        InFlightPacket {
            src: lk.src,
            dst: lk.dst,
            x_mass: lk.weight * src.x,
            y_mass: lk.weight * src.y,
            age: 0,
            seq: self.slot,
            carries_buffer: out.sigma != out.acked_sigma || out.eta != out.acked_eta,
        }
    }

    fn deliver_reliable(&mut self) -> Vec<(f64, f64)> {
        (0..self.links.len())
            .map(|idx| {
                let pkt = self.fresh(idx);
                (pkt.x_mass, pkt.y_mass)
            })
            .collect()
    }

    #[allow(clippy::needless_range_loop)]
    fn deliver_delayed(&mut self) -> Result<Vec<(f64, f64)>> {
        let k = self.slot;
        let mut delivered = vec![(0.0, 0.0); self.links.len()];
        for idx in 0..self.links.len() {
            let pkt = self.fresh(idx);
            let tau = self.taus[idx];
            let delay = match self.schedule.as_mut() {
                Some(schedule) => schedule.delay(idx, k),
                None => TruncatedArqDelays { channel: &mut self.channel, taus: &self.taus }.delay(idx, k),
            };
            if delay > tau {
                return Err(Error::config(
                    "delay_schedule",
                    format!("delay {delay} on link {} exceeds limit {tau}", self.net.graph().edges()[idx]),
                ));
            }
            let slot_delivered = &mut delivered[idx];
            if delay == 0 {
                slot_delivered.0 += pkt.x_mass;
                slot_delivered.1 += pkt.y_mass;
            } else {
                self.delayed[idx].push(DelayedMass { arrival: k + delay as u64, x: pkt.x_mass, y: pkt.y_mass });
            }
            self.delayed[idx].retain(|d| {
                if d.arrival == k {
                    slot_delivered.0 += d.x;
                    slot_delivered.1 += d.y;
                    false
                } else {
                    true
                }
            });
        }
        Ok(delivered)
    }

    fn deliver_running_sums(&mut self) -> Vec<(f64, f64)> {
        let k = self.slot;
        let p = self.net.weights();
        for (j, state) in self.states.iter_mut().enumerate() {
            if let Some(first) = state.out_links.first() {
                let w = p.get(first.dst, j);
                let (x, y) = (w * state.x, w * state.y);
                for out in state.out_links.iter_mut() {
                    out.sigma.add(x);
                    out.eta.add(y);
                }
            }
        }
        let mut delivered = vec![(0.0, 0.0); self.links.len()];
        for (idx, lk) in self.links.iter().enumerate() {
            let heard = !self.channel.errs(Transmission { link: idx, slot: k, origin: k, age: 0 });
            if heard {
                let out = &self.states[lk.src].out_links[lk.out_pos];
                let (sigma, eta) = (out.sigma, out.eta);
                let inl = &mut self.states[lk.dst].in_links[lk.in_pos];
                delivered[idx] = (sigma.since(&inl.chi), eta.since(&inl.psi));
                inl.chi = sigma;
                inl.psi = eta;
            }
        }
        delivered
    }

    #[allow(clippy::needless_range_loop)]
    fn deliver_arq(&mut self, scheme: FeedbackScheme) -> Vec<(f64, f64)> {
        let k = self.slot;
        let mut delivered = vec![(0.0, 0.0); self.links.len()];
        let mut slot_record = Vec::with_capacity(if self.realization.is_some() { self.links.len() } else { 0 });
        for idx in 0..self.links.len() {
            let lk = self.links[idx];
            let tau = self.taus[idx];
            let fresh = self.fresh(idx);
            let queued = std::mem::take(&mut self.pending[idx]);
            let batch: Vec<InFlightPacket> = match scheme {
                // Fresh packet first, then retransmissions by ascending age.
                FeedbackScheme::Mtmf => iter::once(fresh).chain(queued).collect(),
                FeedbackScheme::Stsf => match queued.into_iter().next() {
                    Some(old) => vec![InFlightPacket {
                        x_mass: old.x_mass + fresh.x_mass,
                        y_mass: old.y_mass + fresh.y_mass,
                        carries_buffer: fresh.carries_buffer,
                        ..old
                    }],
                    None => vec![fresh],
                },
            };

            let mut records = Vec::with_capacity(batch.len());
            let mut any_success = false;
            let (mut drop_x, mut drop_y, mut dropped) = (0.0, 0.0, false);
            let slot_delivered = &mut delivered[idx];
            for pkt in batch {
                let errs = self.channel.errs(Transmission { link: idx, slot: k, origin: pkt.seq, age: pkt.age });
                let outcome = match (errs, pkt.age < tau) {
                    (false, _) => Outcome::Success,
                    (true, true) => Outcome::Error,
                    (true, false) => Outcome::Drop,
                };
                records.push(PacketRecord { age: pkt.age, outcome });
                match outcome {
                    Outcome::Success => {
                        any_success = true;
                        slot_delivered.0 += pkt.x_mass;
                        slot_delivered.1 += pkt.y_mass;
                    }
                    Outcome::Error => self.pending[idx].push(InFlightPacket { age: pkt.age + 1, ..pkt }),
                    Outcome::Drop => {
                        dropped = true;
                        drop_x += pkt.x_mass;
                        drop_y += pkt.y_mass;
                    }
                }
            }

            // Any acknowledged packet carried the running sums as they stood
            // at transmission time, i.e. before this slot's drops.
            let out = &mut self.states[lk.src].out_links[lk.out_pos];
            if any_success && (out.sigma != out.acked_sigma || out.eta != out.acked_eta) {
                let (sigma, eta) = (out.sigma, out.eta);
                slot_delivered.0 += sigma.since(&out.acked_sigma);
                slot_delivered.1 += eta.since(&out.acked_eta);
                out.acked_sigma = sigma;
                out.acked_eta = eta;
                let inl = &mut self.states[lk.dst].in_links[lk.in_pos];
                inl.chi = sigma;
                inl.psi = eta;
            }
            if dropped {
                let out = &mut self.states[lk.src].out_links[lk.out_pos];
                out.sigma.add(drop_x);
                out.eta.add(drop_y);
            }
            if self.realization.is_some() {
                slot_record.push(LinkSlot { packets: records, release: any_success });
            }
        }
        if let Some(realization) = self.realization.as_mut() {
            realization.push_slot(slot_record);
        }
        delivered
    }

    fn snapshot(&self) -> TraceRow {
        let n = self.states.len();
        let mut sigma = vec![0.0; n];
        let (mut inflight_x, mut inflight_y, mut buffered_x, mut buffered_y) = (0.0, 0.0, 0.0, 0.0);
        match self.algorithm {
            AlgorithmKind::ArqMtmf | AlgorithmKind::ArqStsf => {
                for (j, state) in self.states.iter().enumerate() {
                    for out in &state.out_links {
                        let (bx, by) = (out.outstanding_x(), out.outstanding_y());
                        sigma[j] += bx;
                        buffered_x += bx;
                        buffered_y += by;
                    }
                }
                for pkt in self.pending.iter().flatten() {
                    inflight_x += pkt.x_mass;
                    inflight_y += pkt.y_mass;
                }
            }
            AlgorithmKind::RcRs => {
                for (j, state) in self.states.iter().enumerate() {
                    sigma[j] = state.out_links.first().map_or(0.0, |o| o.sigma.value());
                }
                for lk in &self.links {
                    let out = &self.states[lk.src].out_links[lk.out_pos];
                    let inl = &self.states[lk.dst].in_links[lk.in_pos];
                    buffered_x += out.sigma.since(&inl.chi);
                    buffered_y += out.eta.since(&inl.psi);
                }
            }
            AlgorithmKind::Rrc => {
                for d in self.delayed.iter().flatten() {
                    inflight_x += d.x;
                    inflight_y += d.y;
                }
            }
            AlgorithmKind::Rc => {}
        }
        TraceRow {
            k: self.slot as usize,
            x: self.states.iter().map(|s| s.x).collect(),
            y: self.states.iter().map(|s| s.y).collect(),
            z: self.states.iter().map(|s| s.z).collect(),
            sigma,
            inflight_x,
            inflight_y,
            buffered_x,
            buffered_y,
        }
    }
}
