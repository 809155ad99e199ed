use std::fmt;

use crate::engine::FeedbackScheme;
use crate::graph::Link;
use crate::{Error, Result};

/// Result of one transmission attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// Received and acknowledged.
    Success,
    /// Received in error, to be retransmitted.
    Error,
    /// Received in error on the last allowed attempt; mass goes to the
    /// link's buffer.
    Drop,
}

impl Outcome {
    fn code(self) -> char {
        match self {
            Outcome::Success => 'S',
            Outcome::Error => 'E',
            Outcome::Drop => 'D',
        }
    }

    fn from_code(s: &str) -> Option<Self> {
        match s {
            "S" => Some(Outcome::Success),
            "E" => Some(Outcome::Error),
            "D" => Some(Outcome::Drop),
            _ => None,
        }
    }
}

/// One packet's attempt within a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketRecord {
    /// Failed attempts before this one.
    pub age: u32,
    pub outcome: Outcome,
}

/// Everything that happened on one link during one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkSlot {
    /// MTMF: one record per pending packet, fresh packet first. STSF: a
    /// single record for the aggregate, aged by its oldest constituent.
    pub packets: Vec<PacketRecord>,
    /// Whether the buffered running-sum difference was released.
    pub release: bool,
}

/// Recorded channel outcomes of an ARQ run, replayable into the oracle.
///
/// Text form (nodes 1-based):
///
/// ```text
/// realization v1
/// scheme mtmf
/// n 2
/// link 1 2 2
/// link 2 1 1
/// slots 3
/// 0 1 2 0 E 0
/// ```
///
/// Record lines are `slot src dst age outcome release`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realization {
    pub scheme: FeedbackScheme,
    pub n: usize,
    pub links: Vec<Link>,
    /// Retransmission limit per link.
    pub link_tau: Vec<u32>,
    pub slots: Vec<Vec<LinkSlot>>,
}

impl Realization {
    pub fn new(scheme: FeedbackScheme, n: usize, links: Vec<Link>, link_tau: Vec<u32>) -> Self {
        Realization { scheme, n, links, link_tau, slots: Vec::new() }
    }

    pub fn push_slot(&mut self, slot: Vec<LinkSlot>) {
        self.slots.push(slot);
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn max_tau(&self) -> u32 {
        self.link_tau.iter().copied().max().unwrap_or(0)
    }

    /// Checks every slot against the protocol rules.
    pub fn validate(&self) -> Result<()> {
        if self.link_tau.len() != self.links.len() {
            return Err(Error::Realization {
                slot: 0,
                message: format!("{} limits for {} links", self.link_tau.len(), self.links.len()),
            });
        }
        for (k, slot) in self.slots.iter().enumerate() {
            self.validate_slot(k, slot)?;
        }
        Ok(())
    }

    pub(crate) fn validate_slot(&self, k: usize, slot: &[LinkSlot]) -> Result<()> {
        let fail = |message: String| Err(Error::Realization { slot: k, message });
        if slot.len() != self.links.len() {
            return fail(format!("{} link records, expected {}", slot.len(), self.links.len()));
        }
        for ((link, &tau), rec) in self.links.iter().zip(&self.link_tau).zip(slot) {
            match self.scheme {
                FeedbackScheme::Mtmf => {
                    if rec.packets.first().map(|p| p.age) != Some(0) {
                        return fail(format!("link {link}: missing fresh packet"));
                    }
                    if rec.packets.windows(2).any(|w| w[0].age >= w[1].age) {
                        return fail(format!("link {link}: packet ages not strictly increasing"));
                    }
                }
                FeedbackScheme::Stsf => {
                    if rec.packets.len() != 1 {
                        return fail(format!("link {link}: {} aggregate records", rec.packets.len()));
                    }
                }
            }
            for p in &rec.packets {
                if p.age > tau {
                    return fail(format!("link {link}: age {} exceeds limit {tau}", p.age));
                }
                match p.outcome {
                    Outcome::Drop if p.age != tau => {
                        return fail(format!("link {link}: drop at age {} below limit {tau}", p.age));
                    }
                    Outcome::Error if p.age == tau => {
                        return fail(format!("link {link}: retransmission scheduled past limit {tau}"));
                    }
                    _ => {}
                }
            }
            let any_success = rec.packets.iter().any(|p| p.outcome == Outcome::Success);
            if rec.release != any_success {
                return fail(format!("link {link}: release flag disagrees with acknowledgements"));
            }
        }
        Ok(())
    }

    /// Parses the text form and validates it.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut header = |key: &str| -> Result<(usize, String)> {
            let (no, line) = lines.next().ok_or_else(|| Error::parse(0, format!("missing `{key}` line")))?;
            let rest =
                line.strip_prefix(key).ok_or_else(|| Error::parse(no, format!("expected `{key}`, found `{line}`")))?;
            Ok((no, rest.trim().to_string()))
        };
        let (no, version) = header("realization")?;
        if version != "v1" {
            return Err(Error::parse(no, format!("unsupported version `{version}`")));
        }
        let (no, scheme) = header("scheme")?;
        let scheme = match scheme.as_str() {
            "mtmf" => FeedbackScheme::Mtmf,
            "stsf" => FeedbackScheme::Stsf,
            other => return Err(Error::parse(no, format!("unknown scheme `{other}`"))),
        };
        let (no, n) = header("n")?;
        let n: usize = n.parse().map_err(|_| Error::parse(no, format!("bad node count `{n}`")))?;

        let mut links = Vec::new();
        let mut link_tau = Vec::new();
        let slot_count;
        loop {
            let (no, line) = lines.next().ok_or_else(|| Error::parse(0, "missing `slots` line"))?;
            if let Some(rest) = line.strip_prefix("slots") {
                slot_count = rest.trim().parse::<usize>().map_err(|_| Error::parse(no, "bad slot count"))?;
                break;
            }
            let rest = line.strip_prefix("link").ok_or_else(|| Error::parse(no, format!("unexpected `{line}`")))?;
            let f = fields::<3>(no, rest)?;
            let link = Link { src: node(no, f[0], n)?, dst: node(no, f[1], n)? };
            links.push(link);
            link_tau.push(f[2].parse().map_err(|_| Error::parse(no, format!("bad limit `{}`", f[2])))?);
        }

        let empty = || LinkSlot { packets: Vec::new(), release: false };
        let mut slots: Vec<Vec<LinkSlot>> = (0..slot_count).map(|_| links.iter().map(|_| empty()).collect()).collect();
        for (no, line) in lines {
            let f = fields::<6>(no, line)?;
            let k: usize = f[0].parse().map_err(|_| Error::parse(no, format!("bad slot `{}`", f[0])))?;
            let link = Link { src: node(no, f[1], n)?, dst: node(no, f[2], n)? };
            let age = f[3].parse().map_err(|_| Error::parse(no, format!("bad age `{}`", f[3])))?;
            let outcome =
                Outcome::from_code(f[4]).ok_or_else(|| Error::parse(no, format!("bad outcome `{}`", f[4])))?;
            let release = match f[5] {
                "0" => false,
                "1" => true,
                other => return Err(Error::parse(no, format!("bad release flag `{other}`"))),
            };
            let idx = links
                .iter()
                .position(|&l| l == link)
                .ok_or_else(|| Error::parse(no, format!("unknown link {link}")))?;
            let rec = slots
                .get_mut(k)
                .ok_or_else(|| Error::parse(no, format!("slot {k} beyond declared count {slot_count}")))?
                .get_mut(idx)
                .expect("link index in range");
            if !rec.packets.is_empty() && rec.release != release {
                return Err(Error::parse(no, "inconsistent release flag within a link slot"));
            }
            rec.release = release;
            rec.packets.push(PacketRecord { age, outcome });
        }
        let realization = Realization { scheme, n, links, link_tau, slots };
        realization.validate()?;
        Ok(realization)
    }
}

fn fields<const N: usize>(no: usize, line: &str) -> Result<[&str; N]> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    parts.try_into().map_err(|p: Vec<&str>| Error::parse(no, format!("expected {N} fields, found {}", p.len())))
}

fn node(no: usize, s: &str, n: usize) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(v) if (1..=n).contains(&v) => Ok(v - 1),
        _ => Err(Error::parse(no, format!("node `{s}` out of range 1..={n}"))),
    }
}

impl fmt::Display for Realization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "realization v1")?;
        writeln!(f, "scheme {}", self.scheme.name())?;
        writeln!(f, "n {}", self.n)?;
        for (link, tau) in self.links.iter().zip(&self.link_tau) {
            writeln!(f, "link {} {} {tau}", link.src + 1, link.dst + 1)?;
        }
        writeln!(f, "slots {}", self.slots.len())?;
        for (k, slot) in self.slots.iter().enumerate() {
            for (link, rec) in self.links.iter().zip(slot) {
                for p in &rec.packets {
                    writeln!(
                        f,
                        "{k} {} {} {} {} {}",
                        link.src + 1,
                        link.dst + 1,
                        p.age,
                        p.outcome.code(),
                        u8::from(rec.release)
                    )?;
                }
            }
        }
        Ok(())
    }
}
