//! Dual-vector knowledge instrumentation.
//!
//! For every tracked `μ` the tracker keeps the set of nodes that know `μ`,
//! snapshotted at the start of each round, and logs each delivery whose
//! sender knew `μ` when it sampled its packet.

use std::io::{self, Write};

use rand::Rng;
use serde::Serialize;

use crate::coding::{CoefficientVector, NodeState, Packet};
use crate::comm::{DeliveryObserver, Transmission};
use crate::error::TrackerError;
use crate::field::{FieldSpec, FieldVector};

/// Largest dual count `TrackedDuals::All` will enumerate.
pub const MAX_ENUMERATED_DUALS: u64 = 1 << 12;

#[derive(Debug, Clone, PartialEq)]
pub enum TrackedDuals {
    None,
    /// Every nonzero vector of `F_q^k`; needs `q^k <= 4096`.
    All,
    /// One representative (leading coefficient 1) per line through the
    /// origin; the same size bound as `All`.
    Projective,
    /// `count` uniform nonzero vectors plus all weight-1 and weight-2
    /// vectors with leading coefficient 1.
    Sampled { count: usize },
    Explicit(Vec<CoefficientVector>),
}

impl TrackedDuals {
    /// Materializes the dual list. Knowledge is invariant under scaling `μ`,
    /// so low-weight vectors are listed with leading coefficient 1 only.
    pub fn resolve<R: Rng + ?Sized>(
        &self,
        field: &FieldSpec,
        k: usize,
        rng: &mut R,
    ) -> Result<Vec<CoefficientVector>, TrackerError> {
        match self {
            TrackedDuals::None => Ok(Vec::new()),
            TrackedDuals::All => {
                let q = field.order() as u64;
                match u32::try_from(k).ok().and_then(|k| q.checked_pow(k)) {
                    Some(t) if t <= MAX_ENUMERATED_DUALS => Ok(all_nonzero(field, k)),
                    _ => Err(TrackerError::TooManyDuals { q, k }),
                }
            }
            TrackedDuals::Projective => {
                let all = TrackedDuals::All.resolve(field, k, rng)?;
                Ok(all.into_iter().filter(|v| leading(v) == Some(1)).collect())
            }
            TrackedDuals::Sampled { count } => {
                let mut out = Vec::new();
                for i in 0..k {
                    out.push(FieldVector::unit(field, k, i));
                }
                for i in 0..k {
                    for j in (i + 1)..k {
                        for c in field.elements().skip(1) {
                            let mut v = FieldVector::unit(field, k, i);
                            v.set(j, c);
                            out.push(v);
                        }
                    }
                }
                for _ in 0..*count {
                    loop {
                        let v = FieldVector::random(field, k, rng);
                        if !v.is_zero() {
                            out.push(v);
                            break;
                        }
                    }
                }
                Ok(out)
            }
            TrackedDuals::Explicit(v) => Ok(v.clone()),
        }
    }
}

fn leading(v: &CoefficientVector) -> Option<u32> {
    (0..v.len()).map(|i| v.get(i).value()).find(|&c| c != 0)
}

/// Every nonzero vector of `F_q^k` in little-endian counting order.
pub fn all_nonzero(field: &FieldSpec, k: usize) -> Vec<CoefficientVector> {
    let q = field.order() as u32;
    let mut digits = vec![0u32; k];
    let mut out = Vec::new();
    loop {
        let mut i = 0;
        while i < k {
            digits[i] += 1;
            if digits[i] < q {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == k {
            return out;
        }
        out.push(FieldVector::from_values(field, &digits));
    }
}

/// One delivery whose sender knew the tracked dual at the start of the round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TransferEvent {
    pub round: u64,
    pub dual: usize,
    pub sender: usize,
    pub receiver: usize,
    pub sender_knew: bool,
    pub sender_full_rank: bool,
    pub receiver_knew_before: bool,
    pub receiver_knew_after: bool,
    /// Whether the packet's coefficient vector has nonzero dot with `μ`.
    pub packet_informative: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrackerOptions {
    pub record_events: bool,
    /// Keep the full knower set of every round, not just its size.
    pub record_sets: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeTrace {
    pub mu: CoefficientVector,
    /// Knower count per round, index 0 being the initial state.
    pub knower_counts: Vec<usize>,
    /// Present only with `record_sets`.
    pub per_round_knowers: Vec<Vec<bool>>,
    pub cover_round: Option<u64>,
    pub transfer_events: Vec<TransferEvent>,
}

/// Running tallies for transfer success, kept even when events are not stored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TransferCounts {
    pub qualifying: u64,
    pub successes: u64,
    /// Full-rank sender, receiver not knowing `μ` beforehand.
    pub full_rank_qualifying: u64,
    pub full_rank_successes: u64,
}

impl TransferCounts {
    fn add(&mut self, e: &TransferEvent) {
        self.qualifying += 1;
        self.successes += e.receiver_knew_after as u64;
        if e.sender_full_rank && !e.receiver_knew_before {
            self.full_rank_qualifying += 1;
            self.full_rank_successes += e.receiver_knew_after as u64;
        }
    }

    pub fn merge(&mut self, other: &TransferCounts) {
        self.qualifying += other.qualifying;
        self.successes += other.successes;
        self.full_rank_qualifying += other.full_rank_qualifying;
        self.full_rank_successes += other.full_rank_successes;
    }
}

#[derive(Debug, Clone)]
pub struct Tracker {
    duals: Vec<CoefficientVector>,
    options: TrackerOptions,
    start: Vec<Vec<bool>>,
    live: Vec<Vec<bool>>,
    start_full: Vec<bool>,
    counts: Vec<Vec<usize>>,
    sets: Vec<Vec<Vec<bool>>>,
    cover: Vec<Option<u64>>,
    events: Vec<Vec<TransferEvent>>,
    totals: TransferCounts,
    round: u64,
}

impl Tracker {
    pub fn new(duals: Vec<CoefficientVector>, options: TrackerOptions) -> Result<Self, TrackerError> {
        if let Some(i) = duals.iter().position(FieldVector::is_zero) {
            return Err(TrackerError::ZeroVectorTracked(i));
        }
        let d = duals.len();
        Ok(Tracker {
            duals,
            options,
            start: vec![Vec::new(); d],
            live: vec![Vec::new(); d],
            start_full: Vec::new(),
            counts: vec![Vec::new(); d],
            sets: vec![Vec::new(); d],
            cover: vec![None; d],
            events: vec![Vec::new(); d],
            totals: TransferCounts::default(),
            round: 0,
        })
    }

    pub fn duals(&self) -> &[CoefficientVector] {
        &self.duals
    }

    /// Knower sets as of the start of the current round.
    pub fn current_knowers(&self) -> &[Vec<bool>] {
        &self.start
    }

    pub fn cover_rounds(&self) -> &[Option<u64>] {
        &self.cover
    }

    /// Latest round at which some tracked dual became known to everyone.
    pub fn max_cover_round(&self) -> Option<u64> {
        self.cover.iter().try_fold(0, |m, c| c.map(|c| m.max(c)))
    }

    pub fn totals(&self) -> TransferCounts {
        self.totals
    }

    pub fn observe_initial(&mut self, states: &[NodeState]) {
        self.round = 0;
        for (d, mu) in self.duals.iter().enumerate() {
            self.live[d] = states.iter().map(|s| s.subspace().knows_unchecked(mu)).collect();
            self.counts[d].clear();
            self.sets[d].clear();
            self.events[d].clear();
            self.cover[d] = None;
        }
        self.totals = TransferCounts::default();
        self.snapshot(states);
    }

    /// Closes round `round`: snapshots knower sets for the next round.
    pub fn end_round(&mut self, round: u64, states: &[NodeState]) {
        self.round = round;
        self.snapshot(states);
    }

    fn snapshot(&mut self, states: &[NodeState]) {
        let round = self.round;
        for d in 0..self.duals.len() {
            debug_assert!(self.start[d].iter().zip(&self.live[d]).all(|(&a, &b)| !a || b), "knowledge lost");
            self.start[d].clone_from(&self.live[d]);
            let c = self.live[d].iter().filter(|&&b| b).count();
            self.counts[d].push(c);
            if self.options.record_sets {
                self.sets[d].push(self.live[d].clone());
            }
            if self.cover[d].is_none() && c == self.live[d].len() {
                self.cover[d] = Some(round);
            }
        }
        self.start_full = states.iter().map(NodeState::can_decode).collect();
    }

    /// Whether every knower set only grew between consecutive rounds.
    pub fn is_monotone(&self) -> bool {
        self.counts.iter().all(|c| c.windows(2).all(|w| w[0] <= w[1]))
            && self.sets.iter().all(|s| s.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(&a, &b)| !a || b)))
    }

    pub fn into_traces(self) -> Vec<KnowledgeTrace> {
        let Tracker { duals, counts, sets, cover, events, .. } = self;
        duals
            .into_iter()
            .zip(counts)
            .zip(sets)
            .zip(cover)
            .zip(events)
            .map(|((((mu, knower_counts), per_round_knowers), cover_round), transfer_events)| KnowledgeTrace {
                mu,
                knower_counts,
                per_round_knowers,
                cover_round,
                transfer_events,
            })
            .collect()
    }
}

impl DeliveryObserver for Tracker {
    fn on_delivery(&mut self, tx: &Transmission, packet: &Packet, receiver: &NodeState) {
        let field = receiver.field().clone();
        for (d, mu) in self.duals.iter().enumerate() {
            let before = self.live[d][tx.receiver];
            let after = before || receiver.subspace().knows_unchecked(mu);
            self.live[d][tx.receiver] = after;
            if !self.start[d][tx.sender] {
                continue;
            }
            let e = TransferEvent {
                round: tx.round,
                dual: d,
                sender: tx.sender,
                receiver: tx.receiver,
                sender_knew: true,
                sender_full_rank: self.start_full[tx.sender],
                receiver_knew_before: before,
                receiver_knew_after: after,
                packet_informative: !packet.mu.dot_unchecked(&field, mu).is_zero(),
            };
            self.totals.add(&e);
            if self.options.record_events {
                self.events[d].push(e);
            }
        }
    }
}

/// Success rate with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub events: u64,
    pub successes: u64,
    pub rate: f64,
    pub lower: f64,
    pub upper: f64,
    pub z: f64,
    /// Standard error of the rate.
    pub sigma: f64,
}

pub fn wilson(successes: u64, events: u64, z: f64) -> RateEstimate {
    let n = events as f64;
    let p = if events == 0 { 0.0 } else { successes as f64 / n };
    let (lower, upper) = if events == 0 {
        (0.0, 1.0)
    } else {
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        ((center - half).max(0.0), (center + half).min(1.0))
    };
    let sigma = if events == 0 { 0.0 } else { (p * (1.0 - p) / n).sqrt() };
    RateEstimate { events, successes, rate: p, lower, upper, z, sigma }
}

pub const MIN_TRANSFER_EVENTS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferRateReport {
    pub q: u64,
    pub threshold: f64,
    pub estimate: RateEstimate,
    /// The whole interval lies below `1 - 1/q`.
    pub violation: bool,
}

/// Transfer success rate over the given tallies, checked against `1 - 1/q`.
pub fn lemma1_frequency(counts: &TransferCounts, q: u64, z: f64) -> Result<TransferRateReport, TrackerError> {
    if counts.qualifying < MIN_TRANSFER_EVENTS {
        return Err(TrackerError::InsufficientEvents { needed: MIN_TRANSFER_EVENTS as usize, have: counts.qualifying as usize });
    }
    let estimate = wilson(counts.successes, counts.qualifying, z);
    let threshold = 1.0 - 1.0 / q as f64;
    Ok(TransferRateReport { q, threshold, estimate, violation: estimate.upper < threshold })
}

/// Rate for full-rank senders and uninformed receivers, where the success
/// probability is exactly `1 - 1/q`. `consistent` holds when the estimate
/// lies within `z` standard errors of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactRateReport {
    pub q: u64,
    pub expected: f64,
    pub estimate: RateEstimate,
    pub consistent: bool,
}

pub fn full_rank_rate(counts: &TransferCounts, q: u64, z: f64) -> Result<ExactRateReport, TrackerError> {
    if counts.full_rank_qualifying < MIN_TRANSFER_EVENTS {
        return Err(TrackerError::InsufficientEvents {
            needed: MIN_TRANSFER_EVENTS as usize,
            have: counts.full_rank_qualifying as usize,
        });
    }
    let expected = 1.0 - 1.0 / q as f64;
    let estimate = wilson(counts.full_rank_successes, counts.full_rank_qualifying, z);
    let sd = (expected * (1.0 - expected) / counts.full_rank_qualifying as f64).sqrt();
    Ok(ExactRateReport { q, expected, estimate, consistent: (estimate.rate - expected).abs() <= z * sd })
}

/// Tallies from recorded events.
pub fn count_events<'a>(events: impl IntoIterator<Item = &'a TransferEvent>) -> TransferCounts {
    let mut c = TransferCounts::default();
    for e in events {
        c.add(e);
    }
    c
}

pub fn write_trace_csv<W: Write>(out: &mut W, traces: &[KnowledgeTrace]) -> io::Result<()> {
    writeln!(out, "round,mu_id,knower_count")?;
    for (id, t) in traces.iter().enumerate() {
        for (round, c) in t.knower_counts.iter().enumerate() {
            writeln!(out, "{round},{id},{c}")?;
        }
    }
    Ok(())
}

pub fn write_events_csv<W: Write>(out: &mut W, traces: &[KnowledgeTrace]) -> io::Result<()> {
    writeln!(out, "round,sender,receiver,success")?;
    for t in traces {
        for e in &t.transfer_events {
            writeln!(out, "{},{},{},{}", e.round, e.sender, e.receiver, e.receiver_knew_after as u8)?;
        }
    }
    Ok(())
}
