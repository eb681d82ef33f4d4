//! Round engines for the synchronous PUSH/PULL/EXCHANGE/BROADCAST models
//! and the asynchronous single-transfer and BROADCAST models.
//!
//! A round is split into a schedule (who sends to whom, and which sampled
//! packet each delivery carries) and a delivery phase. All packets are
//! sampled from start-of-round states before anything is delivered.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{Adversary, AdversaryView, RngTranscript};
use crate::coding::{NodeState, Packet};
use crate::error::CommError;
use crate::network::{Topology, WeightedEdge};
use crate::tracker::Tracker;

/// The generator every trial uses. ChaCha is counter based, so a stream
/// position fully describes the randomness consumed so far.
pub type SimRng = ChaCha8Rng;

/// Identifier of the seeding scheme, written into output metadata.
pub const RNG_ALGORITHM: &str = "chacha8/splitmix64-v1";

/// Independent streams of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Protocol = 0,
    Adversary = 1,
    Init = 2,
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed recorded for trial `trial` of an experiment seeded with `seed`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ trial.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

/// Generator for one stream of a trial, keyed by the trial seed. Streams
/// use ChaCha's native stream counter, so they never overlap.
pub fn stream_rng(trial_seed: u64, stream: Stream) -> SimRng {
    let mut key = [0u8; 32];
    let mut x = trial_seed;
    for chunk in key.chunks_exact_mut(8) {
        x = splitmix64(x);
        chunk.copy_from_slice(&x.to_le_bytes());
    }
    let mut rng = SimRng::from_seed(key);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommModel {
    SyncPush,
    SyncPull,
    SyncExchange,
    SyncBroadcast,
    AsyncSingleTransfer,
    AsyncBroadcast,
}

impl CommModel {
    pub const ALL: [CommModel; 6] = [
        CommModel::SyncPush,
        CommModel::SyncPull,
        CommModel::SyncExchange,
        CommModel::SyncBroadcast,
        CommModel::AsyncSingleTransfer,
        CommModel::AsyncBroadcast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CommModel::SyncPush => "sync_push",
            CommModel::SyncPull => "sync_pull",
            CommModel::SyncExchange => "sync_exchange",
            CommModel::SyncBroadcast => "sync_broadcast",
            CommModel::AsyncSingleTransfer => "async_single_transfer",
            CommModel::AsyncBroadcast => "async_broadcast",
        }
    }

    pub fn is_async(self) -> bool {
        matches!(self, CommModel::AsyncSingleTransfer | CommModel::AsyncBroadcast)
    }

    pub fn needs_weights(self) -> bool {
        self == CommModel::AsyncSingleTransfer
    }
}

impl fmt::Display for CommModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CommModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CommModel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown communication model `{s}`"))
    }
}

/// How a node pulled by several others serves them within one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PullSampling {
    /// Each pull gets its own freshly sampled packet.
    #[default]
    Independent,
    /// One packet per sender per round, shared by all its pullers.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsyncBroadcastMode {
    /// Every node broadcasts independently with probability `1/n`.
    #[default]
    Bernoulli,
    /// Exactly one uniformly random node broadcasts per round.
    SingleNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EngineOptions {
    pub pull_sampling: PullSampling,
    pub async_broadcast: AsyncBroadcastMode,
}

/// Which packet each delivery of a round carries.
#[derive(Debug, Clone, Default)]
pub struct Schedule {
    /// Sender of each packet slot, in sampling order.
    pub slot_sender: Vec<usize>,
    /// `(slot, receiver)` in delivery order.
    pub deliveries: Vec<(usize, usize)>,
}

impl Schedule {
    fn slot(&mut self, sender: usize) -> usize {
        self.slot_sender.push(sender);
        self.slot_sender.len() - 1
    }
}

fn check_model(model: CommModel, g: &Topology) -> Result<(), CommError> {
    let mismatch = |reason: &str| CommError::ModelTopologyMismatch { model: model.to_string(), reason: reason.into() };
    match (model.needs_weights(), g.is_weighted()) {
        (true, false) => Err(mismatch("asynchronous single transfer needs edge probabilities")),
        (false, true) => Err(mismatch("weighted topologies are only meaningful for asynchronous single transfer")),
        _ => Ok(()),
    }
}

/// Draws who talks to whom in one round. Nodes without a suitable neighbor
/// stay idle.
pub fn schedule(model: CommModel, options: EngineOptions, g: &Topology, rng: &mut SimRng) -> Result<Schedule, CommError> {
    check_model(model, g)?;
    let n = g.n();
    let mut s = Schedule::default();
    let pick = |list: &[usize], rng: &mut SimRng| list[rng.gen_range(0..list.len())];
    match model {
        CommModel::SyncPush => {
            for v in 0..n {
                let out = g.out_neighbors(v);
                if !out.is_empty() {
                    let u = pick(out, rng);
                    let slot = s.slot(v);
                    s.deliveries.push((slot, u));
                }
            }
        }
        CommModel::SyncPull => {
            let mut shared: Vec<Option<usize>> = vec![None; n];
            for v in 0..n {
                let ins = g.in_neighbors(v);
                if ins.is_empty() {
                    continue;
                }
                let u = pick(ins, rng);
                let slot = match options.pull_sampling {
                    PullSampling::Independent => s.slot(u),
                    PullSampling::Shared => match shared[u] {
                        Some(slot) => slot,
                        None => {
                            let slot = s.slot(u);
                            shared[u] = Some(slot);
                            slot
                        }
                    },
                };
                s.deliveries.push((slot, v));
            }
        }
        CommModel::SyncExchange => {
            let mut own: Vec<Option<usize>> = vec![None; n];
            let mut slot_of = |s: &mut Schedule, v: usize| match own[v] {
                Some(slot) => slot,
                None => {
                    let slot = s.slot(v);
                    own[v] = Some(slot);
                    slot
                }
            };
            let mut picked: Vec<Option<usize>> = vec![None; n];
            for v in 0..n {
                let nbrs = g.neighbors(v);
                if nbrs.is_empty() {
                    continue;
                }
                let u = pick(nbrs, rng);
                picked[v] = Some(u);
                // a mutual pick is one connection; each side's packet arrives once
                if u < v && picked[u] == Some(v) {
                    continue;
                }
                let sv = slot_of(&mut s, v);
                let su = slot_of(&mut s, u);
                s.deliveries.push((sv, u));
                s.deliveries.push((su, v));
            }
        }
        CommModel::SyncBroadcast => {
            for v in 0..n {
                let out = g.out_neighbors(v);
                if !out.is_empty() {
                    let slot = s.slot(v);
                    s.deliveries.extend(out.iter().map(|&u| (slot, u)));
                }
            }
        }
        CommModel::AsyncSingleTransfer => {
            let sampler = g.edge_sampler().expect("checked weighted");
            let u: f64 = rng.gen();
            match sampler.pick(u) {
                None => {}
                Some(WeightedEdge::Directed(a, b)) => {
                    let slot = s.slot(a);
                    s.deliveries.push((slot, b));
                }
                Some(WeightedEdge::Undirected(a, b)) => {
                    let sa = s.slot(a);
                    let sb = s.slot(b);
                    s.deliveries.push((sa, b));
                    s.deliveries.push((sb, a));
                }
            }
        }
        CommModel::AsyncBroadcast => {
            let broadcast = |s: &mut Schedule, v: usize| {
                let out = g.out_neighbors(v);
                if !out.is_empty() {
                    let slot = s.slot(v);
                    s.deliveries.extend(out.iter().map(|&u| (slot, u)));
                }
            };
            match options.async_broadcast {
                AsyncBroadcastMode::Bernoulli => {
                    let p = 1.0 / n as f64;
                    for v in 0..n {
                        if rng.gen_bool(p) {
                            broadcast(&mut s, v);
                        }
                    }
                }
                AsyncBroadcastMode::SingleNode => {
                    if n > 0 {
                        let v = rng.gen_range(0..n);
                        broadcast(&mut s, v);
                    }
                }
            }
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Transmission {
    pub sender: usize,
    pub receiver: usize,
    /// Index into [`RoundOutcome::packets`].
    pub slot: usize,
    pub round: u64,
    pub innovative: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RoundOutcome {
    /// Sampled packet per slot; `None` when every receiver of the slot was
    /// already full rank and nobody asked to observe it.
    pub packets: Vec<Option<Packet>>,
    pub transmissions: Vec<Transmission>,
}

impl RoundOutcome {
    pub fn packet(&self, tx: &Transmission) -> Option<&Packet> {
        self.packets[tx.slot].as_ref()
    }
}

/// Called after each delivery with the receiver's updated state.
pub trait DeliveryObserver {
    fn on_delivery(&mut self, tx: &Transmission, packet: &Packet, receiver: &NodeState);
}

impl DeliveryObserver for () {
    fn on_delivery(&mut self, _: &Transmission, _: &Packet, _: &NodeState) {}
}

/// Runs one round: schedule, sample every needed packet from start-of-round
/// states, then deliver in schedule order.
pub fn step(
    model: CommModel,
    options: EngineOptions,
    g: &Topology,
    states: &mut [NodeState],
    round: u64,
    rng: &mut SimRng,
    observer: Option<&mut dyn DeliveryObserver>,
) -> Result<RoundOutcome, CommError> {
    if states.len() != g.n() {
        return Err(CommError::SizeMismatch { states: states.len(), n: g.n() });
    }
    let sched = schedule(model, options, g, rng)?;
    let observe_all = observer.is_some();
    let mut needed = vec![observe_all; sched.slot_sender.len()];
    if !observe_all {
        for &(slot, r) in &sched.deliveries {
            if !states[r].can_decode() || states[r].payload_mode() {
                needed[slot] = true;
            }
        }
    }
    let packets: Vec<Option<Packet>> = sched
        .slot_sender
        .iter()
        .zip(&needed)
        .map(|(&sender, &need)| need.then(|| states[sender].sample_packet(rng)))
        .collect();

    let mut observer = observer;
    let mut transmissions = Vec::with_capacity(sched.deliveries.len());
    for &(slot, receiver) in &sched.deliveries {
        let sender = sched.slot_sender[slot];
        let innovative = match &packets[slot] {
            Some(p) => states[receiver].receive(p, round)?,
            None => false,
        };
        let tx = Transmission { sender, receiver, slot, round, innovative };
        if let (Some(obs), Some(p)) = (observer.as_deref_mut(), &packets[slot]) {
            obs.on_delivery(&tx, p, &states[receiver]);
        }
        transmissions.push(tx);
    }
    Ok(RoundOutcome { packets, transmissions })
}

/// Result of one simulated trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    /// `None` when `max_rounds` passed without meeting the stop condition.
    pub stopping_round: Option<u64>,
    pub per_node_decode_round: Vec<Option<u64>>,
    pub innovative_count: Vec<u64>,
    pub rounds_executed: u64,
    pub seed: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl RunRecord {
    pub fn converged(&self) -> bool {
        self.stopping_round.is_some()
    }

    pub fn innovative_total(&self) -> u64 {
        self.innovative_count.iter().sum()
    }
}

/// Per-round trace hook for external recording.
pub trait RoundHook {
    fn after_round(&mut self, round: u64, topology: &Topology, outcome: &RoundOutcome, states: &[NodeState]);
}

impl RoundHook for () {
    fn after_round(&mut self, _: u64, _: &Topology, _: &RoundOutcome, _: &[NodeState]) {}
}

pub struct RunContext<'a> {
    pub model: CommModel,
    pub options: EngineOptions,
    pub adversary: &'a mut Adversary,
    pub tracker: Option<&'a mut Tracker>,
    pub hook: Option<&'a mut dyn RoundHook>,
    pub max_rounds: u64,
    pub seed: u64,
}

/// Default stop condition: every node can decode.
pub fn all_decoded(states: &[NodeState]) -> bool {
    states.iter().all(NodeState::can_decode)
}

/// Repeatedly asks the adversary for `G(t)` and runs rounds until `stop`
/// holds or `max_rounds` have passed.
pub fn run_until(
    ctx: RunContext<'_>,
    states: &mut [NodeState],
    mut stop: impl FnMut(&[NodeState]) -> bool,
    rng: &mut SimRng,
) -> Result<RunRecord, CommError> {
    if ctx.max_rounds == 0 {
        return Err(CommError::ZeroRounds);
    }
    let start = Instant::now();
    let RunContext { model, options, adversary, mut tracker, mut hook, max_rounds, seed } = ctx;
    let n = states.len();
    let mut innovative_count = vec![0u64; n];
    if let Some(t) = tracker.as_deref_mut() {
        t.observe_initial(states);
    }
    let mut stopping_round = stop(states).then_some(0);
    let mut round = 0;
    while stopping_round.is_none() && round < max_rounds {
        round += 1;
        let topology: Arc<Topology> = {
            let ranks: Vec<usize> = states.iter().map(NodeState::rank).collect();
            let knowledge = tracker.as_deref().map(|t| t.current_knowers()).unwrap_or(&[]);
            let view = AdversaryView {
                round,
                ranks: &ranks,
                knowledge,
                states: Some(states),
                transcript: RngTranscript::of(rng),
            };
            adversary.next_topology(&view)?
        };
        if topology.n() != n {
            return Err(CommError::SizeMismatch { states: n, n: topology.n() });
        }
        let outcome = step(
            model,
            options,
            &topology,
            states,
            round,
            rng,
            tracker.as_deref_mut().map(|t| t as &mut dyn DeliveryObserver),
        )?;
        for tx in &outcome.transmissions {
            if tx.innovative {
                innovative_count[tx.receiver] += 1;
            }
        }
        if let Some(t) = tracker.as_deref_mut() {
            t.end_round(round, states);
        }
        if let Some(h) = hook.as_deref_mut() {
            h.after_round(round, &topology, &outcome, states);
        }
        if stop(states) {
            stopping_round = Some(round);
        }
    }
    Ok(RunRecord {
        stopping_round,
        per_node_decode_round: states.iter().map(NodeState::decode_round).collect(),
        innovative_count,
        rounds_executed: round,
        seed,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::AdversaryKind;
    use crate::field::make_field;
    use crate::network::{induce_weighted, ratio, GraphFamily, InduceModel};

    fn rng(seed: u64) -> SimRng {
        SimRng::seed_from_u64(seed)
    }

    fn complete(n: usize) -> Topology {
        GraphFamily::Complete.generate(n, &mut rng(0)).unwrap()
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let s = trial_seed(7, 3);
        assert_eq!(s, trial_seed(7, 3));
        assert_ne!(s, trial_seed(7, 4));
        assert_ne!(s, trial_seed(8, 3));
        let a: u64 = stream_rng(s, Stream::Protocol).gen();
        let b: u64 = stream_rng(s, Stream::Adversary).gen();
        assert_ne!(a, b);
        assert_eq!(a, stream_rng(s, Stream::Protocol).gen::<u64>());
        // published reference value of SplitMix64 seeded with 0
        assert_eq!(splitmix64(0), 0xe220_a839_7b1d_cdaf);
    }

    #[test]
    fn model_names_round_trip() {
        for m in CommModel::ALL {
            assert_eq!(m.name().parse::<CommModel>().unwrap(), m);
        }
        assert!("gossip".parse::<CommModel>().is_err());
    }

    #[test]
    fn weighted_topology_required_only_for_single_transfer() {
        let g = complete(4);
        let w = induce_weighted(&g, InduceModel::Exchange).unwrap();
        let mut r = rng(1);
        assert!(schedule(CommModel::AsyncSingleTransfer, EngineOptions::default(), &g, &mut r).is_err());
        assert!(schedule(CommModel::SyncPush, EngineOptions::default(), &w, &mut r).is_err());
        assert!(schedule(CommModel::AsyncSingleTransfer, EngineOptions::default(), &w, &mut r).is_ok());
    }

    #[test]
    fn single_directed_edge_with_full_mass_always_fires() {
        let g = Topology::weighted(2, [(0, 1, ratio(1, 1))], []).unwrap();
        let mut r = rng(2);
        for _ in 0..100 {
            let s = schedule(CommModel::AsyncSingleTransfer, EngineOptions::default(), &g, &mut r).unwrap();
            assert_eq!(s.slot_sender, vec![0]);
            assert_eq!(s.deliveries, vec![(0, 1)]);
        }
    }

    #[test]
    fn idle_mass_leaves_rounds_empty() {
        let g = Topology::weighted(2, [(0, 1, ratio(1, 4))], []).unwrap();
        let mut r = rng(3);
        let fired = (0..4000)
            .filter(|_| {
                !schedule(CommModel::AsyncSingleTransfer, EngineOptions::default(), &g, &mut r)
                    .unwrap()
                    .deliveries
                    .is_empty()
            })
            .count();
        // Binomial(4000, 1/4): sd ~ 27
        assert!((fired as i64 - 1000).abs() < 110, "{fired}");
    }

    #[test]
    fn push_pull_exchange_shapes() {
        let g = complete(5);
        let mut r = rng(4);
        let opts = EngineOptions::default();
        let push = schedule(CommModel::SyncPush, opts, &g, &mut r).unwrap();
        assert_eq!(push.slot_sender, vec![0, 1, 2, 3, 4]);
        assert_eq!(push.deliveries.len(), 5);
        let pull = schedule(CommModel::SyncPull, opts, &g, &mut r).unwrap();
        assert_eq!(pull.deliveries.len(), 5);
        assert!(pull.deliveries.iter().all(|&(slot, v)| pull.slot_sender[slot] != v));
        let mut mutual_seen = false;
        for _ in 0..50 {
            let ex = schedule(CommModel::SyncExchange, opts, &g, &mut r).unwrap();
            let mut pairs = ex.deliveries.clone();
            pairs.sort_unstable();
            pairs.dedup();
            assert_eq!(pairs.len(), ex.deliveries.len(), "no packet reaches a node twice");
            assert!(ex.deliveries.len() <= 10 && ex.deliveries.len() % 2 == 0);
            mutual_seen |= ex.deliveries.len() < 10;
            assert!(ex.slot_sender.len() <= 5, "one packet per node per round");
        }
        assert!(mutual_seen);
        let shared = EngineOptions { pull_sampling: PullSampling::Shared, ..opts };
        let star = GraphFamily::Star.generate(6, &mut r).unwrap();
        let s = schedule(CommModel::SyncPull, shared, &star, &mut r).unwrap();
        // all five leaves pull the center through one slot
        let center_slots: Vec<_> = s.deliveries.iter().filter(|&&(slot, _)| s.slot_sender[slot] == 0).collect();
        assert_eq!(center_slots.len(), 5);
        assert!(center_slots.iter().all(|&&(slot, _)| slot == center_slots[0].0));
    }

    #[test]
    fn nodes_without_neighbors_idle() {
        let g = Topology::undirected(4, [(0, 1)]).unwrap();
        let mut r = rng(5);
        for m in [CommModel::SyncPush, CommModel::SyncPull, CommModel::SyncExchange, CommModel::SyncBroadcast] {
            let s = schedule(m, EngineOptions::default(), &g, &mut r).unwrap();
            assert!(s.deliveries.iter().all(|&(_, v)| v < 2));
        }
    }

    #[test]
    fn pull_on_star_picks_leaf_uniformly() {
        let star = GraphFamily::Star.generate(4, &mut rng(0)).unwrap();
        let mut r = rng(6);
        let rounds = 30_000;
        let mut hits = 0;
        for _ in 0..rounds {
            let s = schedule(CommModel::SyncPull, EngineOptions::default(), &star, &mut r).unwrap();
            hits += s.deliveries.iter().filter(|&&(slot, v)| v == 0 && s.slot_sender[slot] == 1).count();
        }
        let p = hits as f64 / rounds as f64;
        let sd = (1.0 / 3.0 * 2.0 / 3.0 / rounds as f64).sqrt();
        assert!((p - 1.0 / 3.0).abs() < 4.0 * sd, "{p}");
    }

    #[test]
    fn broadcast_receivers_share_one_packet() {
        let f = make_field(7).unwrap();
        let g = complete(6);
        let mut states: Vec<NodeState> =
            (0..6).map(|v| NodeState::new(&f, v, 4, if v == 0 { &[1, 2, 3] } else { &[] }, None).unwrap()).collect();
        let mut r = rng(7);
        struct Collect(Vec<(usize, Packet)>);
        impl DeliveryObserver for Collect {
            fn on_delivery(&mut self, tx: &Transmission, packet: &Packet, _: &NodeState) {
                self.0.push((tx.sender, packet.clone()));
            }
        }
        let mut c = Collect(Vec::new());
        step(CommModel::SyncBroadcast, EngineOptions::default(), &g, &mut states, 1, &mut r, Some(&mut c)).unwrap();
        for sender in 0..6 {
            let from: Vec<_> = c.0.iter().filter(|(s, _)| *s == sender).map(|(_, p)| p).collect();
            assert_eq!(from.len(), 5);
            assert!(from.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn broadcast_on_k2_transfers_with_one_minus_one_over_q() {
        let f = make_field(5).unwrap();
        let g = complete(2);
        let mut r = rng(8);
        let trials = 20_000;
        let mut informed = 0;
        for _ in 0..trials {
            let mut states = vec![NodeState::new(&f, 0, 1, &[1], None).unwrap(), NodeState::new(&f, 1, 1, &[], None).unwrap()];
            let out = step(CommModel::SyncBroadcast, EngineOptions::default(), &g, &mut states, 1, &mut r, None).unwrap();
            if out.transmissions.iter().any(|t| t.receiver == 1 && t.innovative) {
                informed += 1;
            }
        }
        let p = informed as f64 / trials as f64;
        let sd = (0.8 * 0.2 / trials as f64).sqrt();
        assert!((p - 0.8).abs() < 4.0 * sd, "{p}");
    }

    #[test]
    fn total_rank_never_decreases() {
        let f = make_field(2).unwrap();
        let g = complete(8);
        for model in [CommModel::SyncPush, CommModel::SyncPull, CommModel::SyncExchange, CommModel::SyncBroadcast] {
            let mut states: Vec<NodeState> =
                (0..8).map(|v| NodeState::new(&f, v, 8, &[v + 1], None).unwrap()).collect();
            let mut r = rng(9);
            let mut total: usize = states.iter().map(NodeState::rank).sum();
            for round in 1..40 {
                let before: Vec<usize> = states.iter().map(NodeState::rank).collect();
                let out = step(model, EngineOptions::default(), &g, &mut states, round, &mut r, None).unwrap();
                let after: usize = states.iter().map(NodeState::rank).sum();
                assert!(after >= total);
                total = after;
                for v in 0..8 {
                    let innovative = out.transmissions.iter().filter(|t| t.receiver == v && t.innovative).count();
                    assert_eq!(states[v].rank() - before[v], innovative);
                }
            }
        }
    }

    #[test]
    fn run_until_records_decode_rounds() {
        let f = make_field(2).unwrap();
        let g = Arc::new(complete(8));
        let mut adv = Adversary::new(AdversaryKind::Static(g), rng(0));
        let mut states: Vec<NodeState> =
            (0..8).map(|v| NodeState::new(&f, v, 1, if v == 0 { &[1] } else { &[] }, None).unwrap()).collect();
        let mut r = rng(10);
        let ctx = RunContext {
            model: CommModel::SyncBroadcast,
            options: EngineOptions::default(),
            adversary: &mut adv,
            tracker: None,
            hook: None,
            max_rounds: 1000,
            seed: 10,
        };
        let rec = run_until(ctx, &mut states, all_decoded, &mut r).unwrap();
        let t = rec.stopping_round.unwrap();
        assert!(t >= 1);
        assert_eq!(rec.per_node_decode_round.iter().map(|d| d.unwrap()).max(), Some(t));
        assert_eq!(rec.per_node_decode_round[0], Some(0));
        assert_eq!(rec.innovative_total(), 7);
    }

    #[test]
    fn run_until_reports_non_convergence() {
        let f = make_field(2).unwrap();
        let g = Arc::new(Topology::empty(3));
        let mut adv = Adversary::new(AdversaryKind::Static(g), rng(0));
        let mut states: Vec<NodeState> =
            (0..3).map(|v| NodeState::new(&f, v, 1, if v == 0 { &[1] } else { &[] }, None).unwrap()).collect();
        let ctx = RunContext {
            model: CommModel::SyncPush,
            options: EngineOptions::default(),
            adversary: &mut adv,
            tracker: None,
            hook: None,
            max_rounds: 5,
            seed: 0,
        };
        let rec = run_until(ctx, &mut states, all_decoded, &mut rng(0)).unwrap();
        assert_eq!(rec.stopping_round, None);
        assert_eq!(rec.rounds_executed, 5);
    }
}
