use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};

use rlnc_gossip::adversary::{Adversary, AdversaryKind, AdversaryView, Contract, RngTranscript, SplitOn};
use rlnc_gossip::analysis::negbin_tail_exact;
use rlnc_gossip::coding::{NodeState, Subspace};
use rlnc_gossip::comm::{all_decoded, run_until, step, CommModel, EngineOptions, RunContext, SimRng};
use rlnc_gossip::field::{make_field, FieldSpec, FieldVector};
use rlnc_gossip::flooding::{flood_round, FloodOptions, FloodState};
use rlnc_gossip::harness::{nearest_rank, run_experiment, write_raw_csv, ScenarioConfig};
use rlnc_gossip::network::{
    induce_weighted, min_cut_gamma_brute_force, min_cut_gamma_max_flow, GraphFamily, InduceModel, Topology,
    WeightedEdge,
};
use rlnc_gossip::tracker::{Tracker, TrackerOptions, TrackedDuals};

const ORDERS: [u64; 12] = [2, 3, 4, 5, 7, 8, 9, 16, 25, 27, 256, 65521];

fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

fn random_vec(f: &FieldSpec, k: usize, r: &mut SimRng) -> FieldVector {
    FieldVector::random(f, k, r)
}

/// Every vector of the span, by enumerating coefficient tuples.
fn span(f: &FieldSpec, rows: &[&FieldVector], k: usize) -> Vec<FieldVector> {
    let mut out = vec![FieldVector::zeros(f, k)];
    for row in rows {
        let mut next = Vec::new();
        for v in &out {
            for c in f.elements() {
                let mut w = v.clone();
                w.axpy(f, c, row);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn field_axioms(qi in 0usize..ORDERS.len(), seed in any::<u64>()) {
        let f = make_field(ORDERS[qi]).unwrap();
        let mut r = rng(seed);
        for _ in 0..50 {
            let (a, b, c) = (f.random(&mut r), f.random(&mut r), f.random(&mut r));
            prop_assert_eq!(f.add(a, b), f.add(b, a));
            prop_assert_eq!(f.mul(a, b), f.mul(b, a));
            prop_assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
            prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
            prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
            prop_assert_eq!(f.add(a, f.zero()), a);
            prop_assert_eq!(f.mul(a, f.one()), a);
            prop_assert_eq!(f.add(a, f.neg(a)), f.zero());
            prop_assert_eq!(f.sub(f.add(a, b), b), a);
            if !a.is_zero() {
                prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), f.one());
                prop_assert_eq!(f.mul(f.div(b, a).unwrap(), a), b);
            } else {
                prop_assert!(f.inv(a).is_err());
            }
        }
    }

    #[test]
    fn dot_is_bilinear_and_symmetric(qi in 0usize..ORDERS.len(), k in 1usize..40, seed in any::<u64>()) {
        let f = make_field(ORDERS[qi]).unwrap();
        let mut r = rng(seed);
        let (u, v, w) = (random_vec(&f, k, &mut r), random_vec(&f, k, &mut r), random_vec(&f, k, &mut r));
        let c = f.random(&mut r);
        prop_assert_eq!(u.dot(&f, &v).unwrap(), v.dot(&f, &u).unwrap());
        let mut cu_w = w.clone();
        cu_w.axpy(&f, c, &u);
        // (w + c·u)·v = w·v + c (u·v)
        let lhs = cu_w.dot(&f, &v).unwrap();
        let rhs = f.add(w.dot(&f, &v).unwrap(), f.mul(c, u.dot(&f, &v).unwrap()));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn gf2_add_is_xor(k in 1usize..300, seed in any::<u64>()) {
        let f = make_field(2).unwrap();
        let mut r = rng(seed);
        let (u, v) = (random_vec(&f, k, &mut r), random_vec(&f, k, &mut r));
        let mut s = u.clone();
        s.add_assign(&f, &v);
        let xor: Vec<u64> = u.words().unwrap().iter().zip(v.words().unwrap()).map(|(a, b)| a ^ b).collect();
        prop_assert_eq!(s.words().unwrap(), &xor[..]);
        for i in 0..k {
            prop_assert_eq!(s.get(i).value(), u.get(i).value() ^ v.get(i).value());
        }
    }

    #[test]
    fn knows_matches_span_enumeration(q in prop::sample::select(vec![2u64, 3, 4]), k in 1usize..7, rows in 0usize..5, seed in any::<u64>()) {
        let f = make_field(q).unwrap();
        let mut r = rng(seed);
        let mut y = Subspace::new(&f, k);
        for _ in 0..rows {
            y.insert(&random_vec(&f, k, &mut r)).unwrap();
        }
        let all = span(&f, &y.basis(), k);
        for _ in 0..20 {
            let mu = random_vec(&f, k, &mut r);
            let brute = all.iter().any(|v| !v.dot(&f, &mu).unwrap().is_zero());
            prop_assert_eq!(y.knows(&mu).unwrap(), brute);
        }
    }

    #[test]
    fn knows_matches_span_enumeration_gf2_k12(rows in 0usize..9, seed in any::<u64>()) {
        let f = make_field(2).unwrap();
        let k = 12;
        let mut r = rng(seed);
        let mut y = Subspace::new(&f, k);
        for _ in 0..rows {
            y.insert(&random_vec(&f, k, &mut r)).unwrap();
        }
        let all = span(&f, &y.basis(), k);
        for _ in 0..50 {
            let mu = random_vec(&f, k, &mut r);
            let brute = all.iter().any(|v| !v.dot(&f, &mu).unwrap().is_zero());
            prop_assert_eq!(y.knows(&mu).unwrap(), brute);
        }
    }

    #[test]
    fn rank_and_knowledge_never_decrease(q in prop::sample::select(vec![2u64, 3, 16]), k in 1usize..12, seed in any::<u64>()) {
        let f = make_field(q).unwrap();
        let mut r = rng(seed);
        let mut y = Subspace::new(&f, k);
        let duals: Vec<FieldVector> = (0..10).map(|_| random_vec(&f, k, &mut r)).collect();
        let mut known = vec![false; duals.len()];
        let mut rank = 0;
        for _ in 0..3 * k {
            let before = y.rank();
            let innovative = y.insert(&random_vec(&f, k, &mut r)).unwrap();
            prop_assert!(y.rank() >= rank && y.rank() <= before + 1);
            prop_assert_eq!(innovative, y.rank() == before + 1);
            rank = y.rank();
            for (d, mu) in duals.iter().enumerate() {
                let now = y.knows(mu).unwrap();
                prop_assert!(!known[d] || now);
                known[d] = now;
            }
            prop_assert!(y.check_invariants());
        }
    }

    #[test]
    fn payload_rows_match_truth(q in prop::sample::select(vec![2u64, 5, 8]), k in 1usize..6, l in 1usize..6, seed in any::<u64>()) {
        let f = make_field(q).unwrap();
        let mut r = rng(seed);
        let messages: Vec<FieldVector> = (0..k).map(|_| random_vec(&f, l, &mut r)).collect();
        let n = 5;
        let g = Arc::new(GraphFamily::Ring.generate(n, &mut r).unwrap());
        let all_messages: Vec<usize> = (1..=k).collect();
        let mut states: Vec<NodeState> =
            (0..n).map(|v| NodeState::new(&f, v, k, if v == 0 { &all_messages[..] } else { &[] }, Some(&messages)).unwrap()).collect();
        let mut adv = Adversary::new(AdversaryKind::Static(g), rng(1));
        run_until(
            RunContext { model: CommModel::SyncExchange, options: EngineOptions::default(), adversary: &mut adv, tracker: None, hook: None, max_rounds: 6, seed },
            &mut states,
            |_| false,
            &mut r,
        ).unwrap();
        for s in &states {
            let payloads = s.payload_basis().unwrap();
            for (row, payload) in s.subspace().rows().iter().zip(payloads) {
                let mut expect = FieldVector::zeros(&f, l);
                for (j, m) in messages.iter().enumerate() {
                    expect.axpy(&f, row.get(j), m);
                }
                prop_assert_eq!(payload, &expect);
            }
            if s.can_decode() {
                prop_assert_eq!(s.decode().unwrap(), messages.clone());
            }
        }
    }
}

fn random_weighted_digraph(n: usize, r: &mut SimRng) -> Topology {
    use num_rational::BigRational;
    let mut arcs = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && r.gen_bool(0.4) {
                arcs.push((a, b, BigRational::new(r.gen_range(1..50).into(), (50 * n * n).into())));
            }
        }
    }
    Topology::weighted(n, arcs, std::iter::empty()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, ..ProptestConfig::default() })]

    #[test]
    fn induced_weights_sum_to_one(n in 2usize..14, p in 0.2f64..1.0, model in prop::sample::select(vec![InduceModel::Push, InduceModel::Pull, InduceModel::Exchange]), seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = GraphFamily::RandomGnp { p }.generate(n, &mut r).unwrap();
        prop_assume!((0..n).all(|v| !g.neighbors(v).is_empty()));
        let w = induce_weighted(&g, model).unwrap();
        prop_assert_eq!(w.total_weight().unwrap(), num_rational::BigRational::from_integer(1.into()));
    }

    #[test]
    fn gamma_brute_force_matches_max_flow(n in 2usize..=12, seed in any::<u64>()) {
        let g = random_weighted_digraph(n, &mut rng(seed));
        let a = min_cut_gamma_brute_force(&g).unwrap();
        let b = min_cut_gamma_max_flow(&g).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-9, "{} vs {}", a.value, b.value);
    }

    #[test]
    fn push_on_complete_graph_has_gamma_one_over_n(n in 2usize..=12) {
        let g = GraphFamily::Complete.generate(n, &mut rng(0)).unwrap();
        let w = induce_weighted(&g, InduceModel::Push).unwrap();
        let gamma = min_cut_gamma_brute_force(&w).unwrap();
        prop_assert_eq!(gamma.exact.unwrap(), num_rational::BigRational::new(1.into(), (n as i64).into()));
    }

    #[test]
    fn rank_conservation_per_round(model in prop::sample::select(CommModel::ALL.to_vec()), n in 2usize..10, k in 1usize..8, seed in any::<u64>()) {
        let f = make_field(2).unwrap();
        let mut r = rng(seed);
        let base = GraphFamily::RandomGnp { p: 0.5 }.generate(n, &mut r).unwrap();
        let g = if model.needs_weights() {
            prop_assume!((0..n).all(|v| !base.neighbors(v).is_empty()));
            induce_weighted(&base, InduceModel::Exchange).unwrap()
        } else {
            base
        };
        let all_messages: Vec<usize> = (1..=k).collect();
        let mut states: Vec<NodeState> =
            (0..n).map(|v| NodeState::new(&f, v, k, if v == 0 { &all_messages[..] } else { &[] }, None).unwrap()).collect();
        let mut total: usize = states.iter().map(NodeState::rank).sum();
        for round in 1..=20 {
            let before: Vec<usize> = states.iter().map(NodeState::rank).collect();
            let out = step(model, EngineOptions::default(), &g, &mut states, round, &mut r, None).unwrap();
            let now: usize = states.iter().map(NodeState::rank).sum();
            prop_assert!(now >= total);
            let innovative = out.transmissions.iter().filter(|t| t.innovative).count();
            prop_assert_eq!(now - total, innovative);
            for v in 0..n {
                let received = out.transmissions.iter().filter(|t| t.receiver == v).count();
                prop_assert!(states[v].rank() <= before[v] + received);
            }
            total = now;
        }
    }

    #[test]
    fn broadcast_receivers_share_one_packet(n in 2usize..12, seed in any::<u64>()) {
        let f = make_field(2).unwrap();
        let k = 6;
        let mut r = rng(seed);
        let g = GraphFamily::RandomGnp { p: 0.5 }.generate(n, &mut r).unwrap();
        let mut states: Vec<NodeState> =
            (0..n).map(|v| NodeState::new(&f, v, k, &[1 + v % k], None).unwrap()).collect();
        for round in 1..=5 {
            let out = step(CommModel::SyncBroadcast, EngineOptions::default(), &g, &mut states, round, &mut r, Some(&mut ())).unwrap();
            for v in 0..n {
                let slots: Vec<usize> = out.transmissions.iter().filter(|t| t.sender == v).map(|t| t.slot).collect();
                prop_assert!(slots.windows(2).all(|w| w[0] == w[1]));
                prop_assert_eq!(slots.len(), g.out_neighbors(v).len());
            }
        }
    }

    #[test]
    fn async_cut_carries_at_most_one_packet_per_firing(n in 3usize..10, mask in 1u32..255, seed in any::<u64>()) {
        let f = make_field(2).unwrap();
        let k = n;
        let mut r = rng(seed);
        let side: Vec<bool> = (0..n).map(|v| mask >> (v % 8) & 1 == 1).collect();
        prop_assume!(side.iter().any(|&b| b) && side.iter().any(|&b| !b));
        let base = GraphFamily::Complete.generate(n, &mut r).unwrap();
        let g = induce_weighted(&base, InduceModel::Exchange).unwrap();
        let mut states: Vec<NodeState> = (0..n).map(|v| NodeState::new(&f, v, k, &[v + 1], None).unwrap()).collect();
        let (mut crossings, mut firings) = (0u64, 0u64);
        for round in 1..=200 {
            let out = step(CommModel::AsyncSingleTransfer, EngineOptions::default(), &g, &mut states, round, &mut r, Some(&mut ())).unwrap();
            let across: Vec<_> = out.transmissions.iter().filter(|t| side[t.sender] != side[t.receiver]).collect();
            firings += !across.is_empty() as u64;
            crossings += across.iter().filter(|t| t.innovative).count() as u64;
            // exchange carries at most one packet each way over the active edge
            prop_assert!(out.transmissions.len() <= 2);
        }
        prop_assert!(crossings <= 2 * firings);
        let one_way = {
            let mut c = 0u64;
            let mut st: Vec<NodeState> = (0..n).map(|v| NodeState::new(&f, v, k, &[v + 1], None).unwrap()).collect();
            let g = induce_weighted(&base, InduceModel::Push).unwrap();
            let mut fired = 0u64;
            for round in 1..=200 {
                let out = step(CommModel::AsyncSingleTransfer, EngineOptions::default(), &g, &mut st, round, &mut r, Some(&mut ())).unwrap();
                let into: Vec<_> = out.transmissions.iter().filter(|t| !side[t.sender] && side[t.receiver]).collect();
                fired += !into.is_empty() as u64;
                c += into.iter().filter(|t| t.innovative).count() as u64;
            }
            (c, fired)
        };
        prop_assert!(one_way.0 <= one_way.1);
    }

    #[test]
    fn adversary_output_ignores_future_protocol_draws(n in 4usize..12, seed in any::<u64>(), fork in any::<u64>()) {
        let f = make_field(2).unwrap();
        let k = 3;
        let mu = FieldVector::unit(&f, k, 0);
        let mut r = rng(seed);
        let mut states: Vec<NodeState> =
            (0..n).map(|v| NodeState::new(&f, v, k, if v == 0 { &[1, 2, 3][..] } else { &[] }, None).unwrap()).collect();
        let make = || [
            Adversary::new(AdversaryKind::TwoCliqueKnowledgeSplit(SplitOn::Dual(mu.clone())), rng(seed ^ 1)),
            Adversary::new(AdversaryKind::RandomGnp { p: 0.5 }, rng(seed ^ 2)),
        ];
        let (mut a, mut b) = (make(), make());
        for round in 1..=6u64 {
            let ranks: Vec<usize> = states.iter().map(NodeState::rank).collect();
            let view = AdversaryView { round, ranks: &ranks, knowledge: &[], states: Some(&states), transcript: RngTranscript::of(&r) };
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let gx = x.next_topology(&view).unwrap();
                // the second copy decides after this round's protocol randomness is replaced
                let _ = rng(fork ^ round).gen::<u64>();
                let gy = y.next_topology(&view).unwrap();
                prop_assert_eq!(&*gx, &*gy);
            }
            let g = a[0].next_topology(&view).unwrap_or_else(|_| unreachable!());
            let _ = b[0].next_topology(&view);
            step(CommModel::SyncBroadcast, EngineOptions::default(), &g, &mut states, round, &mut r, None).unwrap();
        }
    }

    #[test]
    fn connected_contract_is_enforced(n in 2usize..10, p in 0.05f64..0.9, seed in any::<u64>()) {
        let mut adv = Adversary::new(AdversaryKind::RandomGnp { p }, rng(seed)).with_contract(Contract::Connected);
        let ranks = vec![0; n];
        for round in 1..=10 {
            let view = AdversaryView { round, ranks: &ranks, knowledge: &[], states: None, transcript: RngTranscript::of(&rng(0)) };
            match adv.next_topology(&view) {
                Ok(g) => prop_assert!(g.is_strongly_connected()),
                Err(e) => prop_assert!(e.to_string().contains("contract"), "{e}"),
            }
        }
    }

    #[test]
    fn flooding_is_monotone_in_forward_probability(model in prop::sample::select(vec![CommModel::SyncPush, CommModel::SyncPull, CommModel::SyncExchange, CommModel::SyncBroadcast]), n in 2usize..16, p_lo in 0.0f64..1.0, dp in 0.0f64..1.0, seed in any::<u64>()) {
        let p_hi = p_lo + (1.0 - p_lo) * dp;
        let g = Arc::new(GraphFamily::RandomGnp { p: 0.4 }.generate(n, &mut rng(seed)).unwrap());
        let run = |p: f64| {
            let opts = FloodOptions { forward_prob: p, ..FloodOptions::reliable() };
            let mut adv = Adversary::new(AdversaryKind::Static(g.clone()), rng(0));
            let mut st = FloodState::new(n, &[0]).unwrap();
            let mut r = rng(seed ^ 7);
            let mut sets = Vec::new();
            for _ in 0..30 {
                flood_round(model, &opts, &mut adv, &mut st, &mut r).unwrap();
                sets.push(st.informed.clone());
            }
            sets
        };
        let (lo, hi) = (run(p_lo), run(p_hi));
        for (a, b) in lo.iter().zip(&hi) {
            prop_assert!(a.iter().zip(b).all(|(&x, &y)| !x || y));
        }
    }

    #[test]
    fn stopping_round_is_latest_dual_cover(model in prop::sample::select(vec![CommModel::SyncPush, CommModel::SyncPull, CommModel::SyncExchange, CommModel::SyncBroadcast]), n in 2usize..8, k in 1usize..7, seed in any::<u64>()) {
        let f = make_field(2).unwrap();
        let mut r = rng(seed);
        let g = Arc::new(GraphFamily::Complete.generate(n, &mut r).unwrap());
        let all_messages: Vec<usize> = (1..=k).collect();
        let mut states: Vec<NodeState> =
            (0..n).map(|v| NodeState::new(&f, v, k, if v == 0 { &all_messages[..] } else { &[] }, None).unwrap()).collect();
        let duals = TrackedDuals::All.resolve(&f, k, &mut r).unwrap();
        let mut tracker = Tracker::new(duals, TrackerOptions { record_events: false, record_sets: true }).unwrap();
        let mut adv = Adversary::new(AdversaryKind::Static(g), rng(1));
        let rec = run_until(
            RunContext { model, options: EngineOptions::default(), adversary: &mut adv, tracker: Some(&mut tracker), hook: None, max_rounds: 10_000, seed },
            &mut states,
            all_decoded,
            &mut r,
        ).unwrap();
        prop_assert!(tracker.is_monotone());
        prop_assert_eq!(rec.stopping_round, tracker.max_cover_round());
        prop_assert_eq!(rec.stopping_round, rec.per_node_decode_round.iter().copied().max().flatten());
    }

    #[test]
    fn negbin_tail_grows_with_p_and_slack(t in 1u64..60, frac in 0.0f64..1.0, p in 0.01f64..0.98, dp in 0.001f64..0.02) {
        let big_t = ((t as f64) * frac) as u64;
        let a = negbin_tail_exact(t, big_t, p).unwrap().value;
        let b = negbin_tail_exact(t, big_t, p + dp).unwrap().value;
        prop_assert!(b >= a * (1.0 - 1e-12));
        if big_t + 1 <= t {
            let c = negbin_tail_exact(t, big_t + 1, p).unwrap().value;
            prop_assert!(c >= a * (1.0 - 1e-12));
        }
    }

    #[test]
    fn nearest_rank_matches_reference(mut xs in prop::collection::vec(0u64..1000, 1..200), p in 0.0f64..=1.0) {
        xs.sort_unstable();
        // reference: smallest x with at least p·N values ≤ x
        let need = (p * xs.len() as f64).ceil().max(1.0) as usize;
        let reference = xs.iter().copied().find(|&x| xs.iter().filter(|&&y| y <= x).count() >= need).unwrap();
        prop_assert_eq!(nearest_rank(&xs, p), Some(reference));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn same_config_and_seed_give_identical_records(seed in 0u64..1_000_000, model in prop::sample::select(vec!["sync_push", "sync_exchange", "async_single_transfer", "async_broadcast"])) {
        let adversary = if model.starts_with("async") { "static" } else { "random_gnp" };
        let text = format!("n = 8\nk = 4\ncomm_model = \"{model}\"\ngraph = \"complete\"\nadversary = \"{adversary}\"\nadversary_p = 0.5\ntrials = 12\nseed = {seed}\nmax_rounds = 5000\n");
        let csv = |threads: usize| {
            let cfg = ScenarioConfig::from_text(&text, &[format!("threads={threads}")]).unwrap();
            let res = run_experiment(cfg).unwrap();
            let mut buf = Vec::new();
            write_raw_csv(&mut buf, &[&res]).unwrap();
            (buf, res.records.iter().map(|r| (r.per_node_decode_round.clone(), r.innovative_count.clone())).collect::<Vec<_>>())
        };
        prop_assert_eq!(csv(1), csv(2));
    }
}

#[test]
fn weighted_edge_sampler_covers_idle_mass() {
    let g = Topology::undirected(4, [(0, 1), (2, 3)]).unwrap();
    let w = induce_weighted(&g, InduceModel::Exchange).unwrap();
    let s = w.edge_sampler().unwrap();
    assert!((s.total() - 1.0).abs() < 1e-12);
    assert!(matches!(s.pick(0.0), Some(WeightedEdge::Undirected(0, 1))));
}
