//! Statistical validation suites with machine-readable reports.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use super::{HarnessError, Prepared, ScenarioConfig};
use crate::analysis::{tail_bound_check, weighted_bernoulli_bound_check};
use crate::comm::{splitmix64, stream_rng, trial_seed, SimRng, Stream};
use crate::field::{make_field, FieldVector};
use crate::flooding::faulty_flood;
use crate::tracker::{full_rank_rate, lemma1_frequency, Tracker, TrackerOptions, TrackedDuals, TransferCounts};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    TransferRate,
    FloodDominance,
    WeightedCoin,
    NegbinTail,
    DecodeEquivalence,
}

impl Suite {
    pub const ALL: [Suite; 5] =
        [Suite::TransferRate, Suite::FloodDominance, Suite::WeightedCoin, Suite::NegbinTail, Suite::DecodeEquivalence];

    pub fn name(self) -> &'static str {
        match self {
            Suite::TransferRate => "lemma1",
            Suite::FloodDominance => "theorem1_dominance",
            Suite::WeightedCoin => "lemma9",
            Suite::NegbinTail => "lemma7",
            Suite::DecodeEquivalence => "decode_equivalence",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Suite {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let names: Vec<_> = Suite::ALL.iter().map(|x| x.name()).collect();
            format!("unknown suite `{s}`; expected one of {}", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub estimate: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: Suite, seed: u64, checks: Vec<Check>) -> Self {
        SuiteReport { suite, seed, pass: checks.iter().all(|c| c.pass), checks }
    }
}

/// Sizes for each suite. `Default` gives the full-strength settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteSizes {
    pub transfer_events: u64,
    pub full_rank_events: u64,
    pub dominance_trials: u64,
    pub coin_vectors: usize,
    pub coin_samples: u64,
    pub decode_runs: u64,
    pub decode_k: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        SuiteSizes {
            transfer_events: 100_000,
            full_rank_events: 10_000,
            dominance_trials: 10_000,
            coin_vectors: 1000,
            coin_samples: 4000,
            decode_runs: 100,
            decode_k: 8,
        }
    }
}

pub fn validate(suite: Suite, seed: u64) -> Result<SuiteReport, HarnessError> {
    validate_with(suite, seed, &SuiteSizes::default())
}

pub fn validate_with(suite: Suite, seed: u64, sizes: &SuiteSizes) -> Result<SuiteReport, HarnessError> {
    let checks = match suite {
        Suite::TransferRate => transfer_suite(seed, sizes)?,
        Suite::FloodDominance => dominance_suite(seed, sizes)?,
        Suite::WeightedCoin => weighted_coin_suite(seed, sizes),
        Suite::NegbinTail => tail_suite(),
        Suite::DecodeEquivalence => decode_suite(seed, sizes)?,
    };
    Ok(SuiteReport::new(suite, seed, checks))
}

fn scenario(text: &str) -> Result<Prepared, HarnessError> {
    Ok(Prepared::new(ScenarioConfig::from_text(text, &[])?)?)
}

const BATCH: u64 = 64;
const MAX_BATCHES: u64 = 10_000;

/// Transfer tallies on K4 SyncExchange, k = 4, over every projective dual,
/// gathered in fixed batches of trials until both event quotas are met.
pub fn transfer_counts(q: u64, seed: u64, events: u64, full_rank_events: u64) -> Result<TransferCounts, HarnessError> {
    let p = scenario(&format!(
        "n = 4\nk = 4\nq = {q}\ncomm_model = \"sync_exchange\"\ntracked = \"projective\"\nseed = {seed}\nmax_rounds = 1000\n"
    ))?;
    let mut total = TransferCounts::default();
    for batch in 0..MAX_BATCHES {
        if total.qualifying >= events && total.full_rank_qualifying >= full_rank_events {
            break;
        }
        let counts = (batch * BATCH..(batch + 1) * BATCH)
            .into_par_iter()
            .map(|trial| {
                let mut tracker = p.tracked_tracker(trial_seed(seed, trial))?.expect("tracked");
                p.run_trial(trial, Some(&mut tracker))?;
                Ok(tracker.totals())
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        for c in &counts {
            total.merge(c);
        }
    }
    Ok(total)
}

fn transfer_suite(seed: u64, sizes: &SuiteSizes) -> Result<Vec<Check>, HarnessError> {
    let mut checks = Vec::new();
    for q in [2u64, 3, 4] {
        let c = transfer_counts(q, splitmix64(seed ^ q) >> 1, sizes.transfer_events, sizes.full_rank_events)?;
        match lemma1_frequency(&c, q, 3.0) {
            Ok(r) => {
                let lower = r.threshold - 3.0 * r.estimate.sigma;
                checks.push(Check {
                    name: format!("transfer_rate_q{q}"),
                    pass: c.qualifying >= sizes.transfer_events && r.estimate.rate >= lower,
                    estimate: r.estimate.rate,
                    lower: Some(lower),
                    upper: None,
                    detail: format!("{} of {} qualifying transfers", c.successes, c.qualifying),
                });
            }
            Err(e) => checks.push(failed(format!("transfer_rate_q{q}"), e.to_string())),
        }
        match full_rank_rate(&c, q, 3.0) {
            Ok(r) => {
                let sd = (r.expected * (1.0 - r.expected) / c.full_rank_qualifying as f64).sqrt();
                checks.push(Check {
                    name: format!("full_rank_rate_q{q}"),
                    pass: r.consistent,
                    estimate: r.estimate.rate,
                    lower: Some(r.expected - 3.0 * sd),
                    upper: Some(r.expected + 3.0 * sd),
                    detail: format!("{} of {} transfers from full-rank senders", c.full_rank_successes, c.full_rank_qualifying),
                });
            }
            Err(e) => checks.push(failed(format!("full_rank_rate_q{q}"), e.to_string())),
        }
    }
    Ok(checks)
}

fn failed(name: String, detail: String) -> Check {
    Check { name, pass: false, estimate: f64::NAN, lower: None, upper: None, detail }
}

/// Paired per-trial cover times: knowledge of `e_1` under RLNC and faulty
/// flooding from the holder of message 1, on the same trial seed.
pub fn paired_cover_times(p: &Prepared, trials: u64) -> Result<Vec<(u64, u64)>, HarnessError> {
    let field = p.field.clone();
    let mu = FieldVector::unit(&field, p.config.k, 0);
    let c = &p.config;
    let known = c.known_sets(&mut stream_rng(trial_seed(c.seed, 0), Stream::Init));
    let sources: Vec<usize> = (0..c.n).filter(|&v| known[v].contains(&1)).collect();
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let ts = trial_seed(c.seed, trial);
            let mut tracker = Tracker::new(
                TrackedDuals::Explicit(vec![mu.clone()]).resolve(&field, c.k, &mut SimRng::seed_from_u64(0)).expect("explicit"),
                TrackerOptions::default(),
            )
            .expect("nonzero dual");
            p.run_trial(trial, Some(&mut tracker))?;
            let rlnc = tracker.cover_rounds()[0].ok_or_else(|| {
                crate::error::ConfigError::new("max_rounds", format!("trial {trial}: knowledge of e_1 did not cover"))
            })?;
            let mut adversary = p.adversary(ts, true)?;
            let mut rng = stream_rng(splitmix64(ts), Stream::Protocol);
            let flood = faulty_flood(c.comm_model, &p.flood_options(), &mut adversary, c.n, &sources, &mut rng, p.max_rounds)?
                .ok_or_else(|| crate::error::ConfigError::new("max_rounds", format!("trial {trial}: flooding did not cover")))?;
            Ok((rlnc, flood))
        })
        .collect()
}

fn mean_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

fn dominance_suite(seed: u64, sizes: &SuiteSizes) -> Result<Vec<Check>, HarnessError> {
    let cases = [
        ("k16_sync_push", "n = 16\nk = 8\ncomm_model = \"sync_push\"\n"),
        ("ring16_sync_broadcast", "n = 16\nk = 8\ncomm_model = \"sync_broadcast\"\ngraph = \"ring\"\n"),
    ];
    let mut checks = Vec::new();
    for (name, text) in cases {
        let p = scenario(&format!("{text}seed = {seed}\nmax_rounds = 100000\n"))?;
        let pairs = paired_cover_times(&p, sizes.dominance_trials)?;
        let (rlnc, _) = mean_se(pairs.iter().map(|x| x.0 as f64));
        let (flood, flood_se) = mean_se(pairs.iter().map(|x| x.1 as f64));
        let (_, diff_se) = mean_se(pairs.iter().map(|x| x.0 as f64 - x.1 as f64));
        let upper = flood + 2.0 * flood_se.max(diff_se);
        checks.push(Check {
            name: name.to_string(),
            pass: rlnc <= upper,
            estimate: rlnc,
            lower: None,
            upper: Some(upper),
            detail: format!("{} paired trials; flooding mean {flood:.4}", pairs.len()),
        });
    }
    Ok(checks)
}

fn weighted_coin_suite(seed: u64, sizes: &SuiteSizes) -> Vec<Check> {
    [0.1, 0.25, 0.5]
        .into_iter()
        .enumerate()
        .map(|(pi, p)| {
            let results: Vec<_> = (0..sizes.coin_vectors)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream_rng(trial_seed(seed ^ pi as u64, i as u64), Stream::Protocol);
                    let dim = rng.gen_range(1..=64);
                    let weights: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0f64..5.0).exp()).collect();
                    weighted_bernoulli_bound_check(&weights, p, sizes.coin_samples, &mut rng).expect("valid weights")
                })
                .collect();
            let fails = results.iter().filter(|r| !r.pass).count();
            let worst = results.iter().map(|r| r.empirical).fold(0.0, f64::max);
            Check {
                name: format!("weighted_bernoulli_p{p}"),
                pass: fails == 0,
                estimate: worst,
                lower: None,
                upper: Some(p + 3.0 * (p * (1.0 - p) / sizes.coin_samples as f64).sqrt()),
                detail: format!("{fails} of {} weight vectors above p + 3σ", results.len()),
            }
        })
        .collect()
}

pub const TAIL_GRID_K: [u64; 5] = [4, 8, 16, 32, 64];
pub const TAIL_GRID_T: [u64; 6] = [1, 2, 4, 8, 16, 32];
pub const TAIL_GRID_P: [f64; 7] = [0.5, 0.25, 0.1, 0.01, 1e-3, 1e-4, 1e-6];
/// Side-condition constant `c` in `-ln p >= c ln t`.
pub const TAIL_SIDE_C: f64 = 1.0;

fn tail_suite() -> Vec<Check> {
    let mut points = Vec::new();
    for k in TAIL_GRID_K {
        for t in TAIL_GRID_T {
            for p in TAIL_GRID_P {
                points.push(tail_bound_check(k, t, p, TAIL_SIDE_C).expect("grid in domain"));
            }
        }
    }
    let split = |in_regime: bool, name: &str| {
        let sel: Vec<_> = points.iter().filter(|x| x.in_regime == in_regime).collect();
        let fails = sel.iter().filter(|x| !x.pass).count();
        let margin = sel.iter().map(|x| x.ln_tail - x.ln_bound).fold(f64::NEG_INFINITY, f64::max);
        Check {
            name: name.to_string(),
            pass: fails == 0,
            estimate: margin,
            lower: None,
            upper: Some(0.0),
            detail: format!("{fails} of {} grid points exceed p^k; estimate is max ln(tail / p^k)", sel.len()),
        }
    };
    vec![split(true, "tail_bound_in_regime"), split(false, "tail_bound_outside_regime")]
}

/// States reached by short random runs at `q = 2`; each is checked for
/// `can_decode` against knowing every nonzero dual.
fn decode_suite(seed: u64, sizes: &SuiteSizes) -> Result<Vec<Check>, HarnessError> {
    let k = sizes.decode_k;
    let field = make_field(2).map_err(|e| crate::error::ConfigError::new("q", e.to_string()))?;
    let duals = TrackedDuals::All
        .resolve(&field, k, &mut SimRng::seed_from_u64(0))
        .map_err(|e| crate::error::ConfigError::new("k", e.to_string()))?;
    let outcomes = (0..sizes.decode_runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = stream_rng(trial_seed(seed, run), Stream::Init);
            let n = rng.gen_range(2..=8usize);
            let rounds = rng.gen_range(1..=3 * k as u64);
            let model = ["sync_push", "sync_pull", "sync_exchange", "sync_broadcast"][rng.gen_range(0..4)];
            let init = ["single_source", "one_per_node", "spread"][rng.gen_range(0..3)];
            let p = scenario(&format!(
                "n = {n}\nk = {k}\ncomm_model = \"{model}\"\ngraph = \"random_gnp\"\ngraph_p = 0.6\ninitialization = \"{init}\"\nspread = 2\nseed = {}\nmax_rounds = {rounds}\n",
                splitmix64(seed ^ run) >> 1
            ))
            .or_else(|_| {
                scenario(&format!(
                    "n = {n}\nk = {k}\ncomm_model = \"{model}\"\ngraph = \"random_gnp\"\ngraph_p = 0.6\nseed = {}\nmax_rounds = {rounds}\n",
                    splitmix64(seed ^ run) >> 1
                ))
            })?;
            let ts = trial_seed(p.config.seed, 0);
            let mut adversary = p.adversary(ts, false)?;
            let (mut states, _) = p.initial_states(ts)?;
            let mut prng = stream_rng(ts, Stream::Protocol);
            crate::comm::run_until(
                crate::comm::RunContext {
                    model: p.config.comm_model,
                    options: p.engine_options(),
                    adversary: &mut adversary,
                    tracker: None,
                    hook: None,
                    max_rounds: rounds,
                    seed: ts,
                },
                &mut states,
                |_| false,
                &mut prng,
            )?;
            let mut agree = 0u64;
            let mut decodable = 0u64;
            for s in &states {
                let knows_all = duals.iter().all(|mu| s.knows(mu).expect("dimensions match"));
                agree += (knows_all == s.can_decode()) as u64;
                decodable += s.can_decode() as u64;
            }
            Ok((states.len() as u64, agree, decodable))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let total: u64 = outcomes.iter().map(|o| o.0).sum();
    let agree: u64 = outcomes.iter().map(|o| o.1).sum();
    let decodable: u64 = outcomes.iter().map(|o| o.2).sum();
    Ok(vec![Check {
        name: format!("decode_iff_knows_all_k{k}"),
        pass: agree == total,
        estimate: agree as f64 / total.max(1) as f64,
        lower: Some(1.0),
        upper: Some(1.0),
        detail: format!(
            "{agree} of {total} node states agree over {} runs and {} duals; {decodable} decodable",
            outcomes.len(),
            duals.len()
        ),
    }])
}
