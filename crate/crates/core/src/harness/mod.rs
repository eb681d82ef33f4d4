//! Scenario execution: seeded parallel trials, aggregation, sweeps and
//! CSV/JSON reporting.

pub mod config;
pub mod validate;

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::sync::Arc;

use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;
use toml::Table;

use crate::adversary::{load_script, Adversary, AdversaryKind, SplitOn};
use crate::analysis::{pipelining_rounds, PipelineConstants};
use crate::coding::NodeState;
use crate::comm::{
    all_decoded, run_until, splitmix64, stream_rng, trial_seed, EngineOptions, RunContext, RunRecord, SimRng, Stream,
    RNG_ALGORITHM,
};
use crate::error::{CommError, ConfigError};
use crate::field::{make_field, FieldSpec, FieldVector};
use crate::flooding::{estimate_tail, CoverTimeDistribution, FloodOptions};
use crate::network::{induce_weighted, read_edge_list, Topology};
use crate::tracker::{lemma1_frequency, TransferRateReport, Tracker, TrackerOptions, TransferCounts};

pub use config::{AdversarySpec, GraphSpec, Initialization, ScenarioConfig, TrackedSpec};

/// Upper limit on pilot flooding rounds used to size the default budget.
pub const PILOT_ROUND_CAP: u64 = 1_000_000;

const PILOT_SALT: u64 = 0x7069_6c6f_74;

/// A validated scenario with its shared, trial-independent parts built.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ScenarioConfig,
    pub field: FieldSpec,
    /// Deterministic base graph, already weighted when the model needs it.
    base: Option<Arc<Topology>>,
    script: Option<BTreeMap<u64, Arc<Topology>>>,
    pub max_rounds: u64,
    /// Pilot cover-time estimate behind a derived budget.
    pub pilot_cover_time: Option<u64>,
}

impl Prepared {
    pub fn new(config: ScenarioConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let field = make_field(config.q).map_err(|e| ConfigError::new("q", e.to_string()))?;
        let graph_err = |e: crate::error::NetworkError| ConfigError::new(graph_key(&config), e.to_string());
        let base = match &config.graph {
            GraphSpec::File(path) => Some(read_edge_list(path).map_err(graph_err)?),
            GraphSpec::Family(f) if !f.is_random() => {
                Some(f.generate(config.n, &mut SimRng::seed_from_u64(0)).map_err(graph_err)?)
            }
            GraphSpec::Family(f) => {
                // validate parameters once; trials draw their own instance
                f.generate(config.n, &mut SimRng::seed_from_u64(0)).map_err(graph_err)?;
                None
            }
        };
        if let Some(g) = &base {
            if g.n() != config.n {
                return Err(ConfigError::new(graph_key(&config), format!("graph has {} nodes, n = {}", g.n(), config.n)));
            }
        }
        let base = base.map(|g| weigh(&config, g)).transpose()?.map(Arc::new);
        let script = match &config.adversary {
            AdversarySpec::Scripted { dir } => {
                let s = load_script(dir).map_err(|e| ConfigError::new("adversary_dir", e.to_string()))?;
                if let Some(g) = s.values().find(|g| g.n() != config.n) {
                    return Err(ConfigError::new("adversary_dir", format!("script graph has {} nodes, n = {}", g.n(), config.n)));
                }
                Some(s)
            }
            _ => None,
        };
        if matches!(config.adversary, AdversarySpec::Static) {
            if let Some(g) = &base {
                check_model_fit(&config, g)?;
            }
        }
        let mut prepared = Prepared { config, field, base, script, max_rounds: 0, pilot_cover_time: None };
        prepared.max_rounds = match prepared.config.max_rounds {
            Some(m) => m,
            None => {
                let (budget, t_hat) = prepared.default_budget()?;
                prepared.pilot_cover_time = Some(t_hat);
                budget
            }
        };
        Ok(prepared)
    }

    /// `pipelining_rounds(k, T̂, 1/q, q, ⌈log₂(1/δ)⌉)` with `T̂` the 0.99
    /// quantile (or maximum, for fewer than 100 pilots) of faulty-flooding
    /// cover times from the holders of message 1.
    fn default_budget(&self) -> Result<(u64, u64), ConfigError> {
        let c = &self.config;
        let pilot_seed = splitmix64(c.seed ^ PILOT_SALT);
        let known = c.known_sets(&mut stream_rng(pilot_seed, Stream::Init));
        let sources: Vec<usize> = (0..c.n).filter(|&v| known[v].contains(&1)).collect();
        let opts = self.flood_options();
        let dist = estimate_tail(
            c.comm_model,
            &opts,
            |ts| self.adversary(ts, true).expect("adversary prepared"),
            c.n,
            &sources,
            c.pilot_trials,
            pilot_seed,
            PILOT_ROUND_CAP,
        )
        .map_err(|e| ConfigError::new("max_rounds", format!("pilot flooding failed: {e}")))?;
        if dist.converged() < dist.trials {
            return Err(ConfigError::new(
                "max_rounds",
                format!("pilot flooding did not finish within {PILOT_ROUND_CAP} rounds; set max_rounds"),
            ));
        }
        let t_hat = dist.quantile(0.99).unwrap_or_else(|_| *dist.samples.last().expect("converged"));
        let d = (1.0 / c.delta).log2().ceil() as u64;
        let q = c.q as f64;
        let budget = pipelining_rounds(c.k as u64, t_hat as f64, 1.0 / q, q, d, PipelineConstants::default())
            .map_err(|e| ConfigError::new("max_rounds", e.to_string()))?;
        Ok((budget.max(1), t_hat))
    }

    pub fn engine_options(&self) -> EngineOptions {
        EngineOptions { pull_sampling: self.config.pull_sampling, async_broadcast: self.config.async_broadcast }
    }

    pub fn flood_options(&self) -> FloodOptions {
        FloodOptions { coin: self.config.flood_coin, engine: self.engine_options(), ..FloodOptions::for_field(self.config.q) }
    }

    /// Builds the trial's adversary. Flooding runs split on the informed set
    /// instead of a dual vector.
    pub fn adversary(&self, ts: u64, for_flood: bool) -> Result<Adversary, ConfigError> {
        let c = &self.config;
        let rng = stream_rng(ts, Stream::Adversary);
        let needs_induce = c.induce;
        let (kind, induce) = match &c.adversary {
            AdversarySpec::Static => {
                let g = match &self.base {
                    Some(g) => g.clone(),
                    None => {
                        let GraphSpec::Family(f) = &c.graph else { unreachable!("files are deterministic") };
                        let g = f
                            .generate(c.n, &mut stream_rng(ts, Stream::Init))
                            .map_err(|e| ConfigError::new("graph", e.to_string()))?;
                        Arc::new(weigh(c, g)?)
                    }
                };
                (AdversaryKind::Static(g), None)
            }
            AdversarySpec::RandomGnp { p } => (AdversaryKind::RandomGnp { p: *p }, needs_induce),
            AdversarySpec::RandomMatching => (AdversaryKind::RandomMatching, needs_induce),
            AdversarySpec::TwoCliqueSplit { message } => {
                let on = if for_flood {
                    SplitOn::Tracked(0)
                } else {
                    SplitOn::Dual(FieldVector::unit(&self.field, c.k, message - 1))
                };
                (AdversaryKind::TwoCliqueKnowledgeSplit(on), needs_induce)
            }
            AdversarySpec::Scripted { .. } => {
                let s = self.script.clone().expect("script loaded");
                let weighted = s.values().any(|g| g.is_weighted());
                (AdversaryKind::Scripted(s), if weighted { None } else { needs_induce })
            }
        };
        let mut adv = Adversary::new(kind, rng).with_contract(c.adversary_contract);
        if let Some(m) = induce {
            adv = adv.induced(m);
        }
        Ok(adv)
    }

    /// Node states for one trial, plus the ground-truth messages in payload mode.
    pub fn initial_states(&self, ts: u64) -> Result<(Vec<NodeState>, Option<Vec<FieldVector>>), CommError> {
        let c = &self.config;
        let mut rng = stream_rng(ts, Stream::Init);
        // random base graphs consume this stream first, in `adversary`
        if let (AdversarySpec::Static, None) = (&c.adversary, &self.base) {
            if let GraphSpec::Family(f) = &c.graph {
                let _ = f.generate(c.n, &mut rng);
            }
        }
        let known = c.known_sets(&mut rng);
        let messages: Option<Vec<FieldVector>> =
            (c.l > 0).then(|| (0..c.k).map(|_| FieldVector::random(&self.field, c.l, &mut rng)).collect());
        let states = (0..c.n)
            .map(|v| NodeState::new(&self.field, v, c.k, &known[v], messages.as_deref()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((states, messages))
    }

    /// Runs trial `trial`. A tracker, when given, observes the whole run.
    pub fn run_trial(&self, trial: u64, tracker: Option<&mut Tracker>) -> Result<TrialOutcome, HarnessError> {
        let ts = trial_seed(self.config.seed, trial);
        let mut adversary = self.adversary(ts, false)?;
        let (mut states, messages) = self.initial_states(ts)?;
        let mut rng = stream_rng(ts, Stream::Protocol);
        let record = run_until(
            RunContext {
                model: self.config.comm_model,
                options: self.engine_options(),
                adversary: &mut adversary,
                tracker,
                hook: None,
                max_rounds: self.max_rounds,
                seed: ts,
            },
            &mut states,
            all_decoded,
            &mut rng,
        )?;
        let decoded_ok = match &messages {
            Some(m) if record.converged() => Some(states.iter().all(|s| s.decode().map(|d| &d == m).unwrap_or(false))),
            _ => None,
        };
        Ok(TrialOutcome { record, decoded_ok })
    }

    pub fn tracked_tracker(&self, ts: u64) -> Result<Option<Tracker>, HarnessError> {
        if self.config.tracked == TrackedSpec::None {
            return Ok(None);
        }
        let duals = self
            .config
            .tracked
            .duals()
            .resolve(&self.field, self.config.k, &mut stream_rng(ts, Stream::Init))
            .map_err(|e| ConfigError::new("tracked", e.to_string()))?;
        Ok(Some(Tracker::new(duals, TrackerOptions::default()).map_err(|e| ConfigError::new("tracked", e.to_string()))?))
    }
}

fn graph_key(c: &ScenarioConfig) -> &'static str {
    match c.graph {
        GraphSpec::File(_) => "graph_file",
        GraphSpec::Family(_) => "graph",
    }
}

fn weigh(c: &ScenarioConfig, g: Topology) -> Result<Topology, ConfigError> {
    match c.induce {
        Some(m) if !g.is_weighted() => induce_weighted(&g, m).map_err(|e| ConfigError::new("induce", e.to_string())),
        _ => Ok(g),
    }
}

fn check_model_fit(c: &ScenarioConfig, g: &Topology) -> Result<(), ConfigError> {
    match (c.comm_model.needs_weights(), g.is_weighted()) {
        (true, false) => Err(ConfigError::new("induce", format!("{} needs edge probabilities", c.comm_model))),
        (false, true) => Err(ConfigError::new(graph_key(c), format!("{} runs on unweighted graphs", c.comm_model))),
        _ => Ok(()),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Comm(#[from] CommError),
    #[error(transparent)]
    Flood(#[from] crate::error::FloodError),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub record: RunRecord,
    /// In payload mode, whether every node decoded the true messages.
    pub decoded_ok: Option<bool>,
}

/// Aggregate of stopping rounds over converged trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppingStats {
    pub mean: Option<f64>,
    pub median: Option<u64>,
    pub p90: Option<u64>,
    pub p99: Option<u64>,
    pub min: Option<u64>,
    pub max: Option<u64>,
    pub stderr: Option<f64>,
    pub trials: u64,
    pub converged: u64,
    pub convergence_rate: f64,
}

/// Nearest-rank quantile: the `⌈p·N⌉`-th smallest value.
pub fn nearest_rank(sorted: &[u64], p: f64) -> Option<u64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[rank - 1])
}

impl StoppingStats {
    pub fn from_rounds(rounds: &[Option<u64>]) -> Self {
        let mut done: Vec<u64> = rounds.iter().flatten().copied().collect();
        done.sort_unstable();
        let m = done.len();
        let mean = (m > 0).then(|| done.iter().sum::<u64>() as f64 / m as f64);
        let stderr = mean.map(|mu| {
            if m < 2 {
                0.0
            } else {
                let var = done.iter().map(|&x| (x as f64 - mu).powi(2)).sum::<f64>() / (m - 1) as f64;
                (var / m as f64).sqrt()
            }
        });
        StoppingStats {
            mean,
            median: nearest_rank(&done, 0.5),
            p90: nearest_rank(&done, 0.9),
            p99: nearest_rank(&done, 0.99),
            min: done.first().copied(),
            max: done.last().copied(),
            stderr,
            trials: rounds.len() as u64,
            converged: m as u64,
            convergence_rate: if rounds.is_empty() { 0.0 } else { m as f64 / rounds.len() as f64 },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub scenario_id: String,
    pub rng_algorithm: &'static str,
    pub config: ScenarioConfig,
    pub max_rounds: u64,
    pub pilot_cover_time: Option<u64>,
    pub stats: StoppingStats,
    /// `time_scale · mean`, the reported time unit.
    pub scaled_mean: Option<f64>,
    pub records: Vec<RunRecord>,
    pub decode_failures: u64,
    pub tracking: Option<TrackingSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackingSummary {
    pub duals: usize,
    pub transfers: TransferCounts,
    pub transfer_rate: Option<TransferRateReport>,
    /// Trials whose stopping round equals the latest dual cover round.
    pub cover_matches_stop: u64,
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        None => f(),
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build().expect("thread pool").install(f),
    }
}

/// Runs every trial of the scenario in parallel and aggregates in trial order.
pub fn run_experiment(config: ScenarioConfig) -> Result<ExperimentResult, HarnessError> {
    let threads = config.threads;
    let prepared = with_pool(threads, || Prepared::new(config))?;
    run_prepared(&prepared, threads)
}

pub fn run_prepared(prepared: &Prepared, threads: Option<usize>) -> Result<ExperimentResult, HarnessError> {
    let c = &prepared.config;
    let outcomes: Vec<(TrialOutcome, Option<Tracker>)> = with_pool(threads, || {
        (0..c.trials)
            .into_par_iter()
            .map(|trial| {
                let ts = trial_seed(c.seed, trial);
                let mut tracker = prepared.tracked_tracker(ts)?;
                let out = prepared.run_trial(trial, tracker.as_mut())?;
                Ok((out, tracker))
            })
            .collect::<Result<Vec<_>, HarnessError>>()
    })?;
    let rounds: Vec<Option<u64>> = outcomes.iter().map(|(o, _)| o.record.stopping_round).collect();
    let stats = StoppingStats::from_rounds(&rounds);
    let tracking = (c.tracked != TrackedSpec::None).then(|| {
        let mut transfers = TransferCounts::default();
        let mut matches = 0;
        let mut duals = 0;
        for (o, t) in &outcomes {
            let t = t.as_ref().expect("tracker per trial");
            duals = t.duals().len();
            transfers.merge(&t.totals());
            matches += (o.record.stopping_round.is_some() && t.max_cover_round() == o.record.stopping_round) as u64;
        }
        TrackingSummary { duals, transfers, transfer_rate: lemma1_frequency(&transfers, c.q, 3.0).ok(), cover_matches_stop: matches }
    });
    Ok(ExperimentResult {
        scenario_id: c.scenario_id.clone(),
        rng_algorithm: RNG_ALGORITHM,
        config: c.clone(),
        max_rounds: prepared.max_rounds,
        pilot_cover_time: prepared.pilot_cover_time,
        scaled_mean: stats.mean.map(|m| m * c.time_scale),
        stats,
        decode_failures: outcomes.iter().filter(|(o, _)| o.decoded_ok == Some(false)).count() as u64,
        records: outcomes.into_iter().map(|(o, _)| o.record).collect(),
        tracking,
    })
}

pub const RAW_HEADER: &str = "scenario_id,trial,seed,stopping_round,converged,innovative_total";
pub const AGGREGATE_HEADER: &str = "scenario_id,n,k,q,model,mean,median,p90,p99,stderr,trials,convergence_rate";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_raw_csv<W: Write>(out: &mut W, results: &[&ExperimentResult]) -> io::Result<()> {
    writeln!(out, "{RAW_HEADER}")?;
    for r in results {
        for (trial, rec) in r.records.iter().enumerate() {
            writeln!(
                out,
                "{},{trial},{},{},{},{}",
                r.scenario_id,
                rec.seed,
                opt(rec.stopping_round),
                rec.converged(),
                rec.innovative_total()
            )?;
        }
    }
    Ok(())
}

pub fn write_aggregate_row<W: Write>(out: &mut W, r: &ExperimentResult) -> io::Result<()> {
    let s = &r.stats;
    let c = &r.config;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        r.scenario_id,
        c.n,
        c.k,
        c.q,
        c.comm_model,
        opt(s.mean),
        opt(s.median),
        opt(s.p90),
        opt(s.p99),
        opt(s.stderr),
        s.trials,
        s.convergence_rate
    )
}

pub fn write_aggregate_csv<W: Write>(out: &mut W, results: &[&ExperimentResult]) -> io::Result<()> {
    writeln!(out, "{AGGREGATE_HEADER}")?;
    for r in results {
        write_aggregate_row(out, r)?;
    }
    Ok(())
}

/// Keys a sweep may vary.
pub const SWEEP_AXES: &[&str] = &["n", "k", "q", "l", "graph_p", "graph_left", "adversary_p", "spread", "source"];

/// One experiment per value of `axis`, each tagged `<id>/<axis>=<value>`.
pub fn sweep(template: &Table, axis: &str, values: &[String]) -> Result<Vec<ExperimentResult>, HarnessError> {
    if !SWEEP_AXES.contains(&axis) {
        return Err(ConfigError::new(axis, format!("cannot sweep; expected one of {}", SWEEP_AXES.join(", "))).into());
    }
    values
        .iter()
        .map(|v| {
            let mut t = template.clone();
            t.insert(axis.to_string(), config::parse_value(v));
            let mut cfg = ScenarioConfig::from_table(&t)?;
            cfg.scenario_id = format!("{}/{axis}={v}", cfg.scenario_id);
            run_experiment(cfg)
        })
        .collect()
}

/// Faulty flooding of message 1's holders under the scenario's model and adversary.
pub fn flood_scenario(prepared: &Prepared) -> Result<CoverTimeDistribution, HarnessError> {
    let c = &prepared.config;
    let known = c.known_sets(&mut stream_rng(trial_seed(c.seed, 0), Stream::Init));
    let sources: Vec<usize> = (0..c.n).filter(|&v| known[v].contains(&1)).collect();
    let adversary_err: std::sync::Mutex<Option<ConfigError>> = Default::default();
    let dist = with_pool(c.threads, || {
        estimate_tail(
            c.comm_model,
            &prepared.flood_options(),
            |ts| match prepared.adversary(ts, true) {
                Ok(a) => a,
                Err(e) => {
                    *adversary_err.lock().expect("lock") = Some(e);
                    Adversary::new(AdversaryKind::Static(Arc::new(Topology::empty(c.n))), SimRng::seed_from_u64(0))
                }
            },
            c.n,
            &sources,
            c.trials,
            c.seed,
            prepared.max_rounds,
        )
    });
    if let Some(e) = adversary_err.into_inner().expect("lock") {
        return Err(e.into());
    }
    Ok(dist?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str, extra: &[&str]) -> ScenarioConfig {
        let o: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
        ScenarioConfig::from_text(text, &o).unwrap()
    }

    const K2: &str = "n = 2\nk = 1\ncomm_model = \"sync_broadcast\"\ntrials = 4000\nseed = 1\nmax_rounds = 200\n";

    #[test]
    fn k2_broadcast_mean_is_two() {
        let r = run_experiment(cfg(K2, &[])).unwrap();
        let mean = r.stats.mean.unwrap();
        // geometric(1/2): variance 2
        let se = (2.0f64 / 4000.0).sqrt();
        assert!((mean - 2.0).abs() < 4.0 * se, "{mean}");
        assert_eq!(r.stats.convergence_rate, 1.0);
    }

    #[test]
    fn nearest_rank_matches_sort_reference() {
        let v: Vec<u64> = vec![1, 3, 3, 4, 7, 9, 10, 15, 20, 21];
        assert_eq!(nearest_rank(&v, 0.5), Some(7));
        assert_eq!(nearest_rank(&v, 0.9), Some(20));
        assert_eq!(nearest_rank(&v, 0.99), Some(21));
        assert_eq!(nearest_rank(&v, 0.0), Some(1));
        assert_eq!(nearest_rank(&[], 0.5), None);
        let s = StoppingStats::from_rounds(&[Some(5), None, Some(1), Some(3)]);
        assert_eq!((s.min, s.median, s.max), (Some(1), Some(3), Some(5)));
        assert_eq!(s.convergence_rate, 0.75);
    }

    #[test]
    fn default_budget_converges_on_k8_pull() {
        let r = run_experiment(cfg("n = 8\nk = 8\ncomm_model = \"sync_pull\"\ntrials = 500\n", &[])).unwrap();
        assert_eq!(r.stats.convergence_rate, 1.0, "budget {}", r.max_rounds);
        assert!(r.pilot_cover_time.is_some());
    }

    #[test]
    fn deterministic_across_threads() {
        let text = "n = 12\nk = 6\ncomm_model = \"sync_exchange\"\ngraph = \"random_gnp\"\ngraph_p = 0.4\ntrials = 40\nseed = 9\nmax_rounds = 500\n";
        let csv = |threads: usize| {
            let r = run_experiment(cfg(text, &[&format!("threads={threads}")])).unwrap();
            let mut buf = Vec::new();
            write_raw_csv(&mut buf, &[&r]).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let one = csv(1);
        assert!(one.starts_with(RAW_HEADER));
        assert_eq!(one, csv(3));
    }

    #[test]
    fn payload_mode_decodes_truth() {
        let r = run_experiment(cfg("n = 6\nk = 4\nq = 7\nl = 5\ncomm_model = \"sync_push\"\ngraph = \"ring\"\ntrials = 20\nmax_rounds = 400\n", &[]))
            .unwrap();
        assert_eq!(r.stats.convergence_rate, 1.0);
        assert_eq!(r.decode_failures, 0);
    }

    #[test]
    fn tracked_cover_equals_stopping_round() {
        let r = run_experiment(cfg(
            "n = 6\nk = 5\ncomm_model = \"sync_pull\"\ntracked = \"all\"\ntrials = 30\nmax_rounds = 500\n",
            &[],
        ))
        .unwrap();
        assert_eq!(r.tracking.unwrap().cover_matches_stop, 30);
    }

    #[test]
    fn async_models_run() {
        for extra in [
            vec!["comm_model=async_single_transfer"],
            vec!["comm_model=async_broadcast"],
            vec!["comm_model=async_broadcast", "async_broadcast=single_node"],
            vec!["comm_model=sync_push", "adversary=random_matching"],
            vec!["comm_model=sync_broadcast", "adversary=two_clique_split"],
        ] {
            let r = run_experiment(cfg("n = 8\nk = 3\ncomm_model = \"sync_push\"\ntrials = 10\nmax_rounds = 20000\n", &extra)).unwrap();
            assert_eq!(r.stats.convergence_rate, 1.0, "{extra:?}");
        }
    }

    #[test]
    fn sweep_rows() {
        let t = config::load_table("n = 8\nk = 2\ncomm_model = \"sync_pull\"\ntrials = 5\nmax_rounds = 300\n", &[]).unwrap();
        let rows = sweep(&t, "k", &["1".into(), "4".into()]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].scenario_id, "scenario/k=4");
        assert!(sweep(&t, "k", &[]).unwrap().is_empty());
        assert!(sweep(&t, "comm_model", &["x".into()]).is_err());
        let mut buf = Vec::new();
        write_aggregate_csv(&mut buf, &rows.iter().collect::<Vec<_>>()).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with(AGGREGATE_HEADER));
    }

    #[test]
    fn flood_scenario_runs() {
        let p = Prepared::new(cfg("n = 16\nk = 1\ncomm_model = \"sync_broadcast\"\ngraph = \"ring\"\ntrials = 50\nmax_rounds = 500\n", &["flood_coin=per_receiver"])).unwrap();
        let d = flood_scenario(&p).unwrap();
        assert_eq!(d.converged(), 50);
        assert!(d.samples[0] >= 8);
    }
}
