use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rlnc_gossip::comm::trial_seed;
use rlnc_gossip::harness::config::load_table;
use rlnc_gossip::harness::validate::{validate, Suite};
use rlnc_gossip::harness::{
    flood_scenario, run_prepared, sweep, write_aggregate_csv, write_raw_csv, ExperimentResult, HarnessError, Prepared,
    ScenarioConfig, TrackedSpec,
};
use rlnc_gossip::network::{
    conductance_lambda, induce_weighted, isoperimetric_h, min_cut_gamma, read_edge_list, CutMetric, InduceModel,
};
use rlnc_gossip::tracker::{write_events_csv, write_trace_csv, Tracker, TrackerOptions};

#[derive(Parser)]
#[command(name = "rlnc-gossip", version, about = "RLNC gossip Monte Carlo simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config file (flat key = value TOML)
    config: PathBuf,
    /// Override a config key, `key=value`; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Directory for CSV/JSON output; stdout when absent
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Also write a JSON mirror of the results
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of a scenario
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Write knowledge traces and transfer events of trial 0
        #[arg(long)]
        trace: bool,
    },
    /// Run a scenario once per value of one config key
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        axis: String,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
    },
    /// Faulty flooding of message 1 under the scenario's model and adversary
    Flood {
        #[command(flatten)]
        common: Common,
    },
    /// Print γ, h and λ of an edge-list graph
    Metrics {
        graph: PathBuf,
        /// Weighting applied to unweighted graphs before γ and λ
        #[arg(long, default_value = "exchange")]
        induce: String,
        #[arg(long)]
        json: bool,
    },
    /// Run a statistical validation suite (or `all`)
    Validate {
        suite: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

impl From<rlnc_gossip::error::ConfigError> for CliError {
    fn from(e: rlnc_gossip::error::ConfigError) -> Self {
        CliError::Harness(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Returns `Ok(false)` when a validation suite failed.
fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Simulate { common, trace } => simulate(&common, trace).map(|_| true),
        Command::Sweep { common, axis, values } => {
            let text = fs::read_to_string(&common.config)?;
            let table = load_table(&text, &common.set)?;
            let rows = sweep(&table, &axis, &values)?;
            emit_results(&common, &rows.iter().collect::<Vec<_>>(), "sweep")?;
            Ok(true)
        }
        Command::Flood { common } => flood(&common).map(|_| true),
        Command::Metrics { graph, induce, json } => metrics(&graph, &induce, json).map(|_| true),
        Command::Validate { suite, seed, out_dir, json } => {
            let suites: Vec<Suite> = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![suite.parse().map_err(CliError::Usage)?]
            };
            let mut reports = Vec::new();
            for s in suites {
                let r = validate(s, seed)?;
                for c in &r.checks {
                    println!("{} {}/{}: {} ({})", verdict(c.pass), r.suite, c.name, c.estimate, c.detail);
                }
                reports.push(r);
            }
            let pass = reports.iter().all(|r| r.pass);
            if json || out_dir.is_some() {
                write_json(out_dir.as_deref(), "validate.json", &reports)?;
            }
            println!("{}", if pass { "validation passed" } else { "validation FAILED" });
            Ok(pass)
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn load(common: &Common) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(&common.config)?;
    Ok(ScenarioConfig::from_text(&text, &common.set)?)
}

fn simulate(common: &Common, trace: bool) -> Result<(), CliError> {
    let config = load(common)?;
    let threads = config.threads;
    let prepared = Prepared::new(config)?;
    let result = run_prepared(&prepared, threads)?;
    emit_results(common, &[&result], "simulate")?;
    if trace {
        let dir = common.out_dir.as_deref().unwrap_or(Path::new("."));
        write_trace(&prepared, dir)?;
    }
    Ok(())
}

fn write_trace(prepared: &Prepared, dir: &Path) -> Result<(), CliError> {
    let mut p = prepared.clone();
    if p.config.tracked == TrackedSpec::None {
        p.config.tracked = TrackedSpec::Sampled { count: 32 };
    }
    let base = p.tracked_tracker(trial_seed(p.config.seed, 0))?.expect("tracking enabled");
    let mut tracker = Tracker::new(base.duals().to_vec(), TrackerOptions { record_events: true, record_sets: true })
        .map_err(|e| CliError::Usage(e.to_string()))?;
    p.run_trial(0, Some(&mut tracker))?;
    let traces = tracker.into_traces();
    fs::create_dir_all(dir)?;
    let mut t = BufWriter::new(File::create(dir.join("trace.csv"))?);
    write_trace_csv(&mut t, &traces)?;
    let mut e = BufWriter::new(File::create(dir.join("events.csv"))?);
    write_events_csv(&mut e, &traces)?;
    t.flush()?;
    e.flush()?;
    Ok(())
}

fn emit_results(common: &Common, results: &[&ExperimentResult], stem: &str) -> Result<(), CliError> {
    match &common.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let mut raw = BufWriter::new(File::create(dir.join(format!("{stem}_raw.csv")))?);
            write_raw_csv(&mut raw, results)?;
            raw.flush()?;
            let mut agg = BufWriter::new(File::create(dir.join(format!("{stem}_aggregate.csv")))?);
            write_aggregate_csv(&mut agg, results)?;
            agg.flush()?;
        }
        None => write_aggregate_csv(&mut io::stdout().lock(), results)?,
    }
    if common.json {
        write_json(common.out_dir.as_deref(), &format!("{stem}.json"), &results)?;
    }
    Ok(())
}

fn write_json<T: Serialize + ?Sized>(dir: Option<&Path>, name: &str, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    match dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            fs::write(d.join(name), text + "\n")?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct FloodSummary {
    scenario_id: String,
    trials: u64,
    converged: u64,
    max_rounds: u64,
    mean: Option<f64>,
    stderr: Option<f64>,
    p99: Option<u64>,
    budget_round: Option<rlnc_gossip::flooding::Extrapolation>,
}

fn flood(common: &Common) -> Result<(), CliError> {
    let config = load(common)?;
    let prepared = Prepared::new(config)?;
    let dist = flood_scenario(&prepared)?;
    let c = &prepared.config;
    let summary = FloodSummary {
        scenario_id: c.scenario_id.clone(),
        trials: dist.trials,
        converged: dist.converged(),
        max_rounds: dist.max_rounds,
        mean: dist.mean(),
        stderr: dist.std_error(),
        p99: dist.quantile(0.99).ok(),
        budget_round: dist.budget_round(c.delta, c.q, c.k as u32).ok(),
    };
    let opt = |v: Option<String>| v.unwrap_or_else(|| "n/a".into());
    match &common.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let mut f = BufWriter::new(File::create(dir.join("flood_survival.csv"))?);
            dist.write_csv(&mut f)?;
            f.flush()?;
        }
        None => {
            println!("trials {} converged {} max_rounds {}", summary.trials, summary.converged, summary.max_rounds);
            println!("mean {} stderr {}", opt(summary.mean.map(|m| m.to_string())), opt(summary.stderr.map(|m| m.to_string())));
            println!("p99 {}", opt(summary.p99.map(|m| m.to_string())));
            match &summary.budget_round {
                Some(x) => println!(
                    "round for failure ≤ δq^-k: {:.2}{}",
                    x.t,
                    if x.extrapolated { format!(" (extrapolated from rounds {}..{})", x.fit_range.0, x.fit_range.1) } else { String::new() }
                ),
                None => println!("round for failure ≤ δq^-k: n/a (too few trials)"),
            }
        }
    }
    if common.json {
        write_json(common.out_dir.as_deref(), "flood.json", &summary)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MetricLine {
    value: f64,
    exact: Option<String>,
    witness: Vec<usize>,
}

impl From<CutMetric> for MetricLine {
    fn from(m: CutMetric) -> Self {
        MetricLine { value: m.value, exact: m.exact.map(|r| r.to_string()), witness: m.witness }
    }
}

#[derive(Serialize)]
struct MetricsReport {
    n: usize,
    gamma: Option<MetricLine>,
    h: Option<MetricLine>,
    lambda: Option<MetricLine>,
    notes: Vec<String>,
}

fn metrics(path: &Path, induce: &str, json: bool) -> Result<(), CliError> {
    let g = read_edge_list(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let model: InduceModel = match induce {
        "push" => InduceModel::Push,
        "pull" => InduceModel::Pull,
        "exchange" => InduceModel::Exchange,
        other => return Err(CliError::Usage(format!("unknown induce model `{other}`"))),
    };
    let mut notes = Vec::new();
    let weighted = if g.is_weighted() {
        Some(g.clone())
    } else {
        match induce_weighted(&g, model) {
            Ok(w) => {
                notes.push(format!("γ and λ use {model}-induced edge probabilities"));
                Some(w)
            }
            Err(e) => {
                notes.push(format!("γ and λ unavailable: {e}"));
                None
            }
        }
    };
    let mut keep = |r: Result<CutMetric, rlnc_gossip::error::NetworkError>, name: &str| match r {
        Ok(m) => Some(MetricLine::from(m)),
        Err(e) => {
            notes.push(format!("{name}: {e}"));
            None
        }
    };
    let report = MetricsReport {
        n: g.n(),
        gamma: weighted.as_ref().and_then(|w| keep(min_cut_gamma(w), "gamma")),
        h: keep(isoperimetric_h(&g), "h"),
        lambda: weighted.as_ref().and_then(|w| keep(conductance_lambda(w), "lambda")),
        notes,
    };
    if json {
        return write_json(None, "", &report);
    }
    let show = |m: &Option<MetricLine>| match m {
        Some(m) => match &m.exact {
            Some(x) => format!("{} ({x})", m.value),
            None => m.value.to_string(),
        },
        None => "n/a".into(),
    };
    println!("n = {}", report.n);
    println!("gamma = {}", show(&report.gamma));
    println!("h = {}", show(&report.h));
    println!("lambda = {}", show(&report.lambda));
    for n in &report.notes {
        println!("note: {n}");
    }
    Ok(())
}
