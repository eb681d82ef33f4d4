//! Scenario files: flat TOML tables whose keys are the field names below.
//!
//! ```toml
//! scenario_id = "k64-pull"
//! n = 64
//! k = 32
//! comm_model = "sync_pull"
//! graph = "complete"
//! initialization = "single_source"
//! trials = 300
//! ```
//!
//! `--set key=value` overrides are parsed as TOML values, falling back to
//! plain strings.

use std::path::PathBuf;

use serde::Serialize;
use toml::{Table, Value};

use crate::adversary::Contract;
use crate::comm::{AsyncBroadcastMode, CommModel, PullSampling};
use crate::error::ConfigError;
use crate::field::make_field;
use crate::network::{GraphFamily, InduceModel};
use crate::tracker::TrackedDuals;

pub const KEYS: &[&str] = &[
    "scenario_id",
    "n",
    "k",
    "q",
    "l",
    "comm_model",
    "graph",
    "graph_p",
    "graph_left",
    "graph_file",
    "induce",
    "adversary",
    "adversary_p",
    "adversary_dir",
    "adversary_message",
    "adversary_contract",
    "initialization",
    "source",
    "spread",
    "init_explicit",
    "trials",
    "seed",
    "max_rounds",
    "delta",
    "tracked",
    "tracked_count",
    "pull_sampling",
    "async_broadcast",
    "flood_coin",
    "time_scale",
    "threads",
    "pilot_trials",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSpec {
    Family(GraphFamily),
    /// Edge-list file, possibly carrying edge probabilities.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversarySpec {
    /// The base graph every round.
    Static,
    RandomGnp { p: f64 },
    RandomMatching,
    /// Splits on knowledge of the unit dual of `message` (1-based).
    TwoCliqueSplit { message: usize },
    Scripted { dir: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    SingleSource { source: usize },
    /// Message `i` starts at node `i - 1`.
    OnePerNode,
    /// Each message starts at `i` distinct uniformly chosen nodes.
    Spread(usize),
    /// Entry `j` lists the nodes holding message `j + 1`.
    Explicit(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackedSpec {
    None,
    All,
    Projective,
    Sampled { count: usize },
}

impl TrackedSpec {
    pub fn duals(self) -> TrackedDuals {
        match self {
            TrackedSpec::None => TrackedDuals::None,
            TrackedSpec::All => TrackedDuals::All,
            TrackedSpec::Projective => TrackedDuals::Projective,
            TrackedSpec::Sampled { count } => TrackedDuals::Sampled { count },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario_id: String,
    pub n: usize,
    pub k: usize,
    pub q: u64,
    /// Payload symbols per message; 0 runs on coefficient vectors only.
    pub l: usize,
    pub comm_model: CommModel,
    pub graph: GraphSpec,
    /// Edge-probability weighting applied to unweighted graphs under
    /// asynchronous single transfer.
    pub induce: Option<InduceModel>,
    pub adversary: AdversarySpec,
    pub adversary_contract: Contract,
    pub initialization: Initialization,
    pub trials: u64,
    pub seed: u64,
    pub max_rounds: Option<u64>,
    pub delta: f64,
    pub tracked: TrackedSpec,
    pub pull_sampling: PullSampling,
    pub async_broadcast: AsyncBroadcastMode,
    pub flood_coin: crate::flooding::ForwardCoin,
    pub time_scale: f64,
    pub threads: Option<usize>,
    pub pilot_trials: u64,
}

/// Parses scenario text and applies `key=value` overrides.
pub fn load_table(text: &str, overrides: &[String]) -> Result<Table, ConfigError> {
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::new("<file>", e.message()))?;
    for o in overrides {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| ConfigError::new(o.clone(), "override must look like key=value"))?;
        table.insert(key.trim().to_string(), parse_value(value.trim()));
    }
    Ok(table)
}

/// A TOML literal, or the raw text as a string.
pub fn parse_value(text: &str) -> Value {
    match format!("v = {text}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(text.into())),
        Err(_) => Value::String(text.into()),
    }
}

struct Fields<'a>(&'a Table);

impl Fields<'_> {
    fn str(&self, key: &str) -> Result<Option<&str>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(ConfigError::new(key, format!("expected a string, got {}", v.type_str()))),
        }
    }

    fn uint(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(Value::Integer(i)) => Err(ConfigError::new(key, format!("must be non-negative, got {i}"))),
            Some(v) => Err(ConfigError::new(key, format!("expected an integer, got {}", v.type_str()))),
        }
    }

    fn float(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(ConfigError::new(key, format!("expected a number, got {}", v.type_str()))),
        }
    }

    fn required_uint(&self, key: &str) -> Result<u64, ConfigError> {
        self.uint(key)?.ok_or_else(|| ConfigError::new(key, "is required"))
    }

    fn node_lists(&self, key: &str) -> Result<Option<Vec<Vec<usize>>>, ConfigError> {
        let Some(v) = self.0.get(key) else { return Ok(None) };
        let bad = || ConfigError::new(key, "expected an array of arrays of node ids");
        let outer = v.as_array().ok_or_else(bad)?;
        outer
            .iter()
            .map(|inner| {
                inner
                    .as_array()
                    .ok_or_else(bad)?
                    .iter()
                    .map(|x| x.as_integer().filter(|&i| i >= 0).map(|i| i as usize).ok_or_else(bad))
                    .collect()
            })
            .collect::<Result<_, _>>()
            .map(Some)
    }

    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)], default: T) -> Result<T, ConfigError> {
        match self.str(key)? {
            None => Ok(default),
            Some(s) => options.iter().find(|(name, _)| *name == s).map(|&(_, v)| v).ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                ConfigError::new(key, format!("unknown value `{s}`; expected one of {}", names.join(", ")))
            }),
        }
    }
}

impl ScenarioConfig {
    pub fn from_text(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        Self::from_table(&load_table(text, overrides)?)
    }

    pub fn from_table(table: &Table) -> Result<Self, ConfigError> {
        if let Some(key) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(ConfigError::new(key.clone(), "unknown key"));
        }
        let f = Fields(table);
        let n = f.required_uint("n")? as usize;
        let k = f.required_uint("k")? as usize;
        let q = f.uint("q")?.unwrap_or(2);
        let comm_model = match f.str("comm_model")? {
            None => return Err(ConfigError::new("comm_model", "is required")),
            Some(s) => s.parse::<CommModel>().map_err(|e| ConfigError::new("comm_model", e))?,
        };

        let graph = match (f.str("graph")?, f.str("graph_file")?) {
            (Some(_), Some(_)) => return Err(ConfigError::new("graph_file", "give either graph or graph_file")),
            (None, Some(path)) => GraphSpec::File(PathBuf::from(path)),
            (family, None) => GraphSpec::Family(match family.unwrap_or("complete") {
                "complete" => GraphFamily::Complete,
                "ring" => GraphFamily::Ring,
                "line" => GraphFamily::Line,
                "star" => GraphFamily::Star,
                "hypercube" => GraphFamily::Hypercube,
                "barbell" => GraphFamily::Barbell { clique_size: n / 2 },
                "two_cliques_bridged" => GraphFamily::TwoCliquesBridged {
                    left: f.uint("graph_left")?.ok_or_else(|| ConfigError::new("graph_left", "required by two_cliques_bridged"))?
                        as usize,
                },
                "random_gnp" => GraphFamily::RandomGnp {
                    p: f.float("graph_p")?.ok_or_else(|| ConfigError::new("graph_p", "required by random_gnp"))?,
                },
                "random_matching" => GraphFamily::RandomMatching,
                other => return Err(ConfigError::new("graph", format!("unknown graph family `{other}`"))),
            }),
        };

        let default_induce = if comm_model.needs_weights() { Some(InduceModel::Exchange) } else { None };
        let induce = f.choice(
            "induce",
            &[
                ("none", None),
                ("push", Some(InduceModel::Push)),
                ("pull", Some(InduceModel::Pull)),
                ("exchange", Some(InduceModel::Exchange)),
            ],
            default_induce,
        )?;

        let adversary = match f.str("adversary")?.unwrap_or("static") {
            "static" => AdversarySpec::Static,
            "random_gnp" => AdversarySpec::RandomGnp {
                p: f.float("adversary_p")?.ok_or_else(|| ConfigError::new("adversary_p", "required by random_gnp"))?,
            },
            "random_matching" => AdversarySpec::RandomMatching,
            "two_clique_split" => AdversarySpec::TwoCliqueSplit { message: f.uint("adversary_message")?.unwrap_or(1) as usize },
            "scripted" => AdversarySpec::Scripted {
                dir: PathBuf::from(
                    f.str("adversary_dir")?.ok_or_else(|| ConfigError::new("adversary_dir", "required by scripted"))?,
                ),
            },
            other => return Err(ConfigError::new("adversary", format!("unknown adversary `{other}`"))),
        };
        let adversary_contract = match f.0.get("adversary_contract") {
            None => Contract::None,
            Some(Value::Integer(d)) if *d >= 0 => Contract::Diameter(*d as usize),
            Some(_) => f.choice("adversary_contract", &[("none", Contract::None), ("connected", Contract::Connected)], Contract::None)?,
        };

        let initialization = match f.str("initialization")?.unwrap_or("single_source") {
            "single_source" => Initialization::SingleSource { source: f.uint("source")?.unwrap_or(0) as usize },
            "one_per_node" => Initialization::OnePerNode,
            "spread" => Initialization::Spread(f.uint("spread")?.ok_or_else(|| ConfigError::new("spread", "required by spread"))? as usize),
            "explicit" => Initialization::Explicit(
                f.node_lists("init_explicit")?.ok_or_else(|| ConfigError::new("init_explicit", "required by explicit"))?,
            ),
            other => return Err(ConfigError::new("initialization", format!("unknown initialization `{other}`"))),
        };

        let tracked = match f.str("tracked")?.unwrap_or("none") {
            "none" => TrackedSpec::None,
            "all" => TrackedSpec::All,
            "projective" => TrackedSpec::Projective,
            "sampled" => TrackedSpec::Sampled { count: f.uint("tracked_count")?.unwrap_or(32) as usize },
            other => return Err(ConfigError::new("tracked", format!("unknown tracked spec `{other}`"))),
        };

        let cfg = ScenarioConfig {
            scenario_id: f.str("scenario_id")?.unwrap_or("scenario").to_string(),
            n,
            k,
            q,
            l: f.uint("l")?.unwrap_or(0) as usize,
            comm_model,
            graph,
            induce,
            adversary,
            adversary_contract,
            initialization,
            trials: f.uint("trials")?.unwrap_or(100),
            seed: f.uint("seed")?.unwrap_or(0),
            max_rounds: f.uint("max_rounds")?,
            delta: f.float("delta")?.unwrap_or(1e-3),
            tracked,
            pull_sampling: f.choice(
                "pull_sampling",
                &[("independent", PullSampling::Independent), ("shared", PullSampling::Shared)],
                PullSampling::default(),
            )?,
            async_broadcast: f.choice(
                "async_broadcast",
                &[("bernoulli", AsyncBroadcastMode::Bernoulli), ("single_node", AsyncBroadcastMode::SingleNode)],
                AsyncBroadcastMode::default(),
            )?,
            flood_coin: f.choice(
                "flood_coin",
                &[
                    ("per_sender", crate::flooding::ForwardCoin::PerSender),
                    ("per_receiver", crate::flooding::ForwardCoin::PerReceiver),
                ],
                Default::default(),
            )?,
            time_scale: f.float("time_scale")?.unwrap_or(1.0),
            threads: f.uint("threads")?.map(|t| t as usize),
            pilot_trials: f.uint("pilot_trials")?.unwrap_or(100),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |field: &str, msg: String| Err(ConfigError::new(field, msg));
        if self.n < 2 {
            return err("n", format!("need at least 2 nodes, got {}", self.n));
        }
        if self.k == 0 {
            return err("k", "must be at least 1".into());
        }
        make_field(self.q).map_err(|e| ConfigError::new("q", e.to_string()))?;
        if self.trials == 0 {
            return err("trials", "must be at least 1".into());
        }
        if self.max_rounds == Some(0) {
            return err("max_rounds", "must be positive".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return err("delta", format!("must lie in (0, 1), got {}", self.delta));
        }
        if !(self.time_scale > 0.0) {
            return err("time_scale", format!("must be positive, got {}", self.time_scale));
        }
        if self.threads == Some(0) {
            return err("threads", "must be at least 1".into());
        }
        if self.pilot_trials == 0 {
            return err("pilot_trials", "must be at least 1".into());
        }
        if self.induce.is_some() && !self.comm_model.needs_weights() {
            return err("induce", format!("edge probabilities are not used by {}", self.comm_model));
        }
        match &self.initialization {
            Initialization::SingleSource { source } if *source >= self.n => {
                return err("source", format!("node {source} out of range for n = {}", self.n))
            }
            Initialization::OnePerNode if self.k > self.n => {
                return err("initialization", format!("one_per_node needs k <= n, got k = {} > n = {}", self.k, self.n))
            }
            Initialization::Spread(i) if *i == 0 || *i > self.n => {
                return err("spread", format!("must lie in 1..={}, got {i}", self.n))
            }
            Initialization::Explicit(lists) => {
                if lists.len() != self.k {
                    return err("init_explicit", format!("needs one node list per message ({}), got {}", self.k, lists.len()));
                }
                if let Some(v) = lists.iter().flatten().find(|&&v| v >= self.n) {
                    return err("init_explicit", format!("node {v} out of range for n = {}", self.n));
                }
                if let Some(j) = lists.iter().position(Vec::is_empty) {
                    return err("init_explicit", format!("message {} has no holder", j + 1));
                }
            }
            _ => {}
        }
        if let AdversarySpec::TwoCliqueSplit { message } = self.adversary {
            if message == 0 || message > self.k {
                return err("adversary_message", format!("must lie in 1..={}, got {message}", self.k));
            }
        }
        if let AdversarySpec::RandomGnp { p } = self.adversary {
            if !(0.0..=1.0).contains(&p) {
                return err("adversary_p", format!("must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }

    /// Initial message holders: entry `v` lists the 1-based messages node `v` knows.
    pub fn known_sets<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<usize>> {
        let mut known = vec![Vec::new(); self.n];
        match &self.initialization {
            Initialization::SingleSource { source } => known[*source] = (1..=self.k).collect(),
            Initialization::OnePerNode => {
                for i in 1..=self.k {
                    known[i - 1].push(i);
                }
            }
            Initialization::Spread(i) => {
                for m in 1..=self.k {
                    for v in rand::seq::index::sample(rng, self.n, *i) {
                        known[v].push(m);
                    }
                }
            }
            Initialization::Explicit(lists) => {
                for (j, nodes) in lists.iter().enumerate() {
                    for &v in nodes {
                        if !known[v].contains(&(j + 1)) {
                            known[v].push(j + 1);
                        }
                    }
                }
            }
        }
        known
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "n = 8\nk = 4\ncomm_model = \"sync_pull\"\n";

    #[test]
    fn defaults() {
        let c = ScenarioConfig::from_text(BASE, &[]).unwrap();
        assert_eq!(c.q, 2);
        assert_eq!(c.graph, GraphSpec::Family(GraphFamily::Complete));
        assert_eq!(c.initialization, Initialization::SingleSource { source: 0 });
        assert_eq!(c.induce, None);
        assert_eq!(c.pull_sampling, PullSampling::Independent);
    }

    #[test]
    fn overrides_win() {
        let c = ScenarioConfig::from_text(BASE, &["k=6".into(), "graph=ring".into(), "delta = 0.5".into()]).unwrap();
        assert_eq!(c.k, 6);
        assert_eq!(c.graph, GraphSpec::Family(GraphFamily::Ring));
        assert_eq!(c.delta, 0.5);
        let c = ScenarioConfig::from_text(BASE, &["comm_model=async_single_transfer".into()]).unwrap();
        assert_eq!(c.induce, Some(InduceModel::Exchange));
    }

    #[test]
    fn field_level_errors() {
        let e = |extra: &[&str]| {
            let o: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
            ScenarioConfig::from_text(BASE, &o).unwrap_err().field
        };
        assert_eq!(e(&["trials=0"]), "trials");
        assert_eq!(e(&["q=6"]), "q");
        assert_eq!(e(&["k=9", "initialization=one_per_node"]), "initialization");
        assert_eq!(e(&["bogus=1"]), "bogus");
        assert_eq!(e(&["comm_model=gossip"]), "comm_model");
        assert_eq!(e(&["n=\"eight\""]), "n");
        assert_eq!(e(&["induce=push"]), "induce");
        assert_eq!(e(&["initialization=explicit", "init_explicit=[[0],[1]]"]), "init_explicit");
        assert_eq!(ScenarioConfig::from_text("k = 1\ncomm_model=\"sync_push\"", &[]).unwrap_err().field, "n");
    }

    #[test]
    fn known_sets_per_mode() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        use rand::SeedableRng;
        let c = ScenarioConfig::from_text(BASE, &["initialization=one_per_node".into()]).unwrap();
        assert_eq!(c.known_sets(&mut rng)[..5], [vec![1], vec![2], vec![3], vec![4], vec![]]);
        let c = ScenarioConfig::from_text(BASE, &["initialization=spread".into(), "spread=3".into()]).unwrap();
        let sets = c.known_sets(&mut rng);
        for m in 1..=4 {
            assert_eq!(sets.iter().filter(|s| s.contains(&m)).count(), 3);
        }
        let c = ScenarioConfig::from_text(
            BASE,
            &["initialization=explicit".into(), "init_explicit=[[0],[1,2],[2],[7]]".into()],
        )
        .unwrap();
        assert_eq!(c.known_sets(&mut rng)[2], vec![2, 3]);
    }
}
