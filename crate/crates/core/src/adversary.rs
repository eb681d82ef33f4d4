//! Topology controllers. An adversary picks `G(t)` after seeing the full
//! state at the start of round `t` and the randomness consumed so far, but
//! before any of round `t`'s protocol randomness is drawn.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coding::{CoefficientVector, NodeState};
use crate::error::AdversaryError;
use crate::network::read_edge_list;
use crate::network::{induce_weighted, two_cliques_edges, GraphFamily, InduceModel, Topology};

/// Position of a ChaCha stream: enough to replay every draw made so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngTranscript {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngTranscript {
    pub fn of(rng: &ChaCha8Rng) -> Self {
        RngTranscript { seed: rng.get_seed(), stream: rng.get_stream(), word_pos: rng.get_word_pos() }
    }

    /// A generator positioned at the start of the recorded stream.
    pub fn replay(&self) -> ChaCha8Rng {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Read-only snapshot handed to the adversary at the start of a round.
#[derive(Clone, Copy)]
pub struct AdversaryView<'a> {
    pub round: u64,
    pub ranks: &'a [usize],
    /// Per tracked dual vector, which nodes know it.
    pub knowledge: &'a [Vec<bool>],
    pub states: Option<&'a [NodeState]>,
    pub transcript: RngTranscript,
}

impl AdversaryView<'_> {
    pub fn n(&self) -> usize {
        self.ranks.len()
    }
}

/// Which node set the two-clique adversary splits on.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitOn {
    /// Index into [`AdversaryView::knowledge`].
    Tracked(usize),
    /// A dual vector evaluated directly against the node states.
    Dual(CoefficientVector),
}

pub type CustomAdversary = Box<dyn FnMut(&AdversaryView<'_>, &mut ChaCha8Rng) -> Result<Topology, AdversaryError> + Send>;

pub enum AdversaryKind {
    Static(Arc<Topology>),
    /// Round `t` uses entry `(t - 1) mod len`.
    Periodic(Vec<Arc<Topology>>),
    /// Graphs keyed by first round of use; each holds until the next key.
    Scripted(BTreeMap<u64, Arc<Topology>>),
    RandomGnp { p: f64 },
    RandomMatching,
    /// Knowers and non-knowers each form a clique, joined by one edge
    /// between the lowest-indexed node of each side.
    TwoCliqueKnowledgeSplit(SplitOn),
    Custom(CustomAdversary),
}

impl fmt::Debug for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversaryKind::Static(g) => write!(f, "Static(n={})", g.n()),
            AdversaryKind::Periodic(gs) => write!(f, "Periodic(len={})", gs.len()),
            AdversaryKind::Scripted(gs) => write!(f, "Scripted(files={})", gs.len()),
            AdversaryKind::RandomGnp { p } => write!(f, "RandomGnp({p})"),
            AdversaryKind::RandomMatching => f.write_str("RandomMatching"),
            AdversaryKind::TwoCliqueKnowledgeSplit(s) => write!(f, "TwoCliqueKnowledgeSplit({s:?})"),
            AdversaryKind::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// Per-round property the adversary promises; checked on every output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contract {
    #[default]
    None,
    Connected,
    /// Connected with diameter at most the given bound.
    Diameter(usize),
}

impl fmt::Display for Contract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Contract::None => f.write_str("none"),
            Contract::Connected => f.write_str("connected"),
            Contract::Diameter(d) => write!(f, "diameter <= {d}"),
        }
    }
}

impl Contract {
    pub fn holds(self, g: &Topology) -> bool {
        match self {
            Contract::None => true,
            Contract::Connected => g.is_strongly_connected(),
            Contract::Diameter(d) => g.diameter().is_some_and(|x| x <= d),
        }
    }
}

#[derive(Debug)]
pub struct Adversary {
    kind: AdversaryKind,
    induce: Option<InduceModel>,
    contract: Contract,
    rng: ChaCha8Rng,
    induced_cache: Option<(Arc<Topology>, Arc<Topology>)>,
}

impl Adversary {
    /// `rng` is the adversary's private stream; protocol randomness is never
    /// shared with it.
    pub fn new(kind: AdversaryKind, rng: ChaCha8Rng) -> Self {
        Adversary { kind, induce: None, contract: Contract::None, rng, induced_cache: None }
    }

    /// Replaces each chosen graph by its edge-probability weighting.
    pub fn induced(mut self, model: InduceModel) -> Self {
        self.induce = Some(model);
        self
    }

    pub fn with_contract(mut self, contract: Contract) -> Self {
        self.contract = contract;
        self
    }

    pub fn kind(&self) -> &AdversaryKind {
        &self.kind
    }

    pub fn contract(&self) -> Contract {
        self.contract
    }

    pub fn next_topology(&mut self, view: &AdversaryView<'_>) -> Result<Arc<Topology>, AdversaryError> {
        let n = view.n();
        let round = view.round;
        let base: Arc<Topology> = match &mut self.kind {
            AdversaryKind::Static(g) => g.clone(),
            AdversaryKind::Periodic(gs) => {
                if gs.is_empty() {
                    return Err(AdversaryError::Script("periodic adversary has no graphs".into()));
                }
                gs[(round.max(1) - 1) as usize % gs.len()].clone()
            }
            AdversaryKind::Scripted(gs) => gs
                .range(..=round.max(1))
                .next_back()
                .or_else(|| gs.iter().next())
                .map(|(_, g)| g.clone())
                .ok_or_else(|| AdversaryError::Script("scripted adversary has no graphs".into()))?,
            AdversaryKind::RandomGnp { p } => Arc::new(GraphFamily::RandomGnp { p: *p }.generate(n, &mut self.rng)?),
            AdversaryKind::RandomMatching => Arc::new(GraphFamily::RandomMatching.generate(n, &mut self.rng)?),
            AdversaryKind::TwoCliqueKnowledgeSplit(on) => {
                let knows = split_side(on, view)?;
                let (left, right): (Vec<usize>, Vec<usize>) = (0..n).partition(|&v| knows[v]);
                Arc::new(Topology::undirected(n, two_cliques_edges(&left, &right))?)
            }
            AdversaryKind::Custom(f) => Arc::new(f(view, &mut self.rng)?),
        };
        if base.n() != n {
            return Err(AdversaryError::WrongSize { round, expected: n, got: base.n() });
        }
        if !self.contract.holds(&base) {
            return Err(AdversaryError::ContractViolated { round, contract: self.contract.to_string() });
        }
        match self.induce {
            None => Ok(base),
            Some(model) => {
                if let Some((src, out)) = &self.induced_cache {
                    if Arc::ptr_eq(src, &base) {
                        return Ok(out.clone());
                    }
                }
                let out = Arc::new(induce_weighted(&base, model)?);
                self.induced_cache = Some((base, out.clone()));
                Ok(out)
            }
        }
    }
}

fn split_side(on: &SplitOn, view: &AdversaryView<'_>) -> Result<Vec<bool>, AdversaryError> {
    match on {
        SplitOn::Tracked(i) => view.knowledge.get(*i).cloned().ok_or(AdversaryError::MissingKnowledge { index: *i }),
        SplitOn::Dual(mu) => {
            let states = view.states.ok_or(AdversaryError::MissingKnowledge { index: 0 })?;
            states
                .iter()
                .map(|s| s.knows(mu).map_err(|e| AdversaryError::Script(e.to_string())))
                .collect()
        }
    }
}

/// Loads `round_<t>.edges` files from `dir`. A round without a file reuses
/// the most recent earlier graph; rounds before the first file use the
/// first one.
pub fn load_script(dir: &Path) -> Result<BTreeMap<u64, Arc<Topology>>, AdversaryError> {
    let entries = std::fs::read_dir(dir).map_err(|e| AdversaryError::Script(format!("{}: {e}", dir.display())))?;
    let mut graphs = BTreeMap::new();
    let mut n = None;
    for entry in entries {
        let path = entry.map_err(|e| AdversaryError::Script(e.to_string()))?.path();
        let Some(name) = path.file_name().and_then(|s| s.to_str()) else { continue };
        let Some(t) = name.strip_prefix("round_").and_then(|s| s.strip_suffix(".edges")) else { continue };
        let t: u64 = t.parse().map_err(|_| AdversaryError::Script(format!("bad round index in `{name}`")))?;
        let g = read_edge_list(&path)?;
        match n {
            None => n = Some(g.n()),
            Some(m) if m != g.n() => {
                return Err(AdversaryError::Script(format!("`{name}` has {} nodes, earlier files have {m}", g.n())))
            }
            _ => {}
        }
        graphs.insert(t, Arc::new(g));
    }
    if graphs.is_empty() {
        return Err(AdversaryError::Script(format!("no round_<t>.edges files in {}", dir.display())));
    }
    Ok(graphs)
}
