//! Single-message faulty flooding: every scheduled transmission from an
//! informed node informs its receiver with a fixed forwarding probability.

use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{Adversary, AdversaryView, RngTranscript};
use crate::comm::{schedule, stream_rng, trial_seed, CommModel, EngineOptions, SimRng, Stream};
use crate::error::FloodError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardCoin {
    /// One coin per sampled packet, shared by all its receivers.
    #[default]
    PerSender,
    /// An independent coin for every delivery.
    PerReceiver,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloodOptions {
    pub forward_prob: f64,
    pub coin: ForwardCoin,
    pub engine: EngineOptions,
}

impl FloodOptions {
    /// Forwarding probability `1 - 1/q`.
    pub fn for_field(q: u64) -> Self {
        FloodOptions { forward_prob: forward_probability(Some(q)), ..Self::reliable() }
    }

    pub fn reliable() -> Self {
        FloodOptions { forward_prob: 1.0, coin: ForwardCoin::default(), engine: EngineOptions::default() }
    }
}

/// `1 - 1/q`, or 1 in the `q → ∞` limit.
pub fn forward_probability(q: Option<u64>) -> f64 {
    q.map_or(1.0, |q| 1.0 - 1.0 / q as f64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FloodState {
    pub informed: Vec<bool>,
    pub round: u64,
}

impl FloodState {
    pub fn new(n: usize, sources: &[usize]) -> Result<Self, FloodError> {
        if sources.is_empty() {
            return Err(FloodError::EmptySource);
        }
        let mut informed = vec![false; n];
        for &s in sources {
            *informed.get_mut(s).ok_or(FloodError::EmptySource)? = true;
        }
        Ok(FloodState { informed, round: 0 })
    }

    pub fn count(&self) -> usize {
        self.informed.iter().filter(|&&b| b).count()
    }

    pub fn is_complete(&self) -> bool {
        self.informed.iter().all(|&b| b)
    }
}

/// Runs one round of faulty flooding. Coins are drawn for every slot or
/// delivery whether or not the sender is informed, so runs that share a
/// seed share their coins across forwarding probabilities.
pub fn flood_round(
    model: CommModel,
    options: &FloodOptions,
    adversary: &mut Adversary,
    state: &mut FloodState,
    rng: &mut SimRng,
) -> Result<(), FloodError> {
    let n = state.informed.len();
    state.round += 1;
    let g = {
        let ranks: Vec<usize> = state.informed.iter().map(|&b| b as usize).collect();
        let knowledge = [state.informed.clone()];
        let view = AdversaryView {
            round: state.round,
            ranks: &ranks,
            knowledge: &knowledge,
            states: None,
            transcript: RngTranscript::of(rng),
        };
        adversary.next_topology(&view).map_err(crate::error::CommError::from)?
    };
    if g.n() != n {
        return Err(crate::error::CommError::SizeMismatch { states: n, n: g.n() }.into());
    }
    let sched = schedule(model, options.engine, &g, rng)?;
    let start = state.informed.clone();
    let p = options.forward_prob;
    match options.coin {
        ForwardCoin::PerSender => {
            let fired: Vec<bool> = sched.slot_sender.iter().map(|_| rng.gen::<f64>() < p).collect();
            for &(slot, r) in &sched.deliveries {
                if fired[slot] && start[sched.slot_sender[slot]] {
                    state.informed[r] = true;
                }
            }
        }
        ForwardCoin::PerReceiver => {
            for &(slot, r) in &sched.deliveries {
                let fired = rng.gen::<f64>() < p;
                if fired && start[sched.slot_sender[slot]] {
                    state.informed[r] = true;
                }
            }
        }
    }
    Ok(())
}

/// Rounds until every node is informed, or `None` after `max_rounds`.
pub fn faulty_flood(
    model: CommModel,
    options: &FloodOptions,
    adversary: &mut Adversary,
    n: usize,
    sources: &[usize],
    rng: &mut SimRng,
    max_rounds: u64,
) -> Result<Option<u64>, FloodError> {
    let mut state = FloodState::new(n, sources)?;
    while !state.is_complete() {
        if state.round >= max_rounds {
            return Ok(None);
        }
        flood_round(model, options, adversary, &mut state, rng)?;
    }
    Ok(Some(state.round))
}

/// Empirical cover-time distribution; non-converged trials count as
/// exceeding every horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverTimeDistribution {
    /// Sorted cover times of converged trials.
    pub samples: Vec<u64>,
    pub trials: u64,
    pub max_rounds: u64,
}

/// A tail quantile read off a fitted log-linear survival curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrapolation {
    pub t: f64,
    /// `ln P[cover > t] ≈ intercept + slope * t` on `fit_range`.
    pub slope: f64,
    pub intercept: f64,
    pub fit_range: (u64, u64),
    pub extrapolated: bool,
}

impl CoverTimeDistribution {
    pub fn from_samples(mut samples: Vec<u64>, trials: u64, max_rounds: u64) -> Result<Self, FloodError> {
        if trials == 0 {
            return Err(FloodError::NoTrials);
        }
        samples.sort_unstable();
        Ok(CoverTimeDistribution { samples, trials, max_rounds })
    }

    pub fn converged(&self) -> u64 {
        self.samples.len() as u64
    }

    /// `P[cover > t]`.
    pub fn survival(&self, t: u64) -> f64 {
        let at_most = self.samples.partition_point(|&x| x <= t) as u64;
        (self.trials - at_most) as f64 / self.trials as f64
    }

    pub fn mean(&self) -> Option<f64> {
        (self.converged() == self.trials)
            .then(|| self.samples.iter().sum::<u64>() as f64 / self.trials as f64)
    }

    pub fn std_error(&self) -> Option<f64> {
        let m = self.mean()?;
        let n = self.trials as f64;
        if self.trials < 2 {
            return Some(0.0);
        }
        let var = self.samples.iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / (n - 1.0);
        Some((var / n).sqrt())
    }

    /// Smallest `t` with `P[cover <= t] >= p` (nearest rank). Fails when the
    /// requested tail is finer than `1/trials` or falls among non-converged trials.
    pub fn quantile(&self, p: f64) -> Result<u64, FloodError> {
        let needed = (1.0 / (1.0 - p).max(f64::MIN_POSITIVE)).ceil() as u64;
        if !(0.0..1.0).contains(&p) || needed > self.trials {
            return Err(FloodError::InsufficientTrials { needed, have: self.trials });
        }
        let rank = ((p * self.trials as f64).ceil() as u64).max(1);
        self.samples
            .get(rank as usize - 1)
            .copied()
            .ok_or(FloodError::InsufficientTrials { needed: rank, have: self.converged() })
    }

    /// Smallest observed `t` with `P[cover > t] <= target`, else a
    /// least-squares fit of `ln P[cover > t]` over the upper decile.
    pub fn tail_round(&self, target: f64) -> Result<Extrapolation, FloodError> {
        if let Some(&t) = self.samples.iter().find(|&&t| self.survival(t) <= target) {
            if self.survival(t) > 0.0 || target * self.trials as f64 >= 1.0 {
                return Ok(Extrapolation { t: t as f64, slope: 0.0, intercept: 0.0, fit_range: (t, t), extrapolated: false });
            }
        }
        let lo = self.quantile(0.9)?;
        let hi = *self.samples.last().ok_or(FloodError::InsufficientTrials { needed: 1, have: 0 })?;
        let pts: Vec<(f64, f64)> =
            (lo..hi).map(|t| (t as f64, self.survival(t))).filter(|&(_, s)| s > 0.0).map(|(t, s)| (t, s.ln())).collect();
        if pts.len() < 2 {
            return Err(FloodError::InsufficientTrials { needed: 10 * self.trials, have: self.trials });
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        if !(slope < 0.0) {
            return Err(FloodError::InsufficientTrials { needed: 10 * self.trials, have: self.trials });
        }
        let intercept = my - slope * mx;
        Ok(Extrapolation { t: (target.ln() - intercept) / slope, slope, intercept, fit_range: (lo, hi), extrapolated: true })
    }

    /// The round by which the message arrives with probability at least
    /// `1 - δ q^{-k}`.
    pub fn budget_round(&self, delta: f64, q: u64, k: u32) -> Result<Extrapolation, FloodError> {
        self.tail_round(delta * (q as f64).powi(-(k as i32)))
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "t,survival_probability")?;
        let end = self.samples.last().copied().unwrap_or(0);
        for t in 0..=end {
            writeln!(out, "{t},{}", self.survival(t))?;
        }
        Ok(())
    }
}

/// Independent faulty-flooding trials, seeded per trial and run in
/// parallel; the result does not depend on the worker count.
#[allow(clippy::too_many_arguments)]
pub fn estimate_tail<F>(
    model: CommModel,
    options: &FloodOptions,
    make_adversary: F,
    n: usize,
    sources: &[usize],
    trials: u64,
    seed: u64,
    max_rounds: u64,
) -> Result<CoverTimeDistribution, FloodError>
where
    F: Fn(u64) -> Adversary + Sync,
{
    if trials == 0 {
        return Err(FloodError::NoTrials);
    }
    let results: Result<Vec<Option<u64>>, FloodError> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let ts = trial_seed(seed, trial);
            let mut rng = stream_rng(ts, Stream::Protocol);
            let mut adv = make_adversary(ts);
            faulty_flood(model, options, &mut adv, n, sources, &mut rng, max_rounds)
        })
        .collect();
    CoverTimeDistribution::from_samples(results?.into_iter().flatten().collect(), trials, max_rounds)
}
