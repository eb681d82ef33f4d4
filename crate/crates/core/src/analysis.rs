//! Tail machinery: binomial failure tails, pipelining round budgets, the
//! weighted Bernoulli bound and the worst-case PULL constants.

use rand::Rng;
use serde::Serialize;

use crate::error::AnalysisError;

/// A probability with its log and an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailValue {
    pub value: f64,
    pub ln_value: f64,
    pub error_bound: f64,
}

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(self) -> f64 {
        self.sum + self.c
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut acc = Compensated::default();
    for i in 0..k {
        acc.add(((n - i) as f64).ln() - ((i + 1) as f64).ln());
    }
    acc.total()
}

/// Probability of at least `t - T` failures in `t` independent trials that
/// each fail with probability `p`.
///
/// Terms are formed in log space relative to the largest one and summed with
/// compensation, so tails far below `f64::MIN_POSITIVE` keep their log.
pub fn negbin_tail_exact(t: u64, big_t: u64, p: f64) -> Result<TailValue, AnalysisError> {
    if big_t > t {
        return Err(AnalysisError::DomainError(format!("T = {big_t} exceeds t = {t}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(AnalysisError::DomainError(format!("p = {p} outside (0, 1)")));
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let lo = t - big_t;
    let mut logs = Vec::with_capacity((big_t + 1) as usize);
    let mut lc = ln_choose(t, lo);
    for i in lo..=t {
        logs.push(lc + i as f64 * lp + (t - i) as f64 * lq);
        if i < t {
            lc += ((t - i) as f64).ln() - ((i + 1) as f64).ln();
        }
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = Compensated::default();
    for &l in &logs {
        acc.add((l - top).exp());
    }
    let scaled = acc.total();
    let ln_value = top + scaled.ln();
    let value = ln_value.exp();
    // each log term carries O(t) rounding steps of relative size eps
    let rel = (t as f64 + 8.0) * 4.0 * f64::EPSILON;
    Ok(TailValue { value, ln_value, error_bound: value * rel })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineConstants {
    /// Multiplier of `T`.
    pub c: f64,
}

impl Default for PipelineConstants {
    fn default() -> Self {
        PipelineConstants { c: 8.0 }
    }
}

/// Leading coefficient of `k` when each message slot fails with probability
/// `p` over `F_q`: `ln q / ln(1/p)`, which is 1 at `p = 1/q`.
pub fn pipelining_coefficient(p: f64, q: f64) -> Result<f64, AnalysisError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(AnalysisError::DomainError(format!("p = {p} outside (0, 1)")));
    }
    if !(q >= 2.0) {
        return Err(AnalysisError::DomainError(format!("q = {q} below 2")));
    }
    Ok(q.ln() / -p.ln())
}

/// Round budget `coefficient · k + C·T + d`, rounded up.
pub fn pipelining_rounds(k: u64, big_t: f64, p: f64, q: f64, d: u64, constants: PipelineConstants) -> Result<u64, AnalysisError> {
    let coef = pipelining_coefficient(p, q)?;
    if !(big_t >= 0.0) {
        return Err(AnalysisError::DomainError(format!("T = {big_t} is negative")));
    }
    let t = coef * k as f64 + constants.c * big_t + d as f64;
    // exact products such as 1.0 * k must not round up past the integer
    Ok((t - 1e-9 * t.max(1.0)).ceil().max(0.0) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernoulliCheck {
    pub empirical: f64,
    pub bound_p: f64,
    pub sigma: f64,
    pub trials: u64,
    pub pass: bool,
}

/// Monte Carlo estimate of `P[Σ w_j X_j <= (1 - p) Σ w_j / 4]` with
/// `X_j` i.i.d. and `P[X_j = 0] = p`; passes when it is at most `p + 3σ`.
pub fn weighted_bernoulli_bound_check<R: Rng + ?Sized>(
    weights: &[f64],
    p: f64,
    trials: u64,
    rng: &mut R,
) -> Result<BernoulliCheck, AnalysisError> {
    if weights.is_empty() {
        return Err(AnalysisError::EmptyWeights);
    }
    if let Some(w) = weights.iter().find(|&&w| !(w > 0.0)) {
        return Err(AnalysisError::DomainError(format!("weight {w} is not positive")));
    }
    if !(p > 0.0 && p <= 0.5) {
        return Err(AnalysisError::DomainError(format!("p = {p} outside (0, 1/2]")));
    }
    if trials == 0 {
        return Err(AnalysisError::DomainError("trials must be positive".into()));
    }
    let total: f64 = weights.iter().sum();
    let threshold = 0.25 * (1.0 - p) * total;
    let mut hits = 0u64;
    for _ in 0..trials {
        let s: f64 = weights.iter().filter(|_| !rng.gen_bool(p)).sum();
        hits += (s <= threshold) as u64;
    }
    let empirical = hits as f64 / trials as f64;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    Ok(BernoulliCheck { empirical, bound_p: p, sigma, trials, pass: empirical <= p + 3.0 * sigma })
}

/// Leading constants of the PULL stopping time over `k` when every message
/// starts at `i` nodes: the information-theoretic `1/(1 - e^{-i})` and the
/// upper `ln q / -ln(e^{-i} + (1 - e^{-i})/q)`.
pub fn worst_case_pull_constants(i: f64, q: f64) -> Result<(f64, f64), AnalysisError> {
    if !(i >= 1.0) {
        return Err(AnalysisError::DomainError(format!("i = {i} below 1")));
    }
    if !(q >= 2.0) {
        return Err(AnalysisError::DomainError(format!("q = {q} below 2")));
    }
    let miss = (-i).exp();
    let lower = 1.0 / -(-i).exp_m1();
    let fail = miss + (1.0 - miss) / q;
    let upper = pipelining_coefficient(fail, q)?;
    Ok((lower, upper))
}

/// Smallest `t >= k + T` solving `t = k + T + (T+1) ln t / ln(1/p)`,
/// found by monotone fixed-point iteration.
pub fn pipelined_tail_rounds(k: u64, big_t: u64, p: f64) -> Result<f64, AnalysisError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(AnalysisError::DomainError(format!("p = {p} outside (0, 1)")));
    }
    let a = (big_t + 1) as f64 / -p.ln();
    let base = (k + big_t) as f64;
    let mut t = base.max(1.0);
    for _ in 0..10_000 {
        let next = base + a * t.ln();
        if (next - t).abs() <= 1e-12 * t {
            return Ok(next);
        }
        t = next;
    }
    Err(AnalysisError::DomainError(format!("no fixed point for k={k}, T={big_t}, p={p}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBoundPoint {
    pub k: u64,
    pub big_t: u64,
    pub p: f64,
    pub t: u64,
    pub ln_tail: f64,
    pub ln_bound: f64,
    /// Whether `-ln p >= c ln t` holds for the requested `c`.
    pub in_regime: bool,
    pub pass: bool,
}

/// Checks `P[>= t - T failures in t trials] <= p^k` at `t = ⌈pipelined_tail_rounds⌉`.
pub fn tail_bound_check(k: u64, big_t: u64, p: f64, side_c: f64) -> Result<TailBoundPoint, AnalysisError> {
    let t = pipelined_tail_rounds(k, big_t, p)?.ceil() as u64;
    let tail = negbin_tail_exact(t, big_t, p)?;
    let ln_bound = k as f64 * p.ln();
    let slack = tail.error_bound / tail.value.max(f64::MIN_POSITIVE);
    Ok(TailBoundPoint {
        k,
        big_t,
        p,
        t,
        ln_tail: tail.ln_value,
        ln_bound,
        in_regime: -p.ln() >= side_c * (t as f64).ln(),
        pass: tail.ln_value <= ln_bound + slack,
    })
}
