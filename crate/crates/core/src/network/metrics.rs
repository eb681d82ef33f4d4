//! Cut metrics: min-cut γ, isoperimetric number h and conductance λ.
//!
//! Weighted metrics run on integers when all weights share a denominator
//! small enough for `u128` (the case for every induced graph) and fall back
//! to `f64` otherwise.

use std::ops::{Add, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use super::flow::FlowNetwork;
use super::{ratio, GraphFamily, Topology};
use crate::error::NetworkError;

/// Subset enumeration is capped at `2^EXACT_LIMIT` sets.
pub const EXACT_LIMIT: usize = 20;

pub(crate) trait Mass: Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> {
    fn zero() -> Self;
    fn one_unit() -> Self;
    fn is_positive(self) -> bool;
    fn times(self, k: usize) -> Self;
    fn min(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }
}

impl Mass for u128 {
    fn zero() -> Self {
        0
    }
    fn one_unit() -> Self {
        1
    }
    fn is_positive(self) -> bool {
        self > 0
    }
    fn times(self, k: usize) -> Self {
        self * k as u128
    }
}

impl Mass for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one_unit() -> Self {
        1.0
    }
    fn is_positive(self) -> bool {
        self > 1e-15
    }
    fn times(self, k: usize) -> Self {
        self * k as f64
    }
}

/// A metric value with the minimizing vertex set.
#[derive(Debug, Clone, PartialEq)]
pub struct CutMetric {
    pub value: f64,
    /// Exact value when the computation ran on rationals.
    pub exact: Option<BigRational>,
    /// A minimizing set `S`.
    pub witness: Vec<usize>,
}

enum Arcs {
    Exact { arcs: Vec<(usize, usize, u128)>, denominator: BigInt },
    Float(Vec<(usize, usize, f64)>),
}

fn scaled_arcs(g: &Topology) -> Result<Arcs, NetworkError> {
    let arcs = g.weighted_arcs().ok_or(NetworkError::Unweighted)?;
    let denominator = arcs.iter().fold(BigInt::one(), |acc, (_, _, w)| acc.lcm(w.denom()));
    let scaled: Option<Vec<(usize, usize, u128)>> = arcs
        .iter()
        .map(|(a, b, w)| (w.numer() * (&denominator / w.denom())).to_u128().map(|x| (*a, *b, x)))
        .collect();
    if let Some(scaled) = scaled {
        let total: Option<u128> = scaled.iter().try_fold(0u128, |acc, &(_, _, w)| acc.checked_add(w));
        // leave room for multiplying by set sizes
        if total.is_some_and(|t| t < (1u128 << 100)) {
            return Ok(Arcs::Exact { arcs: scaled, denominator });
        }
    }
    Ok(Arcs::Float(arcs.iter().map(|(a, b, w)| (*a, *b, w.to_f64().unwrap_or(0.0))).collect()))
}

fn mask_members(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|&v| mask >> v & 1 == 1).collect()
}

fn check_exact_size(n: usize) -> Result<(), NetworkError> {
    if n < 2 {
        return Err(NetworkError::EmptyGraph);
    }
    if n > EXACT_LIMIT {
        return Err(NetworkError::TooLargeForExact { n, limit: EXACT_LIMIT });
    }
    Ok(())
}

/// `cut[mask]` = total weight of arcs leaving `mask`.
fn cut_table<W: Mass>(n: usize, arcs: &[(usize, usize, W)]) -> Vec<W> {
    let mut out_arcs = vec![Vec::new(); n];
    let mut in_arcs = vec![Vec::new(); n];
    let mut out_total = vec![W::zero(); n];
    for &(a, b, w) in arcs {
        out_arcs[a].push((b, w));
        in_arcs[b].push((a, w));
        out_total[a] = out_total[a] + w;
    }
    let size = 1usize << n;
    let mut cut = vec![W::zero(); size];
    for mask in 1..size {
        let v = mask.trailing_zeros() as usize;
        let prev = mask & (mask - 1);
        let mut internal = W::zero();
        for &(b, w) in &out_arcs[v] {
            if prev >> b & 1 == 1 {
                internal = internal + w;
            }
        }
        for &(a, w) in &in_arcs[v] {
            if prev >> a & 1 == 1 {
                internal = internal + w;
            }
        }
        cut[mask] = cut[prev] + out_total[v] - internal;
    }
    cut
}

/// `(best value, best mask)` of `cut[S] / divisor(|S|)` over nonempty proper `S`.
fn minimize<W: Mass>(n: usize, cut: &[W], divisor: impl Fn(usize) -> usize) -> (W, usize, u32) {
    let full = (1u32 << n) - 1;
    let mut best: Option<(W, usize, u32)> = None;
    for mask in 1..full {
        let s = mask.count_ones() as usize;
        let d = divisor(s);
        let c = cut[mask as usize];
        let better = match best {
            None => true,
            Some((bc, bd, _)) => c.times(bd) < bc.times(d),
        };
        if better {
            best = Some((c, d, mask));
        }
    }
    best.expect("n >= 2")
}

fn finish(arcs: &Arcs, value_num: (u128, usize), value_f: (f64, usize), witness: Vec<usize>) -> CutMetric {
    match arcs {
        Arcs::Exact { denominator, .. } => {
            let exact = BigRational::new(BigInt::from(value_num.0), denominator * BigInt::from(value_num.1));
            CutMetric { value: exact.to_f64().unwrap_or(f64::NAN), exact: Some(exact), witness }
        }
        Arcs::Float(_) => CutMetric { value: value_f.0 / value_f.1 as f64, exact: None, witness },
    }
}

/// γ by enumerating every nonempty proper subset (`n <= 20`).
pub fn min_cut_gamma_brute_force(g: &Topology) -> Result<CutMetric, NetworkError> {
    let n = g.n();
    check_exact_size(n)?;
    let arcs = scaled_arcs(g)?;
    Ok(match &arcs {
        Arcs::Exact { arcs: a, .. } => {
            let (c, _, mask) = minimize(n, &cut_table(n, a), |_| 1);
            finish(&arcs, (c, 1), (0.0, 1), mask_members(mask, n))
        }
        Arcs::Float(a) => {
            let (c, _, mask) = minimize(n, &cut_table(n, a), |_| 1);
            finish(&arcs, (0, 1), (c, 1), mask_members(mask, n))
        }
    })
}

fn gamma_flow<W: Mass>(n: usize, arcs: &[(usize, usize, W)]) -> (W, Vec<usize>) {
    let mut best: Option<(W, Vec<usize>)> = None;
    for t in 1..n {
        for (s, sink) in [(0, t), (t, 0)] {
            let mut net = FlowNetwork::new(n, arcs);
            let f = net.max_flow(s, sink);
            if best.as_ref().is_none_or(|(b, _)| f < *b) {
                best = Some((f, net.source_side(s)));
            }
        }
    }
    best.expect("n >= 2")
}

/// γ as the minimum over `t` of the `0 -> t` and `t -> 0` max-flows.
pub fn min_cut_gamma_max_flow(g: &Topology) -> Result<CutMetric, NetworkError> {
    let n = g.n();
    if n < 2 {
        return Err(NetworkError::EmptyGraph);
    }
    let arcs = scaled_arcs(g)?;
    Ok(match &arcs {
        Arcs::Exact { arcs: a, .. } => {
            let (c, w) = gamma_flow(n, a);
            finish(&arcs, (c, 1), (0.0, 1), w)
        }
        Arcs::Float(a) => {
            let (c, w) = gamma_flow(n, a);
            finish(&arcs, (0, 1), (c, 1), w)
        }
    })
}

/// Minimum total probability mass leaving a nonempty proper vertex subset.
pub fn min_cut_gamma(g: &Topology) -> Result<CutMetric, NetworkError> {
    min_cut_gamma_max_flow(g)
}

/// Weighted conductance λ by subset enumeration (`n <= 20`).
pub fn conductance_lambda(g: &Topology) -> Result<CutMetric, NetworkError> {
    let n = g.n();
    check_exact_size(n)?;
    let arcs = scaled_arcs(g)?;
    let side = |s: usize| s.min(n - s);
    Ok(match &arcs {
        Arcs::Exact { arcs: a, .. } => {
            let (c, d, mask) = minimize(n, &cut_table(n, a), side);
            finish(&arcs, (c, d), (0.0, 1), mask_members(mask, n))
        }
        Arcs::Float(a) => {
            let (c, d, mask) = minimize(n, &cut_table(n, a), side);
            finish(&arcs, (0, 1), (c, d), mask_members(mask, n))
        }
    })
}

/// Isoperimetric number `min_S |Γ⁺(S)| / min(|S|, |S̄|)` by subset
/// enumeration (`n <= 20`). Weights are ignored.
pub fn isoperimetric_h(g: &Topology) -> Result<CutMetric, NetworkError> {
    let n = g.n();
    check_exact_size(n)?;
    let adj: Vec<u32> = (0..n).map(|v| g.out_neighbors(v).iter().fold(0u32, |m, &u| m | 1 << u)).collect();
    let size = 1usize << n;
    let mut reach = vec![0u32; size];
    let full = (size - 1) as u32;
    let mut best: Option<(u32, usize, u32)> = None;
    for mask in 1..size {
        let v = mask.trailing_zeros() as usize;
        reach[mask] = reach[mask & (mask - 1)] | adj[v];
        let m = mask as u32;
        if m == full {
            continue;
        }
        let boundary = (reach[mask] & !m).count_ones();
        let s = m.count_ones() as usize;
        let d = s.min(n - s);
        let better = match best {
            None => true,
            Some((bb, bd, _)) => (boundary as usize) * bd < (bb as usize) * d,
        };
        if better {
            best = Some((boundary, d, m));
        }
    }
    let (b, d, mask) = best.expect("n >= 2");
    let exact = ratio(b as i64, d as i64);
    Ok(CutMetric { value: exact.to_f64().unwrap_or(f64::NAN), exact: Some(exact), witness: mask_members(mask, n) })
}

fn family_metric(exact: BigRational, witness: Vec<usize>) -> CutMetric {
    CutMetric { value: exact.to_f64().unwrap_or(f64::NAN), exact: Some(exact), witness }
}

/// Hypercube vertices in simplicial order: by weight, then by the lowest
/// differing coordinate belonging to the earlier vertex.
fn simplicial_order(d: u32) -> Vec<usize> {
    let mut order: Vec<usize> = (0..1usize << d).collect();
    order.sort_by(|&x, &y| {
        x.count_ones().cmp(&y.count_ones()).then_with(|| {
            if x == y {
                std::cmp::Ordering::Equal
            } else {
                let low = (x ^ y).trailing_zeros();
                if x >> low & 1 == 1 {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Greater
                }
            }
        })
    });
    order
}

/// h of the `d`-cube from Harper's vertex-isoperimetric theorem: initial
/// segments of the simplicial order minimize the vertex boundary for each size.
fn hypercube_h(n: usize) -> (BigRational, Vec<usize>) {
    let d = n.trailing_zeros();
    let order = simplicial_order(d);
    let mut in_set = vec![false; n];
    // closed-neighborhood multiplicity of each vertex
    let mut covered = vec![0u32; n];
    let mut closed = 0usize;
    let mut best: Option<(usize, usize, usize)> = None;
    for (i, &v) in order.iter().enumerate().take(n - 1) {
        in_set[v] = true;
        for u in std::iter::once(v).chain((0..d).map(|b| v ^ (1 << b))) {
            if covered[u] == 0 {
                closed += 1;
            }
            covered[u] += 1;
        }
        let s = i + 1;
        let boundary = closed - s;
        let div = s.min(n - s);
        if best.is_none_or(|(bb, bd, _)| boundary * bd < bb * div) {
            best = Some((boundary, div, s));
        }
    }
    let (b, div, s) = best.expect("n >= 2");
    let mut witness: Vec<usize> = order[..s].to_vec();
    witness.sort_unstable();
    (ratio(b as i64, div as i64), witness)
}

/// Closed-form h for catalog families at any size.
pub fn isoperimetric_h_family(family: &GraphFamily, n: usize) -> Result<CutMetric, NetworkError> {
    if n < 2 {
        return Err(NetworkError::EmptyGraph);
    }
    let half = (n / 2) as i64;
    let prefix = |s: usize| (0..s).collect::<Vec<_>>();
    Ok(match family {
        GraphFamily::Complete => family_metric(ratio(1, 1), prefix(half as usize)),
        GraphFamily::Ring if n == 3 => family_metric(ratio(1, 1), prefix(2)),
        GraphFamily::Ring => family_metric(ratio(2, half), prefix(half as usize)),
        GraphFamily::Line => family_metric(ratio(1, half), prefix(half as usize)),
        GraphFamily::Star => family_metric(ratio(1, half), (1..=half as usize).collect()),
        GraphFamily::Hypercube if n.is_power_of_two() => {
            let (h, w) = hypercube_h(n);
            family_metric(h, w)
        }
        GraphFamily::Barbell { clique_size } if n == 2 * clique_size => {
            family_metric(ratio(1, *clique_size as i64), prefix(*clique_size))
        }
        other => {
            return Err(NetworkError::InvalidFamily(format!("no closed form for h of {} on {n} nodes", other.name())))
        }
    })
}

/// Closed-form λ for catalog families under EXCHANGE-induced weights.
pub fn conductance_lambda_family(family: &GraphFamily, n: usize) -> Result<CutMetric, NetworkError> {
    if n < 2 {
        return Err(NetworkError::EmptyGraph);
    }
    let ni = n as i64;
    let half = ni / 2;
    let prefix = |s: usize| (0..s).collect::<Vec<_>>();
    Ok(match family {
        // |S| = floor(n/2): floor(n/2) * ceil(n/2) edges of weight 2/(n(n-1))
        GraphFamily::Complete => family_metric(ratio(2 * (ni - half), ni * (ni - 1)), prefix(half as usize)),
        // two edges of weight 1/n around an arc
        GraphFamily::Ring if n >= 3 => family_metric(ratio(2, ni * half), prefix(half as usize)),
        GraphFamily::Line if n == 2 => family_metric(ratio(1, 1), vec![0]),
        GraphFamily::Line if n == 3 => family_metric(ratio(1, 2), vec![0]),
        // the middle edge joins two degree-2 nodes
        GraphFamily::Line => family_metric(ratio(1, ni * half), prefix(half as usize)),
        // every spoke weighs 1/n + 1/(n(n-1)) = 1/(n-1)
        GraphFamily::Star => family_metric(ratio(1, ni - 1), vec![1]),
        GraphFamily::Hypercube if n.is_power_of_two() => {
            // edge expansion of the cube is 1, each edge weighs 2/(n d)
            let d = n.trailing_zeros() as i64;
            let half_cube: Vec<usize> = (0..n).filter(|v| v >> (d - 1) & 1 == 0).collect();
            family_metric(ratio(2, ni * d), half_cube)
        }
        GraphFamily::Barbell { clique_size } if n == 2 * clique_size => {
            let m = *clique_size as i64;
            family_metric(ratio(2, ni * m * m), prefix(*clique_size))
        }
        other => {
            return Err(NetworkError::InvalidFamily(format!("no closed form for λ of {} on {n} nodes", other.name())))
        }
    })
}
