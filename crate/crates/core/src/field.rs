//! Exact arithmetic in finite fields `F_q`.
//!
//! Prime fields use modular arithmetic on `u64` intermediates. Extension
//! fields (`2^d` and odd `p^d`) are table driven: elements are encoded as
//! base-`p` digit strings of polynomial coefficients and multiplied through
//! log/exp tables built from a generator of the multiplicative group.
//!
//! `GF(2)` vectors get a bit-packed representation in [`FieldVector`].

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::FieldError;

/// Largest order accepted for table-backed extension fields.
pub const MAX_TABLE_ORDER: u32 = 1 << 16;
/// Prime fields are supported up to (excluding) this bound.
pub const MAX_PRIME: u64 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    Prime,
    /// `q = 2^degree`; `polynomial` holds the modulus bits including the leading term.
    BinaryExtension { degree: u32, polynomial: u32 },
    /// `q = p^degree`; `polynomial` is the monic modulus, lowest coefficient first.
    PrimePower { p: u32, degree: u32, polynomial: Vec<u32> },
}

/// An element of some `F_q`, always in canonical form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct FieldElement(u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn value(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

#[derive(Debug)]
struct Tables {
    log: Vec<u32>,
    // Doubled so that `exp[log a + log b]` never needs a reduction.
    exp: Vec<u32>,
}

#[derive(Debug)]
struct Inner {
    q: u32,
    p: u32,
    degree: u32,
    kind: FieldKind,
    tables: Option<Tables>,
}

/// A finite field description. Cheap to clone and safe to share between threads.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    inner: Arc<Inner>,
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.inner.q == other.inner.q && self.inner.kind == other.inner.kind
    }
}

impl Eq for FieldSpec {}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.inner.q)
    }
}

/// Builds `F_q`, choosing the lexicographically smallest monic irreducible
/// modulus for extension fields.
pub fn make_field(q: u64) -> Result<FieldSpec, FieldError> {
    if q < 2 {
        return Err(FieldError::InvalidOrder(q));
    }
    let (p, degree) = prime_power_decomposition(q).ok_or(FieldError::NotPrimePower(q))?;
    if degree == 1 {
        if p >= MAX_PRIME {
            return Err(FieldError::Unsupported(q));
        }
        return Ok(FieldSpec {
            inner: Arc::new(Inner { q: q as u32, p: q as u32, degree: 1, kind: FieldKind::Prime, tables: None }),
        });
    }
    if q > MAX_TABLE_ORDER as u64 {
        return Err(FieldError::Unsupported(q));
    }
    let (p, q) = (p as u32, q as u32);
    let modulus = smallest_irreducible(p, degree);
    let tables = build_tables(p, degree, &modulus);
    let kind = if p == 2 {
        let bits = modulus.iter().enumerate().fold(0u32, |acc, (i, &c)| acc | (c << i));
        FieldKind::BinaryExtension { degree, polynomial: bits }
    } else {
        FieldKind::PrimePower { p, degree, polynomial: modulus }
    };
    Ok(FieldSpec { inner: Arc::new(Inner { q, p, degree, kind, tables: Some(tables) }) })
}

impl FieldSpec {
    pub fn order(&self) -> u32 {
        self.inner.q
    }

    pub fn characteristic(&self) -> u32 {
        self.inner.p
    }

    pub fn degree(&self) -> u32 {
        self.inner.degree
    }

    pub fn kind(&self) -> &FieldKind {
        &self.inner.kind
    }

    /// True for `GF(2)`, which uses the bit-packed vector path.
    pub fn is_binary(&self) -> bool {
        self.inner.q == 2
    }

    pub fn element(&self, value: u32) -> Result<FieldElement, FieldError> {
        if value < self.inner.q {
            Ok(FieldElement(value))
        } else {
            Err(FieldError::OutOfRange { value, q: self.inner.q })
        }
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement::ZERO
    }

    pub fn one(&self) -> FieldElement {
        FieldElement::ONE
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.inner.q).map(FieldElement)
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement(rng.gen_range(0..self.inner.q))
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(self.add_raw(a.0, b.0))
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        FieldElement(self.neg_raw(a.0))
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(self.mul_raw(a.0, b.0))
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if a.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        Ok(FieldElement(self.inv_raw(a.0)))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: FieldElement, mut e: u64) -> FieldElement {
        let mut base = a;
        let mut acc = FieldElement::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// `Σ u_i v_i`.
    pub fn dot(&self, u: &[FieldElement], v: &[FieldElement]) -> Result<FieldElement, FieldError> {
        if u.len() != v.len() {
            return Err(FieldError::LengthMismatch { left: u.len(), right: v.len() });
        }
        Ok(u.iter().zip(v).fold(FieldElement::ZERO, |acc, (&a, &b)| self.add(acc, self.mul(a, b))))
    }

    #[inline]
    pub(crate) fn add_raw(&self, a: u32, b: u32) -> u32 {
        let inner = &*self.inner;
        match inner.kind {
            FieldKind::Prime => {
                let s = a as u64 + b as u64;
                let q = inner.q as u64;
                (if s >= q { s - q } else { s }) as u32
            }
            FieldKind::BinaryExtension { .. } => a ^ b,
            FieldKind::PrimePower { p, .. } => digitwise(a, b, p, |x, y| (x + y) % p),
        }
    }

    #[inline]
    pub(crate) fn neg_raw(&self, a: u32) -> u32 {
        let inner = &*self.inner;
        match inner.kind {
            FieldKind::Prime => {
                if a == 0 {
                    0
                } else {
                    inner.q - a
                }
            }
            FieldKind::BinaryExtension { .. } => a,
            FieldKind::PrimePower { p, .. } => digitwise(a, 0, p, |x, _| (p - x) % p),
        }
    }

    #[inline]
    pub(crate) fn mul_raw(&self, a: u32, b: u32) -> u32 {
        let inner = &*self.inner;
        match &inner.tables {
            None => ((a as u64 * b as u64) % inner.q as u64) as u32,
            Some(t) => {
                if a == 0 || b == 0 {
                    0
                } else {
                    t.exp[(t.log[a as usize] + t.log[b as usize]) as usize]
                }
            }
        }
    }

    pub(crate) fn inv_raw(&self, a: u32) -> u32 {
        debug_assert!(a != 0);
        let inner = &*self.inner;
        match &inner.tables {
            None => mod_inverse(a as u64, inner.q as u64) as u32,
            Some(t) => {
                let l = t.log[a as usize];
                let order = inner.q - 1;
                t.exp[((order - l) % order) as usize]
            }
        }
    }
}

fn digitwise(mut a: u32, mut b: u32, p: u32, op: impl Fn(u32, u32) -> u32) -> u32 {
    let mut out = 0;
    let mut place = 1;
    while a > 0 || b > 0 {
        out += op(a % p, b % p) * place;
        a /= p;
        b /= p;
        place *= p;
    }
    out
}

fn mod_inverse(a: u64, m: u64) -> u64 {
    let (mut old_r, mut r) = (a as i64, m as i64);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    old_s.rem_euclid(m as i64) as u64
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Returns `(p, d)` with `q = p^d`, or `None` when `q` has two distinct prime factors.
pub fn prime_power_decomposition(q: u64) -> Option<(u64, u32)> {
    let factors = prime_factors(q);
    if factors.len() != 1 {
        return None;
    }
    let p = factors[0];
    let mut d = 0;
    let mut rest = q;
    while rest > 1 {
        rest /= p;
        d += 1;
    }
    Some((p, d))
}

// Polynomials over F_p, lowest coefficient first, no trailing zeros except for the zero polynomial.

fn trim(mut a: Vec<u32>) -> Vec<u32> {
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
    a
}

fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    let dm = m.len() - 1;
    let lead_inv = mod_inverse(m[dm] as u64, p as u64) as u32;
    while r.len() > dm && !(r.len() == 1 && r[0] == 0) {
        let shift = r.len() - 1 - dm;
        let factor = (r[r.len() - 1] as u64 * lead_inv as u64 % p as u64) as u32;
        if factor != 0 {
            for (i, &c) in m.iter().enumerate() {
                let idx = shift + i;
                r[idx] = ((r[idx] as u64 + (p - factor) as u64 * c as u64) % p as u64) as u32;
            }
        }
        r.pop();
        if r.is_empty() {
            r.push(0);
        }
    }
    trim(r)
}

fn poly_mul_mod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut prod = vec![0u32; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = ((prod[i + j] as u64 + x as u64 * y as u64) % p as u64) as u32;
        }
    }
    poly_rem(&trim(prod), m, p)
}

fn monic_from_index(index: u64, p: u32, degree: u32) -> Vec<u32> {
    let mut coeffs = Vec::with_capacity(degree as usize + 1);
    let mut rest = index;
    for _ in 0..degree {
        coeffs.push((rest % p as u64) as u32);
        rest /= p as u64;
    }
    coeffs.push(1);
    coeffs
}

/// Exhaustive factor test: no monic factor of degree `1..=deg/2`.
pub(crate) fn is_irreducible(poly: &[u32], p: u32) -> bool {
    let degree = (poly.len() - 1) as u32;
    if degree == 0 {
        return false;
    }
    for d in 1..=degree / 2 {
        let count = (p as u64).pow(d);
        for idx in 0..count {
            let divisor = monic_from_index(idx, p, d);
            let r = poly_rem(poly, &divisor, p);
            if r.len() == 1 && r[0] == 0 {
                return false;
            }
        }
    }
    true
}

/// Smallest monic irreducible polynomial of the given degree, ordering
/// polynomials by their coefficient string read from the top degree down.
pub(crate) fn smallest_irreducible(p: u32, degree: u32) -> Vec<u32> {
    let count = (p as u64).pow(degree);
    (0..count)
        .map(|idx| monic_from_index(idx, p, degree))
        .find(|poly| is_irreducible(poly, p))
        .expect("irreducible polynomials exist in every degree")
}

fn encode(poly: &[u32], p: u32) -> u32 {
    poly.iter().rev().fold(0, |acc, &c| acc * p + c)
}

fn decode(mut value: u32, p: u32, degree: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(degree as usize);
    for _ in 0..degree {
        out.push(value % p);
        value /= p;
    }
    trim(out)
}

fn build_tables(p: u32, degree: u32, modulus: &[u32]) -> Tables {
    let q = p.pow(degree);
    let order = (q - 1) as u64;
    let factors = prime_factors(order);
    let mul = |a: u32, b: u32| encode(&poly_mul_mod(&decode(a, p, degree), &decode(b, p, degree), modulus, p), p);
    let pow = |a: u32, mut e: u64| {
        let (mut base, mut acc) = (a, 1u32);
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, base);
            }
            base = mul(base, base);
            e >>= 1;
        }
        acc
    };
    let generator = (2..q)
        .find(|&g| factors.iter().all(|&r| pow(g, order / r) != 1))
        .unwrap_or(1);

    let mut exp = vec![0u32; 2 * (q as usize - 1)];
    let mut log = vec![0u32; q as usize];
    let mut x = 1u32;
    for i in 0..(q - 1) {
        exp[i as usize] = x;
        log[x as usize] = i;
        x = mul(x, generator);
    }
    for i in (q - 1)..(2 * (q - 1)) {
        exp[i as usize] = exp[(i - (q - 1)) as usize];
    }
    Tables { log, exp }
}

/// A vector over `F_q`: bit-packed for `GF(2)`, one `u32` per entry otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldVector {
    Packed { len: usize, words: Vec<u64> },
    Dense(Vec<u32>),
}

#[inline]
fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

impl FieldVector {
    pub fn zeros(field: &FieldSpec, len: usize) -> Self {
        if field.is_binary() {
            FieldVector::Packed { len, words: vec![0; word_count(len)] }
        } else {
            FieldVector::Dense(vec![0; len])
        }
    }

    pub fn unit(field: &FieldSpec, len: usize, index: usize) -> Self {
        let mut v = Self::zeros(field, len);
        v.set(index, FieldElement::ONE);
        v
    }

    pub fn from_elements(field: &FieldSpec, entries: &[FieldElement]) -> Self {
        let mut v = Self::zeros(field, entries.len());
        for (i, &e) in entries.iter().enumerate() {
            v.set(i, e);
        }
        v
    }

    /// Convenience constructor from raw values; panics on values `>= q`.
    pub fn from_values(field: &FieldSpec, values: &[u32]) -> Self {
        let entries: Vec<FieldElement> =
            values.iter().map(|&x| field.element(x).expect("value out of range")).collect();
        Self::from_elements(field, &entries)
    }

    pub fn random<R: Rng + ?Sized>(field: &FieldSpec, len: usize, rng: &mut R) -> Self {
        if field.is_binary() {
            let mut words: Vec<u64> = (0..word_count(len)).map(|_| rng.gen()).collect();
            mask_tail(&mut words, len);
            FieldVector::Packed { len, words }
        } else {
            FieldVector::Dense((0..len).map(|_| rng.gen_range(0..field.order())).collect())
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FieldVector::Packed { len, .. } => *len,
            FieldVector::Dense(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> FieldElement {
        match self {
            FieldVector::Packed { words, .. } => FieldElement(((words[i / 64] >> (i % 64)) & 1) as u32),
            FieldVector::Dense(v) => FieldElement(v[i]),
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: FieldElement) {
        match self {
            FieldVector::Packed { words, .. } => {
                let bit = 1u64 << (i % 64);
                if value.0 & 1 == 1 {
                    words[i / 64] |= bit;
                } else {
                    words[i / 64] &= !bit;
                }
            }
            FieldVector::Dense(v) => v[i] = value.0,
        }
    }

    pub fn to_elements(&self) -> Vec<FieldElement> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FieldVector::Packed { words, .. } => words.iter().all(|&w| w == 0),
            FieldVector::Dense(v) => v.iter().all(|&x| x == 0),
        }
    }

    /// Index of the first nonzero entry.
    pub fn leading(&self) -> Option<usize> {
        match self {
            FieldVector::Packed { words, .. } => words
                .iter()
                .enumerate()
                .find(|(_, &w)| w != 0)
                .map(|(i, &w)| i * 64 + w.trailing_zeros() as usize),
            FieldVector::Dense(v) => v.iter().position(|&x| x != 0),
        }
    }

    pub fn weight(&self) -> usize {
        match self {
            FieldVector::Packed { words, .. } => words.iter().map(|w| w.count_ones() as usize).sum(),
            FieldVector::Dense(v) => v.iter().filter(|&&x| x != 0).count(),
        }
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, field: &FieldSpec, c: FieldElement, other: &FieldVector) {
        if c.is_zero() {
            return;
        }
        match (self, other) {
            (FieldVector::Packed { words, .. }, FieldVector::Packed { words: rhs, .. }) => {
                for (a, b) in words.iter_mut().zip(rhs) {
                    *a ^= b;
                }
            }
            (FieldVector::Dense(a), FieldVector::Dense(b)) => {
                if c == FieldElement::ONE {
                    for (x, &y) in a.iter_mut().zip(b) {
                        *x = field.add_raw(*x, y);
                    }
                } else {
                    for (x, &y) in a.iter_mut().zip(b) {
                        if y != 0 {
                            *x = field.add_raw(*x, field.mul_raw(c.0, y));
                        }
                    }
                }
            }
            _ => panic!("mixed vector representations"),
        }
    }

    pub fn add_assign(&mut self, field: &FieldSpec, other: &FieldVector) {
        self.axpy(field, FieldElement::ONE, other);
    }

    pub fn scale(&mut self, field: &FieldSpec, c: FieldElement) {
        match self {
            FieldVector::Packed { words, .. } => {
                if c.is_zero() {
                    words.iter_mut().for_each(|w| *w = 0);
                }
            }
            FieldVector::Dense(v) => v.iter_mut().for_each(|x| *x = field.mul_raw(*x, c.0)),
        }
    }

    pub fn dot(&self, field: &FieldSpec, other: &FieldVector) -> Result<FieldElement, FieldError> {
        if self.len() != other.len() {
            return Err(FieldError::LengthMismatch { left: self.len(), right: other.len() });
        }
        Ok(self.dot_unchecked(field, other))
    }

    #[inline]
    pub(crate) fn dot_unchecked(&self, field: &FieldSpec, other: &FieldVector) -> FieldElement {
        match (self, other) {
            (FieldVector::Packed { words, .. }, FieldVector::Packed { words: rhs, .. }) => {
                let ones: u32 = words.iter().zip(rhs).map(|(a, b)| (a & b).count_ones()).sum();
                FieldElement(ones & 1)
            }
            (FieldVector::Dense(a), FieldVector::Dense(b)) => FieldElement(
                a.iter()
                    .zip(b)
                    .fold(0u32, |acc, (&x, &y)| field.add_raw(acc, field.mul_raw(x, y))),
            ),
            _ => panic!("mixed vector representations"),
        }
    }

    pub fn words(&self) -> Option<&[u64]> {
        match self {
            FieldVector::Packed { words, .. } => Some(words),
            FieldVector::Dense(_) => None,
        }
    }
}

fn mask_tail(words: &mut [u64], len: usize) {
    let rem = len % 64;
    if rem != 0 {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << rem) - 1;
        }
    }
}
