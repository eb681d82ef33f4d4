//! RLNC node state: coefficient subspaces kept in reduced row-echelon form,
//! uniform sampling from the span, the dual-vector knowledge predicate and
//! decoding.

use rand::Rng;

use crate::error::CodingError;
use crate::field::{FieldElement, FieldSpec, FieldVector};

/// Coefficient vector `μ ∈ F_q^k`.
pub type CoefficientVector = FieldVector;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub mu: CoefficientVector,
    pub payload: Option<FieldVector>,
}

impl Packet {
    pub fn zero(field: &FieldSpec, k: usize, payload_len: Option<usize>) -> Self {
        Packet {
            mu: FieldVector::zeros(field, k),
            payload: payload_len.map(|l| FieldVector::zeros(field, l)),
        }
    }
}

/// A subspace of `F_q^k` held as a reduced row-echelon basis.
///
/// Rows are stored in insertion order; `pivots[i]` is the pivot column of
/// `rows[i]`. Every pivot column is zero in all other rows.
#[derive(Debug, Clone)]
pub struct Subspace {
    field: FieldSpec,
    k: usize,
    rows: Vec<FieldVector>,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn new(field: &FieldSpec, k: usize) -> Self {
        Subspace { field: field.clone(), k, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn dimension(&self) -> usize {
        self.k
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.k
    }

    /// Basis rows ordered by pivot column.
    pub fn basis(&self) -> Vec<&FieldVector> {
        self.sorted_order().into_iter().map(|i| &self.rows[i]).collect()
    }

    /// Pivot columns in increasing order.
    pub fn pivots(&self) -> Vec<usize> {
        let mut p = self.pivots.clone();
        p.sort_unstable();
        p
    }

    /// Basis rows in storage order. Payload rows follow this order.
    pub fn rows(&self) -> &[FieldVector] {
        &self.rows
    }

    fn sorted_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.rows.len()).collect();
        idx.sort_unstable_by_key(|&i| self.pivots[i]);
        idx
    }

    fn check_len(&self, v: &FieldVector) -> Result<(), CodingError> {
        if v.len() != self.k {
            return Err(CodingError::LengthMismatch { expected: self.k, got: v.len() });
        }
        Ok(())
    }

    /// Eliminates `v` against the basis, mirroring every row operation on `payload`.
    fn reduce(&self, v: &mut FieldVector, mut payload: Option<(&mut FieldVector, &[FieldVector])>) {
        let field = &self.field;
        for (i, (row, &pivot)) in self.rows.iter().zip(&self.pivots).enumerate() {
            let c = v.get(pivot);
            if c.is_zero() {
                continue;
            }
            let factor = field.neg(c);
            v.axpy(field, factor, row);
            if let Some((p, rows)) = payload.as_mut() {
                p.axpy(field, factor, &rows[i]);
            }
        }
    }

    /// True if `v` lies in the span.
    pub fn contains(&self, v: &FieldVector) -> Result<bool, CodingError> {
        self.check_len(v)?;
        let mut w = v.clone();
        self.reduce(&mut w, None);
        Ok(w.is_zero())
    }

    /// Adds `v` to the span; returns whether the rank increased.
    pub fn insert(&mut self, v: &FieldVector) -> Result<bool, CodingError> {
        self.check_len(v)?;
        Ok(self.insert_with(v.clone(), None))
    }

    fn insert_with(&mut self, mut v: FieldVector, payload: Option<(FieldVector, &mut Vec<FieldVector>)>) -> bool {
        if self.is_full() {
            return false;
        }
        let field = self.field.clone();
        match payload {
            None => {
                self.reduce(&mut v, None);
                let Some(lead) = v.leading() else { return false };
                let inv = field.inv(v.get(lead)).expect("leading entry is nonzero");
                v.scale(&field, inv);
                for row in &mut self.rows {
                    let c = row.get(lead);
                    if !c.is_zero() {
                        row.axpy(&field, field.neg(c), &v);
                    }
                }
                self.rows.push(v);
                self.pivots.push(lead);
                true
            }
            Some((mut p, prows)) => {
                self.reduce(&mut v, Some((&mut p, prows.as_slice())));
                let Some(lead) = v.leading() else { return false };
                let inv = field.inv(v.get(lead)).expect("leading entry is nonzero");
                v.scale(&field, inv);
                p.scale(&field, inv);
                for (row, prow) in self.rows.iter_mut().zip(prows.iter_mut()) {
                    let c = row.get(lead);
                    if !c.is_zero() {
                        let f = field.neg(c);
                        row.axpy(&field, f, &v);
                        prow.axpy(&field, f, &p);
                    }
                }
                self.rows.push(v);
                self.pivots.push(lead);
                prows.push(p);
                true
            }
        }
    }

    /// Whether some vector of the span has nonzero dot product with `mu`.
    /// Checking basis rows suffices by linearity.
    pub fn knows(&self, mu: &CoefficientVector) -> Result<bool, CodingError> {
        self.check_len(mu)?;
        Ok(self.knows_unchecked(mu))
    }

    #[inline]
    pub(crate) fn knows_unchecked(&self, mu: &CoefficientVector) -> bool {
        self.rows.iter().any(|row| !row.dot_unchecked(&self.field, mu).is_zero())
    }

    /// Uniform coefficients over the basis rows, one per row.
    fn sample_coefficients<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<FieldElement> {
        (0..self.rows.len()).map(|_| self.field.random(rng)).collect()
    }

    fn combine(&self, coeffs: &[FieldElement]) -> FieldVector {
        let mut out = FieldVector::zeros(&self.field, self.k);
        for (c, row) in coeffs.iter().zip(&self.rows) {
            out.axpy(&self.field, *c, row);
        }
        out
    }

    /// A uniformly random element of the span.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldVector {
        if self.field.is_binary() {
            let mut out = FieldVector::zeros(&self.field, self.k);
            let mut bits = 0u64;
            for (i, row) in self.rows.iter().enumerate() {
                if i % 64 == 0 {
                    bits = rng.gen();
                }
                if (bits >> (i % 64)) & 1 == 1 {
                    out.add_assign(&self.field, row);
                }
            }
            out
        } else {
            let coeffs = self.sample_coefficients(rng);
            self.combine(&coeffs)
        }
    }

    /// Debug check of the echelon invariants.
    pub fn check_invariants(&self) -> bool {
        if self.rows.len() != self.pivots.len() || self.rows.len() > self.k {
            return false;
        }
        let mut seen = vec![false; self.k];
        for &p in &self.pivots {
            if p >= self.k || seen[p] {
                return false;
            }
            seen[p] = true;
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.leading() != Some(self.pivots[i]) {
                return false;
            }
            for (j, &p) in self.pivots.iter().enumerate() {
                let expected = if i == j { FieldElement::ONE } else { FieldElement::ZERO };
                if row.get(p) != expected {
                    return false;
                }
            }
        }
        true
    }
}

/// Per-node RLNC state.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub node_id: usize,
    y: Subspace,
    payload_basis: Option<Vec<FieldVector>>,
    payload_len: usize,
    decode_round: Option<u64>,
}

impl NodeState {
    /// Initializes a node holding the (1-based) message indices in `known`.
    ///
    /// With `messages` present, payloads are tracked and `messages[i - 1]` is
    /// the ground truth of message `i`.
    pub fn new(
        field: &FieldSpec,
        node_id: usize,
        k: usize,
        known: &[usize],
        messages: Option<&[FieldVector]>,
    ) -> Result<Self, CodingError> {
        let payload_len = match messages {
            Some(m) if m.len() != k => return Err(CodingError::LengthMismatch { expected: k, got: m.len() }),
            Some(m) => m.first().map_or(0, |v| v.len()),
            None => 0,
        };
        let mut state = NodeState {
            node_id,
            y: Subspace::new(field, k),
            payload_basis: messages.map(|_| Vec::new()),
            payload_len,
            decode_round: None,
        };
        for &index in known {
            if index == 0 || index > k {
                return Err(CodingError::IndexOutOfRange { index, k });
            }
            let packet = Packet {
                mu: FieldVector::unit(field, k, index - 1),
                payload: messages.map(|m| m[index - 1].clone()),
            };
            state.receive(&packet, 0)?;
        }
        Ok(state)
    }

    pub fn subspace(&self) -> &Subspace {
        &self.y
    }

    pub fn field(&self) -> &FieldSpec {
        self.y.field()
    }

    pub fn k(&self) -> usize {
        self.y.dimension()
    }

    pub fn rank(&self) -> usize {
        self.y.rank()
    }

    pub fn payload_mode(&self) -> bool {
        self.payload_basis.is_some()
    }

    pub fn payload_basis(&self) -> Option<&[FieldVector]> {
        self.payload_basis.as_deref()
    }

    pub fn decode_round(&self) -> Option<u64> {
        self.decode_round
    }

    pub fn can_decode(&self) -> bool {
        self.y.is_full()
    }

    pub fn knows(&self, mu: &CoefficientVector) -> Result<bool, CodingError> {
        self.y.knows(mu)
    }

    /// Draws a uniformly random packet from the node's span. Rank-0 nodes
    /// produce the zero packet.
    pub fn sample_packet<R: Rng + ?Sized>(&self, rng: &mut R) -> Packet {
        let field = self.y.field();
        match &self.payload_basis {
            None => {
                let mu = if self.y.is_full() {
                    // the span is all of F_q^k
                    FieldVector::random(field, self.k(), rng)
                } else {
                    self.y.sample(rng)
                };
                Packet { mu, payload: None }
            }
            Some(prows) => {
                let coeffs = self.y.sample_coefficients(rng);
                let mu = self.y.combine(&coeffs);
                let mut payload = FieldVector::zeros(field, self.payload_len);
                for (c, row) in coeffs.iter().zip(prows) {
                    payload.axpy(field, *c, row);
                }
                Packet { mu, payload: Some(payload) }
            }
        }
    }

    /// Adds a packet to the span. Returns whether it was innovative.
    pub fn receive(&mut self, packet: &Packet, round: u64) -> Result<bool, CodingError> {
        if packet.mu.len() != self.k() {
            return Err(CodingError::LengthMismatch { expected: self.k(), got: packet.mu.len() });
        }
        let innovative = match self.payload_basis.as_mut() {
            None => self.y.insert_with(packet.mu.clone(), None),
            Some(prows) => {
                let payload = match &packet.payload {
                    Some(p) => p.clone(),
                    None => return Err(CodingError::MissingMessages),
                };
                self.y.insert_with(packet.mu.clone(), Some((payload, prows)))
            }
        };
        if innovative && self.decode_round.is_none() && self.y.is_full() {
            self.decode_round = Some(round);
        }
        Ok(innovative)
    }

    /// Recovers the `k` messages, in message order.
    pub fn decode(&self) -> Result<Vec<FieldVector>, CodingError> {
        let prows = self.payload_basis.as_ref().ok_or(CodingError::PayloadsDisabled)?;
        if !self.y.is_full() {
            return Err(CodingError::NotFullRank { rank: self.rank(), k: self.k() });
        }
        // a full-rank reduced echelon basis is the identity, so row i carries message pivots[i]
        let mut out = vec![None; self.k()];
        for (row, &pivot) in prows.iter().zip(&self.y.pivots) {
            out[pivot] = Some(row.clone());
        }
        Ok(out.into_iter().map(|m| m.expect("every column is a pivot")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf2() -> FieldSpec {
        make_field(2).unwrap()
    }

    fn vecf(f: &FieldSpec, xs: &[u32]) -> FieldVector {
        FieldVector::from_values(f, xs)
    }

    #[test]
    fn init_examples() {
        let f = gf2();
        assert_eq!(NodeState::new(&f, 0, 4, &[], None).unwrap().rank(), 0);
        let s = NodeState::new(&f, 0, 4, &[2], None).unwrap();
        assert_eq!(s.rank(), 1);
        assert_eq!(s.subspace().basis(), vec![&vecf(&f, &[0, 1, 0, 0])]);
        let full = NodeState::new(&f, 0, 3, &[1, 2, 3], None).unwrap();
        assert!(full.can_decode());
        assert_eq!(
            NodeState::new(&f, 0, 3, &[4], None).unwrap_err(),
            CodingError::IndexOutOfRange { index: 4, k: 3 }
        );
        assert!(NodeState::new(&f, 0, 3, &[0], None).is_err());
    }

    #[test]
    fn zero_rank_sends_zero_packet() {
        let f = make_field(5).unwrap();
        let s = NodeState::new(&f, 0, 6, &[], None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            assert!(s.sample_packet(&mut rng).mu.is_zero());
        }
    }

    #[test]
    fn receive_examples() {
        let f = gf2();
        let mut s = NodeState::new(&f, 0, 3, &[], None).unwrap();
        let e1 = Packet { mu: vecf(&f, &[1, 0, 0]), payload: None };
        assert!(s.receive(&e1, 1).unwrap());
        assert!(!s.receive(&e1, 2).unwrap());
        assert_eq!(s.rank(), 1);

        let mut t = NodeState::new(&f, 0, 3, &[], None).unwrap();
        t.receive(&Packet { mu: vecf(&f, &[1, 1, 0]), payload: None }, 1).unwrap();
        assert!(t.receive(&Packet { mu: vecf(&f, &[0, 1, 1]), payload: None }, 1).unwrap());
        assert_eq!(t.subspace().basis(), vec![&vecf(&f, &[1, 0, 1]), &vecf(&f, &[0, 1, 1])]);
        assert_eq!(t.subspace().pivots(), vec![0, 1]);

        let zero = Packet::zero(&f, 3, None);
        assert!(!t.receive(&zero, 3).unwrap());
        let bad = Packet { mu: vecf(&f, &[1, 0]), payload: None };
        assert_eq!(t.receive(&bad, 3), Err(CodingError::LengthMismatch { expected: 3, got: 2 }));
    }

    #[test]
    fn knows_examples() {
        let f = gf2();
        let mut s = NodeState::new(&f, 0, 2, &[], None).unwrap();
        assert!(!s.knows(&vecf(&f, &[1, 0])).unwrap());
        s.receive(&Packet { mu: vecf(&f, &[1, 1]), payload: None }, 1).unwrap();
        assert!(s.knows(&vecf(&f, &[1, 0])).unwrap());
        // (1,1) is in the span but self-orthogonal over F_2
        assert!(s.subspace().contains(&vecf(&f, &[1, 1])).unwrap());
        assert!(!s.knows(&vecf(&f, &[1, 1])).unwrap());
    }

    #[test]
    fn decode_round_trip_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for q in [2u64, 3, 4, 7] {
            let f = make_field(q).unwrap();
            let k = 6;
            let messages: Vec<FieldVector> = (0..k).map(|_| FieldVector::random(&f, 5, &mut rng)).collect();
            let source = NodeState::new(&f, 0, k, &(1..=k).collect::<Vec<_>>(), Some(&messages)).unwrap();
            let mut sink = NodeState::new(&f, 1, k, &[], Some(&messages)).unwrap();
            let mut round = 0;
            while !sink.can_decode() {
                round += 1;
                if sink.rank() == k - 1 {
                    assert_eq!(sink.decode(), Err(CodingError::NotFullRank { rank: k - 1, k }));
                }
                let packet = source.sample_packet(&mut rng);
                sink.receive(&packet, round).unwrap();
                for (row, prow) in sink.subspace().rows().iter().zip(sink.payload_basis().unwrap()) {
                    let mut expected = FieldVector::zeros(&f, 5);
                    for (i, m) in messages.iter().enumerate() {
                        expected.axpy(&f, row.get(i), m);
                    }
                    assert_eq!(&expected, prow);
                }
            }
            assert_eq!(sink.decode_round(), Some(round));
            assert_eq!(sink.decode().unwrap(), messages);
        }
        let f = gf2();
        assert_eq!(NodeState::new(&f, 0, 2, &[1, 2], None).unwrap().decode(), Err(CodingError::PayloadsDisabled));
    }

    #[test]
    fn sampling_is_uniform_over_span() {
        let f = gf2();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let one = NodeState::new(&f, 0, 3, &[1], None).unwrap();
        let draws = 10_000;
        let hits = (0..draws).filter(|_| !one.sample_packet(&mut rng).mu.is_zero()).count();
        // 4 sigma of Binomial(10^4, 1/2) is 200
        assert!((hits as i64 - 5000).abs() < 200, "{hits}");

        let two = NodeState::new(&f, 0, 3, &[1, 2], None).unwrap();
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            let mu = two.sample_packet(&mut rng).mu;
            counts[(mu.get(0).value() + 2 * mu.get(1).value()) as usize] += 1;
        }
        let expected = draws as f64 / 4.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // chi-square with 3 degrees of freedom, p = 0.001 critical value
        assert!(chi2 < 16.27, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn general_field_echelon_invariants() {
        let f = make_field(9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = Subspace::new(&f, 7);
        for _ in 0..20 {
            let v = FieldVector::random(&f, 7, &mut rng);
            let before = s.rank();
            let innovative = s.insert(&v).unwrap();
            assert_eq!(innovative, s.rank() == before + 1);
            assert!(s.check_invariants());
            assert!(s.contains(&v).unwrap());
        }
        assert!(s.is_full());
    }
}
