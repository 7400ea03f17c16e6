//! Truncated bivariate series in `q` and `zeta`.
//!
//! Exponents are stored as integers in fixed units: `q` exponents in units of
//! 1/24 and `zeta` exponents in units of 1/2, so eta, theta and every theta
//! block embed without per-object denominators. A series is a map from
//! `q`-exponent to a `zeta`-Laurent polynomial (a "slice"). The truncation
//! `trunc` is the largest `q`-exponent whose slice is known; nothing above
//! it is ever stored.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::field::{Field, FieldError, PrimeField, Rationals};

/// Denominator of `q` exponents.
pub const QDEN: i64 = 24;
/// Denominator of `zeta` exponents.
pub const ZDEN: i64 = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("field mismatch: {0}")]
    FieldMismatch(#[from] FieldError),
    #[error("division leaves a remainder at q-exponent {slice}/24")]
    NonExactDivision { slice: i64 },
    #[error("division by zero series")]
    DivisionByZero,
    #[error("leading slice is not a unit monomial; negative powers are undefined")]
    NonInvertibleLeadingSlice,
}

/// Dense Laurent polynomial in `zeta^(1/2)`; `coeffs[i]` is the coefficient of
/// exponent `lo + i` (half units). Trimmed: empty, or both ends nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Laurent<E> {
    lo: i64,
    coeffs: Vec<E>,
}

impl<E: Clone + PartialEq> Laurent<E> {
    pub fn zero() -> Self {
        Laurent { lo: 0, coeffs: Vec::new() }
    }

    pub fn monomial<F: Field<Elem = E>>(f: &F, exp: i64, c: E) -> Self {
        if f.is_zero(&c) {
            Self::zero()
        } else {
            Laurent { lo: exp, coeffs: vec![c] }
        }
    }

    pub fn from_terms<F: Field<Elem = E>>(f: &F, terms: impl IntoIterator<Item = (i64, E)>) -> Self {
        let terms: Vec<(i64, E)> = terms.into_iter().collect();
        if terms.is_empty() {
            return Self::zero();
        }
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut coeffs = vec![f.zero(); (hi - lo + 1) as usize];
        for (e, c) in terms {
            f.add_assign(&mut coeffs[(e - lo) as usize], &c);
        }
        let mut out = Laurent { lo, coeffs };
        out.trim(f);
        out
    }

    fn trim<F: Field<Elem = E>>(&mut self, f: &F) {
        let end = self.coeffs.iter().rposition(|c| !f.is_zero(c)).map_or(0, |i| i + 1);
        self.coeffs.truncate(end);
        let start = self.coeffs.iter().position(|c| !f.is_zero(c)).unwrap_or(0);
        if start > 0 {
            self.coeffs.drain(..start);
            self.lo += start as i64;
        }
        if self.coeffs.is_empty() {
            self.lo = 0;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest exponent (half units); meaningless for the zero polynomial.
    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get<F: Field<Elem = E>>(&self, f: &F, exp: i64) -> E {
        let i = exp - self.lo;
        if i < 0 || i >= self.coeffs.len() as i64 {
            f.zero()
        } else {
            self.coeffs[i as usize].clone()
        }
    }

    /// Nonzero terms `(exponent, coefficient)` in increasing exponent order.
    pub fn terms<'a, F: Field<Elem = E>>(&'a self, f: &'a F) -> impl Iterator<Item = (i64, &'a E)> + 'a {
        let lo = self.lo;
        self.coeffs
            .iter()
            .enumerate()
            .filter(move |(_, c)| !f.is_zero(c))
            .map(move |(i, c)| (lo + i as i64, c))
    }

    /// Single-term polynomial as `(exponent, coefficient)`.
    pub fn as_monomial(&self) -> Option<(i64, &E)> {
        if self.coeffs.len() == 1 {
            Some((self.lo, &self.coeffs[0]))
        } else {
            None
        }
    }

    pub fn add<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Self {
        self.add_scaled(f, other, &f.one())
    }

    /// `self + s * other`
    pub fn add_scaled<F: Field<Elem = E>>(&self, f: &F, other: &Self, s: &E) -> Self {
        if other.is_zero() || f.is_zero(s) {
            return self.clone();
        }
        if self.is_zero() {
            return other.scale(f, s);
        }
        let lo = self.lo.min(other.lo);
        let hi = self.hi().max(other.hi());
        let mut coeffs = vec![f.zero(); (hi - lo + 1) as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[(self.lo - lo) as usize + i] = c.clone();
        }
        let off = (other.lo - lo) as usize;
        for (i, c) in other.coeffs.iter().enumerate() {
            f.mul_add_assign(&mut coeffs[off + i], s, c);
        }
        let mut out = Laurent { lo, coeffs };
        out.trim(f);
        out
    }

    pub fn scale<F: Field<Elem = E>>(&self, f: &F, s: &E) -> Self {
        if f.is_zero(s) {
            return Self::zero();
        }
        let mut out = Laurent {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|c| f.mul(c, s)).collect(),
        };
        out.trim(f);
        out
    }

    pub fn neg<F: Field<Elem = E>>(&self, f: &F) -> Self {
        Laurent { lo: self.lo, coeffs: self.coeffs.iter().map(|c| f.neg(c)).collect() }
    }

    pub fn shift(&self, by: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        Laurent { lo: self.lo + by, coeffs: self.coeffs.clone() }
    }

    pub fn mul<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![f.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        mul_into(f, &mut coeffs, 0, &self.coeffs, &other.coeffs);
        let mut out = Laurent { lo: self.lo + other.lo, coeffs };
        out.trim(f);
        out
    }

    /// Exact quotient `self / d`, or `None` if `d` does not divide `self`.
    pub fn div_exact<F: Field<Elem = E>>(&self, f: &F, d: &Self) -> Option<Self> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Self::zero());
        }
        if self.coeffs.len() < d.coeffs.len() {
            return None;
        }
        let inv = f.inv(&d.coeffs[0])?;
        let qlen = self.coeffs.len() - d.coeffs.len() + 1;
        let mut rem = self.coeffs.clone();
        let mut quot = Vec::with_capacity(qlen);
        for i in 0..qlen {
            let qi = f.mul(&rem[i], &inv);
            if !f.is_zero(&qi) {
                let nq = f.neg(&qi);
                for (j, dj) in d.coeffs.iter().enumerate() {
                    f.mul_add_assign(&mut rem[i + j], &nq, dj);
                }
            }
            quot.push(qi);
        }
        if rem[qlen..].iter().any(|c| !f.is_zero(c)) {
            return None;
        }
        let mut out = Laurent { lo: self.lo - d.lo, coeffs: quot };
        out.trim(f);
        Some(out)
    }

    /// Substitute `zeta -> zeta^k` (k >= 1).
    pub fn dilate<F: Field<Elem = E>>(&self, f: &F, k: i64) -> Self {
        assert!(k >= 1);
        Self::from_terms(f, self.terms(f).map(|(e, c)| (e * k, c.clone())).collect::<Vec<_>>())
    }

    /// Substitute `zeta -> zeta^-1`.
    pub fn reflect(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        Laurent { lo: -self.hi(), coeffs }
    }

    pub fn map<F: Field<Elem = E>, G: Field>(
        &self,
        g: &G,
        map: &impl Fn(&E) -> Result<G::Elem, FieldError>,
    ) -> Result<Laurent<G::Elem>, FieldError> {
        let coeffs = self.coeffs.iter().map(map).collect::<Result<Vec<_>, _>>()?;
        let mut out = Laurent { lo: self.lo, coeffs };
        out.trim(g);
        Ok(out)
    }
}

fn mul_into<F: Field>(f: &F, acc: &mut [F::Elem], off: usize, a: &[F::Elem], b: &[F::Elem]) {
    for (i, x) in a.iter().enumerate() {
        if f.is_zero(x) {
            continue;
        }
        let row = &mut acc[off + i..off + i + b.len()];
        for (slot, y) in row.iter_mut().zip(b) {
            f.mul_add_assign(slot, x, y);
        }
    }
}

/// Truncated series `sum c(a,b) q^(a/24) zeta^(b/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PuiseuxSeries<F: Field> {
    field: F,
    trunc: i64,
    slices: BTreeMap<i64, Laurent<F::Elem>>,
}

impl<F: Field> PuiseuxSeries<F> {
    pub fn zero(field: F, trunc: i64) -> Self {
        PuiseuxSeries { field, trunc, slices: BTreeMap::new() }
    }

    pub fn one(field: F, trunc: i64) -> Self {
        let one = field.one();
        Self::monomial(field, 0, 0, one, trunc)
    }

    /// `c q^(a/24) zeta^(b/2)`, known up to `trunc`.
    pub fn monomial(field: F, a: i64, b: i64, c: F::Elem, trunc: i64) -> Self {
        let mut s = Self::zero(field, trunc);
        if a <= trunc {
            let l = Laurent::monomial(&s.field, b, c);
            s.insert_slice(a, l);
        }
        s
    }

    /// Builds a series from `(a, b, c)` terms; terms above `trunc` are dropped.
    pub fn from_terms(field: F, trunc: i64, terms: impl IntoIterator<Item = (i64, i64, F::Elem)>) -> Self {
        let mut grouped: BTreeMap<i64, Vec<(i64, F::Elem)>> = BTreeMap::new();
        for (a, b, c) in terms {
            if a <= trunc {
                grouped.entry(a).or_default().push((b, c));
            }
        }
        let mut s = Self::zero(field, trunc);
        for (a, ts) in grouped {
            let l = Laurent::from_terms(&s.field, ts);
            s.insert_slice(a, l);
        }
        s
    }

    /// Builds a series from whole slices; slices above `trunc` are dropped.
    pub fn from_slices(field: F, trunc: i64, slices: impl IntoIterator<Item = (i64, Laurent<F::Elem>)>) -> Self {
        let mut s = Self::zero(field, trunc);
        for (a, l) in slices {
            if a <= trunc {
                s.insert_slice(a, l);
            }
        }
        s
    }

    fn insert_slice(&mut self, a: i64, l: Laurent<F::Elem>) {
        if l.is_zero() {
            self.slices.remove(&a);
        } else {
            self.slices.insert(a, l);
        }
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn trunc(&self) -> i64 {
        self.trunc
    }

    pub fn is_zero(&self) -> bool {
        self.slices.is_empty()
    }

    /// Lowest `q`-exponent with a nonzero slice.
    pub fn valuation(&self) -> Option<i64> {
        self.slices.keys().next().copied()
    }

    fn val_or_beyond(&self) -> i64 {
        self.valuation().unwrap_or(self.trunc + 1)
    }

    pub fn slice(&self, a: i64) -> Option<&Laurent<F::Elem>> {
        self.slices.get(&a)
    }

    pub fn slices(&self) -> impl Iterator<Item = (i64, &Laurent<F::Elem>)> {
        self.slices.iter().map(|(a, l)| (*a, l))
    }

    pub fn leading_slice(&self) -> Option<(i64, &Laurent<F::Elem>)> {
        self.slices.iter().next().map(|(a, l)| (*a, l))
    }

    pub fn coeff(&self, a: i64, b: i64) -> F::Elem {
        self.slices.get(&a).map_or_else(|| self.field.zero(), |l| l.get(&self.field, b))
    }

    /// All nonzero terms `(a, b, c)`, ordered by `a` then `b`.
    pub fn terms(&self) -> impl Iterator<Item = (i64, i64, &F::Elem)> {
        self.slices
            .iter()
            .flat_map(move |(a, l)| l.terms(&self.field).map(move |(b, c)| (*a, b, c)))
    }

    pub fn num_terms(&self) -> usize {
        self.terms().count()
    }

    /// Drops everything above `trunc` (no-op if already lower).
    pub fn truncate(&self, trunc: i64) -> Self {
        let trunc = trunc.min(self.trunc);
        PuiseuxSeries {
            field: self.field.clone(),
            trunc,
            slices: self.slices.range(..=trunc).map(|(a, l)| (*a, l.clone())).collect(),
        }
    }

    /// Multiplies by the monomial `q^(a/24) zeta^(b/2)`.
    pub fn shift(&self, a: i64, b: i64) -> Self {
        PuiseuxSeries {
            field: self.field.clone(),
            trunc: self.trunc + a,
            slices: self.slices.iter().map(|(e, l)| (e + a, l.shift(b))).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        PuiseuxSeries {
            field: self.field.clone(),
            trunc: self.trunc,
            slices: self.slices.iter().map(|(a, l)| (*a, l.neg(&self.field))).collect(),
        }
    }

    pub fn scale(&self, s: &F::Elem) -> Self {
        let mut out = Self::zero(self.field.clone(), self.trunc);
        for (a, l) in &self.slices {
            out.insert_slice(*a, l.scale(&self.field, s));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.add_scaled(other, &self.field.one())
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.add_scaled(other, &self.field.neg(&self.field.one()))
    }

    /// `self + s * other`
    pub fn add_scaled(&self, other: &Self, s: &F::Elem) -> Result<Self, SeriesError> {
        self.field.check_same(&other.field)?;
        let trunc = self.trunc.min(other.trunc);
        let mut out = self.truncate(trunc);
        for (a, l) in other.slices.range(..=trunc) {
            let merged = match out.slices.get(a) {
                Some(cur) => cur.add_scaled(&self.field, l, s),
                None => l.scale(&self.field, s),
            };
            out.insert_slice(*a, merged);
        }
        Ok(out)
    }

    /// Cauchy product, truncated where both factors still determine it.
    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.field.check_same(&other.field)?;
        let f = &self.field;
        let trunc = (self.trunc + other.val_or_beyond()).min(other.trunc + self.val_or_beyond());
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(f.clone(), trunc));
        }
        // Per target exponent: the contributing slice pairs and the zeta range.
        let mut plan: BTreeMap<i64, (i64, i64, Vec<(&Laurent<F::Elem>, &Laurent<F::Elem>)>)> = BTreeMap::new();
        for (ea, la) in &self.slices {
            for (eb, lb) in &other.slices {
                let e = ea + eb;
                if e > trunc {
                    break;
                }
                let lo = la.lo() + lb.lo();
                let hi = la.hi() + lb.hi();
                let ent = plan.entry(e).or_insert((lo, hi, Vec::new()));
                ent.0 = ent.0.min(lo);
                ent.1 = ent.1.max(hi);
                ent.2.push((la, lb));
            }
        }
        let work: usize = plan
            .values()
            .flat_map(|(_, _, v)| v.iter().map(|(a, b)| a.len() * b.len()))
            .sum();
        let compute = |(e, (lo, hi, pairs)): (&i64, &(i64, i64, Vec<(&Laurent<F::Elem>, &Laurent<F::Elem>)>))| {
            let mut acc = vec![f.zero(); (hi - lo + 1) as usize];
            for (la, lb) in pairs {
                let off = (la.lo() + lb.lo() - lo) as usize;
                mul_into(f, &mut acc, off, &la.coeffs, &lb.coeffs);
            }
            let mut l = Laurent { lo: *lo, coeffs: acc };
            l.trim(f);
            (*e, l)
        };
        let products: Vec<(i64, Laurent<F::Elem>)> = if work > 1 << 16 {
            plan.par_iter().map(compute).collect()
        } else {
            plan.iter().map(compute).collect()
        };
        Ok(Self::from_slices(f.clone(), trunc, products))
    }

    /// Exact quotient `self / d` by the slice recursion
    /// `C_j = (A_j - sum_{i<j} C_i D_{j-i}) / D_0`, each step an exact
    /// Laurent division.
    pub fn div_exact(&self, d: &Self) -> Result<Self, SeriesError> {
        self.field.check_same(&d.field)?;
        let f = &self.field;
        let (vd, d0) = d.leading_slice().ok_or(SeriesError::DivisionByZero)?;
        let rel = (self.trunc - self.val_or_beyond()).min(d.trunc - vd);
        let trunc = self.val_or_beyond() - vd + rel;
        let mut rem: BTreeMap<i64, Laurent<F::Elem>> = self.slices.range(..=trunc + vd).map(|(a, l)| (*a, l.clone())).collect();
        let mut out = Self::zero(f.clone(), trunc);
        while let Some((e, r)) = rem.pop_first() {
            if e - vd > trunc {
                break;
            }
            let q = r.div_exact(f, d0).ok_or(SeriesError::NonExactDivision { slice: e })?;
            let nq = q.neg(f);
            for (k, dk) in d.slices.range(vd + 1..) {
                let target = e - vd + k;
                if target - vd > trunc {
                    break;
                }
                let upd = nq.mul(f, dk);
                let merged = match rem.remove(&target) {
                    Some(cur) => cur.add(f, &upd),
                    None => upd,
                };
                if !merged.is_zero() {
                    rem.insert(target, merged);
                }
            }
            out.insert_slice(e - vd, q);
        }
        Ok(out)
    }

    /// Integer power; negative exponents need a unit monomial leading slice.
    pub fn pow(&self, e: i64) -> Result<Self, SeriesError> {
        let f = &self.field;
        let rel = self.trunc - self.val_or_beyond();
        if e == 0 {
            return Ok(Self::one(f.clone(), rel));
        }
        let base = if e < 0 {
            let (_, lead) = self.leading_slice().ok_or(SeriesError::NonInvertibleLeadingSlice)?;
            match lead.as_monomial() {
                Some((_, c)) if f.inv(c).is_some() => {}
                _ => return Err(SeriesError::NonInvertibleLeadingSlice),
            }
            Self::one(f.clone(), rel).div_exact(self)?
        } else {
            self.clone()
        };
        let mut n = e.unsigned_abs();
        let mut acc: Option<Self> = None;
        let mut sq = base;
        loop {
            if n & 1 == 1 {
                acc = Some(match acc {
                    None => sq.clone(),
                    Some(a) => a.mul(&sq)?,
                });
            }
            n >>= 1;
            if n == 0 {
                break;
            }
            sq = sq.mul(&sq)?;
        }
        Ok(acc.expect("nonzero exponent"))
    }

    /// Substitute `zeta -> zeta^-1`.
    pub fn reflect_zeta(&self) -> Self {
        PuiseuxSeries {
            field: self.field.clone(),
            trunc: self.trunc,
            slices: self.slices.iter().map(|(a, l)| (*a, l.reflect())).collect(),
        }
    }

    /// Image under a coefficient map into another field.
    pub fn map_field<G: Field>(
        &self,
        g: G,
        map: impl Fn(&F::Elem) -> Result<G::Elem, FieldError>,
    ) -> Result<PuiseuxSeries<G>, FieldError> {
        let mut out = PuiseuxSeries::zero(g, self.trunc);
        for (a, l) in &self.slices {
            let m = l.map::<F, G>(&out.field, &map)?;
            out.insert_slice(*a, m);
        }
        Ok(out)
    }

    /// True when every stored exponent is integral in both variables.
    pub fn has_integral_exponents(&self) -> bool {
        self.slices.iter().all(|(a, l)| a % QDEN == 0 && l.terms(&self.field).all(|(b, _)| b % ZDEN == 0))
    }
}

impl PuiseuxSeries<Rationals> {
    /// Reduction modulo `p`; every denominator must be prime to `p`.
    pub fn reduce_mod_p(&self, p: u64) -> Result<PuiseuxSeries<PrimeField>, SeriesError> {
        let fp = PrimeField::new(p)?;
        Ok(self.map_field(fp, |c| fp.from_rat(c))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Rat;

    fn q() -> Rationals {
        Rationals
    }

    fn r(v: i64) -> Rat {
        Rat::from_int(v)
    }

    #[test]
    fn add_identity_and_cancellation() {
        let a = PuiseuxSeries::monomial(q(), 1, 0, r(1), 100);
        let z = PuiseuxSeries::zero(q(), 100);
        assert_eq!(a.add(&z).unwrap(), a);
        let b = PuiseuxSeries::monomial(q(), 0, 1, r(1), 100);
        let s = b.add(&b.neg()).unwrap();
        assert!(s.is_zero());
        assert_eq!(s.num_terms(), 0);
    }

    #[test]
    fn monomial_product_adds_exponents() {
        let a = PuiseuxSeries::monomial(q(), 1, 0, r(1), 100);
        let p = a.mul(&a).unwrap();
        assert_eq!(p.coeff(2, 0), r(1));
        assert_eq!(p.num_terms(), 1);
    }

    #[test]
    fn telescoping_product() {
        let t = 10 * QDEN;
        let one_minus_q = PuiseuxSeries::from_terms(q(), t, [(0, 0, r(1)), (QDEN, 0, r(-1))]);
        let geo = PuiseuxSeries::from_terms(q(), t, (0..=10).map(|n| (n * QDEN, 0, r(1))));
        let p = one_minus_q.mul(&geo).unwrap();
        assert_eq!(p, PuiseuxSeries::one(q(), t));
    }

    #[test]
    fn laurent_factorization_division() {
        let f = q();
        let num = Laurent::from_terms(&f, [(2, r(1)), (-2, r(-1))]);
        let den = Laurent::from_terms(&f, [(1, r(1)), (-1, r(-1))]);
        let quo = num.div_exact(&f, &den).unwrap();
        assert_eq!(quo, Laurent::from_terms(&f, [(1, r(1)), (-1, r(1))]));
        assert!(den.div_exact(&f, &num).is_none());
    }

    #[test]
    fn non_exact_division_reports_slice() {
        // 1 / (z^{1/2} - z^{-1/2} + q z^{3/2}) fails on the very first slice.
        let d = PuiseuxSeries::from_terms(q(), 48, [(0, 1, r(1)), (0, -1, r(-1)), (24, 3, r(1))]);
        let one = PuiseuxSeries::one(q(), 48);
        assert_eq!(one.div_exact(&d), Err(SeriesError::NonExactDivision { slice: 0 }));
        // (z - z^-1) / that divisor: slice 0 exact, slice 1 leaves a remainder.
        let n = PuiseuxSeries::from_terms(q(), 48, [(0, 2, r(1)), (0, -2, r(-1))]);
        assert_eq!(n.div_exact(&d), Err(SeriesError::NonExactDivision { slice: 24 }));
    }

    #[test]
    fn pow_zero_is_one() {
        let a = PuiseuxSeries::from_terms(q(), 48, [(1, 0, r(3)), (25, 2, r(1))]);
        let p = a.pow(0).unwrap();
        assert_eq!(p.coeff(0, 0), r(1));
        assert_eq!(p.num_terms(), 1);
    }

    #[test]
    fn negative_power_requires_monomial_lead() {
        let a = PuiseuxSeries::from_terms(q(), 48, [(0, 1, r(1)), (0, -1, r(-1))]);
        assert_eq!(a.pow(-1), Err(SeriesError::NonInvertibleLeadingSlice));
    }

    #[test]
    fn field_mismatch_detected() {
        let f1 = PrimeField::new(7).unwrap();
        let f2 = PrimeField::new(11).unwrap();
        let a = PuiseuxSeries::one(f1, 10);
        let b = PuiseuxSeries::one(f2, 10);
        assert!(matches!(a.add(&b), Err(SeriesError::FieldMismatch(_))));
    }

    #[test]
    fn reduce_examples() {
        let a = PuiseuxSeries::from_terms(q(), 10, [(0, 0, Rat::new(5, 3))]);
        let ra = a.reduce_mod_p(7).unwrap();
        assert_eq!(ra.coeff(0, 0), 4);
        let b = PuiseuxSeries::from_terms(q(), 10, [(0, 0, Rat::new(1, 7))]);
        assert!(b.reduce_mod_p(7).is_err());
    }
}
