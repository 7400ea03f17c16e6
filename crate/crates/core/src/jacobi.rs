//! Jacobi form fragments: finite coefficient tables `c(n, r)` of a Jacobi
//! form of weight `k` and index `m`, the index-raising operator `V_2`, the
//! Gritsenko lift, and assembly of bases of cusp spaces from theta blocks.
//!
//! A fragment knows `c(n, r)` for every `r` and every `n <= n_max`; absent
//! entries are zero. Coefficients beyond `n_max` are reached through
//! `c(n, r) = c(n', r')` whenever `4nm - r^2 = 4n'm - r'^2` and
//! `r = r' (mod 2m)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::field::{Field, FieldError, PrimeField, Rat, Rationals};
use crate::linalg::{rank_q, Echelon};
use crate::paramodular::{FourierIndex, ParamodularFragment};
use crate::series::{PuiseuxSeries, SeriesError, QDEN, ZDEN};
use crate::theta::{for_each_square_partition, search, ThetaBlock, ThetaError, ThetaQuotient};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JacobiError {
    #[error("class invariance fails at c({n},{r})")]
    ClassInvarianceViolation { n: i64, r: i64 },
    #[error("symmetry c(n,-r) = (-1)^k c(n,r) fails at c({n},{r})")]
    SymmetryViolation { n: i64, r: i64 },
    #[error("series has non-integral exponents")]
    FractionalExponents,
    #[error("series has negative q-order")]
    NegativeOrder,
    #[error("coefficient c({n},{r}) is outside the coverage")]
    InsufficientCoverage { n: i64, r: i64 },
    #[error("found {found} independent forms, expected {target}")]
    RankDeficit { found: usize, target: usize },
    #[error("index must be positive, got {0}")]
    BadIndex(i64),
    #[error("weight or index mismatch")]
    Mismatch,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
}

/// Representative of `r` modulo `2m` in `(-m, m]`.
pub fn reduce_r(r: i64, m: i64) -> i64 {
    let mut x = r.rem_euclid(2 * m);
    if x > m {
        x -= 2 * m;
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobiFormFragment<F: Field> {
    field: F,
    weight: i64,
    index: i64,
    n_max: i64,
    coeffs: BTreeMap<(i64, i64), F::Elem>,
}

impl<F: Field> JacobiFormFragment<F> {
    /// Validates class invariance and symmetry within coverage.
    pub fn new(
        field: F,
        weight: i64,
        index: i64,
        n_max: i64,
        coeffs: BTreeMap<(i64, i64), F::Elem>,
    ) -> Result<Self, JacobiError> {
        if index < 1 {
            return Err(JacobiError::BadIndex(index));
        }
        let mut c = coeffs;
        c.retain(|(n, _), v| *n <= n_max && !field.is_zero(v));
        if c.keys().any(|(n, _)| *n < 0) {
            return Err(JacobiError::NegativeOrder);
        }
        let out = JacobiFormFragment { field, weight, index, n_max, coeffs: c };
        out.validate()?;
        Ok(out)
    }

    pub(crate) fn from_parts_unchecked(
        field: F,
        weight: i64,
        index: i64,
        n_max: i64,
        coeffs: BTreeMap<(i64, i64), F::Elem>,
    ) -> Self {
        JacobiFormFragment { field, weight, index, n_max, coeffs }
    }

    pub fn zero(field: F, weight: i64, index: i64, n_max: i64) -> Self {
        JacobiFormFragment { field, weight, index, n_max, coeffs: BTreeMap::new() }
    }

    /// Reads `c(n, r)` off a series with integral exponents.
    pub fn from_series(s: &PuiseuxSeries<F>, weight: i64, index: i64) -> Result<Self, JacobiError> {
        if !s.has_integral_exponents() {
            return Err(JacobiError::FractionalExponents);
        }
        let n_max = s.trunc().div_euclid(QDEN);
        let coeffs = s.terms().map(|(a, b, c)| ((a / QDEN, b / ZDEN), c.clone())).collect();
        Self::new(s.field().clone(), weight, index, n_max, coeffs)
    }

    pub fn to_series(&self) -> PuiseuxSeries<F> {
        PuiseuxSeries::from_terms(
            self.field.clone(),
            QDEN * self.n_max,
            self.coeffs.iter().map(|((n, r), v)| (QDEN * n, ZDEN * r, v.clone())),
        )
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn weight(&self) -> i64 {
        self.weight
    }

    pub fn index(&self) -> i64 {
        self.index
    }

    pub fn n_max(&self) -> i64 {
        self.n_max
    }

    /// Nonzero stored coefficients.
    pub fn coeffs(&self) -> &BTreeMap<(i64, i64), F::Elem> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Stored coefficient for `n <= n_max`.
    fn stored(&self, n: i64, r: i64) -> F::Elem {
        self.coeffs.get(&(n, r)).cloned().unwrap_or_else(|| self.field.zero())
    }

    /// Class representative `(n', r')` with `r'` in `(-m, m]`.
    pub fn reduce_class(&self, n: i64, r: i64) -> (i64, i64) {
        let m = self.index;
        let d = 4 * n * m - r * r;
        let r2 = reduce_r(r, m);
        let num = d + r2 * r2;
        // negative numerators have no coefficient; keep them negative
        (num.div_euclid(4 * m), r2)
    }

    /// `c(n, r)`, through class reduction when `n > n_max`.
    pub fn coeff(&self, n: i64, r: i64) -> Result<F::Elem, JacobiError> {
        if n < 0 {
            return Ok(self.field.zero());
        }
        if n <= self.n_max {
            return Ok(self.stored(n, r));
        }
        let (n2, r2) = self.reduce_class(n, r);
        if n2 < 0 {
            return Ok(self.field.zero());
        }
        if n2 <= self.n_max {
            return Ok(self.stored(n2, r2));
        }
        Err(JacobiError::InsufficientCoverage { n, r })
    }

    /// Whether every class with negative discriminant has its reduced
    /// representative inside the coverage.
    pub fn singular_part_complete(&self) -> bool {
        4 * self.n_max >= self.index - 1
    }

    /// Smallest `4nm - r^2` over nonzero stored coefficients.
    pub fn min_disc(&self) -> Option<i64> {
        self.coeffs.keys().map(|(n, r)| 4 * n * self.index - r * r).min()
    }

    pub fn is_cusp(&self) -> bool {
        self.min_disc().is_none_or(|d| d > 0)
    }

    /// `q`-order: smallest `n` with a nonzero coefficient.
    pub fn q_order(&self) -> Option<i64> {
        self.coeffs.keys().map(|(n, _)| *n).min()
    }

    pub fn validate(&self) -> Result<(), JacobiError> {
        let f = &self.field;
        let m = self.index;
        for ((n, r), v) in &self.coeffs {
            let mirror = self.stored(*n, -*r);
            let expect = if self.weight % 2 == 0 { v.clone() } else { f.neg(v) };
            if mirror != expect {
                return Err(JacobiError::SymmetryViolation { n: *n, r: *r });
            }
            let (n2, r2) = self.reduce_class(*n, *r);
            if n2 < 0 || self.stored(n2, r2) != *v {
                return Err(JacobiError::ClassInvarianceViolation { n: *n, r: *r });
            }
        }
        // every covered member of a nonzero class must carry the value
        for ((n, r), v) in &self.coeffs {
            if reduce_r(*r, m) != *r {
                continue;
            }
            let d = 4 * n * m - r * r;
            for dir in [1i64, -1] {
                let mut j = 1;
                loop {
                    let rr = r + dir * 2 * m * j;
                    let num = d + rr * rr;
                    let nn = num / (4 * m);
                    if nn > self.n_max {
                        break;
                    }
                    if self.stored(nn, rr) != *v {
                        return Err(JacobiError::ClassInvarianceViolation { n: nn, r: rr });
                    }
                    j += 1;
                }
            }
        }
        Ok(())
    }

    /// Range of `r` that can carry nonzero coefficients at row `n`, from
    /// the smallest discriminant; `None` if that is not known.
    fn r_bound(&self, n: i64) -> Option<i64> {
        if !self.singular_part_complete() {
            return None;
        }
        let dmin = self.min_disc().unwrap_or(0).min(0);
        let b = 4 * n * self.index - dmin;
        Some(if b < 0 { -1 } else { crate::paramodular::isqrt(b) })
    }

    /// Same form with coverage raised to `n_max` by class reduction.
    pub fn extend(&self, n_max: i64) -> Result<Self, JacobiError> {
        if n_max <= self.n_max {
            let mut c = self.coeffs.clone();
            c.retain(|(n, _), _| *n <= n_max);
            return Ok(JacobiFormFragment { n_max, coeffs: c, ..self.clone() });
        }
        let mut out = self.clone();
        for n in (self.n_max + 1)..=n_max {
            let rb = self.r_bound(n).ok_or(JacobiError::InsufficientCoverage { n, r: 0 })?;
            for r in -rb..=rb {
                let v = self.coeff(n, r)?;
                if !self.field.is_zero(&v) {
                    out.coeffs.insert((n, r), v);
                }
            }
        }
        out.n_max = n_max;
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self, JacobiError> {
        self.add_scaled(other, &self.field.one())
    }

    /// `self + s * other` on the common coverage.
    pub fn add_scaled(&self, other: &Self, s: &F::Elem) -> Result<Self, JacobiError> {
        self.field.check_same(&other.field)?;
        if self.weight != other.weight || self.index != other.index {
            return Err(JacobiError::Mismatch);
        }
        let f = &self.field;
        let n_max = self.n_max.min(other.n_max);
        let mut c: BTreeMap<(i64, i64), F::Elem> =
            self.coeffs.iter().filter(|((n, _), _)| *n <= n_max).map(|(k, v)| (*k, v.clone())).collect();
        for (k, v) in other.coeffs.iter().filter(|((n, _), _)| *n <= n_max) {
            let e = c.entry(*k).or_insert_with(|| f.zero());
            f.mul_add_assign(e, s, v);
        }
        c.retain(|_, v| !f.is_zero(v));
        Ok(JacobiFormFragment { n_max, coeffs: c, ..self.clone() })
    }

    pub fn scale(&self, s: &F::Elem) -> Self {
        let f = &self.field;
        let mut c: BTreeMap<(i64, i64), F::Elem> = self.coeffs.iter().map(|(k, v)| (*k, f.mul(v, s))).collect();
        c.retain(|_, v| !f.is_zero(v));
        JacobiFormFragment { coeffs: c, ..self.clone() }
    }

    pub fn map_field<G: Field>(
        &self,
        g: G,
        f: impl Fn(&F::Elem) -> Result<G::Elem, FieldError>,
    ) -> Result<JacobiFormFragment<G>, FieldError> {
        let mut coeffs = BTreeMap::new();
        for (k, v) in &self.coeffs {
            let w = f(v)?;
            if !g.is_zero(&w) {
                coeffs.insert(*k, w);
            }
        }
        Ok(JacobiFormFragment { field: g, weight: self.weight, index: self.index, n_max: self.n_max, coeffs })
    }

    /// Class representatives `(n, r)` with `0 <= r <= m`, `n <= n_max`,
    /// positive discriminant, and `r` in `(0, m)` for odd weight.
    pub fn class_reps(weight: i64, index: i64, n_max: i64) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        for n in 0..=n_max {
            for r in 0..=index {
                if weight % 2 != 0 && (r == 0 || r == index) {
                    continue;
                }
                if 4 * n * index - r * r > 0 {
                    out.push((n, r));
                }
            }
        }
        out
    }

    pub fn vector(&self, reps: &[(i64, i64)]) -> Result<Vec<F::Elem>, JacobiError> {
        reps.iter().map(|(n, r)| self.coeff(*n, *r)).collect()
    }
}

impl JacobiFormFragment<Rationals> {
    pub fn reduce_mod_p(&self, p: u64) -> Result<JacobiFormFragment<PrimeField>, JacobiError> {
        let fp = PrimeField::new(p)?;
        let g = fp.clone();
        Ok(self.map_field(fp, move |x| g.from_rat(x))?)
    }
}

/// `a^(k-1)` in the field, for `a >= 1`.
fn weight_power<F: Field>(f: &F, a: i64, k: i64) -> Result<F::Elem, JacobiError> {
    let e = k - 1;
    let mut acc = f.one();
    let base = f.from_i64(a);
    for _ in 0..e.unsigned_abs() {
        acc = f.mul(&acc, &base);
    }
    if e < 0 {
        acc = f.inv(&acc).ok_or(FieldError::BadPrimeDenominator { den: a.to_string(), p: 0 })?;
    }
    Ok(acc)
}

/// `phi | V_2` up to `n_out`:
/// `c'(n, r) = sum_{a | gcd(n, r, 2)} a^(k-1) c(2n/a^2, r/a)`.
pub fn v2<F: Field>(phi: &JacobiFormFragment<F>, n_out: i64) -> Result<JacobiFormFragment<F>, JacobiError> {
    let f = &phi.field;
    let k = phi.weight;
    let m = phi.index;
    let two = weight_power(f, 2, k)?;
    let mut coeffs = BTreeMap::new();
    let dmin = phi.min_disc().unwrap_or(0).min(0);
    for n in 0..=n_out {
        let rows: Vec<i64> = if phi.singular_part_complete() {
            let b = 8 * n * m - dmin.min(4 * dmin);
            if b < 0 {
                continue;
            }
            let rb = crate::paramodular::isqrt(b);
            (-rb..=rb).collect()
        } else {
            if 2 * n > phi.n_max {
                return Err(JacobiError::InsufficientCoverage { n: 2 * n, r: 0 });
            }
            let mut rs: Vec<i64> = phi.coeffs.range((2 * n, i64::MIN)..=(2 * n, i64::MAX)).map(|((_, r), _)| *r).collect();
            if n % 2 == 0 {
                rs.extend(phi.coeffs.range((n / 2, i64::MIN)..=(n / 2, i64::MAX)).map(|((_, r), _)| 2 * r));
            }
            rs.sort_unstable();
            rs.dedup();
            rs
        };
        for r in rows {
            let mut v = phi.coeff(2 * n, r)?;
            if n % 2 == 0 && r % 2 == 0 {
                let w = phi.coeff(n / 2, r / 2)?;
                f.mul_add_assign(&mut v, &two, &w);
            }
            if !f.is_zero(&v) {
                coeffs.insert((n, r), v);
            }
        }
    }
    Ok(JacobiFormFragment { field: f.clone(), weight: k, index: 2 * m, n_max: n_out, coeffs })
}

/// Gritsenko lift on the given indices:
/// `a(n, r, m) = sum_{d | gcd(n, r, m)} d^(k-1) c(nm/d^2, r/d)`.
pub fn gritsenko_lift<F: Field>(
    phi: &JacobiFormFragment<F>,
    cover: &[FourierIndex],
) -> Result<ParamodularFragment<F>, JacobiError> {
    let f = &phi.field;
    let level = phi.index;
    let mut coeffs = BTreeMap::new();
    for t in cover {
        let g = num_integer::gcd(num_integer::gcd(t.n, t.r.abs()), t.m);
        let mut acc = f.zero();
        for d in 1..=g {
            if g % d != 0 {
                continue;
            }
            let c = phi.coeff(t.n * t.m / (d * d), t.r / d)?;
            if !f.is_zero(&c) {
                let w = weight_power(f, d, phi.weight)?;
                f.mul_add_assign(&mut acc, &w, &c);
            }
        }
        coeffs.insert(*t, acc);
    }
    ParamodularFragment::from_map(f.clone(), level, phi.weight, coeffs)
        .map_err(|_| JacobiError::InsufficientCoverage { n: 0, r: 0 })
}

/// Dimensions of spaces of Jacobi cusp forms, keyed by `(weight, index)`,
/// each entry tagged with where it came from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DimensionTable {
    entries: BTreeMap<(i64, i64), (usize, String)>,
}

/// `(N, dim J_{2,N}^cusp, dim S_2(K(N))^+, dim S_2(K(N))^-)`.
pub const ESTABLISHED: [(i64, usize, usize, usize); 9] = [
    (249, 5, 6, 0),
    (277, 10, 11, 0),
    (295, 6, 7, 0),
    (349, 11, 12, 0),
    (353, 11, 12, 0),
    (389, 11, 12, 0),
    (461, 12, 13, 0),
    (523, 17, 18, 0),
    (587, 18, 19, 1),
];

impl DimensionTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Weight-2 rows for the nine levels in [`ESTABLISHED`].
    pub fn established() -> Self {
        let mut t = Self::new();
        for (n, d, _, _) in ESTABLISHED {
            t.insert(2, n, d, "established");
        }
        t
    }

    pub fn insert(&mut self, weight: i64, index: i64, dim: usize, source: &str) {
        self.entries.insert((weight, index), (dim, source.to_string()));
    }

    pub fn get(&self, weight: i64, index: i64) -> Option<usize> {
        self.entries.get(&(weight, index)).map(|(d, _)| *d)
    }

    pub fn source(&self, weight: i64, index: i64) -> Option<&str> {
        self.entries.get(&(weight, index)).map(|(_, s)| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, i64, usize, &str)> {
        self.entries.iter().map(|((k, m), (d, s))| (*k, *m, *d, s.as_str()))
    }
}

impl fmt::Display for DimensionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# weight index dim source")?;
        for (k, m, d, s) in self.iter() {
            writeln!(f, "{k} {m} {d} {s}")?;
        }
        Ok(())
    }
}

impl FromStr for DimensionTable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut t = DimensionTable::new();
        for (i, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() < 3 {
                return Err(format!("line {}: expected 'weight index dim [source]'", i + 1));
            }
            let num = |j: usize| parts[j].parse::<i64>().map_err(|_| format!("line {}: bad integer '{}'", i + 1, parts[j]));
            let dim = num(2)?;
            if dim < 0 {
                return Err(format!("line {}: negative dimension", i + 1));
            }
            let source = if parts.len() > 3 { parts[3..].join(" ") } else { "user".to_string() };
            t.insert(num(0)?, num(1)?, dim as usize, &source);
        }
        Ok(t)
    }
}

/// Candidate families for [`space_basis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Blocks of `q`-order one: `12 - k` thetas.
    ThetaBlocks,
    /// Blocks of `q`-order two: `24 - k` thetas.
    ThetaBlockProducts,
    /// `V_2` images of a basis at index `m/2`.
    V2Images,
    /// Blocks with one theta in the denominator dividing a numerator theta.
    ExactQuotients,
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "theta-blocks" => Ok(Strategy::ThetaBlocks),
            "products" => Ok(Strategy::ThetaBlockProducts),
            "v2" => Ok(Strategy::V2Images),
            "quotients" => Ok(Strategy::ExactQuotients),
            _ => Err(format!("unknown strategy '{s}'")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BasisOptions {
    /// Coverage of the returned fragments.
    pub n_max: i64,
    /// Prime used to select candidates before exact verification.
    pub prime: u64,
    /// Cap on candidates enumerated per strategy.
    pub max_candidates: usize,
}

impl BasisOptions {
    pub fn for_index(m: i64) -> Self {
        BasisOptions { n_max: (m + 3) / 4 + 1, prime: 12347, max_candidates: 20000 }
    }
}

/// A generator for one basis element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasisSource {
    Block(ThetaQuotient),
    V2(Box<BasisSource>),
}

impl fmt::Display for BasisSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisSource::Block(q) => {
                write!(f, "eta^{}", q.eta_power)?;
                for (d, k) in &q.mult {
                    if *k == 1 {
                        write!(f, " th{d}")?;
                    } else {
                        write!(f, " th{d}^{k}")?;
                    }
                }
                Ok(())
            }
            BasisSource::V2(inner) => write!(f, "V2({inner})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BasisResult {
    pub forms: Vec<JacobiFormFragment<Rationals>>,
    pub sources: Vec<BasisSource>,
    pub target: Option<usize>,
    /// Set when no target dimension is known, so completeness is unproven.
    pub shortfall: bool,
}

impl BasisSource {
    /// Exact expansion as a fragment of weight `k` and the given index.
    pub fn expand<F: Field>(&self, field: F, weight: i64, index: i64, n_max: i64) -> Result<JacobiFormFragment<F>, JacobiError> {
        match self {
            BasisSource::Block(q) => {
                let s = q.expand(field, QDEN * n_max)?;
                JacobiFormFragment::from_series(&s, weight, index)
            }
            BasisSource::V2(inner) => {
                let half = inner.expand(field, weight, index / 2, 2 * n_max + 1)?;
                v2(&half, n_max)
            }
        }
    }
}

fn block_candidates(k: i64, m: i64, len: i64, cap: usize) -> Vec<BasisSource> {
    if len < 0 {
        return Vec::new();
    }
    let Ok(blocks) = search_capped(k, m, len as usize, cap) else { return Vec::new() };
    blocks
        .into_iter()
        .map(|b| b.to_quotient())
        .filter(|q| q.min_order().signum() > 0)
        .map(BasisSource::Block)
        .collect()
}

fn search_capped(k: i64, m: i64, len: usize, cap: usize) -> Result<Vec<ThetaBlock>, ThetaError> {
    if len <= 12 {
        let mut v = search(k, m, len)?;
        v.truncate(cap);
        return Ok(v);
    }
    let a = 2 * k - len as i64;
    let mut out = Vec::new();
    for_each_square_partition(2 * m, len, 1, |ds| {
        if out.len() < cap {
            if let Ok(tb) = ThetaBlock::new(a, ds.to_vec()) {
                out.push(tb);
            }
        }
    });
    Ok(out)
}

fn quotient_candidates(k: i64, m: i64, cap: usize) -> Vec<BasisSource> {
    // eta^a prod theta_d / theta_e with 13 - k numerator thetas
    let len = 13 - k;
    if len < 1 {
        return Vec::new();
    }
    let a = 2 * k - (len - 1);
    let mut out = Vec::new();
    let mut e = 1i64;
    while e * e <= 2 * m && out.len() < cap {
        for_each_square_partition(2 * m + e * e, len as usize, 1, |ds| {
            if out.len() >= cap {
                return;
            }
            if ds.contains(&(e as u32)) || !ds.iter().any(|&d| d as i64 % e == 0) {
                return;
            }
            let q = ThetaQuotient::new(a, ds.iter().map(|&d| (d, 1)).chain([(e as u32, -1)]));
            if q.q_order_24() == QDEN && q.min_order().signum() > 0 {
                out.push(BasisSource::Block(q));
            }
        });
        e += 1;
    }
    out
}

/// Linearly independent cusp forms of weight `k` and index `m` from the
/// requested candidate families. Candidates are screened modulo
/// `opts.prime`; the selected forms are then expanded exactly and their
/// rank verified over `Q`.
pub fn space_basis(
    k: i64,
    m: i64,
    strategies: &[Strategy],
    dims: &DimensionTable,
    opts: &BasisOptions,
) -> Result<BasisResult, JacobiError> {
    let target = dims.get(k, m);
    let fp = PrimeField::new(opts.prime)?;
    let reps = JacobiFormFragment::<Rationals>::class_reps(k, m, opts.n_max);
    let mut ech = Echelon::new(fp.clone(), reps.len());
    let mut chosen: Vec<BasisSource> = Vec::new();
    let done = |n: usize| target.is_some_and(|t| n >= t);
    'outer: for s in strategies {
        if done(chosen.len()) {
            break;
        }
        let cands = match s {
            Strategy::ThetaBlocks => block_candidates(k, m, 12 - k, opts.max_candidates),
            Strategy::ThetaBlockProducts => block_candidates(k, m, 24 - k, opts.max_candidates),
            Strategy::ExactQuotients => quotient_candidates(k, m, opts.max_candidates),
            Strategy::V2Images => {
                if m % 2 != 0 {
                    continue;
                }
                let half_opts = BasisOptions { n_max: 2 * opts.n_max + 1, ..opts.clone() };
                let half = space_basis(k, m / 2, &[Strategy::ThetaBlocks], &DimensionTable::new(), &half_opts)?;
                half.sources.into_iter().map(|s| BasisSource::V2(Box::new(s))).collect()
            }
        };
        for chunk in cands.chunks(rayon::current_num_threads().max(1) * 2) {
            let vecs: Vec<Result<Vec<u64>, JacobiError>> = chunk
                .par_iter()
                .map(|c| c.expand(fp.clone(), k, m, opts.n_max)?.vector(&reps))
                .collect();
            for (c, v) in chunk.iter().zip(vecs) {
                let v = match v {
                    Ok(v) => v,
                    Err(JacobiError::Series(_)) | Err(JacobiError::Theta(_)) => continue,
                    Err(e) => return Err(e),
                };
                if ech.insert(&v) {
                    chosen.push(c.clone());
                    if done(chosen.len()) {
                        break 'outer;
                    }
                }
            }
        }
    }
    if let Some(t) = target {
        if chosen.len() < t {
            return Err(JacobiError::RankDeficit { found: chosen.len(), target: t });
        }
    }
    let forms: Vec<JacobiFormFragment<Rationals>> = chosen
        .par_iter()
        .map(|c| c.expand(Rationals, k, m, opts.n_max))
        .collect::<Result<_, _>>()?;
    for f in &forms {
        if !f.is_cusp() {
            return Err(JacobiError::ClassInvarianceViolation { n: 0, r: 0 });
        }
    }
    let rows: Vec<Vec<Rat>> = forms.iter().map(|f| f.vector(&reps)).collect::<Result<_, _>>()?;
    let r = rank_q(&rows);
    if r < forms.len() {
        return Err(JacobiError::RankDeficit { found: r, target: forms.len() });
    }
    Ok(BasisResult { forms, sources: chosen, target, shortfall: target.is_none() })
}
