//! Dedekind eta, the odd Jacobi theta function, and theta blocks.
//!
//! `eta = q^(1/24) prod (1 - q^n)` and
//! `theta_d = q^(1/8) (zeta^(d/2) - zeta^(-d/2)) prod (1 - q^n zeta^d)(1 - q^n zeta^-d)(1 - q^n)`.
//! A theta block is `eta^a prod_i theta_(d_i)`; its weight is `(a + l)/2`,
//! its index `sum d_i^2 / 2` and its `q`-order `a/24 + l/8`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use crate::field::{Field, Rat, Rationals};
use crate::series::{Laurent, PuiseuxSeries, SeriesError, QDEN};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ThetaError {
    #[error("theta block is not admissible: {0}")]
    Inadmissible(String),
    #[error("no theta block of weight {weight} with {len} thetas has integral q-order")]
    InadmissibleShape { weight: i64, len: usize },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// `q`-exponent (1/24 units) of the leading term of `theta_d`.
const THETA_VAL: i64 = 3;

/// `eta` known up to `q`-exponent `trunc` (1/24 units).
pub fn eta<F: Field>(field: F, trunc: i64) -> PuiseuxSeries<F> {
    if trunc < 1 {
        return PuiseuxSeries::zero(field, trunc);
    }
    let top = ((trunc - 1) / QDEN) as usize;
    let mut prod = vec![0i64; top + 1];
    prod[0] = 1;
    for n in 1..=top {
        for k in (n..=top).rev() {
            prod[k] -= prod[k - n];
        }
    }
    let terms: Vec<_> = prod
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0)
        .map(|(k, c)| (1 + QDEN * k as i64, 0, field.from_i64(*c)))
        .collect();
    PuiseuxSeries::from_terms(field, trunc, terms)
}

/// `theta(tau, d z)` in product form, known up to `q`-exponent `trunc`.
///
/// Integer expansions are cached per `(d, trunc)` and mapped into `field`.
pub fn theta<F: Field>(field: F, d: u32, trunc: i64) -> PuiseuxSeries<F> {
    assert!(d >= 1, "theta index must be positive");
    let ints = theta_integral(d, trunc);
    let f = &field;
    PuiseuxSeries::from_terms(
        field.clone(),
        trunc,
        ints.iter().map(|&(a, b, c)| (a, b, f.from_i64(c))),
    )
}

type ThetaTerms = Arc<Vec<(i64, i64, i64)>>;

fn theta_cache() -> &'static Mutex<HashMap<(u32, i64), ThetaTerms>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, i64), ThetaTerms>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn theta_integral(d: u32, trunc: i64) -> ThetaTerms {
    let key = (d, trunc.max(THETA_VAL - 1));
    if let Some(v) = theta_cache().lock().unwrap().get(&key) {
        return v.clone();
    }
    let v = Arc::new(theta_product_terms(d as i64, key.1));
    theta_cache().lock().unwrap().insert(key, v.clone());
    v
}

/// Expands the product with integer coefficients, one slice per integral
/// power of `q` above `q^(1/8)`.
fn theta_product_terms(d: i64, trunc: i64) -> Vec<(i64, i64, i64)> {
    if trunc < THETA_VAL {
        return Vec::new();
    }
    let top = ((trunc - THETA_VAL) / QDEN) as usize;
    // slice k holds exponents of zeta^(1/2) in [-width, width]
    let width = (d * (2 * top as i64 + 1)) as usize;
    let mut slices: Vec<Vec<i64>> = vec![vec![0; 2 * width + 1]; top + 1];
    slices[0][width + d as usize] = 1;
    slices[0][width - d as usize] = -1;
    for n in 1..=top {
        for shift in [2 * d, -2 * d, 0] {
            // multiply by (1 - q^n zeta^shift/2), high slices first
            for k in (n..=top).rev() {
                let (lo, hi) = slices.split_at_mut(k);
                let src = &lo[k - n];
                let dst = &mut hi[0];
                for (j, &c) in src.iter().enumerate() {
                    if c != 0 {
                        let t = j as i64 + shift;
                        if t >= 0 && (t as usize) < dst.len() {
                            dst[t as usize] -= c;
                        }
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for (k, sl) in slices.iter().enumerate() {
        for (j, &c) in sl.iter().enumerate() {
            if c != 0 {
                out.push((THETA_VAL + QDEN * k as i64, j as i64 - width as i64, c));
            }
        }
    }
    out
}

/// `theta_d` from the sum form `sum_n (-1)^n q^((2n+1)^2/8) zeta^(d(2n+1)/2)`.
pub fn theta_sum_form<F: Field>(field: F, d: u32, trunc: i64) -> PuiseuxSeries<F> {
    let d = d as i64;
    let mut terms = Vec::new();
    let mut n = 0i64;
    loop {
        let odd = 2 * n + 1;
        let a = 3 * odd * odd;
        if a > trunc {
            break;
        }
        let sign = if n % 2 == 0 { 1 } else { -1 };
        terms.push((a, d * odd, field.from_i64(sign)));
        // n -> -n-1 gives the same q-power and the mirrored zeta-power.
        terms.push((a, -d * odd, field.from_i64(-sign)));
        n += 1;
    }
    PuiseuxSeries::from_terms(field, trunc, terms)
}

/// Leading `zeta`-polynomial `prod_i (zeta^(d_i/2) - zeta^(-d_i/2))^(m_i)` for
/// nonnegative multiplicities, as a Laurent polynomial in `zeta^(1/2)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BabyBlock(pub Laurent<Rat>);

impl BabyBlock {
    pub fn from_thetas(ds: &[u32]) -> Self {
        let f = Rationals;
        let mut acc = Laurent::monomial(&f, 0, Rat::one());
        for &d in ds {
            let fac = Laurent::from_terms(&f, [(d as i64, Rat::one()), (-(d as i64), Rat::from_int(-1))]);
            acc = acc.mul(&f, &fac);
        }
        BabyBlock(acc)
    }

    /// `b(zeta) -> b(zeta^k)`
    pub fn dilate(&self, k: i64) -> Self {
        BabyBlock(self.0.dilate(&Rationals, k))
    }

    pub fn divides(&self, other: &BabyBlock) -> bool {
        baby_divides(self, other)
    }
}

/// Exact Laurent-polynomial divisibility `b1 | b2`.
pub fn baby_divides(b1: &BabyBlock, b2: &BabyBlock) -> bool {
    b2.0.div_exact(&Rationals, &b1.0).is_some()
}

/// Symbolic theta block `eta^a prod theta_(d_i)` with trivial character.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThetaBlock {
    eta_power: i64,
    thetas: Vec<u32>,
}

impl ThetaBlock {
    /// Rejects blocks whose expansion would have non-integral `q`- or
    /// `zeta`-exponents.
    pub fn new(eta_power: i64, mut thetas: Vec<u32>) -> Result<Self, ThetaError> {
        if thetas.iter().any(|&d| d == 0) {
            return Err(ThetaError::Inadmissible("theta index 0".into()));
        }
        thetas.sort_unstable();
        let l = thetas.len() as i64;
        if (eta_power + 3 * l).rem_euclid(QDEN) != 0 {
            return Err(ThetaError::Inadmissible(format!(
                "q-order {}/24 + {}/8 is not integral",
                eta_power, l
            )));
        }
        let sum: u64 = thetas.iter().map(|&d| d as u64).sum();
        if sum % 2 != 0 {
            return Err(ThetaError::Inadmissible(format!("sum of theta indices {sum} is odd")));
        }
        Ok(ThetaBlock { eta_power, thetas })
    }

    pub fn eta_power(&self) -> i64 {
        self.eta_power
    }

    pub fn thetas(&self) -> &[u32] {
        &self.thetas
    }

    pub fn weight(&self) -> i64 {
        (self.eta_power + self.thetas.len() as i64) / 2
    }

    pub fn index(&self) -> i64 {
        self.thetas.iter().map(|&d| (d as i64) * (d as i64)).sum::<i64>() / 2
    }

    pub fn q_order(&self) -> i64 {
        (self.eta_power + 3 * self.thetas.len() as i64) / QDEN
    }

    pub fn baby(&self) -> BabyBlock {
        BabyBlock::from_thetas(&self.thetas)
    }

    pub fn to_quotient(&self) -> ThetaQuotient {
        let mut mult = BTreeMap::new();
        for &d in &self.thetas {
            *mult.entry(d).or_insert(0) += 1;
        }
        ThetaQuotient { eta_power: self.eta_power, mult }
    }

    /// Expansion known up to `q`-exponent `trunc` (1/24 units).
    pub fn expand<F: Field>(&self, field: F, trunc: i64) -> Result<PuiseuxSeries<F>, ThetaError> {
        self.to_quotient().expand(field, trunc)
    }

    /// Minimum over real `x` of the order function
    /// `a/24 + (1/2) sum_i dist(d_i x, Z + 1/2)^2`.
    pub fn min_order(&self) -> Rat {
        self.to_quotient().min_order()
    }
}

impl fmt::Display for ThetaBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "eta^{}", self.eta_power)?;
        for d in &self.thetas {
            write!(f, " th{d}")?;
        }
        Ok(())
    }
}

/// Parses the display form, e.g. `eta^-6 th1 th1 th2`.
impl std::str::FromStr for ThetaBlock {
    type Err = ThetaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ThetaError::Inadmissible(format!("cannot parse {s:?}"));
        let mut eta = 0;
        let mut thetas = Vec::new();
        for tok in s.split_whitespace() {
            if let Some(a) = tok.strip_prefix("eta^") {
                eta = a.parse().map_err(|_| bad())?;
            } else if let Some(d) = tok.strip_prefix("th") {
                thetas.push(d.parse().map_err(|_| bad())?);
            } else {
                return Err(bad());
            }
        }
        ThetaBlock::new(eta, thetas)
    }
}

/// `eta^a prod_d theta_d^(m_d)` with multiplicities of either sign; negative
/// multiplicities are denominator factors removed by exact division.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThetaQuotient {
    pub eta_power: i64,
    pub mult: BTreeMap<u32, i64>,
}

impl ThetaQuotient {
    pub fn new(eta_power: i64, mult: impl IntoIterator<Item = (u32, i64)>) -> Self {
        let mut m = BTreeMap::new();
        for (d, k) in mult {
            assert!(d >= 1);
            *m.entry(d).or_insert(0) += k;
        }
        m.retain(|_, k| *k != 0);
        ThetaQuotient { eta_power, mult: m }
    }

    fn theta_count(&self) -> i64 {
        self.mult.values().sum()
    }

    pub fn weight_twice(&self) -> i64 {
        self.eta_power + self.theta_count()
    }

    /// Index times two.
    pub fn index_twice(&self) -> i64 {
        self.mult.iter().map(|(&d, &k)| k * (d as i64) * (d as i64)).sum()
    }

    /// `q`-order in 1/24 units.
    pub fn q_order_24(&self) -> i64 {
        self.eta_power + 3 * self.theta_count()
    }

    pub fn has_denominator(&self) -> bool {
        self.mult.values().any(|&k| k < 0)
    }

    pub fn as_block(&self) -> Option<ThetaBlock> {
        if self.has_denominator() {
            return None;
        }
        let thetas = self.mult.iter().flat_map(|(&d, &k)| std::iter::repeat_n(d, k as usize)).collect();
        ThetaBlock::new(self.eta_power, thetas).ok()
    }

    /// Numerator and denominator baby blocks.
    pub fn baby_parts(&self) -> (BabyBlock, BabyBlock) {
        let mut num = Vec::new();
        let mut den = Vec::new();
        for (&d, &k) in &self.mult {
            let v = if k > 0 { &mut num } else { &mut den };
            v.extend(std::iter::repeat_n(d, k.unsigned_abs() as usize));
        }
        (BabyBlock::from_thetas(&num), BabyBlock::from_thetas(&den))
    }

    /// Expansion known up to `q`-exponent `trunc`; denominators are divided
    /// out exactly and fail with `NonExactDivision` if the quotient has a pole.
    pub fn expand<F: Field>(&self, field: F, trunc: i64) -> Result<PuiseuxSeries<F>, ThetaError> {
        let val = self.q_order_24();
        let rel = trunc - val;
        if rel < 0 {
            return Ok(PuiseuxSeries::zero(field, trunc));
        }
        let mut acc: Option<PuiseuxSeries<F>> = None;
        for (&d, &k) in self.mult.iter().rev() {
            if k <= 0 {
                continue;
            }
            let th = theta(field.clone(), d, rel + THETA_VAL);
            for _ in 0..k {
                acc = Some(match acc {
                    None => th.clone(),
                    Some(a) => a.mul(&th)?,
                });
            }
        }
        for (&d, &k) in self.mult.iter().rev() {
            if k >= 0 {
                continue;
            }
            // Division shrinks relative precision by nothing, but the
            // numerator must exist; an empty numerator means a pole.
            let th = theta(field.clone(), d, rel + THETA_VAL + 1);
            for _ in 0..(-k) {
                let num = acc.unwrap_or_else(|| PuiseuxSeries::one(field.clone(), rel));
                acc = Some(num.div_exact(&th)?);
            }
        }
        if self.eta_power != 0 {
            let e = eta(field.clone(), rel + 1).pow(self.eta_power)?;
            acc = Some(match acc {
                None => e,
                Some(a) => a.mul(&e)?,
            });
        }
        let out = acc.unwrap_or_else(|| PuiseuxSeries::one(field.clone(), rel));
        Ok(out.truncate(trunc))
    }

    /// `s / self`, one factor at a time: multiplies by `eta^-a`, divides by
    /// each numerator theta and multiplies by each denominator theta. Much
    /// cheaper than dividing by the full expansion, since every theta has
    /// two-term slices.
    pub fn divide<F: Field>(&self, s: &PuiseuxSeries<F>) -> Result<PuiseuxSeries<F>, ThetaError> {
        let field = s.field().clone();
        let mut acc = s.clone();
        for (&d, &k) in self.mult.iter().rev() {
            for _ in 0..k.abs() {
                let va = acc.valuation().unwrap_or(acc.trunc());
                if k > 0 {
                    let tb = acc.trunc() + THETA_VAL - va.min(0) + 1;
                    acc = acc.div_exact(&theta(field.clone(), d, tb))?;
                } else {
                    let tb = acc.trunc() - va + THETA_VAL;
                    acc = acc.mul(&theta(field.clone(), d, tb))?;
                }
            }
        }
        if self.eta_power != 0 {
            let va = acc.valuation().unwrap_or(acc.trunc());
            let e = eta(field, acc.trunc() - va + 1).pow(-self.eta_power)?;
            acc = acc.mul(&e)?;
        }
        Ok(acc)
    }

    /// Minimum over real `x` of `a/24 + (1/2) sum_d m_d dist(d x, Z + 1/2)^2`.
    ///
    /// The function is even and 1-periodic; on each interval between
    /// consecutive points `k/(2d)` it is a quadratic, so the minimum is at an
    /// endpoint or at an interior vertex.
    pub fn min_order(&self) -> Rat {
        let mut pts: Vec<Rat> = vec![Rat::zero(), Rat::new(1, 2)];
        for &d in self.mult.keys() {
            for k in 1..d as i64 {
                pts.push(Rat::new(k, 2 * d as i64));
            }
        }
        pts.sort();
        pts.dedup();
        let base = Rat::new(self.eta_power, 24);
        let eval = |x: &Rat| -> Rat {
            let mut s = Rat::zero();
            for (&d, &k) in &self.mult {
                let y = &Rat::from_int(d as i64) * x;
                let dist = &frac(&y) - &Rat::new(1, 2);
                s = &s + &(&Rat::from_int(k) * &(&dist * &dist));
            }
            &base + &(&s * &Rat::new(1, 2))
        };
        let mut best: Option<Rat> = None;
        let mut consider = |v: Rat| {
            if best.as_ref().is_none_or(|b| v < *b) {
                best = Some(v);
            }
        };
        for w in pts.windows(2) {
            let (lo, hi) = (&w[0], &w[1]);
            consider(eval(lo));
            consider(eval(hi));
            let mid = &(lo + hi) * &Rat::new(1, 2);
            // (d x - s)^2 with s the nearest half-integer on this interval
            let mut quad = Rat::zero();
            let mut lin = Rat::zero();
            for (&d, &k) in &self.mult {
                let dm = &Rat::from_int(d as i64) * &mid;
                let s = &floor_rat(&dm) + &Rat::new(1, 2);
                let kd = Rat::from_int(k * d as i64);
                quad = &quad + &(&kd * &Rat::from_int(d as i64));
                lin = &lin + &(&kd * &s);
            }
            if quad.signum() > 0 {
                let x = &lin * &quad.recip().unwrap();
                if &x > lo && &x < hi {
                    consider(eval(&x));
                }
            }
        }
        best.unwrap()
    }
}

fn floor_rat(x: &Rat) -> Rat {
    use num_integer::Integer;
    Rat::from_bigint(x.numer().div_floor(&x.denom()))
}

fn frac(x: &Rat) -> Rat {
    x - &floor_rat(x)
}

/// All nondecreasing `d`-tuples of length `len` with `sum d_i^2 = 2 index`,
/// in lexicographic order, as weight-`weight` theta blocks.
pub fn search(weight: i64, index: i64, len: usize) -> Result<Vec<ThetaBlock>, ThetaError> {
    let eta_power = 2 * weight - len as i64;
    if (eta_power + 3 * len as i64).rem_euclid(QDEN) != 0 {
        return Err(ThetaError::InadmissibleShape { weight, len });
    }
    let mut out = Vec::new();
    for_each_square_partition(2 * index, len, 1, |ds| {
        if let Ok(tb) = ThetaBlock::new(eta_power, ds.to_vec()) {
            out.push(tb);
        }
    });
    Ok(out)
}

/// Calls `visit` on each nondecreasing tuple of `len` integers `>= min` whose
/// squares sum to `target`, in lexicographic order.
pub fn for_each_square_partition(target: i64, len: usize, min: u32, mut visit: impl FnMut(&[u32])) {
    fn rec(rem: i64, left: usize, lo: u32, prefix: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32])) {
        if left == 0 {
            if rem == 0 {
                visit(prefix);
            }
            return;
        }
        let mut d = lo;
        loop {
            let sq = (d as i64) * (d as i64);
            if sq * left as i64 > rem {
                break;
            }
            // the remaining parts are all >= d
            prefix.push(d);
            rec(rem - sq, left - 1, d, prefix, visit);
            prefix.pop();
            d += 1;
        }
    }
    let mut prefix = Vec::with_capacity(len);
    rec(target, len, min.max(1), &mut prefix, &mut visit);
}
