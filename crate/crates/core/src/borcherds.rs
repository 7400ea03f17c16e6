//! Fourier–Jacobi expansion of Borcherds products
//! `q^A zeta^B xi^C prod (1 - q^n zeta^r xi^(mN))^c(nm, r)`.
//!
//! The `xi^0` part of the product is the theta quotient
//! `eta^(c(0,0) - sum_{l>0} c(0,l)) prod_{l>0} theta_l^c(0,l)`, which becomes
//! the leading slice. Higher slices are that quotient times the `xi`-slices
//! of `exp(sum_j L_j xi^(jN))` with
//! `L_j = -sum_{k | j} (1/k) sum_{n, r} c(n j/k, r) q^(nk) zeta^(rk)`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::field::{Rat, Rationals};
use crate::jacobi::{JacobiError, JacobiFormFragment};
use crate::paramodular::{isqrt, FourierIndex, ParamodularFragment};
use crate::series::{Laurent, PuiseuxSeries, SeriesError, QDEN, ZDEN};
use crate::theta::{ThetaError, ThetaQuotient};
use crate::weak::{validate_weight0, WeakJacobiFragment};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BorcherdsError {
    #[error("input rejected: {0}")]
    ValidationFailure(String),
    #[error("self-check failed ({check}): {detail}")]
    SelfCheckFailure { check: &'static str, detail: String },
    #[error("coefficient c({n},{r}) of the input is outside its coverage")]
    InsufficientCoverage { n: i64, r: i64 },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
}

impl From<JacobiError> for BorcherdsError {
    fn from(e: JacobiError) -> Self {
        match e {
            JacobiError::InsufficientCoverage { n, r } => BorcherdsError::InsufficientCoverage { n, r },
            other => BorcherdsError::ValidationFailure(other.to_string()),
        }
    }
}

fn self_check(check: &'static str, detail: impl Into<String>) -> BorcherdsError {
    BorcherdsError::SelfCheckFailure { check, detail: detail.into() }
}

/// Prefactor exponents and weight read off the `q^0` terms of `psi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BorcherdsExponents {
    pub level: i64,
    /// `A` in units of 1/24.
    pub a24: i64,
    /// `B` in units of 1/2.
    pub b2: i64,
    /// `C`, the Jacobi index of the leading slice.
    pub c: i64,
    pub weight: i64,
    /// `c(0, l)` for `l >= 0`, nonzero entries only.
    pub q0: BTreeMap<i64, i64>,
}

impl BorcherdsExponents {
    pub fn from_psi(psi: &WeakJacobiFragment) -> Result<Self, BorcherdsError> {
        let mut q0 = BTreeMap::new();
        for (l, v) in psi.q0_terms() {
            let x = v
                .to_i64()
                .filter(|_| v.is_integer())
                .ok_or_else(|| BorcherdsError::ValidationFailure(format!("c(0,{l}) = {v} is not an integer")))?;
            if x != 0 {
                q0.insert(l, x);
            }
        }
        let c00 = q0.get(&0).copied().unwrap_or(0);
        let pos = q0.iter().filter(|(l, _)| **l > 0);
        let a24 = c00 + 2 * pos.clone().map(|(_, c)| c).sum::<i64>();
        let b2 = pos.clone().map(|(l, c)| l * c).sum::<i64>();
        let c2 = pos.map(|(l, c)| l * l * c).sum::<i64>();
        if c2 % 2 != 0 {
            return Err(self_check("character", format!("sum l^2 c(0,l) = {c2} is odd")));
        }
        let level = psi.index();
        let out = BorcherdsExponents { level, a24, b2, c: c2 / 2, weight: c00 / 2, q0 };
        if c00 % 2 != 0 {
            return Err(self_check("character", format!("c(0,0) = {c00} is odd")));
        }
        if a24 % QDEN != 0 || b2 % 2 != 0 || out.c % level != 0 {
            return Err(self_check(
                "character",
                format!("prefactor q^({a24}/24) zeta^({b2}/2) xi^{} is not integral at level {level}", out.c),
            ));
        }
        Ok(out)
    }

    /// Slice index `C / N` of the leading Fourier–Jacobi coefficient.
    pub fn leading_slice(&self) -> i64 {
        self.c / self.level
    }

    pub fn leading_block(&self) -> ThetaQuotient {
        let pos: Vec<(u32, i64)> = self.q0.iter().filter(|(l, _)| **l > 0).map(|(l, c)| (*l as u32, *c)).collect();
        let c00 = self.q0.get(&0).copied().unwrap_or(0);
        ThetaQuotient::new(c00 - pos.iter().map(|(_, c)| c).sum::<i64>(), pos)
    }
}

/// Symbolic leading theta quotient of `Borch(psi)`.
pub fn leading_block(psi: &WeakJacobiFragment) -> Result<ThetaQuotient, BorcherdsError> {
    Ok(BorcherdsExponents::from_psi(psi)?.leading_block())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BorcherdsExpansion {
    pub exponents: BorcherdsExponents,
    /// Slices `m0, m0 + 1, ...` as Jacobi fragments of index `m N`.
    pub slices: Vec<JacobiFormFragment<Rationals>>,
    pub fragment: ParamodularFragment<Rationals>,
    pub fricke_sign: Option<i8>,
}

/// `Borch(psi)` to Fourier–Jacobi depth `depth`, each slice known for
/// `q`-exponents `n <= n_max`.
pub fn borcherds_expand(psi: &WeakJacobiFragment, depth: usize, n_max: i64) -> Result<BorcherdsExpansion, BorcherdsError> {
    if depth == 0 || n_max < 1 {
        return Err(BorcherdsError::ValidationFailure("depth and n_max must be positive".into()));
    }
    let rep = validate_weight0(psi);
    if rep.degenerate {
        return Err(BorcherdsError::ValidationFailure("zero input".into()));
    }
    if !rep.passes() {
        return Err(BorcherdsError::ValidationFailure(rep.violations.join("; ")));
    }
    let exps = BorcherdsExponents::from_psi(psi)?;
    let level = exps.level;
    let m0 = exps.leading_slice();
    if m0 < 1 {
        return Err(self_check("character", format!("leading slice index {m0} is not positive")));
    }
    let trunc = QDEN * n_max;
    let theta = exps.leading_block().expand(Rationals, trunc)?;
    check_leading_block(psi, &exps, &theta, n_max)?;

    let e = exp_slices(psi, depth - 1, n_max)?;
    let mut slices = Vec::with_capacity(depth);
    for (j, ej) in e.iter().enumerate() {
        let s = theta.mul(ej)?.truncate(trunc);
        let m = m0 + j as i64;
        let slice = JacobiFormFragment::from_series(&s, exps.weight, m * level)
            .map_err(|err| self_check("slice validity", format!("slice {m}: {err}")))?;
        if !slice.is_cusp() {
            return Err(self_check("slice validity", format!("slice {m} is not cuspidal")));
        }
        if let Some(((n, r), v)) = slice.coeffs().iter().find(|(_, v)| !v.is_integer()) {
            return Err(self_check("integrality", format!("a({n},{r},{m}) = {v}")));
        }
        slices.push(slice);
    }

    let mut coeffs = BTreeMap::new();
    let m_top = m0 + depth as i64 - 1;
    for m in 1..=m_top {
        for n in 1..=n_max {
            let b = 4 * n * m * level - 1;
            let rb = isqrt(b);
            for r in -rb..=rb {
                let v = if m < m0 {
                    Rat::zero()
                } else {
                    slices[(m - m0) as usize].coeff(n, r).expect("within coverage")
                };
                let t = FourierIndex::new(level, n, r, m).expect("positive index");
                coeffs.insert(t, v);
            }
        }
    }
    let fragment = ParamodularFragment::from_map(Rationals, level, exps.weight, coeffs)
        .map_err(|err| self_check("slice validity", err.to_string()))?;
    let fricke_sign = fragment.fricke_sign().map_err(|err| self_check("Fricke sign", err.to_string()))?;
    Ok(BorcherdsExpansion { exponents: exps, slices, fragment, fricke_sign })
}

/// `xi^(jN)`-coefficients `E_0 = 1, E_1, ..., E_depth` of
/// `prod_{m >= 1} prod_{n, r} (1 - q^n zeta^r xi^(mN))^c(nm, r)`.
pub fn exp_slices(psi: &WeakJacobiFragment, depth: usize, n_max: i64) -> Result<Vec<PuiseuxSeries<Rationals>>, BorcherdsError> {
    let trunc = QDEN * n_max;
    let form = psi.form();
    if !form.singular_part_complete() {
        return Err(BorcherdsError::ValidationFailure("singular part of the input is not covered".into()));
    }
    let level = psi.index();
    let dmin = form.min_disc().unwrap_or(0).min(0);
    let mut logs = vec![PuiseuxSeries::zero(Rationals, trunc)];
    for j in 1..=depth as i64 {
        let mut terms = Vec::new();
        for k in (1..=j).filter(|k| j % k == 0) {
            let w = Rat::new(-1, k);
            for n in (0..).take_while(|n| n * k <= n_max) {
                let nn = n * (j / k);
                let b = 4 * nn * level - dmin;
                let rb = isqrt(b);
                for r in -rb..=rb {
                    let c = form.coeff(nn, r)?;
                    if !c.is_zero() {
                        terms.push((QDEN * n * k, ZDEN * r * k, &c * &w));
                    }
                }
            }
        }
        logs.push(PuiseuxSeries::from_terms(Rationals, trunc, terms));
    }
    let mut e = vec![PuiseuxSeries::one(Rationals, trunc)];
    for j in 1..=depth {
        let mut acc = PuiseuxSeries::zero(Rationals, trunc);
        for i in 1..=j {
            acc = acc.add_scaled(&logs[i].mul(&e[j - i])?, &Rat::from_int(i as i64))?;
        }
        e.push(acc.scale(&Rat::new(1, j as i64)));
    }
    Ok(e)
}

/// Compares the expanded leading quotient with the `xi^0` part of the
/// product, `q^A zeta^B prod_{r<0} (1 - zeta^r)^c(0,r) prod_{n>=1, r} (1 - q^n zeta^r)^c(0,r)`,
/// after clearing the denominators `(1 - zeta^r)`.
fn check_leading_block(
    psi: &WeakJacobiFragment,
    exps: &BorcherdsExponents,
    theta: &PuiseuxSeries<Rationals>,
    n_max: i64,
) -> Result<(), BorcherdsError> {
    let f = Rationals;
    let trunc = theta.trunc();
    let one = Laurent::monomial(&f, 0, Rat::one());
    let mut num = Laurent::monomial(&f, exps.b2, Rat::one());
    let mut den = one.clone();
    for (&l, &c) in exps.q0.iter().filter(|(l, _)| **l > 0) {
        // c(0,-l) = c(0,l)
        let fac = Laurent::from_terms(&f, [(0, Rat::one()), (-ZDEN * l, Rat::from_int(-1))]);
        for _ in 0..c.abs() {
            if c > 0 {
                num = num.mul(&f, &fac);
            } else {
                den = den.mul(&f, &fac);
            }
        }
    }
    let mut rhs = PuiseuxSeries::from_slices(f, trunc, [(exps.a24, num)]);
    let q0 = psi.q0_terms();
    for n in 1..=n_max {
        for (&l, c) in &q0 {
            let c = c.to_i64().expect("checked integral");
            for r in if l == 0 { vec![0] } else { vec![l, -l] } {
                let fac = PuiseuxSeries::from_terms(f, trunc, [(0, 0, Rat::one()), (QDEN * n, ZDEN * r, Rat::from_int(-1))]);
                rhs = rhs.mul(&fac.pow(c)?)?;
            }
        }
    }
    let lhs = theta.mul(&PuiseuxSeries::from_slices(f, trunc, [(0, den)]))?;
    let t = lhs.trunc().min(rhs.trunc());
    if lhs.truncate(t) != rhs.truncate(t) {
        return Err(self_check("leading block", "expanded theta quotient differs from the xi^0 part of the product"));
    }
    Ok(())
}
