//! Weight-0 weakly holomorphic Jacobi forms built from theta blocks:
//! quotients by `Delta = eta^24` and the inflation method
//! `psi = sum_i alpha_i (phi_i | V_2) / phi_i + sum_j beta_j Theta_j / phi_j`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::field::{Field, Rat, Rationals};
use crate::jacobi::{reduce_r, v2, JacobiError, JacobiFormFragment};
use crate::series::{PuiseuxSeries, QDEN};
use crate::theta::{baby_divides, ThetaBlock, ThetaError, ThetaQuotient};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WeakError {
    #[error("invalid input: {0}")]
    InvalidSpec(String),
    #[error("validation failed: {0}")]
    ValidationFailure(String),
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
}

impl From<crate::series::SeriesError> for WeakError {
    fn from(e: crate::series::SeriesError) -> Self {
        WeakError::Theta(ThetaError::Series(e))
    }
}

/// A weight-0 fragment over `Q` with `q`-order at least zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakJacobiFragment {
    form: JacobiFormFragment<Rationals>,
}

impl WeakJacobiFragment {
    pub fn new(form: JacobiFormFragment<Rationals>) -> Result<Self, WeakError> {
        if form.weight() != 0 {
            return Err(WeakError::InvalidSpec(format!("weight {} is not 0", form.weight())));
        }
        Ok(WeakJacobiFragment { form })
    }

    pub fn form(&self) -> &JacobiFormFragment<Rationals> {
        &self.form
    }

    pub fn index(&self) -> i64 {
        self.form.index()
    }

    pub fn n_max(&self) -> i64 {
        self.form.n_max()
    }

    pub fn coeff(&self, n: i64, r: i64) -> Result<Rat, WeakError> {
        Ok(self.form.coeff(n, r)?)
    }

    /// Nonzero coefficients with `4Nn - r^2 <= 0` at reduced
    /// representatives `0 <= r <= N`.
    pub fn singular_part(&self) -> BTreeMap<(i64, i64), Rat> {
        let m = self.index();
        self.form
            .coeffs()
            .iter()
            .filter(|((n, r), _)| 4 * n * m - r * r <= 0 && *r >= 0 && reduce_r(*r, m) == *r)
            .map(|(k, v)| (*k, v.clone()))
            .collect()
    }

    /// `c(0, r)` for `r >= 0`.
    pub fn q0_terms(&self) -> BTreeMap<i64, Rat> {
        self.form.coeffs().range((0, 0)..=(0, i64::MAX)).map(|((_, r), v)| (*r, v.clone())).collect()
    }

    /// Multiplicity `sum_{k >= 1} c(k^2 n, k r)` of each class
    /// `(n, r)` with `4Nn - r^2 < 0`, `0 <= r <= N`; only nonzero entries.
    pub fn humbert_multiplicities(&self) -> Result<BTreeMap<(i64, i64), Rat>, WeakError> {
        let m = self.index();
        let mut out = BTreeMap::new();
        for n in 0..=(m / 4) {
            for r in 0..=m {
                let d = 4 * n * m - r * r;
                if d >= 0 {
                    continue;
                }
                let mut s = Rat::zero();
                let mut k = 1i64;
                // classes with discriminant below -m^2 are empty
                while k * k * (-d) <= m * m {
                    s = &s + &self.form.coeff(k * k * n, k * r)?;
                    k += 1;
                }
                if !s.is_zero() {
                    out.insert((n, r), s);
                }
            }
        }
        Ok(out)
    }

    pub fn add_scaled(&self, other: &Self, s: &Rat) -> Result<Self, WeakError> {
        Ok(WeakJacobiFragment { form: self.form.add_scaled(&other.form, s)? })
    }
}

/// `psi12 / Delta` for a weight-12 cusp fragment of index `N >= 1`.
pub fn delta_quotient(psi12: &JacobiFormFragment<Rationals>) -> Result<WeakJacobiFragment, WeakError> {
    if psi12.weight() != 12 {
        return Err(WeakError::InvalidSpec("weight must be 12".into()));
    }
    let s = psi12.to_series();
    let q = ThetaQuotient::new(24, []).divide(&s)?;
    let form = JacobiFormFragment::from_series(&q, 0, psi12.index())?;
    WeakJacobiFragment::new(form)
}

/// `(phi | V_2) / phi` known for `n <= n_max`.
pub fn v2_quotient<F: Field>(field: F, phi: &ThetaBlock, n_max: i64) -> Result<JacobiFormFragment<F>, WeakError> {
    let top = n_max + phi.q_order();
    let f = JacobiFormFragment::from_series(&phi.expand(field, QDEN * 2 * top)?, phi.weight(), phi.index())?;
    let raised = v2(&f, top)?;
    let q = phi.to_quotient().divide(&raised.to_series())?;
    Ok(JacobiFormFragment::from_series(&q.truncate(QDEN * n_max), 0, phi.index())?)
}

/// `Theta / phi` as a theta quotient, with common thetas cancelled.
pub fn inflation_quotient(phi: &ThetaBlock, big: &ThetaBlock) -> ThetaQuotient {
    let mut mult: BTreeMap<u32, i64> = BTreeMap::new();
    for &d in big.thetas() {
        *mult.entry(d).or_insert(0) += 1;
    }
    for &d in phi.thetas() {
        *mult.entry(d).or_insert(0) -= 1;
    }
    ThetaQuotient::new(big.eta_power() - phi.eta_power(), mult)
}

/// Data for one application of the inflation method at level `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct InflationSpec {
    pub level: i64,
    /// `(phi, alpha)`: contributes `alpha (phi | V_2) / phi`.
    pub v2_terms: Vec<(ThetaBlock, Rat)>,
    /// `(phi, Theta, beta)`: contributes `beta Theta / phi`.
    pub inflation_terms: Vec<(ThetaBlock, ThetaBlock, Rat)>,
}

impl InflationSpec {
    /// `psi = (-1)^nu (phi | V_2) / phi + beta Theta / phi` with `nu` the
    /// `q`-order of `phi`.
    pub fn case2(phi: ThetaBlock, big: ThetaBlock, beta: Rat) -> Self {
        let sign = if phi.q_order() % 2 == 0 { 1 } else { -1 };
        InflationSpec {
            level: phi.index(),
            v2_terms: vec![(phi.clone(), Rat::from_int(sign))],
            inflation_terms: vec![(phi, big, beta)],
        }
    }

    pub fn check(&self) -> Result<(), WeakError> {
        let n = self.level;
        if n < 1 {
            return Err(WeakError::InvalidSpec(format!("level {n} must be positive")));
        }
        if self.v2_terms.is_empty() && self.inflation_terms.is_empty() {
            return Err(WeakError::InvalidSpec("no terms".into()));
        }
        for (phi, _) in &self.v2_terms {
            if phi.index() != n {
                return Err(WeakError::InvalidSpec(format!("{phi} has index {} not {n}", phi.index())));
            }
            let b = phi.baby();
            if !baby_divides(&b, &b.dilate(2)) {
                return Err(WeakError::InvalidSpec(format!("baby block of {phi} does not divide its dilation")));
            }
        }
        for (phi, big, _) in &self.inflation_terms {
            if big.index() - phi.index() != n {
                return Err(WeakError::InvalidSpec(format!("index difference of {big} / {phi} is not {n}")));
            }
            if big.weight() != phi.weight() {
                return Err(WeakError::InvalidSpec(format!("{big} and {phi} have different weights")));
            }
            if !baby_divides(&phi.baby(), &big.baby()) {
                return Err(WeakError::InvalidSpec(format!("baby block of {phi} does not divide that of {big}")));
            }
            if big.q_order() < phi.q_order() {
                return Err(WeakError::InvalidSpec(format!("{big} / {phi} has negative q-order")));
            }
        }
        Ok(())
    }
}

/// Evaluates the inflation-method combination for `n <= n_max`.
pub fn inflate(spec: &InflationSpec, n_max: i64) -> Result<WeakJacobiFragment, WeakError> {
    spec.check()?;
    let n = spec.level;
    let mut jobs: Vec<(Rat, Job)> = Vec::new();
    for (phi, a) in &spec.v2_terms {
        jobs.push((a.clone(), Job::V2(phi.clone())));
    }
    for (phi, big, b) in &spec.inflation_terms {
        jobs.push((b.clone(), Job::Quot(inflation_quotient(phi, big))));
    }
    let parts: Vec<JacobiFormFragment<Rationals>> = jobs
        .par_iter()
        .map(|(_, job)| match job {
            Job::V2(phi) => v2_quotient(Rationals, phi, n_max),
            Job::Quot(q) => {
                let s = q.expand(Rationals, QDEN * n_max)?;
                Ok(JacobiFormFragment::from_series(&s, 0, n)?)
            }
        })
        .collect::<Result<_, WeakError>>()?;
    let mut acc = JacobiFormFragment::zero(Rationals, 0, n, n_max);
    for ((c, _), p) in jobs.iter().zip(parts.iter()) {
        acc = acc.add_scaled(p, c)?;
    }
    acc.validate()?;
    WeakJacobiFragment::new(acc)
}

enum Job {
    V2(ThetaBlock),
    Quot(ThetaQuotient),
}

/// `Theta / phi` for an inflation `Theta` of `phi`.
pub fn inflate_case3(phi: &ThetaBlock, big: &ThetaBlock, n_max: i64) -> Result<WeakJacobiFragment, WeakError> {
    if big.weight() != phi.weight() {
        return Err(WeakError::InvalidSpec("weights differ".into()));
    }
    if !baby_divides(&phi.baby(), &big.baby()) {
        return Err(WeakError::InvalidSpec(format!("baby block of {phi} does not divide that of {big}")));
    }
    let n = big.index() - phi.index();
    if n < 1 {
        return Err(WeakError::ValidationFailure(format!("quotient has index {n}")));
    }
    let s = inflation_quotient(phi, big).expand(Rationals, QDEN * n_max)?;
    let form = JacobiFormFragment::from_series(&s, 0, n)?;
    let psi = WeakJacobiFragment::new(form)?;
    let rep = validate_weight0(&psi);
    if !rep.passes() {
        return Err(WeakError::ValidationFailure(rep.violations.join("; ")));
    }
    Ok(psi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weight0Report {
    pub violations: Vec<String>,
    pub c00: Rat,
    /// `c(0,0) / 2`
    pub weight: Rat,
    pub degenerate: bool,
    pub singular: BTreeMap<(i64, i64), Rat>,
}

impl Weight0Report {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks integrality of the singular coefficients, class invariance,
/// `r -> -r` symmetry and that the singular part is fully covered.
pub fn validate_weight0(psi: &WeakJacobiFragment) -> Weight0Report {
    let mut violations = Vec::new();
    let form = &psi.form;
    if let Err(e) = form.validate() {
        violations.push(e.to_string());
    }
    if !form.singular_part_complete() {
        violations.push(format!(
            "coverage n <= {} does not reach every singular class of index {}",
            form.n_max(),
            form.index()
        ));
    }
    let singular = psi.singular_part();
    for ((n, r), v) in &singular {
        if !v.is_integer() {
            violations.push(format!("singular coefficient c({n},{r}) = {v} is not integral"));
        }
    }
    let c00 = form.coeff(0, 0).unwrap_or_else(|_| Rat::zero());
    let weight = &c00 * &Rat::new(1, 2);
    Weight0Report { violations, c00, weight, degenerate: form.is_zero(), singular }
}

/// Reads a weight-0 fragment from an expansion with integral exponents.
pub fn weak_from_series(s: &PuiseuxSeries<Rationals>, index: i64) -> Result<WeakJacobiFragment, WeakError> {
    WeakJacobiFragment::new(JacobiFormFragment::from_series(s, 0, index)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_quotient_matches_symbolic_quotient() {
        let tb = ThetaBlock::new(12, vec![1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2]).unwrap();
        let n = tb.index();
        let psi12 = JacobiFormFragment::from_series(&tb.expand(Rationals, QDEN * 6).unwrap(), 12, n).unwrap();
        let psi = delta_quotient(&psi12).unwrap();
        let direct = ThetaQuotient::new(-12, tb.thetas().iter().map(|&d| (d, 1)));
        let s = direct.expand(Rationals, QDEN * psi.n_max()).unwrap();
        assert_eq!(psi.form().to_series(), s.truncate(QDEN * psi.n_max()));
        assert_eq!(psi.form().q_order(), Some(1));
    }

    #[test]
    fn delta_quotient_rejects_wrong_weight() {
        let tb = ThetaBlock::new(-6, vec![1; 10]).unwrap();
        let f = JacobiFormFragment::from_series(&tb.expand(Rationals, 48).unwrap(), 2, 5).unwrap();
        assert!(delta_quotient(&f).is_err());
    }

    #[test]
    fn validate_examples() {
        let mut c = BTreeMap::new();
        c.insert((0, 1), Rat::new(1, 2));
        c.insert((0, -1), Rat::new(1, 2));
        let bad = WeakJacobiFragment::new(JacobiFormFragment::new(Rationals, 0, 3, 1, c).unwrap()).unwrap();
        let rep = validate_weight0(&bad);
        assert!(rep.violations.iter().any(|v| v.contains("not integral")));
        let zero = WeakJacobiFragment::new(JacobiFormFragment::zero(Rationals, 0, 3, 1)).unwrap();
        let rep = validate_weight0(&zero);
        assert!(rep.passes() && rep.degenerate);
        assert_eq!(rep.weight, Rat::zero());
    }

    #[test]
    fn case3_degenerate_rejected() {
        let tb = ThetaBlock::new(-6, vec![1; 10]).unwrap();
        assert!(matches!(inflate_case3(&tb, &tb, 4), Err(WeakError::ValidationFailure(_))));
    }

    #[test]
    fn v2_quotient_has_order_zero() {
        // phi = eta^-6 theta_1^10, index 5
        let tb = ThetaBlock::new(-6, vec![1; 10]).unwrap();
        let q = v2_quotient(Rationals, &tb, 4).unwrap();
        assert_eq!(q.index(), 5);
        assert_eq!(q.q_order(), Some(0));
        q.validate().unwrap();
    }
}
