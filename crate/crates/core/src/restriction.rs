//! Jacobi restriction: a superspace of the truncations `f[d]` of paramodular
//! eigenforms, cut out of `J_{k,N} + ... + J_{k,dN}` by the linear relations
//! that paramodular invariance and Atkin–Lehner eigenvalues impose on
//! Fourier coefficients of bounded determinant.
//!
//! Unknowns are coordinates on a basis of each slice space. Two indices
//! `t`, `t'` in slices `<= d` that are equivalent under `Gamma_0(N)` (or an
//! Atkin–Lehner matrix with eigenvalue `e`) give the row `a(t) - e a(t') = 0`.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use rayon::prelude::*;
use thiserror::Error;

use crate::field::{Field, Rat};
use crate::jacobi::{reduce_r, JacobiFormFragment};
use crate::linalg::Echelon;
use crate::paramodular::{al_index, isqrt, ALMatrix, EigenData, FourierIndex, ParamodularError, ParamodularFragment};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RestrictionError {
    #[error("basis coefficient at {0} is outside its coverage")]
    CoverageGap(FourierIndex),
    #[error("slice {slice}: basis has rank {rank} < {dim} on indices with det <= detmax")]
    DetmaxTooSmall { slice: i64, rank: usize, dim: usize },
    #[error("invalid problem: {0}")]
    BadProblem(String),
    #[error(transparent)]
    Paramodular(#[from] ParamodularError),
}

/// Weight, level, depth, determinant bound and eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionProblem {
    pub level: i64,
    pub weight: i64,
    pub depth: i64,
    pub detmax: Rat,
    /// `c -> e_c` for exact divisors `c` of the level.
    pub eigen: EigenData,
    /// Further relations `a(t) = e a(t')`, applied when both ends lie in
    /// the window.
    pub extra: Vec<(FourierIndex, FourierIndex, i8)>,
}

impl RestrictionProblem {
    pub fn new(level: i64, weight: i64, depth: i64, detmax: Rat, eigen: EigenData) -> Result<Self, RestrictionError> {
        if level < 1 || depth < 1 || detmax <= Rat::zero() {
            return Err(RestrictionError::BadProblem("level, depth and detmax must be positive".into()));
        }
        for &c in eigen.keys() {
            ALMatrix::new(level, c)?;
        }
        Ok(RestrictionProblem { level, weight, depth, detmax, eigen, extra: Vec::new() })
    }

    /// Largest admissible `4 det`.
    fn disc_max(&self) -> i64 {
        let d = &self.detmax * &Rat::from_int(4);
        // floor
        let num = d.numer();
        let den = d.denom();
        num_traits::ToPrimitive::to_i64(&num.div_floor(&den)).expect("detmax fits")
    }

    /// Reduced indices of slice `m` with `0 < det <= detmax`: `r` in
    /// `(-mN, mN]` and the least `n` of the class.
    pub fn slice_window(&self, m: i64) -> Vec<FourierIndex> {
        let mn = m * self.level;
        let dmax = self.disc_max();
        let mut out = Vec::new();
        for r in (-mn + 1)..=mn {
            // 4 n m N - r^2 in (0, dmax]
            let lo = Integer::div_floor(&(r * r), &(4 * mn)) + 1;
            let hi = Integer::div_floor(&(dmax + r * r), &(4 * mn));
            for n in lo..=hi {
                out.push(FourierIndex { n, r, m });
            }
        }
        out.sort();
        out
    }

    pub fn window(&self) -> Vec<FourierIndex> {
        (1..=self.depth).flat_map(|m| self.slice_window(m)).collect()
    }

    /// Representative of `t` in its slice window, or `None` when its slice
    /// is beyond the depth.
    fn slice_rep(&self, t: FourierIndex) -> Option<FourierIndex> {
        if t.m < 1 || t.m > self.depth {
            return None;
        }
        let mn = t.m * self.level;
        let d = t.disc(self.level);
        let r = reduce_r(t.r, mn);
        Some(FourierIndex { n: (d + r * r) / (4 * mn), r, m: t.m })
    }

    /// `Gamma_0(N)` images of `t` landing in slices `<= depth`: one for each
    /// primitive bottom row `(gN, delta)` with `t[(gN, delta)] <= depth N`.
    pub fn gamma0_images(&self, t: FourierIndex) -> Vec<FourierIndex> {
        let big = self.level;
        let det4 = t.disc(big);
        let d = self.depth;
        // N n g^2 + r g delta + m delta^2 <= d has |g| <= sqrt(4 m d / disc)
        let gmax = isqrt(4 * t.m * d / det4) + 1;
        let mut out = BTreeSet::new();
        for g in -gmax..=gmax {
            // delta^2 m + delta g r + (N g^2 n - d) <= 0
            let (a, b, c) = (t.m as i128, (g * t.r) as i128, (big * g * g * t.n - d) as i128);
            let disc = b * b - 4 * a * c;
            if disc < 0 {
                continue;
            }
            let s = isqrt(disc as i64) as i128;
            let lo = Integer::div_floor(&(-b - s - 1), &(2 * a)) - 1;
            let hi = Integer::div_floor(&(-b + s + 1), &(2 * a)) + 1;
            for delta in lo..=hi {
                let (gn, de) = (g * big, delta as i64);
                let m2 = big * g * g * t.n + g * de * t.r + de * de * t.m;
                if m2 < 1 || m2 > d || (gn, de) == (0, 0) {
                    continue;
                }
                let (gc, x, y) = ext_gcd(de, -gn);
                if gc.abs() != 1 {
                    continue;
                }
                // alpha delta - beta g N = 1
                let (alpha, beta) = (x * gc, y * gc);
                let u = t.act_integral(big, alpha, beta, gn, de);
                if let Some(rep) = self.slice_rep(u) {
                    out.insert(rep);
                }
            }
        }
        out.into_iter().collect()
    }

    /// `(t', e)` related to `t` through `Gamma_0(N)` and the eigenvalues.
    fn partners(&self, t: FourierIndex) -> Result<Vec<(FourierIndex, i8)>, RestrictionError> {
        let mut starts = vec![(t, 1i8)];
        for (&c, &e) in &self.eigen {
            let w = ALMatrix::new(self.level, c)?;
            let mut more = Vec::new();
            for (u, s) in &starts {
                more.push((al_index(*u, &w)?, s * e));
            }
            starts.extend(more);
        }
        let mut out = Vec::new();
        for (u, s) in starts {
            for v in self.gamma0_images(u) {
                if v != t || s != 1 {
                    out.push((v, s));
                }
            }
        }
        for (a, b, e) in &self.extra {
            if let (Some(a), Some(b)) = (self.slice_rep(*a), self.slice_rep(*b)) {
                if a == t {
                    out.push((b, *e));
                }
            }
        }
        Ok(out)
    }
}

/// `g = x a + y b` with `g = gcd(a, b)`, up to sign.
fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let e = a.extended_gcd(&b);
    (e.gcd, e.x, e.y)
}

/// Coefficient vectors of the slice bases on the window, one column per
/// basis element across all slices.
struct Unknowns<F: Field> {
    field: F,
    offsets: Vec<usize>,
    ncols: usize,
    values: BTreeMap<FourierIndex, Vec<F::Elem>>,
}

impl<F: Field> Unknowns<F> {
    fn new(prob: &RestrictionProblem, bases: &[Vec<JacobiFormFragment<F>>]) -> Result<Self, RestrictionError> {
        if bases.len() != prob.depth as usize {
            return Err(RestrictionError::BadProblem(format!("{} slice bases for depth {}", bases.len(), prob.depth)));
        }
        let field = bases
            .iter()
            .flatten()
            .next()
            .map(|b| b.field().clone())
            .ok_or_else(|| RestrictionError::BadProblem("all slice bases are empty".into()))?;
        let mut offsets = vec![0];
        for b in bases {
            offsets.push(offsets.last().unwrap() + b.len());
        }
        let ncols = *offsets.last().unwrap();
        let mut values = BTreeMap::new();
        for (j, basis) in bases.iter().enumerate() {
            let m = j as i64 + 1;
            for f in basis {
                if f.index() != m * prob.level || f.weight() != prob.weight {
                    return Err(RestrictionError::BadProblem(format!("basis of slice {m} has the wrong index or weight")));
                }
            }
            let win = prob.slice_window(m);
            let mut e = Echelon::new(field.clone(), basis.len());
            for t in &win {
                let mut v = vec![field.zero(); ncols];
                for (i, f) in basis.iter().enumerate() {
                    v[offsets[j] + i] = f.coeff(t.n, t.r).map_err(|_| RestrictionError::CoverageGap(*t))?;
                }
                e.insert(&v[offsets[j]..offsets[j + 1]]);
                values.insert(*t, v);
            }
            if e.rank() < basis.len() {
                return Err(RestrictionError::DetmaxTooSmall { slice: m, rank: e.rank(), dim: basis.len() });
            }
        }
        Ok(Unknowns { field, offsets, ncols, values })
    }

    fn row(&self, t: &FourierIndex, u: &FourierIndex, e: i8) -> Vec<F::Elem> {
        let f = &self.field;
        let a = &self.values[t];
        let b = &self.values[u];
        a.iter().zip(b).map(|(x, y)| if e > 0 { f.sub(x, y) } else { f.add(x, y) }).collect()
    }
}

/// Relations `a(t) - e a(t') = 0` as rows over the basis coordinates.
pub fn build_system<F: Field>(
    prob: &RestrictionProblem,
    bases: &[Vec<JacobiFormFragment<F>>],
) -> Result<Vec<Vec<F::Elem>>, RestrictionError> {
    let unk = Unknowns::new(prob, bases)?;
    let window = prob.window();
    let rows: Vec<Vec<Vec<F::Elem>>> = window
        .par_iter()
        .map(|t| {
            let mut rs = Vec::new();
            for (u, e) in prob.partners(*t)? {
                let r = unk.row(t, &u, e);
                if r.iter().any(|x| !unk.field.is_zero(x)) {
                    rs.push(r);
                }
            }
            Ok(rs)
        })
        .collect::<Result<_, RestrictionError>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Echelon form of the relations, resumable: `next` counts the window
/// indices already processed.
#[derive(Debug, Clone)]
pub struct JrmjState<F: Field> {
    pub echelon: Echelon<F>,
    pub next: usize,
}

/// Kernel of the relations and the corresponding truncated expansions.
#[derive(Debug, Clone)]
pub struct JrmjResult<F: Field> {
    pub dimension: usize,
    /// Basis coordinates of each kernel vector.
    pub coordinates: Vec<Vec<F::Elem>>,
    /// Kernel vectors as coefficients on the window.
    pub expansions: Vec<ParamodularFragment<F>>,
}

pub fn jrmj_basis<F: Field>(prob: &RestrictionProblem, bases: &[Vec<JacobiFormFragment<F>>]) -> Result<JrmjResult<F>, RestrictionError> {
    jrmj_basis_resumable(prob, bases, None, 0, |_| {})
}

/// As [`jrmj_basis`], starting from `state` and calling `checkpoint` after
/// every `every` window indices (never when `every` is 0).
pub fn jrmj_basis_resumable<F: Field>(
    prob: &RestrictionProblem,
    bases: &[Vec<JacobiFormFragment<F>>],
    state: Option<JrmjState<F>>,
    every: usize,
    mut checkpoint: impl FnMut(&JrmjState<F>),
) -> Result<JrmjResult<F>, RestrictionError> {
    let unk = Unknowns::new(prob, bases)?;
    let window = prob.window();
    let mut st = state.unwrap_or_else(|| JrmjState { echelon: Echelon::new(unk.field.clone(), unk.ncols), next: 0 });
    if st.echelon.ncols() != unk.ncols {
        return Err(RestrictionError::BadProblem("checkpoint does not match the bases".into()));
    }
    while st.next < window.len() {
        let t = window[st.next];
        for (u, e) in prob.partners(t)? {
            let r = unk.row(&t, &u, e);
            if r.iter().any(|x| !unk.field.is_zero(x)) {
                st.echelon.insert(&r);
            }
        }
        st.next += 1;
        if every > 0 && st.next % every == 0 {
            checkpoint(&st);
        }
    }
    let coordinates = st.echelon.kernel();
    let f = &unk.field;
    let mut expansions = Vec::with_capacity(coordinates.len());
    for x in &coordinates {
        let mut coeffs = BTreeMap::new();
        for (t, v) in &unk.values {
            let j = (t.m - 1) as usize;
            let mut acc = f.zero();
            for c in unk.offsets[j]..unk.offsets[j + 1] {
                f.mul_add_assign(&mut acc, &x[c], &v[c]);
            }
            coeffs.insert(*t, acc);
        }
        let frag = ParamodularFragment::from_map(f.clone(), prob.level, prob.weight, coeffs)?;
        expansions.push(if prob.eigen.is_empty() { frag } else { frag.with_eigen(prob.eigen.clone())? });
    }
    Ok(JrmjResult { dimension: coordinates.len(), coordinates, expansions })
}

/// Values of `g` on the window of `prob`, for membership tests against
/// [`JrmjResult::expansions`]. Indices of `g` are reduced within slices.
pub fn window_row<F: Field>(prob: &RestrictionProblem, g: &ParamodularFragment<F>) -> Option<Vec<F::Elem>> {
    let mut by_rep: BTreeMap<FourierIndex, F::Elem> = BTreeMap::new();
    for (t, v) in g.coeffs() {
        if let Some(rep) = prob.slice_rep(*t) {
            by_rep.entry(rep).or_insert_with(|| v.clone());
        }
    }
    prob.window().iter().map(|t| by_rep.get(t).cloned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Rationals;
    use crate::jacobi::{gritsenko_lift, v2};
    use crate::linalg::solve_in_span;
    use crate::paramodular::parse_eigen;
    use crate::series::QDEN;
    use crate::theta::ThetaBlock;

    /// Basis of `J^cusp_{2,37}`, spanned by one theta block.
    fn basis37(n_max: i64) -> Vec<JacobiFormFragment<Rationals>> {
        let tb = ThetaBlock::new(-6, vec![1, 1, 1, 2, 2, 2, 3, 3, 4, 5]).unwrap();
        let s = tb.expand(Rationals, QDEN * n_max).unwrap();
        vec![JacobiFormFragment::from_series(&s, 2, tb.index()).unwrap()]
    }

    #[test]
    fn window_is_reduced_and_bounded() {
        let p = RestrictionProblem::new(37, 2, 2, Rat::from_int(30), EigenData::new()).unwrap();
        for t in p.window() {
            let mn = t.m * 37;
            assert!(t.r > -mn && t.r <= mn);
            let d = t.disc(37);
            assert!(d > 0 && d <= 120);
            assert!(4 * (t.n - 1) * mn - t.r * t.r <= 0);
        }
    }

    #[test]
    fn gamma0_images_preserve_disc() {
        let p = RestrictionProblem::new(37, 2, 3, Rat::from_int(50), EigenData::new()).unwrap();
        for t in p.window() {
            let imgs = p.gamma0_images(t);
            assert!(imgs.contains(&t), "{t}");
            for u in imgs {
                assert_eq!(u.disc(37), t.disc(37));
                assert!(u.m <= 3);
            }
        }
    }

    #[test]
    fn depth_one_fricke_plus_keeps_the_slice_space() {
        let basis = basis37(12);
        let n = basis[0].index();
        let prob = RestrictionProblem::new(n, 2, 1, Rat::from_int(40), parse_eigen(&format!("+{n}")).unwrap()).unwrap();
        let res = jrmj_basis(&prob, &[basis]).unwrap();
        assert_eq!(res.dimension, 1);
    }

    #[test]
    fn depth_one_fricke_minus_kills_even_forms() {
        let basis = basis37(12);
        let n = basis[0].index();
        let prob = RestrictionProblem::new(n, 2, 1, Rat::from_int(40), parse_eigen(&format!("-{n}")).unwrap()).unwrap();
        let rows = build_system(&prob, &[basis.clone()]).unwrap();
        assert!(!rows.is_empty());
        assert_eq!(jrmj_basis(&prob, &[basis]).unwrap().dimension, 0);
    }

    #[test]
    fn small_detmax_is_rejected() {
        let basis = basis37(12);
        let n = basis[0].index();
        let prob = RestrictionProblem::new(n, 2, 1, Rat::new(1, 4), EigenData::new()).unwrap();
        assert!(matches!(jrmj_basis(&prob, &[basis]), Err(RestrictionError::DetmaxTooSmall { .. })));
    }

    #[test]
    fn depth_two_pairs_slices_through_fricke() {
        let b1 = basis37(42);
        let n = b1[0].index();
        let b2 = vec![v2(&b1[0], 20).unwrap()];
        let prob = RestrictionProblem::new(n, 2, 2, Rat::from_int(60), parse_eigen(&format!("+{n}")).unwrap()).unwrap();
        // (n, r, 2) and (2, -r, n) are partners
        let t = prob.slice_window(2).into_iter().find(|t| t.n == 1).unwrap();
        let partners = prob.partners(t).unwrap();
        let f = prob.slice_rep(FourierIndex { n: t.m, r: -t.r, m: t.n }).unwrap();
        assert!(partners.contains(&(f, 1)));
        let q = jrmj_basis(&prob, &[b1.clone(), b2.clone()]).unwrap();
        let r1: Vec<_> = b1.iter().map(|f| f.reduce_mod_p(12347).unwrap()).collect();
        let r2: Vec<_> = b2.iter().map(|f| f.reduce_mod_p(12347).unwrap()).collect();
        let p = jrmj_basis(&prob, &[r1, r2]).unwrap();
        assert!(p.dimension >= q.dimension);
        // the Gritsenko lift has slices phi and phi | V_2
        assert!(q.dimension >= 1);
        let lift = gritsenko_lift(&b1[0], &prob.window()).unwrap();
        let target = window_row(&prob, &lift).unwrap();
        let rows: Vec<Vec<Rat>> = q.expansions.iter().map(|e| window_row(&prob, e).unwrap()).collect();
        assert!(solve_in_span(&Rationals, &rows, &target).is_some());
    }

    #[test]
    fn resumed_run_matches_single_run() {
        let b1 = basis37(42);
        let n = b1[0].index();
        let b2 = vec![v2(&b1[0], 20).unwrap()];
        let prob = RestrictionProblem::new(n, 2, 2, Rat::from_int(60), EigenData::new()).unwrap();
        let bases = [b1, b2];
        let full = jrmj_basis(&prob, &bases).unwrap();
        let mut saved = None;
        let _ = jrmj_basis_resumable(&prob, &bases, None, 7, |s| {
            if saved.is_none() {
                saved = Some(s.clone());
            }
        })
        .unwrap();
        let s = saved.unwrap();
        let rows: Vec<&[Rat]> = s.echelon.rows().collect();
        let rebuilt = JrmjState { echelon: Echelon::from_rows(Rationals, s.echelon.ncols(), rows), next: s.next };
        let resumed = jrmj_basis_resumable(&prob, &bases, Some(rebuilt), 0, |_| {}).unwrap();
        assert_eq!(full.dimension, resumed.dimension);
        assert_eq!(full.coordinates, resumed.coordinates);
    }
}
