//! Partial Fourier expansions of paramodular forms and the index actions of
//! Atkin–Lehner involutions.
//!
//! A Fourier index `t = (n, r, m)` stands for the matrix
//! `[[n, r/2], [r/2, m N]]` with `4 n m N - r^2 > 0`. Matrices act by
//! `t -> W t W^T`. Coefficients are invariant, up to `det(A)^k`, under
//! `A` in `GL_2(Z)` with lower-left entry divisible by `N`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_integer::Integer;
use thiserror::Error;

use crate::field::{Field, FieldError, Rat};
use crate::jacobi::JacobiFormFragment;
use crate::linalg::{solve_in_span, Echelon};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamodularError {
    #[error("index ({n},{r},{m}) is not positive definite at level {level}")]
    NotPositive { level: i64, n: i64, r: i64, m: i64 },
    #[error("{c} is not an exact divisor of {level}")]
    NotExactDivisor { level: i64, c: i64 },
    #[error("Atkin-Lehner witness does not have determinant one")]
    BadWitness,
    #[error("image {0} of an Atkin-Lehner action is not an integral index")]
    ImageNotIntegral(String),
    #[error("index {0} has an orbit image outside the coverage")]
    CoverageNotClosed(FourierIndex),
    #[error("inconsistent values on the orbit of {0}")]
    InconsistentOrbit(FourierIndex),
    #[error("known coefficients do not determine the coordinates")]
    Underdetermined,
    #[error("known coefficients are not in the span of the basis")]
    Inconsistent,
    #[error("common coverage has {have} indices, need at least {need}")]
    InsufficientCommonCoverage { have: usize, need: usize },
    #[error("slice {0} has no covered coefficients")]
    EmptySlice(i64),
    #[error("level or weight mismatch")]
    Mismatch,
    #[error("eigen data missing")]
    NoEigenData,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// `(n, r, m)` with `4 n m N - r^2 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FourierIndex {
    pub n: i64,
    pub r: i64,
    pub m: i64,
}

impl FourierIndex {
    pub fn new(level: i64, n: i64, r: i64, m: i64) -> Result<Self, ParamodularError> {
        let t = FourierIndex { n, r, m };
        if n <= 0 || m <= 0 || t.disc(level) <= 0 {
            return Err(ParamodularError::NotPositive { level, n, r, m });
        }
        Ok(t)
    }

    /// `4 n m N - r^2`
    pub fn disc(&self, level: i64) -> i64 {
        4 * self.n * self.m * level - self.r * self.r
    }

    /// `n m N - r^2 / 4`
    pub fn det(&self, level: i64) -> Rat {
        Rat::new(self.disc(level), 4)
    }

    pub fn as_tuple(&self) -> (i64, i64, i64) {
        (self.n, self.r, self.m)
    }

    /// `t -> A t A^T` for an integral `A = [[a, b], [c, d]]` whose lower-left
    /// entry `c` is divisible by the level.
    pub(crate) fn act_integral(&self, level: i64, a: i64, b: i64, c: i64, d: i64) -> FourierIndex {
        debug_assert!(c % level == 0);
        let cn = c / level;
        let (n, r, m) = (self.n, self.r, self.m);
        FourierIndex {
            n: a * a * n + a * b * r + b * b * m * level,
            r: 2 * a * c * n + (a * d + b * c) * r + 2 * b * d * m * level,
            m: cn * c * n + cn * d * r + d * d * m,
        }
    }
}

impl fmt::Display for FourierIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.n, self.r, self.m)
    }
}

/// `(n, r, m) -> (m, -r, n)`
pub fn fricke_index(t: FourierIndex) -> FourierIndex {
    FourierIndex { n: t.m, r: -t.r, m: t.n }
}

/// `(1/sqrt c) [[alpha c, beta], [gamma N, delta c]]` with
/// `alpha delta c - beta gamma N/c = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ALMatrix {
    pub level: i64,
    pub c: i64,
    pub alpha: i64,
    pub beta: i64,
    pub gamma: i64,
    pub delta: i64,
}

impl ALMatrix {
    /// Canonical witness from the extended gcd of `c` and `N/c`.
    pub fn new(level: i64, c: i64) -> Result<Self, ParamodularError> {
        if c <= 0 || level % c != 0 || c.gcd(&(level / c)) != 1 {
            return Err(ParamodularError::NotExactDivisor { level, c });
        }
        if c == 1 {
            return Self::with_witness(level, c, 1, 0, 0, 1);
        }
        if c == level {
            return Self::with_witness(level, c, 0, -1, 1, 0);
        }
        let co = level / c;
        // x c + y co = 1  ->  alpha = x, beta = -y, gamma = delta = 1
        let e = c.extended_gcd(&co);
        Self::with_witness(level, c, e.x, -e.y, 1, 1)
    }

    pub fn with_witness(level: i64, c: i64, alpha: i64, beta: i64, gamma: i64, delta: i64) -> Result<Self, ParamodularError> {
        if c <= 0 || level % c != 0 || c.gcd(&(level / c)) != 1 {
            return Err(ParamodularError::NotExactDivisor { level, c });
        }
        if alpha * delta * c - beta * gamma * (level / c) != 1 {
            return Err(ParamodularError::BadWitness);
        }
        Ok(ALMatrix { level, c, alpha, beta, gamma, delta })
    }

    pub fn fricke(level: i64) -> Self {
        Self::with_witness(level, level, 0, -1, 1, 0).unwrap()
    }
}

/// `t -> W t W^T`, checked to land in the index set.
pub fn al_index(t: FourierIndex, w: &ALMatrix) -> Result<FourierIndex, ParamodularError> {
    let (n, r, m) = (t.n as i128, t.r as i128, t.m as i128);
    let (a, b, g, d) = (w.alpha as i128, w.beta as i128, w.gamma as i128, w.delta as i128);
    let (c, big) = (w.c as i128, w.level as i128);
    let co = big / c;
    let n2 = a * a * c * n + a * b * r + b * b * m * co;
    let r2 = 2 * a * g * big * n + (a * d * c + b * g * co) * r + 2 * b * d * m * big;
    let m2 = g * g * co * n + g * d * r + d * d * c * m;
    let out = FourierIndex { n: n2 as i64, r: r2 as i64, m: m2 as i64 };
    let fits = [n2, r2, m2].iter().all(|v| *v >= i64::MIN as i128 && *v <= i64::MAX as i128);
    let disc = (4 * n2).checked_mul(m2).and_then(|v| v.checked_mul(big)).and_then(|v| v.checked_sub(r2.checked_mul(r2)?));
    if !fits || n2 <= 0 || m2 <= 0 || disc != Some(4 * n * m * big - r * r) {
        return Err(ParamodularError::ImageNotIntegral(format!("({n2},{r2},{m2})")));
    }
    Ok(out)
}

/// Canonical representative of the class of `t` under `t -> A t A^T`,
/// `A` in `GL_2(Z)` with lower-left entry divisible by `N`. Returns the
/// representative and `det(A)` of a transform reaching it.
///
/// With `Q(x, y) = n x^2 + r x y + m N y^2` and `Q = Q0 o M` for the
/// reduced form `Q0`, the class is fixed by `Q0` and the point of
/// `P^1(Z/N)` through the second column of `M`, up to automorphs of `Q0`.
pub fn reduce(level: i64, t: FourierIndex) -> (FourierIndex, i64) {
    let big = level as i128;
    let q = [t.n as i128, t.r as i128, t.m as i128 * big];
    let (q0, s) = gauss_reduce(q);
    // M = S^-1, so M e2 = det(S) (-s01, s00)
    let det_s = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let col = [-s[0][1] * det_s, s[0][0] * det_s];
    let mut best: Option<([i128; 2], i128)> = None;
    for g in automorphs(q0) {
        let v = [g[0][0] * col[0] + g[0][1] * col[1], g[1][0] * col[0] + g[1][1] * col[1]];
        let p = p1_normalize(v, big);
        let det_g = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        if best.is_none_or(|(b, _)| p < b) {
            best = Some((p, det_g));
        }
    }
    let (p, det_g) = best.expect("identity is an automorph");
    let (u, v) = p1_lift(p, big);
    // M_p = [[a, u], [c, v]] in SL_2(Z)
    let e = v.extended_gcd(&u);
    let (a, c) = (e.x, -e.y);
    let mp = [[a, u], [c, v]];
    let [n2, r2, m2] = compose(q0, mp);
    // [[1, 0], [k, 1]] fixes the second column and shifts r by 2 k m N
    let k = -div_round_i128(r2, 2 * m2);
    let n3 = n2 + r2 * k + m2 * k * k;
    let r3 = r2 + 2 * m2 * k;
    let out = FourierIndex { n: n3 as i64, r: r3 as i64, m: (m2 / big) as i64 };
    (out, (det_g * det_s) as i64)
}

type Mat = [[i128; 2]; 2];

/// `Q o S` for `Q = [A, B, C]`, i.e. `(x, y) -> Q(S (x, y))`.
fn compose(q: [i128; 3], s: Mat) -> [i128; 3] {
    let [a, b, c] = q;
    let (p, r, u, w) = (s[0][0], s[0][1], s[1][0], s[1][1]);
    [
        a * p * p + b * p * u + c * u * u,
        2 * a * p * r + b * (p * w + r * u) + 2 * c * u * w,
        a * r * r + b * r * w + c * w * w,
    ]
}

fn mat_mul(x: Mat, y: Mat) -> Mat {
    [
        [x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]],
        [x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]],
    ]
}

/// `GL_2(Z)`-reduced form `Q0 = Q o S` with `0 <= B <= A <= C`, and `S`.
fn gauss_reduce(mut q: [i128; 3]) -> ([i128; 3], Mat) {
    let mut s: Mat = [[1, 0], [0, 1]];
    loop {
        let k = -div_round_i128(q[1], 2 * q[0]);
        if k != 0 {
            let m = [[1, k], [0, 1]];
            q = compose(q, m);
            s = mat_mul(s, m);
        }
        if q[0] > q[2] {
            let m = [[0, -1], [1, 0]];
            q = compose(q, m);
            s = mat_mul(s, m);
        } else {
            break;
        }
    }
    if q[1] < 0 {
        let m = [[1, 0], [0, -1]];
        q = compose(q, m);
        s = mat_mul(s, m);
    }
    (q, s)
}

/// All `g` in `GL_2(Z)` with `Q0 o g = Q0`, for a reduced positive form.
fn automorphs(q: [i128; 3]) -> Vec<Mat> {
    let [a, b, c] = q;
    let disc = 4 * a * c - b * b;
    // integer vectors with Q(x, y) = val; |y| <= sqrt(4 a val / disc)
    let reps = |val: i128| -> Vec<[i128; 2]> {
        let mut out = Vec::new();
        let ymax = isqrt_i128(4 * a * val / disc);
        for y in -ymax..=ymax {
            // a x^2 + b y x + (c y^2 - val) = 0
            let d = b * b * y * y - 4 * a * (c * y * y - val);
            if d < 0 {
                continue;
            }
            let sd = isqrt_i128(d);
            if sd * sd != d {
                continue;
            }
            for num in [-b * y + sd, -b * y - sd] {
                if num % (2 * a) == 0 {
                    let x = num / (2 * a);
                    if !out.contains(&[x, y]) {
                        out.push([x, y]);
                    }
                }
            }
        }
        out
    };
    let firsts = reps(a);
    let seconds = reps(c);
    let mut out = Vec::new();
    for v in &firsts {
        for w in &seconds {
            let g = [[v[0], w[0]], [v[1], w[1]]];
            let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            if det.abs() == 1 && compose(q, g) == q {
                out.push(g);
            }
        }
    }
    out
}

/// Least representative of `[v]` in `P^1(Z/N)` under scaling by units.
fn p1_normalize(v: [i128; 2], big: i128) -> [i128; 2] {
    let (x, y) = (v[0].rem_euclid(big), v[1].rem_euclid(big));
    let mut best = [x, y];
    for l in 2..big {
        if l.gcd(&big) == 1 {
            let cand = [(l * x) % big, (l * y) % big];
            if cand < best {
                best = cand;
            }
        }
    }
    best
}

/// Coprime integers `(u, v)` reducing to `p` modulo `N`.
fn p1_lift(p: [i128; 2], big: i128) -> (i128, i128) {
    if big == 1 {
        return (0, 1);
    }
    let (u, v) = (p[0], p[1]);
    if u == 0 {
        return (big, v);
    }
    let mut v2 = v;
    while u.gcd(&v2) != 1 {
        v2 += big;
    }
    (u, v2)
}

fn isqrt_i128(v: i128) -> i128 {
    if v <= 0 {
        return 0;
    }
    let mut x = (v as f64).sqrt() as i128;
    while x * x > v {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= v {
        x += 1;
    }
    x
}

/// Nearest integer to `a / b` for `b > 0`.
fn div_round_i128(a: i128, b: i128) -> i128 {
    let q = Integer::div_floor(&a, &b);
    let rem = a - q * b;
    if 2 * rem > b || (2 * rem == b && a > 0) {
        q + 1
    } else {
        q
    }
}

/// Sign `det(A)^k`.
fn weight_sign(det: i64, weight: i64) -> i64 {
    if det < 0 && weight % 2 != 0 { -1 } else { 1 }
}

/// All `(n, r, m)` with `1 <= n <= n_max`, `1 <= m <= m_max`, positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexWindow {
    pub n_max: i64,
    pub m_max: i64,
}

impl IndexWindow {
    pub fn indices(&self, level: i64) -> Vec<FourierIndex> {
        let mut out = Vec::new();
        for m in 1..=self.m_max {
            for n in 1..=self.n_max {
                let bound = 4 * n * m * level;
                let rmax = isqrt(bound - 1);
                for r in -rmax..=rmax {
                    out.push(FourierIndex { n, r, m });
                }
            }
        }
        out
    }
}

pub(crate) fn isqrt(v: i64) -> i64 {
    if v < 0 {
        return -1;
    }
    let mut x = (v as f64).sqrt() as i64;
    while x * x > v {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= v {
        x += 1;
    }
    x
}

/// Atkin–Lehner signs `epsilon_c` keyed by exact divisor `c`.
pub type EigenData = BTreeMap<i64, i8>;

/// Parses a signed divisor list such as `-2,+461`.
pub fn parse_eigen(s: &str) -> Result<EigenData, String> {
    let mut out = EigenData::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (sign, rest) = match part.as_bytes()[0] {
            b'+' => (1, &part[1..]),
            b'-' => (-1, &part[1..]),
            _ => return Err(format!("missing sign in '{part}'")),
        };
        let c: i64 = rest.parse().map_err(|_| format!("bad divisor in '{part}'"))?;
        out.insert(c, sign);
    }
    Ok(out)
}

pub fn format_eigen(e: &EigenData) -> String {
    e.iter().map(|(c, s)| format!("{}{}", if *s > 0 { '+' } else { '-' }, c)).collect::<Vec<_>>().join(",")
}

/// Coefficients on an explicit set of Fourier indices; the key set of
/// `coeffs` is the coverage and zeros are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamodularFragment<F: Field> {
    field: F,
    level: i64,
    weight: i64,
    coeffs: BTreeMap<FourierIndex, F::Elem>,
    eigen: Option<EigenData>,
}

impl<F: Field> ParamodularFragment<F> {
    pub fn new(field: F, level: i64, weight: i64) -> Self {
        ParamodularFragment { field, level, weight, coeffs: BTreeMap::new(), eigen: None }
    }

    pub fn from_map(field: F, level: i64, weight: i64, coeffs: BTreeMap<FourierIndex, F::Elem>) -> Result<Self, ParamodularError> {
        for t in coeffs.keys() {
            FourierIndex::new(level, t.n, t.r, t.m)?;
        }
        Ok(ParamodularFragment { field, level, weight, coeffs, eigen: None })
    }

    pub fn with_eigen(mut self, eigen: EigenData) -> Result<Self, ParamodularError> {
        for &c in eigen.keys() {
            ALMatrix::new(self.level, c)?;
        }
        self.eigen = Some(eigen);
        Ok(self)
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn weight(&self) -> i64 {
        self.weight
    }

    pub fn eigen(&self) -> Option<&EigenData> {
        self.eigen.as_ref()
    }

    pub fn insert(&mut self, t: FourierIndex, v: F::Elem) -> Result<(), ParamodularError> {
        FourierIndex::new(self.level, t.n, t.r, t.m)?;
        self.coeffs.insert(t, v);
        Ok(())
    }

    pub fn get(&self, t: &FourierIndex) -> Option<&F::Elem> {
        self.coeffs.get(t)
    }

    pub fn coeffs(&self) -> &BTreeMap<FourierIndex, F::Elem> {
        &self.coeffs
    }

    pub fn coverage(&self) -> impl Iterator<Item = &FourierIndex> {
        self.coeffs.keys()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|v| self.field.is_zero(v))
    }

    pub fn map_field<G: Field>(
        &self,
        g: G,
        f: impl Fn(&F::Elem) -> Result<G::Elem, FieldError>,
    ) -> Result<ParamodularFragment<G>, FieldError> {
        let mut coeffs = BTreeMap::new();
        for (t, v) in &self.coeffs {
            coeffs.insert(*t, f(v)?);
        }
        Ok(ParamodularFragment { field: g, level: self.level, weight: self.weight, coeffs, eigen: self.eigen.clone() })
    }

    /// Row of values on `indices`, or `None` if one is not covered.
    pub fn row(&self, indices: &[FourierIndex]) -> Option<Vec<F::Elem>> {
        indices.iter().map(|t| self.coeffs.get(t).cloned()).collect()
    }

    /// Linear combination `sum_i x_i f_i` on the common coverage.
    pub fn combine(frags: &[&Self], xs: &[F::Elem]) -> Result<Self, ParamodularError> {
        let first = frags.first().ok_or(ParamodularError::Underdetermined)?;
        let f = first.field.clone();
        let common = common_coverage(frags)?;
        let mut out = ParamodularFragment::new(f.clone(), first.level, first.weight);
        for t in common {
            let mut acc = f.zero();
            for (fr, x) in frags.iter().zip(xs) {
                f.mul_add_assign(&mut acc, x, &fr.coeffs[&t]);
            }
            out.coeffs.insert(t, acc);
        }
        Ok(out)
    }

    /// Values keyed by reduced index, corrected by the transform sign.
    fn class_values(&self) -> Result<HashMap<FourierIndex, F::Elem>, ParamodularError> {
        let f = &self.field;
        let mut out: HashMap<FourierIndex, F::Elem> = HashMap::new();
        for (t, v) in &self.coeffs {
            let (rt, det) = reduce(self.level, *t);
            let val = signed(f, v, weight_sign(det, self.weight));
            match out.get(&rt) {
                Some(prev) if *prev != val => return Err(ParamodularError::InconsistentOrbit(*t)),
                Some(_) => {}
                None => {
                    out.insert(rt, val);
                }
            }
        }
        Ok(out)
    }

    /// Checks `a(A t A^T) = det(A)^k a(t)` among covered indices that
    /// reduce to the same form.
    pub fn check_invariance(&self) -> Result<(), ParamodularError> {
        self.class_values().map(|_| ())
    }

    /// Measured sign `e` with `a(m, -r, n) = e a(n, r, m)` on all covered
    /// pairs with nonzero values; `Ok(None)` when no pair is informative.
    pub fn fricke_sign(&self) -> Result<Option<i8>, ParamodularError> {
        let f = &self.field;
        let mut sign: Option<i8> = None;
        for (t, v) in &self.coeffs {
            let Some(w) = self.coeffs.get(&fricke_index(*t)) else { continue };
            let s = if *w == *v {
                if f.is_zero(v) {
                    continue;
                }
                1
            } else if *w == f.neg(v) {
                -1
            } else {
                return Err(ParamodularError::InconsistentOrbit(*t));
            };
            match sign {
                Some(prev) if prev != s => return Err(ParamodularError::InconsistentOrbit(*t)),
                _ => sign = Some(s),
            }
        }
        Ok(sign)
    }
}

fn signed<F: Field>(f: &F, v: &F::Elem, s: i64) -> F::Elem {
    if s < 0 { f.neg(v) } else { v.clone() }
}

fn common_coverage<F: Field>(frags: &[&ParamodularFragment<F>]) -> Result<Vec<FourierIndex>, ParamodularError> {
    let first = frags.first().ok_or(ParamodularError::InsufficientCommonCoverage { have: 0, need: 1 })?;
    for fr in frags {
        if fr.level != first.level || fr.weight != first.weight {
            return Err(ParamodularError::Mismatch);
        }
        fr.field.check_same(&first.field)?;
    }
    Ok(first.coeffs.keys().filter(|t| frags.iter().all(|fr| fr.coeffs.contains_key(t))).copied().collect())
}

/// Reduced images of `t` under the words in the given Atkin–Lehner matrices,
/// each with the product of the chosen signs and the weight sign picked up
/// while reducing. The empty word comes first. Reducing between letters keeps
/// the entries small; the matrices normalize the group, so classes map to
/// classes.
fn al_orbit(level: i64, weight: i64, t: FourierIndex, mats: &[(ALMatrix, i64)]) -> Result<Vec<(FourierIndex, i64)>, ParamodularError> {
    let (rt, det) = reduce(level, t);
    let mut out = vec![(rt, weight_sign(det, weight))];
    for (w, s) in mats {
        let mut next = Vec::with_capacity(out.len() * 2);
        for (u, su) in &out {
            next.push((*u, *su));
            let (ru, det) = reduce(level, al_index(*u, w)?);
            next.push((ru, su * s * weight_sign(det, weight)));
        }
        out = next;
    }
    Ok(out)
}

/// Projection onto the joint eigenspace `(eps_2, eps_N)` at level `2N`:
/// `a_P(t) = (1/4) sum over words w in {1, w_2, w_N, w_N w_2} of eps(w) a(w t)`.
pub fn polarize<F: Field>(f: &ParamodularFragment<F>, eps2: i8, eps_n: i8) -> Result<ParamodularFragment<F>, ParamodularError> {
    let level = f.level;
    if level % 2 != 0 || (level / 2) % 2 == 0 {
        return Err(ParamodularError::NotExactDivisor { level, c: 2 });
    }
    let fl = &f.field;
    let w2 = ALMatrix::new(level, 2)?;
    let wn = ALMatrix::new(level, level / 2)?;
    let classes = f.class_values()?;
    let quarter = fl.inv(&fl.from_i64(4)).ok_or(ParamodularError::Field(FieldError::NotPrime(2)))?;
    let mut out = ParamodularFragment::new(fl.clone(), level, f.weight);
    for t in f.coeffs.keys() {
        let mut acc = fl.zero();
        for (rt, s) in al_orbit(level, f.weight, *t, &[(w2, eps2 as i64), (wn, eps_n as i64)])? {
            let v = classes.get(&rt).ok_or(ParamodularError::CoverageNotClosed(*t))?;
            let v = signed(fl, v, s);
            fl.add_assign(&mut acc, &v);
        }
        out.coeffs.insert(*t, fl.mul(&acc, &quarter));
    }
    let mut eigen = EigenData::new();
    eigen.insert(2, eps2);
    eigen.insert(level / 2, eps_n);
    out.eigen = Some(eigen);
    Ok(out)
}

/// Fills every index in the bounding box of the coverage whose class under
/// the invariance group and the eigen relations is already known.
pub fn infill<F: Field>(f: &ParamodularFragment<F>) -> Result<ParamodularFragment<F>, ParamodularError> {
    let eigen = f.eigen.as_ref().ok_or(ParamodularError::NoEigenData)?;
    let level = f.level;
    let fl = &f.field;
    let mats: Vec<(ALMatrix, i64)> =
        eigen.iter().map(|(&c, &s)| Ok((ALMatrix::new(level, c)?, s as i64))).collect::<Result<_, ParamodularError>>()?;
    // known class values, propagated along the eigen relations
    let mut known: HashMap<FourierIndex, F::Elem> = HashMap::new();
    let mut set = |rt: FourierIndex, v: F::Elem, origin: FourierIndex| -> Result<(), ParamodularError> {
        match known.get(&rt) {
            Some(prev) if *prev != v => Err(ParamodularError::InconsistentOrbit(origin)),
            Some(_) => Ok(()),
            None => {
                known.insert(rt, v);
                Ok(())
            }
        }
    };
    for (t, v) in &f.coeffs {
        for (rt, s) in al_orbit(level, f.weight, *t, &mats)? {
            set(rt, signed(fl, v, s), *t)?;
        }
    }
    let n_max = f.coeffs.keys().map(|t| t.n).max().unwrap_or(0);
    let m_max = f.coeffs.keys().map(|t| t.m).max().unwrap_or(0);
    let mut out = f.clone();
    for t in (IndexWindow { n_max, m_max }).indices(level) {
        if out.coeffs.contains_key(&t) {
            continue;
        }
        let mut value: Option<F::Elem> = None;
        let orbit = al_orbit(level, f.weight, t, &mats)?;
        let (rt0, s0) = orbit[0];
        for &(rt, total) in &orbit {
            let cand = if rt == rt0 && total * s0 == -1 {
                // the orbit maps t to minus itself
                Some(fl.zero())
            } else {
                known.get(&rt).map(|v| signed(fl, v, total))
            };
            if let Some(c) = cand {
                match &value {
                    Some(prev) if *prev != c => return Err(ParamodularError::InconsistentOrbit(t)),
                    _ => value = Some(c),
                }
            }
        }
        if let Some(v) = value {
            out.coeffs.insert(t, v);
        }
    }
    // covered fixed points with sign -1 must already vanish
    for (t, v) in &out.coeffs {
        let orbit = al_orbit(level, f.weight, *t, &mats)?;
        let (rt0, s0) = orbit[0];
        for &(rt, s) in &orbit {
            if rt == rt0 && s * s0 == -1 && !fl.is_zero(v) {
                return Err(ParamodularError::InconsistentOrbit(*t));
            }
        }
    }
    Ok(out)
}

/// Extends `f` to the coverage of `basis` by solving for its coordinates
/// from the coefficients it knows.
pub fn prolong<F: Field>(f: &ParamodularFragment<F>, basis: &[ParamodularFragment<F>]) -> Result<ParamodularFragment<F>, ParamodularError> {
    let fl = &f.field;
    if basis.is_empty() {
        return if f.is_zero() { Ok(f.clone()) } else { Err(ParamodularError::Inconsistent) };
    }
    let refs: Vec<&ParamodularFragment<F>> = basis.iter().collect();
    let cover = common_coverage(&refs)?;
    let known: Vec<FourierIndex> = cover.iter().filter(|t| f.coeffs.contains_key(t)).copied().collect();
    let rows: Vec<Vec<F::Elem>> = basis.iter().map(|b| b.row(&known).unwrap()).collect();
    let mut e = Echelon::new(fl.clone(), known.len());
    for r in &rows {
        e.insert(r);
    }
    let target = f.row(&known).unwrap();
    if e.rank() < basis.len() {
        // the coordinates are not unique, but a zero target still extends by zero
        if target.iter().all(|x| fl.is_zero(x)) {
            let mut out = ParamodularFragment::new(fl.clone(), f.level, f.weight);
            for t in cover {
                out.coeffs.insert(t, fl.zero());
            }
            return Ok(out);
        }
        return Err(ParamodularError::Underdetermined);
    }
    let xs = solve_in_span(fl, &rows, &target).ok_or(ParamodularError::Inconsistent)?;
    let mut out = ParamodularFragment::combine(&refs, &xs)?;
    out.eigen = f.eigen.clone();
    Ok(out)
}

/// Whether `f` is linearly independent of `lifts` on their common coverage.
pub fn certify_nonlift<F: Field>(f: &ParamodularFragment<F>, lifts: &[ParamodularFragment<F>]) -> Result<bool, ParamodularError> {
    let mut refs: Vec<&ParamodularFragment<F>> = lifts.iter().collect();
    refs.push(f);
    let cover = common_coverage(&refs)?;
    if cover.len() < lifts.len() + 1 {
        return Err(ParamodularError::InsufficientCommonCoverage { have: cover.len(), need: lifts.len() + 1 });
    }
    let mut e = Echelon::new(f.field.clone(), cover.len());
    for l in lifts {
        e.insert(&l.row(&cover).unwrap());
    }
    let before = e.rank();
    e.insert(&f.row(&cover).unwrap());
    Ok(e.rank() == before + 1)
}

/// Fourier–Jacobi coefficient `phi_m` as a cusp fragment of index `m N`,
/// covering every `n` for which all positive `(n, r, m)` are known.
pub fn fj_slice<F: Field>(f: &ParamodularFragment<F>, m: i64) -> Result<JacobiFormFragment<F>, ParamodularError> {
    let level = f.level;
    let index = m * level;
    let in_slice: BTreeMap<(i64, i64), F::Elem> =
        f.coeffs.iter().filter(|(t, _)| t.m == m).map(|(t, v)| ((t.n, t.r), v.clone())).collect();
    if in_slice.is_empty() {
        return Err(ParamodularError::EmptySlice(m));
    }
    let mut n_max = 0;
    loop {
        let n = n_max + 1;
        let rmax = isqrt(4 * n * index - 1);
        if (-rmax..=rmax).all(|r| in_slice.contains_key(&(n, r))) {
            n_max = n;
        } else {
            break;
        }
    }
    let coeffs = in_slice.into_iter().filter(|((n, _), v)| *n <= n_max && !f.field.is_zero(v)).collect();
    Ok(JacobiFormFragment::from_parts_unchecked(f.field.clone(), f.weight, index, n_max, coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeField;

    fn t(n: i64, r: i64, m: i64) -> FourierIndex {
        FourierIndex { n, r, m }
    }

    #[test]
    fn fricke_examples() {
        assert_eq!(fricke_index(t(1, 1, 1)), t(1, -1, 1));
        let u = t(3, 5, 2);
        assert_eq!(fricke_index(fricke_index(u)), u);
        assert_eq!(fricke_index(u).disc(277), u.disc(277));
    }

    #[test]
    fn al_special_cases() {
        let id = ALMatrix::new(277, 1).unwrap();
        assert_eq!(al_index(t(2, 3, 1), &id).unwrap(), t(2, 3, 1));
        let fr = ALMatrix::new(277, 277).unwrap();
        assert_eq!(al_index(t(2, 3, 1), &fr).unwrap(), fricke_index(t(2, 3, 1)));
        let w = ALMatrix::with_witness(922, 2, 231, 1, 1, 1).unwrap();
        for u in (IndexWindow { n_max: 3, m_max: 3 }).indices(922) {
            let v = al_index(u, &w).unwrap();
            assert_eq!(v.disc(922), u.disc(922));
        }
        assert!(ALMatrix::with_witness(922, 2, 1, 1, 1, 1).is_err());
        assert!(ALMatrix::new(12, 2).is_err());
    }

    #[test]
    fn canonical_witness_is_valid() {
        for (level, c) in [(922, 2), (922, 461), (1174, 2), (1174, 587), (30, 6)] {
            let w = ALMatrix::new(level, c).unwrap();
            assert_eq!(w.alpha * w.delta * c - w.beta * w.gamma * (level / c), 1);
        }
    }

    #[test]
    fn reduction_is_canonical() {
        let u = t(40, 131, 3);
        let (v, _) = reduce(277, u);
        assert_eq!(v.disc(277), u.disc(277));
        assert_eq!(reduce(277, v).0, v);
        // images under [[1, 1], [0, 1]], [[1, 0], [277, 1]] and r -> -r
        for w in [u.act_integral(277, 1, 1, 0, 1), u.act_integral(277, 1, 0, 277, 1), t(40, -131, 3)] {
            assert_eq!(reduce(277, w).0, v);
        }
        // the Atkin-Lehner images of a level 74 index stay in their class
        let w2 = ALMatrix::new(74, 2).unwrap();
        let a = al_index(t(1, -17, 1), &w2).unwrap();
        let back = al_index(a, &w2).unwrap();
        assert_eq!(reduce(74, back).0, reduce(74, t(1, -17, 1)).0);
    }

    /// Integer `(x, y)` with `n x^2 + r x y + m N y^2 = val`, by search.
    fn represent(t: FourierIndex, level: i64, val: i64) -> Vec<(i64, i64)> {
        let bound = 2 * val + 2;
        let mut out = Vec::new();
        for x in -bound..=bound {
            for y in -bound..=bound {
                if t.n * x * x + t.r * x * y + t.m * level * y * y == val {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Brute-force search for `A` with `N | c`, `det A = +-1`, `A t A^T = u`.
    fn equivalent(level: i64, t: FourierIndex, u: FourierIndex) -> bool {
        let rows1 = represent(t, level, u.n);
        let rows2: Vec<_> = represent(t, level, u.m * level).into_iter().filter(|(c, _)| c % level == 0).collect();
        rows1.iter().any(|&(a, b)| {
            rows2.iter().any(|&(c, d)| {
                (a * d - b * c).abs() == 1 && 2 * t.n * a * c + t.r * (a * d + b * c) + 2 * t.m * level * b * d == u.r
            })
        })
    }

    #[test]
    fn reduction_matches_brute_force_equivalence() {
        for level in [1, 2, 5, 6, 11] {
            let mut idx = Vec::new();
            for n in 1..=4 {
                for m in 1..=3 {
                    let rmax = isqrt(4 * n * m * level - 1);
                    for r in -rmax..=rmax {
                        idx.push(t(n, r, m));
                    }
                }
            }
            for (i, a) in idx.iter().enumerate() {
                for b in &idx[i..] {
                    if a.disc(level) != b.disc(level) {
                        continue;
                    }
                    let same = reduce(level, *a).0 == reduce(level, *b).0;
                    assert_eq!(same, equivalent(level, *a, *b), "level {level}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn infill_forces_zero_on_fixed_points() {
        let f = PrimeField::new(101).unwrap();
        let mut frag = ParamodularFragment::new(f.clone(), 11, 2);
        frag.insert(t(1, 1, 2), 5).unwrap();
        frag.insert(t(2, 0, 2), 0).unwrap();
        let mut e = EigenData::new();
        e.insert(11, -1);
        let frag = frag.with_eigen(e).unwrap();
        let out = infill(&frag).unwrap();
        assert_eq!(out.get(&t(1, 0, 1)), Some(&0));
        assert_eq!(out.get(&t(2, 1, 1)), Some(&(101 - 5)));
        assert_eq!(infill(&out).unwrap(), out);
    }

    #[test]
    fn infill_detects_conflicts() {
        let f = PrimeField::new(101).unwrap();
        let mut frag = ParamodularFragment::new(f.clone(), 11, 2);
        frag.insert(t(1, 1, 2), 5).unwrap();
        frag.insert(t(2, -1, 1), 6).unwrap();
        let mut e = EigenData::new();
        e.insert(11, 1);
        let frag = frag.with_eigen(e).unwrap();
        assert!(matches!(infill(&frag), Err(ParamodularError::InconsistentOrbit(_))));
    }

    #[test]
    fn certify_examples() {
        let f = PrimeField::new(101).unwrap();
        let idx = [t(1, 0, 1), t(1, 1, 1), t(1, 2, 1)];
        let mk = |vals: [u64; 3]| {
            let mut fr = ParamodularFragment::new(f.clone(), 11, 2);
            for (i, v) in idx.iter().zip(vals) {
                fr.insert(*i, v).unwrap();
            }
            fr
        };
        let lifts = vec![mk([1, 2, 3]), mk([0, 1, 1])];
        assert!(!certify_nonlift(&mk([1, 2, 3]), &lifts).unwrap());
        assert!(certify_nonlift(&mk([0, 0, 1]), &lifts).unwrap());
        assert!(matches!(
            certify_nonlift(&mk([0, 0, 1]), &[mk([1, 0, 0]), mk([0, 1, 0]), mk([0, 0, 1])]),
            Err(ParamodularError::InsufficientCommonCoverage { .. })
        ));
    }

    #[test]
    fn prolong_examples() {
        let f = PrimeField::new(101).unwrap();
        let mut b = ParamodularFragment::new(f.clone(), 11, 2);
        for (i, v) in [(t(1, 0, 1), 2u64), (t(1, 1, 1), 3), (t(2, 0, 1), 4)] {
            b.insert(i, v).unwrap();
        }
        let mut known = ParamodularFragment::new(f.clone(), 11, 2);
        known.insert(t(1, 1, 1), 6).unwrap();
        let out = prolong(&known, std::slice::from_ref(&b)).unwrap();
        assert_eq!(out.get(&t(2, 0, 1)), Some(&8));
        let zero = ParamodularFragment::new(f.clone(), 11, 2);
        assert!(prolong(&zero, std::slice::from_ref(&b)).is_ok());
        let mut bad = known.clone();
        bad.insert(t(1, 0, 1), 1).unwrap();
        assert_eq!(prolong(&bad, &[b]), Err(ParamodularError::Inconsistent));
    }

    #[test]
    fn eigen_parse_round_trip() {
        let e = parse_eigen("-2,+461").unwrap();
        assert_eq!(e.get(&2), Some(&-1));
        assert_eq!(format_eigen(&e), "-2,+461");
        assert!(parse_eigen("2").is_err());
    }
}
