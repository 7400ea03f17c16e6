//! Exact linear algebra over a [`Field`], fraction-free integer elimination,
//! and integral lattice saturation.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::field::{Field, PrimeField, Rat};

/// Row-sparse matrix with a fixed column count.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<F: Field> {
    field: F,
    ncols: usize,
    rows: Vec<Vec<(usize, F::Elem)>>,
}

impl<F: Field> SparseMatrix<F> {
    pub fn new(field: F, ncols: usize) -> Self {
        SparseMatrix { field, ncols, rows: Vec::new() }
    }

    pub fn from_dense(field: F, ncols: usize, dense: &[Vec<F::Elem>]) -> Self {
        let mut m = SparseMatrix::new(field, ncols);
        for row in dense {
            assert_eq!(row.len(), ncols);
            m.push_row(row.iter().cloned().enumerate());
        }
        m
    }

    /// Appends a row; duplicate columns are summed and zeros dropped.
    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, F::Elem)>) {
        let f = &self.field;
        let mut row: Vec<(usize, F::Elem)> = entries.into_iter().collect();
        row.sort_by_key(|(c, _)| *c);
        let mut out: Vec<(usize, F::Elem)> = Vec::with_capacity(row.len());
        for (c, v) in row {
            assert!(c < self.ncols, "column {c} out of range");
            match out.last_mut() {
                Some((lc, lv)) if *lc == c => f.add_assign(lv, &v),
                _ => out.push((c, v)),
            }
        }
        out.retain(|(_, v)| !f.is_zero(v));
        self.rows.push(out);
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rows(&self) -> &[Vec<(usize, F::Elem)>] {
        &self.rows
    }

    /// Number of rows that are not identically zero.
    pub fn nonzero_rows(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_empty()).count()
    }

    pub fn to_dense(&self) -> Vec<Vec<F::Elem>> {
        self.rows
            .iter()
            .map(|r| {
                let mut d = vec![self.field.zero(); self.ncols];
                for (c, v) in r {
                    d[*c] = v.clone();
                }
                d
            })
            .collect()
    }

    pub fn rank(&self) -> usize {
        let mut e = Echelon::new(self.field.clone(), self.ncols);
        for r in &self.rows {
            e.insert_sparse(r);
        }
        e.rank()
    }

    /// Basis of `{x : M x = 0}`.
    pub fn kernel(&self) -> Vec<Vec<F::Elem>> {
        let mut e = Echelon::new(self.field.clone(), self.ncols);
        for r in &self.rows {
            e.insert_sparse(r);
        }
        e.kernel()
    }
}

/// Incrementally maintained reduced row echelon form.
///
/// Rows are inserted one at a time; a row that reduces to zero is
/// dependent on the rows already present.
#[derive(Debug, Clone)]
pub struct Echelon<F: Field> {
    field: F,
    ncols: usize,
    /// (pivot column, dense row with 1 at the pivot)
    rows: Vec<(usize, Vec<F::Elem>)>,
}

impl<F: Field> Echelon<F> {
    pub fn new(field: F, ncols: usize) -> Self {
        Echelon { field, ncols, rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.rows.iter().map(|(p, _)| *p).collect()
    }

    /// Normalized rows, each with a 1 at its pivot.
    pub fn rows(&self) -> impl Iterator<Item = &[F::Elem]> {
        self.rows.iter().map(|(_, r)| r.as_slice())
    }

    /// Rebuilds an echelon form from saved rows.
    pub fn from_rows<'a>(field: F, ncols: usize, rows: impl IntoIterator<Item = &'a [F::Elem]>) -> Self
    where
        F::Elem: 'a,
    {
        let mut e = Echelon::new(field, ncols);
        for r in rows {
            e.insert(r);
        }
        e
    }

    fn reduce(&self, v: &mut [F::Elem]) {
        let f = &self.field;
        for (p, row) in &self.rows {
            if f.is_zero(&v[*p]) {
                continue;
            }
            let c = f.neg(&v[*p]);
            for (j, x) in row.iter().enumerate() {
                if !f.is_zero(x) {
                    f.mul_add_assign(&mut v[j], &c, x);
                }
            }
        }
    }

    /// Whether `v` lies in the row span.
    pub fn contains(&self, v: &[F::Elem]) -> bool {
        let mut w = v.to_vec();
        self.reduce(&mut w);
        w.iter().all(|x| self.field.is_zero(x))
    }

    /// Inserts `v`; returns `true` when it raised the rank.
    pub fn insert(&mut self, v: &[F::Elem]) -> bool {
        assert_eq!(v.len(), self.ncols);
        let f = self.field.clone();
        let mut w = v.to_vec();
        self.reduce(&mut w);
        let Some(p) = w.iter().position(|x| !f.is_zero(x)) else {
            return false;
        };
        let inv = f.inv(&w[p]).expect("nonzero pivot");
        for x in w.iter_mut() {
            if !f.is_zero(x) {
                *x = f.mul(x, &inv);
            }
        }
        // keep the form reduced
        for (_, row) in self.rows.iter_mut() {
            if f.is_zero(&row[p]) {
                continue;
            }
            let c = f.neg(&row[p]);
            for (j, x) in w.iter().enumerate() {
                if !f.is_zero(x) {
                    f.mul_add_assign(&mut row[j], &c, x);
                }
            }
        }
        self.rows.push((p, w));
        true
    }

    pub fn insert_sparse(&mut self, v: &[(usize, F::Elem)]) -> bool {
        if v.is_empty() {
            return false;
        }
        let mut d = vec![self.field.zero(); self.ncols];
        for (c, x) in v {
            d[*c] = x.clone();
        }
        self.insert(&d)
    }

    /// Basis of the null space of the inserted rows.
    pub fn kernel(&self) -> Vec<Vec<F::Elem>> {
        let f = &self.field;
        let mut is_pivot = vec![false; self.ncols];
        for (p, _) in &self.rows {
            is_pivot[*p] = true;
        }
        let mut out = Vec::new();
        for free in (0..self.ncols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![f.zero(); self.ncols];
            v[free] = f.one();
            for (p, row) in &self.rows {
                v[*p] = f.neg(&row[free]);
            }
            out.push(v);
        }
        out
    }
}

/// Coordinates of `target` in terms of `basis` (rows), or `None` when
/// `target` is outside their span. `basis` must be linearly independent.
pub fn solve_in_span<F: Field>(field: &F, basis: &[Vec<F::Elem>], target: &[F::Elem]) -> Option<Vec<F::Elem>> {
    let k = basis.len();
    let n = target.len();
    // Columns are the basis vectors; augment with target.
    let mut e = Echelon::new(field.clone(), k + 1);
    for j in 0..n {
        let mut row: Vec<F::Elem> = basis.iter().map(|b| b[j].clone()).collect();
        row.push(target[j].clone());
        e.insert(&row);
    }
    if e.pivots().contains(&k) {
        return None;
    }
    if e.rank() < k {
        return None;
    }
    let mut x = vec![field.zero(); k];
    for (p, row) in &e.rows {
        x[*p] = row[k].clone();
    }
    Some(x)
}

/// Exact rank of a rational matrix by fraction-free elimination after
/// clearing denominators row by row.
pub fn rank_q(rows: &[Vec<Rat>]) -> usize {
    let ints: Vec<Vec<BigInt>> = rows.iter().map(|r| clear_denominators(r)).collect();
    bareiss(ints).0
}

/// Integer row with the same span as `row`.
pub fn clear_denominators(row: &[Rat]) -> Vec<BigInt> {
    let mut l = BigInt::one();
    for x in row {
        l = l.lcm(&x.denom());
    }
    row.iter().map(|x| x.numer() * (&l / x.denom())).collect()
}

/// Fraction-free Gaussian elimination. Returns the rank and, for a square
/// full-rank input, the determinant (zero otherwise). Pivots are chosen by
/// minimal absolute value within the column.
pub fn bareiss(mut m: Vec<Vec<BigInt>>) -> (usize, BigInt) {
    let nrows = m.len();
    if nrows == 0 {
        return (0, BigInt::one());
    }
    let ncols = m[0].len();
    let mut prev = BigInt::one();
    let mut rank = 0;
    let mut sign = 1i32;
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let piv = (rank..nrows)
            .filter(|&i| !m[i][col].is_zero())
            .min_by(|&a, &b| m[a][col].abs().cmp(&m[b][col].abs()));
        let Some(piv) = piv else { continue };
        if piv != rank {
            m.swap(piv, rank);
            sign = -sign;
        }
        let (top, bottom) = m.split_at_mut(rank + 1);
        let prow = &top[rank];
        for row in bottom.iter_mut() {
            for j in (col + 1)..ncols {
                let v = &(&prow[col] * &row[j]) - &(&row[col] * &prow[j]);
                row[j] = v / &prev;
            }
            row[col] = BigInt::zero();
        }
        prev = m[rank][col].clone();
        rank += 1;
    }
    let det = if rank == nrows && nrows == ncols {
        let d = m[nrows - 1][ncols - 1].clone();
        if sign < 0 { -d } else { d }
    } else {
        BigInt::zero()
    };
    (rank, det)
}

/// Determinant of a square integer matrix.
pub fn det_integer(m: &[Vec<BigInt>]) -> BigInt {
    assert!(m.iter().all(|r| r.len() == m.len()), "matrix must be square");
    bareiss(m.to_vec()).1
}

/// Finite set of integer vectors in a common ambient `Z^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralLattice {
    dim: usize,
    basis: Vec<Vec<BigInt>>,
}

impl IntegralLattice {
    pub fn new(dim: usize, vectors: Vec<Vec<BigInt>>) -> Self {
        assert!(vectors.iter().all(|v| v.len() == dim));
        IntegralLattice { dim, basis: vectors }
    }

    pub fn from_i64(dim: usize, vectors: &[Vec<i64>]) -> Self {
        Self::new(dim, vectors.iter().map(|v| v.iter().map(|&x| BigInt::from(x)).collect()).collect())
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[Vec<BigInt>] {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        bareiss(self.basis.clone()).0
    }

    /// Rank of the reduction modulo `p`.
    pub fn rank_mod_p(&self, p: u64) -> usize {
        let f = PrimeField::new(p).expect("prime modulus");
        let mut e = Echelon::new(f.clone(), self.dim);
        for v in &self.basis {
            let w: Vec<u64> = v.iter().map(|x| f.reduce_bigint(x)).collect();
            e.insert(&w);
        }
        e.rank()
    }

    /// Basis of `(Q L) ∩ Z^n`.
    ///
    /// Column operations bring the basis matrix `B` to `[H | 0]` with `H`
    /// lower triangular, tracking the inverse `V` of the accumulated
    /// unimodular transform so that `B = [H | 0] V`. The first `rank` rows
    /// of `V` then span the saturation.
    pub fn saturate(&self) -> IntegralLattice {
        let n = self.dim;
        // independent subset with the same span
        let mut rows: Vec<Vec<BigInt>> = Vec::new();
        for v in &self.basis {
            let mut trial = rows.clone();
            trial.push(v.clone());
            if bareiss(trial.clone()).0 == trial.len() {
                rows = trial;
            }
        }
        let r = rows.len();
        let mut b = rows;
        let mut v: Vec<Vec<BigInt>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        for k in 0..r {
            loop {
                // smallest nonzero entry among columns k.. of row k
                let piv = (k..n)
                    .filter(|&j| !b[k][j].is_zero())
                    .min_by(|&x, &y| b[k][x].abs().cmp(&b[k][y].abs()))
                    .expect("independent rows");
                if piv != k {
                    for row in b.iter_mut() {
                        row.swap(k, piv);
                    }
                    v.swap(k, piv);
                }
                let mut done = true;
                for j in (k + 1)..n {
                    if b[k][j].is_zero() {
                        continue;
                    }
                    let q = b[k][j].div_floor(&b[k][k]);
                    // col_j -= q col_k ; row_k(V) += q row_j(V)
                    for row in b.iter_mut() {
                        let t = &q * &row[k];
                        row[j] -= t;
                    }
                    let vj = v[j].clone();
                    for (x, y) in v[k].iter_mut().zip(vj.iter()) {
                        *x += &q * y;
                    }
                    if !b[k][j].is_zero() {
                        done = false;
                    }
                }
                if done {
                    break;
                }
            }
        }
        let mut out: Vec<Vec<BigInt>> = v.into_iter().take(r).collect();
        for row in out.iter_mut() {
            normalize_sign(row);
        }
        IntegralLattice { dim: n, basis: out }
    }

    /// Whether the lattice is saturated: its vectors are independent and
    /// the gcd of their maximal minors is one.
    pub fn is_saturated(&self) -> bool {
        let r = self.basis.len();
        if r == 0 {
            return true;
        }
        if self.rank() < r {
            return false;
        }
        let mut g = BigInt::zero();
        let mut cols: Vec<usize> = (0..r).collect();
        loop {
            let minor: Vec<Vec<BigInt>> =
                self.basis.iter().map(|row| cols.iter().map(|&c| row[c].clone()).collect()).collect();
            g = g.gcd(&det_integer(&minor));
            if g.is_one() {
                return true;
            }
            // next r-subset of 0..dim in lexicographic order
            let mut i = r;
            loop {
                if i == 0 {
                    return false;
                }
                i -= 1;
                if cols[i] < self.dim - r + i {
                    break;
                }
                if i == 0 {
                    return false;
                }
            }
            cols[i] += 1;
            for j in i + 1..r {
                cols[j] = cols[j - 1] + 1;
            }
        }
    }
}

fn normalize_sign(row: &mut [BigInt]) {
    if let Some(x) = row.iter().find(|x| !x.is_zero()) {
        if x.is_negative() {
            for y in row.iter_mut() {
                *y = -y.clone();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Rationals;

    fn q(v: i64) -> Rat {
        Rat::from_int(v)
    }

    #[test]
    fn kernel_examples() {
        let id = SparseMatrix::from_dense(Rationals, 3, &[vec![q(1), q(0), q(0)], vec![q(0), q(1), q(0)], vec![q(0), q(0), q(1)]]);
        assert!(id.kernel().is_empty());
        let zero = SparseMatrix::from_dense(Rationals, 3, &vec![vec![q(0); 3]; 3]);
        assert_eq!(zero.kernel().len(), 3);
        let m = SparseMatrix::from_dense(Rationals, 3, &[vec![q(1), q(2), q(3)], vec![q(2), q(4), q(6)]]);
        let k = m.kernel();
        assert_eq!(k.len(), 2);
        for v in &k {
            let s = &(&q(1) * &v[0]) + &(&(&q(2) * &v[1]) + &(&q(3) * &v[2]));
            assert!(s.is_zero());
        }
    }

    #[test]
    fn bareiss_det() {
        let m = vec![
            vec![BigInt::from(2), BigInt::from(0), BigInt::from(1)],
            vec![BigInt::from(1), BigInt::from(3), BigInt::from(2)],
            vec![BigInt::from(1), BigInt::from(1), BigInt::from(1)],
        ];
        // 2(3-2) - 0 + 1(1-3) = 0
        assert_eq!(det_integer(&m), BigInt::zero());
        let m2 = vec![vec![BigInt::from(0), BigInt::from(1)], vec![BigInt::from(1), BigInt::from(0)]];
        assert_eq!(det_integer(&m2), BigInt::from(-1));
    }

    #[test]
    fn saturation_examples() {
        let l = IntegralLattice::from_i64(2, &[vec![2, 0], vec![0, 1]]);
        assert_eq!(l.rank_mod_p(2), 1);
        assert!(!l.is_saturated());
        let s = l.saturate();
        assert_eq!(s.rank_mod_p(2), 2);
        assert!(s.is_saturated());
        let l2 = IntegralLattice::from_i64(3, &[vec![2, 4, 6], vec![1, 1, 1]]);
        let s2 = l2.saturate();
        assert_eq!(s2.rank(), 2);
        assert!(s2.is_saturated());
        assert!(s2.vectors().iter().any(|v| v == &vec![BigInt::from(1), BigInt::from(2), BigInt::from(3)])
            || s2.rank_mod_p(2) == 2);
    }

    #[test]
    fn solve_in_span_roundtrip() {
        let f = PrimeField::new(101).unwrap();
        let basis = vec![vec![1u64, 0, 2], vec![0, 1, 3]];
        let target = vec![5u64, 7, (10 + 21) % 101];
        assert_eq!(solve_in_span(&f, &basis, &target), Some(vec![5, 7]));
        assert_eq!(solve_in_span(&f, &basis, &[0, 0, 1]), None);
    }
}
