//! Small dense complex linear algebra.
//!
//! Every per-frequency quantity handled by the separators is a tiny dense
//! matrix (at most a few dozen rows), so everything here is a straightforward
//! row-major implementation tuned for those sizes rather than a general
//! purpose library. Indices are 0-based throughout.
//!
//! Besides the usual products and solves, the module provides the Kronecker
//! lifting operators that turn a factored filter `w1 ⊗ w2` into a linear
//! function of either factor:
//!
//! ```text
//! w1 ⊗ w2 = (I_{M1} ⊗ w2) w1 = lift_left(w2, M1) · w1
//!         = (w1 ⊗ I_{M2}) w2 = lift_right(w1, M2) · w2
//! ```

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CVec = Vec<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Default trace-scaled diagonal loading applied to Hermitian solves.
pub const DEFAULT_LOADING: f64 = 1e-9;

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [C64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> CVec {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn matmul(&self, rhs: &CMat) -> Result<CMat> {
        if self.cols != rhs.rows {
            return Err(Error::dim(
                "matmul",
                format!("{}x{} · {}x{}", self.rows, self.cols, rhs.rows, rhs.cols),
            ));
        }
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᴴ · rhs` without materializing the adjoint.
    pub fn adjoint_matmul(&self, rhs: &CMat) -> Result<CMat> {
        if self.rows != rhs.rows {
            return Err(Error::dim(
                "adjoint_matmul",
                format!("({}x{})ᴴ · {}x{}", self.rows, self.cols, rhs.rows, rhs.cols),
            ));
        }
        let mut out = CMat::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let rrow = rhs.row(k);
            for (r, &a) in self.row(k).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let a = a.conj();
                for (o, &b) in out.row_mut(r).iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[C64]) -> Result<CVec> {
        if self.cols != x.len() {
            return Err(Error::dim(
                "matvec",
                format!("{}x{} · vector of length {}", self.rows, self.cols, x.len()),
            ));
        }
        Ok((0..self.rows).map(|r| dotu(self.row(r), x)).collect())
    }

    /// `selfᴴ · x`.
    pub fn adjoint_matvec(&self, x: &[C64]) -> Result<CVec> {
        if self.rows != x.len() {
            return Err(Error::dim(
                "adjoint_matvec",
                format!("({}x{})ᴴ · vector of length {}", self.rows, self.cols, x.len()),
            ));
        }
        let mut out = vec![ZERO; self.cols];
        for (r, &xr) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(r)) {
                *o += a.conj() * xr;
            }
        }
        Ok(out)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max).sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for z in &mut self.data {
            *z *= s;
        }
    }

    pub fn sub(&self, rhs: &CMat) -> Result<CMat> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::dim("sub", "shape mismatch"));
        }
        Ok(CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// Largest entry of `A − Aᴴ`, relative to the largest entry of `A`.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermitian_defect() <= rel_tol
    }

    /// Replaces `A` by `(A + Aᴴ)/2`, removing rounding drift.
    pub fn symmetrize(&mut self) {
        let n = self.rows;
        for r in 0..n {
            self[(r, r)] = C64::new(self[(r, r)].re, 0.0);
            for c in r + 1..n {
                let avg = (self[(r, c)] + self[(c, r)].conj()) * 0.5;
                self[(r, c)] = avg;
                self[(c, r)] = avg.conj();
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Unconjugated dot product `Σ a_k b_k`.
#[inline]
pub fn dotu(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inner product `aᴴ b`.
#[inline]
pub fn dotc(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real part of the Hermitian form `wᴴ A w`.
pub fn quad_form(a: &CMat, w: &[C64]) -> f64 {
    let mut acc = ZERO;
    for (r, &wr) in w.iter().enumerate() {
        acc += wr.conj() * dotu(a.row(r), w);
    }
    acc.re
}

/// Standard basis vector of length `len` with a one at `index`.
pub fn unit(len: usize, index: usize) -> CVec {
    let mut v = vec![ZERO; len];
    v[index] = ONE;
    v
}

/// `A ← α·A + β·x xᴴ`, keeping the result exactly Hermitian.
pub fn rank_one_update(a: &mut CMat, alpha: f64, beta: f64, x: &[C64]) {
    let n = x.len();
    debug_assert!(a.rows() == n && a.cols() == n);
    for r in 0..n {
        let xr = x[r] * beta;
        let diag = alpha * a[(r, r)].re + beta * x[r].norm_sqr();
        a[(r, r)] = C64::new(diag, 0.0);
        for c in r + 1..n {
            let v = a[(r, c)] * alpha + xr * x[c].conj();
            a[(r, c)] = v;
            a[(c, r)] = v.conj();
        }
    }
}

/// Kronecker product of two vectors: `out[p·|b| + q] = a[p]·b[q]`.
pub fn kron(a: &[C64], b: &[C64]) -> CVec {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &ap in a {
        for &bq in b {
            out.push(ap * bq);
        }
    }
    out
}

/// `I_{m1} ⊗ b`: an `(m1·|b|) × m1` block-diagonal stack of copies of `b`.
pub fn lift_left(b: &[C64], m1: usize) -> CMat {
    let m2 = b.len();
    let mut d = CMat::zeros(m1 * m2, m1);
    for p in 0..m1 {
        for (q, &bq) in b.iter().enumerate() {
            d[(p * m2 + q, p)] = bq;
        }
    }
    d
}

/// `a ⊗ I_{m2}`: an `(|a|·m2) × m2` stack of scaled identity blocks.
pub fn lift_right(a: &[C64], m2: usize) -> CMat {
    let m1 = a.len();
    let mut d = CMat::zeros(m1 * m2, m2);
    for (p, &ap) in a.iter().enumerate() {
        for q in 0..m2 {
            d[(p * m2 + q, q)] = ap;
        }
    }
    d
}

/// Congruence transform `Dᴴ V D` of a Hermitian `V`. The result is
/// symmetrized so it is exactly Hermitian.
pub fn congruence(d: &CMat, v: &CMat) -> Result<CMat> {
    if !v.is_square() || v.rows() != d.rows() {
        return Err(Error::dim(
            "congruence",
            format!("D is {}x{}, V is {}x{}", d.rows(), d.cols(), v.rows(), v.cols()),
        ));
    }
    let vd = v.matmul(d)?;
    let mut out = d.adjoint_matmul(&vd)?;
    out.symmetrize();
    Ok(out)
}

/// `ΔᴴVΔ` for `Δ = I_{m1} ⊗ b`, computed without forming `Δ`.
pub fn lifted_cov_left(v: &CMat, b: &[C64], m1: usize) -> Result<CMat> {
    let m2 = b.len();
    check_lift(v, m1 * m2, "lifted_cov_left")?;
    let vd = CMat::from_fn(v.rows(), m1, |r, p| dotu(&v.row(r)[p * m2..(p + 1) * m2], b));
    let mut out = CMat::from_fn(m1, m1, |p, p2| {
        b.iter().enumerate().map(|(q, bq)| bq.conj() * vd[(p * m2 + q, p2)]).sum()
    });
    out.symmetrize();
    Ok(out)
}

/// `ΔᴴVΔ` for `Δ = a ⊗ I_{m2}`, computed without forming `Δ`.
pub fn lifted_cov_right(v: &CMat, a: &[C64], m2: usize) -> Result<CMat> {
    let m1 = a.len();
    check_lift(v, m1 * m2, "lifted_cov_right")?;
    let vd = CMat::from_fn(v.rows(), m2, |r, q| {
        let row = v.row(r);
        a.iter().enumerate().map(|(p, ap)| row[p * m2 + q] * ap).sum()
    });
    let mut out = CMat::from_fn(m2, m2, |q, q2| {
        a.iter().enumerate().map(|(p, ap)| ap.conj() * vd[(p * m2 + q, q2)]).sum()
    });
    out.symmetrize();
    Ok(out)
}

fn check_lift(v: &CMat, m: usize, what: &'static str) -> Result<()> {
    if !v.is_square() || v.rows() != m {
        return Err(Error::dim(what, format!("V is {}x{}, lift has {m} rows", v.rows(), v.cols())));
    }
    Ok(())
}

fn loaded(a: &CMat, loading: f64) -> CMat {
    let mut m = a.clone();
    if loading > 0.0 {
        let k = m.rows();
        let shift = loading * m.trace().re / k as f64;
        for i in 0..k {
            m[(i, i)] += shift;
        }
    }
    m
}

fn pivot_floor(a: &CMat) -> f64 {
    a.max_abs() * a.rows() as f64 * f64::EPSILON
}

/// In-place Cholesky factorization `A = L Lᴴ` (lower triangle). Returns
/// `false` if a pivot is not safely positive.
fn cholesky_in_place(a: &mut CMat) -> bool {
    let n = a.rows();
    let floor = pivot_floor(a);
    for j in 0..n {
        let (done, rest) = a.data.split_at_mut((j + 1) * n);
        let rj = &mut done[j * n..];
        let d = rj[j].re - rj[..j].iter().map(|z| z.norm_sqr()).sum::<f64>();
        if !(d > floor) {
            return false;
        }
        let d = d.sqrt();
        rj[j] = C64::new(d, 0.0);
        let rj = &rj[..j];
        for ri in rest.chunks_exact_mut(n) {
            let s = ri[j] - dotc(rj, &ri[..j]);
            ri[j] = s / d;
        }
    }
    true
}

fn cholesky_solve(l: &CMat, b: &[C64]) -> CVec {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        let s = y[i] - dotu(&l.row(i)[..i], &y[..i]);
        y[i] = s / l[(i, i)].re;
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)].conj() * y[k];
        }
        y[i] = s / l[(i, i)].re;
    }
    y
}

/// LU factorization with partial pivoting, packed in place.
pub struct Lu {
    lu: CMat,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &CMat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dim("lu", format!("{}x{} is not square", a.rows(), a.cols())));
        }
        let n = a.rows();
        let floor = pivot_floor(a);
        let floor_sq = floor * floor;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|r| (r, lu.data[r * n + k].norm_sqr()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if !(best > floor_sq) {
                return Err(Error::singular(format!("zero pivot in column {k} of {n}x{n}")));
            }
            if p != k {
                let (upper, lower) = lu.data.split_at_mut(p * n);
                upper[k * n..(k + 1) * n].swap_with_slice(&mut lower[..n]);
                perm.swap(k, p);
            }
            let (head, tail) = lu.data.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..];
            let inv = ONE / pivot_row[k];
            for row in tail.chunks_exact_mut(n) {
                let f = row[k] * inv;
                row[k] = f;
                if f != ZERO {
                    for (x, &t) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *x -= f * t;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    /// `log |det A|` from the pivots.
    pub fn log_abs_det(&self) -> f64 {
        (0..self.lu.rows()).map(|i| self.lu[(i, i)].norm().ln()).sum()
    }

    /// Smallest over largest pivot magnitude, a cheap conditioning proxy.
    pub fn pivot_ratio(&self) -> f64 {
        let mags = (0..self.lu.rows()).map(|i| self.lu[(i, i)].norm());
        let (lo, hi) = mags.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if hi > 0.0 { lo / hi } else { 0.0 }
    }

    pub fn solve(&self, b: &[C64]) -> CVec {
        let n = self.lu.rows();
        let mut y: CVec = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = dotu(&self.lu.row(i)[..i], &y[..i]);
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s = y[i] - dotu(&row[i + 1..], &y[i + 1..]);
            y[i] = s / row[i];
        }
        y
    }
}

/// Solves a general square system `A x = b`.
pub fn lu_solve(a: &CMat, b: &[C64]) -> Result<CVec> {
    if a.rows() != b.len() {
        return Err(Error::dim("lu_solve", format!("{}x{} vs rhs {}", a.rows(), a.cols(), b.len())));
    }
    Ok(Lu::factor(a)?.solve(b))
}

/// Solves `(A + δ·tr(A)/K·I) x = b` for Hermitian `A`.
///
/// Cholesky is tried first; a Hermitian but indefinite system falls back to
/// pivoted LU. A system that is still singular after loading is an error.
pub fn hermitian_solve(a: &CMat, b: &[C64], loading: f64) -> Result<CVec> {
    if !a.is_square() || a.rows() != b.len() {
        return Err(Error::dim(
            "hermitian_solve",
            format!("{}x{} vs rhs {}", a.rows(), a.cols(), b.len()),
        ));
    }
    if loading < 0.0 || !loading.is_finite() {
        return Err(Error::Contract(format!("diagonal loading must be >= 0, got {loading}")));
    }
    let mut m = loaded(a, loading);
    if cholesky_in_place(&mut m) {
        return Ok(cholesky_solve(&m, b));
    }
    lu_solve(&loaded(a, loading), b)
}

/// Column `n` of `W⁻¹`, i.e. the solution of `W x = e_n`.
pub fn solve_column(w: &CMat, n: usize) -> Result<CVec> {
    if n >= w.rows() {
        return Err(Error::Contract(format!(
            "column index {n} out of range for {}x{}",
            w.rows(),
            w.cols()
        )));
    }
    lu_solve(w, &unit(w.rows(), n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rvec(rng: &mut ChaCha8Rng, n: usize) -> CVec {
        (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    fn rmat(rng: &mut ChaCha8Rng, r: usize, cols: usize) -> CMat {
        CMat::from_fn(r, cols, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn rpd(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        let g = rmat(rng, n, n);
        let mut a = g.adjoint_matmul(&g).unwrap();
        for i in 0..n {
            a[(i, i)] += 0.5;
        }
        a
    }

    /// Naive `Dᴴ V D` with explicit triple loop, no symmetrization.
    fn naive_congruence(d: &CMat, v: &CMat) -> CMat {
        CMat::from_fn(d.cols(), d.cols(), |i, j| {
            let mut s = ZERO;
            for a in 0..d.rows() {
                for b in 0..d.rows() {
                    s += d[(a, i)].conj() * v[(a, b)] * d[(b, j)];
                }
            }
            s
        })
    }

    fn to_na(a: &CMat) -> nalgebra::DMatrix<C64> {
        nalgebra::DMatrix::from_fn(a.rows(), a.cols(), |r, c| a[(r, c)])
    }

    #[test]
    fn kron_unit_vectors() {
        assert_eq!(kron(&unit(2, 0), &unit(2, 0)), unit(4, 0));
        assert_eq!(kron(&unit(2, 1), &unit(2, 0)), unit(4, 2));
    }

    #[test]
    fn kron_unrolled() {
        let a = [c(1.0, 2.0), c(-3.0, 0.5)];
        let b = [c(0.0, 1.0), c(2.0, -1.0)];
        assert_eq!(kron(&a, &b), vec![a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]);
    }

    #[test]
    fn lift_left_examples() {
        assert_eq!(lift_left(&[ONE], 3), CMat::identity(3));
        let (b1, b2) = (c(1.0, 1.0), c(2.0, 0.0));
        let expected = CMat::from_rows(&[[b1, ZERO], [b2, ZERO], [ZERO, b1], [ZERO, b2]]);
        assert_eq!(lift_left(&[b1, b2], 2), expected);
    }

    #[test]
    fn lift_right_examples() {
        assert_eq!(lift_right(&[ONE], 3), CMat::identity(3));
        let (a1, a2) = (c(0.5, -1.0), c(3.0, 0.0));
        let expected = CMat::from_rows(&[[a1, ZERO], [ZERO, a1], [a2, ZERO], [ZERO, a2]]);
        assert_eq!(lift_right(&[a1, a2], 2), expected);
    }

    #[test]
    fn congruence_identity_and_block_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = rpd(&mut rng, 4);
        let out = congruence(&CMat::identity(4), &v).unwrap();
        assert!(out.sub(&v).unwrap().max_abs() <= 1e-15 * v.max_abs());

        let b = rvec(&mut rng, 3);
        let out = congruence(&lift_left(&b, 2), &CMat::identity(6)).unwrap();
        let nb2 = norm(&b).powi(2);
        let expected = CMat::from_diag(&[c(nb2, 0.0), c(nb2, 0.0)]);
        assert!(out.sub(&expected).unwrap().max_abs() <= 1e-14);
    }

    #[test]
    fn congruence_matches_naive_triple_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let m = rng.random_range(1..8);
            let k = rng.random_range(1..6);
            let d = rmat(&mut rng, m, k);
            let v = rpd(&mut rng, m);
            let fast = congruence(&d, &v).unwrap();
            let slow = naive_congruence(&d, &v);
            let rel = fast.sub(&slow).unwrap().frobenius_norm() / slow.frobenius_norm();
            assert!(rel <= 1e-13, "rel {rel}");
            assert!(fast.is_hermitian(1e-12));
        }
    }

    #[test]
    fn structured_lifts_match_dense_congruence() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let m1 = rng.random_range(1..5);
            let m2 = rng.random_range(1..5);
            let v = rpd(&mut rng, m1 * m2);
            let a = rvec(&mut rng, m1);
            let b = rvec(&mut rng, m2);
            let pairs = [
                (lifted_cov_left(&v, &b, m1).unwrap(), congruence(&lift_left(&b, m1), &v).unwrap()),
                (lifted_cov_right(&v, &a, m2).unwrap(), congruence(&lift_right(&a, m2), &v).unwrap()),
            ];
            for (fast, dense) in pairs {
                assert!(fast.sub(&dense).unwrap().max_abs() <= 1e-13 * dense.max_abs());
            }
        }
        assert!(lifted_cov_left(&CMat::identity(5), &[ONE, ONE], 2).is_err());
    }

    #[test]
    fn congruence_rejects_mismatch() {
        let err = congruence(&CMat::zeros(3, 2), &CMat::identity(4)).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn hermitian_solve_examples() {
        let x = hermitian_solve(&CMat::identity(3), &unit(3, 0), 0.0).unwrap();
        assert_eq!(x, unit(3, 0));
        let a = CMat::from_diag(&[c(2.0, 0.0), c(4.0, 0.0)]);
        let x = hermitian_solve(&a, &[c(2.0, 0.0), c(4.0, 0.0)], 0.0).unwrap();
        assert!((x[0] - ONE).norm() < 1e-15 && (x[1] - ONE).norm() < 1e-15);
    }

    #[test]
    fn hermitian_solve_matches_explicit_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = rpd(&mut rng, 4);
            let b = rvec(&mut rng, 4);
            let x = hermitian_solve(&a, &b, 0.0).unwrap();
            let inv = to_na(&a).try_inverse().unwrap();
            let oracle = &inv * nalgebra::DVector::from_column_slice(&b);
            for (xi, oi) in x.iter().zip(oracle.iter()) {
                assert!((xi - oi).norm() <= 1e-10 * oi.norm().max(1.0));
            }
        }
    }

    #[test]
    fn hermitian_solve_loading_is_trace_scaled() {
        let a = CMat::from_diag(&[c(1.0, 0.0), c(3.0, 0.0)]);
        let x = hermitian_solve(&a, &[ONE, ONE], 0.5).unwrap();
        // shift = 0.5 * 4 / 2 = 1
        assert!((x[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((x[1] - c(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn hermitian_solve_singular_is_an_error() {
        let a = CMat::from_diag(&[ONE, ZERO]);
        let err = hermitian_solve(&a, &[ONE, ONE], 0.0).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { .. }));
        assert!(hermitian_solve(&CMat::zeros(2, 2), &[ONE, ONE], 1e-9).is_err());
        // loading rescues a rank-deficient PSD matrix
        assert!(hermitian_solve(&a, &[ONE, ONE], 1e-9).is_ok());
    }

    #[test]
    fn hermitian_solve_indefinite_falls_back() {
        let a = CMat::from_diag(&[c(2.0, 0.0), c(-1.0, 0.0)]);
        let x = hermitian_solve(&a, &[ONE, ONE], 0.0).unwrap();
        assert!((x[0] - c(0.5, 0.0)).norm() < 1e-15 && (x[1] + ONE).norm() < 1e-15);
    }

    #[test]
    fn solve_column_examples() {
        assert_eq!(solve_column(&CMat::identity(3), 2).unwrap(), unit(3, 2));
        let mut w = CMat::identity(3);
        w.scale(2.0);
        let x = solve_column(&w, 0).unwrap();
        assert_eq!(x, vec![c(0.5, 0.0), ZERO, ZERO]);
        assert!(matches!(solve_column(&CMat::zeros(2, 2), 0), Err(Error::SingularMatrix { .. })));
        assert!(solve_column(&w, 3).is_err());
    }

    #[test]
    fn solve_column_matches_explicit_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let mut w = rmat(&mut rng, 4, 4);
            for i in 0..4 {
                w[(i, i)] += 3.0;
            }
            let inv = to_na(&w).try_inverse().unwrap();
            for n in 0..4 {
                let x = solve_column(&w, n).unwrap();
                for r in 0..4 {
                    assert!((x[r] - inv[(r, n)]).norm() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn rank_one_update_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut a = rpd(&mut rng, 3);
        let x = rvec(&mut rng, 3);
        let expected = CMat::from_fn(3, 3, |r, cc| a[(r, cc)] * 0.7 + x[r] * x[cc].conj() * 0.3);
        rank_one_update(&mut a, 0.7, 0.3, &x);
        assert!(a.sub(&expected).unwrap().max_abs() < 1e-15);
        assert_eq!(a.hermitian_defect(), 0.0);
    }

    fn cvec_strategy(len: usize) -> impl Strategy<Value = CVec> {
        prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0).prop_map(|(r, i)| c(r, i)), len)
    }

    fn kron_case() -> impl Strategy<Value = (CVec, CVec)> {
        (1usize..7, 1usize..7).prop_flat_map(|(m1, m2)| (cvec_strategy(m1), cvec_strategy(m2)))
    }

    proptest! {
        #[test]
        fn kronecker_lifting_consistency((a, b) in kron_case()) {
            let k = kron(&a, &b);
            let left = lift_left(&b, a.len()).matvec(&a).unwrap();
            let right = lift_right(&a, b.len()).matvec(&b).unwrap();
            for i in 0..k.len() {
                prop_assert!((k[i] - left[i]).norm() <= 1e-15);
                prop_assert!((k[i] - right[i]).norm() <= 1e-15);
            }
        }

        #[test]
        fn congruence_preserves_psd(seed in any::<u64>(), m in 1usize..8, k in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = rmat(&mut rng, m, m);
            let v = g.adjoint_matmul(&g).unwrap();
            let d = rmat(&mut rng, m, k);
            let out = congruence(&d, &v).unwrap();
            let tr = out.trace().re;
            let eig = nalgebra::linalg::SymmetricEigen::new(to_na(&out)).eigenvalues;
            for e in eig.iter() {
                prop_assert!(*e >= -1e-10 * tr.max(1e-300));
            }
        }

        #[test]
        fn hermitian_solve_residual(seed in any::<u64>(), n in 2usize..13) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = rpd(&mut rng, n);
            let b = rvec(&mut rng, n);
            let x = hermitian_solve(&a, &b, DEFAULT_LOADING).unwrap();
            let al = loaded(&a, DEFAULT_LOADING);
            let ax = al.matvec(&x).unwrap();
            let res: CVec = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
            prop_assert!(norm(&res) <= 1e-10 * norm(&b));
        }
    }
}
