//! Small dense linear algebra: complex matrices for the per-subcarrier
//! `M×N` channels, a one-sided Jacobi SVD, and a Hermitian Cholesky solver.

use crate::scalar::{Complex, Real};
use num_traits::Float;

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat<S> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<S>>,
}

impl<S: Real> CMat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(S::zero(), S::zero()); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<S>>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<S>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex::new(S::one(), S::zero())
            } else {
                Complex::new(S::zero(), S::zero())
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex<S>] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<S> {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<S>) {
        self.data[i * self.cols + j] = v;
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[Complex<S>], y: &mut [Complex<S>]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn mul_vec(&self, x: &[Complex<S>]) -> Vec<Complex<S>> {
        let mut y = vec![Complex::new(S::zero(), S::zero()); self.rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y = Aᴴ x`
    pub fn adjoint_mul_vec_into(&self, x: &[Complex<S>], y: &mut [Complex<S>]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        for v in y.iter_mut() {
            *v = Complex::new(S::zero(), S::zero());
        }
        for (i, xi) in x.iter().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (yj, a) in y.iter_mut().zip(row) {
                *yj += a.conj() * xi;
            }
        }
    }

    pub fn adjoint_mul_vec(&self, x: &[Complex<S>]) -> Vec<Complex<S>> {
        let mut y = vec![Complex::new(S::zero(), S::zero()); self.cols];
        self.adjoint_mul_vec_into(x, &mut y);
        y
    }

    /// Gram matrix `AᴴA`.
    pub fn gram(&self) -> CMat<S> {
        let n = self.cols;
        let mut g = CMat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: Complex<S> = (0..self.rows)
                    .map(|r| self.get(r, i).conj() * self.get(r, j))
                    .sum();
                g.set(i, j, v);
                g.set(j, i, v.conj());
            }
        }
        g
    }

    /// Real embedding `[[Re A, −Im A], [Im A, Re A]]`.
    pub fn real_embedding(&self) -> RMat<S> {
        let (m, n) = (self.rows, self.cols);
        let mut r = RMat::zeros(2 * m, 2 * n);
        for i in 0..m {
            for j in 0..n {
                let a = self.get(i, j);
                r.set(i, j, a.re);
                r.set(i, j + n, -a.im);
                r.set(i + m, j, a.im);
                r.set(i + m, j + n, a.re);
            }
        }
        r
    }

    /// Inverse of [`CMat::real_embedding`]; reads the left block column.
    pub fn from_real_embedding(r: &RMat<S>) -> Self {
        let (m, n) = (r.rows() / 2, r.cols() / 2);
        Self::from_fn(m, n, |i, j| Complex::new(r.get(i, j), r.get(i + m, j)))
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> Vec<S> {
        // Each singular value of A appears twice in its real embedding.
        let sv = svd(&self.real_embedding()).sigma;
        sv.into_iter().step_by(2).collect()
    }

    /// Moore–Penrose pseudo-inverse; singular values below `rel_tol·σ_max`
    /// are treated as zero.
    pub fn pinv(&self, rel_tol: S) -> CMat<S> {
        CMat::from_real_embedding(&svd(&self.real_embedding()).pinv(rel_tol))
    }
}

/// Row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RMat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Real> RMat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| *a * *b)
                    .sum()
            })
            .collect()
    }

    pub fn transpose_mul_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![S::zero(); self.cols];
        for (i, xi) in x.iter().enumerate() {
            for (j, yj) in y.iter_mut().enumerate() {
                *yj += self.get(i, j) * *xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> RMat<S> {
        RMat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &RMat<S>) -> RMat<S> {
        assert_eq!(self.cols, other.rows);
        RMat::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).map(|k| self.get(i, k) * other.get(k, j)).sum()
        })
    }

    fn column_dot(&self, p: usize, q: usize) -> S {
        (0..self.rows).map(|i| self.get(i, p) * self.get(i, q)).sum()
    }

    fn rotate_columns(&mut self, p: usize, q: usize, c: S, s: S) {
        for i in 0..self.rows {
            let a = self.get(i, p);
            let b = self.get(i, q);
            self.set(i, p, c * a - s * b);
            self.set(i, q, s * a + c * b);
        }
    }
}

/// Thin SVD `A = U diag(σ) Vᵀ` with σ sorted descending.
#[derive(Debug, Clone)]
pub struct Svd<S> {
    pub u: RMat<S>,
    pub sigma: Vec<S>,
    pub v: RMat<S>,
}

impl<S: Real> Svd<S> {
    /// Smallest singular value above `rel_tol·σ_max` (the smallest positive
    /// one, numerically).
    pub fn min_positive(&self, rel_tol: S) -> Option<S> {
        let cutoff = self.cutoff(rel_tol);
        self.sigma.iter().copied().filter(|&s| s > cutoff).last()
    }

    pub fn rank(&self, rel_tol: S) -> usize {
        let cutoff = self.cutoff(rel_tol);
        self.sigma.iter().filter(|&&s| s > cutoff).count()
    }

    fn cutoff(&self, rel_tol: S) -> S {
        self.sigma.first().copied().unwrap_or_else(S::zero) * rel_tol
    }

    /// `V Σ† Uᵀ`
    pub fn pinv(&self, rel_tol: S) -> RMat<S> {
        let r = self.rank(rel_tol);
        let (m, n) = (self.u.rows(), self.v.rows());
        RMat::from_fn(n, m, |i, j| {
            (0..r)
                .map(|k| self.v.get(i, k) * self.u.get(j, k) / self.sigma[k])
                .sum()
        })
    }

    /// Orthogonal projector onto the row space, `V₁V₁ᵀ`.
    pub fn row_space_projector(&self, rel_tol: S) -> RMat<S> {
        let r = self.rank(rel_tol);
        let n = self.v.rows();
        RMat::from_fn(n, n, |i, j| {
            (0..r).map(|k| self.v.get(i, k) * self.v.get(j, k)).sum()
        })
    }
}

/// One-sided (Hestenes) Jacobi SVD. Accurate for small singular values,
/// which the pseudo-inverse truncation relies on.
pub fn svd<S: Real>(a: &RMat<S>) -> Svd<S> {
    let n = a.cols();
    let mut u = a.clone();
    let mut v = RMat::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() });
    let tol = S::epsilon() * S::lit(4.0);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = u.column_dot(p, p);
                let beta = u.column_dot(q, q);
                let gamma = u.column_dot(p, q);
                if alpha == S::zero() || beta == S::zero() {
                    continue;
                }
                if Float::abs(gamma) <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (S::lit(2.0) * gamma);
                let sign = if zeta >= S::zero() { S::one() } else { -S::one() };
                let t = sign / (Float::abs(zeta) + (S::one() + zeta * zeta).sqrt());
                let c = S::one() / (S::one() + t * t).sqrt();
                let s = c * t;
                u.rotate_columns(p, q, c, s);
                v.rotate_columns(p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<S> = (0..n).map(|j| u.column_dot(j, j).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));
    let m = a.rows();
    let sigma: Vec<S> = order.iter().map(|&j| norms[j]).collect();
    let u_sorted = RMat::from_fn(m, n, |i, k| {
        let j = order[k];
        if norms[j] > S::zero() {
            u.get(i, j) / norms[j]
        } else {
            S::zero()
        }
    });
    let v_sorted = RMat::from_fn(n, n, |i, k| v.get(i, order[k]));
    Svd {
        u: u_sorted,
        sigma,
        v: v_sorted,
    }
}

/// Cholesky factor `A = L Lᴴ` of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<S> {
    l: CMat<S>,
}

impl<S: Real> Cholesky<S> {
    /// Returns `None` if `a` is not numerically positive definite.
    pub fn factor(a: &CMat<S>) -> Option<Self> {
        let n = a.rows();
        assert_eq!(n, a.cols(), "Cholesky needs a square matrix");
        let mut l = CMat::zeros(n, n);
        for j in 0..n {
            let mut d = a.get(j, j).re;
            for k in 0..j {
                d -= l.get(j, k).norm_sqr();
            }
            if d.is_nan() || d <= S::zero() {
                return None;
            }
            let djj = d.sqrt();
            l.set(j, j, Complex::new(djj, S::zero()));
            for i in (j + 1)..n {
                let mut v = a.get(i, j);
                for k in 0..j {
                    v -= l.get(i, k) * l.get(j, k).conj();
                }
                l.set(i, j, v.unscale(djj));
            }
        }
        Some(Self { l })
    }

    /// Solves `A x = b` in place.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, b: &mut [Complex<S>]) {
        let n = self.l.rows();
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let mut v = b[i];
            for k in 0..i {
                v -= self.l.get(i, k) * b[k];
            }
            b[i] = v.unscale(self.l.get(i, i).re);
        }
        for i in (0..n).rev() {
            let mut v = b[i];
            for k in (i + 1)..n {
                v -= self.l.get(k, i).conj() * b[k];
            }
            b[i] = v.unscale(self.l.get(i, i).re);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn svd_of_diagonal() {
        let a = RMat::from_fn(3, 2, |i, j| if i == j { [3.0, 5.0][i] } else { 0.0 });
        let s = svd(&a);
        assert!((s.sigma[0] - 5.0).abs() < 1e-14 && (s.sigma[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn svd_reconstructs() {
        let a = RMat::from_fn(5, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.7 + (i as f64) * 0.1);
        let s = svd(&a);
        for i in 0..5 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| s.u.get(i, k) * s.sigma[k] * s.v.get(j, k)).sum();
                assert!((v - a.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_deficient_pinv_truncates() {
        // Second column is twice the first.
        let h = CMat::from_vec(2, 2, vec![c(1.0, 1.0), c(2.0, 2.0), c(0.5, 0.0), c(1.0, 0.0)]);
        let p = h.pinv(1e-10);
        assert!(p.as_slice().iter().all(|v| v.re.is_finite() && v.im.is_finite()));
        // H H† H = H
        let hp = CMat::from_fn(2, 2, |i, j| (0..2).map(|k| h.get(i, k) * p.get(k, j)).sum());
        let hph = CMat::from_fn(2, 2, |i, j| (0..2).map(|k| hp.get(i, k) * h.get(k, j)).sum());
        for (a, b) in hph.as_slice().iter().zip(h.as_slice()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn cholesky_solves_hermitian_system() {
        let h = CMat::from_vec(3, 2, vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.0, 1.0), c(2.0, 0.0), c(0.7, -0.7), c(0.1, 0.4)]);
        let mut g = h.gram();
        for i in 0..2 {
            g.set(i, i, g.get(i, i) + c(0.25, 0.0));
        }
        let x_true = vec![c(1.0, -2.0), c(0.5, 0.25)];
        let mut b = g.mul_vec(&x_true);
        Cholesky::factor(&g).unwrap().solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x_true) {
            assert!((a - e).norm() < 1e-13);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = CMat::from_vec(2, 2, vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        assert!(Cholesky::factor(&a).is_none());
    }
}
