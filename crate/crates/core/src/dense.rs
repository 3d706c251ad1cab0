//! Explicit dense matrices for small instances: the block channel operator
//! built from circulant blocks and an explicit DFT matrix, its real
//! embedding `A`, and `B = Diag(y)A/σ`. Used as an independent reference
//! for the FFT-structured code paths and for bound checks needing `σ_min⁺(B)`
//! and the row-space projector of `B`.

use crate::linalg::{svd, CMat, RMat, Svd};
use crate::model::MultipathChannel;
use crate::objective::ProblemInstance;
use crate::scalar::{Complex, Real};
use crate::stats::{log_cdf, mills};

/// Relative cutoff below which singular values of `B` count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Unitary DFT matrix, `F[k][t] = e^{−2πjkt/W}/√W`.
pub fn dft_matrix<S: Real>(w: usize) -> CMat<S> {
    let scale = S::one() / S::of_usize(w).sqrt();
    CMat::from_fn(w, w, |k, t| {
        let angle = -2.0 * std::f64::consts::PI * ((k * t) % w) as f64 / w as f64;
        Complex::new(S::lit(angle.cos()), S::lit(angle.sin())).scale(scale)
    })
}

/// Circulant matrix with first column `h` (zero-padded to `w`).
pub fn circulant<S: Real>(h: &[Complex<S>], w: usize) -> CMat<S> {
    CMat::from_fn(w, w, |i, j| {
        let idx = (i + w - j) % w;
        h.get(idx).copied().unwrap_or(Complex::new(S::zero(), S::zero()))
    })
}

fn matmul<S: Real>(a: &CMat<S>, b: &CMat<S>) -> CMat<S> {
    assert_eq!(a.cols(), b.rows());
    CMat::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum())
}

fn adjoint<S: Real>(a: &CMat<S>) -> CMat<S> {
    CMat::from_fn(a.cols(), a.rows(), |i, j| a.get(j, i).conj())
}

/// Block `(m, n)` of the channel operator: `circulant(h_{m,n})·Fᴴ`.
///
/// Channels known only through their subcarrier gains use `Fᴴ D_{m,n}`.
pub fn block<S: Real>(ch: &MultipathChannel<S>, m: usize, n: usize) -> CMat<S> {
    let w = ch.subcarriers();
    let fh = adjoint(&dft_matrix::<S>(w));
    if ch.tap_len() > 0 {
        let h: Vec<_> = (0..ch.tap_len()).map(|l| ch.tap(l, m, n)).collect();
        matmul(&circulant(&h, w), &fh)
    } else {
        CMat::from_fn(w, w, |t, k| fh.get(t, k) * ch.gain(k, m, n))
    }
}

/// Full `MW × NW` operator with row `m*W + t` and column `n*W + w`.
pub fn block_operator<S: Real>(ch: &MultipathChannel<S>) -> CMat<S> {
    let (m, n, w) = (ch.antennas(), ch.users(), ch.subcarriers());
    let mut out = CMat::zeros(m * w, n * w);
    for mi in 0..m {
        for ni in 0..n {
            let blk = block(ch, mi, ni);
            for t in 0..w {
                for k in 0..w {
                    out.set(mi * w + t, ni * w + k, blk.get(t, k));
                }
            }
        }
    }
    out
}

/// `θ = (Re s, Im s)`
pub fn theta_of<S: Real>(s: &[Complex<S>]) -> Vec<S> {
    s.iter().map(|v| v.re).chain(s.iter().map(|v| v.im)).collect()
}

/// Inverse of [`theta_of`].
pub fn complex_of<S: Real>(theta: &[S]) -> Vec<Complex<S>> {
    let half = theta.len() / 2;
    (0..half).map(|i| Complex::new(theta[i], theta[i + half])).collect()
}

/// Dense form of one problem instance.
#[derive(Debug, Clone)]
pub struct DenseProblem<S: Real> {
    pub operator: CMat<S>,
    pub a: RMat<S>,
    pub b: RMat<S>,
    pub y: Vec<S>,
    pub sigma: S,
    svd: Svd<S>,
}

impl<S: Real> DenseProblem<S> {
    pub fn new(inst: &ProblemInstance<S>) -> Self {
        let operator = block_operator(inst.channel());
        let a = operator.real_embedding();
        let q = &inst.observation().q;
        let y: Vec<S> = q.iter().map(|v| v.re).chain(q.iter().map(|v| v.im)).collect();
        let sigma = inst.sigma();
        let b = RMat::from_fn(a.rows(), a.cols(), |i, j| y[i] * a.get(i, j) / sigma);
        let svd = svd(&b);
        Self {
            operator,
            a,
            b,
            y,
            sigma,
            svd,
        }
    }

    /// `−Σ log Φ(Bθ)`
    pub fn eval_f(&self, theta: &[S]) -> S {
        self.b.mul_vec(theta).into_iter().map(|u| -log_cdf(u)).sum()
    }

    /// `−Bᵀψ(Bθ)`
    pub fn grad_f(&self, theta: &[S]) -> Vec<S> {
        let psi: Vec<S> = self.b.mul_vec(theta).into_iter().map(|u| -mills(u)).collect();
        self.b.transpose_mul_vec(&psi)
    }

    pub fn sigma_max(&self) -> S {
        self.svd.sigma[0]
    }

    pub fn sigma_min(&self) -> S {
        *self.svd.sigma.last().expect("non-empty")
    }

    /// Smallest singular value above the rank cutoff.
    pub fn sigma_min_positive(&self) -> S {
        self.svd.min_positive(S::lit(RANK_TOL)).unwrap_or_else(S::zero)
    }

    /// `P = Bᵀ(BBᵀ)†B`, the projector onto the row space of `B`.
    pub fn row_space_projector(&self) -> RMat<S> {
        self.svd.row_space_projector(S::lit(RANK_TOL))
    }

    /// `‖Bθ‖`
    pub fn b_norm(&self, theta: &[S]) -> S {
        self.b.mul_vec(theta).into_iter().map(|v| v * v).sum::<S>().sqrt()
    }
}
