//! The one-bit likelihood objective, its FFT-structured gradient, the EM
//! surrogate and the spectral constants of the problem.
//!
//! With `θ = (Re s, Im s)`, `y = (Re q, Im q)` and `A` the real embedding of
//! the block channel operator, the objective is
//! `f(θ) = −Σ_i log Φ(y_i (Aθ)_i / σ)`. Nothing here materializes `A`: every
//! operator application goes through per-subcarrier products and FFTs.

use crate::error::{Error, Result};
use crate::fft::UnitaryDft;
use crate::model::{noiseless_receive, MultipathChannel, OneBitObservation};
use crate::scalar::{real_dot, Complex, Real};
use crate::stats::{log_cdf, mills};
use num_traits::Float;
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty<S> {
    /// `h(θ) = λ‖θ‖²/2`
    Gmap { lambda: S },
    /// Indicator of `[−U, U]` per real dimension.
    Box { bound: S },
}

impl<S: Real> Penalty<S> {
    /// Ridge weight matched to the QAM prior variance, `λ = 3/((2D)² − 1)`.
    pub fn gmap(d: usize) -> Self {
        let l = (2 * d) as f64;
        Penalty::Gmap {
            lambda: S::lit(3.0 / (l * l - 1.0)),
        }
    }

    /// Box with `U = 2D − 1`.
    pub fn boxed(d: usize) -> Self {
        Penalty::Box {
            bound: S::of_usize(2 * d - 1),
        }
    }

    /// `h(s)`, or `None` where it is +∞.
    pub fn eval(&self, s: &[Complex<S>]) -> Option<S> {
        match *self {
            Penalty::Gmap { lambda } => Some(lambda * crate::scalar::norm_sqr(s) / S::lit(2.0)),
            Penalty::Box { bound } => s
                .iter()
                .all(|v| Float::abs(v.re) <= bound && Float::abs(v.im) <= bound)
                .then(S::zero),
        }
    }

    /// `prox_{t·h}(x)` for one complex entry.
    #[inline]
    pub fn prox(&self, x: Complex<S>, t: S) -> Complex<S> {
        match *self {
            Penalty::Gmap { lambda } => x.unscale(S::one() + t * lambda),
            Penalty::Box { bound } => Complex::new(clip(x.re, bound), clip(x.im, bound)),
        }
    }

    pub fn prox_vec(&self, x: &mut [Complex<S>], t: S) {
        for v in x.iter_mut() {
            *v = self.prox(*v, t);
        }
    }

    /// Squared distance from zero to `g + ∂h(s)` for one complex entry.
    #[inline]
    pub fn certificate_sq(&self, g: Complex<S>, s: Complex<S>) -> S {
        match *self {
            Penalty::Gmap { lambda } => (g + s.scale(lambda)).norm_sqr(),
            Penalty::Box { bound } => {
                let a = box_residual(g.re, s.re, bound);
                let b = box_residual(g.im, s.im, bound);
                a * a + b * b
            }
        }
    }
}

#[inline]
pub(crate) fn clip<S: Real>(x: S, bound: S) -> S {
    x.max(-bound).min(bound)
}

/// Distance from zero to `g + N_[−U,U](θ)` in one real dimension: `|g|`
/// unless `θ` sits on the boundary with `g` pointing out of the box.
#[inline]
pub fn box_residual<S: Real>(g: S, theta: S, bound: S) -> S {
    if g * theta >= S::zero() || Float::abs(theta) < bound {
        Float::abs(g)
    } else {
        S::zero()
    }
}

/// Spectral constants of `B = Diag(y)A/σ`, computed per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInfo<S> {
    pub sigma_max_b: S,
    pub sigma_min_b: S,
    /// `(σ_max(Ȟ_w), σ_min(Ȟ_w))`
    pub per_subcarrier: Vec<(S, S)>,
    /// Gradient Lipschitz constant `σ_max(B)²`.
    pub lipschitz: S,
}

impl<S: Real> SpectralInfo<S> {
    /// `max_w σ_max(Ȟ_w)`
    pub fn max_channel_gain(&self) -> S {
        self.per_subcarrier
            .iter()
            .map(|p| p.0)
            .fold(S::zero(), |a, b| a.max(b))
    }
}

/// One detection problem.
#[derive(Debug)]
pub struct ProblemInstance<S: Real> {
    channel: MultipathChannel<S>,
    obs: OneBitObservation<S>,
    penalty: Penalty<S>,
    d: usize,
    dft: UnitaryDft<S>,
    spectral: OnceLock<SpectralInfo<S>>,
}

impl<S: Real> Clone for ProblemInstance<S> {
    fn clone(&self) -> Self {
        Self {
            channel: self.channel.clone(),
            obs: self.obs.clone(),
            penalty: self.penalty,
            d: self.d,
            dft: UnitaryDft::new(self.dft.len()),
            spectral: self.spectral.clone(),
        }
    }
}

impl<S: Real> ProblemInstance<S> {
    pub fn new(channel: MultipathChannel<S>, obs: OneBitObservation<S>, penalty: Penalty<S>, d: usize) -> Result<Self> {
        let (m, w) = (channel.antennas(), channel.subcarriers());
        if obs.q.len() != m * w {
            return Err(Error::Shape(format!(
                "observation has {} entries, channel expects M·W = {}",
                obs.q.len(),
                m * w
            )));
        }
        if obs.sigma.is_nan() || obs.sigma <= S::zero() {
            return Err(Error::Config(format!("noise std must be positive, got {}", obs.sigma)));
        }
        if d == 0 {
            return Err(Error::Config("D must be positive".into()));
        }
        Ok(Self {
            channel,
            obs,
            penalty,
            d,
            dft: UnitaryDft::new(w),
            spectral: OnceLock::new(),
        })
    }

    /// Same data under a different regularizer.
    pub fn with_penalty(&self, penalty: Penalty<S>) -> Self {
        Self {
            penalty,
            ..self.clone()
        }
    }

    /// Same data with a different assumed noise std.
    pub fn with_sigma(&self, sigma: S) -> Self {
        let mut obs = self.obs.clone();
        obs.sigma = sigma;
        Self {
            obs,
            spectral: OnceLock::new(),
            ..self.clone()
        }
    }

    pub fn antennas(&self) -> usize {
        self.channel.antennas()
    }

    pub fn users(&self) -> usize {
        self.channel.users()
    }

    pub fn subcarriers(&self) -> usize {
        self.channel.subcarriers()
    }

    /// Length of the complex unknown, `N·W`.
    pub fn dim(&self) -> usize {
        self.users() * self.subcarriers()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sigma(&self) -> S {
        self.obs.sigma
    }

    pub fn penalty(&self) -> Penalty<S> {
        self.penalty
    }

    pub fn channel(&self) -> &MultipathChannel<S> {
        &self.channel
    }

    pub fn observation(&self) -> &OneBitObservation<S> {
        &self.obs
    }

    pub fn dft(&self) -> &UnitaryDft<S> {
        &self.dft
    }

    /// FFT/IFFT calls issued on this instance so far.
    pub fn transforms(&self) -> usize {
        self.dft.transforms()
    }

    pub fn zeros(&self) -> Vec<Complex<S>> {
        vec![Complex::new(S::zero(), S::zero()); self.dim()]
    }

    /// `z_m = Fᴴ(Σ_n D_{m,n} s_n)`; `M` inverse transforms.
    pub fn model_output(&self, s: &[Complex<S>]) -> Vec<Complex<S>> {
        noiseless_receive(&self.channel, s, &self.dft)
    }

    fn f_from_output(&self, z: &[Complex<S>]) -> S {
        let inv = S::one() / self.obs.sigma;
        let mut acc = S::zero();
        for (zi, qi) in z.iter().zip(&self.obs.q) {
            acc = acc - log_cdf(qi.re * zi.re * inv) - log_cdf(qi.im * zi.im * inv);
        }
        acc
    }

    /// `ζ = y ⊙ ψ(y ⊙ z/σ) · scale`, componentwise on Re and Im.
    fn weighted_mills(&self, z: &[Complex<S>], scale: S) -> Vec<Complex<S>> {
        let inv = S::one() / self.obs.sigma;
        z.iter()
            .zip(&self.obs.q)
            .map(|(zi, qi)| {
                Complex::new(
                    scale * qi.re * mills(qi.re * zi.re * inv),
                    scale * qi.im * mills(qi.im * zi.im * inv),
                )
            })
            .collect()
    }

    /// `x_n = Σ_m D_{m,n}ᴴ (F v_m)`; `M` forward transforms. Consumes `v`.
    fn adjoint(&self, mut v: Vec<Complex<S>>) -> Vec<Complex<S>> {
        let w = self.subcarriers();
        for row in v.chunks_mut(w) {
            self.dft.forward(row);
        }
        self.adjoint_freq(&v)
    }

    /// Per-subcarrier `Ȟ_wᴴ ř_w` from frequency-domain data `v[m*W + w]`.
    fn adjoint_freq(&self, v: &[Complex<S>]) -> Vec<Complex<S>> {
        let (m, n, w) = (self.antennas(), self.users(), self.subcarriers());
        let mut out = self.zeros();
        let mut rw = vec![Complex::new(S::zero(), S::zero()); m];
        let mut xw = vec![Complex::new(S::zero(), S::zero()); n];
        for wi in 0..w {
            for (mi, r) in rw.iter_mut().enumerate() {
                *r = v[mi * w + wi];
            }
            self.channel.subcarrier(wi).adjoint_mul_vec_into(&rw, &mut xw);
            for (ni, x) in xw.iter().enumerate() {
                out[ni * w + wi] = *x;
            }
        }
        out
    }

    /// `f(s)`; `M` transforms.
    pub fn eval_f(&self, s: &[Complex<S>]) -> S {
        self.f_from_output(&self.model_output(s))
    }

    /// `∇f(s)` as a complex vector whose real/imaginary parts are the
    /// partial derivatives w.r.t. `Re s`/`Im s`; `2M` transforms.
    pub fn grad_f(&self, s: &[Complex<S>]) -> Vec<Complex<S>> {
        self.eval_and_grad(s).1
    }

    /// `(f(s), ∇f(s))` sharing one forward pass; `2M` transforms.
    pub fn eval_and_grad(&self, s: &[Complex<S>]) -> (S, Vec<Complex<S>>) {
        let z = self.model_output(s);
        let f = self.f_from_output(&z);
        let zeta = self.weighted_mills(&z, S::one() / self.obs.sigma);
        let mut g = self.adjoint(zeta);
        for v in g.iter_mut() {
            *v = -*v;
        }
        (f, g)
    }

    /// `F(s) = f(s) + h(s)`, `+∞` outside the domain of `h`.
    pub fn objective(&self, s: &[Complex<S>]) -> S {
        match self.penalty.eval(s) {
            Some(h) => self.eval_f(s) + h,
            None => S::infinity(),
        }
    }

    /// E-step and re-encode: returns the frequency bins `r̃_m = F r_m` of the
    /// conditional mean `r_m = z_m + scale·y⊙ψ(y⊙z_m/σ)` (antenna-major) and
    /// `f(s)`. `2M` transforms. The EM update uses `scale = σ`.
    pub fn conditional_mean(&self, s: &[Complex<S>], scale: S, with_f: bool) -> (Vec<Complex<S>>, Option<S>) {
        let z = self.model_output(s);
        let f = with_f.then(|| self.f_from_output(&z));
        let zeta = self.weighted_mills(&z, scale);
        let mut r: Vec<Complex<S>> = z.iter().zip(&zeta).map(|(a, b)| a + b).collect();
        let w = self.subcarriers();
        for row in r.chunks_mut(w) {
            self.dft.forward(row);
        }
        (r, f)
    }

    /// `‖B d‖² = Σ_w ‖Ȟ_w ď_w‖² / σ²`.
    pub fn b_norm_sqr(&self, d: &[Complex<S>]) -> S {
        let (n, w) = (self.users(), self.subcarriers());
        let mut acc = S::zero();
        let mut dw = vec![Complex::new(S::zero(), S::zero()); n];
        for wi in 0..w {
            for (ni, v) in dw.iter_mut().enumerate() {
                *v = d[ni * w + wi];
            }
            acc += crate::scalar::norm_sqr(&self.channel.subcarrier(wi).mul_vec(&dw));
        }
        acc / (self.obs.sigma * self.obs.sigma)
    }

    /// `g(θ|θ′) − f(θ)` for the EM surrogate
    /// `g(θ|θ′) = f(θ′) + ⟨∇f(θ′), θ−θ′⟩ + ‖B(θ−θ′)‖²/2`.
    pub fn surrogate_gap(&self, s: &[Complex<S>], anchor: &[Complex<S>]) -> S {
        let (f_anchor, g) = self.eval_and_grad(anchor);
        let diff: Vec<Complex<S>> = s.iter().zip(anchor).map(|(a, b)| a - b).collect();
        f_anchor + real_dot(&g, &diff) + self.b_norm_sqr(&diff) / S::lit(2.0) - self.eval_f(s)
    }

    /// Per-subcarrier SVDs, computed once per instance.
    pub fn spectral_info(&self) -> &SpectralInfo<S> {
        self.spectral.get_or_init(|| {
            let per: Vec<(S, S)> = self
                .channel
                .subcarrier_channels()
                .iter()
                .map(|h| {
                    let sv = h.singular_values();
                    (sv[0], *sv.last().expect("N ≥ 1"))
                })
                .collect();
            let smax = per.iter().map(|p| p.0).fold(S::zero(), |a, b| a.max(b));
            let smin = per.iter().map(|p| p.1).fold(S::infinity(), |a, b| a.min(b));
            let sigma = self.obs.sigma;
            SpectralInfo {
                sigma_max_b: smax / sigma,
                sigma_min_b: smin / sigma,
                per_subcarrier: per,
                lipschitz: (smax / sigma) * (smax / sigma),
            }
        })
    }

    /// Gathers `š_w` for every subcarrier from a user-major vector.
    pub fn split_subcarriers(&self, s: &[Complex<S>]) -> Vec<Vec<Complex<S>>> {
        let (n, w) = (self.users(), self.subcarriers());
        (0..w).map(|wi| (0..n).map(|ni| s[ni * w + wi]).collect()).collect()
    }

    /// Gathers `ř_w` for every subcarrier from antenna-major frequency bins.
    pub fn split_bins(&self, r: &[Complex<S>]) -> Vec<Vec<Complex<S>>> {
        let (m, w) = (self.antennas(), self.subcarriers());
        (0..w).map(|wi| (0..m).map(|mi| r[mi * w + wi]).collect()).collect()
    }

    /// Inverse of [`ProblemInstance::split_subcarriers`].
    pub fn merge_subcarriers(&self, parts: &[Vec<Complex<S>>]) -> Vec<Complex<S>> {
        let w = self.subcarriers();
        let mut s = self.zeros();
        for (wi, part) in parts.iter().enumerate() {
            for (ni, v) in part.iter().enumerate() {
                s[ni * w + wi] = *v;
            }
        }
        s
    }
}
