//! Detectors: zero-forcing, proximal gradient, and the EM family (exact,
//! accelerated, inexact, accelerated inexact).

mod em;
mod pg;
mod zf;

pub use em::{detect_em, inner_apg, InnerResult, MStep};
pub use pg::{detect_pg, detect_pg_box};
pub use zf::{detect_zf, detect_zf_with};

use crate::model::SymbolBlock;
use crate::objective::ProblemInstance;
use crate::scalar::{Complex, Real};
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Accuracy targets `ε_k` for inexact M-steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsSchedule {
    /// `ε_k = c·k^{−p}`
    PowerLaw { c: f64, p: f64 },
    Fixed(f64),
}

impl EpsSchedule {
    pub fn eps(&self, k: usize) -> f64 {
        match *self {
            EpsSchedule::PowerLaw { c, p } => c * (k.max(1) as f64).powf(-p),
            EpsSchedule::Fixed(e) => e,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// FISTA extrapolation on the outer iterates.
    pub accel: bool,
    pub eps_schedule: EpsSchedule,
    pub stop_rel: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub step_size_override: Option<f64>,
    /// Record `F(s^k)` at every outer iterate.
    pub track_objective: bool,
    /// Keep every outer iterate (small instances only).
    pub keep_iterates: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            accel: false,
            eps_schedule: EpsSchedule::Fixed(0.0),
            stop_rel: 5e-4,
            max_outer: 1000,
            max_inner: 500,
            step_size_override: None,
            track_objective: true,
            keep_iterates: false,
        }
    }
}

impl SolverOptions {
    /// Exact EM (GMAP closed-form M-step).
    pub fn em() -> Self {
        Self::default()
    }

    /// Accelerated exact EM.
    pub fn aem() -> Self {
        Self {
            accel: true,
            ..Self::default()
        }
    }

    /// Non-accelerated inexact EM with `ε = 2NW·10⁻⁴`.
    pub fn box_em(n: usize, w: usize) -> Self {
        Self {
            eps_schedule: EpsSchedule::Fixed(2.0 * (n * w) as f64 * 1e-4),
            ..Self::default()
        }
    }

    /// Accelerated inexact EM with `ε_k = 2NW·k^{−2.1}`.
    pub fn aiem(n: usize, w: usize) -> Self {
        Self {
            accel: true,
            eps_schedule: EpsSchedule::PowerLaw {
                c: 2.0 * (n * w) as f64,
                p: 2.1,
            },
            ..Self::default()
        }
    }

    pub fn pg() -> Self {
        Self::default()
    }
}

/// One outer iteration `k → k+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// `‖s^{k+1} − s^k‖`
    pub step_norm: f64,
    pub inner_iters: usize,
    /// `‖e^{k+1}‖`; zero for exact M-steps.
    pub certificate: f64,
    /// The target `ε_{k+1}` (zero for exact M-steps).
    pub eps: f64,
    /// Cumulative FFT/IFFT calls on the instance.
    pub fft_count: usize,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    /// `F(s^0), F(s^1), …` when tracked.
    pub objective: Vec<f64>,
    pub iterations: Vec<IterationRecord>,
    /// Outer iterations whose inner loop stopped at `max_inner` before the
    /// certificate passed.
    pub inner_limit_hits: usize,
    /// `s^0, s^1, …` when requested.
    #[serde(skip)]
    pub iterates: Vec<Vec<Complex<f64>>>,
}

impl SolverTrace {
    pub fn outer_iters(&self) -> usize {
        self.iterations.len()
    }

    pub fn total_inner_iters(&self) -> usize {
        self.iterations.iter().map(|r| r.inner_iters).sum()
    }
}

#[derive(Debug, Clone)]
pub struct DetectionResult<S> {
    pub s_soft: Vec<Complex<S>>,
    pub s_hard: SymbolBlock<S>,
    pub trace: SolverTrace,
    pub converged: bool,
}

/// FISTA momentum sequence: `t_0 = 1`, `t_{k+1} = (1 + √(1 + 4t_k²))/2`,
/// `α_{k+1} = (t_k − 1)/t_{k+1}`.
#[derive(Debug, Clone, Copy)]
pub struct Fista<S> {
    t: S,
}

impl<S: Real> Default for Fista<S> {
    fn default() -> Self {
        Self { t: S::one() }
    }
}

impl<S: Real> Fista<S> {
    /// Advances `t` and returns the next `α`.
    pub fn next_alpha(&mut self) -> S {
        let t_next = (S::one() + (S::one() + S::lit(4.0) * self.t * self.t).sqrt()) / S::lit(2.0);
        let alpha = (self.t - S::one()) / t_next;
        self.t = t_next;
        alpha
    }
}

/// `(t_k, α_k)` with `α_0 := 0`.
pub fn fista_coefficients(k: usize) -> (f64, f64) {
    let mut seq = Fista::<f64>::default();
    let mut alpha = 0.0;
    for _ in 0..k {
        alpha = seq.next_alpha();
    }
    (seq.t, alpha)
}

/// `‖χ(g, θ)‖` over real components; see [`crate::objective::box_residual`].
pub fn box_certificate<S: Real>(grad: &[S], point: &[S], bound: S) -> S {
    grad.iter()
        .zip(point)
        .map(|(&g, &t)| {
            let r = crate::objective::box_residual(g, t, bound);
            r * r
        })
        .sum::<S>()
        .sqrt()
}

/// Nearest odd level in `[−(2D−1), 2D−1]`; exact ties go to the smaller
/// magnitude, so 0 maps to +1.
pub fn hard_decision_scalar<S: Real>(x: S, d: usize) -> S {
    let top = S::of_usize(2 * d - 1);
    let u = (x - S::one()) / S::lit(2.0);
    let trunc = u.trunc();
    let k = if Float::abs(u - trunc) == S::lit(0.5) { trunc } else { u.round() };
    (S::lit(2.0) * k + S::one()).max(-top).min(top)
}

/// Per-dimension nearest-QAM decision on a user-major soft estimate.
pub fn hard_decision<S: Real>(s_soft: &[Complex<S>], d: usize, n: usize, w: usize) -> SymbolBlock<S> {
    SymbolBlock {
        d,
        n,
        w,
        s: s_soft
            .iter()
            .map(|v| Complex::new(hard_decision_scalar(v.re, d), hard_decision_scalar(v.im, d)))
            .collect(),
    }
}

pub(crate) fn finish<S: Real>(
    inst: &ProblemInstance<S>,
    s_soft: Vec<Complex<S>>,
    trace: SolverTrace,
    converged: bool,
) -> DetectionResult<S> {
    let s_hard = hard_decision(&s_soft, inst.d(), inst.users(), inst.subcarriers());
    DetectionResult {
        s_soft,
        s_hard,
        trace,
        converged,
    }
}

pub(crate) fn to_f64<S: Real>(s: &[Complex<S>]) -> Vec<Complex<f64>> {
    s.iter().map(|v| Complex::new(v.re.as_f64(), v.im.as_f64())).collect()
}

/// Relative-change stopping test; a zero-norm previous iterate defers.
pub(crate) fn should_stop(step_norm: f64, prev_norm: f64, stop_rel: f64) -> bool {
    prev_norm > 0.0 && step_norm / prev_norm <= stop_rel
}
