use super::{finish, should_stop, to_f64, DetectionResult, Fista, IterationRecord, SolverOptions, SolverTrace};
use crate::linalg::{CMat, Cholesky};
use crate::objective::{Penalty, ProblemInstance};
use crate::scalar::{dist, norm, Complex, Real};
use std::time::Instant;

/// Per-subcarrier M-step data for one instance: Gram matrices `Ȟ_wᴴȞ_w`,
/// APG step sizes `1/σ_max(Ȟ_w)²`, and for GMAP the Cholesky factors of
/// `Ȟ_wᴴȞ_w + λσ²I`. Everything here is fixed for the whole run.
#[derive(Debug, Clone)]
pub struct MStep<S: Real> {
    gram: Vec<CMat<S>>,
    steps: Vec<S>,
    chol: Option<Vec<Cholesky<S>>>,
    sigma: S,
    penalty: Penalty<S>,
}

impl<S: Real> MStep<S> {
    pub fn new(inst: &ProblemInstance<S>, step_override: Option<f64>) -> Self {
        let sigma = inst.sigma();
        let penalty = inst.penalty();
        let gram: Vec<CMat<S>> = inst.channel().subcarrier_channels().iter().map(CMat::gram).collect();
        let steps = gram.iter().map(|g| step_for(g, step_override)).collect();
        let chol = match penalty {
            Penalty::Gmap { lambda } => Some(
                gram.iter()
                    .map(|g| {
                        let mut a = g.clone();
                        let ridge = lambda * sigma * sigma;
                        for i in 0..a.rows() {
                            a.set(i, i, a.get(i, i) + Complex::new(ridge, S::zero()));
                        }
                        Cholesky::factor(&a).expect("ridge-regularized Gram matrix is positive definite")
                    })
                    .collect(),
            ),
            Penalty::Box { .. } => None,
        };
        Self {
            gram,
            steps,
            chol,
            sigma,
            penalty,
        }
    }

    pub fn grams(&self) -> &[CMat<S>] {
        &self.gram
    }

    pub fn step_sizes(&self) -> &[S] {
        &self.steps
    }

    /// `Ȟ_wᴴ ř_w` for every subcarrier from antenna-major bins `r̃`.
    pub fn rhs(&self, inst: &ProblemInstance<S>, r_freq: &[Complex<S>]) -> Vec<Vec<Complex<S>>> {
        inst.split_bins(r_freq)
            .iter()
            .zip(inst.channel().subcarrier_channels())
            .map(|(rw, h)| h.adjoint_mul_vec(rw))
            .collect()
    }

    /// Closed-form GMAP M-step `(ȞᴴȞ + λσ²I)⁻¹Ȟᴴř`.
    ///
    /// # Panics
    /// If the penalty is not GMAP.
    pub fn solve_exact(&self, rhs: &[Vec<Complex<S>>]) -> Vec<Vec<Complex<S>>> {
        let chol = self.chol.as_ref().expect("closed-form M-step needs the GMAP penalty");
        rhs.iter()
            .zip(chol)
            .map(|(b, c)| {
                let mut x = b.clone();
                c.solve_in_place(&mut x);
                x
            })
            .collect()
    }

    /// Accelerated proximal gradient on all subcarriers at once, stopping
    /// when the global certificate `Σ_w e_w²` drops to `eps²`.
    pub fn apg(&self, rhs: &[Vec<Complex<S>>], warm: Vec<Vec<Complex<S>>>, eps: S, max_inner: usize) -> InnerResult<S> {
        apg_core(&self.gram, &self.steps, rhs, warm, self.sigma, self.penalty, eps, max_inner)
    }

    /// Global certificate `(Σ_w e_w²)^{1/2}` at `s`.
    pub fn certificate(&self, rhs: &[Vec<Complex<S>>], s: &[Vec<Complex<S>>]) -> S {
        let inv_s2 = S::one() / (self.sigma * self.sigma);
        let mut acc = S::zero();
        for ((g, b), x) in self.gram.iter().zip(rhs).zip(s) {
            acc += certificate_sq(g, b, x, inv_s2, self.penalty);
        }
        acc.sqrt()
    }
}

fn step_for<S: Real>(gram: &CMat<S>, step_override: Option<f64>) -> S {
    if let Some(eta) = step_override {
        return S::lit(eta);
    }
    // σ_max(Ȟ)² = λ_max(ȞᴴȞ); a zero channel makes every point optimal.
    let lmax = gram.singular_values()[0];
    if lmax > S::zero() {
        S::one() / lmax
    } else {
        S::zero()
    }
}

/// `Σ_i (distance from 0 to σ⁻²(Gx − b) + ∂h(x))²` on one subcarrier.
fn certificate_sq<S: Real>(g: &CMat<S>, b: &[Complex<S>], x: &[Complex<S>], inv_s2: S, penalty: Penalty<S>) -> S {
    let gx = g.mul_vec(x);
    gx.iter()
        .zip(b)
        .zip(x)
        .map(|((gi, bi), xi)| penalty.certificate_sq((gi - bi).scale(inv_s2), *xi))
        .sum()
}

#[derive(Debug, Clone)]
pub struct InnerResult<S> {
    /// Per-subcarrier solutions.
    pub s: Vec<Vec<Complex<S>>>,
    /// Final global certificate.
    pub certificate: S,
    pub iters: usize,
    /// Stopped at the iteration cap before the certificate passed.
    pub hit_limit: bool,
}

#[allow(clippy::too_many_arguments)]
fn apg_core<S: Real>(
    gram: &[CMat<S>],
    steps: &[S],
    rhs: &[Vec<Complex<S>>],
    warm: Vec<Vec<Complex<S>>>,
    sigma: S,
    penalty: Penalty<S>,
    eps: S,
    max_inner: usize,
) -> InnerResult<S> {
    let inv_s2 = S::one() / (sigma * sigma);
    let mut x = warm;
    let mut v = x.clone();
    let mut fista = Fista::<S>::default();
    let mut iters = 0;
    let mut buf = Vec::new();
    loop {
        let alpha = fista.next_alpha();
        let mut cert = S::zero();
        for w in 0..gram.len() {
            let (g, b, eta) = (&gram[w], &rhs[w], steps[w]);
            buf.resize(b.len(), Complex::new(S::zero(), S::zero()));
            g.mul_vec_into(&v[w], &mut buf);
            for i in 0..b.len() {
                let grad = buf[i] - b[i];
                let x_new = penalty.prox(v[w][i] - grad.scale(eta), eta * sigma * sigma);
                v[w][i] = x_new + (x_new - x[w][i]).scale(alpha);
                x[w][i] = x_new;
            }
            cert += certificate_sq(g, b, &x[w], inv_s2, penalty);
        }
        iters += 1;
        if cert <= eps * eps {
            return InnerResult {
                s: x,
                certificate: cert.sqrt(),
                iters,
                hit_limit: false,
            };
        }
        if iters >= max_inner {
            return InnerResult {
                s: x,
                certificate: cert.sqrt(),
                iters,
                hit_limit: true,
            };
        }
    }
}

/// APG for a single subcarrier problem
/// `min_s ‖ř − Ȟs‖²/(2σ²) + h(s)` from `warm`, to certificate `eps`.
pub fn inner_apg<S: Real>(
    h: &CMat<S>,
    r: &[Complex<S>],
    sigma: S,
    penalty: Penalty<S>,
    warm: &[Complex<S>],
    eps: S,
    max_inner: usize,
) -> InnerResult<S> {
    let gram = vec![h.gram()];
    let steps = vec![step_for(&gram[0], None)];
    let rhs = vec![h.adjoint_mul_vec(r)];
    apg_core(&gram, &steps, &rhs, vec![warm.to_vec()], sigma, penalty, eps, max_inner)
}

/// The EM family on `F = f + h`. GMAP uses the closed-form M-step (exact
/// EM); Box uses APG to the scheduled accuracy (inexact EM). `opts.accel`
/// adds FISTA extrapolation of the outer iterates, evaluated by the E-step.
pub fn detect_em<S: Real>(inst: &ProblemInstance<S>, opts: &SolverOptions) -> DetectionResult<S> {
    let start = Instant::now();
    let sigma = inst.sigma();
    let penalty = inst.penalty();
    let mstep = MStep::new(inst, opts.step_size_override);
    let exact = matches!(penalty, Penalty::Gmap { .. });
    let mut trace = SolverTrace::default();
    let mut s = inst.zeros();
    let mut s_ex = s.clone();
    let mut fista = Fista::<S>::default();
    let mut converged = false;
    if opts.keep_iterates {
        trace.iterates.push(to_f64(&s));
    }
    for k in 0..opts.max_outer {
        // Without extrapolation the E-step point is s^k itself, so f(s^k)
        // falls out of the same forward pass.
        let shared = opts.track_objective && !opts.accel;
        let (r_freq, f) = inst.conditional_mean(&s_ex, sigma, shared);
        if opts.track_objective {
            let obj = match (f, penalty.eval(&s)) {
                (Some(f), Some(h)) => f + h,
                _ => inst.objective(&s),
            };
            trace.objective.push(obj.as_f64());
        }
        let rhs = mstep.rhs(inst, &r_freq);
        let (parts, inner_iters, certificate, eps) = if exact {
            (mstep.solve_exact(&rhs), 0, 0.0, 0.0)
        } else {
            let eps = opts.eps_schedule.eps(k + 1);
            let res = mstep.apg(&rhs, inst.split_subcarriers(&s), S::lit(eps), opts.max_inner);
            if res.hit_limit {
                trace.inner_limit_hits += 1;
            }
            (res.s, res.iters, res.certificate.as_f64(), eps)
        };
        let s_new = inst.merge_subcarriers(&parts);
        let step_norm = dist(&s_new, &s).as_f64();
        let prev_norm = norm(&s).as_f64();
        if opts.accel {
            let alpha = fista.next_alpha();
            for ((e, a), b) in s_ex.iter_mut().zip(&s_new).zip(&s) {
                *e = a + (a - b).scale(alpha);
            }
        } else {
            s_ex.clone_from(&s_new);
        }
        s = s_new;
        if opts.keep_iterates {
            trace.iterates.push(to_f64(&s));
        }
        trace.iterations.push(IterationRecord {
            step_norm,
            inner_iters,
            certificate,
            eps,
            fft_count: inst.transforms(),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if should_stop(step_norm, prev_norm, opts.stop_rel) {
            converged = true;
            break;
        }
    }
    if opts.track_objective {
        trace.objective.push(inst.objective(&s).as_f64());
    }
    finish(inst, s, trace, converged)
}
