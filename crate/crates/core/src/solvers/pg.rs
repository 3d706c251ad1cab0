use super::{finish, should_stop, to_f64, DetectionResult, Fista, IterationRecord, SolverOptions, SolverTrace};
use crate::objective::{Penalty, ProblemInstance};
use crate::scalar::{dist, norm, Real};
use std::time::Instant;

/// Proximal gradient on `F = f + h` with constant step `1/σ_max(B)²`
/// (or the override). With `opts.accel` this is FISTA.
pub fn detect_pg<S: Real>(inst: &ProblemInstance<S>, opts: &SolverOptions) -> DetectionResult<S> {
    let start = Instant::now();
    let penalty = inst.penalty();
    let eta = match opts.step_size_override {
        Some(e) => S::lit(e),
        None => S::one() / inst.spectral_info().lipschitz,
    };
    let mut trace = SolverTrace::default();
    let mut s = inst.zeros();
    let mut s_ex = s.clone();
    let mut fista = Fista::<S>::default();
    let mut converged = false;
    if opts.keep_iterates {
        trace.iterates.push(to_f64(&s));
    }
    for _ in 0..opts.max_outer {
        let (f, g) = inst.eval_and_grad(&s_ex);
        if opts.track_objective {
            let obj = if opts.accel {
                inst.objective(&s)
            } else {
                f + penalty.eval(&s).unwrap_or_else(S::infinity)
            };
            trace.objective.push(obj.as_f64());
        }
        let s_new: Vec<_> = s_ex.iter().zip(&g).map(|(x, gi)| penalty.prox(x - gi.scale(eta), eta)).collect();
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
            inner_iters: 0,
            certificate: 0.0,
            eps: 0.0,
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

/// Box-constrained PG.
///
/// # Panics
/// If the instance penalty is not a box.
pub fn detect_pg_box<S: Real>(inst: &ProblemInstance<S>, opts: &SolverOptions) -> DetectionResult<S> {
    assert!(
        matches!(inst.penalty(), Penalty::Box { .. }),
        "detect_pg_box needs a box penalty"
    );
    detect_pg(inst, opts)
}
