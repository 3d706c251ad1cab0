//! Runtime checks of the convergence-rate and iteration-lower-bound
//! results on instances small enough to materialize `B`.

use crate::dense::{theta_of, DenseProblem};
use crate::error::{Error, Result};
use crate::fft::UnitaryDft;
use crate::model::{realize, trial_rng, SystemConfig};
use crate::objective::{Penalty, ProblemInstance};
use crate::scalar::Complex;
use crate::solvers::{detect_em, detect_pg, DetectionResult, EpsSchedule, SolverOptions};
use crate::C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Multiplicative slack on every bound's right-hand side.
pub const TOLERANCE: f64 = 1.0 + 1e-6;
/// Accuracy `ε` in `‖θᵏ − θ*‖ ≤ ε` for the iteration lower bounds.
pub const LOWER_BOUND_EPS: f64 = 1e-3;
const REFERENCE_STOP: f64 = 1e-10;
const REFERENCE_MAX: usize = 5000;
const RUN_STOP: f64 = 1e-9;
const RUN_MAX: usize = 3000;
const LIPSCHITZ_PAIRS: usize = 200;

/// Measured optimality gaps against an upper bound, per iteration `k ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub prop: String,
    pub detector: String,
    /// `F(θᵏ) − F(θ*)`, `k = 1, 2, …`
    pub gap: Vec<f64>,
    pub bound: Vec<f64>,
    pub satisfied: Vec<bool>,
    pub all_satisfied: bool,
}

impl BoundCurve {
    fn new(prop: &str, detector: &str, gap: Vec<f64>, bound: Vec<f64>) -> Self {
        let satisfied: Vec<bool> = gap.iter().zip(&bound).map(|(g, b)| *g <= b * TOLERANCE).collect();
        let all_satisfied = satisfied.iter().all(|&s| s);
        Self {
            prop: prop.into(),
            detector: detector.into(),
            gap,
            bound,
            satisfied,
            all_satisfied,
        }
    }
}

/// Iterations needed to reach `‖θᵏ − θ*‖ ≤ eps` against the lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCheck {
    pub prop: String,
    pub detector: String,
    pub eps: f64,
    pub lower_bound: f64,
    /// First `k` with `‖θᵏ − θ*‖ ≤ eps`; `None` if the run never got there.
    pub k_reached: Option<usize>,
    /// Vacuously true when the accuracy was never reached.
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzCheck {
    pub prop: String,
    pub pairs: usize,
    /// `max ‖∇f(θ₁) − ∇f(θ₂)‖ / (L_f ‖θ₁ − θ₂‖)`
    pub max_ratio: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub trial_id: u64,
    pub config: SystemConfig,
    pub sigma_max_b: f64,
    pub sigma_min_b: f64,
    pub sigma_min_positive_b: f64,
    /// Whether both reference solves met their stopping rule.
    pub reference_converged: bool,
    pub f_star_gmap: f64,
    pub f_star_box: f64,
    pub lipschitz: LipschitzCheck,
    /// `‖B(θ⁰−θ*)‖² ≤ σ_max(B)²‖θ⁰−θ*‖²` for both penalties.
    pub envelope_satisfied: bool,
    pub curves: Vec<BoundCurve>,
    pub lower_bounds: Vec<LowerBoundCheck>,
    pub all_satisfied: bool,
}

/// High-accuracy minimizer of `F` for the instance's penalty: accelerated
/// EM (closed form for GMAP, tightly certified APG M-steps for the box) run
/// to relative change `1e−10` or 5000 iterations.
pub fn reference_optimum(inst: &ProblemInstance<f64>) -> DetectionResult<f64> {
    let opts = SolverOptions {
        accel: true,
        eps_schedule: EpsSchedule::Fixed(1e-12),
        stop_rel: REFERENCE_STOP,
        max_outer: REFERENCE_MAX,
        max_inner: 20_000,
        track_objective: true,
        ..SolverOptions::default()
    };
    detect_em(inst, &opts)
}

fn dist(a: &[C64], b: &[C64]) -> f64 {
    crate::scalar::dist(a, b)
}

fn gaps(run: &DetectionResult<f64>, f_star: f64) -> Vec<f64> {
    run.trace.objective.iter().skip(1).map(|f| f - f_star).collect()
}

fn first_within(run: &DetectionResult<f64>, star: &[C64], eps: f64) -> Option<usize> {
    run.trace.iterates.iter().position(|s| dist(s, star) <= eps)
}

/// Runs every applicable bound check on trial `trial_id` of `cfg`.
pub fn check_bounds(cfg: &SystemConfig, trial_id: u64) -> Result<BoundsReport> {
    cfg.validate()?;
    if cfg.m * cfg.w > 64 || cfg.n * cfg.w > 32 {
        return Err(Error::Config(format!(
            "bound checks need a small instance (at most (4, 2, 8)); got ({}, {}, {})",
            cfg.m, cfg.n, cfg.w
        )));
    }
    let dft = UnitaryDft::new(cfg.w);
    let real = realize::<f64>(cfg, trial_id, &dft);
    let gmap = ProblemInstance::new(real.channel.clone(), real.observation.clone(), Penalty::gmap(cfg.d), cfg.d)?;
    let boxed = gmap.with_penalty(Penalty::boxed(cfg.d));
    let lambda = match gmap.penalty() {
        Penalty::Gmap { lambda } => lambda,
        Penalty::Box { .. } => unreachable!(),
    };

    let dense = DenseProblem::new(&gmap);
    let spec = gmap.spectral_info().clone();
    let smax = spec.sigma_max_b;
    let smin = dense.sigma_min();
    let smin_pos = dense.sigma_min_positive();
    let proj = dense.row_space_projector();
    let m = (2 * cfg.m * cfg.w) as f64;
    let sqrt_m = m.sqrt();

    let ref_gmap = reference_optimum(&gmap);
    let ref_box = reference_optimum(&boxed);
    let star_gmap = ref_gmap.s_soft.clone();
    let star_box = ref_box.s_soft.clone();
    let f_star_gmap = gmap.objective(&star_gmap);
    let f_star_box = boxed.objective(&star_box);

    let run_opts = |base: SolverOptions| SolverOptions {
        stop_rel: RUN_STOP,
        max_outer: RUN_MAX,
        track_objective: true,
        keep_iterates: true,
        ..base
    };
    let (n, w) = (cfg.n, cfg.w);
    let pg_box = detect_pg(&boxed, &run_opts(SolverOptions::pg()));
    let pg_gmap = detect_pg(&gmap, &run_opts(SolverOptions::pg()));
    let em_gmap = detect_em(&gmap, &run_opts(SolverOptions::em()));
    let aem_gmap = detect_em(&gmap, &run_opts(SolverOptions::aem()));
    let em_box = detect_em(&boxed, &run_opts(SolverOptions::box_em(n, w)));
    let aiem_box = detect_em(&boxed, &run_opts(SolverOptions::aiem(n, w)));

    // θ⁰ = 0, so θ⁰ − θ* = −θ*.
    let b0_gmap = gmap.b_norm_sqr(&star_gmap).sqrt();
    let b0_box = boxed.b_norm_sqr(&star_box).sqrt();
    let d0_gmap = crate::scalar::norm(&star_gmap);
    let d0_box = crate::scalar::norm(&star_box);
    let envelope_satisfied =
        b0_gmap * b0_gmap <= smax * smax * d0_gmap * d0_gmap * TOLERANCE && b0_box * b0_box <= smax * smax * d0_box * d0_box * TOLERANCE;

    let mut curves = Vec::new();
    let ks = |len: usize| (1..=len).map(|k| k as f64);
    for (run, f_star, d0, name) in [(&pg_box, f_star_box, d0_box, "pg-box"), (&pg_gmap, f_star_gmap, d0_gmap, "pg-gmap")] {
        let g = gaps(run, f_star);
        let b = ks(g.len()).map(|k| smax * smax * d0 * d0 / k).collect();
        curves.push(BoundCurve::new("prop1", name, g, b));
    }
    let g = gaps(&em_gmap, f_star_gmap);
    let b = ks(g.len()).map(|k| b0_gmap * b0_gmap / k).collect();
    curves.push(BoundCurve::new("prop2", "em-gmap", g, b));
    let g = gaps(&aem_gmap, f_star_gmap);
    let b = ks(g.len()).map(|k| 2.0 * b0_gmap * b0_gmap / ((k + 1.0) * (k + 1.0))).collect();
    curves.push(BoundCurve::new("prop4", "aem-gmap", g, b));
    {
        let g = gaps(&em_box, f_star_box);
        let mut acc = 0.0;
        let b = em_box
            .trace
            .iterations
            .iter()
            .zip(ks(g.len()))
            .map(|(rec, k)| {
                acc += rec.certificate;
                let t = b0_box + 2.0 * acc / smin;
                t * t / (2.0 * k)
            })
            .collect();
        curves.push(BoundCurve::new("prop5", "em-box", g, b));
    }
    {
        let g = gaps(&aiem_box, f_star_box);
        let mut acc = 0.0;
        let b = aiem_box
            .trace
            .iterations
            .iter()
            .zip(ks(g.len()))
            .map(|(rec, k)| {
                acc += k * rec.certificate;
                let t = b0_box + 2.0 * acc / smin;
                2.0 * t * t / ((k + 1.0) * (k + 1.0))
            })
            .collect();
        curves.push(BoundCurve::new("prop6", "aiem-box", g, b));
    }

    let proj_norm = |v: &[C64]| -> f64 { proj.mul_vec(&theta_of(v)).iter().map(|x| x * x).sum::<f64>().sqrt() };
    let eps = LOWER_BOUND_EPS;
    let lower = |prop: &str, det: &str, run: &DetectionResult<f64>, star: &[C64], bound: f64| {
        let k_reached = first_within(run, star, eps);
        LowerBoundCheck {
            prop: prop.into(),
            detector: det.into(),
            eps,
            lower_bound: bound,
            k_reached,
            satisfied: k_reached.is_none_or(|k| k as f64 >= bound / TOLERANCE),
        }
    };
    let theta0_norm = 0.0;
    let lower_bounds = vec![
        lower("prop3a", "pg-box", &pg_box, &star_box, smax * (d0_box - eps) / sqrt_m),
        lower("prop3a", "em-box", &em_box, &star_box, smin_pos * (proj_norm(&star_box) - eps) / sqrt_m),
        lower(
            "prop3b",
            "pg-gmap",
            &pg_gmap,
            &star_gmap,
            smax * smax * (d0_gmap - eps) / (lambda * theta0_norm + smax * sqrt_m),
        ),
        lower(
            "prop3b",
            "em-gmap",
            &em_gmap,
            &star_gmap,
            smin_pos * smin_pos * (proj_norm(&star_gmap) - eps) / (lambda * theta0_norm + smin_pos * sqrt_m),
        ),
    ];

    // Gradient Lipschitz constant on random pairs around the data scale.
    let mut rng = trial_rng(cfg.seed ^ 0x11b5_c4a7, trial_id);
    let scale = cfg.max_level() as f64;
    let mut draw = |len: usize| -> Vec<C64> {
        (0..len)
            .map(|_| Complex::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale)))
            .collect()
    };
    let mut max_ratio: f64 = 0.0;
    for _ in 0..LIPSCHITZ_PAIRS {
        let a = draw(gmap.dim());
        let b = draw(gmap.dim());
        let ga = gmap.grad_f(&a);
        let gb = gmap.grad_f(&b);
        max_ratio = max_ratio.max(dist(&ga, &gb) / (spec.lipschitz * dist(&a, &b)));
    }
    let lipschitz = LipschitzCheck {
        prop: "prop1".into(),
        pairs: LIPSCHITZ_PAIRS,
        max_ratio,
        satisfied: max_ratio <= TOLERANCE,
    };

    let reference_converged = ref_gmap.converged && ref_box.converged;
    let all_satisfied = reference_converged
        && lipschitz.satisfied
        && envelope_satisfied
        && curves.iter().all(|c| c.all_satisfied)
        && lower_bounds.iter().all(|l| l.satisfied);
    Ok(BoundsReport {
        trial_id,
        config: cfg.clone(),
        sigma_max_b: smax,
        sigma_min_b: smin,
        sigma_min_positive_b: smin_pos,
        reference_converged,
        f_star_gmap,
        f_star_box,
        lipschitz,
        envelope_satisfied,
        curves,
        lower_bounds,
        all_satisfied,
    })
}
