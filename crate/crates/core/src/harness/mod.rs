//! Monte-Carlo driver: per-trial detection runs, SNR sweeps with
//! aggregate statistics, and convergence-bound reports.

mod ber;
mod bounds;

pub use ber::{compute_ber, gray_label};
pub use bounds::{check_bounds, reference_optimum, BoundCurve, BoundsReport, LowerBoundCheck};

use crate::diem::{diem_forward, DiemParams};
use crate::error::{Error, Result};
use crate::fft::UnitaryDft;
use crate::model::{realize, Realization, SystemConfig};
use crate::objective::{Penalty, ProblemInstance};
use crate::solvers::{detect_em, detect_pg_box, detect_zf, hard_decision, DetectionResult, SolverOptions, SolverTrace};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub enum Detector {
    Zf,
    PgBox,
    EmGmap,
    AemGmap,
    EmBox,
    AiemBox,
    /// `None` runs the per-instance baseline parameters.
    Diem(Option<DiemParams>),
    /// Returns the transmitted symbols (test fixture).
    Oracle,
    /// Returns the all-zero soft estimate (test fixture).
    Zero,
}

impl Detector {
    pub const NAMES: [&'static str; 7] = ["zf", "pg-box", "em-gmap", "aem-gmap", "em-box", "aiem-box", "diem"];

    pub fn name(&self) -> &'static str {
        match self {
            Detector::Zf => "zf",
            Detector::PgBox => "pg-box",
            Detector::EmGmap => "em-gmap",
            Detector::AemGmap => "aem-gmap",
            Detector::EmBox => "em-box",
            Detector::AiemBox => "aiem-box",
            Detector::Diem(_) => "diem",
            Detector::Oracle => "oracle",
            Detector::Zero => "zero",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "zf" => Detector::Zf,
            "pg-box" => Detector::PgBox,
            "em-gmap" => Detector::EmGmap,
            "aem-gmap" => Detector::AemGmap,
            "em-box" => Detector::EmBox,
            "aiem-box" => Detector::AiemBox,
            "diem" => Detector::Diem(None),
            "oracle" => Detector::Oracle,
            "zero" => Detector::Zero,
            _ => return None,
        })
    }

    /// Regularizer the detector solves with.
    pub fn penalty(&self, d: usize) -> Penalty<f64> {
        match self {
            Detector::EmGmap | Detector::AemGmap => Penalty::gmap(d),
            _ => Penalty::boxed(d),
        }
    }

    /// Default solver options for the detector on an `N × W` problem.
    pub fn options(&self, n: usize, w: usize) -> SolverOptions {
        match self {
            Detector::AemGmap => SolverOptions::aem(),
            Detector::EmBox => SolverOptions::box_em(n, w),
            Detector::AiemBox => SolverOptions::aiem(n, w),
            _ => SolverOptions::em(),
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Knobs shared by every trial of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    /// Record objective values (costs extra transforms for accelerated runs).
    pub track_objective: bool,
    pub stop_rel: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            track_objective: false,
            stop_rel: o.stop_rel,
            max_outer: o.max_outer,
            max_inner: o.max_inner,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub detector: String,
    pub snr_db: f64,
    pub ber: f64,
    pub symbol_error_rate: f64,
    pub outer_iters: usize,
    pub total_inner_iters: usize,
    pub fft_count: usize,
    pub wall_ms: f64,
    pub converged: bool,
    /// Final `F(s)` when objectives were tracked.
    pub final_objective: Option<f64>,
    /// Set when the detector aborted; such trials are left out of the means.
    pub failure: Option<String>,
}

/// Detection problem for `real` as seen by `detector`.
pub fn build_instance(cfg: &SystemConfig, real: &Realization<f64>, detector: &Detector) -> Result<ProblemInstance<f64>> {
    ProblemInstance::new(
        real.channel.clone(),
        real.observation.clone(),
        detector.penalty(cfg.d),
        cfg.d,
    )
}

/// Runs one detector on one instance.
pub fn run_detector(
    inst: &ProblemInstance<f64>,
    detector: &Detector,
    settings: &RunSettings,
    truth: &[crate::C64],
) -> Result<DetectionResult<f64>> {
    let mut opts = detector.options(inst.users(), inst.subcarriers());
    opts.track_objective = settings.track_objective;
    opts.stop_rel = settings.stop_rel;
    opts.max_outer = settings.max_outer;
    opts.max_inner = settings.max_inner;
    let fixed = |s: Vec<crate::C64>| DetectionResult {
        s_hard: hard_decision(&s, inst.d(), inst.users(), inst.subcarriers()),
        s_soft: s,
        trace: SolverTrace::default(),
        converged: true,
    };
    Ok(match detector {
        Detector::Zf => detect_zf(inst),
        Detector::PgBox => detect_pg_box(inst, &opts),
        Detector::EmGmap | Detector::AemGmap | Detector::EmBox | Detector::AiemBox => detect_em(inst, &opts),
        Detector::Diem(params) => match params {
            Some(p) => diem_forward(inst, p)?,
            None => diem_forward(inst, &DiemParams::default_for(inst))?,
        },
        Detector::Oracle => fixed(truth.to_vec()),
        Detector::Zero => fixed(inst.zeros()),
    })
}

/// One trial: draws the trial's world from its own stream, detects, scores.
pub fn run_trial(cfg: &SystemConfig, detector: &Detector, trial_id: u64, settings: &RunSettings) -> TrialRecord {
    let dft = UnitaryDft::new(cfg.w);
    let real = realize::<f64>(cfg, trial_id, &dft);
    let mut record = TrialRecord {
        trial_id,
        detector: detector.name().to_string(),
        snr_db: cfg.snr_db,
        ber: f64::NAN,
        symbol_error_rate: f64::NAN,
        outer_iters: 0,
        total_inner_iters: 0,
        fft_count: 0,
        wall_ms: 0.0,
        converged: false,
        final_objective: None,
        failure: None,
    };
    let start = Instant::now();
    let outcome = build_instance(cfg, &real, detector).and_then(|inst| {
        let res = run_detector(&inst, detector, settings, &real.symbols.s)?;
        Ok((res, inst.transforms()))
    });
    record.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok((res, ffts)) => {
            if res.s_soft.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                record.failure = Some("non-finite estimate".into());
                return record;
            }
            let (ber, ser) = compute_ber(&res.s_hard.s, &real.symbols.s, cfg.d);
            record.ber = ber;
            record.symbol_error_rate = ser;
            record.outer_iters = res.trace.outer_iters();
            record.total_inner_iters = res.trace.total_inner_iters();
            record.fft_count = ffts;
            record.converged = res.converged;
            record.final_objective = res.trace.objective.last().copied();
        }
        Err(e) => record.failure = Some(e.to_string()),
    }
    record
}

/// Mean and 95% normal-approximation half width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub ci95: f64,
}

impl MeanCi {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, ci95: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, ci95: f64::NAN };
        }
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            ci95: 1.96 * (var / n as f64).sqrt(),
        }
    }

    pub fn lo(&self) -> f64 {
        self.mean - self.ci95
    }

    pub fn hi(&self) -> f64 {
        self.mean + self.ci95
    }

    /// Whether the two intervals intersect.
    pub fn overlaps(&self, other: &MeanCi) -> bool {
        self.lo() <= other.hi() && other.lo() <= self.hi()
    }
}

/// Statistics of one `(detector, SNR)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub detector: String,
    pub snr_db: f64,
    pub trials: usize,
    pub failures: usize,
    pub ber: MeanCi,
    pub ser: MeanCi,
    pub outer_iters: MeanCi,
    pub inner_iters: MeanCi,
    pub fft_count: MeanCi,
    pub wall_ms: MeanCi,
    /// Fraction of successful trials that met the stopping rule.
    pub converged_frac: f64,
}

impl Aggregate {
    /// Summarizes records of one cell (any order; sorted by id internally).
    pub fn from_records(detector: &str, snr_db: f64, records: &[TrialRecord]) -> Self {
        let mut ok: Vec<&TrialRecord> = records.iter().filter(|r| r.failure.is_none()).collect();
        ok.sort_by_key(|r| r.trial_id);
        let col = |f: fn(&TrialRecord) -> f64| MeanCi::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
        Self {
            detector: detector.to_string(),
            snr_db,
            trials: records.len(),
            failures: records.len() - ok.len(),
            ber: col(|r| r.ber),
            ser: col(|r| r.symbol_error_rate),
            outer_iters: col(|r| r.outer_iters as f64),
            inner_iters: col(|r| r.total_inner_iters as f64),
            fft_count: col(|r| r.fft_count as f64),
            wall_ms: col(|r| r.wall_ms),
            converged_frac: if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().filter(|r| r.converged).count() as f64 / ok.len() as f64
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub aggregates: Vec<Aggregate>,
    /// Every trial, ordered by detector, SNR, then trial id.
    pub records: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn cell(&self, detector: &str, snr_db: f64) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.detector == detector && a.snr_db == snr_db)
    }
}

/// Runs every `(detector, SNR, trial)` combination. Trial `i` uses stream
/// `i` of `cfg.seed` for every detector and SNR, so detectors see the same
/// channels and symbols. `workers = 0` uses the rayon default.
pub fn run_sweep(
    cfg: &SystemConfig,
    snrs: &[f64],
    detectors: &[Detector],
    trials: usize,
    workers: usize,
    settings: &RunSettings,
) -> Result<SweepResult> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let jobs: Vec<(usize, usize, u64)> = (0..detectors.len())
        .flat_map(|d| (0..snrs.len()).flat_map(move |s| (0..trials as u64).map(move |t| (d, s, t))))
        .collect();
    let run = || -> Vec<TrialRecord> {
        jobs.par_iter()
            .map(|&(d, s, t)| {
                let c = SystemConfig {
                    snr_db: snrs[s],
                    ..cfg.clone()
                };
                run_trial(&c, &detectors[d], t, settings)
            })
            .collect()
    };
    let records = if workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(run)
    };
    let mut aggregates = Vec::new();
    for (di, det) in detectors.iter().enumerate() {
        for (si, &snr) in snrs.iter().enumerate() {
            let lo = (di * snrs.len() + si) * trials;
            aggregates.push(Aggregate::from_records(det.name(), snr, &records[lo..lo + trials]));
        }
    }
    Ok(SweepResult { aggregates, records })
}
