mod artifacts;
mod config;

use anyhow::{bail, Context, Result};
use artifacts::{write_manifest, Outputs};
use clap::{Parser, Subcommand};
use config::{Resolved, SystemFlags};
use onebit_core::dataset::{export_dataset, Dataset};
use onebit_core::diem::{diem_forward, DiemParams};
use onebit_core::harness::{check_bounds, compute_ber, run_sweep, Aggregate, BoundsReport, Detector};
use onebit_core::{Penalty, ProblemInstance, SystemConfig};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "obit", version, about = "One-bit MIMO-OFDM detection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte-Carlo BER and iteration statistics over an SNR sweep.
    Simulate(SimulateArgs),
    /// Checks the convergence-rate bounds on small random instances.
    CheckBounds(CheckBoundsArgs),
    /// Writes a training set for the unfolded detector.
    ExportDataset(ExportArgs),
    /// Runs the unfolded detector on every instance of a dataset.
    Diem(DiemArgs),
}

#[derive(Debug, clap::Args)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemFlags,
    /// Detectors to run (comma-separated or repeated).
    #[arg(long, required = true, value_delimiter = ',', value_parser = clap::builder::PossibleValuesParser::new(Detector::NAMES))]
    detector: Vec<String>,
    /// SNR points in dB (comma-separated); defaults to the configured SNR.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Vec<f64>,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads; 0 uses one per core.
    #[arg(long, env = "OBIT_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Also write one CSV row per trial.
    #[arg(long)]
    per_trial: bool,
    /// Trained parameters for the `diem` detector.
    #[arg(long)]
    diem_params: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct CheckBoundsArgs {
    #[command(flatten)]
    system: SystemFlags,
    /// Random instances to check.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    instances: u64,
    /// Configured SNR in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<f64>,
    #[arg(long, default_value = "bounds")]
    out: PathBuf,
}

#[derive(Debug, clap::Args)]
struct ExportArgs {
    #[command(flatten)]
    system: SystemFlags,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    /// SNR points in dB; their range, widened by the margin, is sampled
    /// uniformly. Defaults to the configured SNR.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Vec<f64>,
    /// Extra dB added on both sides of the SNR range.
    #[arg(long, default_value_t = 3.0)]
    margin_db: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, clap::Args)]
struct DiemArgs {
    /// Dataset directory written by `export-dataset`.
    #[arg(long)]
    data: PathBuf,
    /// Parameter file; the untrained baseline is used when absent.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Output JSON file.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::CheckBounds(a) => bounds(a),
        Command::ExportDataset(a) => export(a),
        Command::Diem(a) => diem(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

const BASELINE_WARNING: &str = "warning: no DIEM parameters given; using the untrained baseline \
     (K = 20, alpha = beta = 0, gamma = 2, eta = 1/max_w sigma_max(H_w)^2 per instance)";

#[derive(Debug, Serialize)]
struct SimulateInputs<'a> {
    config: &'a Resolved,
    detectors: &'a [String],
    snr_db: &'a [f64],
    trials: u64,
    workers: usize,
    per_trial: bool,
    diem_params: Option<&'a DiemParams>,
}

#[derive(Debug, Serialize)]
struct AggregateRow<'a> {
    detector: &'a str,
    snr_db: f64,
    trials: usize,
    failures: usize,
    ber: f64,
    ber_ci95: f64,
    ser: f64,
    ser_ci95: f64,
    outer_iters: f64,
    outer_iters_ci95: f64,
    inner_iters: f64,
    inner_iters_ci95: f64,
    fft_count: f64,
    fft_count_ci95: f64,
    wall_ms: f64,
    wall_ms_ci95: f64,
    converged_frac: f64,
}

impl<'a> From<&'a Aggregate> for AggregateRow<'a> {
    fn from(a: &'a Aggregate) -> Self {
        Self {
            detector: &a.detector,
            snr_db: a.snr_db,
            trials: a.trials,
            failures: a.failures,
            ber: a.ber.mean,
            ber_ci95: a.ber.ci95,
            ser: a.ser.mean,
            ser_ci95: a.ser.ci95,
            outer_iters: a.outer_iters.mean,
            outer_iters_ci95: a.outer_iters.ci95,
            inner_iters: a.inner_iters.mean,
            inner_iters_ci95: a.inner_iters.ci95,
            fft_count: a.fft_count.mean,
            fft_count_ci95: a.fft_count.ci95,
            wall_ms: a.wall_ms.mean,
            wall_ms_ci95: a.wall_ms.ci95,
            converged_frac: a.converged_frac,
        }
    }
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

fn simulate(a: SimulateArgs) -> Result<bool> {
    let resolved = a.system.resolve("desk")?;
    let cfg = &resolved.system;
    let snrs = if a.snr.is_empty() { vec![cfg.snr_db] } else { a.snr.clone() };
    if let Some(bad) = snrs.iter().find(|s| !s.is_finite()) {
        bail!("SNR {bad} is not finite");
    }
    let params = a.diem_params.as_ref().map(DiemParams::load).transpose()?;
    let detectors: Vec<Detector> = a
        .detector
        .iter()
        .map(|name| match Detector::parse(name) {
            Some(Detector::Diem(_)) => Detector::Diem(params.clone()),
            Some(d) => d,
            None => unreachable!("clap restricts detector names"),
        })
        .collect();
    if detectors.iter().any(|d| matches!(d, Detector::Diem(None))) {
        eprintln!("{BASELINE_WARNING}");
    }
    let sweep = run_sweep(cfg, &snrs, &detectors, a.trials as usize, a.workers, &resolved.settings())?;

    create_dir(&a.out)?;
    let mut outputs = Outputs::default();
    outputs.write(&a.out.join("aggregates.csv"), &to_csv(sweep.aggregates.iter().map(AggregateRow::from))?)?;
    if a.per_trial {
        outputs.write(&a.out.join("trials.csv"), &to_csv(sweep.records.iter())?)?;
    }
    let inputs = SimulateInputs {
        config: &resolved,
        detectors: &a.detector,
        snr_db: &snrs,
        trials: a.trials,
        workers: a.workers,
        per_trial: a.per_trial,
        diem_params: params.as_ref(),
    };
    write_manifest(&a.out, "simulate", &inputs, &mut outputs)?;
    for agg in &sweep.aggregates {
        eprintln!(
            "{:>9} {:>6.1} dB  BER {:.4e} ± {:.1e}  outer {:.1}  failures {}",
            agg.detector, agg.snr_db, agg.ber.mean, agg.ber.ci95, agg.outer_iters.mean, agg.failures
        );
    }
    Ok(true)
}

#[derive(Debug, Serialize)]
struct BoundsInputs<'a> {
    config: &'a SystemConfig,
    instances: u64,
}

#[derive(Debug, Serialize)]
struct BoundsSummary<'a> {
    all_satisfied: bool,
    instances: usize,
    failed_instances: Vec<u64>,
    reports: &'a [BoundsReport],
}

fn bounds(a: CheckBoundsArgs) -> Result<bool> {
    let mut resolved = a.system.resolve("bounds-small")?;
    if let Some(s) = a.snr {
        resolved.system.snr_db = s;
    }
    let cfg = &resolved.system;
    let reports: Vec<BoundsReport> = (0..a.instances)
        .map(|t| check_bounds(cfg, t))
        .collect::<onebit_core::Result<_>>()?;
    let failed: Vec<u64> = reports.iter().filter(|r| !r.all_satisfied).map(|r| r.trial_id).collect();
    let summary = BoundsSummary {
        all_satisfied: failed.is_empty(),
        instances: reports.len(),
        failed_instances: failed.clone(),
        reports: &reports,
    };
    create_dir(&a.out)?;
    let mut outputs = Outputs::default();
    outputs.write_json(&a.out.join("bounds.json"), &summary)?;
    write_manifest(&a.out, "check-bounds", &BoundsInputs { config: cfg, instances: a.instances }, &mut outputs)?;
    eprintln!(
        "{} of {} instances satisfy every bound{}",
        reports.len() - failed.len(),
        reports.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {failed:?}") }
    );
    Ok(failed.is_empty())
}

#[derive(Debug, Serialize)]
struct ExportInputs<'a> {
    config: &'a SystemConfig,
    count: u64,
    snr_db: &'a [f64],
    margin_db: f64,
}

fn export(a: ExportArgs) -> Result<bool> {
    let resolved = a.system.resolve("desk")?;
    let cfg = &resolved.system;
    let snrs = if a.snr.is_empty() { vec![cfg.snr_db] } else { a.snr.clone() };
    let lo = snrs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = snrs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let manifest = export_dataset(cfg, a.count as usize, (lo, hi), a.margin_db, &a.out)?;
    let mut outputs = Outputs::default();
    for spec in manifest.arrays.values() {
        let path = a.out.join(&spec.file);
        let bytes = std::fs::read(&path).with_context(|| format!("reading back {}", path.display()))?;
        outputs.files.push(artifacts::OutputFile {
            sha256: artifacts::content_hash(&bytes),
            path,
        });
    }
    let inputs = ExportInputs {
        config: cfg,
        count: a.count,
        snr_db: &snrs,
        margin_db: a.margin_db,
    };
    write_manifest(&a.out, "export-dataset", &inputs, &mut outputs)?;
    eprintln!(
        "wrote {} instances to {} (SNR {:.1} to {:.1} dB)",
        manifest.count,
        a.out.display(),
        manifest.snr_db_range[0],
        manifest.snr_db_range[1]
    );
    Ok(true)
}

#[derive(Debug, Serialize)]
struct DiemOutput {
    index: usize,
    snr_db: f64,
    ber: f64,
    symbol_error_rate: f64,
    /// User-major soft estimates as `[re, im]` pairs.
    soft: Vec<[f64; 2]>,
    hard: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize)]
struct DiemReport {
    /// `None` when each instance ran its own baseline parameters.
    params: Option<DiemParams>,
    mean_ber: f64,
    instances: Vec<DiemOutput>,
}

fn diem(a: DiemArgs) -> Result<bool> {
    let ds = Dataset::load(&a.data)?;
    let given = a.params.as_ref().map(DiemParams::load).transpose()?;
    if given.is_none() {
        eprintln!("{BASELINE_WARNING}");
    }
    let d = ds.manifest.config.d;
    let mut outs = Vec::with_capacity(ds.instances.len());
    for (i, item) in ds.instances.into_iter().enumerate() {
        let inst = ProblemInstance::new(item.channel, item.observation, Penalty::boxed(d), d)?;
        let res = match &given {
            Some(p) => diem_forward(&inst, p)?,
            None => diem_forward(&inst, &DiemParams::default_for(&inst))?,
        };
        let (ber, ser) = compute_ber(&res.s_hard.s, &item.symbols.s, d);
        let pairs = |v: &[onebit_core::C64]| v.iter().map(|c| [c.re, c.im]).collect();
        outs.push(DiemOutput {
            index: i,
            snr_db: item.snr_db,
            ber,
            symbol_error_rate: ser,
            soft: pairs(&res.s_soft),
            hard: pairs(&res.s_hard.s),
        });
    }
    let mean_ber = outs.iter().map(|o| o.ber).sum::<f64>() / outs.len().max(1) as f64;
    let report = DiemReport {
        params: given,
        mean_ber,
        instances: outs,
    };
    let dir = a.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    create_dir(dir)?;
    let mut outputs = Outputs::default();
    outputs.write_json(&a.out, &report)?;
    eprintln!("mean BER {mean_ber:.4e} over {} instances", report.instances.len());
    Ok(true)
}
