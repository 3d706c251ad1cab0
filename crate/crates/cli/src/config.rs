//! Run configuration: a preset, optionally overlaid by a TOML/JSON file,
//! overlaid by command-line flags.

use anyhow::{bail, Context, Result};
use clap::Args;
use onebit_core::harness::RunSettings;
use onebit_core::SystemConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Solver knobs a config file may set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub stop_rel: Option<f64>,
    pub max_outer: Option<usize>,
    pub max_inner: Option<usize>,
}

/// Config file layout. Every field is optional; missing ones come from
/// `preset` (default `desk`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<String>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub w: Option<usize>,
    pub taps: Option<usize>,
    pub d: Option<usize>,
    pub paths: Option<usize>,
    pub snr_db: Option<f64>,
    pub sigma0: Option<f64>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub solver: SolverSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
            _ => toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
        };
        Ok(cfg)
    }
}

/// Flags shared by every command that builds a system.
#[derive(Debug, Clone, Default, Args)]
pub struct SystemFlags {
    /// TOML or JSON file with system and solver settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named base configuration.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SystemConfig::PRESETS))]
    pub preset: Option<String>,
    /// Receive antennas.
    #[arg(long)]
    pub m: Option<usize>,
    /// Users.
    #[arg(long)]
    pub n: Option<usize>,
    /// Subcarriers.
    #[arg(long)]
    pub w: Option<usize>,
    /// Channel taps.
    #[arg(long)]
    pub taps: Option<usize>,
    /// Half the PAM levels per dimension (2 for 16-QAM).
    #[arg(long)]
    pub d: Option<usize>,
    /// Propagation paths per tap.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Noise-loading constant.
    #[arg(long)]
    pub sigma0: Option<f64>,
    /// Base seed; trial i uses stream i.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Outer stop: relative change of the estimate.
    #[arg(long)]
    pub stop_rel: Option<f64>,
    /// Outer iteration cap.
    #[arg(long)]
    pub max_outer: Option<usize>,
    /// Inner (M-step) iteration cap.
    #[arg(long)]
    pub max_inner: Option<usize>,
}

/// Everything needed to rebuild a run's systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub system: SystemConfig,
    pub solver: SolverSection,
}

impl Resolved {
    pub fn settings(&self) -> RunSettings {
        let d = RunSettings::default();
        RunSettings {
            track_objective: false,
            stop_rel: self.solver.stop_rel.unwrap_or(d.stop_rel),
            max_outer: self.solver.max_outer.unwrap_or(d.max_outer),
            max_inner: self.solver.max_inner.unwrap_or(d.max_inner),
        }
    }
}

impl SystemFlags {
    pub fn resolve(&self, default_preset: &str) -> Result<Resolved> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let preset = self.preset.as_deref().or(file.preset.as_deref()).unwrap_or(default_preset);
        let Some(mut c) = SystemConfig::preset(preset) else {
            bail!("unknown preset {preset:?}; valid: {}", SystemConfig::PRESETS.join(", "));
        };
        macro_rules! layer {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f.or(file.$f) {
                    c.$f = v;
                }
            )*};
        }
        layer!(m, n, w, taps, d, paths, sigma0, seed);
        if let Some(v) = file.snr_db {
            c.snr_db = v;
        }
        let solver = SolverSection {
            stop_rel: self.stop_rel.or(file.solver.stop_rel),
            max_outer: self.max_outer.or(file.solver.max_outer),
            max_inner: self.max_inner.or(file.solver.max_inner),
        };
        if let Some(s) = solver.stop_rel {
            if !(s > 0.0 && s.is_finite()) {
                bail!("stop_rel must be positive, got {s}");
            }
        }
        if solver.max_outer == Some(0) || solver.max_inner == Some(0) {
            bail!("iteration caps must be at least 1");
        }
        c.validate()?;
        Ok(Resolved { system: c, solver })
    }
}
