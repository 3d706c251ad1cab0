//! On-disk problem sets for training the unfolded detector.
//!
//! A dataset directory holds `manifest.json` and four little-endian `f64`
//! arrays, row-major with complex values stored as interleaved `(re, im)`:
//!
//! | file               | shape             | content                               |
//! |--------------------|-------------------|---------------------------------------|
//! | `channels.bin`     | `[T, W, M, N, 2]` | subcarrier gains `Ȟ_w[m][n]`          |
//! | `symbols.bin`      | `[T, N, W, 2]`    | transmitted symbols                   |
//! | `observations.bin` | `[T, M, W, 2]`    | one-bit observations                  |
//! | `sigmas.bin`       | `[T, 3]`          | `snr_db, sigma_actual, sigma_loaded`  |

use crate::error::{Error, Result};
use crate::fft::UnitaryDft;
use crate::linalg::CMat;
use crate::model::{realize_from, trial_rng, MultipathChannel, OneBitObservation, SymbolBlock, SystemConfig};
use crate::scalar::Complex;
use crate::C64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";
pub const FORMAT: &str = "onebit-dataset";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArraySpec {
    pub file: String,
    pub shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub version: u32,
    pub config: SystemConfig,
    pub count: usize,
    pub dtype: String,
    pub endianness: String,
    pub ordering: String,
    /// SNR range requested, before the margin.
    pub snr_db_requested: [f64; 2],
    pub snr_margin_db: f64,
    /// Range the per-instance SNRs were drawn from (uniformly).
    pub snr_db_range: [f64; 2],
    pub arrays: BTreeMap<String, ArraySpec>,
}

/// One stored problem.
#[derive(Debug, Clone)]
pub struct DatasetInstance {
    pub snr_db: f64,
    pub channel: MultipathChannel<f64>,
    pub symbols: SymbolBlock<f64>,
    pub observation: OneBitObservation<f64>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub instances: Vec<DatasetInstance>,
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Dataset(format!("{} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

fn push_complex(buf: &mut Vec<u8>, v: C64) {
    buf.extend_from_slice(&v.re.to_le_bytes());
    buf.extend_from_slice(&v.im.to_le_bytes());
}

fn array_specs(cfg: &SystemConfig, t: usize) -> BTreeMap<String, ArraySpec> {
    let spec = |file: &str, shape: Vec<usize>, columns: Vec<String>| ArraySpec {
        file: file.into(),
        shape,
        columns,
    };
    BTreeMap::from([
        ("channels".into(), spec("channels.bin", vec![t, cfg.w, cfg.m, cfg.n, 2], vec![])),
        ("symbols".into(), spec("symbols.bin", vec![t, cfg.n, cfg.w, 2], vec![])),
        ("observations".into(), spec("observations.bin", vec![t, cfg.m, cfg.w, 2], vec![])),
        (
            "sigmas".into(),
            spec(
                "sigmas.bin",
                vec![t, 3],
                vec!["snr_db".into(), "sigma_actual".into(), "sigma_loaded".into()],
            ),
        ),
    ])
}

/// Draws `count` instances with SNRs uniform on
/// `[snr_lo − margin, snr_hi + margin]` and writes them under `dir`.
/// Instance `i` uses stream `i` of `cfg.seed`: its SNR first, then the
/// channel, symbols and noise.
pub fn export_dataset(cfg: &SystemConfig, count: usize, snr_range: (f64, f64), margin_db: f64, dir: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    let (lo, hi) = snr_range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::Config(format!("bad SNR range [{lo}, {hi}]")));
    }
    if !(margin_db >= 0.0 && margin_db.is_finite()) {
        return Err(Error::Config(format!("SNR margin {margin_db} must be non-negative")));
    }
    fs::create_dir_all(dir)?;
    let range = [lo - margin_db, hi + margin_db];
    let dft = UnitaryDft::new(cfg.w);
    let (mut ch, mut sy, mut ob, mut sg) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for i in 0..count {
        let mut rng = trial_rng(cfg.seed, i as u64);
        let snr_db = if range[1] > range[0] {
            rng.random_range(range[0]..range[1])
        } else {
            range[0]
        };
        let c = SystemConfig { snr_db, ..cfg.clone() };
        let real = realize_from::<f64, _>(&c, &mut rng, &dft);
        for w in 0..cfg.w {
            for v in real.channel.subcarrier(w).as_slice() {
                push_complex(&mut ch, *v);
            }
        }
        real.symbols.s.iter().for_each(|v| push_complex(&mut sy, *v));
        real.observation.q.iter().for_each(|v| push_complex(&mut ob, *v));
        for x in [snr_db, real.observation.sigma_actual, real.observation.sigma] {
            sg.extend_from_slice(&x.to_le_bytes());
        }
    }
    let manifest = DatasetManifest {
        format: FORMAT.into(),
        version: 1,
        config: cfg.clone(),
        count,
        dtype: "f64".into(),
        endianness: "little".into(),
        ordering: "row-major, re/im interleaved".into(),
        snr_db_requested: [lo, hi],
        snr_margin_db: margin_db,
        snr_db_range: range,
        arrays: array_specs(cfg, count),
    };
    write_atomic(&dir.join("channels.bin"), &ch)?;
    write_atomic(&dir.join("symbols.bin"), &sy)?;
    write_atomic(&dir.join("observations.bin"), &ob)?;
    write_atomic(&dir.join("sigmas.bin"), &sg)?;
    write_atomic(&dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(manifest)
}

fn read_f64s(path: PathBuf, expected: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(&path).map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
    if bytes.len() != expected * 8 {
        return Err(Error::Dataset(format!(
            "{} holds {} bytes, manifest implies {}",
            path.display(),
            bytes.len(),
            expected * 8
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn complexes(x: &[f64]) -> Vec<C64> {
    x.chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect()
}

impl Dataset {
    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST))
            .map_err(|e| Error::Dataset(format!("{}: {e}", dir.join(MANIFEST).display())))?;
        let manifest: DatasetManifest = serde_json::from_str(&text)?;
        if manifest.format != FORMAT || manifest.dtype != "f64" || manifest.endianness != "little" {
            return Err(Error::Dataset("unsupported dataset format".into()));
        }
        let cfg = &manifest.config;
        let t = manifest.count;
        if manifest.arrays != array_specs(cfg, t) {
            return Err(Error::Dataset("array shapes disagree with the configuration".into()));
        }
        let (m, n, w) = (cfg.m, cfg.n, cfg.w);
        let file = |k: &str| dir.join(&manifest.arrays[k].file);
        let ch = read_f64s(file("channels"), t * w * m * n * 2)?;
        let sy = read_f64s(file("symbols"), t * n * w * 2)?;
        let ob = read_f64s(file("observations"), t * m * w * 2)?;
        let sg = read_f64s(file("sigmas"), t * 3)?;
        let mut instances = Vec::with_capacity(t);
        for i in 0..t {
            let gains = complexes(&ch[i * w * m * n * 2..(i + 1) * w * m * n * 2]);
            let sub = gains.chunks_exact(m * n).map(|g| CMat::from_vec(m, n, g.to_vec())).collect();
            let sigmas = &sg[i * 3..i * 3 + 3];
            instances.push(DatasetInstance {
                snr_db: sigmas[0],
                channel: MultipathChannel::from_subcarriers(sub),
                symbols: SymbolBlock {
                    d: cfg.d,
                    n,
                    w,
                    s: complexes(&sy[i * n * w * 2..(i + 1) * n * w * 2]),
                },
                observation: OneBitObservation {
                    q: complexes(&ob[i * m * w * 2..(i + 1) * m * w * 2]),
                    sigma: sigmas[2],
                    sigma_actual: sigmas[1],
                },
            });
        }
        Ok(Self { manifest, instances })
    }
}
