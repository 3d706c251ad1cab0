//! Simulation world: multipath channels, QAM symbols, the OFDM receive
//! signal and its one-bit quantization.
//!
//! Layouts used throughout the crate:
//! - symbols `s`: user-major, `s[n*W + w]` is user `n` on subcarrier `w`;
//! - receive/observation vectors: antenna-major, `r[m*W + t]`;
//! - channel taps: `taps[(l*M + m)*N + n]`;
//! - per-subcarrier channels: `sub[w]` is the `M×N` matrix `Ȟ_w`.

use crate::error::{Error, Result};
use crate::fft::UnitaryDft;
use crate::linalg::CMat;
use crate::scalar::{Complex, Real};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Receive antennas.
    pub m: usize,
    /// Users.
    pub n: usize,
    /// OFDM size (subcarriers).
    pub w: usize,
    /// Channel length in taps.
    pub taps: usize,
    /// Half the number of PAM levels per dimension (16-QAM has `d = 2`).
    pub d: usize,
    /// Propagation paths per tap.
    pub paths: usize,
    pub snr_db: f64,
    /// Noise-loading constant added to the per-dimension noise std.
    pub sigma0: f64,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl SystemConfig {
    /// `(32, 4, 64)`, 16-QAM, σ₀ = 3.
    pub fn desk() -> Self {
        Self {
            m: 32,
            n: 4,
            w: 64,
            taps: 16,
            d: 2,
            paths: 4,
            snr_db: 10.0,
            sigma0: 3.0,
            seed: 0,
        }
    }

    /// `(128, 10, 256)`.
    pub fn paper_small() -> Self {
        Self {
            m: 128,
            n: 10,
            w: 256,
            ..Self::desk()
        }
    }

    /// `(256, 12, 256)`.
    pub fn paper_large() -> Self {
        Self {
            m: 256,
            n: 12,
            w: 256,
            ..Self::desk()
        }
    }

    /// `(4, 2, 8)` with 4 taps at 10 dB: small enough to materialize the
    /// dense operator for bound checks.
    pub fn bounds_small() -> Self {
        Self {
            m: 4,
            n: 2,
            w: 8,
            taps: 4,
            snr_db: 10.0,
            ..Self::desk()
        }
    }

    pub const PRESETS: [&'static str; 4] = ["desk", "paper-small", "paper-large", "bounds-small"];

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "bounds-small" => Some(Self::bounds_small()),
            "desk" => Some(Self::desk()),
            "paper-small" => Some(Self::paper_small()),
            "paper-large" => Some(Self::paper_large()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n == 0 {
            return bad("need at least one user".into());
        }
        if self.m < self.n {
            return bad(format!("M = {} antennas is fewer than N = {} users", self.m, self.n));
        }
        if !self.w.is_power_of_two() {
            return bad(format!("W = {} is not a power of two", self.w));
        }
        if self.taps == 0 || self.taps > self.w {
            return bad(format!("channel length {} must be in [1, W = {}]", self.taps, self.w));
        }
        if ![1, 2, 4].contains(&self.d) {
            return bad(format!("D = {} not in {{1, 2, 4}}", self.d));
        }
        if self.paths == 0 {
            return bad("need at least one propagation path".into());
        }
        if !self.snr_db.is_finite() {
            return bad("SNR must be finite".into());
        }
        if !(self.sigma0 >= 0.0 && self.sigma0.is_finite()) {
            return bad(format!("sigma0 = {} must be finite and non-negative", self.sigma0));
        }
        Ok(())
    }

    /// Largest PAM amplitude, `2D − 1`.
    pub fn max_level(&self) -> usize {
        2 * self.d - 1
    }

    /// `E|s|²` per complex symbol.
    pub fn symbol_energy(&self) -> f64 {
        let levels = (2 * self.d) as f64;
        2.0 * (levels * levels - 1.0) / 3.0
    }

    /// Noise std per real dimension: `(actual, loaded)`.
    ///
    /// The SNR is read per antenna: `E‖s‖² / E‖ν_m‖²` with `E‖s‖² = N·W·E|s|²`
    /// and `E‖ν_m‖² = W·σ_C²`, so `σ_C² = N·E|s|²/SNR`.
    pub fn snr_to_sigma(&self) -> (f64, f64) {
        let snr = 10f64.powf(self.snr_db / 10.0);
        let sigma_c2 = self.n as f64 * self.symbol_energy() / snr;
        let actual = (sigma_c2 / 2.0).sqrt();
        (actual, actual + self.sigma0)
    }
}

/// Independent random stream for one trial.
pub fn trial_rng(seed: u64, trial_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_id);
    rng
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

#[derive(Debug, Clone)]
pub struct MultipathChannel<S: Real> {
    m: usize,
    n: usize,
    w: usize,
    taps: Vec<Complex<S>>,
    sub: Vec<CMat<S>>,
}

impl<S: Real> MultipathChannel<S> {
    /// Builds the channel from its impulse responses, laid out
    /// `taps[(l*M + m)*N + n]` for `l < len`; taps beyond `len` are zero.
    pub fn from_taps(m: usize, n: usize, w: usize, taps: Vec<Complex<S>>) -> Self {
        assert_eq!(taps.len() % (m * n), 0, "tap array is not a whole number of M×N blocks");
        let len = taps.len() / (m * n);
        let dft = UnitaryDft::new(w);
        let mut sub = vec![CMat::zeros(m, n); w];
        let mut h = vec![Complex::new(S::zero(), S::zero()); len];
        for mi in 0..m {
            for ni in 0..n {
                for (l, hl) in h.iter_mut().enumerate() {
                    *hl = taps[(l * m + mi) * n + ni];
                }
                for (wi, g) in dft.circulant_eigenvalues(&h).into_iter().enumerate() {
                    sub[wi].set(mi, ni, g);
                }
            }
        }
        Self { m, n, w, taps, sub }
    }

    /// Builds a channel directly from per-subcarrier gains (no taps known).
    pub fn from_subcarriers(sub: Vec<CMat<S>>) -> Self {
        let w = sub.len();
        assert!(w > 0, "need at least one subcarrier");
        let (m, n) = (sub[0].rows(), sub[0].cols());
        assert!(sub.iter().all(|h| h.rows() == m && h.cols() == n));
        Self {
            m,
            n,
            w,
            taps: Vec::new(),
            sub,
        }
    }

    pub fn antennas(&self) -> usize {
        self.m
    }

    pub fn users(&self) -> usize {
        self.n
    }

    pub fn subcarriers(&self) -> usize {
        self.w
    }

    /// Number of stored taps per (antenna, user) link.
    pub fn tap_len(&self) -> usize {
        if self.taps.is_empty() {
            0
        } else {
            self.taps.len() / (self.m * self.n)
        }
    }

    pub fn tap(&self, l: usize, m: usize, n: usize) -> Complex<S> {
        if l >= self.tap_len() {
            return Complex::new(S::zero(), S::zero());
        }
        self.taps[(l * self.m + m) * self.n + n]
    }

    /// Frequency gain of link `(m, n)` on subcarrier `w`; the `w`-th
    /// eigenvalue of the circulant channel matrix.
    pub fn gain(&self, w: usize, m: usize, n: usize) -> Complex<S> {
        self.sub[w].get(m, n)
    }

    /// `Ȟ_w`.
    pub fn subcarrier(&self, w: usize) -> &CMat<S> {
        &self.sub[w]
    }

    pub fn subcarrier_channels(&self) -> &[CMat<S>] {
        &self.sub
    }
}

/// Draws a ULA multipath channel with half-wavelength spacing.
pub fn generate_channel<S: Real, R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> MultipathChannel<S> {
    let (m, n) = (cfg.m, cfg.n);
    let amp = (1.0 / (2.0 * cfg.paths as f64)).sqrt();
    let mut taps = vec![Complex::new(S::zero(), S::zero()); cfg.taps * m * n];
    let mut col = vec![Complex::new(0.0f64, 0.0); m];
    for l in 0..cfg.taps {
        for ni in 0..n {
            col.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            for _ in 0..cfg.paths {
                let alpha = Complex::new(amp * normal(rng), amp * normal(rng));
                let theta = rng.random_range(-PI / 2.0..PI / 2.0);
                let phase = -PI * theta.sin();
                for (mi, c) in col.iter_mut().enumerate() {
                    *c += alpha * Complex::from_polar(1.0, phase * mi as f64);
                }
            }
            for (mi, c) in col.iter().enumerate() {
                taps[(l * m + mi) * n + ni] = Complex::new(S::lit(c.re), S::lit(c.im));
            }
        }
    }
    MultipathChannel::from_taps(m, n, cfg.w, taps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock<S> {
    pub d: usize,
    pub n: usize,
    pub w: usize,
    /// `s[n*W + w]`
    pub s: Vec<Complex<S>>,
}

impl<S: Real> SymbolBlock<S> {
    /// `š_w`
    pub fn subcarrier(&self, w: usize) -> Vec<Complex<S>> {
        (0..self.n).map(|n| self.s[n * self.w + w]).collect()
    }
}

/// Uniform QAM symbols, each real dimension in `{±1, ±3, …, ±(2D−1)}`.
pub fn generate_symbols<S: Real, R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> SymbolBlock<S> {
    let levels = 2 * cfg.d;
    let top = cfg.max_level() as i64;
    let mut pam = || S::lit((2 * rng.random_range(0..levels) as i64 - top) as f64);
    let s = (0..cfg.n * cfg.w)
        .map(|_| {
            let re = pam();
            Complex::new(re, pam())
        })
        .collect();
    SymbolBlock {
        d: cfg.d,
        n: cfg.n,
        w: cfg.w,
        s,
    }
}

/// Noise-free receive signal `z_m = Fᴴ(Σ_n D_{m,n} s_n)`, antenna-major.
pub fn noiseless_receive<S: Real>(ch: &MultipathChannel<S>, s: &[Complex<S>], dft: &UnitaryDft<S>) -> Vec<Complex<S>> {
    let (m, n, w) = (ch.m, ch.n, ch.w);
    assert_eq!(s.len(), n * w, "symbol vector length");
    let mut out = vec![Complex::new(S::zero(), S::zero()); m * w];
    let mut sw = vec![Complex::new(S::zero(), S::zero()); n];
    let mut hw = vec![Complex::new(S::zero(), S::zero()); m];
    for wi in 0..w {
        for (ni, v) in sw.iter_mut().enumerate() {
            *v = s[ni * w + wi];
        }
        ch.sub[wi].mul_vec_into(&sw, &mut hw);
        for (mi, v) in hw.iter().enumerate() {
            out[mi * w + wi] = *v;
        }
    }
    for row in out.chunks_mut(w) {
        dft.inverse(row);
    }
    out
}

/// `r_m = Σ_n H_{m,n} Fᴴ s_n + ν_m` with `ν ~ CN(0, 2σ² I)`.
pub fn transmit<S: Real, R: Rng + ?Sized>(
    ch: &MultipathChannel<S>,
    sym: &SymbolBlock<S>,
    sigma: f64,
    dft: &UnitaryDft<S>,
    rng: &mut R,
) -> Vec<Complex<S>> {
    let mut r = noiseless_receive(ch, &sym.s, dft);
    for v in r.iter_mut() {
        let re = sigma * normal(rng);
        let im = sigma * normal(rng);
        *v += Complex::new(S::lit(re), S::lit(im));
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneBitObservation<S> {
    /// `q[m*W + t]`, entries in `{±1 ± j}`.
    pub q: Vec<Complex<S>>,
    /// Noise std per real dimension assumed by the detectors (after loading).
    pub sigma: S,
    /// Noise std actually used to generate the data.
    pub sigma_actual: S,
}

#[inline]
fn sign<S: Real>(x: S) -> S {
    if x < S::zero() {
        -S::one()
    } else {
        S::one()
    }
}

/// `q = sgn(Re r) + j·sgn(Im r)` with `sgn(0) = +1`.
pub fn quantize_one_bit<S: Real>(r: &[Complex<S>], sigma_actual: S, sigma_loaded: S) -> OneBitObservation<S> {
    OneBitObservation {
        q: r.iter().map(|v| Complex::new(sign(v.re), sign(v.im))).collect(),
        sigma: sigma_loaded,
        sigma_actual,
    }
}

/// One full draw: channel, symbols, observation.
#[derive(Debug, Clone)]
pub struct Realization<S: Real> {
    pub channel: MultipathChannel<S>,
    pub symbols: SymbolBlock<S>,
    pub observation: OneBitObservation<S>,
}

/// Draws the channel, symbols and noise of trial `trial_id` from its own
/// stream, in that order.
pub fn realize<S: Real>(cfg: &SystemConfig, trial_id: u64, dft: &UnitaryDft<S>) -> Realization<S> {
    realize_from(cfg, &mut trial_rng(cfg.seed, trial_id), dft)
}

/// [`realize`] on a caller-supplied stream.
pub fn realize_from<S: Real, R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R, dft: &UnitaryDft<S>) -> Realization<S> {
    let channel = generate_channel(cfg, rng);
    let symbols = generate_symbols(cfg, rng);
    let (actual, loaded) = cfg.snr_to_sigma();
    let r = transmit(&channel, &symbols, actual, dft, rng);
    let observation = quantize_one_bit(&r, S::lit(actual), S::lit(loaded));
    Realization {
        channel,
        symbols,
        observation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_examples() {
        let cfg = SystemConfig {
            n: 4,
            snr_db: 10.0,
            sigma0: 0.0,
            ..SystemConfig::desk()
        };
        assert_eq!(cfg.symbol_energy(), 10.0);
        let (actual, loaded) = cfg.snr_to_sigma();
        assert!((actual - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(actual, loaded);
        let loaded3 = SystemConfig { sigma0: 3.0, ..cfg }.snr_to_sigma().1;
        assert!((loaded3 - actual - 3.0).abs() < 1e-15);
    }

    #[test]
    fn quantizer_rules() {
        let r = [Complex::new(0.5, -0.2), Complex::new(-3.0, 0.0)];
        let q = quantize_one_bit(&r, 1.0, 1.0).q;
        assert_eq!(q, vec![Complex::new(1.0, -1.0), Complex::new(-1.0, 1.0)]);
    }

    #[test]
    fn validate_rejects_bad_shapes() {
        assert!(SystemConfig { w: 48, ..SystemConfig::desk() }.validate().is_err());
        assert!(SystemConfig { m: 2, n: 4, ..SystemConfig::desk() }.validate().is_err());
        assert!(SystemConfig { d: 3, ..SystemConfig::desk() }.validate().is_err());
        assert!(SystemConfig::paper_large().validate().is_ok());
    }

    #[test]
    fn symbols_lie_on_the_grid() {
        let cfg = SystemConfig { d: 4, ..SystemConfig::desk() };
        let sym: SymbolBlock<f64> = generate_symbols(&cfg, &mut trial_rng(1, 2));
        for v in &sym.s {
            for x in [v.re, v.im] {
                assert!(x.abs() <= 7.0 && (x as i64).rem_euclid(2) == 1 && x.fract() == 0.0);
            }
        }
    }
}
