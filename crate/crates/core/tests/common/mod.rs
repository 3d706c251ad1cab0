#![allow(dead_code)]

use onebit_core::fft::UnitaryDft;
use onebit_core::model::{realize, Realization};
use onebit_core::{Complex, Penalty, ProblemInstance, SystemConfig, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn small(m: usize, n: usize, w: usize, taps: usize, snr_db: f64) -> SystemConfig {
    SystemConfig {
        m,
        n,
        w,
        taps,
        snr_db,
        ..SystemConfig::desk()
    }
}

pub fn draw(cfg: &SystemConfig, trial: u64) -> Realization<f64> {
    realize(cfg, trial, &UnitaryDft::new(cfg.w))
}

pub fn instance(cfg: &SystemConfig, trial: u64, penalty: Penalty<f64>) -> ProblemInstance<f64> {
    let real = draw(cfg, trial);
    ProblemInstance::new(real.channel, real.observation, penalty, cfg.d).unwrap()
}

pub fn random_vec(len: usize, scale: f64, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| Complex::new(scale * rng.random_range(-1.0..1.0), scale * rng.random_range(-1.0..1.0)))
        .collect()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}
