//! Forward pass of the unfolded inexact-EM network and its parameters.
//!
//! Each layer is one E-step at the current iterate, one gradient step on
//! the per-subcarrier M-step objective from the extrapolated point, and a
//! multilevel sigmoid in place of the proximal map.

use crate::error::{Error, Result};
use crate::objective::ProblemInstance;
use crate::scalar::{Complex, Real};
use crate::solvers::{finish, DetectionResult, IterationRecord, MStep, SolverTrace};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

/// Layers in the default network.
pub const DEFAULT_LAYERS: usize = 20;

/// Per-layer scalars of the unfolded network. Layer `k` (zero-based) uses
/// `alpha[k]` as the extrapolation weight applied after it, `beta[k]` as the
/// offset to the noise std in the E-step scale, `gamma[k]` as the sigmoid
/// sharpness and `eta[k]` as the step size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiemParams {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "D")]
    pub d: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub eta: Vec<f64>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

impl DiemParams {
    /// Untrained baseline: `α = β = 0`, `γ = 2`, `η = 1/max_w σ_max(Ȟ_w)²`.
    pub fn baseline(k: usize, d: usize, eta: f64) -> Self {
        Self {
            k,
            d,
            alpha: vec![0.0; k],
            beta: vec![0.0; k],
            gamma: vec![2.0; k],
            eta: vec![eta; k],
            meta: serde_json::json!({ "source": "default" }),
        }
    }

    /// [`DiemParams::baseline`] with `K = 20` and the step size of `inst`.
    pub fn default_for<S: Real>(inst: &ProblemInstance<S>) -> Self {
        let gain = inst.spectral_info().max_channel_gain().as_f64();
        Self::baseline(DEFAULT_LAYERS, inst.d(), 1.0 / (gain * gain))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", &self.alpha), ("beta", &self.beta), ("gamma", &self.gamma), ("eta", &self.eta)] {
            if v.len() != self.k {
                return Err(Error::Params(format!("{name} has {} entries, K = {}", v.len(), self.k)));
            }
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::Params(format!("{name}[{i}] is not finite")));
            }
        }
        for (name, v) in [("gamma", &self.gamma), ("eta", &self.eta)] {
            if let Some(i) = v.iter().position(|&x| x <= 0.0) {
                return Err(Error::Params(format!("{name}[{i}] = {} must be positive", v[i])));
            }
        }
        if ![1, 2, 4].contains(&self.d) {
            return Err(Error::Params(format!("D = {} not in {{1, 2, 4}}", self.d)));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text).map_err(|e| Error::Params(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Params(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::dataset::write_atomic(path.as_ref(), self.to_json().as_bytes())?;
        Ok(())
    }
}

/// `Ω_γ(x) = Σ_{μ∈{0,±2,…,±2(D−1)}} ϱ(γ(x−μ))` with `ϱ(t) = 2/(1+e^{−t}) − 1`.
pub fn multilevel_sigmoid<S: Real>(x: S, gamma: S, d: usize) -> S {
    // ϱ(t) = tanh(t/2), which avoids overflow of e^{−t}.
    let half = gamma / S::lit(2.0);
    let mut acc = (half * x).tanh();
    for i in 1..d {
        let mu = S::of_usize(2 * i);
        acc += (half * (x - mu)).tanh() + (half * (x + mu)).tanh();
    }
    acc
}

/// Runs the `K` layers from `s⁰ = 0` and applies the hard decision.
pub fn diem_forward<S: Real>(inst: &ProblemInstance<S>, params: &DiemParams) -> Result<DetectionResult<S>> {
    params.validate()?;
    if params.d != inst.d() {
        return Err(Error::Params(format!(
            "parameters were trained for D = {}, instance has D = {}",
            params.d,
            inst.d()
        )));
    }
    let start = Instant::now();
    let sigma = inst.sigma();
    let mstep = MStep::new(inst, None);
    let d = inst.d();
    let mut trace = SolverTrace::default();
    let mut s = inst.zeros();
    let mut s_ex = inst.split_subcarriers(&s);
    for k in 0..params.k {
        let (gamma, eta) = (S::lit(params.gamma[k]), S::lit(params.eta[k]));
        let (r_freq, _) = inst.conditional_mean(&s, sigma + S::lit(params.beta[k]), false);
        let rhs = mstep.rhs(inst, &r_freq);
        let prev = inst.split_subcarriers(&s);
        let mut next = Vec::with_capacity(rhs.len());
        for ((g, b), x) in mstep.grams().iter().zip(&rhs).zip(&s_ex) {
            let gx = g.mul_vec(x);
            let layer: Vec<Complex<S>> = x
                .iter()
                .zip(gx.iter().zip(b))
                .map(|(xi, (gi, bi))| {
                    let u = xi - (gi - bi).scale(eta);
                    Complex::new(multilevel_sigmoid(u.re, gamma, d), multilevel_sigmoid(u.im, gamma, d))
                })
                .collect();
            next.push(layer);
        }
        let alpha = S::lit(params.alpha[k]);
        for ((e, a), p) in s_ex.iter_mut().zip(&next).zip(&prev) {
            for ((ei, ai), pi) in e.iter_mut().zip(a).zip(p) {
                *ei = ai + (ai - pi).scale(alpha);
            }
        }
        let s_new = inst.merge_subcarriers(&next);
        let step_norm = crate::scalar::dist(&s_new, &s).as_f64();
        s = s_new;
        trace.iterations.push(IterationRecord {
            step_norm,
            inner_iters: 1,
            certificate: 0.0,
            eps: 0.0,
            fft_count: inst.transforms(),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(finish(inst, s, trace, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_examples() {
        assert_eq!(multilevel_sigmoid(0.0, 2.0, 2), 0.0);
        assert!((multilevel_sigmoid(1.0f64, 100.0, 2) - 1.0).abs() < 1e-12);
        assert!((multilevel_sigmoid(3.5f64, 100.0, 2) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn params_validation() {
        let mut p = DiemParams::baseline(4, 2, 0.1);
        assert!(p.validate().is_ok());
        p.gamma[3] = -1.0;
        assert!(p.validate().is_err());
        let mut p = DiemParams::baseline(4, 2, 0.1);
        p.eta.pop();
        assert!(p.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = DiemParams::baseline(3, 2, 0.25);
        assert_eq!(DiemParams::from_json(&p.to_json()).unwrap(), p);
    }
}
