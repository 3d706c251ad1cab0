use super::{finish, DetectionResult, SolverTrace};
use crate::objective::ProblemInstance;
use crate::scalar::{Complex, Real};

/// Pseudo-inverse truncation for rank-deficient subcarriers.
const PINV_TOL: f64 = 1e-10;

/// Zero-forcing on the one-bit data treated as the received signal:
/// `š_w = Ȟ_w† q̌_w` with `q̌_w` the DFT bins of `q`.
pub fn detect_zf<S: Real>(inst: &ProblemInstance<S>) -> DetectionResult<S> {
    detect_zf_with(inst, &inst.observation().q)
}

/// Zero-forcing applied to an arbitrary antenna-major time-domain signal.
pub fn detect_zf_with<S: Real>(inst: &ProblemInstance<S>, signal: &[Complex<S>]) -> DetectionResult<S> {
    let w = inst.subcarriers();
    let mut bins = signal.to_vec();
    for row in bins.chunks_mut(w) {
        inst.dft().forward(row);
    }
    let parts: Vec<Vec<Complex<S>>> = inst
        .split_bins(&bins)
        .iter()
        .zip(inst.channel().subcarrier_channels())
        .map(|(qw, h)| h.pinv(S::lit(PINV_TOL)).mul_vec(qw))
        .collect();
    let s = inst.merge_subcarriers(&parts);
    finish(inst, s, SolverTrace::default(), true)
}
