mod common;

use common::{instance, random_vec, rel_err, small};
use nalgebra::DMatrix;
use onebit_core::dense::{complex_of, theta_of, DenseProblem};
use onebit_core::linalg::{svd, RMat};
use onebit_core::scalar::norm_sqr;
use onebit_core::{Complex, Penalty, ProblemInstance, C64};
use proptest::prelude::*;

fn to_nalgebra(a: &RMat<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j))
}

fn grad_theta(inst: &ProblemInstance<f64>, s: &[C64]) -> Vec<f64> {
    theta_of(&inst.grad_f(s))
}

#[test]
fn fft_gradient_matches_dense_gradient() {
    for (trial, snr) in [(0, -5.0), (1, 5.0), (2, 20.0)] {
        let cfg = small(4, 2, 8, 4, snr);
        let inst = instance(&cfg, trial, Penalty::gmap(cfg.d));
        let dense = DenseProblem::new(&inst);
        for scale in [0.0, 0.5, 3.0] {
            let s = random_vec(inst.dim(), scale, trial + 10);
            let theta = theta_of(&s);
            let err = rel_err(&grad_theta(&inst, &s), &dense.grad_f(&theta));
            assert!(err <= 1e-8, "trial {trial} scale {scale}: {err:e}");
            let fd = inst.eval_f(&s);
            let fe = dense.eval_f(&theta);
            assert!((fd - fe).abs() <= 1e-10 * fe.abs().max(1.0));
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let cfg = small(4, 2, 8, 4, 10.0);
    let inst = instance(&cfg, 3, Penalty::gmap(cfg.d));
    let s = random_vec(inst.dim(), 1.5, 99);
    let theta = theta_of(&s);
    let g = grad_theta(&inst, &s);
    let h = 1e-6;
    let fd: Vec<f64> = (0..theta.len())
        .map(|i| {
            let mut p = theta.clone();
            let mut m = theta.clone();
            p[i] += h;
            m[i] -= h;
            (inst.eval_f(&complex_of(&p)) - inst.eval_f(&complex_of(&m))) / (2.0 * h)
        })
        .collect();
    let err = rel_err(&g, &fd);
    assert!(err <= 1e-6, "{err:e}");
}

#[test]
fn gradient_and_value_share_one_pass() {
    let cfg = small(4, 2, 8, 4, 0.0);
    let inst = instance(&cfg, 0, Penalty::gmap(cfg.d));
    let s = random_vec(inst.dim(), 1.0, 5);
    let before = inst.transforms();
    inst.eval_and_grad(&s);
    assert_eq!(inst.transforms() - before, 2 * cfg.m);
    inst.eval_f(&s);
    assert_eq!(inst.transforms() - before, 3 * cfg.m);
}

#[test]
fn least_squares_decouples_across_subcarriers() {
    // ½‖r − Hs‖² in the time domain equals Σ_w ½‖ř_w − Ȟ_w š_w‖².
    let cfg = small(4, 2, 8, 4, 5.0);
    let inst = instance(&cfg, 4, Penalty::gmap(cfg.d));
    let dense = DenseProblem::new(&inst);
    for seed in 0..5 {
        let anchor = random_vec(inst.dim(), 2.0, 100 + seed);
        let s = random_vec(inst.dim(), 2.0, 200 + seed);
        let (r_freq, _) = inst.conditional_mean(&anchor, inst.sigma(), false);
        let mut r_time = r_freq.clone();
        for row in r_time.chunks_mut(cfg.w) {
            inst.dft().inverse(row);
        }
        let hs = dense.operator.mul_vec(&s);
        let resid: Vec<C64> = r_time.iter().zip(&hs).map(|(a, b)| a - b).collect();
        let joint = 0.5 * norm_sqr(&resid);

        let bins = inst.split_bins(&r_freq);
        let parts = inst.split_subcarriers(&s);
        let split: f64 = (0..cfg.w)
            .map(|w| {
                let hw = inst.channel().subcarrier(w).mul_vec(&parts[w]);
                let res: Vec<C64> = bins[w].iter().zip(&hw).map(|(a, b)| a - b).collect();
                0.5 * norm_sqr(&res)
            })
            .sum();
        assert!((joint - split).abs() <= 1e-10 * joint, "{joint} vs {split}");
    }
}

#[test]
fn spectral_constants_match_dense_svd() {
    for (trial, taps) in [(0, 4), (1, 1), (2, 8)] {
        let cfg = small(4, 2, 8, taps, 5.0);
        let inst = instance(&cfg, trial, Penalty::gmap(cfg.d));
        let dense = DenseProblem::new(&inst);
        let sv = to_nalgebra(&dense.b).singular_values();
        let max = sv.max();
        let min = sv.min();
        let spec = inst.spectral_info();
        assert!((spec.sigma_max_b - max).abs() <= 1e-8 * max, "trial {trial}");
        assert!((spec.sigma_min_b - min).abs() <= 1e-8 * max, "trial {trial}");
        assert!((spec.lipschitz - max * max).abs() <= 1e-8 * max * max);
        assert!((dense.sigma_max() - max).abs() <= 1e-10 * max);
        assert!((dense.sigma_min() - min).abs() <= 1e-10 * max);
    }
}

#[test]
fn jacobi_svd_agrees_with_nalgebra() {
    let cfg = small(3, 2, 4, 2, 0.0);
    let inst = instance(&cfg, 8, Penalty::gmap(cfg.d));
    let b = DenseProblem::new(&inst).b;
    let ours = svd(&b);
    let mut theirs: Vec<f64> = to_nalgebra(&b).singular_values().iter().copied().collect();
    theirs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    for (a, b) in ours.sigma.iter().zip(&theirs) {
        assert!((a - b).abs() <= 1e-12 * theirs[0]);
    }
    // P = Bᵀ(BBᵀ)†B against nalgebra's pseudo-inverse.
    let nb = to_nalgebra(&b);
    let bbt = &nb * nb.transpose();
    let p_ref = nb.transpose() * bbt.pseudo_inverse(1e-10 * theirs[0] * theirs[0]).unwrap() * &nb;
    let p = ours.row_space_projector(1e-10);
    for i in 0..p.rows() {
        for j in 0..p.cols() {
            assert!((p.get(i, j) - p_ref[(i, j)]).abs() < 1e-8);
        }
    }
}

#[test]
fn objective_is_infinite_outside_the_box() {
    let cfg = small(4, 2, 8, 4, 5.0);
    let inst = instance(&cfg, 0, Penalty::boxed(cfg.d));
    let mut s = inst.zeros();
    assert!(inst.objective(&s).is_finite());
    s[3] = Complex::new(3.0 + 1e-9, 0.0);
    assert_eq!(inst.objective(&s), f64::INFINITY);
    let g = inst.with_penalty(Penalty::gmap(cfg.d));
    assert!(g.objective(&s).is_finite());
}

#[test]
fn f32_objective_tracks_f64() {
    let cfg = small(4, 2, 8, 4, 5.0);
    let real = common::draw(&cfg, 2);
    let dft32 = onebit_core::fft::UnitaryDft::<f32>::new(cfg.w);
    let real32 = onebit_core::model::realize::<f32>(&cfg, 2, &dft32);
    assert_eq!(real.symbols.s.len(), real32.symbols.s.len());
    let inst64 = ProblemInstance::new(real.channel, real.observation, Penalty::gmap(cfg.d), cfg.d).unwrap();
    let inst32 = ProblemInstance::new(real32.channel, real32.observation, Penalty::gmap(cfg.d), cfg.d).unwrap();
    let s = random_vec(inst64.dim(), 1.0, 1);
    let s32: Vec<Complex<f32>> = s.iter().map(|v| Complex::new(v.re as f32, v.im as f32)).collect();
    let a = inst64.eval_f(&s);
    let b = inst32.eval_f(&s32) as f64;
    assert!((a - b).abs() <= 1e-4 * a.abs());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn surrogate_majorizes_f(trial in 0u64..8, seed in 0u64..u64::MAX, scale in 0.1f64..6.0, snr in -10.0f64..25.0) {
        let cfg = small(4, 2, 8, 4, snr);
        let inst = instance(&cfg, trial, Penalty::gmap(cfg.d));
        let s = random_vec(inst.dim(), scale, seed);
        let anchor = random_vec(inst.dim(), scale, seed ^ 0x9e37_79b9);
        prop_assert!(inst.surrogate_gap(&s, &anchor) >= -1e-9);
    }
}
