//! One test per acceptance criterion. Each prints a `[PASS]`/`[FAIL]` line
//! to stderr (uncaptured) and then asserts.

mod common;

use common::{instance, random_vec, rel_err, small};
use nalgebra::DMatrix;
use onebit_core::dense::{complex_of, theta_of, DenseProblem};
use onebit_core::diem::{diem_forward, multilevel_sigmoid, DiemParams};
use onebit_core::harness::{check_bounds, run_sweep, Detector, RunSettings, SweepResult};
use onebit_core::scalar::norm_sqr;
use onebit_core::solvers::{detect_em, detect_pg_box, hard_decision_scalar, SolverOptions};
use onebit_core::stats::mills;
use onebit_core::{Penalty, SystemConfig, C64};
use std::io::Write;
use std::sync::OnceLock;

fn verdict(n: u32, what: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[{tag}] criterion {n}: {what} | {detail}");
    assert!(ok, "criterion {n} failed: {detail}");
}

const ITER_TABLE_SNRS: [f64; 6] = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0];
const ITER_TABLE: [(f64, [f64; 6]); 2] = [
    (0.0, [22.7, 55.9, 140.0, 292.1, 476.1, 594.6]),
    (3.0, [20.9, 46.7, 97.5, 165.4, 240.0, 296.0]),
];
const ITER_TABLE_TRIALS: usize = 50;
const ITER_TABLE_REL_TOL: f64 = 0.20;

#[test]
fn criterion_1_gmap_em_iteration_counts() {
    let mut ok = true;
    let mut detail = Vec::new();
    for (sigma0, want) in ITER_TABLE {
        let cfg = SystemConfig {
            sigma0,
            ..SystemConfig::paper_small()
        };
        let res = run_sweep(&cfg, &ITER_TABLE_SNRS, &[Detector::EmGmap], ITER_TABLE_TRIALS, 0, &RunSettings::default())
            .unwrap();
        let got: Vec<f64> = res.aggregates.iter().map(|a| a.outer_iters.mean).collect();
        let failures: usize = res.aggregates.iter().map(|a| a.failures).sum();
        let within = got.iter().zip(&want).all(|(g, w)| (g - w).abs() <= ITER_TABLE_REL_TOL * w);
        let monotone = got.windows(2).all(|p| p[1] > p[0]);
        ok &= within && monotone && failures == 0;
        let cells: Vec<String> = got.iter().zip(&want).map(|(g, w)| format!("{g:.1}/{w}")).collect();
        detail.push(format!("σ0={sigma0}: {} monotone={monotone}", cells.join(" ")));
    }
    verdict(
        1,
        "GMAP-EM mean outer iterations at (128,10,256) within ±20% and increasing in SNR",
        ok,
        &detail.join("; "),
    );
}

const BOUND_INSTANCES: u64 = 20;

#[test]
fn criterion_2_convergence_bounds() {
    let cfg = SystemConfig::bounds_small();
    let mut failed = Vec::new();
    let mut nonvacuous = 0;
    for t in 0..BOUND_INSTANCES {
        let rep = check_bounds(&cfg, t).unwrap();
        nonvacuous += rep.lower_bounds.iter().filter(|l| l.k_reached.is_some() && l.lower_bound > 1.0).count();
        if !rep.all_satisfied {
            let mut why: Vec<String> = rep.curves.iter().filter(|c| !c.all_satisfied).map(|c| c.prop.clone()).collect();
            why.extend(rep.lower_bounds.iter().filter(|l| !l.satisfied).map(|l| l.prop.clone()));
            if !rep.lipschitz.satisfied {
                why.push("prop1-lipschitz".into());
            }
            if !rep.reference_converged {
                why.push("reference".into());
            }
            failed.push(format!("#{t}: {}", why.join(",")));
        }
    }
    verdict(
        2,
        "rate bounds, inexact bounds, iteration lower bounds and Lipschitz sampling on 20 instances (tol 1+1e-6)",
        failed.is_empty(),
        &format!(
            "{} of {BOUND_INSTANCES} instances fully satisfied, {nonvacuous} lower-bound checks above k=1; failures: {failed:?}",
            BOUND_INSTANCES as usize - failed.len()
        ),
    );
}

const GRAD_DENSE_TOL: f64 = 1e-8;
const GRAD_FD_TOL: f64 = 1e-6;

#[test]
fn criterion_3_gradient_oracle() {
    let mut worst_dense: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    for trial in 0..5 {
        let cfg = small(4, 2, 8, 4, -5.0 + 5.0 * trial as f64);
        let inst = instance(&cfg, trial, Penalty::gmap(cfg.d));
        let dense = DenseProblem::new(&inst);
        for seed in 0..4 {
            let s = random_vec(inst.dim(), 0.5 + seed as f64, 31 * trial + seed);
            let theta = theta_of(&s);
            let g = theta_of(&inst.grad_f(&s));
            worst_dense = worst_dense.max(rel_err(&g, &dense.grad_f(&theta)));
            let h = 1e-6;
            let fd: Vec<f64> = (0..theta.len())
                .map(|i| {
                    let (mut p, mut m) = (theta.clone(), theta.clone());
                    p[i] += h;
                    m[i] -= h;
                    (inst.eval_f(&complex_of(&p)) - inst.eval_f(&complex_of(&m))) / (2.0 * h)
                })
                .collect();
            worst_fd = worst_fd.max(rel_err(&g, &fd));
        }
    }
    verdict(
        3,
        "FFT gradient vs dense −Bᵀψ(Bθ) and vs central differences",
        worst_dense <= GRAD_DENSE_TOL && worst_fd <= GRAD_FD_TOL,
        &format!("dense rel err {worst_dense:.2e} (≤ {GRAD_DENSE_TOL:e}), finite-difference rel err {worst_fd:.2e} (≤ {GRAD_FD_TOL:e})"),
    );
}

const MAJORIZATION_PAIRS: u64 = 1000;
const MAJORIZATION_TOL: f64 = 1e-9;
const DESCENT_TOL: f64 = 1e-9;

#[test]
fn criterion_4_majorization_and_descent() {
    let mut worst_gap = f64::INFINITY;
    for i in 0..MAJORIZATION_PAIRS {
        let cfg = small(4, 2, 8, 4, -10.0 + (i % 7) as f64 * 5.0);
        let inst = instance(&cfg, i % 10, Penalty::gmap(cfg.d));
        let scale = 0.2 + (i % 13) as f64 * 0.4;
        let s = random_vec(inst.dim(), scale, 2 * i);
        let anchor = random_vec(inst.dim(), scale, 2 * i + 1);
        worst_gap = worst_gap.min(inst.surrogate_gap(&s, &anchor));
    }
    let mut worst_rise: f64 = 0.0;
    let mut traces = 0;
    for trial in 0..6 {
        for snr in [-5.0, 5.0, 15.0] {
            let cfg = small(8, 2, 16, 4, snr);
            let gmap = instance(&cfg, trial, Penalty::gmap(cfg.d));
            let boxed = gmap.with_penalty(Penalty::boxed(cfg.d));
            for obj in [
                detect_em(&gmap, &SolverOptions::em()).trace.objective,
                detect_em(&boxed, &SolverOptions::box_em(cfg.n, cfg.w)).trace.objective,
                detect_pg_box(&boxed, &SolverOptions::pg()).trace.objective,
            ] {
                traces += 1;
                for p in obj.windows(2) {
                    worst_rise = worst_rise.max((p[1] - p[0]) / p[0].abs().max(1.0));
                }
            }
        }
    }
    verdict(
        4,
        "surrogate majorizes f on 1000 pairs; non-accelerated traces non-increasing",
        worst_gap >= -MAJORIZATION_TOL && worst_rise <= DESCENT_TOL,
        &format!("min surrogate gap {worst_gap:.3e}, max relative rise {worst_rise:.3e} over {traces} traces"),
    );
}

const DECOUPLING_TOL: f64 = 1e-10;
const SPECTRAL_TOL: f64 = 1e-8;

#[test]
fn criterion_5_subcarrier_decoupling() {
    let mut worst_split: f64 = 0.0;
    let mut worst_spec: f64 = 0.0;
    for trial in 0..5 {
        let cfg = small(4, 2, 8, 1 + trial as usize, 5.0);
        let inst = instance(&cfg, trial, Penalty::gmap(cfg.d));
        let dense = DenseProblem::new(&inst);
        for seed in 0..4 {
            let anchor = random_vec(inst.dim(), 2.0, 100 * trial + seed);
            let s = random_vec(inst.dim(), 2.0, 100 * trial + seed + 50);
            let (r_freq, _) = inst.conditional_mean(&anchor, inst.sigma(), false);
            let mut r_time = r_freq.clone();
            for row in r_time.chunks_mut(cfg.w) {
                inst.dft().inverse(row);
            }
            let hs = dense.operator.mul_vec(&s);
            let res: Vec<C64> = r_time.iter().zip(&hs).map(|(a, b)| a - b).collect();
            let joint = 0.5 * norm_sqr(&res);
            let bins = inst.split_bins(&r_freq);
            let parts = inst.split_subcarriers(&s);
            let split: f64 = (0..cfg.w)
                .map(|w| {
                    let hw = inst.channel().subcarrier(w).mul_vec(&parts[w]);
                    let res: Vec<C64> = bins[w].iter().zip(&hw).map(|(a, b)| a - b).collect();
                    0.5 * norm_sqr(&res)
                })
                .sum();
            worst_split = worst_split.max((joint - split).abs() / joint);
        }
        let b = &dense.b;
        let sv = DMatrix::from_fn(b.rows(), b.cols(), |i, j| b.get(i, j)).singular_values();
        let spec = inst.spectral_info();
        let (max, min) = (sv.max(), sv.min());
        worst_spec = worst_spec
            .max((spec.sigma_max_b - max).abs() / max)
            .max((spec.sigma_min_b - min).abs() / max);
    }
    verdict(
        5,
        "joint vs per-subcarrier least squares; per-subcarrier singular values vs dense SVD of B",
        worst_split <= DECOUPLING_TOL && worst_spec <= SPECTRAL_TOL,
        &format!("objective rel diff {worst_split:.2e} (≤ {DECOUPLING_TOL:e}), spectral rel diff {worst_spec:.2e} (≤ {SPECTRAL_TOL:e})"),
    );
}

const DESK_TRIALS: usize = 200;
const DESK_SNRS: [f64; 4] = [-5.0, 0.0, 5.0, 10.0];

fn desk_sweep() -> &'static SweepResult {
    static SWEEP: OnceLock<SweepResult> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let dets = [Detector::Zf, Detector::EmGmap, Detector::AemGmap, Detector::EmBox, Detector::AiemBox];
        run_sweep(&SystemConfig::desk(), &DESK_SNRS, &dets, DESK_TRIALS, 0, &RunSettings::default()).unwrap()
    })
}

#[test]
fn criterion_6_acceleration_reduces_iterations() {
    let sweep = desk_sweep();
    let mut ok = true;
    let mut detail = Vec::new();
    for snr in DESK_SNRS {
        let it = |d: &str| sweep.cell(d, snr).unwrap().outer_iters.mean;
        let (em, aem, bem, aiem) = (it("em-gmap"), it("aem-gmap"), it("em-box"), it("aiem-box"));
        let pass = aem < em && aiem < bem;
        ok &= pass;
        detail.push(format!(
            "{snr} dB: gmap {aem:.1}<{em:.1} {}, box {aiem:.1}<{bem:.1} {}",
            aem < em,
            aiem < bem
        ));
    }
    verdict(
        6,
        "accelerated variants need fewer outer iterations at (32,4,64), 200 trials",
        ok,
        &detail.join("; "),
    );
}

#[test]
fn criterion_7_detection_ordering() {
    let sweep = desk_sweep();
    let ber = |d: &str| sweep.cell(d, 10.0).unwrap().ber;
    let (zf, aiem, em, aem) = (ber("zf"), ber("aiem-box"), ber("em-gmap"), ber("aem-gmap"));
    let failures: usize = sweep.aggregates.iter().map(|a| a.failures).sum();
    verdict(
        7,
        "at 10 dB: BER(BOX-AIEM) < BER(ZF); GMAP-AEM and GMAP-EM BER CIs overlap",
        aiem.mean < zf.mean && aem.overlaps(&em) && failures == 0,
        &format!(
            "zf {:.4}±{:.4}, aiem-box {:.4}±{:.4}, em-gmap {:.4}±{:.4}, aem-gmap {:.4}±{:.4}",
            zf.mean, zf.ci95, aiem.mean, aiem.ci95, em.mean, em.ci95, aem.mean, aem.ci95
        ),
    );
}

const ASYMPTOTE_TOL: f64 = 1e-6;

#[test]
fn criterion_8_mills_ratio_numerics() {
    let grid: Vec<f64> = (0..=200_000).map(|i| -200.0 + i as f64 * 0.0012).collect();
    let vals: Vec<f64> = grid.iter().map(|&z| mills(z)).collect();
    let positive = vals.iter().all(|&p| p > 0.0 && p.is_finite());
    let above = grid.iter().zip(&vals).all(|(z, p)| *p > -z);
    let mut lip: f64 = 0.0;
    for i in 1..grid.len() {
        lip = lip.max((vals[i] - vals[i - 1]).abs() / (grid[i] - grid[i - 1]));
    }
    let z: f64 = -200.0;
    let asym = -z - 1.0 / z + 2.0 / z.powi(3);
    let far = mills(z);
    let far_err = ((far - asym) / asym).abs();
    verdict(
        8,
        "ψ positive, ψ(z) > −z, 1-Lipschitz, finite at −200 and on its asymptote",
        positive && above && lip <= 1.0 + 1e-9 && far.is_finite() && far_err <= ASYMPTOTE_TOL,
        &format!("max slope {lip:.9}, ψ(−200) = {far}, asymptote rel err {far_err:.2e}"),
    );
}

#[test]
fn criterion_9_unfolded_network_structure() {
    let mut ok = true;
    let mut notes = Vec::new();
    let grid: Vec<f64> = (-4000..=4000).map(|i| i as f64 * 0.0025).collect();
    for d in 1..=4 {
        let top = (2 * d - 1) as f64;
        for gamma in [0.5, 2.0, 20.0, 1e3] {
            let ys: Vec<f64> = grid.iter().map(|&x| multilevel_sigmoid(x, gamma, d)).collect();
            let odd = grid.iter().zip(&ys).all(|(x, y)| (multilevel_sigmoid(-x, gamma, d) + y).abs() <= 1e-12);
            let bounded = ys.iter().all(|y| y.abs() <= top)
                && grid
                    .iter()
                    .zip(&ys)
                    .filter(|(x, _)| gamma * (x.abs() - (top - 1.0)) < 30.0)
                    .all(|(_, y)| y.abs() < top);
            let monotone = ys.windows(2).all(|p| p[1] - p[0] >= -1e-12);
            ok &= odd && bounded && monotone;
        }
        let limit = grid
            .iter()
            .filter(|x| (*x - (*x / 2.0).round() * 2.0).abs() >= 0.05)
            .all(|&x| (multilevel_sigmoid(x, 1e3, d) - hard_decision_scalar(x, d)).abs() < 1e-9);
        ok &= limit;
    }
    notes.push(format!("sigmoid properties {ok}"));

    let cfg = small(8, 2, 16, 4, 10.0);
    let inst = instance(&cfg, 0, Penalty::boxed(cfg.d));
    let p = DiemParams::default_for(&inst);
    let a = diem_forward(&inst, &p).unwrap();
    let b = diem_forward(&instance(&cfg, 0, Penalty::boxed(cfg.d)), &p).unwrap();
    let same = a.s_soft == b.s_soft && a.s_hard == b.s_hard;
    let per_layer = a
        .trace
        .iterations
        .iter()
        .enumerate()
        .all(|(k, it)| it.fft_count == 2 * cfg.m * (k + 1));
    let layers = a.trace.outer_iters() == p.k;
    notes.push(format!("deterministic {same}, {} layers, 2M transforms per layer {per_layer}", a.trace.outer_iters()));
    verdict(
        9,
        "multilevel sigmoid odd/bounded/monotone/limit; forward pass deterministic; transform count per layer",
        ok && same && per_layer && layers,
        &notes.join(", "),
    );
}
