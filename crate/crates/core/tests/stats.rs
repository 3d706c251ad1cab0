use onebit_core::stats::{cdf, erfcx, log_cdf, mills, pdf};
use proptest::prelude::*;
use serde_json::Value;

fn reference(name: &str) -> Vec<(f64, f64)> {
    let text = include_str!("data/gauss_reference.json");
    let v: Value = serde_json::from_str(text).unwrap();
    v[name]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (p[0].as_f64().unwrap(), p[1].as_f64().unwrap()))
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

#[test]
fn erfcx_matches_high_precision_table() {
    for (x, want) in reference("erfcx") {
        let got = erfcx(x);
        assert!(rel(got, want) < 1e-13, "erfcx({x}) = {got}, want {want}");
    }
}

#[test]
fn cdf_matches_high_precision_table() {
    for (z, want) in reference("cdf") {
        let got = cdf(z);
        assert!(rel(got, want) < 1e-13, "cdf({z}) = {got}, want {want}");
    }
}

#[test]
fn log_cdf_matches_high_precision_table() {
    for (z, want) in reference("log_cdf") {
        let got = log_cdf(z);
        let err = if want.abs() > 1.0 { rel(got, want) } else { (got - want).abs() };
        assert!(err < 1e-13, "log_cdf({z}) = {got}, want {want}");
    }
}

#[test]
fn mills_matches_high_precision_table() {
    for (z, want) in reference("mills") {
        let got = mills(z);
        assert!(rel(got, want) < 1e-12, "mills({z}) = {got}, want {want}");
    }
}

#[test]
fn mills_far_left_tail_follows_asymptote() {
    // ψ(z) ≈ −z − 1/z + 2/z³ as z → −∞.
    let z: f64 = -200.0;
    let asym = -z - 1.0 / z + 2.0 / z.powi(3);
    let got = mills(z);
    assert!(got.is_finite());
    assert!(rel(got, asym) < 1e-6);
    assert!(rel(got, -z) < 1e-4);
}

#[test]
fn extreme_arguments_stay_finite() {
    for z in [-1e300f64, -1e150, -1e8, -40.0, 0.0, 40.0, 1e8, 1e300] {
        assert!(mills(z).is_finite() && mills(z) >= 0.0, "mills({z})");
        // log Φ(z) ≈ −z²/2 leaves the f64 range below about −1.8e154.
        if z > -1e154 {
            assert!(log_cdf(z).is_finite() && log_cdf(z) <= 0.0, "log_cdf({z})");
        }
    }
    assert!(mills(-1e300) > 0.0);
}

#[test]
fn pdf_is_derivative_of_cdf() {
    for z in [-3.0f64, -0.7, 0.0, 1.1, 2.5] {
        let h = 1e-5;
        let fd = (cdf(z + h) - cdf(z - h)) / (2.0 * h);
        assert!((fd - pdf(z)).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn mills_is_positive_and_above_minus_z(z in -60.0f64..30.0) {
        let p = mills(z);
        prop_assert!(p > 0.0);
        prop_assert!(p > -z);
    }

    #[test]
    fn mills_is_one_lipschitz_and_decreasing(a in -60.0f64..30.0, b in -60.0f64..30.0) {
        prop_assume!(a != b);
        let (pa, pb) = (mills(a), mills(b));
        prop_assert!((pa - pb).abs() <= (a - b).abs() * (1.0 + 1e-12));
        if a < b {
            prop_assert!(pa >= pb);
        }
    }

    #[test]
    fn mills_is_derivative_of_log_cdf(z in -30.0f64..8.0) {
        let h = 1e-5 * (1.0 + z.abs());
        let fd = (log_cdf(z + h) - log_cdf(z - h)) / (2.0 * h);
        prop_assert!((fd - mills(z)).abs() <= 1e-6 * (1.0 + mills(z)));
    }

    #[test]
    fn f32_tracks_f64(z in -30.0f32..8.0) {
        let (a, b) = (mills(z) as f64, mills(z as f64));
        prop_assert!((a - b).abs() <= 1e-5 * (1.0 + b));
    }
}
