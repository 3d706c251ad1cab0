//! Gaussian pdf, cdf, log-cdf and the inverse Mills ratio `ψ = φ/Φ`.
//!
//! The lower tail is evaluated through the scaled complementary error
//! function `erfcx(x) = exp(x²)·erfc(x)`, so neither `log Φ(z)` nor `ψ(z)`
//! underflow for very negative `z`. Every function is pure and thread-safe.

use crate::scalar::Real;

/// Below this argument `log_cdf` and `mills` switch to the `erfcx` form.
const TAIL_SWITCH: f64 = -5.0;

/// Standard normal density `φ(z)`.
#[inline]
pub fn pdf<S: Real>(z: S) -> S {
    S::lit(0.398_942_280_401_432_7) * (-(z * z) / S::lit(2.0)).exp()
}

/// Standard normal distribution function `Φ(z)`.
#[inline]
pub fn cdf<S: Real>(z: S) -> S {
    (-z / S::SQRT_2()).erfc() / S::lit(2.0)
}

/// `log Φ(z)`, accurate in both tails.
pub fn log_cdf<S: Real>(z: S) -> S {
    if z < S::lit(TAIL_SWITCH) {
        // log Φ(z) = log(erfcx(x)/2) − x², x = −z/√2
        let x = -z / S::SQRT_2();
        (erfcx(x) / S::lit(2.0)).ln() - z * z / S::lit(2.0)
    } else if z > S::zero() {
        (-(z / S::SQRT_2()).erfc() / S::lit(2.0)).ln_1p()
    } else {
        cdf(z).ln()
    }
}

/// Inverse Mills ratio `ψ(z) = φ(z)/Φ(z)`.
///
/// Floored at the smallest positive normal number, so the result stays
/// strictly positive where the true value drops below the representable range
/// (`z ≳ 37.5` in `f64`).
pub fn mills<S: Real>(z: S) -> S {
    let v = if z < S::zero() {
        // ψ(z) = √(2/π) / erfcx(−z/√2)
        S::lit(0.797_884_560_802_865_4) / erfcx(-z / S::SQRT_2())
    } else {
        pdf(z) / cdf(z)
    };
    v.max(S::min_positive_value())
}

/// Scaled complementary error function `erfcx(x) = exp(x²)·erfc(x)`.
///
/// Overflows to `+∞` for `x ≲ −26.6`, where the true value exceeds the
/// floating-point range.
pub fn erfcx<S: Real>(x: S) -> S {
    if x < S::zero() {
        // erfcx(x) = 2·exp(x²) − erfcx(−x)
        return S::lit(2.0) * exp_square(x) - erfcx(-x);
    }
    if x < S::lit(1.25) {
        return exp_square(x) * x.erfc();
    }
    if x < S::lit(28.0) {
        return erfcx_rational(x);
    }
    erfcx_asymptotic(x)
}

/// `exp(x²)` with the rounding error of `x²` folded back in.
#[inline]
fn exp_square<S: Real>(x: S) -> S {
    let hi = x * x;
    let lo = x.mul_add(x, -hi);
    hi.exp() * (S::one() + lo)
}

// Rational approximations of log(x·erfc(x)) + x² + 0.5625 in s = 1/x², taken
// from FreeBSD msun s_erf.c:
//
// Copyright (C) 1993 by Sun Microsystems, Inc. All rights reserved.
//
// Developed at SunPro, a Sun Microsystems, Inc. business.
// Permission to use, copy, modify, and distribute this
// software is freely granted, provided that this notice
// is preserved.

/// [1.25, 1/0.35)
#[allow(clippy::excessive_precision)]
const RA: [f64; 8] = [
    -9.864_944_034_847_148_227_05e-03,
    -6.938_585_727_071_817_643_72e-01,
    -1.055_862_622_532_329_098_14e+01,
    -6.237_533_245_032_600_603_96e+01,
    -1.623_966_694_625_734_703_55e+02,
    -1.846_050_929_067_110_359_94e+02,
    -8.128_743_550_630_659_342_46e+01,
    -9.814_329_344_169_145_485_92e+00,
];
#[allow(clippy::excessive_precision)]
const SA: [f64; 8] = [
    1.965_127_166_743_925_712_92e+01,
    1.376_577_541_435_190_426_00e+02,
    4.345_658_774_752_292_288_21e+02,
    6.453_872_717_332_678_803_36e+02,
    4.290_081_400_275_678_333_86e+02,
    1.086_350_055_417_794_351_34e+02,
    6.570_249_770_319_281_701_35e+00,
    -6.042_441_521_485_809_874_38e-02,
];
/// [1/0.35, 28)
#[allow(clippy::excessive_precision)]
const RB: [f64; 7] = [
    -9.864_942_924_700_099_285_97e-03,
    -7.992_832_376_805_230_065_74e-01,
    -1.775_795_491_775_475_198_89e+01,
    -1.606_363_848_558_219_160_62e+02,
    -6.375_664_433_683_896_277_22e+02,
    -1.025_095_131_611_077_249_54e+03,
    -4.835_191_916_086_513_970_19e+02,
];
#[allow(clippy::excessive_precision)]
const SB: [f64; 7] = [
    3.033_806_074_348_245_829_24e+01,
    3.257_925_129_965_739_188_26e+02,
    1.536_729_586_084_436_959_94e+03,
    3.199_858_219_508_595_539_08e+03,
    2.553_050_406_433_164_425_83e+03,
    4.745_285_412_069_553_672_15e+02,
    -2.244_095_244_658_581_833_62e+01,
];

fn horner<S: Real>(coeffs: &[f64], s: S) -> S {
    coeffs
        .iter()
        .rev()
        .fold(S::zero(), |acc, &c| acc * s + S::lit(c))
}

fn erfcx_rational<S: Real>(x: S) -> S {
    let s = S::one() / (x * x);
    let (r, q) = if x < S::lit(1.0 / 0.35) {
        (horner(&RA, s), S::one() + s * horner(&SA, s))
    } else {
        (horner(&RB, s), S::one() + s * horner(&SB, s))
    };
    (S::lit(-0.5625) + r / q).exp() / x
}

/// Asymptotic series, five correction terms; truncation below 1e-15 for x ≥ 28.
fn erfcx_asymptotic<S: Real>(x: S) -> S {
    let inv2 = S::one() / (x * x * S::lit(2.0));
    // 1 − 1/(2x²) + 3/(2x²)² − 15/(2x²)³ + 105/(2x²)⁴ − 945/(2x²)⁵
    let series = [1.0, -1.0, 3.0, -15.0, 105.0, -945.0];
    let poly = horner(&series, inv2);
    poly / (x * S::PI().sqrt())
}
