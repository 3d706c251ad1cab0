use crate::scalar::{Complex, Real};

/// Binary-reflected Gray label of a PAM amplitude in `{±1, …, ±(2D−1)}`.
pub fn gray_label<S: Real>(x: S, d: usize) -> u32 {
    let idx = ((x.as_f64() + (2 * d - 1) as f64) / 2.0).round() as u32;
    idx ^ (idx >> 1)
}

/// `(bit error rate, symbol error rate)` with Gray bits per real dimension.
pub fn compute_ber<S: Real>(s_hard: &[Complex<S>], s_true: &[Complex<S>], d: usize) -> (f64, f64) {
    assert_eq!(s_hard.len(), s_true.len(), "symbol vectors differ in length");
    if s_true.is_empty() {
        return (0.0, 0.0);
    }
    let bits_per_dim = (2 * d).trailing_zeros();
    let mut bit_errors = 0u64;
    let mut symbol_errors = 0u64;
    for (a, b) in s_hard.iter().zip(s_true) {
        let e = (gray_label(a.re, d) ^ gray_label(b.re, d)).count_ones()
            + (gray_label(a.im, d) ^ gray_label(b.im, d)).count_ones();
        bit_errors += u64::from(e);
        symbol_errors += u64::from(a != b);
    }
    let n = s_true.len() as f64;
    (bit_errors as f64 / (n * 2.0 * f64::from(bits_per_dim)), symbol_errors as f64 / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjacent_levels_differ_in_one_bit() {
        for d in [1, 2, 4] {
            let top = (2 * d - 1) as i32;
            let mut x = -top;
            while x < top {
                let a = gray_label(x as f64, d);
                let b = gray_label((x + 2) as f64, d);
                assert_eq!((a ^ b).count_ones(), 1);
                x += 2;
            }
        }
    }

    #[test]
    fn ber_examples() {
        let s = vec![Complex::new(1.0, -3.0), Complex::new(3.0, 1.0)];
        assert_eq!(compute_ber(&s, &s, 2), (0.0, 0.0));
        let off = vec![Complex::new(-1.0, -3.0), Complex::new(3.0, 1.0)];
        assert_eq!(compute_ber(&off, &s, 2), (1.0 / 8.0, 0.5));
        let neg: Vec<_> = s.iter().map(|v| -v).collect();
        assert_eq!(compute_ber(&neg, &s, 2).1, 1.0);
    }
}
