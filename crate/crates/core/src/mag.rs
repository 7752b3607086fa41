//! Magnitudes in the log2 domain.
//!
//! Term sizes in these series run from far below `f64::MIN_POSITIVE` to far
//! above `f64::MAX`, so error bounds are carried as base-2 logarithms.

use rug::{Complex, Float};

pub const ZERO: f64 = f64::NEG_INFINITY;

pub fn of(x: &Float) -> f64 {
    if x.is_zero() || !x.is_finite() {
        return if x.is_zero() { ZERO } else { f64::INFINITY };
    }
    let (m, e) = x.to_f64_exp();
    m.abs().log2() + e as f64
}

/// log2 of |re| + |im|, an upper bound for |z| within a factor of sqrt 2.
pub fn of_complex(z: &Complex) -> f64 {
    add(of(z.real()), of(z.imag()))
}

pub fn add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == ZERO {
        return hi;
    }
    hi + (1.0 + (lo - hi).exp2()).log2()
}

pub fn sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(ZERO, add)
}

pub fn to_f64(l: f64) -> f64 {
    l.exp2()
}

pub fn from_f64(x: f64) -> f64 {
    if x == 0.0 {
        ZERO
    } else {
        x.abs().log2()
    }
}

/// log2(k!) by direct summation, exact enough for bound bookkeeping.
pub fn log2_factorial(k: u64) -> f64 {
    if k < 2 {
        return 0.0;
    }
    if k < 256 {
        return (2..=k).map(|i| (i as f64).log2()).sum();
    }
    // Stirling with the 1/12k correction: error below 1e-9 bits here.
    let kf = k as f64;
    (kf * kf.ln() - kf + 0.5 * (2.0 * std::f64::consts::PI * kf).ln() + 1.0 / (12.0 * kf))
        / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_matches_plain_arithmetic() {
        let l = add(3.0f64.log2(), 5.0f64.log2());
        assert!((l.exp2() - 8.0).abs() < 1e-12);
        assert_eq!(add(ZERO, 2.0), 2.0);
        assert_eq!(sum([ZERO, ZERO]), ZERO);
    }

    #[test]
    fn magnitude_of_huge_float() {
        let x = Float::with_val(64, Float::i_exp(1, 5000));
        assert!((of(&x) - 5000.0).abs() < 1e-9);
        assert_eq!(of(&Float::new(64)), ZERO);
    }

    #[test]
    fn stirling_branch_is_continuous() {
        let direct: f64 = (2..=300u64).map(|i| (i as f64).log2()).sum();
        assert!((log2_factorial(300) - direct).abs() < 1e-6);
    }
}
