//! Bernoulli numbers and the zeta-derived constants the series consume.

mod bernoulli;
pub(crate) mod em;
mod table;

pub use bernoulli::{bernoulli, even_bernoulli};
pub use table::{cache_file_name, OffsetValues, ZetaTable};
pub(crate) use table::{shifted_values, zeta_derivative_even};

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float, Rational};

use crate::error::{Error, Result};
use crate::mag;
use crate::oracle::PrimeSource;

/// A complex parameter given in machine precision (shifts, exponents).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Shift {
    pub re: f64,
    pub im: f64,
}

impl Shift {
    pub fn real(re: f64) -> Shift {
        Shift { re, im: 0.0 }
    }

    pub fn new(re: f64, im: f64) -> Shift {
        Shift { re, im }
    }

    pub fn is_real(&self) -> bool {
        self.im == 0.0
    }

    pub fn as_integer(&self) -> Option<i64> {
        (self.is_real() && self.re.fract() == 0.0 && self.re.abs() < 1e15).then(|| self.re as i64)
    }

    pub fn to_complex(self, prec: u32) -> Complex {
        Complex::with_val(prec, (self.re, self.im))
    }
}

impl From<f64> for Shift {
    fn from(re: f64) -> Shift {
        Shift::real(re)
    }
}

impl std::fmt::Display for Shift {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.im == 0.0 {
            write!(f, "{}", self.re)
        } else {
            write!(f, "{}{:+}i", self.re, self.im)
        }
    }
}

/// zeta(2j) from the Bernoulli closed form; zeta(0) = -1/2.
pub fn zeta_even(j: usize, prec: u32) -> Float {
    if j == 0 {
        return Float::with_val(prec, -0.5);
    }
    let wp = prec + 32 + (j as f64).log2().ceil() as u32;
    let b = &even_bernoulli(j)[j];
    let two_pi = Float::with_val(wp, Constant::Pi) * 2u32;
    let num = Float::with_val(wp, two_pi.pow(2 * j as u32)) * Float::with_val(wp, b).abs();
    let fact = Float::with_val(wp, rug::Integer::from(rug::Integer::factorial(2 * j as u32)));
    Float::with_val(prec, num / (fact * 2u32))
}

pub fn log_zeta_even(j: usize, prec: u32) -> Result<Float> {
    if j == 0 {
        return Err(Error::domain(
            "log zeta(0) is not real (zeta(0) = -1/2); the j = 0 term is skipped, \
             which leaves integer arguments unchanged",
        ));
    }
    let z = zeta_even(j, prec + 16);
    // zeta(2j) - 1 directly keeps the logarithm accurate when it is tiny.
    let zm1 = Float::with_val(prec + 16, &z - 1u32);
    Ok(Float::with_val(prec, zm1.ln_1p()))
}

/// Analytically continued zeta(s).
pub fn zeta(s: &Complex, prec: u32) -> Result<Complex> {
    if s.imag().is_zero() {
        if let Some(k) = exact_integer(s.real()) {
            return zeta_at_integer(k, prec).map(|f| Complex::with_val(prec, (f, 0)));
        }
    }
    let v = em::progression(s, 1, 0, prec + 8)?;
    let jet = v.into_iter().next().flatten().ok_or(Error::Pole)?;
    Ok(Complex::with_val(prec, &jet.coeffs[0]))
}

fn exact_integer(x: &Float) -> Option<i64> {
    if x.is_integer() && x.clone().abs() < 1e15 {
        x.to_integer().and_then(|i| i.to_i64())
    } else {
        None
    }
}

/// zeta at an integer: closed forms at even integers and negative odd ones.
pub(crate) fn zeta_at_integer(k: i64, prec: u32) -> Result<Float> {
    match k {
        1 => Err(Error::Pole),
        k if k >= 0 && k % 2 == 0 => Ok(zeta_even((k / 2) as usize, prec)),
        k if k < 0 && k % 2 == 0 => Ok(Float::new(prec)),
        k if k < 0 => {
            // zeta(1-2m) = -B_2m / 2m
            let m = ((1 - k) / 2) as usize;
            let b = &even_bernoulli(m)[m];
            let r = Rational::from(-b.clone() / (2 * m as u32));
            Ok(Float::with_val(prec, &r))
        }
        k => {
            let v = em::progression(&Complex::with_val(prec + 8, (k, 0)), 1, 0, prec + 8)?;
            let jet = v.into_iter().next().flatten().ok_or(Error::Pole)?;
            Ok(Float::with_val(prec, jet.coeffs[0].real()))
        }
    }
}

/// k-th derivative of zeta(s) by trapezoidal quadrature of the Cauchy
/// integral on |z - s| = r, r = min(1/2, |s-1|/2). The pole is subtracted
/// before integrating and its derivative added back exactly.
pub fn zeta_derivative(s: &Complex, k: u32, prec: u32) -> Result<Complex> {
    if k == 0 {
        return zeta(s, prec);
    }
    let dist = Complex::with_val(64, s - 1u32).abs().real().to_f64();
    if dist == 0.0 {
        return Err(Error::domain("zeta_derivative: the pole s = 1 lies inside the circle"));
    }
    let r = (dist / 2.0).min(0.5);
    let kf = Float::with_val(prec, rug::Integer::from(rug::Integer::factorial(k)));
    let wp = prec + 48 + (k as f64 * (1.0 / r).log2()).ceil() as u32 + mag::log2_factorial(k as u64).ceil() as u32;
    let sw = Complex::with_val(wp, s);
    let rad = Float::with_val(wp, r);
    let two_pi = Float::with_val(wp, Constant::Pi) * 2u32;

    // g(z) = zeta(z) - 1/(z-1), sampled at M points.
    let sample = |m: usize, count: usize| -> Result<Complex> {
        let theta = Float::with_val(wp, &two_pi * m as u32) / count as u32;
        let (sn, cs) = theta.sin_cos(Float::new(wp));
        let z = Complex::with_val(wp, &sw + Complex::with_val(wp, (cs * &rad, sn * &rad)));
        let zeta_z = {
            let v = em::progression(&z, 1, 0, wp)?;
            v.into_iter().next().flatten().ok_or(Error::Pole)?.coeffs.remove(0)
        };
        let pole = Complex::with_val(wp, Complex::with_val(wp, &z - 1u32).recip_ref());
        Ok(Complex::with_val(wp, zeta_z - pole))
    };
    let weight = |m: usize, count: usize| -> Complex {
        let turns = (m as u64 * k as u64 % count as u64) as u32;
        let theta = Float::with_val(wp, &two_pi * turns) / count as u32;
        let (sn, cs) = theta.sin_cos(Float::new(wp));
        Complex::with_val(wp, (cs, -sn))
    };

    let mut count = 16usize;
    let mut samples: Vec<Complex> = (0..count).map(|m| sample(m, count)).collect::<Result<_>>()?;
    let estimate = |samples: &[Complex]| -> Complex {
        let n = samples.len();
        let mut acc = Complex::new(wp);
        for (m, g) in samples.iter().enumerate() {
            acc += Complex::with_val(wp, g * weight(m, n));
        }
        acc / n as u32 / Float::with_val(wp, rad.clone().pow(k))
    };
    let mut prev = estimate(&samples);
    let tol = 16.0 - prec as f64;
    loop {
        let next_count = 2 * count;
        if next_count > 1 << 14 {
            return Err(Error::LossOfAccuracy {
                s: s.to_string(),
                reason: "Cauchy quadrature did not settle".into(),
            });
        }
        let mut merged = Vec::with_capacity(next_count);
        for m in 0..next_count {
            if m % 2 == 0 {
                merged.push(samples[m / 2].clone());
            } else {
                merged.push(sample(m, next_count)?);
            }
        }
        samples = merged;
        count = next_count;
        let cur = estimate(&samples);
        let diff = Complex::with_val(wp, &cur - &prev);
        prev = cur;
        if mag::of_complex(&diff) + mag::log2_factorial(k as u64) < tol - 4.0 {
            break;
        }
    }
    let mut d = Complex::with_val(wp, &prev * &kf);
    // derivative of 1/(z-1): (-1)^k k! / (s-1)^{k+1}
    let pole = Complex::with_val(wp, Complex::with_val(wp, &sw - 1u32).pow(k + 1)).recip() * &kf;
    if k % 2 == 0 {
        d += pole;
    } else {
        d -= pole;
    }
    Ok(Complex::with_val(prec, d))
}

/// Tail bound for sum_{n>K} p_n n^{-s}, from p_n < 2 n log n (n >= 6):
/// integral_K^inf 2 x^{1-s} ln x dx.
pub fn prime_zeta_tail_bound(k: u64, s: f64) -> f64 {
    let kf = k as f64;
    let a = s - 2.0;
    2.0 * kf.powf(-a) * (kf.ln() / a + 1.0 / (a * a))
}

/// Smallest K with a valid tail bound below `tol`.
pub(crate) fn prime_zeta_terms(s: f64, tol: f64) -> u64 {
    let lower = ((1.0 / (s - 2.0)).exp().ceil() as u64).max(6);
    if prime_zeta_tail_bound(lower, s) <= tol {
        return lower;
    }
    let mut hi = lower.max(8);
    while prime_zeta_tail_bound(hi, s) > tol {
        if hi > u64::MAX / 4 {
            return u64::MAX;
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if prime_zeta_tail_bound(mid, s) <= tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// P(s) = sum_n p_n / n^s for s > 2, with absolute error below `abs_tol`.
/// Returns the value and its error bound.
pub fn nth_prime_zeta(
    s: f64,
    abs_tol: f64,
    prec: u32,
    primes: &dyn PrimeSource,
) -> Result<(Float, f64)> {
    if !(s > 2.0) {
        return Err(Error::domain(format!(
            "prime zeta P(s) = sum p_n n^-s needs s > 2 (p_n ~ n log n), got {s}"
        )));
    }
    if !(abs_tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let k = prime_zeta_terms(s, abs_tol / 2.0);
    let ps = primes.first_primes(usize::try_from(k).unwrap_or(usize::MAX))?;
    let wp = prec + 16 + (k as f64).log2().ceil() as u32;
    let mut acc = Float::new(wp);
    let sw = Float::with_val(wp, s);
    for (i, &p) in ps.iter().enumerate() {
        let n = (i + 1) as u32;
        let t = if s.fract() == 0.0 {
            Float::with_val(wp, n).pow(-(s as i32))
        } else {
            Float::with_val(wp, n).pow(-sw.clone())
        };
        acc += t * p;
    }
    let size = mag::of(&acc);
    let rounding = mag::to_f64(size + ((k + 2) as f64).log2() - wp as f64)
        + mag::to_f64(size - prec as f64);
    Ok((Float::with_val(prec, acc), prime_zeta_tail_bound(k, s) + rounding))
}

/// ζ(m + 2·step·j) for j < count, `None` at the pole. Step 1 goes through
/// the table's offset cache.
pub(crate) fn shifted_zeta(
    t: &ZetaTable,
    m: Shift,
    step: usize,
    count: usize,
    prec: u32,
) -> Result<Vec<Option<(Complex, f64)>>> {
    let all: std::sync::Arc<OffsetValues> = if step == 1 && count <= t.j_max() + 1 && prec <= t.precision_bits() {
        t.zeta_shifted(m)?
    } else {
        std::sync::Arc::new(shifted_values(m, step * (count - 1) + 1, prec.max(t.precision_bits()))?)
    };
    Ok(all
        .iter()
        .step_by(step)
        .take(count)
        .map(|v| v.as_ref().map(|(z, e)| (Complex::with_val(prec, z), *e)))
        .collect())
}
