use std::sync::OnceLock;

use rug::float::Constant;
use rug::{Assign, Complex, Float, Integer};

use super::{CoefficientProvider, FValue};
use crate::error::{Error, Result};
use crate::mag;
use crate::numerics::{sum_terms, NumericContext, SeriesResult, Skip, Variant};
use crate::parallel;
use crate::primecount::FaulhaberEvaluator;

/// Power series in x = cn convolved with the provider values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    /// (-1)^m x^{2m} / (2m+1)!, summing to sin x / x.
    Sinc,
    /// (-1)^m x^{2m} / (2m+2)!, summing to (1 - cos x) / x^2.
    Cosc,
}

impl Kernel {
    fn offset(self) -> u64 {
        match self {
            Kernel::Sinc => 1,
            Kernel::Cosc => 2,
        }
    }

    /// (-1)^m c^{2m} / (2m+off)! for m < count.
    fn coefficients(self, c: &Float, count: usize, prec: u32) -> Vec<Float> {
        let off = self.offset();
        let c2 = Float::with_val(prec, c * c);
        let mut out = Vec::with_capacity(count);
        let mut k = Float::with_val(prec, 1) / Integer::from(Integer::factorial(off as u32));
        for m in 0..count as u64 {
            if m > 0 {
                k *= &c2;
                k /= (2 * m + off - 1) * (2 * m + off);
                k = -k;
            }
            out.push(k.clone());
        }
        out
    }

    /// log2 of x^{2m} / (2m+off)!.
    fn log2_term(self, lx: f64, m: usize) -> f64 {
        let t = if m == 0 { 0.0 } else { 2.0 * m as f64 * lx };
        t - mag::log2_factorial(2 * m as u64 + self.offset())
    }

    fn limit_abs(self, x: f64) -> f64 {
        if x == 0.0 {
            return 1.0 / self.offset() as f64;
        }
        match self {
            Kernel::Sinc => (x.sin() / x).abs(),
            Kernel::Cosc => ((1.0 - x.cos()) / (x * x)).abs(),
        }
    }

    /// Whether the full kernel sum vanishes at x = multiple·π·n exactly.
    fn annihilates(self, multiple: u32, n: i64) -> bool {
        n != 0
            && match self {
                Kernel::Sinc => true,
                Kernel::Cosc => (multiple as i64 * n) % 2 == 0,
            }
    }

    /// log2 bound on |Σ_{m<=M} (-1)^m x^{2m}/(2m+off)!|.
    fn partial_sum_bound(self, x: f64, m_max: usize, zero_limit: bool) -> f64 {
        if x == 0.0 {
            return -(mag::log2_factorial(self.offset()));
        }
        let lx = x.log2();
        if (2 * m_max as u64 + 2 + self.offset()) as f64 >= x {
            // Terms decrease from index M+1 on, so the tail is below its first term.
            let tail = self.log2_term(lx, m_max + 1) + 1.0;
            let lim = if zero_limit {
                mag::ZERO
            } else {
                mag::from_f64(self.limit_abs(x) + 1e-12)
            };
            mag::add(lim, tail)
        } else {
            mag::sum((0..=m_max).map(|m| self.log2_term(lx, m)))
        }
    }
}

/// What n^{2i} is replaced with when the series is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// n^{2i}: the coefficient function itself.
    Monomial,
    /// Σ_{m<=x} m^{2i}, continued to real x by Faulhaber's formula.
    Faulhaber,
    /// x^{2i+1} / (2i+1).
    Integrated,
}

/// The n-independent inner sums k_i = scale · Σ_j κ_{i-j} F(2j).
pub struct CoefficientSeries {
    name: String,
    kernel: Kernel,
    variant: Variant,
    scale: i32,
    coeffs: Vec<Complex>,
    noise_log2: Vec<f64>,
    provider_err_log2: Vec<f64>,
    kernel_log2: Vec<f64>,
    skipped: Vec<Skip>,
    is_real: bool,
    coefficient_bits: u32,
    faulhaber: OnceLock<FaulhaberEvaluator>,
}

impl std::fmt::Debug for CoefficientSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientSeries")
            .field("name", &self.name)
            .field("kernel", &self.kernel)
            .field("variant", &self.variant)
            .field("terms", &self.coeffs.len())
            .finish_non_exhaustive()
    }
}

impl CoefficientSeries {
    /// The inversion series of `provider`, sized for the context.
    pub fn from_provider(provider: &dyn CoefficientProvider, ctx: &NumericContext) -> Result<Self> {
        let count = ctx.max_outer_terms() + 2;
        let values = provider.values(count, ctx.coefficient_bits(), ctx)?;
        Self::build(provider.name(), provider.is_real(), values, Kernel::Sinc, -2, ctx)
    }

    pub fn build(
        name: String,
        is_real: bool,
        values: Vec<FValue>,
        kernel: Kernel,
        scale: i32,
        ctx: &NumericContext,
    ) -> Result<Self> {
        let count = values.len();
        let cb = ctx.coefficient_bits();
        let wp = cb + 16;
        let variant = ctx.variant();
        let c = variant.angular(wp);
        let kappa = kernel.coefficients(&c, count, wp);
        let lc = variant.angular_f64().log2();
        let kernel_log2: Vec<f64> = (0..count).map(|m| kernel.log2_term(lc, m)).collect();

        let mut skipped = Vec::new();
        let mut provider_err_log2 = Vec::with_capacity(count);
        let mut f: Vec<Option<(&Complex, f64)>> = Vec::with_capacity(count);
        for (j, v) in values.iter().enumerate() {
            match v {
                FValue::Skipped(reason) => {
                    skipped.push(Skip {
                        j,
                        reason: reason.clone(),
                    });
                    provider_err_log2.push(mag::ZERO);
                    f.push(None);
                }
                FValue::Value { v, err_log2 } => {
                    provider_err_log2.push(*err_log2);
                    f.push(Some((v, mag::of_complex(v))));
                }
            }
        }
        if f.iter().all(Option::is_none) {
            return Err(Error::DegenerateSkipSet(name));
        }

        let lscale = (scale.unsigned_abs() as f64).log2();
        let rows = parallel::map_range(count, ctx.execution(), |i| {
            let mut acc = Complex::new(wp);
            let mut tmp = Complex::new(wp);
            let mut abs = mag::ZERO;
            for (j, fj) in f.iter().enumerate().take(i + 1) {
                if let Some((v, lv)) = fj {
                    tmp.assign(*v * &kappa[i - j]);
                    acc += &tmp;
                    abs = mag::add(abs, lv + mag::of(&kappa[i - j]));
                }
            }
            let k = Complex::with_val(cb, acc * scale);
            let noise = mag::add(
                abs + lscale + ((2 * i + 4) as f64).log2() + 1.0 - wp as f64,
                mag::of_complex(&k) - cb as f64,
            );
            (k, noise)
        });
        let (coeffs, noise_log2) = rows.into_iter().unzip();
        Ok(CoefficientSeries {
            name,
            kernel,
            variant,
            scale,
            coeffs,
            noise_log2,
            provider_err_log2,
            kernel_log2,
            skipped,
            is_real,
            coefficient_bits: cb,
            faulhaber: OnceLock::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coefficients(&self) -> &[Complex] {
        &self.coeffs
    }

    pub fn skipped(&self) -> &[Skip] {
        &self.skipped
    }

    /// Evaluates Σ k_i b_i(x) under the context's stopping rule.
    pub fn eval(&self, x: f64, basis: Basis, ctx: &NumericContext) -> Result<SeriesResult> {
        ctx.check_argument(x)?;
        if ctx.variant() != self.variant {
            return Err(Error::domain(format!(
                "series was built for variant {}, context uses {}",
                self.variant,
                ctx.variant()
            )));
        }
        if basis != Basis::Monomial {
            if self.variant == Variant::Pi {
                return Err(Error::domain(
                    "the pi variant divides by cos(pi n) and cannot be summed over n",
                ));
            }
            if x < 0.0 {
                return Err(Error::domain(format!("summatory argument must be >= 0, got {x}")));
            }
        }
        let wp = ctx.precision_bits();
        let bp = wp + 16;
        let integer = (x.fract() == 0.0).then_some(x as i64);
        let len = self.coeffs.len();

        let mut b_logs: Vec<f64> = Vec::with_capacity(len);
        let s = {
            let mut basis_iter = BasisValues::new(basis, x, integer, bp, || {
                self.faulhaber.get_or_init(|| FaulhaberEvaluator::new(len))
            });
            let logs = &mut b_logs;
            let terms = (0..len).map(|i| {
                let (b, b_err) = basis_iter.next_value(i)?;
                let lb = mag::of(&b).max(b_err);
                logs.push(lb);
                let t = Complex::with_val(wp, &self.coeffs[i] * &b);
                let noise = mag::sum([
                    self.noise_log2[i] + lb,
                    mag::of_complex(&t) + ((i + 2) as f64).log2() + 1.0 - wp as f64,
                    mag::of_complex(&self.coeffs[i]) + b_err,
                ]);
                Ok((t, noise))
            });
            sum_terms(terms, ctx, wp)?
        };
        let last = s.used - 1;
        let mut r = SeriesResult::from_sum(s, ctx, self.is_real);
        r.skipped = self.skipped.clone();
        r.add_error_log2(self.provider_error_log2(x, integer, basis, last, &b_logs));

        if self.variant == Variant::Pi {
            let cos = Float::with_val(wp, Float::with_val(wp, Constant::Pi) * x).cos();
            r.value *= &cos;
            let noise = mag::of_complex(&r.value) + 2.0 - wp as f64;
            r.add_error_log2(noise);
        }
        r.certified = integer.is_some();
        if !r.certified {
            r.notes.push("non-integer argument: continuation value, no oracle backs it".into());
        }
        Ok(r)
    }

    pub fn eval_many(&self, xs: &[f64], basis: Basis, ctx: &NumericContext) -> Vec<Result<SeriesResult>> {
        parallel::map_slice(xs, ctx.execution(), |&x| self.eval(x, basis, ctx))
    }

    /// Bound on the effect of the provider errors δ_j on the truncated sum.
    ///
    /// δ_j enters as δ_j b_j-weighted kernel partial sums. On the integers the
    /// full kernel sum vanishes, so only its tail past index `last - j` counts.
    fn provider_error_log2(&self, x: f64, integer: Option<i64>, basis: Basis, last: usize, b_logs: &[f64]) -> f64 {
        let mult = self.variant.multiple();
        let c = self.variant.angular_f64();
        let lscale = (self.scale.unsigned_abs() as f64).log2();
        let mut total = mag::ZERO;
        for (j, &d) in self.provider_err_log2.iter().enumerate().take(last + 1) {
            if d == mag::ZERO {
                continue;
            }
            let m_max = last - j;
            let w = match (basis, integer) {
                (Basis::Monomial, _) => {
                    let ln = if j == 0 { 0.0 } else { 2.0 * j as f64 * x.abs().log2() };
                    let zero = integer.is_some_and(|n| self.kernel.annihilates(mult, n));
                    ln + self.kernel.partial_sum_bound(c * x.abs(), m_max, zero)
                }
                (Basis::Faulhaber, Some(xi)) => mag::sum((1..=xi).map(|m| {
                    2.0 * j as f64 * (m as f64).log2()
                        + self
                            .kernel
                            .partial_sum_bound(c * m as f64, m_max, self.kernel.annihilates(mult, m))
                })),
                _ => mag::sum((j..=last).map(|i| self.kernel_log2[i - j] + b_logs[i])),
            };
            total = mag::add(total, d + w + lscale);
        }
        total
    }

    pub fn coefficient_bits(&self) -> u32 {
        self.coefficient_bits
    }
}

/// Streams b_0(x), b_1(x), ... with an absolute error bound (log2) for each.
struct BasisValues<'a, F: Fn() -> &'a FaulhaberEvaluator> {
    basis: Basis,
    prec: u32,
    x: Float,
    x2: Float,
    pw: Float,
    integer: Option<i64>,
    powers: Vec<Integer>,
    squares: Vec<Integer>,
    faulhaber: F,
}

impl<'a, F: Fn() -> &'a FaulhaberEvaluator> BasisValues<'a, F> {
    fn new(basis: Basis, x: f64, integer: Option<i64>, prec: u32, faulhaber: F) -> Self {
        let xf = Float::with_val(prec, x);
        let x2 = Float::with_val(prec, &xf * &xf);
        let (powers, squares) = match (basis, integer) {
            (Basis::Faulhaber, Some(n)) => (
                (1..=n).map(|_| Integer::from(1)).collect(),
                (1..=n).map(|m| Integer::from(m * m)).collect(),
            ),
            _ => (Vec::new(), Vec::new()),
        };
        BasisValues {
            basis,
            prec,
            pw: Float::with_val(prec, 1),
            x: xf,
            x2,
            integer,
            powers,
            squares,
            faulhaber,
        }
    }

    fn next_value(&mut self, i: usize) -> Result<(Float, f64)> {
        let p = self.prec;
        let rel = ((i + 2) as f64).log2() + 1.0 - p as f64;
        match (self.basis, self.integer) {
            (Basis::Monomial, _) => {
                if i > 0 {
                    self.pw *= &self.x2;
                }
                Ok((self.pw.clone(), mag::of(&self.pw) + rel))
            }
            (Basis::Integrated, _) => {
                if i == 0 {
                    self.pw.assign(&self.x);
                } else {
                    self.pw *= &self.x2;
                }
                let b = Float::with_val(p, &self.pw / (2 * i as u64 + 1));
                let e = mag::of(&b) + rel;
                Ok((b, e))
            }
            (Basis::Faulhaber, Some(_)) => {
                if i > 0 {
                    for (pw, sq) in self.powers.iter_mut().zip(&self.squares) {
                        *pw *= sq;
                    }
                }
                let s: Integer = self.powers.iter().sum();
                let b = Float::with_val(p, &s);
                let e = mag::of(&b) - p as f64;
                Ok((b, e))
            }
            (Basis::Faulhaber, None) => {
                let fe = (self.faulhaber)();
                Ok(fe.eval(&self.x, i, p))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_coefficients_match_closed_forms() {
        let c = Float::with_val(128, 1.3);
        for k in [Kernel::Sinc, Kernel::Cosc] {
            let mut s = Float::new(128);
            for t in k.coefficients(&c, 60, 128) {
                s += t;
            }
            let fin = s.to_f64();
            assert!((fin - k.limit_abs(1.3)).abs() < 1e-15, "{k:?}");
        }
    }

    #[test]
    fn partial_sum_bound_is_honest() {
        for k in [Kernel::Sinc, Kernel::Cosc] {
            let x = 2.0 * std::f64::consts::PI * 3.0;
            let c = Float::with_val(256, rug::float::Constant::Pi) * 6u32;
            let coeffs = k.coefficients(&c, 120, 256);
            let mut acc = Float::with_val(256, 0);
            for (m, cm) in coeffs.iter().enumerate() {
                acc += cm;
                let b = k.partial_sum_bound(x, m, true);
                // 256-bit accumulation bottoms out near 2^-200
                assert!(mag::of(&acc) <= b.max(-200.0) + 1e-9, "{k:?} m = {m}");
            }
        }
    }
}
