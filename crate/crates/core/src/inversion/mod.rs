//! Recovering a(n) from the values F(2j) of its Dirichlet series.
//!
//! With c = kπ the angular constant of the context,
//!
//! ```text
//! a(n) = -2 Σ_i n^{2i} Σ_{j<=i} σ_{i-j} F(2j),    σ_m = (-1)^m c^{2m} / (2m+1)!
//! ```
//!
//! The inner convolution does not depend on n, so [`CoefficientSeries`]
//! builds it once and evaluates at many points.

mod series;

pub use series::{Basis, CoefficientSeries, Kernel};

use rug::ops::Pow;
use rug::{Complex, Float};

use crate::constants::ZetaTable;
use crate::error::{Error, Result};
use crate::mag;
use crate::numerics::{NumericContext, SeriesResult, Skip, Variant};

/// One provider value F(2j).
#[derive(Clone, Debug)]
pub enum FValue {
    /// Left out of the inner sum, with the reason.
    Skipped(String),
    Value { v: Complex, err_log2: f64 },
}

impl FValue {
    /// A value correctly rounded to its own precision.
    pub fn rounded(v: Complex) -> FValue {
        let err_log2 = mag::of_complex(&v) - v.prec().0 as f64;
        FValue::Value { v, err_log2 }
    }

    pub fn real(x: Float) -> FValue {
        FValue::rounded(crate::numerics::real_of(x))
    }

    pub fn skipped(reason: impl Into<String>) -> FValue {
        FValue::Skipped(reason.into())
    }
}

/// A Dirichlet series F(s) = Σ a(n) n^{-s}, seen through its values at the
/// even integers.
pub trait CoefficientProvider: Send + Sync {
    fn name(&self) -> String;

    /// Whether every F(2j) is real.
    fn is_real(&self) -> bool {
        true
    }

    /// F(2j) for j < count, at `prec` bits.
    fn values(&self, count: usize, prec: u32, ctx: &NumericContext) -> Result<Vec<FValue>>;
}

/// Provider defined by a per-index closure over the context's zeta table.
pub struct FnProvider<F> {
    name: String,
    real: bool,
    f: F,
}

impl<F> FnProvider<F>
where
    F: Fn(usize, u32, &ZetaTable) -> Result<FValue> + Send + Sync,
{
    pub fn new(name: impl Into<String>, real: bool, f: F) -> Self {
        FnProvider {
            name: name.into(),
            real,
            f,
        }
    }
}

impl<F> CoefficientProvider for FnProvider<F>
where
    F: Fn(usize, u32, &ZetaTable) -> Result<FValue> + Send + Sync,
{
    fn name(&self) -> String {
        self.name.clone()
    }

    fn is_real(&self) -> bool {
        self.real
    }

    fn values(&self, count: usize, prec: u32, ctx: &NumericContext) -> Result<Vec<FValue>> {
        let table = ctx.zeta_table()?;
        let out = crate::parallel::map_range(count, ctx.execution(), |j| (self.f)(j, prec, &table));
        out.into_iter().collect()
    }
}

/// F(s) = ζ(s): a(n) = 1.
pub fn zeta_provider() -> impl CoefficientProvider {
    FnProvider::new("zeta", true, |j, p, t: &ZetaTable| {
        Ok(FValue::real(Float::with_val(p, t.zeta_even(j))))
    })
}

/// Linear combination α·F + β·G.
pub struct LinearCombination<A, B> {
    pub alpha: Complex,
    pub a: A,
    pub beta: Complex,
    pub b: B,
}

impl<A: CoefficientProvider, B: CoefficientProvider> CoefficientProvider for LinearCombination<A, B> {
    fn name(&self) -> String {
        format!("({})*{} + ({})*{}", self.alpha, self.a.name(), self.beta, self.b.name())
    }

    fn is_real(&self) -> bool {
        self.a.is_real() && self.b.is_real() && self.alpha.imag().is_zero() && self.beta.imag().is_zero()
    }

    fn values(&self, count: usize, prec: u32, ctx: &NumericContext) -> Result<Vec<FValue>> {
        let fa = self.a.values(count, prec, ctx)?;
        let fb = self.b.values(count, prec, ctx)?;
        let la = mag::of_complex(&self.alpha);
        let lb = mag::of_complex(&self.beta);
        Ok(fa
            .into_iter()
            .zip(fb)
            .map(|(x, y)| match (x, y) {
                (FValue::Value { v: va, err_log2: ea }, FValue::Value { v: vb, err_log2: eb }) => {
                    let v = Complex::with_val(prec, &self.alpha * &va) + Complex::with_val(prec, &self.beta * &vb);
                    let round = mag::of_complex(&v) + 2.0 - prec as f64;
                    FValue::Value {
                        v,
                        err_log2: mag::sum([ea + la, eb + lb, round]),
                    }
                }
                (FValue::Skipped(r), _) | (_, FValue::Skipped(r)) => FValue::Skipped(r),
            })
            .collect())
    }
}

/// Evaluates the inversion series of `provider` at n.
pub fn invert_at(provider: &dyn CoefficientProvider, n: f64, ctx: &NumericContext) -> Result<SeriesResult> {
    ctx.check_argument(n)?;
    let s = CoefficientSeries::from_provider(provider, ctx)?;
    s.eval(n, Basis::Monomial, ctx)
}

/// -2 sin(cn)/(cn) Σ_j F(2j) n^{2j}, valid for |n| < 1 only.
pub fn invert_compact(provider: &dyn CoefficientProvider, n: f64, ctx: &NumericContext) -> Result<SeriesResult> {
    if !(n.abs() < 1.0) {
        return Err(Error::domain(format!(
            "the compact form converges only for |n| < 1, got n = {n}"
        )));
    }
    let p = ctx.precision_bits() + 16;
    let tgt = mag::from_f64(ctx.target_abs_error());
    let n2 = Float::with_val(p, n * n);
    let ln2 = mag::of(&n2);
    let geometric_tail = |j: usize, fmax: f64| {
        // Σ_{i>=j} fmax |n|^{2i} = fmax |n|^{2j} / (1 - n^2)
        fmax + j as f64 * ln2 - (1.0 - n * n).log2()
    };

    let mut count = 32usize;
    loop {
        let vals = provider.values(count, p, ctx)?;
        let mut acc = Complex::new(p);
        let mut pw = Float::with_val(p, 1);
        let mut err = mag::ZERO;
        let mut fmax = mag::ZERO;
        let mut skipped = Vec::new();
        for (j, v) in vals.iter().enumerate() {
            match v {
                FValue::Skipped(r) => skipped.push(Skip { j, reason: r.clone() }),
                FValue::Value { v, err_log2 } => {
                    acc += Complex::with_val(p, v * &pw);
                    err = mag::add(err, err_log2 + mag::of(&pw));
                    fmax = fmax.max(mag::of_complex(v));
                }
            }
            pw *= &n2;
        }
        // F(2j) is bounded on the even integers by its largest observed value
        // times 2; every provider here tends to a finite limit.
        let tail = geometric_tail(count, fmax + 1.0);
        if tail < tgt - 4.0 || count >= 1 << 16 {
            let c = ctx.variant().angular(p);
            let x = Float::with_val(p, &c * n);
            let sinc = if x.is_zero() {
                Float::with_val(p, 1)
            } else {
                Float::with_val(p, x.sin_ref()) / &x
            };
            let mut value = Complex::with_val(p, &acc * &sinc) * -2i32;
            let l_sinc = mag::of(&sinc) + 1.0;
            err = mag::sum([err + l_sinc, tail + l_sinc, mag::of_complex(&acc) + l_sinc + 4.0 - p as f64]);
            if ctx.variant() == Variant::Pi {
                value *= Float::with_val(p, Float::with_val(p, rug::float::Constant::Pi) * n).cos();
            }
            return Ok(SeriesResult {
                is_real: provider.is_real(),
                value: Complex::with_val(ctx.precision_bits(), value),
                abs_error_log2: err,
                outer_terms_used: count,
                peak_term_log2: mag::of_complex(&acc) + l_sinc,
                first_omitted_log2: tail,
                skipped,
                certified: false,
                precision_bits: p,
                coefficient_bits: p,
                notes: vec!["compact form, |n| < 1".into()],
            });
        }
        count *= 2;
    }
}

/// Series for the Kronecker delta [n = k], from F(2j) = k^{-2j}.
pub fn delta_series(n: u64, k: u64, ctx: &NumericContext) -> Result<SeriesResult> {
    if n == 0 || k == 0 {
        return Err(Error::domain("delta_series needs n, k >= 1"));
    }
    let provider = FnProvider::new(format!("k^-s (k = {k})"), true, move |j, p, _t: &ZetaTable| {
        let kk = Float::with_val(p, k);
        Ok(FValue::real(kk.pow(-2 * j as i64)))
    });
    invert_at(&provider, n as f64, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::make_context;

    fn ctx(n: f64) -> NumericContext {
        make_context(n, 1e-12, Variant::TwoPi).unwrap()
    }

    #[test]
    fn zeta_gives_all_ones() {
        let c = ctx(5.0);
        let r = invert_at(&zeta_provider(), 5.0, &c).unwrap();
        assert!((r.to_f64() - 1.0).abs() < 1e-12, "{}", r.to_f64());
        assert!(r.abs_error_estimate() < 1e-12);
        assert!(r.peak_term_magnitude() > 1e6);
    }

    #[test]
    fn delta_examples() {
        let c = NumericContext::builder(3.0, 1e-15).build().unwrap();
        assert!((delta_series(3, 3, &c).unwrap().to_f64() - 1.0).abs() < 1e-15);
        assert!(delta_series(3, 2, &c).unwrap().to_f64().abs() < 1e-15);
        assert!((delta_series(1, 1, &c).unwrap().to_f64() - 1.0).abs() < 1e-15);
        assert!(delta_series(0, 1, &c).is_err());
    }

    #[test]
    fn compact_form() {
        let c = ctx(1.0);
        let r = invert_compact(&zeta_provider(), 0.0, &c).unwrap();
        assert!((r.to_f64() - 1.0).abs() < 1e-15);
        assert!(invert_compact(&zeta_provider(), 1.5, &c).is_err());
        let a = invert_compact(&zeta_provider(), 0.5, &c).unwrap();
        let b = invert_at(&zeta_provider(), 0.5, &c).unwrap();
        assert!((a.to_f64() - b.to_f64()).abs() < 1e-10);
    }

    #[test]
    fn argument_beyond_context_is_refused() {
        let c = ctx(3.0);
        assert!(matches!(
            invert_at(&zeta_provider(), 4.0, &c),
            Err(Error::PrecisionShortfall(_))
        ));
    }
}
