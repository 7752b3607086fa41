//! The divisibility indicator [k | n], exactly and as power series in n.

use rug::ops::Pow;
use rug::Float;

use crate::constants::ZetaTable;
use crate::error::{Error, Result};
use crate::inversion::{invert_at, Basis, CoefficientSeries, CoefficientProvider, FValue, FnProvider, Kernel};
use crate::mag;
use crate::numerics::{NumericContext, SeriesResult};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndicatorQuery {
    pub n: f64,
    pub k: u64,
    /// Leading inner terms removed from the series; they vanish at integers.
    pub q: usize,
}

pub fn divides_exact(n: i64, k: u64) -> Result<u8> {
    if k == 0 {
        return Err(Error::domain("divisor k must be at least 1"));
    }
    Ok((n.unsigned_abs() % k == 0) as u8)
}

/// F(2j) = ζ(2j) k^{-2j}, the Dirichlet series of [k | n], with j < q removed.
fn provider(k: u64, q: usize) -> impl CoefficientProvider {
    FnProvider::new(format!("[{k} | n], q = {q}"), true, move |j, p, t: &ZetaTable| {
        if j < q {
            return Ok(FValue::skipped(format!("extracted by the q = {q} shift")));
        }
        let z = Float::with_val(p, t.zeta_even(j));
        let kk = Float::with_val(p, k).pow(-2 * j as i64);
        Ok(FValue::real(z * kk))
    })
}

pub fn indicator_series(query: IndicatorQuery, ctx: &NumericContext) -> Result<SeriesResult> {
    if query.k == 0 {
        return Err(Error::domain("divisor k must be at least 1"));
    }
    invert_at(&provider(query.k, query.q), query.n, ctx)
}

/// The series behind [`indicator_series`], for evaluating one (k, q) at many n.
pub fn indicator_coefficients(k: u64, q: usize, ctx: &NumericContext) -> Result<CoefficientSeries> {
    if k == 0 {
        return Err(Error::domain("divisor k must be at least 1"));
    }
    CoefficientSeries::from_provider(&provider(k, q), ctx)
}

/// The sine analog: Σ_{r<k} sin(2πnr/k)/k written as a series in n. It
/// vanishes at every integer n.
pub fn indicator_analog_series(n: f64, k: u64, ctx: &NumericContext) -> Result<SeriesResult> {
    if k == 0 {
        return Err(Error::domain("divisor k must be at least 1"));
    }
    ctx.check_argument(n)?;
    let p = provider(k, 0);
    let values = p.values(ctx.max_outer_terms() + 2, ctx.coefficient_bits(), ctx)?;
    let s = CoefficientSeries::build(p.name(), true, values, Kernel::Cosc, 1, ctx)?;
    let mut r = s.eval(n, Basis::Monomial, ctx)?;
    // -2cn times the cosc-kernel series
    let wp = ctx.precision_bits();
    let factor = Float::with_val(wp, ctx.variant().angular(wp) * n) * -2i32;
    r.value *= &factor;
    let lf = mag::of(&factor);
    r.abs_error_log2 += lf;
    r.peak_term_log2 += lf;
    r.first_omitted_log2 += lf;
    r.add_error_log2(mag::of_complex(&r.value) + 1.0 - wp as f64);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{make_context, Variant};

    #[test]
    fn exact_examples() {
        assert_eq!(divides_exact(6, 3).unwrap(), 1);
        assert_eq!(divides_exact(6, 4).unwrap(), 0);
        assert_eq!(divides_exact(0, 7).unwrap(), 1);
        assert!(divides_exact(5, 0).is_err());
    }

    #[test]
    fn series_examples() {
        let ctx = make_context(7.0, 1e-15, Variant::TwoPi).unwrap();
        for (n, k, q, want) in [(6.0, 3, 0, 1.0), (6.0, 4, 0, 0.0), (6.0, 3, 3, 1.0)] {
            let r = indicator_series(IndicatorQuery { n, k, q }, &ctx).unwrap();
            assert!((r.to_f64() - want).abs() < 1e-15, "({n}, {k}, {q}): {}", r.to_f64());
        }
    }

    #[test]
    fn analog_examples() {
        let ctx = make_context(7.0, 1e-15, Variant::TwoPi).unwrap();
        assert!(indicator_analog_series(5.0, 3, &ctx).unwrap().to_f64().abs() < 1e-15);
        assert!(indicator_analog_series(7.0, 1, &ctx).unwrap().to_f64().abs() < 1e-15);
        let ctx = make_context(1.0, 1e-14, Variant::TwoPi).unwrap();
        let (n, k) = (0.25f64, 2.0f64);
        let pi = std::f64::consts::PI;
        let closed = (1.0 / (2.0 * k)) / (pi * n / k).tan() * (1.0 - (2.0 * pi * n).cos());
        let r = indicator_analog_series(n, 2, &ctx).unwrap();
        assert!((r.to_f64() - closed).abs() < 1e-12, "{} vs {closed}", r.to_f64());
    }
}
