//! Prime indicator, π(x), Mertens M(x), Faulhaber power sums, and the
//! asymptotic approximations for π(x), J(x) and Σ d(n).
//!
//! The prime indicator is
//!
//! ```text
//! 1_P(n) = -8 Σ_h n^{2h} Σ_j κ_{h-j} G_j,   κ_m = (-1)^m c^{2m} / (2m+2)!
//! G_j = Σ_{a+b=j, b>=1} A_a L_b,            A_a = 1/ζ(2a), L_b = log ζ(2b)
//! ```
//!
//! and the summatory functions replace n^{2h} by Σ_{m<=x} m^{2h}.

use rug::ops::Pow;
use rug::{Complex, Float, Integer, Rational};

use crate::arith::{Evaluator, FunctionId};
use crate::constants::even_bernoulli;
use crate::error::{Error, Result};
use crate::inversion::{Basis, CoefficientSeries, FValue, FnProvider, Kernel};
use crate::mag;
use crate::numerics::{NumericContext, SeriesResult, Variant};
use crate::oracle::{exact_summatory, Exact, Sieve, Summatory};

/// Coefficients of the Faulhaber polynomials Σ_{m=1}^{x} m^{2h}.
#[derive(Debug)]
pub struct FaulhaberEvaluator {
    /// rows[h][d] is the coefficient of x^d.
    rows: Vec<Vec<Rational>>,
    row_logs: Vec<Vec<f64>>,
}

fn faulhaber_row(h: usize, bern: &[Rational]) -> Vec<Rational> {
    // Σ_{m<=x} m^p = 1/(p+1) Σ_k C(p+1, k) B_k^+ x^{p+1-k}, with B_1^+ = 1/2.
    let p = 2 * h as u32;
    let mut row = vec![Rational::new(); p as usize + 2];
    let mut binom = Integer::from(1);
    for k in 0..=p {
        if k > 0 {
            binom *= p + 2 - k;
            binom /= k;
        }
        let b = match k {
            1 => Rational::from((1, 2)),
            k if k % 2 == 1 => continue,
            k => bern[k as usize / 2].clone(),
        };
        row[(p + 1 - k) as usize] = Rational::from(&binom * b) / (p + 1);
    }
    row
}

fn rational_log2(r: &Rational) -> f64 {
    if *r == 0 {
        return mag::ZERO;
    }
    mag::of(&Float::with_val(64, r))
}

impl FaulhaberEvaluator {
    pub fn new(h_max: usize) -> FaulhaberEvaluator {
        let bern = even_bernoulli(h_max + 1);
        let rows: Vec<Vec<Rational>> = (0..=h_max).map(|h| faulhaber_row(h, &bern)).collect();
        let row_logs = rows.iter().map(|r| r.iter().map(rational_log2).collect()).collect();
        FaulhaberEvaluator { rows, row_logs }
    }

    pub fn h_max(&self) -> usize {
        self.rows.len() - 1
    }

    fn row(&self, h: usize) -> std::borrow::Cow<'_, [Rational]> {
        match self.rows.get(h) {
            Some(r) => std::borrow::Cow::Borrowed(r),
            None => std::borrow::Cow::Owned(faulhaber_row(h, &even_bernoulli(h + 1))),
        }
    }

    /// Exact value of the polynomial at rational x.
    pub fn exact(&self, x: &Rational, h: usize) -> Rational {
        let row = self.row(h);
        let mut acc = Rational::new();
        for c in row.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }

    /// Value at x with an absolute error bound (log2). Precision is raised
    /// internally to absorb the cancellation between coefficients.
    pub fn eval(&self, x: &Float, h: usize, prec: u32) -> (Float, f64) {
        let row = self.row(h);
        let logs: Vec<f64> = match self.row_logs.get(h) {
            Some(l) => l.clone(),
            None => row.iter().map(rational_log2).collect(),
        };
        let lx = mag::of(x);
        let abs = mag::sum(
            logs.iter()
                .enumerate()
                .map(|(d, &l)| if d == 0 { l } else { l + d as f64 * lx }),
        );
        let horner = |wp: u32| {
            let mut acc = Float::new(wp);
            for c in row.iter().rev() {
                acc *= x;
                acc += Float::with_val(wp, c);
            }
            let err = abs + ((2 * h + 4) as f64).log2() + 1.0 - wp as f64;
            (acc, err)
        };
        let (v, e) = horner(prec + 64);
        if e <= mag::of(&v) - prec as f64 {
            return (Float::with_val(prec, &v), mag::add(e, mag::of(&v) - prec as f64));
        }
        let floor = mag::of(&v).max(e);
        let wp = prec + (abs - floor).max(0.0).ceil() as u32 + 64;
        let (v, e) = horner(wp);
        let out = Float::with_val(prec, &v);
        (out, mag::add(e, mag::of(&v) - prec as f64))
    }
}

/// Σ_{m=1}^{x} m^{2h}: exact for integer x >= 0, Faulhaber's polynomial otherwise.
pub fn faulhaber_power_sum(x: f64, h: usize, prec: u32) -> Float {
    if x.fract() == 0.0 && x >= 0.0 {
        let s: Integer = (1..=x as u64)
            .map(|m| Integer::from(m).pow(2 * h as u32))
            .sum();
        return Float::with_val(prec, s);
    }
    FaulhaberEvaluator::new(h).eval(&Float::with_val(prec, x), h, prec).0
}

/// Leading terms x^{2h+1}/(2h+1) + x^{2h}/2.
pub fn faulhaber_asymptotic(x: f64, h: usize, prec: u32) -> Float {
    let xf = Float::with_val(prec, x);
    let a = Float::with_val(prec, (&xf).pow(2 * h as u32 + 1)) / (2 * h as u32 + 1);
    let b = Float::with_val(prec, (&xf).pow(2 * h as u32)) / 2u32;
    a + b
}

fn require_counting_variant(ctx: &NumericContext) -> Result<()> {
    if ctx.variant() == Variant::Pi {
        return Err(Error::domain(
            "the pi variant is a series for a(n)/cos(pi n); it has no prime-indicator or summatory form",
        ));
    }
    Ok(())
}

/// The coefficient series e_h of the prime indicator.
pub fn prime_indicator_series(ctx: &NumericContext) -> Result<CoefficientSeries> {
    require_counting_variant(ctx)?;
    let count = ctx.max_outer_terms() + 2;
    let cb = ctx.coefficient_bits();
    let table = ctx.zeta_table()?;
    let wp = cb + 16;
    let a: Vec<Float> = (0..count).map(|j| Float::with_val(wp, table.inv_zeta_even(j))).collect();
    let l: Vec<Float> = (0..count)
        .map(|j| {
            if j == 0 {
                Ok(Float::new(wp))
            } else {
                table.log_zeta_even(j).map(|v| Float::with_val(wp, v))
            }
        })
        .collect::<Result<_>>()?;
    let g = crate::parallel::map_range(count, ctx.execution(), |j| {
        let mut acc = Float::new(wp);
        let mut abs = mag::ZERO;
        for b in 1..=j {
            let t = Float::with_val(wp, &a[j - b] * &l[b]);
            abs = mag::add(abs, mag::of(&t));
            acc += t;
        }
        let err = mag::add(abs + ((j + 2) as f64).log2() + 1.0 - cb as f64, abs - wp as f64);
        FValue::Value {
            v: Complex::with_val(cb, (acc, 0)),
            err_log2: err,
        }
    });
    let mut g = g;
    // b >= 1 leaves G_0 empty.
    g[0] = FValue::skipped("log zeta(0) is not real; the j = 0 term vanishes at integers");
    CoefficientSeries::build("prime indicator".into(), true, g, Kernel::Cosc, -8, ctx)
}

/// 1 at primes, 0 at other positive integers.
pub fn prime_indicator(n: f64, ctx: &NumericContext) -> Result<SeriesResult> {
    if !(n > 0.0) {
        return Err(Error::domain(format!("prime indicator needs n > 0, got {n}")));
    }
    prime_indicator_series(ctx)?.eval(n, Basis::Monomial, ctx)
}

/// π(x) from the indicator series with Faulhaber power sums.
pub fn pi_series(x: f64, ctx: &NumericContext) -> Result<SeriesResult> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!("pi(x) needs x >= 0, got {x}")));
    }
    prime_indicator_series(ctx)?.eval(x, Basis::Faulhaber, ctx)
}

pub fn mertens_series(x: f64, ctx: &NumericContext) -> Result<SeriesResult> {
    require_counting_variant(ctx)?;
    if !(x >= 0.0) {
        return Err(Error::domain(format!("M(x) needs x >= 0, got {x}")));
    }
    Evaluator::new(ctx.clone())
        .series(FunctionId::Moebius)?
        .eval(x, Basis::Faulhaber, ctx)
}

fn trial_is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Scales value and error of a result by a positive factor.
fn scale_result(r: &mut SeriesResult, f: u32) {
    r.value *= f;
    let l = (f as f64).log2();
    r.abs_error_log2 += l;
    r.peak_term_log2 += l;
    r.first_omitted_log2 += l;
}

fn add_exact(r: &mut SeriesResult, x: &Rational) {
    r.value += x;
    let noise = mag::of_complex(&r.value) + 1.0 - r.value.prec().0 as f64;
    r.add_error_log2(noise);
}

/// ½·1_P(x) + 2 Σ e_h x^{2h+1}/(2h+1). The half weight is a heuristic; the
/// value carries no accuracy claim beyond the series' own error bound.
pub fn pi_asymptotic(x: u64, ctx: &NumericContext) -> Result<SeriesResult> {
    pi_asymptotic_many(&[x], ctx)?.pop().expect("one point")
}

/// [`pi_asymptotic`] at many x, sharing one indicator series.
pub fn pi_asymptotic_many(xs: &[u64], ctx: &NumericContext) -> Result<Vec<Result<SeriesResult>>> {
    if xs.contains(&0) {
        return Err(Error::domain("pi_asymptotic needs x >= 1"));
    }
    let series = prime_indicator_series(ctx)?;
    Ok(crate::parallel::map_slice(xs, ctx.execution(), |&x| {
        let mut r = series.eval(x as f64, Basis::Integrated, ctx)?;
        scale_result(&mut r, 2);
        if trial_is_prime(x) {
            add_exact(&mut r, &Rational::from((1, 2)));
        }
        r.certified = false;
        r.notes.push(format!("conjectured approximation, {} variant", ctx.variant()));
        Ok(r)
    }))
}

fn real_rational(e: Exact) -> Rational {
    match e {
        Exact::Int(i) => Rational::from(i),
        Exact::Rat(r) => r,
        other => unreachable!("summatory values are rational, got {other}"),
    }
}

/// J(x) exactly, and Λ(x)/(2 log x) + 2 Σ k_i x^{2i+1}/(2i+1) with k_i from log ζ.
pub fn j_exact_and_asymptotic(x: u64, ctx: &NumericContext, sieve: &Sieve) -> Result<(Rational, SeriesResult)> {
    j_table(&[x], ctx, sieve)?.pop().expect("one row")
}

/// [`j_exact_and_asymptotic`] for many x, sharing one coefficient series.
pub fn j_table(xs: &[u64], ctx: &NumericContext, sieve: &Sieve) -> Result<Vec<Result<(Rational, SeriesResult)>>> {
    if xs.contains(&0) {
        return Err(Error::domain("J(x) needs x >= 1"));
    }
    require_counting_variant(ctx)?;
    let series = Evaluator::new(ctx.clone()).series(FunctionId::MangoldtOverLog)?;
    Ok(crate::parallel::map_slice(xs, ctx.execution(), |&x| {
        let exact = real_rational(exact_summatory(Summatory::PrimePowerCount, x, sieve)?);
        let mut r = series.eval(x as f64, Basis::Integrated, ctx)?;
        scale_result(&mut r, 2);
        // Λ(1)/log 1 is taken as 0.
        let half = sieve.mangoldt_over_log(x)? / 2u32;
        add_exact(&mut r, &half);
        r.certified = false;
        Ok((exact, r))
    }))
}

/// Σ_{n<=x} d(n) exactly, and d(x)/2 + 2 Σ k_i x^{2i+1}/(2i+1) with k_i from ζ².
pub fn dsum_exact_and_asymptotic(x: u64, ctx: &NumericContext, sieve: &Sieve) -> Result<(Integer, SeriesResult)> {
    dsum_table(&[x], ctx, sieve)?.pop().expect("one row")
}

/// [`dsum_exact_and_asymptotic`] for many x, sharing one coefficient series.
pub fn dsum_table(xs: &[u64], ctx: &NumericContext, sieve: &Sieve) -> Result<Vec<Result<(Integer, SeriesResult)>>> {
    if xs.contains(&0) {
        return Err(Error::domain("divisor sum needs x >= 1"));
    }
    require_counting_variant(ctx)?;
    let provider = FnProvider::new("zeta^2, j = 0 omitted", true, |j, p, t: &crate::constants::ZetaTable| {
        if j == 0 {
            return Ok(FValue::skipped("j = 0 omitted in the divisor-sum approximation"));
        }
        let z = Float::with_val(p, t.zeta_even(j));
        Ok(FValue::real(Float::with_val(p, z.square_ref())))
    });
    let series = CoefficientSeries::from_provider(&provider, ctx)?;
    Ok(crate::parallel::map_slice(xs, ctx.execution(), |&x| {
        let exact = match exact_summatory(Summatory::DivisorSum, x, sieve)? {
            Exact::Int(i) => i,
            other => unreachable!("divisor sums are integers, got {other}"),
        };
        let mut r = series.eval(x as f64, Basis::Integrated, ctx)?;
        scale_result(&mut r, 2);
        let half = Rational::from((sieve.divisor_count(x)?, 2u64));
        add_exact(&mut r, &half);
        r.certified = false;
        Ok((exact, r))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::make_context;

    #[test]
    fn faulhaber_examples() {
        assert_eq!(faulhaber_power_sum(3.0, 1, 64), 14);
        assert_eq!(faulhaber_power_sum(3.0, 2, 64), 98);
        for h in 0..8 {
            assert_eq!(faulhaber_power_sum(1.0, h, 64), 1);
        }
        assert_eq!(faulhaber_asymptotic(2.0, 0, 64), 2.5);
        let v = faulhaber_asymptotic(10.0, 1, 64).to_f64();
        assert!((v - (1000.0 / 3.0 + 50.0)).abs() < 1e-12);
    }

    #[test]
    fn faulhaber_polynomial_is_exact_on_integers() {
        let fe = FaulhaberEvaluator::new(6);
        for h in 0..=6usize {
            let mut direct = Integer::new();
            for x in 0..=100u32 {
                if x > 0 {
                    direct += Integer::from(x).pow(2 * h as u32);
                }
                assert_eq!(fe.exact(&Rational::from(x), h), direct, "x = {x}, h = {h}");
            }
        }
    }

    #[test]
    fn float_evaluation_matches_exact_and_bounds_error() {
        let fe = FaulhaberEvaluator::new(80);
        for &(x, h) in &[(2.5f64, 3usize), (0.3, 40), (7.25, 80)] {
            let xr = Rational::from_f64(x).unwrap();
            let exact = fe.exact(&xr, h);
            let (v, e) = fe.eval(&Float::with_val(200, x), h, 200);
            let d = Float::with_val(400, &v - Float::with_val(400, &exact));
            assert!(mag::of(&d) <= e, "x = {x}, h = {h}");
            assert!(e < mag::of(&v) - 150.0);
        }
    }

    #[test]
    fn asymptotic_gap_shrinks() {
        let mut last = f64::INFINITY;
        for x in [10.0, 100.0, 1000.0] {
            let a = faulhaber_asymptotic(x, 1, 128).to_f64();
            let e = faulhaber_power_sum(x, 1, 128).to_f64();
            let gap = (a - e).abs() / e;
            assert!(gap < last);
            last = gap;
        }
    }

    #[test]
    fn prime_indicator_small() {
        let ctx = make_context(6.0, 1e-10, Variant::TwoPi).unwrap();
        let s = prime_indicator_series(&ctx).unwrap();
        for (n, want) in [(1.0, 0.0), (2.0, 1.0), (4.0, 0.0), (5.0, 1.0), (6.0, 0.0)] {
            let r = s.eval(n, Basis::Monomial, &ctx).unwrap();
            assert!((r.to_f64() - want).abs() < 1e-10, "n = {n}: {}", r.to_f64());
        }
    }

    #[test]
    fn pi_variant_is_rejected() {
        let ctx = make_context(3.0, 1e-6, Variant::Pi).unwrap();
        assert!(pi_series(3.0, &ctx).is_err());
    }
}
