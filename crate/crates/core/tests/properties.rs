use std::sync::OnceLock;

use proptest::prelude::*;
use rug::ops::Pow;
use rug::{Complex, Float, Integer, Rational};

use dirinv::arith::{Evaluator, FunctionId};
use dirinv::constants::ZetaTable;
use dirinv::indicator::{divides_exact, indicator_coefficients};
use dirinv::inversion::{invert_at, invert_compact, zeta_provider, Basis, CoefficientProvider, CoefficientSeries, FValue, FnProvider, LinearCombination};
use dirinv::oracle::{exact, Sieve};
use dirinv::primecount::FaulhaberEvaluator;
use dirinv::{make_context, Execution, NumericContext, Variant};

const TGT: f64 = 1e-10;

fn ctx() -> &'static NumericContext {
    static C: OnceLock<NumericContext> = OnceLock::new();
    C.get_or_init(|| make_context(20.0, TGT, Variant::TwoPi).unwrap())
}

fn sieve() -> &'static Sieve {
    static S: OnceLock<Sieve> = OnceLock::new();
    S.get_or_init(|| Sieve::new(1000).unwrap())
}

fn evaluator() -> &'static Evaluator {
    static E: OnceLock<Evaluator> = OnceLock::new();
    E.get_or_init(|| Evaluator::new(ctx().clone()))
}

fn zeta_pow(k: i32) -> impl CoefficientProvider {
    FnProvider::new(format!("zeta^{k}"), true, move |j, p, t: &ZetaTable| {
        let z = Float::with_val(p, t.zeta_even(j));
        Ok(FValue::real(Float::with_val(p, (&z).pow(k))))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inversion_is_linear(
        a in -16i32..=16, b in -16i32..=16,
        fa in prop::sample::select(vec![1, 2, -1]),
        fb in prop::sample::select(vec![1, 2, -1]),
        n in 0.5f64..12.0,
    ) {
        let (alpha, beta) = (a as f64 / 8.0, b as f64 / 8.0);
        let comb = LinearCombination {
            alpha: Complex::with_val(64, (alpha, 0)),
            a: zeta_pow(fa),
            beta: Complex::with_val(64, (beta, 0)),
            b: zeta_pow(fb),
        };
        let c = ctx();
        let l = invert_at(&comb, n, c).unwrap();
        let x = invert_at(&zeta_pow(fa), n, c).unwrap();
        let y = invert_at(&zeta_pow(fb), n, c).unwrap();
        let rhs = alpha * x.to_f64() + beta * y.to_f64();
        let bound = l.abs_error_estimate()
            + alpha.abs() * x.abs_error_estimate()
            + beta.abs() * y.abs_error_estimate()
            + 4.0 * f64::EPSILON * (rhs.abs() + 1.0);
        prop_assert!((l.to_f64() - rhs).abs() <= bound, "{} vs {rhs}", l.to_f64());
    }

    #[test]
    fn q_shift_leaves_integers_alone(k in 1u64..=10, q in 1usize..=4, n in 1u64..=20) {
        let c = ctx();
        let base = indicator_coefficients(k, 0, c).unwrap().eval(n as f64, Basis::Monomial, c).unwrap();
        let shifted = indicator_coefficients(k, q, c).unwrap().eval(n as f64, Basis::Monomial, c).unwrap();
        prop_assert!((base.to_f64() - shifted.to_f64()).abs() <= 2.0 * TGT);
        let want = divides_exact(n as i64, k).unwrap() as f64;
        prop_assert!((shifted.to_f64() - want).abs() <= TGT);
    }

    #[test]
    fn compact_zeta_is_squared_cosine(n in -0.9f64..0.9) {
        let r = invert_compact(&zeta_provider(), n, ctx()).unwrap();
        let want = (std::f64::consts::PI * n).cos().powi(2);
        prop_assert!((r.to_f64() - want).abs() <= r.abs_error_estimate() + 1e-14);
    }

    #[test]
    fn series_errors_are_honest(
        name in prop::sample::select(vec!["moebius", "liouville", "d", "mangoldt_over_log", "abs_moebius", "sigma_m:1", "omega"]),
        n in 1u64..=20,
    ) {
        let id: FunctionId = name.parse().unwrap();
        let r = evaluator().eval(id, n as f64).unwrap();
        let truth = exact(id, n, sieve()).unwrap().to_complex(r.value.prec().0);
        prop_assert!(r.within_bound_of(&truth), "{id}({n}) = {}, bound {:e}", r.to_f64(), r.abs_error_estimate());
    }

    #[test]
    fn mertens_telescopes(x in 2u64..=20) {
        let c = ctx();
        let s = evaluator().series(FunctionId::Moebius).unwrap();
        let hi = s.eval(x as f64, Basis::Faulhaber, c).unwrap();
        let lo = s.eval((x - 1) as f64, Basis::Faulhaber, c).unwrap();
        let mu = s.eval(x as f64, Basis::Monomial, c).unwrap();
        let bound = hi.abs_error_estimate() + lo.abs_error_estimate() + mu.abs_error_estimate();
        prop_assert!((hi.to_f64() - lo.to_f64() - mu.to_f64()).abs() <= bound.max(2.0 * TGT));
    }

    #[test]
    fn execution_mode_does_not_change_bits(n in 0.25f64..15.0) {
        let seq = ctx().with_execution(Execution::Sequential);
        let par = ctx().with_execution(Execution::Parallel);
        let a = CoefficientSeries::from_provider(&zeta_pow(-1), &seq).unwrap().eval(n, Basis::Monomial, &seq).unwrap();
        let b = CoefficientSeries::from_provider(&zeta_pow(-1), &par).unwrap().eval(n, Basis::Monomial, &par).unwrap();
        prop_assert_eq!(a.value, b.value);
        prop_assert_eq!(a.abs_error_log2.to_bits(), b.abs_error_log2.to_bits());
    }

    #[test]
    fn faulhaber_matches_direct_sums(x in 0u32..=100, h in 0usize..=6) {
        let fe = FaulhaberEvaluator::new(6);
        let direct: Integer = (1..=x).map(|m| Integer::from(m).pow(2 * h as u32)).sum();
        prop_assert_eq!(fe.exact(&Rational::from(x), h), direct);
    }
}

#[test]
fn reflection_of_divisor_sums() {
    let ev = evaluator();
    for m in [1.0, 2.0] {
        let pos: FunctionId = format!("sigma_m:{m}").parse().unwrap();
        let neg: FunctionId = format!("sigma_m:-{m}").parse().unwrap();
        for n in 1..=20u64 {
            let a = ev.eval(pos, n as f64).unwrap();
            let b = ev.eval(neg, n as f64).unwrap();
            let scale = (n as f64).powf(m);
            let lhs = b.to_f64() * scale;
            assert!((lhs - a.to_f64()).abs() <= a.abs_error_estimate() + scale * b.abs_error_estimate() + 1e-12 * scale);
        }
    }
}

#[test]
fn indicator_sums_to_divisor_count() {
    let c = ctx();
    let series: Vec<_> = (1..=20u64).map(|k| indicator_coefficients(k, 0, c).unwrap()).collect();
    for n in 1..=20u64 {
        let total: f64 = series.iter().map(|s| s.eval(n as f64, Basis::Monomial, c).unwrap().to_f64()).sum();
        assert!((total - sieve().divisor_count(n).unwrap() as f64).abs() < 20.0 * TGT, "n = {n}");
    }
}

#[test]
fn variants_agree_on_pi_at_integers() {
    let two = make_context(10.0, TGT, Variant::TwoPi).unwrap();
    let four = make_context(10.0, TGT, Variant::FourPi).unwrap();
    let a = dirinv::primecount::prime_indicator_series(&two).unwrap();
    let b = dirinv::primecount::prime_indicator_series(&four).unwrap();
    for x in 1..=10 {
        let u = a.eval(x as f64, Basis::Faulhaber, &two).unwrap();
        let v = b.eval(x as f64, Basis::Faulhaber, &four).unwrap();
        assert!((u.to_f64() - v.to_f64()).abs() <= u.abs_error_estimate() + v.abs_error_estimate() + 1e-12);
    }
}

#[test]
fn monotone_precision() {
    let c = make_context(20.0, TGT, Variant::TwoPi).unwrap();
    let more = NumericContext::builder(20.0, TGT).precision_bits(c.precision_bits() + 64).build().unwrap();
    for n in [7u64, 13, 19] {
        let truth = sieve().mobius(n).unwrap() as f64;
        let a = dirinv::arith::moebius(n as f64, &c).unwrap();
        let b = dirinv::arith::moebius(n as f64, &more).unwrap();
        assert!((b.to_f64() - truth).abs() <= (a.to_f64() - truth).abs() + a.abs_error_estimate());
    }
}
