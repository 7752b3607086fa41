//! Named arithmetic functions as instances of the inversion series.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rug::ops::Pow;
use rug::{Complex, Float};

use crate::constants::{nth_prime_zeta, shifted_zeta, zeta_derivative_even, Shift, ZetaTable};
use crate::error::{Error, Result};
use crate::inversion::{Basis, CoefficientProvider, CoefficientSeries, FValue, Kernel};
use crate::mag;
use crate::numerics::{NumericContext, SeriesResult};
use crate::oracle::{PrimeGenerator, PrimeSource};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FunctionId {
    Moebius,
    /// Coefficients of ζ^{-q}; negative q gives the q-fold divisor counts.
    MoebiusQ(i64),
    /// Σ_{d|n} d^m
    SigmaM(Shift),
    AbsMoebius,
    Liouville,
    Mangoldt,
    MangoldtOverLog,
    /// n^{-s}
    PowerValue(Shift),
    /// (log n)^k
    LogPow(u32),
    NthPrime,
    /// Σ d^m over square-free d | n
    SquarefreeDivisorSum(Shift),
    OmegaDistinct,
    UnitFunction,
    /// μ(n)/n^m
    MoebiusOverPow(Shift),
    /// Coefficients of ζ^z, principal branch.
    ZetaPower(Shift),
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use FunctionId::*;
        match self {
            Moebius => write!(f, "moebius"),
            MoebiusQ(q) => write!(f, "moebius_q:{q}"),
            SigmaM(m) => write!(f, "sigma_m:{m}"),
            AbsMoebius => write!(f, "abs_moebius"),
            Liouville => write!(f, "liouville"),
            Mangoldt => write!(f, "mangoldt"),
            MangoldtOverLog => write!(f, "mangoldt_over_log"),
            PowerValue(s) => write!(f, "power_value:{s}"),
            LogPow(k) => write!(f, "log_pow:{k}"),
            NthPrime => write!(f, "nth_prime"),
            SquarefreeDivisorSum(m) => write!(f, "squarefree_divisor_sum:{m}"),
            OmegaDistinct => write!(f, "omega"),
            UnitFunction => write!(f, "unit"),
            MoebiusOverPow(m) => write!(f, "moebius_over_pow:{m}"),
            ZetaPower(z) => write!(f, "zeta_power:{z}"),
        }
    }
}

/// Parses "1.5", "-0.5", "i", "2i", "0.5+1i", "1-2i".
pub fn parse_shift(s: &str) -> Result<Shift> {
    let bad = || Error::domain(format!("cannot parse `{s}` as a real or complex number"));
    let t = s.trim().replace(' ', "");
    if let Some(body) = t.strip_suffix('i') {
        // split at the last sign that is not a leading sign or exponent sign
        let bytes = body.as_bytes();
        let mut cut = None;
        for (i, &b) in bytes.iter().enumerate().skip(1) {
            if (b == b'+' || b == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
                cut = Some(i);
            }
        }
        let (re, im) = match cut {
            Some(i) => (&body[..i], &body[i..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            v => v.parse::<f64>().map_err(|_| bad())?,
        };
        let re = re.parse::<f64>().map_err(|_| bad())?;
        return Ok(Shift::new(re, im));
    }
    t.parse::<f64>().map(Shift::real).map_err(|_| bad())
}

impl FromStr for FunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use FunctionId::*;
        let (name, param) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let need = |what: &str| {
            param.ok_or_else(|| Error::domain(format!("`{name}` needs a parameter: {name}:<{what}>")))
        };
        let int = |what: &str| -> Result<i64> {
            need(what)?
                .parse()
                .map_err(|_| Error::domain(format!("`{name}` needs an integer {what}")))
        };
        Ok(match name {
            "moebius" | "mu" => Moebius,
            "moebius_q" | "mu_q" => MoebiusQ(int("q")?),
            "sigma_m" | "sigma" => SigmaM(parse_shift(need("m")?)?),
            "divisors" | "d" => SigmaM(Shift::real(0.0)),
            "abs_moebius" => AbsMoebius,
            "liouville" => Liouville,
            "mangoldt" => Mangoldt,
            "mangoldt_over_log" => MangoldtOverLog,
            "power_value" => PowerValue(parse_shift(need("s")?)?),
            "log_pow" => LogPow(u32::try_from(int("k")?).map_err(|_| Error::domain("k must be >= 1"))?),
            "nth_prime" => NthPrime,
            "squarefree_divisor_sum" => SquarefreeDivisorSum(parse_shift(need("m")?)?),
            "omega" => OmegaDistinct,
            "unit" => UnitFunction,
            "moebius_over_pow" => MoebiusOverPow(parse_shift(need("m")?)?),
            "zeta_power" => ZetaPower(parse_shift(need("z")?)?),
            "sqrt_zeta" => ZetaPower(Shift::real(0.5)),
            "zeta_i" => ZetaPower(Shift::new(0.0, 1.0)),
            other => return Err(Error::domain(format!("unknown function `{other}`"))),
        })
    }
}

/// Entries of ζ(m + 2j·step) below this are treated as zeros of ζ.
fn zero_threshold_log2(prec: u32) -> f64 {
    -(prec as f64) / 2.0
}

/// Provider for one of the named functions.
pub struct NamedProvider {
    id: FunctionId,
    primes: Arc<dyn PrimeSource + Send + Sync>,
}

fn value(v: Complex, err_log2: f64) -> FValue {
    FValue::Value { v, err_log2 }
}

fn rel_err(v: &Complex, bits: f64) -> f64 {
    mag::of_complex(v) + bits
}

impl NamedProvider {
    pub fn new(id: FunctionId, primes: Arc<dyn PrimeSource + Send + Sync>) -> Self {
        NamedProvider { id, primes }
    }

    fn zeta_real(t: &ZetaTable, j: usize, prec: u32) -> Float {
        Float::with_val(prec, t.zeta_even(j))
    }

    fn nth_prime_values(&self, count: usize, prec: u32, ctx: &NumericContext) -> Result<Vec<FValue>> {
        // Per-index tolerance from the largest weight the value's error can
        // carry into any evaluation the context allows.
        let n_max = ctx.n_max().floor().max(1.0) as u64;
        let c = ctx.variant().angular_f64();
        let thr = ctx.decay_threshold();
        let goal = mag::from_f64(ctx.target_abs_error()) - 3.0 - (count as f64).log2() - 1.0;
        let mut out = vec![
            FValue::skipped("P(0) diverges"),
            FValue::skipped("P(2) diverges: p_n ~ n log n"),
        ];
        let vals = crate::parallel::map_range(count.saturating_sub(2), ctx.execution(), |jj| {
            let j = jj + 2;
            let m_min = thr.saturating_sub(j);
            let mut w = mag::ZERO;
            for n in 1..=n_max {
                let x = c * n as f64;
                let switch = ((x - 3.0) / 2.0).ceil().max(0.0) as usize;
                for m in [m_min, m_min.max(switch.saturating_sub(1)), m_min.max(switch)] {
                    w = w.max(2.0 * j as f64 * (n as f64).log2() + sinc_partial_bound(x, m));
                }
            }
            let tol = mag::to_f64((goal - w).clamp(-1000.0, 0.0)).max(f64::MIN_POSITIVE);
            let (v, e) = nth_prime_zeta(2.0 * j as f64, tol, prec, self.primes.as_ref())?;
            let err = mag::add(mag::from_f64(e), mag::of(&v) - prec as f64);
            Ok::<FValue, Error>(value(crate::numerics::real_of(v), err))
        });
        for v in vals {
            out.push(v?);
        }
        out.truncate(count);
        Ok(out)
    }
}

/// log2 bound on the sinc-kernel partial sum Σ_{m'<=m}, at a zero of sin x.
fn sinc_partial_bound(x: f64, m: usize) -> f64 {
    let term = |k: usize| 2.0 * k as f64 * x.log2() - mag::log2_factorial(2 * k as u64 + 1);
    if (2 * m + 3) as f64 >= x {
        term(m + 1) + 1.0
    } else {
        mag::sum((0..=m).map(term))
    }
}

impl CoefficientProvider for NamedProvider {
    fn name(&self) -> String {
        self.id.to_string()
    }

    fn is_real(&self) -> bool {
        match self.id {
            FunctionId::SigmaM(m)
            | FunctionId::PowerValue(m)
            | FunctionId::SquarefreeDivisorSum(m)
            | FunctionId::MoebiusOverPow(m)
            | FunctionId::ZetaPower(m) => m.is_real(),
            _ => true,
        }
    }

    fn values(&self, count: usize, prec: u32, ctx: &NumericContext) -> Result<Vec<FValue>> {
        use FunctionId::*;
        let t = ctx.zeta_table()?;
        let real = |x: Float| FValue::real(x);
        let zero_thr = zero_threshold_log2(prec);
        let per_j = |f: &dyn Fn(usize) -> Result<FValue>| -> Result<Vec<FValue>> { (0..count).map(f).collect() };
        match self.id {
            Moebius => per_j(&|j| Ok(real(Float::with_val(prec, t.inv_zeta_even(j))))),
            UnitFunction => per_j(&|_| Ok(real(Float::with_val(prec, 1)))),
            MoebiusQ(q) => per_j(&|j| {
                let z = Self::zeta_real(&t, j, prec + 16);
                Ok(real(Float::with_val(prec, z.pow(-q))))
            }),
            AbsMoebius => per_j(&|j| {
                let a = Self::zeta_real(&t, j, prec + 8);
                let b = Self::zeta_real(&t, 2 * j, prec + 8);
                Ok(real(Float::with_val(prec, a / b)))
            }),
            Liouville => per_j(&|j| {
                let a = Self::zeta_real(&t, 2 * j, prec + 8);
                let b = Self::zeta_real(&t, j, prec + 8);
                Ok(real(Float::with_val(prec, a / b)))
            }),
            MangoldtOverLog => per_j(&|j| {
                if j == 0 {
                    return Ok(FValue::skipped("log zeta(0) is not real; the j = 0 term vanishes at integers"));
                }
                Ok(real(Float::with_val(prec, t.log_zeta_even(j)?)))
            }),
            Mangoldt => {
                let d = t.zeta_prime_even()?;
                per_j(&|j| {
                    let (dz, dz_err) = match d.get(j) {
                        Some((v, e)) => (v.clone(), *e),
                        None => {
                            let mut v = zeta_derivative_even(prec + 8, j + 1, 1)?;
                            v.pop().expect("one value per index")
                        }
                    };
                    let z = Self::zeta_real(&t, j, prec + 8);
                    let v = Float::with_val(prec, -dz / &z);
                    let err = mag::add(dz_err - mag::of(&z), mag::of(&v) + 1.0 - prec as f64);
                    Ok(value(crate::numerics::real_of(v), err))
                })
            }
            LogPow(k) => {
                if k == 0 {
                    return Err(Error::domain("log_pow needs k >= 1"));
                }
                let d = if k == 1 {
                    t.zeta_prime_even()?.iter().take(count).cloned().collect::<Vec<_>>()
                } else {
                    zeta_derivative_even(prec, count, k as usize)?
                };
                if d.len() < count {
                    return Err(Error::Provider {
                        provider: self.name(),
                        j: d.len(),
                        reason: "derivative table too short".into(),
                    });
                }
                let sign = if k % 2 == 0 { 1 } else { -1 };
                Ok(d.into_iter()
                    .map(|(v, e)| value(crate::numerics::real_of(Float::with_val(prec, v * sign)), e))
                    .collect())
            }
            SigmaM(m) => {
                // ζ(2j) ζ(2j - m)
                let shifted = shifted_zeta(&t, Shift::new(-m.re, -m.im), 1, count, prec)?;
                Ok(shifted
                    .into_iter()
                    .enumerate()
                    .map(|(j, zs)| match zs {
                        None => FValue::skipped(format!("2j - m = 1 is the pole of zeta (j = {j})")),
                        Some((z, e)) => {
                            let a = Self::zeta_real(&t, j, prec + 8);
                            let v = Complex::with_val(prec, &z * &a);
                            let err = mag::add(e + mag::of(&a), rel_err(&v, 1.0 - prec as f64));
                            value(v, err)
                        }
                    })
                    .collect())
            }
            PowerValue(s) => {
                let shifted = shifted_zeta(&t, s, 1, count, prec)?;
                Ok(shifted
                    .into_iter()
                    .enumerate()
                    .map(|(j, zs)| match zs {
                        None => FValue::skipped(format!("s + 2j = 1 is the pole of zeta (j = {j})")),
                        Some((z, e)) => value(z, e),
                    })
                    .collect())
            }
            MoebiusOverPow(m) => {
                let shifted = shifted_zeta(&t, m, 1, count, prec + 8)?;
                Ok(shifted
                    .into_iter()
                    .enumerate()
                    .map(|(j, zs)| match zs {
                        // 1/ζ vanishes at the pole
                        None => value(Complex::new(prec), mag::ZERO),
                        Some((z, e)) => {
                            let lz = mag::of_complex(&z);
                            if lz < zero_thr || e >= lz - 1.0 {
                                return FValue::skipped(format!("zeta(2j + m) is (near) zero at j = {j}"));
                            }
                            let v = Complex::with_val(prec, z.recip());
                            let err = mag::add(e - 2.0 * lz + 1.0, rel_err(&v, 1.0 - prec as f64));
                            value(v, err)
                        }
                    })
                    .collect())
            }
            SquarefreeDivisorSum(m) => {
                // ζ(2j) ζ(2j - m) / ζ(4j - 2m)
                let num = shifted_zeta(&t, Shift::new(-m.re, -m.im), 1, count, prec + 8)?;
                let den = shifted_zeta(&t, Shift::new(-2.0 * m.re, -2.0 * m.im), 2, count, prec + 8)?;
                Ok(num
                    .into_iter()
                    .zip(den)
                    .enumerate()
                    .map(|(j, (a, b))| {
                        let Some((za, ea)) = a else {
                            return FValue::skipped(format!("2j - m = 1 is the pole of zeta (j = {j})"));
                        };
                        let Some((zb, eb)) = b else {
                            return value(Complex::new(prec), mag::ZERO);
                        };
                        let lb = mag::of_complex(&zb);
                        if lb < zero_thr || eb >= lb - 1.0 {
                            return FValue::skipped(format!("zeta(4j - 2m) is (near) zero at j = {j}"));
                        }
                        let z = Self::zeta_real(&t, j, prec + 8);
                        let num = Complex::with_val(prec + 8, &za * &z);
                        let v = Complex::with_val(prec, &num / &zb);
                        let lv = mag::of_complex(&v);
                        let err = mag::sum([ea + mag::of(&z) - lb, eb + lv - lb + 1.0, lv + 1.0 - prec as f64]);
                        value(v, err)
                    })
                    .collect())
            }
            ZetaPower(zexp) => {
                let w = zexp.to_complex(prec + 16);
                per_j(&|j| {
                    if j == 0 && zexp.is_real() && zexp.as_integer().is_none() {
                        return Ok(FValue::skipped(
                            "zeta(0) < 0: its principal power is complex; the j = 0 term vanishes at integers",
                        ));
                    }
                    let z = Complex::with_val(prec + 16, (Self::zeta_real(&t, j, prec + 16), 0));
                    let v = Complex::with_val(prec, (z.ln() * &w).exp());
                    Ok(FValue::rounded(v))
                })
            }
            NthPrime => self.nth_prime_values(count, prec, ctx),
            OmegaDistinct => Err(Error::domain(
                "omega has no provider of its own; it is log2 of the square-free divisor count",
            )),
        }
    }
}

/// Evaluates named functions, reusing coefficient series across arguments.
pub struct Evaluator {
    ctx: NumericContext,
    nth_prime_ctx: Mutex<Option<NumericContext>>,
    primes: Arc<dyn PrimeSource + Send + Sync>,
    cache: Mutex<HashMap<String, Arc<CoefficientSeries>>>,
}

/// Outer terms kept past the decay threshold for the n-th prime series, so
/// that the slowly converging P(4), P(6), ... are annihilated.
pub const NTH_PRIME_EXTRA_TERMS: usize = 24;

impl Evaluator {
    pub fn new(ctx: NumericContext) -> Evaluator {
        Self::with_primes(ctx, Arc::new(PrimeGenerator::new()))
    }

    pub fn with_primes(ctx: NumericContext, primes: Arc<dyn PrimeSource + Send + Sync>) -> Evaluator {
        Evaluator {
            ctx,
            nth_prime_ctx: Mutex::new(None),
            primes,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn ctx(&self) -> &NumericContext {
        &self.ctx
    }

    /// Context a function is evaluated under.
    pub fn ctx_for(&self, id: FunctionId) -> Result<NumericContext> {
        if id != FunctionId::NthPrime {
            return Ok(self.ctx.clone());
        }
        let mut slot = self.nth_prime_ctx.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(c) = slot.as_ref() {
            return Ok(c.clone());
        }
        let c = self.ctx.with_extra_terms(NTH_PRIME_EXTRA_TERMS)?;
        *slot = Some(c.clone());
        Ok(c)
    }

    pub fn provider(&self, id: FunctionId) -> NamedProvider {
        NamedProvider::new(id, self.primes.clone())
    }

    pub fn series(&self, id: FunctionId) -> Result<Arc<CoefficientSeries>> {
        let id = match id {
            FunctionId::OmegaDistinct => FunctionId::SquarefreeDivisorSum(Shift::real(0.0)),
            other => other,
        };
        let key = id.to_string();
        if let Some(s) = self.cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(s.clone());
        }
        let ctx = self.ctx_for(id)?;
        let s = Arc::new(CoefficientSeries::from_provider(&self.provider(id), &ctx)?);
        self.cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key, s.clone());
        Ok(s)
    }

    pub fn eval(&self, id: FunctionId, n: f64) -> Result<SeriesResult> {
        if !(n > 0.0) {
            return Err(Error::domain(format!("{id} is defined for n > 0, got {n}")));
        }
        let integer_only = matches!(id, FunctionId::PowerValue(_) | FunctionId::LogPow(_) | FunctionId::NthPrime);
        if integer_only && n.fract() != 0.0 {
            return Err(Error::domain(format!("{id} needs a positive integer argument, got {n}")));
        }
        let ctx = self.ctx_for(id)?;
        ctx.check_argument(n)?;
        let r = self.series(id)?.eval(n, Basis::Monomial, &ctx)?;
        match id {
            FunctionId::OmegaDistinct => omega_from_count(r),
            _ => Ok(r),
        }
    }

    pub fn eval_many(&self, id: FunctionId, ns: &[f64]) -> Vec<Result<SeriesResult>> {
        if let Err(e) = self.series(id) {
            let msg = e.to_string();
            return ns.iter().map(|_| Err(Error::domain(msg.clone()))).collect();
        }
        crate::parallel::map_slice(ns, self.ctx.execution(), |&n| self.eval(id, n))
    }
}

/// ω(n) = log2 of the square-free divisor count 2^{ω(n)}.
fn omega_from_count(mut r: SeriesResult) -> Result<SeriesResult> {
    let v = r.to_f64();
    let e = r.abs_error_estimate();
    if !(v > 0.0) || e >= v / 2.0 {
        return Err(Error::PrecisionShortfall(format!(
            "square-free divisor count evaluated to {v:.3e} (error bound {e:.3e}); its log2 is undefined"
        )));
    }
    let wp = r.value.prec().0;
    let raw = Float::with_val(wp, r.re()).log2();
    // worst case |log2(v ± e) - log2 v|
    let err = -(1.0 - e / v).log2();
    let nearest = v.log2().round();
    let rel_gap = (v / nearest.exp2() - 1.0).abs();
    if rel_gap <= 2f64.powi(-10) {
        r.value = Complex::with_val(wp, (nearest, 0));
        r.notes.push(format!("count {v:.6} snapped to 2^{nearest}"));
    } else {
        r.value = Complex::with_val(wp, (raw, 0));
        r.notes.push(format!("count {v:.6} is not within 2^-10 of a power of two; raw log2 reported"));
        r.certified = false;
    }
    r.abs_error_log2 = mag::from_f64(err).max(mag::from_f64(f64::MIN_POSITIVE));
    Ok(r)
}

macro_rules! op {
    ($(#[$m:meta])* $name:ident, $id:expr) => {
        $(#[$m])*
        pub fn $name(n: f64, ctx: &NumericContext) -> Result<SeriesResult> {
            Evaluator::new(ctx.clone()).eval($id, n)
        }
    };
    ($(#[$m:meta])* $name:ident($p:ident: $t:ty), $id:expr) => {
        $(#[$m])*
        pub fn $name(n: f64, $p: $t, ctx: &NumericContext) -> Result<SeriesResult> {
            Evaluator::new(ctx.clone()).eval($id, n)
        }
    };
}

op!(moebius, FunctionId::Moebius);
op!(moebius_q(q: i64), FunctionId::MoebiusQ(q));
op!(sigma_m(m: Shift), FunctionId::SigmaM(m));
op!(abs_moebius, FunctionId::AbsMoebius);
op!(liouville, FunctionId::Liouville);
op!(mangoldt, FunctionId::Mangoldt);
op!(mangoldt_over_log, FunctionId::MangoldtOverLog);
op!(power_value(s: Shift), FunctionId::PowerValue(s));
op!(log_pow(k: u32), FunctionId::LogPow(k));
op!(squarefree_divisor_power_sum(m: Shift), FunctionId::SquarefreeDivisorSum(m));
op!(omega_distinct, FunctionId::OmegaDistinct);
op!(moebius_over_pow(m: Shift), FunctionId::MoebiusOverPow(m));
op!(zeta_power(z: Shift), FunctionId::ZetaPower(z));

pub fn nth_prime(n: u64, ctx: &NumericContext, primes: Arc<dyn PrimeSource + Send + Sync>) -> Result<SeriesResult> {
    Evaluator::with_primes(ctx.clone(), primes).eval(FunctionId::NthPrime, n as f64)
}

/// Coefficient series for an arbitrary kernel, for callers composing their own.
pub fn series_for(provider: &dyn CoefficientProvider, kernel: Kernel, scale: i32, ctx: &NumericContext) -> Result<CoefficientSeries> {
    let values = provider.values(ctx.max_outer_terms() + 2, ctx.coefficient_bits(), ctx)?;
    CoefficientSeries::build(provider.name(), provider.is_real(), values, kernel, scale, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{make_context, Variant};

    fn near(r: &SeriesResult, want: f64, tol: f64) {
        assert!((r.to_f64() - want).abs() <= tol, "got {} want {want}", r.to_f64());
    }

    #[test]
    fn parse_ids() {
        assert_eq!("moebius".parse::<FunctionId>().unwrap(), FunctionId::Moebius);
        assert_eq!(
            "zeta_power:0+1i".parse::<FunctionId>().unwrap(),
            FunctionId::ZetaPower(Shift::new(0.0, 1.0))
        );
        assert_eq!(
            "power_value:-0.5".parse::<FunctionId>().unwrap(),
            FunctionId::PowerValue(Shift::real(-0.5))
        );
        assert_eq!(parse_shift("1-2i").unwrap(), Shift::new(1.0, -2.0));
        assert_eq!(parse_shift("-i").unwrap(), Shift::new(0.0, -1.0));
        assert!("sigma_m".parse::<FunctionId>().is_err());
        assert!("bogus".parse::<FunctionId>().is_err());
        for id in [FunctionId::MoebiusQ(-2), FunctionId::SigmaM(Shift::real(1.0)), FunctionId::LogPow(2)] {
            assert_eq!(id.to_string().parse::<FunctionId>().unwrap(), id);
        }
    }

    #[test]
    fn moebius_examples() {
        let ctx = make_context(30.0, 1e-10, Variant::TwoPi).unwrap();
        let ev = Evaluator::new(ctx);
        near(&ev.eval(FunctionId::Moebius, 1.0).unwrap(), 1.0, 1e-12);
        near(&ev.eval(FunctionId::Moebius, 2.0).unwrap(), -1.0, 1e-12);
        near(&ev.eval(FunctionId::Moebius, 4.0).unwrap(), 0.0, 1e-12);
        near(&ev.eval(FunctionId::Moebius, 30.0).unwrap(), -1.0, 1e-10);
    }

    #[test]
    fn small_examples() {
        let ctx = make_context(12.0, 1e-10, Variant::TwoPi).unwrap();
        let ev = Evaluator::new(ctx);
        near(&ev.eval(FunctionId::MoebiusQ(2), 2.0).unwrap(), -2.0, 1e-10);
        near(&ev.eval(FunctionId::MoebiusQ(-2), 4.0).unwrap(), 3.0, 1e-10);
        near(&ev.eval(FunctionId::MoebiusQ(0), 5.0).unwrap(), 0.0, 1e-10);
        near(&ev.eval(FunctionId::SigmaM(Shift::real(1.0)), 6.0).unwrap(), 12.0, 1e-10);
        near(&ev.eval(FunctionId::SigmaM(Shift::real(-1.0)), 6.0).unwrap(), 2.0, 1e-10);
        near(&ev.eval(FunctionId::AbsMoebius, 4.0).unwrap(), 0.0, 1e-10);
        near(&ev.eval(FunctionId::Liouville, 12.0).unwrap(), -1.0, 1e-10);
        near(&ev.eval(FunctionId::Mangoldt, 9.0).unwrap(), 3f64.ln(), 1e-10);
        near(&ev.eval(FunctionId::MangoldtOverLog, 4.0).unwrap(), 0.5, 1e-10);
        near(&ev.eval(FunctionId::PowerValue(Shift::real(-0.5)), 7.0).unwrap(), 7f64.sqrt(), 1e-10);
        near(&ev.eval(FunctionId::PowerValue(Shift::real(1.0)), 2.0).unwrap(), 0.5, 1e-10);
        near(&ev.eval(FunctionId::LogPow(2), 9.0).unwrap(), 9f64.ln().powi(2), 1e-8);
        near(&ev.eval(FunctionId::SquarefreeDivisorSum(Shift::real(1.0)), 6.0).unwrap(), 12.0, 1e-10);
        near(&ev.eval(FunctionId::OmegaDistinct, 12.0).unwrap(), 2.0, 1e-9);
        near(&ev.eval(FunctionId::MoebiusOverPow(Shift::real(1.0)), 2.0).unwrap(), -0.5, 1e-10);
    }

    #[test]
    fn domain_errors() {
        let ev = Evaluator::new(make_context(5.0, 1e-10, Variant::TwoPi).unwrap());
        assert!(ev.eval(FunctionId::Moebius, 0.0).is_err());
        assert!(ev.eval(FunctionId::NthPrime, 2.5).is_err());
    }
}
