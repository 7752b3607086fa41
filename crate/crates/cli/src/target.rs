use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rug::Complex;

use dirinv::arith::{Evaluator, FunctionId};
use dirinv::indicator::indicator_coefficients;
use dirinv::inversion::{delta_series, Basis, CoefficientSeries};
use dirinv::oracle::{exact, exact_summatory, Sieve, Summatory};
use dirinv::primecount::{
    dsum_exact_and_asymptotic, dsum_table, j_exact_and_asymptotic, j_table, pi_asymptotic, pi_asymptotic_many,
    prime_indicator_series,
};
use dirinv::{Error, NumericContext, Result, SeriesResult};

/// Anything the CLI can evaluate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    Arith(FunctionId),
    Pi,
    Mertens,
    PrimeIndicator,
    /// The conjectured π(x) approximation.
    PiAsymptotic,
    /// Λ(x)/(2 log x) plus the integrated series.
    JApprox,
    DsumApprox,
    Indicator { k: u64, q: usize },
    Delta { k: u64 },
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Arith(id) => write!(f, "{id}"),
            Target::Pi => write!(f, "pi"),
            Target::Mertens => write!(f, "mertens"),
            Target::PrimeIndicator => write!(f, "prime_indicator"),
            Target::PiAsymptotic => write!(f, "pi_asymptotic"),
            Target::JApprox => write!(f, "j_approx"),
            Target::DsumApprox => write!(f, "dsum_approx"),
            Target::Indicator { k, q } => write!(f, "indicator:{k}:{q}"),
            Target::Delta { k } => write!(f, "delta:{k}"),
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let int = |i: usize, what: &str| -> Result<u64> {
            parts
                .get(i)
                .ok_or_else(|| Error::Domain(format!("`{}` needs {what}", parts[0])))?
                .parse()
                .map_err(|_| Error::Domain(format!("`{s}`: {what} must be a non-negative integer")))
        };
        Ok(match parts[0] {
            "pi" => Target::Pi,
            "mertens" => Target::Mertens,
            "prime_indicator" | "is_prime" => Target::PrimeIndicator,
            "pi_asymptotic" => Target::PiAsymptotic,
            "j_approx" => Target::JApprox,
            "dsum_approx" => Target::DsumApprox,
            "indicator" => Target::Indicator {
                k: int(1, "a divisor k")?,
                q: if parts.len() > 2 { int(2, "a shift q")? as usize } else { 0 },
            },
            "delta" => Target::Delta { k: int(1, "an index k")? },
            _ => Target::Arith(s.parse()?),
        })
    }
}

impl Target {
    /// Only defined at integers: no continuation to real arguments exists.
    pub fn integer_only(&self) -> bool {
        use FunctionId::*;
        matches!(
            self,
            Target::PiAsymptotic
                | Target::JApprox
                | Target::DsumApprox
                | Target::Delta { .. }
                | Target::Arith(PowerValue(_) | LogPow(_) | NthPrime)
        )
    }

    /// Carries no accuracy claim against an oracle.
    pub fn is_approximation(&self) -> bool {
        matches!(self, Target::PiAsymptotic | Target::JApprox | Target::DsumApprox)
    }
}

/// Evaluates targets under one context, sharing series between points.
pub struct Engine {
    ctx: NumericContext,
    ev: Evaluator,
    series: Mutex<HashMap<String, Arc<CoefficientSeries>>>,
    sieve: Mutex<Option<Arc<Sieve>>>,
}

impl Engine {
    pub fn new(ctx: NumericContext) -> Engine {
        Engine {
            ev: Evaluator::new(ctx.clone()),
            ctx,
            series: Mutex::new(HashMap::new()),
            sieve: Mutex::new(None),
        }
    }

    /// Sieve covering the integers up to `bound`, reused across calls.
    pub fn sieve(&self, bound: u64) -> Result<Arc<Sieve>> {
        let mut slot = self.sieve.lock().unwrap();
        if let Some(s) = slot.as_ref() {
            if s.bound() >= bound {
                return Ok(s.clone());
            }
        }
        let s = Arc::new(Sieve::new(bound.max(64))?);
        *slot = Some(s.clone());
        Ok(s)
    }

    fn cached(&self, key: String, build: impl FnOnce() -> Result<CoefficientSeries>) -> Result<Arc<CoefficientSeries>> {
        if let Some(s) = self.series.lock().unwrap().get(&key) {
            return Ok(s.clone());
        }
        let s = Arc::new(build()?);
        self.series.lock().unwrap().insert(key, s.clone());
        Ok(s)
    }

    /// Builds whatever the target needs before a parallel sweep.
    pub fn prepare(&self, t: Target) -> Result<()> {
        match t {
            Target::Arith(id) => self.ev.series(id).map(|_| ()),
            Target::Pi | Target::PrimeIndicator => self.prime_series().map(|_| ()),
            Target::Mertens => self.ev.series(FunctionId::Moebius).map(|_| ()),
            Target::Indicator { k, q } => self.indicator(k, q).map(|_| ()),
            _ => Ok(()),
        }
    }

    fn prime_series(&self) -> Result<Arc<CoefficientSeries>> {
        self.cached("prime indicator".into(), || prime_indicator_series(&self.ctx))
    }

    fn indicator(&self, k: u64, q: usize) -> Result<Arc<CoefficientSeries>> {
        self.cached(format!("indicator {k} {q}"), || indicator_coefficients(k, q, &self.ctx))
    }

    pub fn eval(&self, t: Target, x: f64) -> Result<SeriesResult> {
        let ctx = &self.ctx;
        let whole = || -> Result<u64> {
            if is_whole(x) {
                Ok(x as u64)
            } else {
                Err(not_whole(t, x))
            }
        };
        match t {
            Target::Arith(id) => self.ev.eval(id, x),
            Target::Pi => {
                nonnegative(t, x)?;
                self.prime_series()?.eval(x, Basis::Faulhaber, ctx)
            }
            Target::Mertens => {
                nonnegative(t, x)?;
                self.ev.series(FunctionId::Moebius)?.eval(x, Basis::Faulhaber, ctx)
            }
            Target::PrimeIndicator => {
                positive(t, x)?;
                self.prime_series()?.eval(x, Basis::Monomial, ctx)
            }
            Target::Indicator { k, q } => self.indicator(k, q)?.eval(x, Basis::Monomial, ctx),
            Target::Delta { k } => delta_series(whole()?, k, ctx),
            Target::PiAsymptotic => pi_asymptotic(whole()?, ctx),
            Target::JApprox => {
                let n = whole()?;
                Ok(j_exact_and_asymptotic(n, ctx, &*self.sieve(n)?)?.1)
            }
            Target::DsumApprox => {
                let n = whole()?;
                Ok(dsum_exact_and_asymptotic(n, ctx, &*self.sieve(n)?)?.1)
            }
        }
    }

    /// Evaluates at many points, in input order. The approximation targets
    /// share one series across the batch.
    pub fn eval_batch(&self, t: Target, xs: &[f64]) -> Vec<Outcome> {
        let ctx = &self.ctx;
        let prepared = if t.is_approximation() {
            self.approximations(t, xs)
        } else {
            self.prepare(t).map(|_| Vec::new())
        };
        let mut batch = match prepared {
            Ok(b) => b.into_iter(),
            Err(e) => {
                let f = Failure::from(e);
                return xs.iter().map(|_| Err(f.clone())).collect();
            }
        };
        if t.is_approximation() {
            return xs
                .iter()
                .map(|&x| {
                    if is_whole(x) {
                        batch.next().expect("one result per integer")
                    } else {
                        Err(Failure::from(not_whole(t, x)))
                    }
                })
                .collect();
        }
        dirinv::parallel::map_slice(xs, ctx.execution(), |&x| self.eval(t, x).map_err(Failure::from))
    }

    fn approximations(&self, t: Target, xs: &[f64]) -> Result<Vec<Outcome>> {
        let ctx = &self.ctx;
        let ns: Vec<u64> = xs.iter().filter(|&&x| is_whole(x)).map(|&x| x as u64).collect();
        let bound = ns.iter().copied().max().unwrap_or(1);
        let out: Vec<Result<SeriesResult>> = match t {
            Target::PiAsymptotic => pi_asymptotic_many(&ns, ctx)?,
            Target::JApprox => j_table(&ns, ctx, &*self.sieve(bound)?)?
                .into_iter()
                .map(|r| r.map(|(_, s)| s))
                .collect(),
            Target::DsumApprox => dsum_table(&ns, ctx, &*self.sieve(bound)?)?
                .into_iter()
                .map(|r| r.map(|(_, s)| s))
                .collect(),
            _ => unreachable!("not an approximation target"),
        };
        Ok(out.into_iter().map(|r| r.map_err(Failure::from)).collect())
    }

    /// Ground truth at a positive integer, when one exists.
    pub fn oracle(&self, t: Target, n: u64) -> Result<Option<Complex>> {
        let prec = 256;
        let sieve = || self.sieve(n);
        let int = |v: i64| Some(Complex::with_val(prec, (v, 0)));
        Ok(match t {
            Target::Arith(id) => {
                let s = if id == FunctionId::NthPrime {
                    // p_n < n (ln n + ln ln n) + 16 for every n >= 1
                    let f = n as f64;
                    self.sieve((f * (f.ln() + f.ln().ln().max(0.0))) as u64 + 16)?
                } else {
                    sieve()?
                };
                match exact(id, n, &s) {
                    Ok(e) => Some(e.to_complex(prec)),
                    // non-integer parameters have no exact oracle
                    Err(Error::Domain(_)) => None,
                    Err(e) => return Err(e),
                }
            }
            Target::Pi => Some(summatory(Summatory::PrimePi, n, &*sieve()?, prec)?),
            Target::Mertens => Some(summatory(Summatory::Mertens, n, &*sieve()?, prec)?),
            Target::PrimeIndicator => int(sieve()?.is_prime(n)? as i64),
            Target::Indicator { k, .. } => int(dirinv::indicator::divides_exact(n as i64, k)? as i64),
            Target::Delta { k } => int((n == k) as i64),
            Target::PiAsymptotic | Target::JApprox | Target::DsumApprox => None,
        })
    }
}

fn is_whole(x: f64) -> bool {
    x >= 1.0 && x.fract() == 0.0
}

fn not_whole(t: Target, x: f64) -> Error {
    Error::Domain(format!("{t} is defined at positive integers only, got {x}"))
}

pub type Outcome = std::result::Result<SeriesResult, Failure>;

/// An error reduced to its message and exit code, so one failure can be
/// reported for many points.
#[derive(Clone, Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const EXIT_BREACH: u8 = 1;
pub const EXIT_DOMAIN: u8 = 2;
pub const EXIT_NONCONVERGENCE: u8 = 3;

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match &e {
            Error::NonConvergence { .. }
            | Error::PrecisionShortfall(_)
            | Error::PrecisionCeiling { .. }
            | Error::LossOfAccuracy { .. }
            | Error::Provider { .. } => EXIT_NONCONVERGENCE,
            _ => EXIT_DOMAIN,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn summatory(which: Summatory, n: u64, sieve: &Sieve, prec: u32) -> Result<Complex> {
    Ok(exact_summatory(which, n, sieve)?.to_complex(prec))
}

fn nonnegative(t: Target, x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{t} needs x >= 0, got {x}")))
    }
}

fn positive(t: Target, x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{t} needs x > 0, got {x}")))
    }
}
