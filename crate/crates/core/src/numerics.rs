//! Evaluation context, precision policy and error-tracked summation.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rug::float::{Constant, Round};
use rug::ops::AddAssignRound;
use rug::{Complex, Float};

use crate::constants::ZetaTable;
use crate::error::{Error, Result};
use crate::mag;
use crate::parallel::Execution;

/// Hard upper limit on any working precision, in bits.
pub const DEFAULT_PRECISION_CEILING: u32 = 65_536;

/// Angular constant of the series: 2π, π or 4π.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Variant {
    #[default]
    TwoPi,
    /// Series for a(n)/cos(πn); results are multiplied back by cos(πn).
    Pi,
    /// Adds the half-integer roots of sin(4πn).
    FourPi,
}

impl Variant {
    /// Multiple of π.
    pub fn multiple(self) -> u32 {
        match self {
            Variant::Pi => 1,
            Variant::TwoPi => 2,
            Variant::FourPi => 4,
        }
    }

    /// Bits of cancellation per unit of |n|, rounded up as in the precision rule.
    pub fn bits_per_unit(self) -> f64 {
        match self {
            Variant::Pi => 4.535,
            Variant::TwoPi => 9.07,
            Variant::FourPi => 18.14,
        }
    }

    pub fn angular_f64(self) -> f64 {
        self.multiple() as f64 * std::f64::consts::PI
    }

    pub fn angular(self, prec: u32) -> Float {
        Float::with_val(prec, Constant::Pi) * self.multiple()
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Pi => "pi",
            Variant::TwoPi => "2pi",
            Variant::FourPi => "4pi",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pi" => Ok(Variant::Pi),
            "2pi" => Ok(Variant::TwoPi),
            "4pi" => Ok(Variant::FourPi),
            other => Err(Error::domain(format!(
                "unknown variant `{other}` (expected 2pi, pi or 4pi)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ContextBuilder {
    n_max: f64,
    target_abs_error: f64,
    variant: Variant,
    precision_bits: Option<u32>,
    coefficient_bits: Option<u32>,
    max_outer_terms: Option<usize>,
    extra_terms: usize,
    precision_ceiling: u32,
    execution: Execution,
    cache_path: Option<PathBuf>,
}

impl ContextBuilder {
    pub fn new(n_max: f64, target_abs_error: f64) -> Self {
        ContextBuilder {
            n_max,
            target_abs_error,
            variant: Variant::TwoPi,
            precision_bits: None,
            coefficient_bits: None,
            max_outer_terms: None,
            extra_terms: 0,
            precision_ceiling: DEFAULT_PRECISION_CEILING,
            execution: Execution::default(),
            cache_path: None,
        }
    }

    pub fn variant(mut self, v: Variant) -> Self {
        self.variant = v;
        self
    }

    /// Overrides the outer-sum precision. Values below the rule are accepted
    /// and show up as large error estimates rather than wrong answers.
    pub fn precision_bits(mut self, bits: u32) -> Self {
        self.precision_bits = Some(bits);
        self
    }

    pub fn coefficient_bits(mut self, bits: u32) -> Self {
        self.coefficient_bits = Some(bits);
        self
    }

    pub fn max_outer_terms(mut self, terms: usize) -> Self {
        self.max_outer_terms = Some(terms);
        self
    }

    /// Delays the stopping rule by `k` outer terms past the decay threshold.
    pub fn extra_terms(mut self, k: usize) -> Self {
        self.extra_terms = k;
        self
    }

    pub fn precision_ceiling(mut self, bits: u32) -> Self {
        self.precision_ceiling = bits;
        self
    }

    pub fn execution(mut self, exec: Execution) -> Self {
        self.execution = exec;
        self
    }

    pub fn cache_path(mut self, path: impl Into<PathBuf>) -> Self {
        self.cache_path = Some(path.into());
        self
    }

    pub fn build(self) -> Result<NumericContext> {
        let n = self.n_max;
        let tgt = self.target_abs_error;
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::domain(format!("n_max must be positive, got {n}")));
        }
        if !(tgt > 0.0 && tgt < 1.0) {
            return Err(Error::domain(format!(
                "target error must lie in (0, 1), got {tgt}"
            )));
        }
        let v = self.variant;
        let cn = v.angular_f64() * n;
        let threshold = (std::f64::consts::E * cn / 2.0).ceil() as usize + self.extra_terms;

        let rule = (v.bits_per_unit() * n).ceil() as u32 + 64 + (-tgt.log2()).ceil() as u32;
        let precision_bits = match self.precision_bits {
            Some(p) if p < 8 => {
                return Err(Error::domain(format!("precision of {p} bits is below 8")))
            }
            Some(p) => p,
            None => rule,
        };

        let max_outer_terms = match self.max_outer_terms {
            Some(0) => return Err(Error::domain("max_outer_terms must be positive")),
            Some(t) => t,
            None => {
                let h = decay_horizon(cn, n, tgt, threshold);
                (h + 16).max(threshold + 16)
            }
        };

        let log2n = n.log2().max(0.0);
        let coefficient_bits = match self.coefficient_bits {
            Some(b) => b.max(precision_bits),
            None => {
                precision_bits
                    + (2.0 * max_outer_terms as f64 * log2n).ceil() as u32
                    + (n + 1.0).log2().ceil() as u32
                    + ((max_outer_terms + 1) as f64).log2().ceil() as u32
                    + 48
            }
        };
        let ceiling = self.precision_ceiling;
        for bits in [precision_bits, coefficient_bits] {
            if bits > ceiling {
                return Err(Error::PrecisionCeiling {
                    requested: bits,
                    ceiling,
                });
            }
        }

        Ok(NumericContext {
            precision_bits,
            coefficient_bits,
            target_abs_error: tgt,
            variant: v,
            max_outer_terms,
            decay_threshold: threshold,
            n_max: n,
            execution: self.execution,
            cache_path: self.cache_path.clone(),
            spec: self,
            table: Arc::new(Mutex::new(None)),
        })
    }
}

/// First index past `threshold` where (cn)^{2i}/(2i+1)!, padded by the size
/// of n and a few bits, falls well under the target.
fn decay_horizon(cn: f64, n: f64, tgt: f64, threshold: usize) -> usize {
    let goal = tgt.log2() - 8.0 - (n + 1.0).log2();
    let l = cn.log2();
    let mut i = threshold;
    loop {
        let t = 2.0 * i as f64 * l - mag::log2_factorial(2 * i as u64 + 1);
        if t < goal || i > 2_000_000 {
            return i;
        }
        i += 1;
    }
}

/// Shared evaluation policy. Cloning is cheap; clones share the lazily built
/// constant table.
#[derive(Clone)]
pub struct NumericContext {
    precision_bits: u32,
    coefficient_bits: u32,
    target_abs_error: f64,
    variant: Variant,
    max_outer_terms: usize,
    decay_threshold: usize,
    n_max: f64,
    execution: Execution,
    cache_path: Option<PathBuf>,
    spec: ContextBuilder,
    table: Arc<Mutex<Option<Arc<ZetaTable>>>>,
}

impl fmt::Debug for NumericContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumericContext")
            .field("precision_bits", &self.precision_bits)
            .field("coefficient_bits", &self.coefficient_bits)
            .field("target_abs_error", &self.target_abs_error)
            .field("variant", &self.variant)
            .field("max_outer_terms", &self.max_outer_terms)
            .field("decay_threshold", &self.decay_threshold)
            .field("n_max", &self.n_max)
            .finish()
    }
}

pub fn make_context(n_max: f64, target_abs_error: f64, variant: Variant) -> Result<NumericContext> {
    ContextBuilder::new(n_max, target_abs_error)
        .variant(variant)
        .build()
}

impl NumericContext {
    pub fn builder(n_max: f64, target_abs_error: f64) -> ContextBuilder {
        ContextBuilder::new(n_max, target_abs_error)
    }

    /// Working precision of the outer summation.
    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    /// Precision of provider values and of the n-independent inner sums.
    /// Their rounding noise is multiplied by up to n^{2·max_outer_terms}.
    pub fn coefficient_bits(&self) -> u32 {
        self.coefficient_bits
    }

    pub fn target_abs_error(&self) -> f64 {
        self.target_abs_error
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn max_outer_terms(&self) -> usize {
        self.max_outer_terms
    }

    pub fn decay_threshold(&self) -> usize {
        self.decay_threshold
    }

    pub fn n_max(&self) -> f64 {
        self.n_max
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    pub fn cache_path(&self) -> Option<&std::path::Path> {
        self.cache_path.as_deref()
    }

    /// Same policy rebuilt with a different variant.
    pub fn with_variant(&self, v: Variant) -> Result<NumericContext> {
        self.spec.clone().variant(v).build()
    }

    pub fn with_extra_terms(&self, k: usize) -> Result<NumericContext> {
        let mut spec = self.spec.clone();
        spec.extra_terms += k;
        spec.build()
    }

    pub fn with_execution(&self, exec: Execution) -> NumericContext {
        let mut c = self.clone();
        c.execution = exec;
        c.spec.execution = exec;
        c
    }

    /// Rejects arguments the precision policy does not cover.
    pub fn check_argument(&self, n: f64) -> Result<()> {
        if !n.is_finite() {
            return Err(Error::domain(format!("argument {n} is not finite")));
        }
        if n.abs() > self.n_max * (1.0 + 1e-12) {
            return Err(Error::PrecisionShortfall(format!(
                "argument {n} exceeds the context's n_max = {}; build the context for a larger n",
                self.n_max
            )));
        }
        Ok(())
    }

    /// Constant table at coefficient precision, covering every inner index.
    pub fn zeta_table(&self) -> Result<Arc<ZetaTable>> {
        let mut slot = self.table.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(t) = slot.as_ref() {
            return Ok(t.clone());
        }
        let j_max = self.max_outer_terms + 2;
        let t = Arc::new(match &self.cache_path {
            Some(path) => ZetaTable::load_or_build(path, self.coefficient_bits, j_max)?,
            None => ZetaTable::build(self.coefficient_bits, j_max)?,
        });
        *slot = Some(t.clone());
        Ok(t)
    }
}

/// Inner index left out of a series, with the rule that removed it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skip {
    pub j: usize,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct SeriesResult {
    pub value: Complex,
    /// The imaginary part vanishes by construction (real provider, real n).
    pub is_real: bool,
    pub abs_error_log2: f64,
    pub outer_terms_used: usize,
    pub peak_term_log2: f64,
    pub first_omitted_log2: f64,
    pub skipped: Vec<Skip>,
    /// False off the integers, where no oracle backs the value.
    pub certified: bool,
    pub precision_bits: u32,
    pub coefficient_bits: u32,
    pub notes: Vec<String>,
}

impl SeriesResult {
    pub fn re(&self) -> &Float {
        self.value.real()
    }

    pub fn to_f64(&self) -> f64 {
        self.value.real().to_f64()
    }

    pub fn im_f64(&self) -> f64 {
        self.value.imag().to_f64()
    }

    pub fn abs_error_estimate(&self) -> f64 {
        mag::to_f64(self.abs_error_log2)
    }

    pub fn peak_term_magnitude(&self) -> f64 {
        mag::to_f64(self.peak_term_log2)
    }

    /// The error bound swamps any O(1) answer.
    pub fn is_error_dominated(&self) -> bool {
        self.abs_error_log2 >= 0.0
    }

    /// |value - truth| <= bound, compared in high precision.
    pub fn within_bound_of(&self, truth: &Complex) -> bool {
        let prec = self.value.prec().0.max(truth.prec().0);
        let d = Complex::with_val(prec, &self.value - truth);
        mag::of(&Float::with_val(prec, d.abs_ref())) <= self.abs_error_log2
    }

    pub(crate) fn from_sum(s: Summed, ctx: &NumericContext, is_real: bool) -> SeriesResult {
        SeriesResult {
            value: s.value,
            is_real,
            abs_error_log2: s.err_log2,
            outer_terms_used: s.used,
            peak_term_log2: s.peak_log2,
            first_omitted_log2: s.omitted_log2,
            skipped: Vec::new(),
            certified: true,
            precision_bits: ctx.precision_bits,
            coefficient_bits: ctx.coefficient_bits,
            notes: Vec::new(),
        }
    }

    pub(crate) fn add_error_log2(&mut self, l: f64) {
        self.abs_error_log2 = mag::add(self.abs_error_log2, l);
    }
}

pub(crate) struct Summed {
    pub value: Complex,
    pub err_log2: f64,
    pub used: usize,
    pub peak_log2: f64,
    pub omitted_log2: f64,
}

/// Sums an outer-index stream under the context's stopping rule.
///
/// Each item carries a precomputed error bound (log2) for the term itself.
/// Summation runs at `wp` bits; only inexact additions add rounding error.
pub(crate) fn sum_terms<I>(terms: I, ctx: &NumericContext, wp: u32) -> Result<Summed>
where
    I: IntoIterator<Item = Result<(Complex, f64)>>,
{
    let small = mag::from_f64(ctx.target_abs_error) - 2.0;
    let mut acc = Complex::new(wp);
    let mut round = mag::ZERO;
    let mut noise = mag::ZERO;
    let mut peak = mag::ZERO;
    let mut prev_small = false;
    let mut inexact = false;
    let mut used = 0usize;
    let mut it = terms.into_iter();
    let mut last = mag::ZERO;

    let omitted = loop {
        if used >= ctx.max_outer_terms {
            return Err(Error::NonConvergence {
                terms: used,
                last_term: mag::to_f64(last),
                target: ctx.target_abs_error,
            });
        }
        let Some(item) = it.next() else { break mag::ZERO };
        let (t, t_noise) = item?;
        let m = mag::of_complex(&t);
        let (o_re, o_im) = acc.add_assign_round(&t, (Round::Nearest, Round::Nearest));
        if o_re.is_ne() || o_im.is_ne() {
            inexact = true;
            round = mag::add(round, mag::of_complex(&acc) - wp as f64);
        }
        noise = mag::add(noise, t_noise);
        peak = peak.max(m);
        last = m;
        let i = used;
        used += 1;
        let is_small = m < small;
        if i >= ctx.decay_threshold && is_small && prev_small {
            break match it.next() {
                Some(next) => {
                    let (t, n) = next?;
                    mag::add(mag::of_complex(&t), n)
                }
                None => mag::ZERO,
            };
        }
        prev_small = is_small;
    };

    let mut err = mag::add(omitted + 3f64.log2(), noise);
    err = mag::add(err, round);
    if inexact {
        err = mag::add(err, peak + 1.0 - ctx.precision_bits as f64);
    }
    Ok(Summed {
        value: acc,
        err_log2: err,
        used,
        peak_log2: peak,
        omitted_log2: omitted,
    })
}

/// Sums an outer-index stream of exact terms under the context's policy.
pub fn sum_with_error<I>(terms: I, policy: &NumericContext) -> Result<SeriesResult>
where
    I: IntoIterator<Item = Complex>,
{
    let s = sum_terms(
        terms.into_iter().map(|t| Ok((t, mag::ZERO))),
        policy,
        policy.precision_bits,
    )?;
    let is_real = s.value.imag().is_zero();
    Ok(SeriesResult::from_sum(s, policy, is_real))
}

#[cfg(test)]
/// Real value at `prec`, as a complex with zero imaginary part.
pub(crate) fn real(prec: u32, x: f64) -> Complex {
    Complex::with_val(prec, (x, 0.0))
}

pub(crate) fn real_of(x: Float) -> Complex {
    let p = x.prec();
    Complex::with_val(p, (x, Float::new(p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_examples() {
        let c = make_context(1.0, 1e-10, Variant::TwoPi).unwrap();
        assert!(c.precision_bits() >= 108);
        let c = make_context(75.0, 1e-2, Variant::TwoPi).unwrap();
        assert!(c.precision_bits() >= 745);
        let c = make_context(15.0, 1e-6, Variant::FourPi).unwrap();
        assert!(c.precision_bits() >= 357);
    }

    #[test]
    fn invariants_hold() {
        for n in [0.5, 1.0, 7.0, 30.0] {
            for v in [Variant::TwoPi, Variant::FourPi, Variant::Pi] {
                let c = make_context(n, 1e-10, v).unwrap();
                assert!(c.precision_bits() >= 64);
                let rate = (v.bits_per_unit() * n).ceil() as u32 + 64;
                assert!(c.precision_bits() >= rate);
                let peak = (std::f64::consts::E * v.angular_f64() * n / 2.0).ceil() as usize;
                assert!(c.max_outer_terms() >= peak + 16);
                assert!(c.coefficient_bits() >= c.precision_bits());
            }
        }
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(make_context(0.0, 1e-10, Variant::TwoPi).is_err());
        assert!(make_context(-3.0, 1e-10, Variant::TwoPi).is_err());
        assert!(make_context(3.0, 0.0, Variant::TwoPi).is_err());
        assert!(make_context(3.0, 1.5, Variant::TwoPi).is_err());
        let r = NumericContext::builder(500.0, 1e-10)
            .precision_ceiling(4096)
            .build();
        assert!(matches!(r, Err(Error::PrecisionCeiling { .. })));
    }

    #[test]
    fn variant_parses() {
        assert_eq!("4pi".parse::<Variant>().unwrap(), Variant::FourPi);
        assert_eq!("PI".parse::<Variant>().unwrap(), Variant::Pi);
        assert!("3pi".parse::<Variant>().is_err());
        assert_eq!(Variant::TwoPi.to_string(), "2pi");
    }

    #[test]
    fn degenerate_stream_is_exact() {
        let ctx = make_context(1.0, 1e-10, Variant::TwoPi).unwrap();
        let p = ctx.precision_bits();
        let mut terms = vec![real(p, 0.75)];
        terms.extend((0..40).map(|_| Complex::new(p)));
        let r = sum_with_error(terms, &ctx).unwrap();
        assert_eq!(r.to_f64(), 0.75);
        assert_eq!(r.abs_error_estimate(), 0.0);
    }

    #[test]
    fn cap_triggers_non_convergence() {
        let ctx = NumericContext::builder(1.0, 1e-10)
            .max_outer_terms(5)
            .build()
            .unwrap();
        let terms = (0..100).map(|_| real(64, 1.0));
        assert!(matches!(
            sum_with_error(terms, &ctx),
            Err(Error::NonConvergence { terms: 5, .. })
        ));
    }

    #[test]
    fn stops_only_past_threshold() {
        let ctx = make_context(1.0, 1e-10, Variant::TwoPi).unwrap();
        // Tiny early terms must not stop the sum.
        let mut terms: Vec<Complex> = (0..3).map(|_| real(128, 1e-30)).collect();
        terms.push(real(128, 1.0));
        terms.extend((0..60).map(|k| real(128, 2f64.powi(-(k + 40)))));
        let r = sum_with_error(terms, &ctx).unwrap();
        assert!((r.to_f64() - 1.0).abs() < 1e-11);
        assert!(r.outer_terms_used > ctx.decay_threshold());
        assert!(r.abs_error_estimate() >= r.first_omitted_log2.exp2());
    }
}
