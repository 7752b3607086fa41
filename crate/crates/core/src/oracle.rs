//! Exact integer and rational ground truth.
//!
//! Everything here is computed by factorization over a smallest-prime-factor
//! sieve, or by explicit Dirichlet convolution. No floating point is involved
//! except in [`Exact::to_complex`].

use std::borrow::Cow;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use rug::ops::Pow;
use rug::{Complex, Float, Integer, Rational};

use crate::arith::FunctionId;
use crate::constants::Shift;
use crate::error::{Error, Result};

/// Largest sieve bound accepted by [`Sieve::new`].
pub const MAX_SIEVE_BOUND: u64 = 100_000_000;

pub struct Sieve {
    bound: u64,
    spf: Vec<u32>,
    primes: OnceLock<Vec<u64>>,
    mobius: OnceLock<Vec<i8>>,
}

impl fmt::Debug for Sieve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Sieve").field("bound", &self.bound).finish_non_exhaustive()
    }
}

pub fn build_sieve(n: u64) -> Result<Sieve> {
    Sieve::new(n)
}

impl Sieve {
    pub fn new(bound: u64) -> Result<Sieve> {
        if !(2..=MAX_SIEVE_BOUND).contains(&bound) {
            return Err(Error::domain(format!(
                "sieve bound must lie in [2, {MAX_SIEVE_BOUND}], got {bound}"
            )));
        }
        let n = bound as usize;
        let mut spf = vec![0u32; n + 1];
        for i in 2..=n {
            if spf[i] != 0 {
                continue;
            }
            spf[i] = i as u32;
            let mut k = i.saturating_mul(i);
            while k <= n {
                if spf[k] == 0 {
                    spf[k] = i as u32;
                }
                k += i;
            }
        }
        Ok(Sieve {
            bound,
            spf,
            primes: OnceLock::new(),
            mobius: OnceLock::new(),
        })
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    fn check(&self, n: u64) -> Result<()> {
        if n == 0 || n > self.bound {
            return Err(Error::domain(format!(
                "n = {n} outside the oracle range [1, {}]",
                self.bound
            )));
        }
        Ok(())
    }

    /// Smallest prime factor, for 2 <= n <= bound.
    pub fn spf(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }

    /// Prime factorization as (p, e) pairs with increasing p.
    pub fn factorize(&self, n: u64) -> Result<Vec<(u64, u32)>> {
        self.check(n)?;
        let mut out: Vec<(u64, u32)> = Vec::new();
        let mut m = n;
        while m > 1 {
            let p = self.spf(m);
            m /= p;
            match out.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => out.push((p, 1)),
            }
        }
        Ok(out)
    }

    pub fn primes(&self) -> &[u64] {
        self.primes.get_or_init(|| {
            (2..=self.bound)
                .filter(|&n| self.spf(n) == n)
                .collect()
        })
    }

    pub fn is_prime(&self, n: u64) -> Result<bool> {
        self.check(n)?;
        Ok(n >= 2 && self.spf(n) == n)
    }

    /// mu(n) for all n <= bound, index 0 unused.
    pub fn mobius_table(&self) -> &[i8] {
        self.mobius.get_or_init(|| {
            let n = self.bound as usize;
            let mut mu = vec![0i8; n + 1];
            mu[1] = 1;
            for i in 2..=n {
                let p = self.spf[i] as usize;
                let r = i / p;
                mu[i] = if r % p == 0 { 0 } else { -mu[r] };
            }
            mu
        })
    }

    pub fn mobius(&self, n: u64) -> Result<i8> {
        self.check(n)?;
        Ok(self.mobius_table()[n as usize])
    }

    pub fn divisor_count(&self, n: u64) -> Result<u64> {
        Ok(self.factorize(n)?.iter().map(|&(_, e)| e as u64 + 1).product())
    }

    pub fn divisors(&self, n: u64) -> Result<Vec<u64>> {
        let mut ds = vec![1u64];
        for (p, e) in self.factorize(n)? {
            let len = ds.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    ds.push(ds[i] * pk);
                }
            }
        }
        ds.sort_unstable();
        Ok(ds)
    }

    /// sum_{d | n} d^m for integer m.
    pub fn sigma(&self, n: u64, m: i64) -> Result<Rational> {
        let mut s = Rational::new();
        for d in self.divisors(n)? {
            s += rational_pow(d, m);
        }
        Ok(s)
    }

    /// sum of d^m over square-free divisors d of n.
    pub fn squarefree_divisor_sum(&self, n: u64, m: i64) -> Result<Rational> {
        let mut s = Rational::from(1);
        for (p, _) in self.factorize(n)? {
            s *= Rational::from(rational_pow(p, m) + 1u32);
        }
        Ok(s)
    }

    pub fn big_omega(&self, n: u64) -> Result<u32> {
        Ok(self.factorize(n)?.iter().map(|&(_, e)| e).sum())
    }

    pub fn little_omega(&self, n: u64) -> Result<u32> {
        Ok(self.factorize(n)?.len() as u32)
    }

    pub fn liouville(&self, n: u64) -> Result<i8> {
        Ok(if self.big_omega(n)? % 2 == 0 { 1 } else { -1 })
    }

    /// Lambda(n) in symbolic form: `Some((p, k))` when n = p^k, meaning log p.
    pub fn mangoldt(&self, n: u64) -> Result<Option<(u64, u32)>> {
        let f = self.factorize(n)?;
        Ok(match f.as_slice() {
            [(p, k)] => Some((*p, *k)),
            _ => None,
        })
    }

    /// Lambda(n)/log n: 1/k when n = p^k, else 0.
    pub fn mangoldt_over_log(&self, n: u64) -> Result<Rational> {
        Ok(match self.mangoldt(n)? {
            Some((_, k)) => Rational::from((1, k)),
            None => Rational::new(),
        })
    }

    /// mu_q(n), the coefficient of zeta^{-q}, by q-fold convolution over the
    /// divisors of n. Negative q convolves with the all-ones function instead.
    pub fn mobius_q(&self, n: u64, q: i64) -> Result<Integer> {
        let ds = self.divisors(n)?;
        let index = |d: u64| ds.binary_search(&d).expect("divisor of a divisor");
        let base: Vec<i64> = if q >= 0 {
            ds.iter().map(|&d| self.mobius_table()[d as usize] as i64).collect()
        } else {
            vec![1; ds.len()]
        };
        // Unit function
        let mut cur: Vec<Integer> = ds.iter().map(|&d| Integer::from((d == 1) as u8)).collect();
        for _ in 0..q.unsigned_abs() {
            let mut next = vec![Integer::new(); ds.len()];
            for (a, &d) in ds.iter().enumerate() {
                for (b, &e) in ds.iter().enumerate().take(a + 1) {
                    if d % e == 0 {
                        next[a] += Integer::from(&cur[index(d / e)] * base[b]);
                    }
                }
            }
            cur = next;
        }
        Ok(cur.pop().expect("n is among its divisors"))
    }

    /// Table of mu_q(1..=n) by repeated Dirichlet convolution with mu (or 1).
    pub fn mobius_q_table(&self, q: i64, n: u64) -> Result<Vec<i64>> {
        self.check(n)?;
        let len = n as usize + 1;
        let base: Vec<i64> = if q >= 0 {
            self.mobius_table()[..len].iter().map(|&m| m as i64).collect()
        } else {
            let mut one = vec![1i64; len];
            one[0] = 0;
            one
        };
        let mut cur = vec![0i64; len];
        cur[1] = 1;
        for _ in 0..q.unsigned_abs() {
            cur = dirichlet_convolution(&cur, &base);
        }
        Ok(cur)
    }

    /// p_n, 1-based.
    pub fn nth_prime(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::domain("prime index starts at 1"));
        }
        self.primes().get(n as usize - 1).copied().ok_or_else(|| {
            Error::domain(format!(
                "p_{n} lies beyond the sieve bound {}",
                self.bound
            ))
        })
    }
}

/// (a * b)(n) = sum_{k | n} a(k) b(n/k) for 1 <= n < len; index 0 is ignored.
pub fn dirichlet_convolution(a: &[i64], b: &[i64]) -> Vec<i64> {
    let len = a.len().min(b.len());
    let mut out = vec![0i64; len];
    for k in 1..len {
        if a[k] == 0 {
            continue;
        }
        let mut m = 1;
        while k * m < len {
            out[k * m] += a[k] * b[m];
            m += 1;
        }
    }
    out
}

fn rational_pow(d: u64, m: i64) -> Rational {
    let p = Integer::from(d).pow(m.unsigned_abs() as u32);
    if m >= 0 {
        Rational::from(p)
    } else {
        Rational::from((Integer::from(1), p))
    }
}

/// Gaussian rational re + i·im.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gauss {
    pub re: Rational,
    pub im: Rational,
}

impl Gauss {
    pub fn new(re: Rational, im: Rational) -> Gauss {
        Gauss { re, im }
    }

    pub fn real(re: Rational) -> Gauss {
        Gauss { re, im: Rational::new() }
    }

    pub fn mul(&self, o: &Gauss) -> Gauss {
        let re = Rational::from(&self.re * &o.re) - Rational::from(&self.im * &o.im);
        let im = Rational::from(&self.re * &o.im) + Rational::from(&self.im * &o.re);
        Gauss { re, im }
    }
}

impl fmt::Display for Gauss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im == 0 {
            write!(f, "{}", self.re)
        } else {
            write!(f, "{} + {}i", self.re, self.im)
        }
    }
}

/// Coefficient of n^{-s} in zeta(s)^z: the product over p^e || n of the
/// generalized binomial C(z + e - 1, e).
pub fn zeta_power_coefficient(z: &Gauss, sieve: &Sieve, n: u64) -> Result<Gauss> {
    let mut acc = Gauss::real(Rational::from(1));
    for (_, e) in sieve.factorize(n)? {
        let mut c = Gauss::real(Rational::from(1));
        for t in 0..e {
            // (z + t) / (t + 1)
            let w = Gauss::new(
                Rational::from(&z.re + t) / (t + 1),
                Rational::from(&z.im / (t + 1)),
            );
            c = c.mul(&w);
        }
        acc = acc.mul(&c);
    }
    Ok(acc)
}

/// An exact oracle value.
#[derive(Clone, Debug, PartialEq)]
pub enum Exact {
    Int(Integer),
    Rat(Rational),
    Gauss(Gauss),
    /// (ln base)^exponent
    LogPower { base: u64, exponent: u32 },
    /// n^{-s}
    Power { n: u64, s: Shift },
}

impl Exact {
    pub fn to_complex(&self, prec: u32) -> Complex {
        match self {
            Exact::Int(i) => Complex::with_val(prec, (i, 0)),
            Exact::Rat(r) => Complex::with_val(prec, (r, 0)),
            Exact::Gauss(g) => Complex::with_val(prec, (&g.re, &g.im)),
            Exact::LogPower { base, exponent } => {
                let l = Float::with_val(prec + 8, *base).ln();
                Complex::with_val(prec, (l.pow(*exponent), 0))
            }
            Exact::Power { n, s } => {
                let z = Complex::with_val(prec + 16, (*n, 0)).ln() * -s.to_complex(prec + 16);
                Complex::with_val(prec, z.exp())
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.to_complex(128).real().to_f64()
    }

    pub fn is_real(&self) -> bool {
        match self {
            Exact::Gauss(g) => g.im == 0,
            Exact::Power { s, .. } => s.is_real(),
            _ => true,
        }
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exact::Int(i) => write!(f, "{i}"),
            Exact::Rat(r) => write!(f, "{r}"),
            Exact::Gauss(g) => write!(f, "{g}"),
            Exact::LogPower { base, exponent: 1 } => write!(f, "log {base}"),
            Exact::LogPower { base, exponent } => write!(f, "(log {base})^{exponent}"),
            Exact::Power { n, s } => write!(f, "{n}^-({s})"),
        }
    }
}

fn integer_shift(m: Shift, what: &str) -> Result<i64> {
    m.as_integer().ok_or_else(|| {
        Error::domain(format!("the exact oracle for {what} needs an integer parameter, got {m}"))
    })
}

/// Exact value of a named arithmetic function at n.
pub fn exact(f: FunctionId, n: u64, sieve: &Sieve) -> Result<Exact> {
    sieve.check(n)?;
    Ok(match f {
        FunctionId::Moebius => Exact::Int(sieve.mobius(n)?.into()),
        FunctionId::MoebiusQ(q) => Exact::Int(sieve.mobius_q(n, q)?),
        FunctionId::UnitFunction => Exact::Int(Integer::from((n == 1) as u8)),
        FunctionId::SigmaM(m) => Exact::Rat(sieve.sigma(n, integer_shift(m, "sigma_m")?)?),
        FunctionId::AbsMoebius => Exact::Int(sieve.mobius(n)?.abs().into()),
        FunctionId::Liouville => Exact::Int(sieve.liouville(n)?.into()),
        FunctionId::Mangoldt => match sieve.mangoldt(n)? {
            Some((p, _)) => Exact::LogPower { base: p, exponent: 1 },
            None => Exact::Int(Integer::new()),
        },
        FunctionId::MangoldtOverLog => Exact::Rat(sieve.mangoldt_over_log(n)?),
        FunctionId::PowerValue(s) => match s.as_integer() {
            Some(k) => Exact::Rat(rational_pow(n, -k)),
            None => Exact::Power { n, s },
        },
        FunctionId::LogPow(k) => {
            if n == 1 {
                Exact::Int(Integer::new())
            } else {
                Exact::LogPower { base: n, exponent: k }
            }
        }
        FunctionId::NthPrime => Exact::Int(sieve.nth_prime(n)?.into()),
        FunctionId::SquarefreeDivisorSum(m) => Exact::Rat(
            sieve.squarefree_divisor_sum(n, integer_shift(m, "square-free divisor sums")?)?,
        ),
        FunctionId::OmegaDistinct => Exact::Int(sieve.little_omega(n)?.into()),
        FunctionId::MoebiusOverPow(m) => {
            let k = integer_shift(m, "mu(n)/n^m")?;
            Exact::Rat(rational_pow(n, -k) * i32::from(sieve.mobius(n)?))
        }
        FunctionId::ZetaPower(z) => {
            let g = Gauss::new(
                Rational::from_f64(z.re).ok_or_else(|| Error::domain("non-finite exponent"))?,
                Rational::from_f64(z.im).ok_or_else(|| Error::domain("non-finite exponent"))?,
            );
            Exact::Gauss(zeta_power_coefficient(&g, sieve, n)?)
        }
    })
}

/// Summatory functions with exact oracle values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Summatory {
    /// M(x) = sum mu(n)
    Mertens,
    /// pi(x)
    PrimePi,
    /// J(x) = sum Lambda(n)/log n
    PrimePowerCount,
    /// sum d(n)
    DivisorSum,
}

pub fn exact_summatory(which: Summatory, x: u64, sieve: &Sieve) -> Result<Exact> {
    if x > sieve.bound() {
        return Err(Error::domain(format!(
            "x = {x} outside the oracle range [0, {}]",
            sieve.bound()
        )));
    }
    Ok(match which {
        Summatory::Mertens => Exact::Int(
            sieve.mobius_table()[1..=x as usize]
                .iter()
                .map(|&m| m as i64)
                .sum::<i64>()
                .into(),
        ),
        Summatory::PrimePi => {
            Exact::Int(sieve.primes().partition_point(|&p| p <= x).into())
        }
        Summatory::PrimePowerCount => {
            let mut s = Rational::new();
            for n in 2..=x {
                s += sieve.mangoldt_over_log(n)?;
            }
            Exact::Rat(s)
        }
        Summatory::DivisorSum => {
            let mut s = 0u64;
            for n in 1..=x {
                s += sieve.divisor_count(n)?;
            }
            Exact::Int(s.into())
        }
    })
}

/// Source of the first primes in order.
pub trait PrimeSource: Sync {
    fn first_primes(&self, count: usize) -> Result<Cow<'_, [u64]>>;
}

impl PrimeSource for Sieve {
    fn first_primes(&self, count: usize) -> Result<Cow<'_, [u64]>> {
        let ps = self.primes();
        if ps.len() < count {
            return Err(Error::domain(format!(
                "{count} primes requested, the sieve up to {} holds {}",
                self.bound,
                ps.len()
            )));
        }
        Ok(Cow::Borrowed(&ps[..count]))
    }
}

/// Sieves on demand, growing to cover the largest request seen.
#[derive(Debug, Default)]
pub struct PrimeGenerator {
    cache: Mutex<Vec<u64>>,
}

/// Primes a generator will produce before refusing.
pub const MAX_GENERATED_PRIMES: usize = 20_000_000;

impl PrimeGenerator {
    pub fn new() -> PrimeGenerator {
        PrimeGenerator::default()
    }
}

impl PrimeSource for PrimeGenerator {
    fn first_primes(&self, count: usize) -> Result<Cow<'_, [u64]>> {
        if count > MAX_GENERATED_PRIMES {
            return Err(Error::domain(format!(
                "{count} primes requested, more than the generator limit {MAX_GENERATED_PRIMES}"
            )));
        }
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        if cache.len() < count {
            // p_n < n (ln n + ln ln n) for n >= 6
            let n = count.max(6) as f64;
            let bound = (n * (n.ln() + n.ln().ln())).ceil() as usize + 1;
            let mut composite = vec![false; bound + 1];
            let mut ps = Vec::with_capacity(count);
            for i in 2..=bound {
                if composite[i] {
                    continue;
                }
                ps.push(i as u64);
                let mut k = i * i;
                while k <= bound {
                    composite[k] = true;
                    k += i;
                }
            }
            *cache = ps;
        }
        Ok(Cow::Owned(cache[..count].to_vec()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_spf(n: u64) -> u64 {
        (2..).find(|d| n % d == 0).unwrap()
    }

    #[test]
    fn sieve_examples() {
        assert_eq!(Sieve::new(10).unwrap().primes(), &[2, 3, 5, 7]);
        let s = Sieve::new(100).unwrap();
        let by_trial = (2..=100u64).filter(|&n| trial_spf(n) == n).count();
        assert_eq!(s.primes().len(), by_trial);
        assert_eq!(by_trial, 25);
        assert!(Sieve::new(1).is_err());
        assert!(Sieve::new(MAX_SIEVE_BOUND + 1).is_err());
    }

    #[test]
    fn spf_matches_trial_division() {
        let s = Sieve::new(20_000).unwrap();
        let mut x = 12345u64;
        for _ in 0..500 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let n = 2 + (x >> 33) % 19_999;
            assert_eq!(s.spf(n), trial_spf(n), "n = {n}");
        }
    }

    #[test]
    fn mobius_density_band() {
        let s = Sieve::new(10_000).unwrap();
        let sf = s.mobius_table()[1..].iter().filter(|&&m| m != 0).count();
        let r = sf as f64 / 10_000.0;
        assert!(r > 0.55 && r < 0.67, "{r}");
    }

    #[test]
    fn exact_examples() {
        let s = Sieve::new(1000).unwrap();
        assert_eq!(exact(FunctionId::MoebiusQ(2), 12, &s).unwrap(), Exact::Int((-2).into()));
        assert_eq!(s.divisor_count(36).unwrap(), 9);
        assert_eq!(exact(FunctionId::MoebiusQ(0), 7, &s).unwrap(), Exact::Int(0.into()));
        assert_eq!(exact(FunctionId::MoebiusQ(0), 1, &s).unwrap(), Exact::Int(1.into()));
        assert_eq!(exact(FunctionId::MoebiusQ(-2), 4, &s).unwrap(), Exact::Int(3.into()));
        assert_eq!(exact(FunctionId::Mangoldt, 8, &s).unwrap(), Exact::LogPower { base: 2, exponent: 1 });
        assert_eq!(s.sigma(6, 1).unwrap(), 12);
        assert_eq!(s.sigma(6, -1).unwrap(), 2);
        assert_eq!(s.squarefree_divisor_sum(4, 0).unwrap(), 2);
        assert!(exact(FunctionId::Moebius, 1001, &s).is_err());
    }

    #[test]
    fn summatory_examples() {
        let s = Sieve::new(100).unwrap();
        assert_eq!(
            exact_summatory(Summatory::PrimePowerCount, 4, &s).unwrap(),
            Exact::Rat(Rational::from((5, 2)))
        );
        assert_eq!(exact_summatory(Summatory::PrimePi, 9, &s).unwrap(), Exact::Int(4.into()));
        assert_eq!(exact_summatory(Summatory::DivisorSum, 25, &s).unwrap(), Exact::Int(87.into()));
        assert_eq!(exact_summatory(Summatory::Mertens, 5, &s).unwrap(), Exact::Int((-2).into()));
    }

    #[test]
    fn mobius_q_paths_agree() {
        let s = Sieve::new(500).unwrap();
        for q in -3..=4i64 {
            let t = s.mobius_q_table(q, 500).unwrap();
            let z = Gauss::real(Rational::from(-q));
            for n in 1..=500u64 {
                let by_divisors = s.mobius_q(n, q).unwrap();
                assert_eq!(by_divisors, t[n as usize], "q = {q}, n = {n}");
                let c = zeta_power_coefficient(&z, &s, n).unwrap();
                assert_eq!(c.re, t[n as usize]);
            }
        }
    }

    #[test]
    fn zeta_power_samples() {
        let s = Sieve::new(20).unwrap();
        let half = Gauss::real(Rational::from((1, 2)));
        assert_eq!(zeta_power_coefficient(&half, &s, 8).unwrap().re, Rational::from((5, 16)));
        let i = Gauss::new(Rational::new(), Rational::from(1));
        let c = zeta_power_coefficient(&i, &s, 8).unwrap();
        assert_eq!(c, Gauss::new(Rational::from((-1, 2)), Rational::from((1, 6))));
    }

    #[test]
    fn generator_agrees_with_sieve() {
        let s = Sieve::new(200_000).unwrap();
        let g = PrimeGenerator::new();
        assert_eq!(&*g.first_primes(10_000).unwrap(), &*s.first_primes(10_000).unwrap());
        assert_eq!(&*g.first_primes(5).unwrap(), &[2, 3, 5, 7, 11]);
        assert!(s.first_primes(1_000_000).is_err());
    }
}
