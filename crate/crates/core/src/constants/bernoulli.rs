//! Exact even-index Bernoulli numbers from tangent numbers.

use std::sync::{Arc, Mutex};

use rug::{Assign, Integer, Rational};

use crate::error::{Error, Result};

static EVEN: Mutex<Option<Arc<Vec<Rational>>>> = Mutex::new(None);

/// B_0, B_2, ..., B_{2k} for k <= `k_max`, from a process-wide cache.
pub fn even_bernoulli(k_max: usize) -> Arc<Vec<Rational>> {
    let mut slot = EVEN.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(v) = slot.as_ref() {
        if v.len() > k_max {
            return v.clone();
        }
    }
    // Grow geometrically so repeated small extensions stay cheap.
    let have = slot.as_ref().map_or(0, |v| v.len());
    let k = k_max.max(2 * have).max(16);
    let v = Arc::new(compute(k));
    *slot = Some(v.clone());
    v
}

/// B_k for even k >= 0.
pub fn bernoulli(k: i64) -> Result<Rational> {
    if k < 0 || k % 2 != 0 {
        return Err(Error::domain(format!(
            "bernoulli index must be even and non-negative, got {k}"
        )));
    }
    Ok(even_bernoulli(k as usize / 2)[k as usize / 2].clone())
}

fn compute(k_max: usize) -> Vec<Rational> {
    let kk = k_max.max(1);
    // Tangent numbers T_1..T_K via the in-place recurrence of Brent and Harvey.
    let mut t = vec![Integer::new(); kk + 1];
    t[1] = Integer::from(1);
    for k in 2..=kk {
        t[k] = Integer::from(&t[k - 1] * (k as u64 - 1));
    }
    let mut tmp = Integer::new();
    for k in 2..=kk {
        for j in k..=kk {
            tmp.assign(&t[j - 1] * (j - k) as u64);
            t[j] *= (j - k + 2) as u64;
            t[j] += &tmp;
        }
    }
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(Rational::from(1));
    for (k, tk) in t.iter().enumerate().take(k_max + 1).skip(1) {
        let four_k = Integer::from(1) << (2 * k as u32);
        let den = Integer::from(&four_k * Integer::from(&four_k - 1u32));
        let mut num = Integer::from(tk * (2 * k as u64));
        if k % 2 == 0 {
            num = -num;
        }
        out.push(Rational::from((num, den)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Defining recurrence sum_{k<=m} C(m+1,k) B_k = 0, with B_1 = -1/2.
    fn by_recurrence(n: usize) -> Vec<Rational> {
        let mut b: Vec<Rational> = vec![Rational::from(1)];
        for m in 1..=n {
            let mut s = Rational::new();
            for (k, bk) in b.iter().enumerate() {
                let c = Integer::from(Integer::binomial_u(m as u32 + 1, k as u32));
                s += Rational::from(bk * &c);
            }
            b.push(Rational::from(-s / (m as u32 + 1)));
        }
        b
    }

    /// Akiyama-Tanigawa transform, giving B_1 = +1/2; even entries agree.
    fn akiyama_tanigawa(n: usize) -> Vec<Rational> {
        let mut a: Vec<Rational> = Vec::new();
        let mut out = Vec::new();
        for m in 0..=n {
            a.push(Rational::from((1, m as u32 + 1)));
            for j in (1..=m).rev() {
                let d = Rational::from(&a[j - 1] - &a[j]);
                a[j - 1] = d * j as u32;
            }
            out.push(a[0].clone());
        }
        out
    }

    #[test]
    fn small_values() {
        assert_eq!(bernoulli(0).unwrap(), 1);
        assert_eq!(bernoulli(2).unwrap(), Rational::from((1, 6)));
        assert_eq!(bernoulli(12).unwrap(), Rational::from((-691, 2730)));
        assert!(bernoulli(3).is_err());
        assert!(bernoulli(-2).is_err());
    }

    #[test]
    fn agrees_with_two_independent_recurrences() {
        let r = by_recurrence(60);
        let at = akiyama_tanigawa(60);
        let ours = even_bernoulli(30);
        for k in 0..=30 {
            assert_eq!(ours[k], r[2 * k], "B_{}", 2 * k);
            assert_eq!(ours[k], at[2 * k], "B_{}", 2 * k);
        }
    }

    #[test]
    fn cache_growth_is_consistent() {
        let a = even_bernoulli(20)[20].clone();
        let b = even_bernoulli(200)[20].clone();
        assert_eq!(a, b);
        // Von Staudt-Clausen: the denominator of B_200 is the product of primes p with (p-1) | 200.
        let d = even_bernoulli(100)[100].denom().clone();
        let mut expect = Integer::from(1);
        for p in [2u32, 3, 5, 11, 41, 101] {
            expect *= p;
        }
        assert_eq!(d, expect);
    }
}
