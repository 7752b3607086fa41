//! Euler-Maclaurin evaluation of zeta along s0, s0+2, s0+4, ...
//!
//! Every evaluation carries a truncated Taylor jet in eps (s = s_j + eps), so
//! the same pass yields zeta^{(k)}(s_j)/k! for k up to `order`.

use rug::{Assign, Complex, Float};

use super::bernoulli::even_bernoulli;
use crate::error::{Error, Result};
use crate::mag;

/// Taylor coefficients zeta^{(k)}(s_j)/k!, with an absolute error bound.
pub(crate) struct Jet {
    pub coeffs: Vec<Complex>,
    pub err_log2: f64,
}

const LOG2_2PI: f64 = 2.651_496_129_472_319;

/// Euler-Maclaurin remainder after m correction terms, log2, with a Cauchy
/// inflation on a radius-1/2 disc when derivatives are requested.
fn remainder_log2(sr: f64, si: f64, n: f64, m: usize, order: usize, logp: f64) -> f64 {
    let rho = if order > 0 { 0.5 } else { 0.0 };
    let sig = sr - rho + 2.0 * m as f64 + 1.0;
    if sig <= 0.0 {
        return f64::INFINITY;
    }
    let last = ((sr + 2.0 * m as f64 + 1.0).hypot(si) + rho) / sig;
    1.72 - (2 * m + 2) as f64 * LOG2_2PI + logp - sig * n.log2() + last.log2() + order as f64
}

struct Plan {
    n: usize,
    m: usize,
    peak_log2: f64,
}

/// Cheapest (N, M) meeting an absolute error of 2^goal at s.
fn plan(sr: f64, si: f64, order: usize, goal: f64, n_cap: usize) -> Option<Plan> {
    let abs_s = |i: f64| (sr + i).hypot(si);
    let m_cap = 4 * n_cap + 64;
    let mut best: Option<(usize, Plan)> = None;
    let mut n = 2usize;
    loop {
        let nf = n as f64;
        let ln = nf.log2();
        // log2 |P_{m+1}(s)| where P_{m+1} = s (s+1) ... (s+2m); shifted by rho.
        let rho = if order > 0 { 0.5 } else { 0.0 };
        let mut logp = (abs_s(0.0) + rho).log2();
        let mut peak = (1.0 - sr).max(0.0) * ln;
        let mut prev = f64::INFINITY;
        let mut rising = 0;
        for m in 0..m_cap {
            let r = remainder_log2(sr, si, nf, m, order, logp);
            // size of the correction with index m+1, which is the next one added
            let corr = 1.72 - (2 * m + 2) as f64 * LOG2_2PI + logp - (sr + 2.0 * m as f64 + 1.0) * ln;
            if r < goal {
                let cost = n + m;
                if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                    best = Some((cost, Plan { n, m, peak_log2: peak }));
                }
                break;
            }
            peak = peak.max(corr);
            if r > prev {
                rising += 1;
                if rising > 8 {
                    break;
                }
            } else {
                rising = 0;
            }
            prev = r;
            logp += (abs_s(2.0 * m as f64 + 1.0) + rho).log2() + (abs_s(2.0 * m as f64 + 2.0) + rho).log2();
        }
        if let Some((c, _)) = &best {
            if n > *c {
                break;
            }
        }
        if n >= n_cap {
            break;
        }
        n = (n + n / 3 + 1).min(n_cap);
    }
    best.map(|(_, p)| p)
}

fn jet_mul(a: &[Complex], b: &[Complex], prec: u32) -> Vec<Complex> {
    let k = a.len();
    let mut out: Vec<Complex> = (0..k).map(|_| Complex::new(prec)).collect();
    let mut tmp = Complex::new(prec);
    for i in 0..k {
        if a[i].is_zero() {
            continue;
        }
        for j in 0..k - i {
            tmp.assign(&a[i] * &b[j]);
            out[i + j] += &tmp;
        }
    }
    out
}

/// P(eps) <- P(eps) * (a + eps), truncated.
fn jet_mul_linear(p: &mut [Complex], a: &Complex) {
    for k in (0..p.len()).rev() {
        let lower = if k > 0 { Some(p[k - 1].clone()) } else { None };
        p[k] *= a;
        if let Some(l) = lower {
            p[k] += &l;
        }
    }
}

/// zeta jets at s0 + 2j for j < count; `None` where s_j = 1.
pub(crate) fn progression(
    s0: &Complex,
    count: usize,
    order: usize,
    prec: u32,
) -> Result<Vec<Option<Jet>>> {
    let sr0 = s0.real().to_f64();
    let si = s0.imag().to_f64();
    let goal = -(prec as f64) - 6.0;
    let n_cap = 64 * prec as usize + 4096;

    let mut plans: Vec<Option<Plan>> = Vec::with_capacity(count);
    for j in 0..count {
        let sr = sr0 + 2.0 * j as f64;
        if is_pole(s0, j) {
            plans.push(None);
            continue;
        }
        match plan(sr, si, order, goal, n_cap) {
            Some(p) => plans.push(Some(p)),
            None => {
                return Err(Error::LossOfAccuracy {
                    s: format!("{sr}{si:+}i"),
                    reason: "Euler-Maclaurin remainder cannot reach the requested precision"
                        .into(),
                })
            }
        }
    }
    // Direct-sum lengths must not grow along the progression.
    let mut ns: Vec<usize> = plans.iter().map(|p| p.as_ref().map_or(0, |p| p.n)).collect();
    for j in (0..count.saturating_sub(1)).rev() {
        ns[j] = ns[j].max(ns[j + 1]);
    }
    let peak = plans
        .iter()
        .flatten()
        .map(|p| p.peak_log2)
        .fold(0.0f64, f64::max);
    let n0 = ns.first().copied().unwrap_or(0).max(2);
    let wp = prec
        + 24
        + peak.max(0.0).ceil() as u32
        + ((count + 2) as f64).log2().ceil() as u32
        + order as u32 * ((n0 as f64).ln() + 1.0).log2().ceil() as u32
        + (n0 as f64).log2().ceil() as u32;

    let m_max = plans.iter().flatten().map(|p| p.m).max().unwrap_or(0);
    let bern = even_bernoulli(m_max + 1);
    // c_k = B_2k / (2k)!
    let mut c: Vec<Float> = Vec::with_capacity(m_max + 1);
    let mut fact = Float::with_val(wp, 1);
    c.push(Float::with_val(wp, 1));
    for k in 1..=m_max {
        fact *= (2 * k - 1) as u32;
        fact *= (2 * k) as u32;
        c.push(Float::with_val(wp, &bern[k]) / &fact);
    }

    let s0w = Complex::with_val(wp, s0);
    let mut lnn: Vec<Float> = Vec::with_capacity(n0);
    let mut pw: Vec<Complex> = Vec::with_capacity(n0);
    let mut inv2: Vec<Float> = Vec::with_capacity(n0);
    for n in 0..n0 {
        if n < 1 {
            lnn.push(Float::new(wp));
            pw.push(Complex::new(wp));
            inv2.push(Float::new(wp));
            continue;
        }
        let l = Float::with_val(wp, n).ln();
        let e = (-Complex::with_val(wp, &s0w * &l)).exp();
        pw.push(e);
        inv2.push(Float::with_val(wp, n * n).recip());
        lnn.push(l);
    }

    let mut out = Vec::with_capacity(count);
    let mut tmp = Complex::new(wp);
    for j in 0..count {
        let Some(pl) = &plans[j] else {
            out.push(None);
            advance(&mut pw, &inv2, ns.get(j + 1).copied().unwrap_or(0));
            continue;
        };
        let nj = pl.n;
        let s = Complex::with_val(wp, &s0w + 2 * j as u32);

        let mut d: Vec<Complex> = (0..=order).map(|_| Complex::new(wp)).collect();
        for n in 1..nj {
            let mut e = Float::with_val(wp, 1);
            for (k, dk) in d.iter_mut().enumerate() {
                tmp.assign(&pw[n] * &e);
                *dk += &tmp;
                if k < order {
                    e *= &lnn[n];
                    e /= -((k + 1) as i32);
                }
            }
        }

        let big_n = Float::with_val(wp, nj);
        let ln_n = Float::with_val(wp, nj).ln();
        let xn = (-Complex::with_val(wp, &s * &ln_n)).exp();
        let mut x_jet = Vec::with_capacity(order + 1);
        let mut e = Float::with_val(wp, 1);
        for k in 0..=order {
            x_jet.push(Complex::with_val(wp, &xn * &e));
            e *= &ln_n;
            e /= -((k + 1) as i32);
        }

        // N/(s-1) + 1/2 + sum_k c_k P_k(s) N^{1-2k}
        let sm1 = Complex::with_val(wp, &s - 1u32);
        let inv = Complex::with_val(wp, sm1.recip_ref());
        let mut a_jet = Vec::with_capacity(order + 1);
        let mut powk = Complex::with_val(wp, &inv * &big_n);
        for k in 0..=order {
            a_jet.push(if k % 2 == 0 {
                powk.clone()
            } else {
                Complex::with_val(wp, -&powk)
            });
            powk *= &inv;
        }
        a_jet[0] += 0.5f64;

        let mut p: Vec<Complex> = (0..=order).map(|_| Complex::new(wp)).collect();
        p[0].assign(&s);
        if order > 0 {
            p[1].assign(1);
        }
        let inv_n = Float::with_val(wp, big_n.recip_ref());
        let inv_n2 = Float::with_val(wp, &inv_n * &inv_n);
        let mut q = inv_n;
        for k in 1..=pl.m {
            let w = Float::with_val(wp, &c[k] * &q);
            for (ak, pk) in a_jet.iter_mut().zip(&p) {
                tmp.assign(pk * &w);
                *ak += &tmp;
            }
            let f1 = Complex::with_val(wp, &s + (2 * k - 1) as u32);
            let f2 = Complex::with_val(wp, &s + (2 * k) as u32);
            jet_mul_linear(&mut p, &f1);
            jet_mul_linear(&mut p, &f2);
            q *= &inv_n2;
        }

        let corr = jet_mul(&x_jet, &a_jet, wp);
        for (dk, ck) in d.iter_mut().zip(corr) {
            *dk += ck;
        }

        let sr = sr0 + 2.0 * j as f64;
        let logp = {
            let mut l = 0.0;
            let rho = if order > 0 { 0.5 } else { 0.0 };
            for i in 0..=2 * pl.m {
                l += ((sr + i as f64).hypot(si) + rho).log2();
            }
            l
        };
        let rem = remainder_log2(sr, si, nj as f64, pl.m, order, logp);
        let round = pl.peak_log2.max(0.0)
            + ((nj + pl.m + j + 8) as f64).log2()
            + 2.0
            - wp as f64;
        let coeffs = d
            .into_iter()
            .map(|z| Complex::with_val(prec, z))
            .collect();
        out.push(Some(Jet {
            coeffs,
            err_log2: mag::add(mag::add(rem, round), 1.0 - prec as f64),
        }));
        advance(&mut pw, &inv2, ns.get(j + 1).copied().unwrap_or(0));
    }
    Ok(out)
}

fn advance(pw: &mut [Complex], inv2: &[Float], upto: usize) {
    for n in 1..upto.min(pw.len()) {
        pw[n] *= &inv2[n];
    }
}

fn is_pole(s0: &Complex, j: usize) -> bool {
    s0.imag().is_zero() && {
        let r = Float::with_val(s0.prec().0 + 64, s0.real() + 2 * j as u32);
        r == 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::float::Constant;
    use rug::ops::Pow;

    #[test]
    fn zeta_two_and_four() {
        let p = 256;
        let s0 = Complex::with_val(p, (2, 0));
        let v = progression(&s0, 2, 0, p).unwrap();
        let pi = Float::with_val(p, Constant::Pi);
        let z2 = Float::with_val(p, &pi * &pi) / 6u32;
        let d = Float::with_val(p, v[0].as_ref().unwrap().coeffs[0].real() - &z2);
        assert!(mag::of(&d) < -240.0);
        let z4 = Float::with_val(p, pi.clone().pow(4u32)) / 90u32;
        let d = Float::with_val(p, v[1].as_ref().unwrap().coeffs[0].real() - &z4);
        assert!(mag::of(&d) < -240.0);
    }

    #[test]
    fn derivative_at_zero() {
        let p = 192;
        let s0 = Complex::with_val(p, (0, 0));
        let v = progression(&s0, 1, 1, p).unwrap();
        let jet = v[0].as_ref().unwrap();
        assert!((jet.coeffs[0].real().to_f64() + 0.5).abs() < 1e-30);
        let two_pi = Float::with_val(p, Constant::Pi) * 2u32;
        let want = -two_pi.ln() / 2u32;
        let d = Float::with_val(p, jet.coeffs[1].real() - &want);
        assert!(mag::of(&d) < -170.0);
    }

    #[test]
    fn pole_is_marked() {
        let s0 = Complex::with_val(64, (-1, 0));
        let v = progression(&s0, 3, 0, 64).unwrap();
        assert!(v[0].is_some() && v[1].is_none() && v[2].is_some());
    }
}
