//! Cached zeta constants at one precision, with a text file format.
//!
//! ```text
//! ZTAB v1 <precision_bits> <j_max> <crc32 of the body>
//! <kind> <index> <sign> <decimal-mantissa> e <exponent>
//! ```
//!
//! The mantissa is read as 0.<digits> x 10^exponent and carries enough digits
//! to round-trip at the stated precision. Bernoulli records hold the exact
//! rational `num/den` with exponent 0.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use rug::float::Constant;
use rug::{Complex, Float, Integer, Rational};

use super::{em, even_bernoulli, zeta_at_integer, zeta_even, Shift};
use crate::error::{Error, Result};
use crate::mag;

/// zeta(s_j) for s_j = m + 2j, `None` at the pole, with absolute error (log2).
pub type OffsetValues = Vec<Option<(Complex, f64)>>;

pub struct ZetaTable {
    precision_bits: u32,
    j_max: usize,
    bernoulli: Vec<Rational>,
    zeta_even: Vec<Float>,
    inv_zeta_even: Vec<Float>,
    /// Index 0 is unused: log zeta(0) is not real.
    log_zeta_even: Vec<Float>,
    zeta_prime_even: OnceLock<Arc<Vec<(Float, f64)>>>,
    offsets: Mutex<BTreeMap<(u64, u64), Arc<OffsetValues>>>,
}

impl std::fmt::Debug for ZetaTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ZetaTable")
            .field("precision_bits", &self.precision_bits)
            .field("j_max", &self.j_max)
            .finish_non_exhaustive()
    }
}

impl ZetaTable {
    pub fn build(precision_bits: u32, j_max: usize) -> Result<ZetaTable> {
        let p = precision_bits;
        let b = even_bernoulli(j_max);
        let wp = p + 24 + ((j_max + 2) as f64).log2().ceil() as u32;
        let two_pi_sq = {
            let t = Float::with_val(wp, Constant::Pi) * 2u32;
            Float::with_val(wp, &t * &t)
        };
        let mut zeta = Vec::with_capacity(j_max + 1);
        zeta.push(Float::with_val(p, -0.5));
        // (2 pi)^{2j} / (2j)!, one multiply per step.
        let mut w = Float::with_val(wp, 1);
        for j in 1..=j_max {
            w *= &two_pi_sq;
            w /= ((2 * j - 1) * (2 * j)) as u64;
            let z = Float::with_val(wp, &w * &b[j]);
            zeta.push(Float::with_val(p, z.abs() / 2u32));
        }
        let inv = zeta
            .iter()
            .map(|z| Float::with_val(p, z.recip_ref()))
            .collect();
        let mut log = Vec::with_capacity(j_max + 1);
        log.push(Float::with_val(p, f64::NAN));
        for z in zeta.iter().skip(1) {
            let zm1 = Float::with_val(p + 8, z - 1u32);
            log.push(Float::with_val(p, zm1.ln_1p()));
        }
        Ok(ZetaTable {
            precision_bits: p,
            j_max,
            bernoulli: b[..=j_max].to_vec(),
            zeta_even: zeta,
            inv_zeta_even: inv,
            log_zeta_even: log,
            zeta_prime_even: OnceLock::new(),
            offsets: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    /// B_{2j}.
    pub fn bernoulli(&self, j: usize) -> Rational {
        if j <= self.j_max {
            self.bernoulli[j].clone()
        } else {
            even_bernoulli(j)[j].clone()
        }
    }

    pub fn zeta_even(&self, j: usize) -> Float {
        if j <= self.j_max {
            self.zeta_even[j].clone()
        } else {
            zeta_even(j, self.precision_bits)
        }
    }

    pub fn inv_zeta_even(&self, j: usize) -> Float {
        if j <= self.j_max {
            self.inv_zeta_even[j].clone()
        } else {
            Float::with_val(self.precision_bits, zeta_even(j, self.precision_bits).recip_ref())
        }
    }

    pub fn log_zeta_even(&self, j: usize) -> Result<Float> {
        if j == 0 {
            return super::log_zeta_even(0, self.precision_bits);
        }
        if j <= self.j_max {
            Ok(self.log_zeta_even[j].clone())
        } else {
            super::log_zeta_even(j, self.precision_bits)
        }
    }

    /// zeta'(2j) for j <= j_max with absolute error bounds, built on first use.
    pub fn zeta_prime_even(&self) -> Result<Arc<Vec<(Float, f64)>>> {
        if let Some(v) = self.zeta_prime_even.get() {
            return Ok(v.clone());
        }
        let v = Arc::new(derivative_progression(self.precision_bits, self.j_max + 1, 1)?);
        Ok(self.zeta_prime_even.get_or_init(|| v).clone())
    }

    /// zeta(m + 2j) for j <= j_max. Real shifts are cached in the table.
    pub fn zeta_shifted(&self, m: Shift) -> Result<Arc<OffsetValues>> {
        let key = (m.re.to_bits(), m.im.to_bits());
        if let Some(v) = self.offsets.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(v.clone());
        }
        let v = Arc::new(shifted_values(m, self.j_max + 1, self.precision_bits)?);
        if m.is_real() {
            self.offsets
                .lock()
                .unwrap_or_else(|e| e.into_inner())
                .insert(key, v.clone());
        }
        Ok(v)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut body = String::new();
        for (j, b) in self.bernoulli.iter().enumerate() {
            let sign = if *b < 0 { '-' } else { '+' };
            let abs = Rational::from(b.abs_ref());
            let _ = writeln!(body, "B {} {sign} {}/{} e 0", 2 * j, abs.numer(), abs.denom());
        }
        for (j, z) in self.zeta_even.iter().enumerate() {
            push_float(&mut body, "Z", j, z);
        }
        for (j, z) in self.inv_zeta_even.iter().enumerate() {
            push_float(&mut body, "IZ", j, z);
        }
        for (j, z) in self.log_zeta_even.iter().enumerate().skip(1) {
            push_float(&mut body, "LZ", j, z);
        }
        if let Some(d) = self.zeta_prime_even.get() {
            for (j, (z, _)) in d.iter().enumerate() {
                push_float(&mut body, "DZ", j, z);
            }
        }
        for ((re_bits, _), vals) in self.offsets.lock().unwrap_or_else(|e| e.into_inner()).iter() {
            let kind = format!("ZOFF({})", f64::from_bits(*re_bits));
            for (j, v) in vals.iter().enumerate() {
                if let Some((z, _)) = v {
                    push_float(&mut body, &kind, j, z.real());
                }
            }
        }
        let crc = crc32fast::hash(body.as_bytes());
        let text = format!(
            "ZTAB v1 {} {} {crc:08x}\n{body}",
            self.precision_bits, self.j_max
        );
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Loads a table, refusing files below `requested_bits`.
    pub fn load(path: &Path, requested_bits: u32) -> Result<ZetaTable> {
        let text = std::fs::read_to_string(path)?;
        let bad = |reason: String| Error::Cache {
            path: path.to_path_buf(),
            reason,
        };
        let (header, body) = text
            .split_once('\n')
            .ok_or_else(|| bad("missing header".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 5 || h[0] != "ZTAB" {
            return Err(bad(format!("malformed header `{header}`")));
        }
        if h[1] != "v1" {
            return Err(bad(format!("unsupported version {}", h[1])));
        }
        let prec: u32 = h[2].parse().map_err(|_| bad("bad precision field".into()))?;
        let j_max: usize = h[3].parse().map_err(|_| bad("bad j_max field".into()))?;
        let crc = u32::from_str_radix(h[4], 16).map_err(|_| bad("bad checksum field".into()))?;
        if crc32fast::hash(body.as_bytes()) != crc {
            return Err(bad("checksum mismatch".into()));
        }
        if prec < requested_bits {
            return Err(Error::InsufficientPrecision {
                path: path.to_path_buf(),
                found: prec,
                requested: requested_bits,
            });
        }

        let mut bern = vec![None; j_max + 1];
        let mut z = vec![None; j_max + 1];
        let mut iz = vec![None; j_max + 1];
        let mut lz = vec![None; j_max + 1];
        let mut dz: Vec<Option<Float>> = vec![None; j_max + 1];
        let mut offs: BTreeMap<u64, Vec<Option<(Complex, f64)>>> = BTreeMap::new();
        for (lineno, line) in body.lines().enumerate() {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 || f[4] != "e" {
                return Err(bad(format!("line {}: malformed record", lineno + 2)));
            }
            let idx: usize = f[1]
                .parse()
                .map_err(|_| bad(format!("line {}: bad index", lineno + 2)))?;
            let neg = match f[2] {
                "+" => false,
                "-" => true,
                _ => return Err(bad(format!("line {}: bad sign", lineno + 2))),
            };
            let exp: i64 = f[5]
                .parse()
                .map_err(|_| bad(format!("line {}: bad exponent", lineno + 2)))?;
            let oob = || bad(format!("line {}: index out of range", lineno + 2));
            if f[0] == "B" {
                let r: Rational = f[3]
                    .parse()
                    .map_err(|_| bad(format!("line {}: bad rational", lineno + 2)))?;
                let slot = bern.get_mut(idx / 2).ok_or_else(oob)?;
                *slot = Some(if neg { -r } else { r });
                continue;
            }
            let v = parse_float(prec, neg, f[3], exp)
                .ok_or_else(|| bad(format!("line {}: bad mantissa", lineno + 2)))?;
            let slot = match f[0] {
                "Z" => z.get_mut(idx),
                "IZ" => iz.get_mut(idx),
                "LZ" => lz.get_mut(idx),
                "DZ" => dz.get_mut(idx),
                kind if kind.starts_with("ZOFF(") && kind.ends_with(')') => {
                    let m: f64 = kind[5..kind.len() - 1]
                        .parse()
                        .map_err(|_| bad(format!("line {}: bad offset", lineno + 2)))?;
                    let e = offs.entry(m.to_bits()).or_insert_with(|| vec![None; j_max + 1]);
                    let s = e.get_mut(idx).ok_or_else(oob)?;
                    let err = 1.0 - prec as f64 + mag::of(&v).max(0.0);
                    *s = Some((Complex::with_val(prec, (v, 0)), err));
                    continue;
                }
                other => return Err(bad(format!("unknown record kind `{other}`"))),
            };
            *slot.ok_or_else(oob)? = Some(v);
        }
        let missing = |what: &str| bad(format!("missing {what} records"));
        let bernoulli: Vec<Rational> = bern.into_iter().collect::<Option<_>>().ok_or_else(|| missing("B"))?;
        let zeta_even: Vec<Float> = z.into_iter().collect::<Option<_>>().ok_or_else(|| missing("Z"))?;
        let inv_zeta_even: Vec<Float> = iz.into_iter().collect::<Option<_>>().ok_or_else(|| missing("IZ"))?;
        let mut log_zeta_even = vec![Float::with_val(prec, f64::NAN)];
        for v in lz.into_iter().skip(1) {
            log_zeta_even.push(v.ok_or_else(|| missing("LZ"))?);
        }
        let zeta_prime_even = OnceLock::new();
        if dz[0].is_some() {
            let err = 1.0 - prec as f64;
            let d: Option<Vec<(Float, f64)>> = dz.into_iter().map(|v| v.map(|f| (f, err))).collect();
            let _ = zeta_prime_even.set(Arc::new(d.ok_or_else(|| missing("DZ"))?));
        }
        let offsets = offs
            .into_iter()
            .map(|(k, mut v)| {
                // Positions never written are poles.
                v.truncate(j_max + 1);
                ((k, 0u64), Arc::new(v))
            })
            .collect();
        Ok(ZetaTable {
            precision_bits: prec,
            j_max,
            bernoulli,
            zeta_even,
            inv_zeta_even,
            log_zeta_even,
            zeta_prime_even,
            offsets: Mutex::new(offsets),
        })
    }

    /// Loads `path` when it covers the request, otherwise builds and saves.
    pub fn load_or_build(path: &Path, precision_bits: u32, j_max: usize) -> Result<ZetaTable> {
        match ZetaTable::load(path, precision_bits) {
            Ok(t) if t.j_max >= j_max => return Ok(t),
            Ok(_) | Err(Error::InsufficientPrecision { .. }) => {}
            Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(e),
        }
        let t = ZetaTable::build(precision_bits, j_max)?;
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        t.save(path)?;
        Ok(t)
    }

    /// Bit-exact equality of every stored array.
    pub fn same_values(&self, other: &ZetaTable) -> bool {
        let eq = |a: &[Float], b: &[Float]| {
            a.len() == b.len()
                && a.iter().zip(b).all(|(x, y)| (x.is_nan() && y.is_nan()) || (x == y && x.prec() == y.prec()))
        };
        self.precision_bits == other.precision_bits
            && self.j_max == other.j_max
            && self.bernoulli == other.bernoulli
            && eq(&self.zeta_even, &other.zeta_even)
            && eq(&self.inv_zeta_even, &other.inv_zeta_even)
            && eq(&self.log_zeta_even, &other.log_zeta_even)
            && match (self.zeta_prime_even.get(), other.zeta_prime_even.get()) {
                (None, None) => true,
                (Some(a), Some(b)) => a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| x.0 == y.0),
                _ => false,
            }
    }
}

/// Default file name for a table in a cache directory.
pub fn cache_file_name(precision_bits: u32, j_max: usize) -> PathBuf {
    PathBuf::from(format!("ztab-p{precision_bits}-j{j_max}.txt"))
}

fn push_float(out: &mut String, kind: &str, j: usize, x: &Float) {
    if x.is_zero() {
        let sign = if x.is_sign_negative() { '-' } else { '+' };
        let _ = writeln!(out, "{kind} {j} {sign} 0 e 0");
        return;
    }
    let (neg, digits, exp) = x.to_sign_string_exp(10, None);
    let sign = if neg { '-' } else { '+' };
    let _ = writeln!(out, "{kind} {j} {sign} {digits} e {}", exp.unwrap_or(0));
}

fn parse_float(prec: u32, neg: bool, digits: &str, exp: i64) -> Option<Float> {
    if !digits.bytes().all(|b| b.is_ascii_digit()) || digits.is_empty() {
        return None;
    }
    let v = Float::parse(format!("0.{digits}e{exp}")).ok()?;
    let f = Float::with_val(prec, v);
    Some(if neg { -f } else { f })
}

fn derivative_progression(prec: u32, count: usize, order: usize) -> Result<Vec<(Float, f64)>> {
    let s0 = Complex::with_val(prec, (0, 0));
    let jets = em::progression(&s0, count, order, prec)?;
    jets.into_iter()
        .enumerate()
        .map(|(j, jet)| {
            let jet = jet.ok_or(Error::Pole)?;
            // Taylor coefficient k is zeta^{(k)}/k!.
            let fact = Float::with_val(prec, Integer::from(Integer::factorial(order as u32)));
            Ok((
                Float::with_val(prec, jet.coeffs[order].real() * &fact),
                jet.err_log2 + fact.to_f64().log2() + if j == 0 { 0.0 } else { 0.0 },
            ))
        })
        .collect()
}

/// zeta^{(k)}(2j) for j < count.
pub(crate) fn zeta_derivative_even(prec: u32, count: usize, k: usize) -> Result<Vec<(Float, f64)>> {
    derivative_progression(prec, count, k)
}

pub(crate) fn shifted_values(m: Shift, count: usize, prec: u32) -> Result<OffsetValues> {
    if let Some(k) = m.as_integer() {
        let mut out: OffsetValues = Vec::with_capacity(count);
        let mut em_from = None;
        for j in 0..count {
            let s = k + 2 * j as i64;
            if s == 1 {
                out.push(None);
            } else if s <= 0 || s % 2 == 0 {
                let v = zeta_at_integer(s, prec)?;
                let err = mag::of(&v) - prec as f64;
                out.push(Some((Complex::with_val(prec, (v, 0)), err)));
            } else {
                em_from = Some(j);
                break;
            }
        }
        if let Some(j0) = em_from {
            let s0 = Complex::with_val(prec, (k + 2 * j0 as i64, 0));
            for jet in em::progression(&s0, count - j0, 0, prec)? {
                out.push(jet.map(|j| (j.coeffs.into_iter().next().unwrap_or_default_complex(prec), j.err_log2)));
            }
        }
        return Ok(out);
    }
    let s0 = m.to_complex(prec);
    Ok(em::progression(&s0, count, 0, prec)?
        .into_iter()
        .map(|jet| jet.map(|j| (j.coeffs.into_iter().next().unwrap_or_default_complex(prec), j.err_log2)))
        .collect())
}

trait OrZero {
    fn unwrap_or_default_complex(self, prec: u32) -> Complex;
}

impl OrZero for Option<Complex> {
    fn unwrap_or_default_complex(self, prec: u32) -> Complex {
        self.unwrap_or_else(|| Complex::new(prec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_and_reciprocals() {
        let t = ZetaTable::build(256, 40).unwrap();
        for j in 0..=40 {
            let d = Float::with_val(256, t.zeta_even(j) - zeta_even(j, 256));
            assert!(mag::of(&d) <= -250.0, "j = {j}");
            let one = Float::with_val(256, t.zeta_even(j) * t.inv_zeta_even(j));
            let d = Float::with_val(256, one - 1u32);
            assert!(mag::of(&d) <= 4.0 - 256.0);
        }
        assert!(t.log_zeta_even(0).is_err());
        assert!(t.zeta_even(60) > 1);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.txt");
        let t = ZetaTable::build(200, 8).unwrap();
        t.zeta_prime_even().unwrap();
        t.zeta_shifted(Shift::real(-0.5)).unwrap();
        t.save(&path).unwrap();
        let u = ZetaTable::load(&path, 200).unwrap();
        assert!(t.same_values(&u));
        let a = t.zeta_shifted(Shift::real(-0.5)).unwrap();
        let b = u.zeta_shifted(Shift::real(-0.5)).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.as_ref().unwrap().0, y.as_ref().unwrap().0);
        }
    }

    #[test]
    fn corrupted_file_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.txt");
        ZetaTable::build(128, 8).unwrap().save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let broken = text.replacen("Z 3 + 1", "Z 3 + 2", 1);
        assert_ne!(text, broken);
        std::fs::write(&path, broken).unwrap();
        let e = ZetaTable::load(&path, 128).unwrap_err();
        assert!(e.to_string().contains("checksum"), "{e}");
    }

    #[test]
    fn low_precision_file_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.txt");
        ZetaTable::build(256, 8).unwrap().save(&path).unwrap();
        assert!(matches!(
            ZetaTable::load(&path, 512),
            Err(Error::InsufficientPrecision { found: 256, requested: 512, .. })
        ));
        // load_or_build recomputes instead of upcasting
        let t = ZetaTable::load_or_build(&path, 512, 8).unwrap();
        assert_eq!(t.precision_bits(), 512);
        assert_eq!(ZetaTable::load(&path, 512).unwrap().precision_bits(), 512);
    }

    #[test]
    fn shifted_integer_offsets_use_closed_forms() {
        let v = shifted_values(Shift::real(-1.0), 4, 128).unwrap();
        // zeta(-1) = -1/12, pole at 1, then zeta(3), zeta(5)
        assert!((v[0].as_ref().unwrap().0.real().to_f64() + 1.0 / 12.0).abs() < 1e-30);
        assert!(v[1].is_none());
        assert!((v[2].as_ref().unwrap().0.real().to_f64() - 1.202_056_903_159_594).abs() < 1e-15);
    }
}
