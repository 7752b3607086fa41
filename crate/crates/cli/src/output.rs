use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use rug::ops::Pow;
use rug::{Float, Integer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Tsv,
    Pretty,
}

/// Rows collected in full before anything is written, so a failed run
/// leaves no partial file.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.delimited(b','),
            Format::Tsv => self.delimited(b'\t'),
            Format::Pretty => self.pretty(),
        }
    }

    fn delimited(&self, sep: u8) -> String {
        let mut w = csv::WriterBuilder::new().delimiter(sep).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    fn pretty(&self) -> String {
        let mut width: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&width)
                .map(|(c, &w)| format!("{c:>w$}"))
                .collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&self.header);
        for r in &self.rows {
            out += &line(r);
        }
        out
    }
}

/// Writes to `out`, or stdout. Files are replaced atomically.
pub fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        None => std::io::stdout().write_all(text.as_bytes()),
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(text.as_bytes())?;
            tmp.persist(path).map_err(|e| e.error)?;
            Ok(())
        }
    }
}

/// Decimal places that resolve the target error, plus two guard digits.
pub fn decimals_for(target: f64) -> usize {
    ((-target.log10()).ceil().max(0.0) as usize + 2).min(40)
}

/// x rounded to `d` places in plain positional notation, never exponent form.
pub fn fixed(x: &Float, d: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x.is_sign_negative() { "-inf" } else { "inf" }.into();
    }
    let scale = Integer::from(10).pow(d as u32);
    let scaled = Float::with_val(x.prec().max(64) + 4 * d as u32 + 8, x * &scale);
    let (mut i, _) = scaled.to_integer_round(rug::float::Round::Nearest).expect("finite");
    let neg = i < 0;
    i.abs_mut();
    let digits = format!("{:0>width$}", i.to_string(), width = d + 1);
    let (int, frac) = digits.split_at(digits.len() - d);
    let sign = if neg && digits.chars().any(|c| c != '0') { "-" } else { "" };
    if d == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

pub fn fixed_f64(x: f64, d: usize) -> String {
    fixed(&Float::with_val(64, x), d)
}

/// The error bound in short scientific form.
pub fn bound(err: f64) -> String {
    format!("{err:.1e}")
}
