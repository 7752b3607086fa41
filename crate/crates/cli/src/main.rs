//! `dirinv`: evaluate arithmetic functions through their Dirichlet-series
//! inversion, reproduce the J(x) and divisor-sum tables, emit plot data and
//! compare series against the sieve.

mod output;
mod target;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::{Complex, Float};

use dirinv::constants::{cache_file_name, ZetaTable};
use dirinv::oracle::{Sieve, MAX_SIEVE_BOUND};
use dirinv::primecount::{dsum_table, j_table};
use dirinv::{Execution, NumericContext, SeriesResult, Variant};

use output::{bound, decimals_for, emit, fixed, fixed_f64, Format, Table};
use target::{Engine, Failure, Target, EXIT_BREACH, EXIT_DOMAIN};

#[derive(Parser, Debug)]
#[command(name = "dirinv", version, about = "Arithmetic functions from zeta values at the even integers")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Outer-sum precision in bits, overriding the 9.07 bits per unit rule.
    #[arg(long, global = true)]
    precision_bits: Option<u32>,
    /// Absolute error target. Defaults to 1e-10, or 1e-4 for plot-data.
    #[arg(long, global = true)]
    target_error: Option<f64>,
    /// Angular constant of the series.
    #[arg(long, global = true, value_enum)]
    variant: Option<VariantArg>,
    /// Upper limit on outer terms; hitting it is a non-convergence.
    #[arg(long, global = true)]
    terms_cap: Option<usize>,
    /// Directory for cached zeta tables.
    #[arg(long, global = true, env = "DIRINV_CACHE_DIR")]
    cache: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    #[value(name = "2pi")]
    TwoPi,
    #[value(name = "pi")]
    Pi,
    #[value(name = "4pi")]
    FourPi,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::TwoPi => Variant::TwoPi,
            VariantArg::Pi => Variant::Pi,
            VariantArg::FourPi => Variant::FourPi,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one function at one point.
    Eval {
        /// moebius, pi, mertens, sigma_m:2, indicator:3, delta:4, ... (see README)
        function: String,
        #[arg(allow_hyphen_values = true)]
        n: f64,
        /// Accept non-integer n; the result is the continuation, not certified.
        #[arg(long)]
        allow_noninteger: bool,
    },
    /// Exact and approximated J(x) or divisor sums for x = 1..x_max.
    Table {
        #[arg(value_enum, ignore_case = true)]
        which: Which,
        #[arg(long, default_value_t = 75)]
        x_max: u64,
    },
    /// Values over a grid, with an oracle check at the integers.
    PlotData {
        function: String,
        #[arg(long, allow_hyphen_values = true)]
        start: f64,
        #[arg(long, allow_hyphen_values = true)]
        stop: f64,
        #[arg(long)]
        step: f64,
    },
    /// Series against the sieve over an integer range such as 1..40.
    Compare {
        function: String,
        range: String,
        /// Largest accepted residual; defaults to the target error.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Build or inspect cached zeta tables.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Which {
    J,
    Dsum,
}

#[derive(Subcommand, Debug)]
enum CacheAction {
    /// Build the table a context for n_max needs and store it.
    Build {
        #[arg(long)]
        n_max: f64,
    },
    /// Verify a table file and print its header.
    Info { file: PathBuf },
    /// Print the cache directory in effect.
    Dir,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("dirinv: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::Eval { function, n, allow_noninteger } => cmd_eval(g, function, *n, *allow_noninteger),
        Command::Table { which, x_max } => cmd_table(g, *which, *x_max),
        Command::PlotData { function, start, stop, step } => cmd_plot(g, function, *start, *stop, *step),
        Command::Compare { function, range, tolerance } => cmd_compare(g, function, range, *tolerance),
        Command::Cache { action } => cmd_cache(g, action),
    }
}

fn domain(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_DOMAIN,
        message: msg.into(),
    }
}

fn parse_target(s: &str) -> Result<Target, Failure> {
    s.parse().map_err(Failure::from)
}

/// The conjectured π(x) form is stated with 4π; everything else defaults to 2π.
fn variant_for(g: &Global, t: Target) -> Variant {
    match (g.variant, t) {
        (Some(v), _) => v.into(),
        (None, Target::PiAsymptotic) => Variant::FourPi,
        (None, _) => Variant::TwoPi,
    }
}

fn context(g: &Global, n_max: f64, default_target: f64, variant: Variant) -> Result<NumericContext, Failure> {
    let mut b = NumericContext::builder(n_max.abs().max(1.0), g.target_error.unwrap_or(default_target)).variant(variant);
    if let Some(p) = g.precision_bits {
        b = b.precision_bits(p);
    }
    if let Some(t) = g.terms_cap {
        b = b.max_outer_terms(t);
    }
    if g.sequential {
        b = b.execution(Execution::Sequential);
    }
    let ctx = b.clone().build()?;
    match &g.cache {
        Some(dir) => {
            let file = cache_file_name(ctx.coefficient_bits(), ctx.max_outer_terms() + 2);
            Ok(b.cache_path(dir.join(file)).build()?)
        }
        None => Ok(ctx),
    }
}

fn complex_cells(r: &SeriesResult, d: usize) -> (String, String) {
    (fixed(r.value.real(), d), fixed(r.value.imag(), d))
}

fn finish(table: &Table, g: &Global, default: Format) -> Result<(), Failure> {
    let text = table.render(g.format.unwrap_or(default));
    emit(&text, g.out.as_deref()).map_err(|e| domain(format!("cannot write output: {e}")))
}

fn cmd_eval(g: &Global, function: &str, n: f64, allow_noninteger: bool) -> Result<u8, Failure> {
    let t = parse_target(function)?;
    if n.fract() != 0.0 && t.integer_only() {
        return Err(domain(format!("{t} is defined only at integers, got {n}")));
    }
    if n.fract() != 0.0 && !allow_noninteger {
        return Err(domain(format!(
            "n = {n} is not an integer; pass --allow-noninteger for the continuation value (no oracle claim)"
        )));
    }
    let ctx = context(g, n, 1e-10, variant_for(g, t))?;
    let engine = Engine::new(ctx.clone());
    let r = engine.eval(t, n)?;
    let d = decimals_for(ctx.target_abs_error());
    let (re, im) = complex_cells(&r, d);
    let status = if r.certified && !t.is_approximation() { "certified" } else { "uncertified" };
    match g.format.unwrap_or(Format::Pretty) {
        Format::Pretty => {
            let value = if r.is_real { re } else { format!("{re} {} {}i", if im.starts_with('-') { '-' } else { '+' }, im.trim_start_matches('-')) };
            let mut text = format!("{t}({n}) = {value} (err≤ {})\n", bound(r.abs_error_estimate()));
            text += &format!(
                "  terms {}, precision {} bits, coefficients {} bits, variant {}\n",
                r.outer_terms_used, r.precision_bits, r.coefficient_bits, ctx.variant()
            );
            for s in &r.skipped {
                text += &format!("  skipped j = {}: {}\n", s.j, s.reason);
            }
            for note in &r.notes {
                text += &format!("  note: {note}\n");
            }
            text += &format!("  {status}\n");
            emit(&text, g.out.as_deref()).map_err(|e| domain(format!("cannot write output: {e}")))?;
        }
        f => {
            let mut table = Table::new(&["function", "n", "re", "im", "err_bound", "terms", "precision_bits", "coefficient_bits", "status"]);
            table.push(vec![
                t.to_string(),
                n.to_string(),
                re,
                im,
                bound(r.abs_error_estimate()),
                r.outer_terms_used.to_string(),
                r.precision_bits.to_string(),
                r.coefficient_bits.to_string(),
                status.into(),
            ]);
            finish(&table, g, f)?;
        }
    }
    Ok(0)
}

fn cmd_table(g: &Global, which: Which, x_max: u64) -> Result<u8, Failure> {
    if x_max == 0 || x_max > 75 {
        return Err(domain(format!("x_max must lie in 1..=75, got {x_max}")));
    }
    let variant = g.variant.map(Variant::from).unwrap_or(Variant::TwoPi);
    let ctx = context(g, x_max as f64, 1e-10, variant)?;
    let sieve = Sieve::new(x_max.max(64))?;
    let xs: Vec<u64> = (1..=x_max).collect();
    let rows: Vec<Result<(Float, SeriesResult), Failure>> = match which {
        Which::J => j_table(&xs, &ctx, &sieve)?
            .into_iter()
            .map(|r| r.map(|(e, s)| (Float::with_val(128, e), s)).map_err(Failure::from))
            .collect(),
        Which::Dsum => dsum_table(&xs, &ctx, &sieve)?
            .into_iter()
            .map(|r| r.map(|(e, s)| (Float::with_val(128, e), s)).map_err(Failure::from))
            .collect(),
    };
    let actual_decimals = if which == Which::J { 2 } else { 0 };
    let mut table = Table::new(&["x", "actual", "approx", "pct_diff", "err_bound"]);
    for (x, row) in xs.iter().zip(rows) {
        match row {
            Ok((actual, r)) => {
                let a = actual.to_f64();
                let v = r.to_f64();
                let pct = if a == 0.0 { 0.0 } else { 100.0 * (v - a) / a };
                table.push(vec![
                    x.to_string(),
                    fixed(&actual, actual_decimals),
                    fixed(r.re(), 2),
                    fixed_f64(pct, 1),
                    bound(r.abs_error_estimate()),
                ]);
            }
            Err(f) => {
                eprintln!("dirinv: x = {x}: {f}");
                table.push(vec![x.to_string(), "NaN".into(), "NaN".into(), "NaN".into(), "NaN".into()]);
            }
        }
    }
    finish(&table, g, Format::Csv)?;
    Ok(0)
}

fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(domain(format!("step must be positive, got {step}")));
    }
    if !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(domain(format!("need start <= stop, got {start} > {stop}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(domain(format!("{count} points requested; the limit is 1000000")));
    }
    Ok((0..count)
        .map(|i| {
            let x = start + i as f64 * step;
            // Snap accumulated drift so integers hit the oracle check.
            if (x - x.round()).abs() < 1e-9 {
                x.round()
            } else {
                x
            }
        })
        .collect())
}

fn step_decimals(step: f64) -> usize {
    (0..12).find(|&d| ((step * 10f64.powi(d as i32)).round() - step * 10f64.powi(d as i32)).abs() < 1e-9).unwrap_or(12)
}

fn residual(r: &SeriesResult, truth: &Complex) -> f64 {
    let p = r.value.prec().0.max(truth.prec().0);
    let d = Complex::with_val(p, &r.value - truth);
    Float::with_val(p, d.abs_ref()).to_f64()
}

fn cmd_plot(g: &Global, function: &str, start: f64, stop: f64, step: f64) -> Result<u8, Failure> {
    let t = parse_target(function)?;
    let xs = grid(start, stop, step)?;
    let variant = variant_for(g, t);
    let n_max = start.abs().max(stop.abs());
    if variant == Variant::FourPi && n_max > 20.0 {
        eprintln!("dirinv: warning: the 4pi series above x = 20 needs {:.0}+ bits; expect a slow run", 18.14 * n_max);
    }
    let ctx = context(g, n_max, 1e-4, variant)?;
    let tgt = ctx.target_abs_error();
    let engine = Engine::new(ctx);
    let results = engine.eval_batch(t, &xs);
    let d = decimals_for(tgt);
    let xd = step_decimals(step).max(step_decimals(start));
    let mut table = Table::new(&["x", "value", "err_bound", "oracle", "check"]);
    let mut failed_checks = 0;
    for (&x, r) in xs.iter().zip(&results) {
        let oracle = if x >= 1.0 && x.fract() == 0.0 && !t.is_approximation() {
            engine.oracle(t, x as u64).map_err(Failure::from)?
        } else {
            None
        };
        let xs_cell = fixed_f64(x, xd);
        match r {
            Ok(r) => {
                let (oracle_cell, check) = match &oracle {
                    Some(o) => {
                        let ok = residual(r, o) <= tgt;
                        failed_checks += !ok as usize;
                        (fixed(o.real(), d), if ok { "ok" } else { "FAIL" }.to_string())
                    }
                    None => (String::new(), String::new()),
                };
                table.push(vec![xs_cell, fixed(r.re(), d), bound(r.abs_error_estimate()), oracle_cell, check]);
            }
            Err(f) => {
                eprintln!("dirinv: x = {x}: {f}");
                let o = oracle.map(|o| fixed(o.real(), d)).unwrap_or_default();
                table.push(vec![xs_cell, "NaN".into(), "NaN".into(), o, "error".into()]);
            }
        }
    }
    finish(&table, g, Format::Csv)?;
    if failed_checks > 0 {
        eprintln!("dirinv: {failed_checks} integer points missed the oracle by more than {tgt:e}");
        return Ok(EXIT_BREACH);
    }
    Ok(0)
}

fn parse_range(s: &str) -> Result<(u64, u64), Failure> {
    let bad = || domain(format!("range `{s}` is not of the form a..b"));
    let (a, b) = s.split_once("..=").or_else(|| s.split_once("..")).ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b < a {
        return Err(domain(format!("range `{s}` must satisfy 1 <= a <= b")));
    }
    if b > MAX_SIEVE_BOUND {
        return Err(domain(format!("range end {b} lies beyond the sieve bound {MAX_SIEVE_BOUND}")));
    }
    Ok((a, b))
}

fn cmd_compare(g: &Global, function: &str, range: &str, tolerance: Option<f64>) -> Result<u8, Failure> {
    let t = parse_target(function)?;
    if t.is_approximation() {
        return Err(domain(format!("{t} is an approximation with no oracle to compare against")));
    }
    let (a, b) = parse_range(range)?;
    let ctx = context(g, b as f64, 1e-10, variant_for(g, t))?;
    let tol = tolerance.unwrap_or(ctx.target_abs_error());
    let d = decimals_for(ctx.target_abs_error());
    let engine = Engine::new(ctx);
    let ns: Vec<f64> = (a..=b).map(|n| n as f64).collect();
    let results = engine.eval_batch(t, &ns);
    let mut table = Table::new(&["n", "value", "oracle", "residual", "err_bound", "within"]);
    let mut worst: Option<(f64, u64)> = None;
    let mut failure: Option<Failure> = None;
    for (n, r) in (a..=b).zip(&results) {
        let oracle = engine
            .oracle(t, n)?
            .ok_or_else(|| domain(format!("{t} has no exact oracle at {n}")))?;
        match r {
            Ok(r) => {
                let res = residual(r, &oracle);
                if worst.is_none_or(|(w, _)| res > w) {
                    worst = Some((res, n));
                }
                table.push(vec![
                    n.to_string(),
                    fixed(r.re(), d),
                    fixed(oracle.real(), d),
                    bound(res),
                    bound(r.abs_error_estimate()),
                    (res <= tol).to_string(),
                ]);
            }
            Err(f) => {
                eprintln!("dirinv: n = {n}: {f}");
                table.push(vec![n.to_string(), "NaN".into(), fixed(oracle.real(), d), "NaN".into(), "NaN".into(), "false".into()]);
                failure.get_or_insert(f.clone());
            }
        }
    }
    finish(&table, g, Format::Pretty)?;
    if let Some(f) = failure {
        eprintln!("compare: function={t} range={a}..{b} status=error code={}", f.code);
        return Ok(f.code);
    }
    let (w, wn) = worst.expect("non-empty range");
    let ok = w <= tol;
    eprintln!(
        "compare: function={t} range={a}..{b} max_residual={w:.3e} worst_n={wn} tolerance={tol:e} status={}",
        if ok { "ok" } else { "breach" }
    );
    Ok(if ok { 0 } else { EXIT_BREACH })
}

fn cmd_cache(g: &Global, action: &CacheAction) -> Result<u8, Failure> {
    match action {
        CacheAction::Dir => {
            match &g.cache {
                Some(d) => println!("{}", d.display()),
                None => println!("(none: pass --cache or set DIRINV_CACHE_DIR)"),
            }
            Ok(0)
        }
        CacheAction::Build { n_max } => {
            if g.cache.is_none() {
                return Err(domain("no cache directory: pass --cache or set DIRINV_CACHE_DIR"));
            }
            let variant = g.variant.map(Variant::from).unwrap_or(Variant::TwoPi);
            let ctx = context(g, *n_max, 1e-10, variant)?;
            let t = ctx.zeta_table()?;
            let path = ctx.cache_path().map(Path::to_path_buf).expect("cache path set");
            println!("{} ({} bits, j_max {})", path.display(), t.precision_bits(), t.j_max());
            Ok(0)
        }
        CacheAction::Info { file } => {
            let t = ZetaTable::load(file, 0)?;
            println!("{}: {} bits, j_max {}, checksum ok", file.display(), t.precision_bits(), t.j_max());
            Ok(0)
        }
    }
}
