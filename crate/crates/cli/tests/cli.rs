use std::process::{Command, Output};

fn dirinv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirinv"))
        .args(args)
        .env_remove("DIRINV_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes()).records().map(|r| r.unwrap()).collect()
}

#[test]
fn eval_moebius_30() {
    let o = dirinv(&["eval", "moebius", "30", "--format", "csv"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    let v: f64 = rows[0][2].parse().unwrap();
    assert!((v + 1.0).abs() < 1e-10, "{v}");
    assert_eq!(&rows[0][8], "certified");
}

#[test]
fn eval_prime_counting() {
    let o = dirinv(&["eval", "pi", "9"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("pi(9) = 4.000000000000 (err≤"), "{s}");
}

#[test]
fn noninteger_needs_the_flag() {
    let o = dirinv(&["eval", "moebius", "2.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    let o = dirinv(&["eval", "moebius", "2.5", "--allow-noninteger"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("uncertified"));
    let o = dirinv(&["eval", "nth_prime", "2.5", "--allow-noninteger"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_function_is_a_domain_error() {
    assert_eq!(dirinv(&["eval", "nonsense", "3"]).status.code(), Some(2));
}

#[test]
fn terms_cap_reports_nonconvergence() {
    let o = dirinv(&["eval", "moebius", "10", "--terms-cap", "5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(o.stdout.is_empty());
}

#[test]
fn compare_passes_on_moebius_and_liouville() {
    for (f, r) in [("moebius", "1..40"), ("liouville", "1..30")] {
        let o = dirinv(&["compare", f, r, "--format", "csv"]);
        assert!(o.status.success(), "{f}: {}", String::from_utf8_lossy(&o.stderr));
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains("status=ok"), "{err}");
        assert!(csv_rows(&stdout(&o)).iter().all(|r| &r[5] == "true"));
    }
}

#[test]
fn compare_pi_under_4pi() {
    let o = dirinv(&["compare", "pi", "1..15", "--variant", "4pi"]);
    assert!(o.status.success());
}

#[test]
fn compare_breach_names_the_worst_point() {
    let o = dirinv(&["compare", "moebius", "1..40", "--tolerance", "1e-200"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("status=breach") && err.contains("worst_n=40"), "{err}");
}

#[test]
fn j_table_rows() {
    let o = dirinv(&["table", "J"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 75);
    assert_eq!(&rows[0][1], "0.00");
    // J(53) = 16 + 3/2 + 2/3 + 3/4 + 1/5 = 19.12 (to two places)
    let r = &rows[52];
    assert_eq!((&r[0], &r[1]), ("53", "19.12"));
    let approx: f64 = r[2].parse().unwrap();
    assert!((approx - 19.10).abs() < 0.02, "{approx}");
}

#[test]
fn table_rejects_out_of_range() {
    assert_eq!(dirinv(&["table", "dsum", "--x-max", "76"]).status.code(), Some(2));
}

#[test]
fn plot_data_marks_failures_and_checks_integers() {
    let o = dirinv(&["plot-data", "moebius", "--start", "0", "--stop", "9", "--step", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 19);
    assert_eq!((&rows[0][1], &rows[0][4]), ("NaN", "error"));
    for r in &rows[1..] {
        let x: f64 = r[0].parse().unwrap();
        assert_eq!(&r[4], if x.fract() == 0.0 { "ok" } else { "" }, "x = {x}");
    }
}

#[test]
fn output_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.tsv");
    let o = dirinv(&["table", "dsum", "--x-max", "10", "--format", "tsv", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<csv::StringRecord> = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap())
        .collect();
    assert_eq!(rows.len(), 10);
    assert_eq!(&rows[9][1], "27");
}

#[test]
fn cache_build_then_reuse() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = dirinv(&["--cache", d, "cache", "build", "--n-max", "12"]);
    assert!(o.status.success());
    let file = stdout(&o).split(' ').next().unwrap().to_string();
    assert!(dirinv(&["cache", "info", &file]).status.success());
    let o = dirinv(&["--cache", d, "eval", "mertens", "12"]);
    assert!(stdout(&o).starts_with("mertens(12) = -2.000000000000"), "{}", stdout(&o));
}
