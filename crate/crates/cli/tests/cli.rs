use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lgd(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgd-coc"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn synth(dir: &Path, preset: &str, n: &str, seed: &str, out: &str) {
    let o = lgd(
        &["synth", "--preset", preset, "--n", n, "--seed", seed, "--out", out],
        dir,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

/// synth -> coc solve -> report, run twice into separate directories.
fn pipeline(dir: &Path) -> (Vec<u8>, Vec<u8>, Vec<u8>) {
    synth(dir, "pl", "1500", "11", "pl");
    synth(dir, "ml", "1000", "11", "ml");
    let o = lgd(
        &[
            "coc",
            "solve",
            "--loans",
            "pl/loans.csv",
            "--flows",
            "pl/flows.csv",
            "--out",
            "solve",
            "--format",
            "csv",
        ],
        dir,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = lgd(
        &[
            "report",
            "--portfolio",
            "pl=pl/loans.csv,pl/flows.csv",
            "--portfolio",
            "ml=ml/loans.csv,ml/flows.csv",
            "--out",
            "rep",
        ],
        dir,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    (
        fs::read(dir.join("pl/flows.csv")).unwrap(),
        fs::read(dir.join("solve/solution.csv")).unwrap(),
        fs::read(dir.join("rep/report.csv")).unwrap(),
    )
}

#[test]
fn same_seed_reproduces_outputs_byte_for_byte() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = pipeline(a.path());
    let second = pipeline(b.path());
    assert_eq!(first.0, second.0);
    assert_eq!(first.1, second.1);
    assert_eq!(first.2, second.2);
    assert_eq!(
        fs::read(a.path().join("rep/report_long.csv")).unwrap(),
        fs::read(b.path().join("rep/report_long.csv")).unwrap()
    );
}

#[test]
fn different_seed_changes_data() {
    let d = tempfile::tempdir().unwrap();
    synth(d.path(), "pl", "200", "1", "a");
    synth(d.path(), "pl", "200", "2", "b");
    assert_ne!(
        fs::read(d.path().join("a/flows.csv")).unwrap(),
        fs::read(d.path().join("b/flows.csv")).unwrap()
    );
}

#[test]
fn report_has_a_row_per_portfolio_and_rate() {
    let d = tempfile::tempdir().unwrap();
    pipeline(d.path());
    let text = fs::read_to_string(d.path().join("rep/report.csv")).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let records: Vec<_> = rows.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 6);
    assert!(records.iter().all(|r| r.iter().any(|f| f == "ok")));
    let meta = fs::read_to_string(d.path().join("rep/metadata.toml")).unwrap();
    assert!(meta.contains("seed = 1"));
}

#[test]
fn unknown_format_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let o = lgd(&["--format", "xml", "synth", "--preset", "pl"], d.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&lgd(&[], d.path())), 2);
    assert_eq!(code(&lgd(&["coc"], d.path())), 2);
}

#[test]
fn bad_config_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("bad.toml"), "no_such_key = 1\n").unwrap();
    let o = lgd(
        &["--config", "bad.toml", "synth", "--preset", "pl", "--n", "10"],
        d.path(),
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_file_is_a_data_error() {
    let d = tempfile::tempdir().unwrap();
    let o = lgd(&["lgd", "compute", "--loans", "x.csv", "--flows", "y.csv"], d.path());
    assert_eq!(code(&o), 3);
}

#[test]
fn malformed_portfolio_is_a_data_error() {
    let d = tempfile::tempdir().unwrap();
    synth(d.path(), "pl", "50", "3", "p");
    let flows = d.path().join("p/flows.csv");
    let mut text = fs::read_to_string(&flows).unwrap();
    text.push_str("UNKNOWN_LOAN,1,5.0\n");
    fs::write(&flows, text).unwrap();
    let o = lgd(
        &["lgd", "compute", "--loans", "p/loans.csv", "--flows", "p/flows.csv"],
        d.path(),
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unreachable_target_is_a_numerical_failure() {
    let d = tempfile::tempdir().unwrap();
    synth(d.path(), "pl", "300", "5", "p");
    // The premium needed at a 7% charge lies far above a 1% bracket.
    fs::write(
        d.path().join("tight.toml"),
        "delta_upper_bound = 0.01\ninitial_delta = 0.0\n",
    )
    .unwrap();
    let o = lgd(
        &[
            "--config",
            "tight.toml",
            "coc",
            "solve",
            "--loans",
            "p/loans.csv",
            "--flows",
            "p/flows.csv",
        ],
        d.path(),
    );
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn riskfree_averages_the_curve() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("curve.csv"),
        "date,tenor_months,yield\n2020-01-01,3,0.01\n2020-01-01,12,0.02\n2020-01-02,3,0.01\n2020-01-02,12,0.02\n",
    )
    .unwrap();
    let o = lgd(
        &[
            "riskfree",
            "--curve",
            "curve.csv",
            "--start",
            "2020-01-01",
            "--end",
            "2020-01-02",
            "--tenor-months",
            "7.5",
            "--format",
            "csv",
        ],
        d.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8(o.stdout).unwrap();
    let rate: f64 = out.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!((rate - 0.015).abs() < 1e-12, "{out}");
}

#[test]
fn baseline_rates_from_config() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("run.toml"),
        "risk_free = 0.03\n[baseline]\nexpected_market_return = 0.08\nbeta = 1.2\n",
    )
    .unwrap();
    let o = lgd(
        &["--config", "run.toml", "--format", "csv", "rates", "baseline"],
        d.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8(o.stdout).unwrap();
    let roe = out.lines().find(|l| l.starts_with("roe,")).expect(&out);
    let rate: f64 = roe.split(',').nth(1).unwrap().parse().unwrap();
    assert!((rate - 0.09).abs() < 1e-12);
}
