//! Exit-code and error-surface tests for the `gepu` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn gepu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gepu"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn input_args(dir: &Path) -> Vec<String> {
    vec![
        "--epu".into(),
        dir.join("epu_panel.csv").display().to_string(),
        "--prices".into(),
        dir.join("daily_prices.csv").display().to_string(),
        "--gdp".into(),
        dir.join("gdp.csv").display().to_string(),
    ]
}

#[test]
fn ingest_check_passes_on_fixtures() {
    let args: Vec<String> = ["ingest-check".to_string()]
        .into_iter()
        .chain(input_args(&fixtures()))
        .collect();
    let out = gepu(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout.contains("epu panel: 192 months"));
    assert!(stdout.contains("ok"));
}

#[test]
fn missing_prices_file_exits_2_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = gepu(&[
        "all",
        "--epu",
        fixtures().join("epu_panel.csv").to_str().unwrap(),
        "--prices",
        dir.path().join("nope.csv").to_str().unwrap(),
        "--gdp",
        fixtures().join("gdp.csv").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("prices_path"), "stderr: {stderr}");
}

#[test]
fn undersized_window_is_a_config_violation() {
    let dir = tempfile::tempdir().unwrap();
    let mut args: Vec<String> = vec!["all".into()];
    args.extend(input_args(&fixtures()));
    args.extend([
        "--window-sizes".into(),
        "1".into(),
        "--out".into(),
        dir.path().join("out").display().to_string(),
    ]);
    let out = gepu(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("window_sizes entries must be >= 2"),
        "stderr: {stderr}"
    );
}

#[test]
fn reversed_month_range_is_a_config_violation() {
    let dir = tempfile::tempdir().unwrap();
    let mut args: Vec<String> = vec!["all".into()];
    args.extend(input_args(&fixtures()));
    args.extend([
        "--months".into(),
        "2010-01:2005-01".into(),
        "--out".into(),
        dir.path().join("out").display().to_string(),
    ]);
    let out = gepu(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("month_range [2010-01, 2005-01] is reversed"),
        "stderr: {stderr}"
    );
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.toml");
    std::fs::write(
        &config_path,
        format!(
            "epu_path = {:?}\nprices_path = {:?}\ngdp_path = {:?}\nwindow_sizes = [24, 30]\noutput_dir = {:?}\n",
            fixtures().join("epu_panel.csv"),
            fixtures().join("daily_prices.csv"),
            fixtures().join("gdp.csv"),
            dir.path().join("from_config")
        ),
    )
    .unwrap();

    let out_dir = dir.path().join("from_flag");
    let out = gepu(&[
        "index",
        "--config",
        config_path.to_str().unwrap(),
        "--window-sizes",
        "24",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    // The flag-provided output dir and window list win.
    assert!(out_dir.join("gepu_pca_T24.csv").is_file());
    assert!(!out_dir.join("gepu_pca_T30.csv").exists());
    assert!(!dir.path().join("from_config").exists());
    assert!(out_dir.join("gepu_gdp.csv").is_file());
    assert!(out_dir.join("run_report.json").is_file());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.toml");
    std::fs::write(&config_path, "not_a_key = 1\n").unwrap();
    let out = gepu(&["all", "--config", config_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn metrics_subcommand_emits_only_monthly_series() {
    let dir = tempfile::tempdir().unwrap();
    let mut args: Vec<String> = vec!["metrics".into()];
    args.extend(input_args(&fixtures()));
    args.extend(["--out".into(), dir.path().join("out").display().to_string()]);
    let out = gepu(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out_dir = dir.path().join("out");
    assert!(out_dir.join("volatility.csv").is_file());
    assert!(out_dir.join("avg_correlation.csv").is_file());
    assert!(!out_dir.join("table1.csv").exists());
    assert!(!out_dir.join("gepu_gdp.csv").exists());
}
