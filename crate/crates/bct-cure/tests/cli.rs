//! End-to-end tests of the `bct-cure` binary: exit codes, output files, and
//! byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bct-cure"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

const CONFIG: &str = r#"
seed = 42

[binary]
n1 = 120
n2 = 80
p01 = 0.40
p00 = 0.20
alpha = 0.5
gamma1 = 0.316
gamma2 = 0.179
c1 = 0.15
c2 = 0.10

[init]
alpha_grid_points = 5

[mc]
replications = 6
sp_targets = [[2.0, 0.0]]
sweep_zeta = [0.25, 0.75]

[bootstrap]
resamples = 6

[residuals]
sets = 5
"#;

fn write_config(dir: &Path) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, CONFIG).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn simulate_fit_residuals_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());

    let out = run(&["simulate", "--config", &config, "--out", "."], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("200 records"));
    assert!(stdout.contains("censored"));

    let out = run(
        &["fit", "--data", "dataset.csv", "--config", &config, "--out", "."],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["fit_report.txt", "fit_report.csv", "theta.txt", "trace.csv"] {
        assert!(dir.path().join(file).exists(), "missing {file}");
    }

    let out = run(
        &[
            "residuals",
            "--data",
            "dataset.csv",
            "--theta",
            "theta.txt",
            "--config",
            &config,
            "--out",
            ".",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("ks_p_value"));
    assert!(dir.path().join("qq.csv").exists());

    let out = run(&["km", "--data", "dataset.csv", "--out", "."], dir.path());
    assert!(out.status.success());
    assert!(dir.path().join("km_x=0.csv").exists());
    assert!(dir.path().join("km_x=1.csv").exists());
}

#[test]
fn simulate_is_byte_deterministic() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let config_a = write_config(dir_a.path());
    let config_b = write_config(dir_b.path());
    assert!(run(&["simulate", "--config", &config_a, "--out", "."], dir_a.path())
        .status
        .success());
    assert!(run(&["simulate", "--config", &config_b, "--out", "."], dir_b.path())
        .status
        .success());
    let a = std::fs::read(dir_a.path().join("dataset.csv")).unwrap();
    let b = std::fs::read(dir_b.path().join("dataset.csv")).unwrap();
    assert_eq!(a, b);

    // A different seed gives a different file.
    assert!(run(
        &["simulate", "--config", &config_b, "--seed", "43", "--out", "."],
        dir_b.path()
    )
    .status
    .success());
    let c = std::fs::read(dir_b.path().join("dataset.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn mc_study_writes_base_and_sweep_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = run(
        &["mc-study", "--config", &config, "--workers", "2", "--out", "."],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in [
        "mc_base.txt",
        "mc_base.csv",
        "mc_zeta_0p25.txt",
        "mc_zeta_0p75.csv",
    ] {
        assert!(dir.path().join(file).exists(), "missing {file}");
    }
    let text = std::fs::read_to_string(dir.path().join("mc_base.csv")).unwrap();
    assert!(text.contains("alpha,rmse,"));
    assert!(text.contains("Sp[y=2,x=0],rmse,"));
}

#[test]
fn bootstrap_emits_standard_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    assert!(run(&["simulate", "--config", &config, "--out", "."], dir.path())
        .status
        .success());
    let out = run(
        &[
            "bootstrap",
            "--data",
            "dataset.csv",
            "--config",
            &config,
            "--workers",
            "2",
            "--out",
            ".",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("bootstrap_se.txt")).unwrap();
    assert!(text.contains("se.alpha"));

    // Deterministic: a second run writes identical SE files.
    let first = std::fs::read(dir.path().join("bootstrap_se.csv")).unwrap();
    assert!(run(
        &[
            "bootstrap",
            "--data",
            "dataset.csv",
            "--config",
            &config,
            "--workers",
            "1",
            "--out",
            "."
        ],
        dir.path()
    )
    .status
    .success());
    let second = std::fs::read(dir.path().join("bootstrap_se.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    let dir = tempfile::tempdir().unwrap();

    // Config error: invalid scenario value -> 2.
    let bad = CONFIG.replace("p01 = 0.40", "p01 = 1.2");
    std::fs::write(dir.path().join("bad.toml"), bad).unwrap();
    let out = run(&["simulate", "--config", "bad.toml", "--out", "."], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p01"));

    // Config error: unknown key -> 2.
    std::fs::write(dir.path().join("unknown.toml"), "bogus_key = 1\n").unwrap();
    let out = run(
        &["simulate", "--config", "unknown.toml", "--out", "."],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    // Data error: malformed CSV -> 3, message carries the line number.
    std::fs::write(dir.path().join("bad.csv"), "y,delta,x1\n1.0,7,0\n").unwrap();
    let out = run(&["fit", "--data", "bad.csv", "--out", "."], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    // Data error: missing file -> 3.
    let out = run(&["fit", "--data", "nope.csv", "--out", "."], dir.path());
    assert_eq!(out.status.code(), Some(3));

    // Usage error: residuals without --theta -> clap's exit code 2.
    let out = run(&["residuals", "--data", "bad.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fit_exit_code_flags_iteration_cap() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    assert!(run(&["simulate", "--config", &config, "--out", "."], dir.path())
        .status
        .success());
    // An unreachable tolerance forces the iteration-cap stop and exit 4.
    let capped = CONFIG.replace("[init]", "[sqh]\nmax_iter = 1\nkappa = 1e-300\n\n[init]");
    std::fs::write(dir.path().join("capped.toml"), capped).unwrap();
    let out = run(
        &["fit", "--data", "dataset.csv", "--config", "capped.toml", "--out", "."],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
}
