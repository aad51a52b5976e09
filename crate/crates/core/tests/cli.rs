//! End-to-end runs of the binary: exit codes and emitted files.

use std::path::Path;
use std::process::Command;

fn run(dir: &Path, command: &str, config: &str, extra: &[&str]) -> (i32, String) {
    let cfg = dir.join(format!("{command}.toml"));
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_antider-kit"))
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .env_remove("ANTIDER_PRECISION")
        .output()
        .unwrap();
    let text =
        String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

#[test]
fn coeffs_from_two_exits_zero_and_writes_csv() {
    let d = tempfile::tempdir().unwrap();
    let (code, _) = run(
        d.path(),
        "coeffs",
        "m_list = [2, 3, 4, 5, 6, 7, 8, 16, 32, 64]\n",
        &[],
    );
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(d.path().join("out/coeffs.csv")).unwrap();
    assert!(csv.starts_with("# split coefficients"));
    assert!(csv.lines().nth(1) == Some("m,l,numerator,denominator"));
    assert!(d.path().join("out/report.json").exists() && d.path().join("out/timing.json").exists());
}

#[test]
fn coeffs_including_one_is_a_verdict_failure() {
    let d = tempfile::tempdir().unwrap();
    let (code, text) = run(d.path(), "coeffs", "m_list = [1, 2, 3]\n", &[]);
    assert_eq!(code, 1);
    assert!(
        text.contains("FAIL upper_regime_bound: fails at 1"),
        "{text}"
    );
}

#[test]
fn overlapping_disks_are_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let (code, _) = run(d.path(), "kernel", "n1 = 37\nr1 = 0.2\nm_list = [8]\n", &[]);
    assert_eq!(code, 2);
    let report = std::fs::read_to_string(d.path().join("out/report.json")).unwrap();
    assert!(report.contains("overlap"));
}

#[test]
fn parse_errors_carry_line_and_column() {
    let d = tempfile::tempdir().unwrap();
    let (code, text) = run(d.path(), "coeffs", "m_list = [1, 2\nseed = 3\n", &[]);
    assert_eq!(code, 2);
    assert!(text.contains("line 2"), "{text}");
}

#[test]
fn unknown_command_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let (code, _) = run(d.path(), "frobnicate", "", &[]);
    assert_eq!(code, 2);
}

#[test]
fn integrality_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let (code, text) = run(
        d.path(),
        "integrality",
        "model = \"corpus:canonical-d2\"\nm_list = [0, 1, 2, 3, 4, 5, 6]\n",
        &["--precision", "128"],
    );
    assert_eq!(code, 0, "{text}");
    let (code, text) = run(
        d.path(),
        "integrality",
        "model = \"corpus:nonunit-q\"\nm_list = [1]\n",
        &[],
    );
    assert_eq!(code, 1);
    assert!(text.contains("refused"), "{text}");
}

#[test]
fn model_documents_resolve_relative_to_the_config() {
    let d = tempfile::tempdir().unwrap();
    let model = "id = \"local\"\nP = [[-1, -1], [], [1]]\ncontour_radius = \"1/2\"\n[tau]\nnum = [[], [1]]\n[paired]\nf = [[1]]\ng = [[0, 2], [0, 1]]\n";
    std::fs::write(d.path().join("local.toml"), model).unwrap();
    let (code, text) = run(
        d.path(),
        "contour",
        "model = \"local.toml\"\nm_list = [0, 1]\n",
        &["--precision", "128"],
    );
    assert_eq!(code, 0, "{text}");
}

#[test]
fn precision_comes_from_flag_then_config_then_env() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.toml");
    std::fs::write(&cfg, "m_list = [2]\n").unwrap();
    let echo = |args: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_antider-kit"));
        c.arg("coeffs")
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(d.path().join("o"))
            .args(args);
        match env {
            Some(v) => c.env("ANTIDER_PRECISION", v),
            None => c.env_remove("ANTIDER_PRECISION"),
        };
        assert!(c.status().unwrap().success());
        let r: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(d.path().join("o/report.json")).unwrap())
                .unwrap();
        r["config"]["precision"].as_u64().unwrap()
    };
    assert_eq!(echo(&[], None), 256);
    assert_eq!(echo(&[], Some("192")), 192);
    assert_eq!(echo(&["--precision", "160"], Some("192")), 160);
}
