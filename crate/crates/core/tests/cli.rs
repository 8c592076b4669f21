use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spinrho::io::SpectrumReport;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spinrho"));
    cmd.env_remove("SPINRHO_DENSE_LIMIT");
    cmd
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().expect("spawn spinrho");
    (status.code().unwrap_or(-1), String::from_utf8_lossy(&stdout).into(), String::from_utf8_lossy(&stderr).into())
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn uniform_triangle_levels() {
    let (code, out, _) = run(bin().args(["spectrum", "--input"]).arg(fixture("uniform3.toml")));
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("2 levels"));
    assert!(out.contains("(1,2)=-0.333333333 (-1/3) (1,3)=-0.333333333 (-1/3)"));
    assert!(out.contains("(2,3)=0.333333333 (1/3)"));
    assert!(out.contains("dense cross-check: ok"));
}

#[test]
fn json_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let (code, _, err) = run(bin().args(["spectrum", "--input"]).arg(fixture("random6.toml")).arg("--json").arg(&json));
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&json).unwrap();
    let report = SpectrumReport::from_json(&text).unwrap();
    assert_eq!(report.n_spins, 6);
    assert_eq!(report.oracle_ok, Some(true));
    assert_eq!(report.to_json(), text);
}

#[test]
fn duplicate_pair_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "dup.toml", "n = 3\ncouplings = [ { i = 1, j = 2, J = 1.0 }, { i = 1, j = 2, J = 0.5 } ]\n");
    let (code, _, err) = run(bin().args(["spectrum", "--input"]).arg(&p));
    assert_eq!(code, 1);
    assert!(err.contains("duplicate pair (1, 2)"), "{err}");
}

#[test]
fn malformed_inputs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("range.toml", "n = 3\ncouplings = [ { i = 1, j = 4, J = 1.0 } ]\n"),
        ("self.toml", "n = 3\ncouplings = [ { i = 2, j = 2, J = 1.0 } ]\n"),
        ("unknown.toml", "n = 3\ncoupling = []\n"),
        ("syntax.toml", "n = \n"),
    ] {
        let p = write(&dir, name, text);
        let (code, _, err) = run(bin().args(["spectrum", "--input"]).arg(&p));
        assert_eq!(code, 1, "{name}: {err}");
    }
    let (code, _, _) = run(bin().args(["spectrum", "--input"]).arg(dir.path().join("missing.toml")));
    assert_eq!(code, 1);
}

#[test]
fn fields_are_rejected_by_spectrum_but_accepted_by_sum_rule() {
    let (code, _, _) = run(bin().args(["spectrum", "--input"]).arg(fixture("field4.toml")));
    assert_ne!(code, 0);
    let (code, out, err) = run(bin().args(["sum-rule", "--input"]).arg(fixture("field4.toml")).args(["--beta", "0.1,1,10"]));
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("c = 0-2i"), "{out}");
}

#[test]
fn oracle_respects_dense_limit() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("n = 9\ncouplings = [\n");
    for i in 1..9 {
        text.push_str(&format!("  {{ i = {i}, j = {}, J = 1.0 }},\n", i + 1));
    }
    text.push_str("]\n");
    let p = write(&dir, "chain9.toml", &text);
    let (code, _, err) = run(bin().env("SPINRHO_DENSE_LIMIT", "8").args(["spectrum", "--oracle", "--input"]).arg(&p));
    assert_eq!(code, 1, "{err}");
    assert!(err.contains("9"), "{err}");
    let (code, _, err) = run(bin().env("SPINRHO_DENSE_LIMIT", "8").args(["sum-rule", "--input"]).arg(&p));
    assert_eq!(code, 1, "{err}");
}

#[test]
fn total_spin_commands() {
    let (code, out, _) = run(bin().args(["total-spin", "--n", "2", "--all", "--check"]));
    assert_eq!(code, 0);
    assert!(out.contains("a_1 = -1"), "{out}");
    assert!(out.contains("(1/3)"), "{out}");
    let (code, out, _) = run(bin().args(["total-spin", "--n", "20", "--spin", "10"]));
    assert_eq!(code, 0);
    assert!(out.contains("a_10"));
    let (code, _, _) = run(bin().args(["total-spin", "--n", "5", "--spin", "3/2", "--check"]));
    assert_eq!(code, 0);
    // integer spin is not on the ladder of an odd cluster
    let (code, _, err) = run(bin().args(["total-spin", "--n", "3", "--spin", "1"]));
    assert_eq!(code, 1, "{err}");
}
