use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn jkoflow(args: &[&str], root: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_jkoflow"));
    cmd.args(args).env_remove("JKOFLOW_OUTPUT_ROOT");
    if let Some(r) = root {
        cmd.env("JKOFLOW_OUTPUT_ROOT", r);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const ZERO: &str = r#"
[grid]
x_min = -2.0
x_max = 2.0
n_cells = 32

[time]
tau = 0.01
horizon = 0.1

[model]
preset = "zero"

[initial]
kind = "gaussians"
species1 = [{ center = -0.5, width = 0.3 }]
species2 = [{ center = 0.5, width = 0.3 }]

[output]
dir = "zero"
"#;

const COUNTER: &str = r#"
[grid]
x_min = -3.0
x_max = 3.0
n_cells = 64

[time]
tau = 0.01
horizon = 0.03

[model]
preset = "counterexample"

[initial]
kind = "bumps"
species1 = [{ center = -0.4, width = 0.6 }]
species2 = [{ center = 0.4, width = 0.6 }]
"#;

const PME: &str = r#"
[grid]
x_min = -3.0
x_max = 3.0
n_cells = 128

[time]
tau = 4e-3
horizon = 0.1

[model]
preset = "decoupled_pme"

[initial]
kind = "barenblatt"
t0 = 0.1
"#;

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn zero_model_run_passes_and_writes_everything() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "zero.toml", ZERO);
    let out = jkoflow(&["run", &cfg], Some(tmp.path()));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let dir = tmp.path().join("zero");
    for f in ["config.toml", "densities.csv", "energies.csv", "steps.csv", "diagnostics.json", "MANIFEST.json"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("MANIFEST.json")).unwrap()).unwrap();
    assert_eq!(manifest["complete"], true);
    assert_eq!(manifest["steps_completed"], 10);
    let densities = fs::read_to_string(dir.join("densities.csv")).unwrap();
    assert_eq!(densities.lines().next(), Some("t,x,rho1,rho2"));
    assert_eq!(densities.lines().count(), 1 + 11 * 32);
}

#[test]
fn counterexample_exits_two_with_d3_witness() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", COUNTER);
    let out_dir = tmp.path().join("out");
    let out = jkoflow(&["run", &cfg, "--output", out_dir.to_str().unwrap()], None);
    assert_eq!(code(&out), 2);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("diagnostics.json")).unwrap()).unwrap();
    let entries = report["audit"]["diffusion"]["entries"].as_array().unwrap();
    let d3 = entries.iter().find(|e| e["check"] == "D3").unwrap();
    assert_eq!(d3["passed"], false);
    assert_eq!(d3["witness"].as_array().unwrap().len(), 4);
    assert_eq!(code(&jkoflow(&["audit", &cfg], None)), 2);
}

#[test]
fn config_errors_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = ZERO.replace("preset = \"zero\"", "preset = \"decoupled_pme\"\nparams = { m1 = 1.0 }");
    let cfg = write(tmp.path(), "bad.toml", &bad);
    let out = jkoflow(&["run", &cfg], Some(tmp.path()));
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("D1"));
    let missing = tmp.path().join("missing.toml");
    assert_eq!(code(&jkoflow(&["audit", missing.to_str().unwrap()], None)), 3);
    assert_eq!(code(&jkoflow(&["diagnose", tmp.path().to_str().unwrap()], None)), 3);
}

#[test]
fn solver_failure_exits_four_with_partial_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    // The profile reaches the boundary layer of this short interval.
    let text = PME.replace("x_min = -3.0", "x_min = -1.2").replace("x_max = 3.0", "x_max = 1.2").replace("n_cells = 128", "n_cells = 64");
    let cfg = write(tmp.path(), "p.toml", &text);
    let dir = tmp.path().join("out");
    let out = jkoflow(&["run", &cfg, "--output", dir.to_str().unwrap()], None);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("MANIFEST.json")).unwrap()).unwrap();
    assert_eq!(manifest["complete"], false);
    assert!(manifest["error"].as_str().unwrap().contains("boundary"));
    assert!(manifest["steps_completed"].as_u64().unwrap() < 25);
}

#[test]
fn rerun_from_emitted_config_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "p.toml", PME);
    let a = tmp.path().join("a");
    assert_eq!(code(&jkoflow(&["run", &cfg, "--output", a.to_str().unwrap()], None)), 0);
    let b = tmp.path().join("b");
    let emitted = a.join("config.toml");
    assert_eq!(code(&jkoflow(&["run", emitted.to_str().unwrap(), "--output", b.to_str().unwrap()], None)), 0);
    for f in ["densities.csv", "energies.csv", "steps.csv", "diagnostics.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let report = fs::read_to_string(a.join("diagnostics.json")).unwrap();
    assert!(report.contains("barenblatt_l1"));
    assert_eq!(code(&jkoflow(&["diagnose", a.to_str().unwrap()], None)), 0);
}

#[test]
fn compare_writes_both_solutions() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "p.toml", PME);
    let dir = tmp.path().join("cmp");
    let out = jkoflow(&["compare", &cfg, "--output", dir.to_str().unwrap()], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.join("jko/densities.csv").exists() && dir.join("fv/densities.csv").exists());
    let cmp: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("comparison.json")).unwrap()).unwrap();
    assert!(cmp["l1_max"].as_f64().unwrap() < 0.03);
}

#[test]
fn audit_of_zero_model_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "z.toml", ZERO);
    let out = jkoflow(&["audit", &cfg], None);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("not_applicable"));
}
