//! End-to-end runs through the library entry points.

mod common;

use common::{bump, l1, PmeBarenblatt};
use jkoflow::config::parse_config;
use jkoflow::diagnostics::{run_diagnostics, DiagnosticsSettings};
use jkoflow::driver::{execute_compare, execute_run, Outcome};
use jkoflow::fv::{fv_run, FvConfig};
use jkoflow::io::{read_trajectory, Manifest, DENSITIES_FILE, MANIFEST_FILE};
use jkoflow::jko::{interpolate, run_scheme};
use jkoflow::model::audit::{audit_model, AuditSettings};
use jkoflow::model::presets;
use jkoflow::{Error, Grid1D, JkoConfig, SpeciesPair};

const PME_CONFIG: &str = r#"
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

#[test]
fn jko_and_fv_track_barenblatt_on_coarse_grid() {
    let g = Grid1D::new(-3.0, 3.0, 128).unwrap();
    let oracle = PmeBarenblatt::new();
    let d = oracle.density(&g, 0.1);
    let p = SpeciesPair::new(d.clone(), d).unwrap();
    let model = presets::decoupled_pme();
    let jko = run_scheme(&p, 0.1, &model, &JkoConfig { tau: 4e-3, ..Default::default() }).unwrap();
    let fv = fv_run(&p, 0.1, &model, &FvConfig { snapshot_interval: 0.02, ..Default::default() }).unwrap();
    let exact = oracle.cell_averages(&g, 0.2);
    let e_jko = l1(jko.last().rho1.values(), &exact, g.h());
    let e_fv = l1(fv.last().rho1.values(), &exact, g.h());
    assert!(e_jko < 1e-2, "JKO L1 error {e_jko}");
    assert!(e_fv < 3e-2, "FV L1 error {e_fv}");
    // Identical species stay identical.
    assert_eq!(jko.last().rho1, jko.last().rho2);
}

#[test]
fn coupled_run_passes_every_diagnostic() {
    let g = Grid1D::new(-4.0, 4.0, 96).unwrap();
    let p = SpeciesPair::new(bump(&g, -0.6, 0.7), bump(&g, 0.7, 0.6)).unwrap();
    let model = presets::coupled_gaussian();
    let traj = run_scheme(&p, 0.06, &model, &JkoConfig { tau: 4e-3, ..Default::default() }).unwrap();
    let settings = DiagnosticsSettings::from_audit(&audit_model(&model, &AuditSettings::default()));
    let report = run_diagnostics(&traj, &model, &settings).unwrap();
    assert!(report.passed(), "failures: {:?}", report.failures());
}

#[test]
fn interpolation_is_piecewise_constant_and_bounded() {
    let g = Grid1D::new(-2.0, 2.0, 48).unwrap();
    let p = SpeciesPair::new(bump(&g, -0.3, 0.5), bump(&g, 0.3, 0.5)).unwrap();
    let traj = run_scheme(&p, 0.03, &presets::decoupled_pme(), &JkoConfig { tau: 1e-2, ..Default::default() }).unwrap();
    assert_eq!(traj.n_steps(), 3);
    assert_eq!(interpolate(&traj, 0.0).unwrap(), &traj.snapshots[0]);
    assert_eq!(interpolate(&traj, 0.015).unwrap(), &traj.snapshots[2]);
    assert!(matches!(interpolate(&traj, 0.5), Err(Error::OutOfRange { .. })));
}

#[test]
fn run_directory_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let config = parse_config(PME_CONFIG).unwrap();
    let summary = execute_run(&config, dir.path()).unwrap();
    assert_eq!(summary.outcome, Outcome::Passed, "{:?}", summary.report.map(|r| r.diagnostics.failures().join(",")));
    let manifest: Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    assert!(manifest.complete);
    assert_eq!(manifest.steps_completed, 25);
    assert!(manifest.files.iter().any(|f| f.name == DENSITIES_FILE && f.sha256.len() == 64));
    let (back, traj) = read_trajectory(dir.path()).unwrap();
    assert_eq!(back, config);
    assert_eq!(traj.snapshots, summary.trajectory.snapshots);
}

#[test]
fn compare_agrees_on_pme() {
    let dir = tempfile::tempdir().unwrap();
    let config = parse_config(PME_CONFIG).unwrap();
    let (outcome, cmp, err) = execute_compare(&config, dir.path()).unwrap();
    assert!(err.is_none());
    let cmp = cmp.unwrap();
    assert_eq!(outcome, Outcome::Passed, "{cmp:?}");
    assert!(cmp.l1_final.iter().all(|&e| e <= cmp.agreement_tol));
    assert!(dir.path().join("jko").join(MANIFEST_FILE).exists());
    assert!(dir.path().join("fv").join(DENSITIES_FILE).exists());
}
