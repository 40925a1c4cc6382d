//! End-to-end drivers behind the command-line subcommands.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{barenblatt_pair, Format, InitialConfig, RunConfig};
use crate::diagnostics::{run_diagnostics, CheckResult, DiagnosticsReport, DiagnosticsSettings};
use crate::fv::{fv_run_with_stats, FvStats};
use crate::grid::l1_distance;
use crate::io::{
    write_config, write_densities, write_energies, write_json, write_steps, IoError, IoResult, Manifest, CONFIG_FILE,
    DENSITIES_FILE, DIAGNOSTICS_FILE, ENERGIES_FILE, STEPS_FILE,
};
use crate::jko::{run_scheme_partial, Trajectory};
use crate::model::audit::{audit_model, AuditSettings, ModelAudit};
use crate::model::ModelSpec;

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Passed,
    DiagnosticFailure,
    SolverFailure,
}

/// Content of `diagnostics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub audit: ModelAudit,
    pub diagnostics: DiagnosticsReport,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.audit.passed() && self.diagnostics.passed()
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub outcome: Outcome,
    pub report: Option<RunReport>,
    pub error: Option<String>,
    pub trajectory: Trajectory,
}

fn config_err(e: crate::config::ConfigError) -> IoError {
    IoError::Config { path: CONFIG_FILE.into(), source: e }
}

/// Largest L¹ error of the two species against the Barenblatt profiles at
/// the final snapshot, when the model and initial data admit them.
pub fn barenblatt_check(traj: &Trajectory, model: &ModelSpec, t0: f64, tol: f64) -> crate::Result<Option<CheckResult>> {
    let Some(exact) = barenblatt_pair(model) else { return Ok(None) };
    let t = t0 + traj.horizon();
    let last = traj.last();
    let mut result = CheckResult::new("barenblatt_l1", true, 0.0, vec![t]);
    let mut worst: f64 = 0.0;
    for (i, b) in exact.iter().enumerate() {
        let err = l1_distance(last.species(i + 1), &b.cell_averages(&traj.grid, t)?)?;
        result.fitted.insert(format!("l1_species{}", i + 1), err);
        worst = worst.max(err);
    }
    result.worst_slack = worst - tol;
    result.passed = worst <= tol;
    Ok(Some(result.with_fit("tol", tol)))
}

/// Model audit plus trajectory diagnostics, filtered by the configuration.
pub fn diagnose(traj: &Trajectory, config: &RunConfig, model: &ModelSpec) -> crate::Result<RunReport> {
    let audit = audit_model(model, &AuditSettings::default());
    let settings = DiagnosticsSettings { c1: audit.c1, c_exd2: audit.c_exd2, ..config.diagnostics.settings() };
    let mut diagnostics = run_diagnostics(traj, model, &settings)?;
    if let InitialConfig::Barenblatt { t0 } = config.initial {
        diagnostics.checks.extend(barenblatt_check(traj, model, t0, config.diagnostics.barenblatt_tol)?);
    }
    diagnostics.checks.retain(|c| config.diagnostics.keeps(&c.name));
    Ok(RunReport { audit, diagnostics })
}

fn write_series(dir: &Path, traj: &Trajectory, config: &RunConfig, manifest: &mut Manifest) -> IoResult<()> {
    write_config(&dir.join(CONFIG_FILE), config)?;
    manifest.add_file(dir, CONFIG_FILE)?;
    if config.output.formats.contains(&Format::Csv) {
        write_densities(&dir.join(DENSITIES_FILE), traj)?;
        write_energies(&dir.join(ENERGIES_FILE), traj)?;
        write_steps(&dir.join(STEPS_FILE), traj)?;
        for f in [DENSITIES_FILE, ENERGIES_FILE, STEPS_FILE] {
            manifest.add_file(dir, f)?;
        }
    }
    Ok(())
}

/// Runs the scheme, writes all outputs into `dir` and evaluates the diagnostics.
///
/// On a solver failure the completed part of the trajectory is still written
/// and the manifest is marked incomplete.
pub fn execute_run(config: &RunConfig, dir: &Path) -> IoResult<RunSummary> {
    let model = config.build_model().map_err(config_err)?;
    let initial = config.build_initial(&model).map_err(config_err)?;
    fs::create_dir_all(dir).map_err(|source| IoError::Io { path: dir.to_path_buf(), source })?;
    let jko = config.jko_config();
    let (traj, err) = run_scheme_partial(&initial, config.time.horizon, &model, &jko);
    let planned = (config.time.horizon / jko.tau + 1e-9).floor() as usize;
    let mut manifest = Manifest::new("run", planned);
    manifest.steps_completed = traj.n_steps();
    write_series(dir, &traj, config, &mut manifest)?;
    let (outcome, report, error) = match err {
        Some(e) => (Outcome::SolverFailure, None, Some(e.to_string())),
        None if !config.diagnostics.enabled => (Outcome::Passed, None, None),
        None => {
            let report = diagnose(&traj, config, &model)?;
            let outcome = if report.passed() { Outcome::Passed } else { Outcome::DiagnosticFailure };
            (outcome, Some(report), None)
        }
    };
    if let (Some(r), true) = (&report, config.output.formats.contains(&Format::Json)) {
        write_json(&dir.join(DIAGNOSTICS_FILE), r)?;
        manifest.add_file(dir, DIAGNOSTICS_FILE)?;
    }
    manifest.complete = error.is_none();
    manifest.error = error.clone();
    manifest.write(dir)?;
    Ok(RunSummary { outcome, report, error, trajectory: traj })
}

/// Content of `comparison.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// L¹ gap per species at the final time.
    pub l1_final: [f64; 2],
    /// Largest L¹ gap over common snapshot times.
    pub l1_max: f64,
    pub agreement_tol: f64,
    pub fv_stats: FvStats,
    /// Barenblatt errors of the JKO and FV solutions, when applicable.
    pub barenblatt: Option<[CheckResult; 2]>,
    pub passed: bool,
}

/// Runs both solvers from the same data and compares them. Each solution is
/// written to its own subdirectory of `dir`.
pub fn execute_compare(config: &RunConfig, dir: &Path) -> IoResult<(Outcome, Option<Comparison>, Option<String>)> {
    let model = config.build_model().map_err(config_err)?;
    let initial = config.build_initial(&model).map_err(config_err)?;
    let jko = config.jko_config();
    let fv_cfg = config.fv_config();
    let (jko_dir, fv_dir) = (dir.join("jko"), dir.join("fv"));
    for d in [&jko_dir, &fv_dir] {
        fs::create_dir_all(d).map_err(|source| IoError::Io { path: d.to_path_buf(), source })?;
    }
    let (traj, err) = run_scheme_partial(&initial, config.time.horizon, &model, &jko);
    let mut manifest = Manifest::new("compare/jko", (config.time.horizon / jko.tau + 1e-9).floor() as usize);
    manifest.steps_completed = traj.n_steps();
    manifest.complete = err.is_none();
    manifest.error = err.as_ref().map(|e| e.to_string());
    write_series(&jko_dir, &traj, config, &mut manifest)?;
    manifest.write(&jko_dir)?;
    if let Some(e) = err {
        return Ok((Outcome::SolverFailure, None, Some(e.to_string())));
    }
    let (fv, stats) = match fv_run_with_stats(&initial, config.time.horizon, &model, &fv_cfg) {
        Ok(r) => r,
        Err(e) => return Ok((Outcome::SolverFailure, None, Some(format!("finite-volume solver: {e}")))),
    };
    let mut fv_config = config.clone();
    fv_config.time.tau = fv_cfg.snapshot_interval;
    let mut manifest = Manifest::new("compare/fv", fv.n_steps());
    manifest.steps_completed = fv.n_steps();
    write_series(&fv_dir, &fv, &fv_config, &mut manifest)?;
    manifest.write(&fv_dir)?;

    let l1 = |a: &crate::grid::SpeciesPair, b: &crate::grid::SpeciesPair| -> crate::Result<[f64; 2]> {
        Ok([l1_distance(&a.rho1, &b.rho1)?, l1_distance(&a.rho2, &b.rho2)?])
    };
    let l1_final = l1(traj.last(), fv.last())?;
    let mut l1_max = l1_final[0].max(l1_final[1]);
    if (fv_cfg.snapshot_interval - jko.tau).abs() <= 1e-12 * jko.tau {
        for (a, b) in traj.snapshots.iter().zip(&fv.snapshots) {
            let d = l1(a, b)?;
            l1_max = l1_max.max(d[0]).max(d[1]);
        }
    }
    let barenblatt = match config.initial {
        InitialConfig::Barenblatt { t0 } => {
            let tol = config.diagnostics.barenblatt_tol;
            match (barenblatt_check(&traj, &model, t0, tol)?, barenblatt_check(&fv, &model, t0, tol)?) {
                (Some(a), Some(b)) => Some([a, b]),
                _ => None,
            }
        }
        _ => None,
    };
    let agreement_tol = config.fv.agreement_tol;
    let passed = l1_max <= agreement_tol && barenblatt.as_ref().map_or(true, |b| b[0].passed && b[1].passed);
    let cmp = Comparison { l1_final, l1_max, agreement_tol, fv_stats: stats, barenblatt, passed };
    write_json(&dir.join("comparison.json"), &cmp)?;
    let outcome = if passed { Outcome::Passed } else { Outcome::DiagnosticFailure };
    Ok((outcome, Some(cmp), None))
}
