//! Numerical checks of the a-priori estimates along computed trajectories.
//!
//! Each check returns a [`CheckResult`]: the worst slack (positive means
//! violated beyond tolerance unless stated otherwise), a witness and any
//! fitted constants. All checks are pure functions of their inputs.

mod flow;
mod holder;
mod norms;
mod weak;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use flow::{check_flow_interchange, dirichlet_sum, heat_step, FlowInterchange, FlowSettings};
pub use holder::{check_holder, holder_exponent};
pub use norms::{
    check_conservation, check_dissipation, check_entropy_bounds, check_moment_envelope, check_moment_inequality,
    check_norm_bounds, check_one_step, entropy_calibration_corpus, fit_entropy_constant, gaussian_entropy_floor,
    StepAudit, ENTROPY_BETA,
};
pub use weak::{check_difference_quotient, difference_quotient_errors, weak_residual, TestFunction, TestKind};

use crate::error::Result;
use crate::jko::Trajectory;
use crate::model::audit::ModelAudit;
use crate::model::ModelSpec;

/// Names of every check [`run_diagnostics`] can emit, plus the Barenblatt
/// comparison added by the driver.
pub const CHECK_NAMES: [&str; 13] = [
    "conservation",
    "one_step",
    "dissipation",
    "moment_inequality",
    "moment_envelope",
    "norm_bounds",
    "entropy_bounds",
    "holder",
    "flow_interchange_lower",
    "flow_interchange_evi",
    "flow_interchange_h1",
    "weak_residual",
    "barenblatt_l1",
];

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub worst_slack: f64,
    /// Step index, time pair or sample point realizing the worst slack.
    pub witness: Vec<f64>,
    pub fitted: BTreeMap<String, f64>,
    pub note: String,
}

impl CheckResult {
    pub fn new(name: &str, passed: bool, worst_slack: f64, witness: Vec<f64>) -> Self {
        Self { name: name.into(), passed, worst_slack, witness, fitted: BTreeMap::new(), note: String::new() }
    }

    pub fn with_fit(mut self, key: &str, value: f64) -> Self {
        self.fitted.insert(key.into(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub checks: Vec<CheckResult>,
}

impl DiagnosticsReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

/// Constants and knobs shared by the checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSettings {
    /// Certified coercivity constant of (D3); 0 when not applicable.
    pub c1: f64,
    /// Constant of the lower bound `A ≥ C(ρ₁^{m₁} + ρ₂^{m₂})`; 0 when not applicable.
    pub c_exd2: f64,
    pub holder_pairs: usize,
    /// Hölder constant calibrated on another run; fitted on this one when absent.
    pub holder_c: Option<f64>,
    /// Entropy constant calibrated on a corpus; fitted on the default corpus when absent.
    pub entropy_c: Option<f64>,
    pub s_max: f64,
    pub n_heat_steps: usize,
    /// Evaluate weak residuals for three bumps per species.
    pub weak_residuals: bool,
}

impl Default for DiagnosticsSettings {
    fn default() -> Self {
        Self {
            c1: 0.0,
            c_exd2: 0.0,
            holder_pairs: 64,
            holder_c: None,
            entropy_c: None,
            s_max: 1e-4,
            n_heat_steps: 4,
            weak_residuals: true,
        }
    }
}

impl DiagnosticsSettings {
    /// Takes the certified constants from a model audit.
    pub fn from_audit(audit: &ModelAudit) -> Self {
        Self { c1: audit.c1, c_exd2: audit.c_exd2, ..Self::default() }
    }
}

/// Bumps at a quarter, half and three quarters of the grid, a quarter wide.
pub fn default_test_functions(traj: &Trajectory) -> Vec<TestFunction> {
    let g = &traj.grid;
    let len = g.x_max - g.x_min;
    [0.3, 0.5, 0.7]
        .iter()
        .map(|f| TestFunction { center: g.x_min + f * len, width: 0.25 * len, kind: TestKind::Bump })
        .collect()
}

/// Runs every trajectory check.
pub fn run_diagnostics(traj: &Trajectory, model: &ModelSpec, settings: &DiagnosticsSettings) -> Result<DiagnosticsReport> {
    let audit = StepAudit::from_trajectory(traj, model)?;
    let mut checks = vec![
        check_conservation(traj),
        check_one_step(&audit, traj.config.inner_tol),
        check_dissipation(&audit, model, traj.config.inner_tol),
        check_moment_inequality(traj, &audit),
        check_moment_envelope(traj, &audit),
        check_norm_bounds(traj, model, &audit, settings.c_exd2),
        check_entropy_bounds(traj, settings.entropy_c),
    ];
    if traj.n_steps() >= 10 {
        checks.push(check_holder(traj, settings.holder_pairs, settings.holder_c)?);
    } else {
        checks.push(
            CheckResult::new("holder", true, 0.0, Vec::new())
                .with_note(format!("not applicable: {} steps, 10 needed", traj.n_steps())),
        );
    }
    let flow = check_flow_interchange(
        traj,
        model,
        &FlowSettings { s_max: settings.s_max, n_heat_steps: settings.n_heat_steps, c1: settings.c1 },
    )?;
    checks.extend([flow.dissipation_lower, flow.evi_chain, flow.h1_bound]);
    if settings.weak_residuals && traj.n_steps() > 0 {
        let mut worst: f64 = 0.0;
        let mut entry = CheckResult::new("weak_residual", true, 0.0, Vec::new());
        for species in [1, 2] {
            for (k, phi) in default_test_functions(traj).iter().enumerate() {
                let r = weak_residual(traj, model, phi, species, (0.0, traj.horizon()))?;
                entry.fitted.insert(format!("species{species}_bump{k}"), r);
                worst = worst.max(r);
            }
        }
        entry.worst_slack = worst;
        entry.passed = worst.is_finite();
        checks.push(entry.with_note("residual of the weak formulation over [0, T]; expected O(tau + h)"));
    }
    Ok(DiagnosticsReport { checks })
}
