//! Energy, moment, norm and entropy estimates along a trajectory.

use crate::error::Result;
use crate::grid::{density_entropy, second_moment, Density, Grid1D, MASS_TOL};
use crate::jko::Trajectory;
use crate::model::{relative_energy, EnergySplit};
use crate::model::ModelSpec;
use crate::transport::w2_sq;

use super::CheckResult;

/// Exponent of the entropy lower bound `ℰ ≥ −C (m₂ + 1)^β`.
pub const ENTROPY_BETA: f64 = 0.75;

/// Per-step quantities recomputed from the snapshots alone.
#[derive(Debug, Clone)]
pub struct StepAudit {
    pub tau: f64,
    /// `𝒲₂²(ρᵢⁿ, ρᵢⁿ⁺¹)` per species.
    pub w2_sq: Vec<[f64; 2]>,
    /// `ℱ[𝛒ⁿ|𝛒ⁿ]`.
    pub energy_prev: Vec<EnergySplit>,
    /// `ℱ[𝛒ⁿ⁺¹|𝛒ⁿ]`.
    pub energy_next: Vec<EnergySplit>,
    /// `𝓕̃[𝛒ⁿ]` for every snapshot.
    pub f_tilde: Vec<f64>,
}

impl StepAudit {
    pub fn from_trajectory(traj: &Trajectory, model: &ModelSpec) -> Result<Self> {
        let snaps = &traj.snapshots;
        let mut audit = Self {
            tau: traj.tau(),
            w2_sq: Vec::with_capacity(traj.n_steps()),
            energy_prev: Vec::with_capacity(traj.n_steps()),
            energy_next: Vec::with_capacity(traj.n_steps()),
            f_tilde: Vec::with_capacity(snaps.len()),
        };
        for (n, s) in snaps.iter().enumerate() {
            let own = relative_energy(s, s, model)?;
            audit.f_tilde.push(own.f_tilde());
            if let Some(next) = snaps.get(n + 1) {
                audit.w2_sq.push([w2_sq(&s.rho1, &next.rho1), w2_sq(&s.rho2, &next.rho2)]);
                audit.energy_prev.push(own);
                audit.energy_next.push(relative_energy(next, s, model)?);
            }
        }
        Ok(audit)
    }

    pub fn product_w2_sq(&self, n: usize) -> f64 {
        self.w2_sq[n][0] + self.w2_sq[n][1]
    }
}

fn worst<I: Iterator<Item = (f64, Vec<f64>)>>(items: I) -> (f64, Vec<f64>) {
    items.fold((f64::NEG_INFINITY, Vec::new()), |acc, it| if it.0 > acc.0 { it } else { acc })
}

/// Unit mass of every snapshot; nonnegativity is enforced by [`Density`].
pub fn check_conservation(traj: &Trajectory) -> CheckResult {
    let (slack, witness) = worst(traj.snapshots.iter().enumerate().flat_map(|(n, s)| {
        [1, 2].map(|i| ((s.species(i).mass() - 1.0).abs() - MASS_TOL, vec![n as f64, i as f64]))
    }));
    let slack = if traj.snapshots.is_empty() { 0.0 } else { slack };
    CheckResult::new("conservation", slack <= 0.0, slack, witness)
}

/// `(1/2τ)𝒲₂²(𝛒ⁿ, 𝛒ⁿ⁺¹) ≤ ℱ[𝛒ⁿ|𝛒ⁿ] − ℱ[𝛒ⁿ⁺¹|𝛒ⁿ]` for every step.
pub fn check_one_step(audit: &StepAudit, tol: f64) -> CheckResult {
    let (slack, witness) = worst((0..audit.w2_sq.len()).map(|n| {
        let gap = audit.energy_prev[n].total() - audit.energy_next[n].total();
        let s = audit.product_w2_sq(n) / (2.0 * audit.tau) - gap;
        (s - tol * (1.0 + audit.energy_prev[n].total().abs()), vec![n as f64])
    }));
    let slack = if audit.w2_sq.is_empty() { 0.0 } else { slack };
    CheckResult::new("one_step", slack <= 0.0, slack, witness)
}

/// `(1/4τ)𝒲₂² ≤ 𝓕̃[𝛒ⁿ] − 𝓕̃[𝛒ⁿ⁺¹] + (Lip(K₁)² + Lip(K₂)²)τ` for every step.
pub fn check_dissipation(audit: &StepAudit, model: &ModelSpec, tol: f64) -> CheckResult {
    let lip_sq = model.cross_lip_sq();
    let (slack, witness) = worst((0..audit.w2_sq.len()).map(|n| {
        let s = audit.product_w2_sq(n) / (4.0 * audit.tau) - (audit.f_tilde[n] - audit.f_tilde[n + 1]) - lip_sq * audit.tau;
        (s - tol * (1.0 + audit.f_tilde[n].abs()), vec![n as f64])
    }));
    let slack = if audit.w2_sq.is_empty() { 0.0 } else { slack };
    CheckResult::new("dissipation", slack <= 0.0, slack, witness).with_fit("lip_sq", lip_sq)
}

/// `m₂(ρᵢⁿ⁺¹) ≤ 2 m₂(ρᵢⁿ) + 2 𝒲₂²(ρᵢⁿ, ρᵢⁿ⁺¹)`.
pub fn check_moment_inequality(traj: &Trajectory, audit: &StepAudit) -> CheckResult {
    let m2: Vec<[f64; 2]> =
        traj.snapshots.iter().map(|s| [second_moment(&s.rho1), second_moment(&s.rho2)]).collect();
    let (slack, witness) = worst((0..audit.w2_sq.len()).flat_map(|n| {
        let m2 = &m2;
        (0..2).map(move |i| {
            let rhs = 2.0 * m2[n][i] + 2.0 * audit.w2_sq[n][i];
            (m2[n + 1][i] - rhs - 1e-12 * (1.0 + rhs), vec![n as f64, (i + 1) as f64])
        })
    }));
    let slack = if audit.w2_sq.is_empty() { 0.0 } else { slack };
    CheckResult::new("moment_inequality", slack <= 0.0, slack, witness)
}

/// Affine-in-time envelope `m₂(ρᵢⁿ) ≤ 2 m₂(ρᵢ⁰) + 2 (tₙ/τ) Σ_{k<n} 𝒲₂²(ρᵢᵏ, ρᵢᵏ⁺¹)`.
pub fn check_moment_envelope(traj: &Trajectory, audit: &StepAudit) -> CheckResult {
    let mut result = CheckResult::new("moment_envelope", true, 0.0, Vec::new());
    let mut worst_slack = if traj.n_steps() == 0 { 0.0 } else { f64::NEG_INFINITY };
    for i in 0..2 {
        let m0 = second_moment(traj.snapshots[0].species(i + 1));
        let mut acc = 0.0;
        for n in 1..traj.snapshots.len() {
            acc += audit.w2_sq[n - 1][i];
            let bound = 2.0 * m0 + 2.0 * n as f64 * acc;
            let s = second_moment(traj.snapshots[n].species(i + 1)) - bound - 1e-12 * (1.0 + bound);
            if s > worst_slack {
                worst_slack = s;
                result.witness = vec![n as f64, (i + 1) as f64];
            }
        }
        result.fitted.insert(format!("m2_initial_{}", i + 1), m0);
    }
    result.worst_slack = worst_slack;
    result.passed = worst_slack <= 0.0;
    result
}

/// Smallest value of `½ H` over the differences of cell centers.
fn self_energy_floor(grid: &Grid1D, model: &ModelSpec, i: usize) -> f64 {
    let h = model.self_kernel(i);
    if h.is_zero() {
        return 0.0;
    }
    let min = (0..grid.n_cells).map(|k| h.value(k as f64 * grid.h())).fold(f64::INFINITY, f64::min);
    0.5 * min.min(0.0)
}

/// `C Σ‖ρᵢⁿ‖_{mᵢ}^{mᵢ} ≤ 𝓕̃[𝛒⁰] + Lip² tₙ − inf(self terms)` with `C` the
/// certified lower-bound constant of `A`. Records the largest `L^{αᵢ}` norms.
pub fn check_norm_bounds(traj: &Trajectory, model: &ModelSpec, audit: &StepAudit, c_exd2: f64) -> CheckResult {
    let d = &model.diffusion;
    let mut result = CheckResult::new("norm_bounds", true, 0.0, Vec::new());
    for i in 1..=2 {
        let alpha = if i == 1 { d.alpha1 } else { d.alpha2 };
        let sup = traj.snapshots.iter().map(|s| s.species(i).lp_pow(alpha)).fold(0.0, f64::max);
        result.fitted.insert(format!("sup_l_alpha{i}"), sup);
    }
    if !(c_exd2 > 0.0) {
        return result.with_note("not applicable: no positive lower-bound constant for A");
    }
    let floor = self_energy_floor(&traj.grid, model, 1) + self_energy_floor(&traj.grid, model, 2);
    let lip_sq = model.cross_lip_sq();
    let f0 = audit.f_tilde[0];
    let mut worst_slack = f64::NEG_INFINITY;
    for (n, s) in traj.snapshots.iter().enumerate() {
        let lhs = s.rho1.lp_pow(d.m1) + s.rho2.lp_pow(d.m2);
        let bound = (f0 + lip_sq * traj.time(n) - floor) / c_exd2;
        let slack = lhs - bound - 1e-9 * (1.0 + bound.abs());
        if slack > worst_slack {
            worst_slack = slack;
            result.witness = vec![n as f64];
        }
    }
    result.worst_slack = worst_slack;
    result.passed = worst_slack <= 0.0;
    result.with_fit("bound_at_t0", (f0 - floor) / c_exd2)
}

/// `−½ log(2πe σ²)` with `σ²` the variance of the piecewise-constant density:
/// the entropy of the Gaussian with the same variance, a sharp lower bound.
pub fn gaussian_entropy_floor(rho: &Density) -> f64 {
    let h = rho.grid().h();
    let mean = rho.mean();
    let var = second_moment(rho) - mean * mean + h * h / 12.0;
    -0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * var).ln()
}

/// Gaussians and plateaus of many widths and offsets on `grid`.
pub fn entropy_calibration_corpus(grid: &Grid1D) -> Result<Vec<Density>> {
    let len = grid.x_max - grid.x_min;
    let mid = 0.5 * (grid.x_min + grid.x_max);
    let mut out = Vec::new();
    for k in 1..=12 {
        let w = len * k as f64 / 24.0;
        for shift in [-0.25, 0.0, 0.25] {
            let c = mid + shift * len;
            out.push(crate::grid::normalize(&grid.sample(|x| (-(x - c).powi(2) / (2.0 * (w / 3.0).powi(2))).exp()), grid)?);
            let plateau = grid.sample(|x| if (x - c).abs() <= 0.5 * w { 1.0 } else { 0.0 });
            if plateau.iter().any(|&v| v > 0.0) {
                out.push(crate::grid::normalize(&plateau, grid)?);
            }
        }
    }
    Ok(out)
}

/// Smallest `C ≥ 0` with `ℰ(ρ) ≥ −C (m₂(ρ) + 1)^β` on the corpus.
pub fn fit_entropy_constant(corpus: &[Density], beta: f64) -> f64 {
    corpus
        .iter()
        .map(|r| -density_entropy(r) / (second_moment(r) + 1.0).powf(beta))
        .fold(0.0, f64::max)
}

/// Entropy bounds per species and snapshot: the fitted lower bound, the
/// Gaussian lower bound, and `ℰ ≤ (‖ρ‖_m^m − 1)/(m − 1)`.
pub fn check_entropy_bounds(traj: &Trajectory, entropy_c: Option<f64>) -> CheckResult {
    let c = match entropy_c {
        Some(c) => c,
        None => entropy_calibration_corpus(&traj.grid).map(|corpus| fit_entropy_constant(&corpus, ENTROPY_BETA)).unwrap_or(0.0),
    };
    let d = &traj.model.diffusion;
    let mut result = CheckResult::new("entropy_bounds", true, f64::NEG_INFINITY, Vec::new());
    let mut max_ratio: f64 = 0.0;
    for (n, s) in traj.snapshots.iter().enumerate() {
        for i in 1..=2 {
            let rho = s.species(i);
            let e = density_entropy(rho);
            let m2 = second_moment(rho);
            max_ratio = max_ratio.max(-e / (m2 + 1.0).powf(ENTROPY_BETA));
            let m = d.m(i);
            let mut slacks = vec![
                -c * (m2 + 1.0).powf(ENTROPY_BETA) - e,
                gaussian_entropy_floor(rho) - e,
            ];
            if m > 1.0 {
                slacks.push(e - (rho.lp_pow(m) - 1.0) / (m - 1.0));
            }
            for (kind, s) in slacks.into_iter().enumerate() {
                let s = s - 1e-12;
                if s > result.worst_slack {
                    result.worst_slack = s;
                    result.witness = vec![n as f64, i as f64, kind as f64];
                }
            }
        }
    }
    result.passed = result.worst_slack <= 0.0;
    result.with_fit("c", c).with_fit("beta", ENTROPY_BETA).with_fit("observed_c", max_ratio)
}
