//! Explicit finite-volume solver for the expanded system, used as an
//! oracle independent of the variational machinery.
//!
//! Each species moves with the face velocity `vᵢ = −∂ₓξᵢ`, where
//! `ξᵢ = A_{ρᵢ}(ρ₁, ρ₂) + Hᵢ * ρᵢ + Kᵢ * ρⱼ` is the cell potential, and the
//! flux is `ρᵢ vᵢ` with the density taken upwind. Vacuum cells carry no flux.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{normalize, Density, Grid1D, SpeciesPair};
use crate::jko::{JkoConfig, Trajectory};
use crate::model::{ModelSpec, ModelTables};

/// Largest tolerated mass removed by the positivity clip over a run.
pub const CLIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FvConfig {
    /// Upper bound on the time step; the stability cap applies on top. 0 means cap only.
    pub dt_fv: f64,
    /// Minmod-limited linear reconstruction of the face densities.
    pub limiter: bool,
    /// Spacing of the stored snapshots.
    pub snapshot_interval: f64,
}

impl Default for FvConfig {
    fn default() -> Self {
        Self { dt_fv: 0.0, limiter: false, snapshot_interval: 1e-3 }
    }
}

/// Bookkeeping of one run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FvStats {
    pub steps: usize,
    pub min_dt: f64,
    /// Largest `|Σρ h − 1|` at a snapshot; larger drifts than the mass tolerance are renormalized.
    pub max_mass_drift: f64,
    /// Mass added back by the positivity clip.
    pub clipped_mass: f64,
    /// Largest per-step gap between the change of the first moment and `dt h Σ F`.
    pub max_moment_residual: f64,
}

/// Stable time step for the current state: `min(h²/(2 d_max), h/(2 |v|_max))`,
/// with `d_max` the largest `ρᵢ(A_{ρᵢρᵢ} + |A_{ρᵢρⱼ}|)`.
pub fn stable_dt(grid: &Grid1D, model: &ModelSpec, rho: [&[f64]; 2], vel: [&[f64]; 2]) -> f64 {
    let h = grid.h();
    let mut d_max: f64 = 0.0;
    for j in 0..grid.n_cells {
        let (r1, r2) = (rho[0][j], rho[1][j]);
        if r1 == 0.0 && r2 == 0.0 {
            continue;
        }
        let jet = model.diffusion.a_jet(r1, r2);
        d_max = d_max.max(r1 * (jet[3].abs() + jet[4].abs())).max(r2 * (jet[5].abs() + jet[4].abs()));
    }
    let v_max = vel.iter().flat_map(|v| v.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
    let mut dt = f64::INFINITY;
    if d_max > 0.0 {
        dt = dt.min(h * h / (2.0 * d_max));
    }
    if v_max > 0.0 {
        dt = dt.min(h / (2.0 * v_max));
    }
    dt
}

/// Runs to `⌊T/interval⌋` snapshot intervals.
pub fn fv_run(initial: &SpeciesPair, horizon: f64, model: &ModelSpec, config: &FvConfig) -> Result<Trajectory> {
    fv_run_with_stats(initial, horizon, model, config).map(|(t, _)| t)
}

pub fn fv_run_with_stats(
    initial: &SpeciesPair,
    horizon: f64,
    model: &ModelSpec,
    config: &FvConfig,
) -> Result<(Trajectory, FvStats)> {
    model.validate()?;
    if !(config.snapshot_interval > 0.0) || !(config.dt_fv >= 0.0) || !(horizon >= 0.0) {
        return Err(Error::InvalidArgument("snapshot_interval must be positive, dt_fv and horizon nonnegative".into()));
    }
    let grid = *initial.grid();
    let (n, h) = (grid.n_cells, grid.h());
    let tables = ModelTables::new(&grid, model);
    let mut rho = [initial.rho1.values().to_vec(), initial.rho2.values().to_vec()];
    let mut traj = Trajectory {
        grid,
        model: model.clone(),
        config: JkoConfig { tau: config.snapshot_interval, ..JkoConfig::default() },
        snapshots: vec![initial.clone()],
        records: Vec::new(),
    };
    let mut stats = FvStats { min_dt: f64::INFINITY, ..Default::default() };
    let n_snap = (horizon / config.snapshot_interval + 1e-9).floor() as usize;
    let xs = grid.centers();
    let mut vel = [vec![0.0; n + 1], vec![0.0; n + 1]];
    let mut flux = [vec![0.0; n + 1], vec![0.0; n + 1]];
    for snap in 1..=n_snap {
        let t_target = snap as f64 * config.snapshot_interval;
        let mut t = (snap - 1) as f64 * config.snapshot_interval;
        while t < t_target - 1e-14 * t_target.max(1.0) {
            for i in 0..2 {
                face_velocity(&grid, model, &tables, i + 1, &rho, &mut vel[i]);
            }
            let cap = stable_dt(&grid, model, [&rho[0], &rho[1]], [&vel[0], &vel[1]]);
            if !(cap > 1e-14 * config.snapshot_interval) {
                return Err(Error::StabilityViolation(cap));
            }
            let mut dt = cap.min(t_target - t);
            if config.dt_fv > 0.0 {
                dt = dt.min(config.dt_fv);
            }
            for i in 0..2 {
                face_flux(&rho[i], &vel[i], config.limiter, &mut flux[i]);
                let before: f64 = xs.iter().zip(&rho[i]).map(|(x, r)| x * r).sum::<f64>() * h;
                let predicted = dt * h * flux[i].iter().sum::<f64>();
                for j in 0..n {
                    rho[i][j] -= dt / h * (flux[i][j + 1] - flux[i][j]);
                }
                let after: f64 = xs.iter().zip(&rho[i]).map(|(x, r)| x * r).sum::<f64>() * h;
                stats.max_moment_residual = stats.max_moment_residual.max((after - before - predicted).abs());
                for r in rho[i].iter_mut() {
                    if *r < 0.0 {
                        stats.clipped_mass += -*r * h;
                        *r = 0.0;
                    }
                }
            }
            if stats.clipped_mass > CLIP_TOL {
                return Err(Error::NegativityClipExceeded(stats.clipped_mass));
            }
            stats.min_dt = stats.min_dt.min(dt);
            stats.steps += 1;
            t += dt;
        }
        for r in &rho {
            let mass = r.iter().sum::<f64>() * h;
            stats.max_mass_drift = stats.max_mass_drift.max((mass - 1.0).abs());
        }
        let keep = |r: &[f64]| Density::new(grid, r.to_vec()).or_else(|_| normalize(r, &grid));
        let pair = SpeciesPair::new(keep(&rho[0])?, keep(&rho[1])?)?;
        traj.snapshots.push(pair);
    }
    Ok((traj, stats))
}

/// `vᵢ` at the faces; the two boundary faces carry zero velocity.
fn face_velocity(grid: &Grid1D, model: &ModelSpec, tables: &ModelTables, i: usize, rho: &[Vec<f64>; 2], out: &mut [f64]) {
    let (n, h) = (grid.n_cells, grid.h());
    let own = &rho[i - 1];
    let other = &rho[2 - i];
    let mut xi: Vec<f64> = (0..n).map(|j| model.diffusion.a_rho(i, rho[0][j], rho[1][j])).collect();
    if let Some(t) = tables.self_table(i) {
        xi.iter_mut().zip(t.convolve(own)).for_each(|(x, c)| *x += h * c);
    }
    if let Some(t) = tables.cross_table(i) {
        xi.iter_mut().zip(t.convolve(other)).for_each(|(x, c)| *x += h * c);
    }
    out[0] = 0.0;
    out[n] = 0.0;
    for j in 1..n {
        out[j] = -(xi[j] - xi[j - 1]) / h;
    }
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Upwind flux `ρ v` at the faces, optionally from limited reconstructions.
fn face_flux(rho: &[f64], vel: &[f64], limiter: bool, out: &mut [f64]) {
    let n = rho.len();
    let slope = |j: usize| -> f64 {
        if !limiter || j == 0 || j + 1 == n {
            0.0
        } else {
            minmod(rho[j] - rho[j - 1], rho[j + 1] - rho[j])
        }
    };
    out[0] = 0.0;
    out[n] = 0.0;
    for f in 1..n {
        let v = vel[f];
        out[f] = if v > 0.0 {
            v * (rho[f - 1] + 0.5 * slope(f - 1))
        } else {
            v * (rho[f] - 0.5 * slope(f))
        };
    }
}
