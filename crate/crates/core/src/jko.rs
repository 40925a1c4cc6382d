//! Semi-implicit JKO steps and the time-marching scheme.
//!
//! Each step minimizes `(1/2τ) 𝒲₂²(𝛒ⁿ, 𝛒) + ℱ[𝛒 | 𝛒ⁿ]` over grid densities.
//! A species is parametrized by its cumulative mass at the cell boundaries,
//! so mass and nonnegativity hold by construction and feasibility is a
//! monotone cone. The objective is evaluated exactly on the grid densities
//! and minimized by projected Newton steps with a tridiagonal model Hessian,
//! one species at a time, starting from `𝛒ⁿ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Density, Grid1D, SpeciesPair};
use crate::isotonic::project_monotone_box;
use crate::linalg::solve_tridiagonal;
use crate::model::{relative_energy, EnergySplit, KernelTable, ModelSpec, ModelTables};
use crate::transport::{product_w2_sq, w2_sq_cdf, w2_sq_sampled};

/// Width, in cells, of the layer next to each end of the grid that must stay empty.
pub const BOUNDARY_CELLS: usize = 5;
/// Largest growth per step of the mass inside the boundary layer.
pub const BOUNDARY_MASS_TOL: f64 = 1e-6;

/// Density floor of the model Hessian, relative to the peak density.
const VACUUM_FLOOR: f64 = 1e-3;
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;
const MAX_SWEEPS: usize = 50;
const SNAP_MASS: f64 = 1e-12;
/// Upper bound of the activity threshold, relative to the heaviest cell.
const EPS_ACTIVE: f64 = 1e-2;

/// Parameters of the time discretization and of the inner minimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JkoConfig {
    pub tau: f64,
    /// The inner solve stops once a full Newton step predicts less decrease than this.
    pub inner_tol: f64,
    /// Budget of inner iterations per time step, summed over species and sweeps.
    pub max_inner_iters: usize,
    /// Quantile resolution of the sampled cross-check of the step cost; 0 selects `4 n_cells`.
    pub n_q: usize,
    pub step_shrink: f64,
    pub step_grow: f64,
}

impl Default for JkoConfig {
    fn default() -> Self {
        Self { tau: 1e-3, inner_tol: 1e-10, max_inner_iters: 2000, n_q: 0, step_shrink: 0.5, step_grow: 2.0 }
    }
}

impl JkoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::InvalidArgument(format!("inner_tol must be positive, got {}", self.inner_tol)));
        }
        if self.max_inner_iters == 0 {
            return Err(Error::InvalidArgument("max_inner_iters must be at least 1".into()));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(Error::InvalidArgument(format!("step_shrink must lie in (0, 1), got {}", self.step_shrink)));
        }
        if !(self.step_grow >= 1.0) {
            return Err(Error::InvalidArgument(format!("step_grow must be at least 1, got {}", self.step_grow)));
        }
        Ok(())
    }

    fn quantiles(&self, grid: &Grid1D) -> usize {
        if self.n_q == 0 {
            4 * grid.n_cells
        } else {
            self.n_q
        }
    }
}

/// Audit data of one step `𝛒ⁿ → 𝛒ⁿ⁺¹`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Index `n + 1` of the new snapshot.
    pub step: usize,
    /// `𝒲₂²(𝛒ⁿ, 𝛒ⁿ⁺¹)`.
    pub w2_sq: f64,
    /// The same cost from sampled quantiles.
    pub w2_sq_sampled: f64,
    /// `ℱ[𝛒ⁿ | 𝛒ⁿ]`.
    pub energy_prev: EnergySplit,
    /// `ℱ[𝛒ⁿ⁺¹ | 𝛒ⁿ]`.
    pub energy_next: EnergySplit,
    pub inner_iters: usize,
    pub sweeps: usize,
    /// Decrease predicted by a full projected Newton step at the returned point.
    pub stationarity: f64,
    pub converged: bool,
}

impl StepRecord {
    /// `(1/2τ)𝒲₂² − (ℱ[𝛒ⁿ|𝛒ⁿ] − ℱ[𝛒ⁿ⁺¹|𝛒ⁿ])`, nonpositive when the one-step inequality holds.
    pub fn one_step_slack(&self, tau: f64) -> f64 {
        self.w2_sq / (2.0 * tau) - (self.energy_prev.total() - self.energy_next.total())
    }

    /// `(1/4τ)𝒲₂² − (𝓕̃[𝛒ⁿ] − 𝓕̃[𝛒ⁿ⁺¹]) − (Lip(K₁)² + Lip(K₂)²)τ`.
    pub fn dissipation_slack(&self, tau: f64, lip_sq: f64) -> f64 {
        self.w2_sq / (4.0 * tau) - (self.energy_prev.f_tilde() - self.energy_next.f_tilde()) - lip_sq * tau
    }
}

/// Snapshots `𝛒ⁿ` at `t = nτ` with the records of the steps between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid1D,
    pub model: ModelSpec,
    pub config: JkoConfig,
    pub snapshots: Vec<SpeciesPair>,
    /// `records[n]` describes the step from snapshot `n` to `n + 1`; may be empty for external solvers.
    pub records: Vec<StepRecord>,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.snapshots.len() - 1
    }

    pub fn tau(&self) -> f64 {
        self.config.tau
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.config.tau
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.n_steps())
    }

    pub fn last(&self) -> &SpeciesPair {
        self.snapshots.last().expect("trajectory has an initial snapshot")
    }
}

/// Snapshot index holding `t` under the left-open interval convention.
pub fn snapshot_index(t: f64, tau: f64) -> usize {
    if t <= 0.0 {
        0
    } else {
        (t / tau - 1e-9).ceil().max(0.0) as usize
    }
}

/// Piecewise-constant interpolant: `𝛒_τ(t) = 𝛒ⁿ` for `t ∈ ((n−1)τ, nτ]`.
pub fn interpolate(traj: &Trajectory, t: f64) -> Result<&SpeciesPair> {
    let t_max = traj.horizon();
    if !(t >= 0.0) || t > t_max * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::OutOfRange { t, t_max });
    }
    Ok(&traj.snapshots[snapshot_index(t, traj.tau()).min(traj.n_steps())])
}

/// One JKO step from `prev`.
pub fn jko_step(prev: &SpeciesPair, model: &ModelSpec, config: &JkoConfig) -> Result<(SpeciesPair, StepRecord)> {
    config.validate()?;
    model.validate()?;
    let tables = ModelTables::new(prev.grid(), model);
    step_with_tables(prev, model, &tables, config, 1)
}

/// Runs `⌊T/τ⌋` steps from `initial`.
pub fn run_scheme(initial: &SpeciesPair, horizon: f64, model: &ModelSpec, config: &JkoConfig) -> Result<Trajectory> {
    let (traj, err) = run_scheme_partial(initial, horizon, model, config);
    match err {
        Some(e) => Err(e),
        None => Ok(traj),
    }
}

/// Like [`run_scheme`] but keeps the snapshots computed before a failure.
pub fn run_scheme_partial(
    initial: &SpeciesPair,
    horizon: f64,
    model: &ModelSpec,
    config: &JkoConfig,
) -> (Trajectory, Option<Error>) {
    let mut traj = Trajectory {
        grid: *initial.grid(),
        model: model.clone(),
        config: *config,
        snapshots: vec![initial.clone()],
        records: Vec::new(),
    };
    if let Err(e) = config.validate().and_then(|_| model.validate()) {
        return (traj, Some(e));
    }
    if !(horizon >= 0.0) {
        return (traj, Some(Error::InvalidArgument(format!("horizon must be nonnegative, got {horizon}"))));
    }
    let n_steps = (horizon / config.tau + 1e-9).floor() as usize;
    let tables = ModelTables::new(initial.grid(), model);
    for n in 0..n_steps {
        match step_with_tables(traj.last(), model, &tables, config, n + 1) {
            Ok((next, rec)) => {
                traj.snapshots.push(next);
                traj.records.push(rec);
            }
            Err(e) => return (traj, Some(e)),
        }
    }
    (traj, None)
}

fn step_with_tables(
    prev: &SpeciesPair,
    model: &ModelSpec,
    tables: &ModelTables,
    config: &JkoConfig,
    step: usize,
) -> Result<(SpeciesPair, StepRecord)> {
    let grid = *prev.grid();
    let h = grid.h();
    let cross_pot = |i: usize| {
        tables.cross_table(i).map(|t| {
            let other = prev.species(3 - i);
            t.convolve(other.values()).into_iter().map(|v| h * h * v).collect::<Vec<_>>()
        })
    };
    let blocks = [
        Block::new(grid, config, model, 1, tables.self_table(1), prev.rho1.cdf(), cross_pot(1)),
        Block::new(grid, config, model, 2, tables.self_table(2), prev.rho2.cdf(), cross_pot(2)),
    ];
    let mut cdf = [blocks[0].prev_cdf.clone(), blocks[1].prev_cdf.clone()];
    let mut rho = [prev.rho1.values().to_vec(), prev.rho2.values().to_vec()];
    let mut budget = Budget { used: 0, max: config.max_inner_iters };
    let mut sweeps = 0;
    let mut stationarity = 0.0;
    for _ in 0..MAX_SWEEPS {
        sweeps += 1;
        let mut decrease = 0.0;
        stationarity = 0.0;
        for i in 0..2 {
            let other = std::mem::take(&mut rho[1 - i]);
            let out = blocks[i].minimize(&mut cdf[i], &other, &mut budget).map_err(|s| {
                Error::InnerSolverStalled { step, stationarity: s }
            })?;
            rho[1 - i] = other;
            rho[i] = blocks[i].densities(&cdf[i]);
            decrease += out.decrease;
            stationarity += out.stationarity;
        }
        if decrease <= config.inner_tol || budget.exhausted() {
            break;
        }
    }
    let rebuild = |i: usize| -> Result<Density> {
        if cdf[i] == blocks[i].prev_cdf {
            Ok(prev.species(i + 1).clone())
        } else {
            Density::from_cdf(grid, &cdf[i])
        }
    };
    let next = SpeciesPair::new(rebuild(0)?, rebuild(1)?)?;
    let growth = |i: usize| next.species(i).margin_mass(BOUNDARY_CELLS) - prev.species(i).margin_mass(BOUNDARY_CELLS);
    let escaped = growth(1).max(growth(2));
    if escaped > BOUNDARY_MASS_TOL {
        return Err(Error::BoundaryEscape { step, escaped });
    }
    let n_q = config.quantiles(&grid);
    let record = StepRecord {
        step,
        w2_sq: product_w2_sq(prev, &next),
        w2_sq_sampled: w2_sq_sampled(&prev.rho1, &next.rho1, n_q) + w2_sq_sampled(&prev.rho2, &next.rho2, n_q),
        energy_prev: relative_energy(prev, prev, model)?,
        energy_next: relative_energy(&next, prev, model)?,
        inner_iters: budget.used,
        sweeps,
        stationarity,
        converged: stationarity <= 2.0 * config.inner_tol && !budget.exhausted(),
    };
    Ok((next, record))
}

struct Budget {
    used: usize,
    max: usize,
}

impl Budget {
    fn exhausted(&self) -> bool {
        self.used >= self.max
    }
}

struct BlockOutcome {
    decrease: f64,
    stationarity: f64,
}

/// The step objective restricted to one species, the other held fixed.
struct Block<'a> {
    grid: Grid1D,
    tau: f64,
    tol: f64,
    shrink: f64,
    grow: f64,
    model: &'a ModelSpec,
    species: usize,
    self_table: Option<&'a KernelTable>,
    prev_cdf: Vec<f64>,
    /// `h² (Kᵢ * ρⱼⁿ)`, the gradient of the frozen cross term in the densities.
    cross_pot: Option<Vec<f64>>,
}

impl<'a> Block<'a> {
    fn new(
        grid: Grid1D,
        config: &JkoConfig,
        model: &'a ModelSpec,
        species: usize,
        self_table: Option<&'a KernelTable>,
        prev_cdf: Vec<f64>,
        cross_pot: Option<Vec<f64>>,
    ) -> Self {
        Self {
            grid,
            tau: config.tau,
            tol: config.inner_tol,
            shrink: config.step_shrink,
            grow: config.step_grow,
            model,
            species,
            self_table,
            prev_cdf,
            cross_pot,
        }
    }

    fn densities(&self, c: &[f64]) -> Vec<f64> {
        let h = self.grid.h();
        c.windows(2).map(|w| ((w[1] - w[0]) / h).max(0.0)).collect()
    }

    fn args(&self, own: f64, other: f64) -> (f64, f64) {
        if self.species == 1 {
            (own, other)
        } else {
            (other, own)
        }
    }

    /// Objective value; with `grad`, also its gradient in the boundary CDF values.
    fn objective(&self, c: &[f64], other: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let g = &self.grid;
        let (n, h) = (g.n_cells, g.h());
        let rho = self.densities(c);
        let want = grad.is_some();
        let mut wgrad = if want { vec![0.0; n + 1] } else { Vec::new() };
        let w = w2_sq_cdf(g, &self.prev_cdf, c, want.then_some(&mut wgrad[..]));
        let mut phi = w / (2.0 * self.tau);
        let mut gt = if want { vec![0.0; n] } else { Vec::new() };
        let diff = &self.model.diffusion;
        let mut e_diff = 0.0;
        for j in 0..n {
            let (r1, r2) = self.args(rho[j], other[j]);
            if want {
                let jet = diff.a_jet(r1, r2);
                e_diff += jet[0];
                gt[j] = h * jet[self.species];
            } else {
                e_diff += diff.a(r1, r2);
            }
        }
        phi += h * e_diff;
        if let Some(t) = self.self_table {
            let conv = t.convolve(&rho);
            phi += 0.5 * h * h * conv.iter().zip(&rho).map(|(a, b)| a * b).sum::<f64>();
            if want {
                gt.iter_mut().zip(&conv).for_each(|(v, cv)| *v += h * h * cv);
            }
        }
        if let Some(cp) = &self.cross_pot {
            phi += cp.iter().zip(&rho).map(|(a, b)| a * b).sum::<f64>();
            if want {
                gt.iter_mut().zip(cp).for_each(|(v, p)| *v += p);
            }
        }
        if let Some(gr) = grad {
            gr[0] = 0.0;
            gr[n] = 0.0;
            for k in 1..n {
                gr[k] = wgrad[k] / (2.0 * self.tau) + (gt[k - 1] - gt[k]) / h;
            }
        }
        phi
    }

    /// Tridiagonal model Hessian in the boundary values: Gauss-Newton for the
    /// transport term plus the exact Hessian of the diffusion energy.
    fn model_hessian(&self, c: &[f64], other: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (n, h) = (self.grid.n_cells, self.grid.h());
        let rho = self.densities(c);
        let floor = VACUUM_FLOOR * rho.iter().cloned().fold(0.0, f64::max);
        let mut diag = vec![0.0; n + 1];
        let mut off = vec![0.0; n];
        for j in 0..n {
            let re = rho[j].max(floor).max(f64::MIN_POSITIVE);
            let (r1, r2) = self.args(re, other[j]);
            let app = self.model.diffusion.a_rho_rho(self.species, r1, r2) / h;
            let app = if app.is_finite() && app > 0.0 { app } else { 0.0 };
            let w = h / (3.0 * self.tau * re);
            diag[j] += w + app;
            diag[j + 1] += w + app;
            off[j] += 0.5 * w - app;
        }
        (diag, off)
    }

    /// Projects onto the feasible cone, then empties cells lighter than
    /// [`SNAP_MASS`], whose transport gradient is lost to cancellation.
    fn project(&self, c: &mut [f64]) {
        let n = c.len() - 1;
        project_monotone_box(&mut c[1..n], 0.0, 1.0);
        for k in 1..n {
            if c[k] - c[k - 1] < SNAP_MASS {
                c[k] = c[k - 1];
            }
        }
        for k in (1..n).rev() {
            if c[n] - c[k] >= SNAP_MASS {
                break;
            }
            c[k] = c[n];
        }
    }

    /// Projected Newton direction with an ε-active set: boundaries within ε of
    /// a contact that the gradient pushes into take a scaled gradient step,
    /// the rest a Newton step on the reduced model Hessian. Boundaries inside
    /// an empty run do not move.
    fn direction(&self, c: &[f64], grad: &[f64], other: &[f64]) -> Option<Vec<f64>> {
        let n = self.grid.n_cells;
        let (diag, off) = self.model_hessian(c, other);
        let sg: Vec<f64> = (0..=n).map(|k| if k == 0 || k == n { 0.0 } else { -grad[k] / diag[k] }).collect();
        let probe = self.trial(c, &sg, 1.0);
        let w = probe.iter().zip(c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let peak_mass = c.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max);
        let eps = w.min(EPS_ACTIVE * peak_mass);
        // 0: free, 1: ε-active, 2: frozen inside an empty run.
        let state: Vec<u8> = (0..=n)
            .map(|k| {
                if k == 0 || k == n || (c[k] <= c[k - 1] && c[k] >= c[k + 1]) {
                    return 2;
                }
                let lo = c[k] - c[k - 1] <= eps;
                let hi = c[k + 1] - c[k] <= eps;
                u8::from((lo && grad[k] > 0.0) || (hi && grad[k] < 0.0))
            })
            .collect();
        let m = n - 1;
        let mut d_r = vec![0.0; m];
        let mut o_r = vec![0.0; m.saturating_sub(1)];
        let mut rhs = vec![0.0; m];
        for k in 1..n {
            if state[k] == 0 {
                d_r[k - 1] = diag[k];
                rhs[k - 1] = -grad[k];
            } else {
                d_r[k - 1] = 1.0;
            }
            if k + 1 < n && state[k] == 0 && state[k + 1] == 0 {
                o_r[k - 1] = off[k];
            }
        }
        if !solve_tridiagonal(&d_r, &o_r, &mut rhs) {
            return None;
        }
        let mut d = vec![0.0; n + 1];
        for k in 1..n {
            d[k] = match state[k] {
                0 => rhs[k - 1],
                1 => sg[k],
                _ => 0.0,
            };
        }
        Some(d)
    }

    fn scaled_gradient(&self, c: &[f64], grad: &[f64], other: &[f64]) -> Vec<f64> {
        let (diag, _) = self.model_hessian(c, other);
        let n = self.grid.n_cells;
        (0..=n).map(|k| if k == 0 || k == n { 0.0 } else { -grad[k] / diag[k] }).collect()
    }

    fn trial(&self, c: &[f64], d: &[f64], t: f64) -> Vec<f64> {
        let mut x: Vec<f64> = c.iter().zip(d).map(|(a, b)| a + t * b).collect();
        self.project(&mut x);
        x
    }

    /// Armijo backtracking along the projection arc; returns the accepted point and value.
    fn search(&self, c: &[f64], phi: f64, grad: &[f64], d: &[f64], other: &[f64], t0: f64) -> Option<(Vec<f64>, f64, f64)> {
        let mut t = t0;
        while t >= MIN_STEP {
            let x = self.trial(c, d, t);
            let lin: f64 = grad.iter().zip(x.iter().zip(c)).map(|(g, (a, b))| g * (a - b)).sum();
            if lin < 0.0 {
                let val = self.objective(&x, other, None);
                if val <= phi + ARMIJO * lin {
                    return Some((x, val, t));
                }
            }
            t *= self.shrink;
        }
        None
    }

    /// Minimizes over this species in place. `Err` carries the stationarity at a stall.
    fn minimize(&self, c: &mut Vec<f64>, other: &[f64], budget: &mut Budget) -> std::result::Result<BlockOutcome, f64> {
        let n = self.grid.n_cells;
        let mut grad = vec![0.0; n + 1];
        let mut phi = self.objective(c, other, Some(&mut grad));
        let phi0 = phi;
        let mut t_next = 1.0;
        loop {
            let Some(d) = self.direction(c, &grad, other) else {
                return Err(f64::INFINITY);
            };
            let full = self.trial(c, &d, 1.0);
            let pred: f64 = -grad.iter().zip(full.iter().zip(c.iter())).map(|(g, (a, b))| g * (a - b)).sum::<f64>();
            if pred <= self.tol || budget.exhausted() {
                return Ok(BlockOutcome { decrease: phi0 - phi, stationarity: pred.max(0.0) });
            }
            budget.used += 1;
            let accepted = match self.search(c, phi, &grad, &d, other, t_next) {
                Some(a) => Some(a),
                None => {
                    let sg = self.scaled_gradient(c, &grad, other);
                    self.search(c, phi, &grad, &sg, other, 1.0)
                }
            };
            match accepted {
                Some((x, _, t)) => {
                    *c = x;
                    t_next = (t * self.grow).min(1.0);
                    phi = self.objective(c, other, Some(&mut grad));
                }
                None if pred <= 1e-13 * (1.0 + phi.abs()) => {
                    return Ok(BlockOutcome { decrease: phi0 - phi, stationarity: pred });
                }
                None => return Err(pred),
            }
        }
    }
}
