//! Uniform 1-D grid and piecewise-constant probability densities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mass tolerance for the unit-mass invariant.
pub const MASS_TOL: f64 = 1e-12;

/// Uniform mesh of `n_cells` cells on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::InvalidGrid(format!("need x_min < x_max, got [{x_min}, {x_max}]")));
        }
        if n_cells < 8 {
            return Err(Error::InvalidGrid(format!("need at least 8 cells, got {n_cells}")));
        }
        Ok(Self { x_min, x_max, n_cells })
    }

    /// Cell width.
    pub fn h(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    /// Center of cell `j`.
    pub fn center(&self, j: usize) -> f64 {
        self.x_min + (j as f64 + 0.5) * self.h()
    }

    /// Left boundary of cell `j` (`j = n_cells` gives `x_max`).
    pub fn boundary(&self, j: usize) -> f64 {
        if j == self.n_cells {
            self.x_max
        } else {
            self.x_min + j as f64 * self.h()
        }
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|j| self.center(j)).collect()
    }

    /// Index of the cell containing `x`, clamped to the grid.
    pub fn cell_of(&self, x: f64) -> usize {
        let k = ((x - self.x_min) / self.h()).floor();
        if k < 0.0 {
            0
        } else {
            (k as usize).min(self.n_cells - 1)
        }
    }

    /// Samples `f` at the cell centers.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n_cells).map(|j| f(self.center(j))).collect()
    }
}

/// Nonnegative cell-average density with unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Density {
    /// Wraps `values` after checking nonnegativity and unit mass.
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        check_raw(&grid, &values)?;
        let mass = grid.h() * values.iter().sum::<f64>();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidArgument(format!("mass {mass} differs from 1")));
        }
        Ok(Self { grid, values })
    }

    /// Builds a density from cumulative masses at the `n_cells + 1` cell boundaries.
    ///
    /// `cdf` must be nondecreasing with `cdf[0] = 0` and `cdf[n] = 1`.
    pub fn from_cdf(grid: Grid1D, cdf: &[f64]) -> Result<Self> {
        if cdf.len() != grid.n_cells + 1 {
            return Err(Error::LengthMismatch { expected: grid.n_cells + 1, got: cdf.len() });
        }
        let h = grid.h();
        let values = cdf.windows(2).map(|w| ((w[1] - w[0]) / h).max(0.0)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mass(&self) -> f64 {
        self.grid.h() * self.values.iter().sum::<f64>()
    }

    /// Cumulative mass at the cell boundaries, length `n_cells + 1`.
    ///
    /// Partial sums are divided by the total, so the entries are exactly 0
    /// before the support and exactly 1 after it.
    pub fn cdf(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.values.len() + 1);
        let mut acc = 0.0;
        c.push(0.0);
        for &v in &self.values {
            acc += v;
            c.push(acc);
        }
        c.iter_mut().for_each(|v| *v = (*v / acc).min(1.0));
        c
    }

    /// `h Σ ρ_j^p`, the discrete `‖ρ‖_p^p`.
    pub fn lp_pow(&self, p: f64) -> f64 {
        self.grid.h() * self.values.iter().map(|&v| if v > 0.0 { v.powf(p) } else { 0.0 }).sum::<f64>()
    }

    /// `h Σ f(x_j) ρ_j`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let g = &self.grid;
        g.h() * self.values.iter().enumerate().map(|(j, &v)| f(g.center(j)) * v).sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.integrate(|x| x)
    }

    /// Mass carried by the `k` outermost cells on each side.
    pub fn margin_mass(&self, k: usize) -> f64 {
        let n = self.values.len();
        let k = k.min(n / 2);
        let h = self.grid.h();
        h * (self.values[..k].iter().sum::<f64>() + self.values[n - k..].iter().sum::<f64>())
    }

    /// Indices of the first and last positive cells.
    pub fn support(&self) -> Option<(usize, usize)> {
        let lo = self.values.iter().position(|&v| v > 0.0)?;
        let hi = self.values.iter().rposition(|&v| v > 0.0)?;
        Some((lo, hi))
    }
}

/// Two densities on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesPair {
    pub rho1: Density,
    pub rho2: Density,
}

impl SpeciesPair {
    pub fn new(rho1: Density, rho2: Density) -> Result<Self> {
        if rho1.grid() != rho2.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { rho1, rho2 })
    }

    pub fn grid(&self) -> &Grid1D {
        self.rho1.grid()
    }

    pub fn species(&self, i: usize) -> &Density {
        if i == 1 {
            &self.rho1
        } else {
            &self.rho2
        }
    }
}

fn check_raw(grid: &Grid1D, raw: &[f64]) -> Result<()> {
    if raw.len() != grid.n_cells {
        return Err(Error::LengthMismatch { expected: grid.n_cells, got: raw.len() });
    }
    for (index, &value) in raw.iter().enumerate() {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::NegativeEntry { index, value });
        }
    }
    Ok(())
}

/// Rescales a nonnegative vector to unit mass.
pub fn normalize(raw: &[f64], grid: &Grid1D) -> Result<Density> {
    check_raw(grid, raw)?;
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let scale = 1.0 / (grid.h() * total);
    let values: Vec<f64> = raw.iter().map(|&v| v * scale).collect();
    Ok(Density { grid: *grid, values })
}

/// `h Σ |a_j − b_j|`.
pub fn l1_distance(a: &Density, b: &Density) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(a.grid().h() * a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Second moment `h Σ x_j² ρ_j`.
pub fn second_moment(rho: &Density) -> f64 {
    rho.integrate(|x| x * x)
}

/// Entropy `h Σ ρ log ρ` summed over both species, with `0 log 0 = 0`.
pub fn entropy(pair: &SpeciesPair) -> f64 {
    density_entropy(&pair.rho1) + density_entropy(&pair.rho2)
}

pub fn density_entropy(rho: &Density) -> f64 {
    let h = rho.grid().h();
    h * rho.values().iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

/// Push-forward of `rho` through a nondecreasing map sampled at cell centers.
///
/// The map is extended piecewise linearly between centers; each half cell is
/// spread uniformly over its image interval.
pub fn pushforward(rho: &Density, map: &[f64]) -> Result<Density> {
    let g = *rho.grid();
    let n = g.n_cells;
    if map.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: map.len() });
    }
    for (j, &t) in map.iter().enumerate() {
        if !(t >= g.x_min && t <= g.x_max) {
            return Err(Error::ImageEscapesGrid(j));
        }
        if j > 0 && t < map[j - 1] {
            return Err(Error::NonMonotoneMap(j));
        }
    }
    let edge = |j: usize| -> f64 {
        if j == 0 {
            (map[0] - 0.5 * (map[1] - map[0])).clamp(g.x_min, map[0])
        } else if j == n {
            (map[n - 1] + 0.5 * (map[n - 1] - map[n - 2])).clamp(map[n - 1], g.x_max)
        } else {
            0.5 * (map[j - 1] + map[j])
        }
    };
    let h = g.h();
    let mut out = vec![0.0; n];
    for (j, &v) in rho.values().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let half = 0.5 * h * v;
        deposit(&g, &mut out, edge(j), map[j], half);
        deposit(&g, &mut out, map[j], edge(j + 1), half);
    }
    for o in &mut out {
        *o /= h;
    }
    normalize(&out, &g)
}

/// Spreads `mass` uniformly over `[y0, y1]` into the cells of `out`.
fn deposit(g: &Grid1D, out: &mut [f64], y0: f64, y1: f64, mass: f64) {
    let len = y1 - y0;
    if len <= 1e-14 * g.h() {
        out[g.cell_of(0.5 * (y0 + y1))] += mass;
        return;
    }
    let (k0, k1) = (g.cell_of(y0), g.cell_of(y1));
    for k in k0..=k1 {
        let lo = y0.max(g.boundary(k));
        let hi = y1.min(g.boundary(k + 1));
        if hi > lo {
            out[k] += mass * (hi - lo) / len;
        }
    }
}
