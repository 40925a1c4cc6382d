//! Closed-form Barenblatt solutions of `∂ₜρ = D ∂ₓₓ ρᵐ` with unit mass.

use statrs::function::beta::beta;

use crate::error::{Error, Result};
use crate::grid::{normalize, Density, Grid1D};

/// `ρ(x,t) = t^{−α} (C − k x² t^{−2α})₊^{1/(m−1)}` in the time variable `D t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barenblatt {
    pub m: f64,
    pub diffusivity: f64,
    alpha: f64,
    k: f64,
    c: f64,
}

impl Barenblatt {
    pub fn new(m: f64, diffusivity: f64) -> Result<Self> {
        if !(m > 1.0) || !(diffusivity > 0.0) {
            return Err(Error::InvalidArgument(format!("Barenblatt needs m > 1 and D > 0, got m = {m}, D = {diffusivity}")));
        }
        let alpha = 1.0 / (m + 1.0);
        let k = alpha * (m - 1.0) / (2.0 * m);
        let p = 1.0 / (m - 1.0);
        let c = (k.sqrt() / beta(0.5, p + 1.0)).powf(1.0 / (p + 0.5));
        Ok(Self { m, diffusivity, alpha, k, c })
    }

    /// Profile of the species equation generated by `A = a ρᵐ`, where `D = a(m − 1)`.
    pub fn for_power_law(a: f64, m: f64) -> Result<Self> {
        Self::new(m, a * (m - 1.0))
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    pub fn density(&self, x: f64, t: f64) -> f64 {
        let s = self.diffusivity * t;
        let base = self.c - self.k * x * x * s.powf(-2.0 * self.alpha);
        if base <= 0.0 {
            0.0
        } else {
            s.powf(-self.alpha) * base.powf(1.0 / (self.m - 1.0))
        }
    }

    pub fn support_radius(&self, t: f64) -> f64 {
        (self.c / self.k).sqrt() * (self.diffusivity * t).powf(self.alpha)
    }

    /// Cell averages at time `t`, renormalized to unit mass on the grid.
    pub fn cell_averages(&self, grid: &Grid1D, t: f64) -> Result<Density> {
        let r = self.support_radius(t);
        let h = grid.h();
        let raw: Vec<f64> = (0..grid.n_cells)
            .map(|j| {
                let (a, b) = (grid.boundary(j), grid.boundary(j + 1));
                let (lo, hi) = (a.max(-r), b.min(r));
                if hi <= lo {
                    0.0
                } else {
                    gauss_legendre(|x| self.density(x, t), lo, hi, 8) / h
                }
            })
            .collect();
        normalize(&raw, grid)
    }
}

/// Composite 4-point Gauss-Legendre rule on `pieces` equal subintervals.
fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize) -> f64 {
    const X: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const W: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let len = (b - a) / pieces as f64;
    (0..pieces)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * len;
            0.5 * len * X.iter().zip(&W).map(|(x, w)| w * f(mid + 0.5 * len * x)).sum::<f64>()
        })
        .sum()
}
