//! Energy functionals on grid densities.

use serde::{Deserialize, Serialize};

use super::{DiffusionSpec, ModelSpec, PotentialSpec};
use crate::error::{Error, Result};
use crate::grid::{Density, Grid1D, SpeciesPair};

/// Kernel sampled at all grid offsets `d·h`, `|d| < n`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    n: usize,
    vals: Vec<f64>,
}

impl KernelTable {
    pub fn new(grid: &Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let n = grid.n_cells;
        let h = grid.h();
        let vals = (0..2 * n - 1).map(|i| f((i as f64 - (n as f64 - 1.0)) * h)).collect();
        Self { n, vals }
    }

    /// `out_j = Σ_k f((j − k) h) ρ_k`.
    pub fn apply(&self, rho: &[f64], out: &mut [f64]) {
        let n = self.n;
        for (j, o) in out.iter_mut().enumerate().take(n) {
            let window = &self.vals[j..j + n];
            *o = window.iter().rev().zip(rho).map(|(k, r)| k * r).sum();
        }
    }

    pub fn convolve(&self, rho: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply(rho, &mut out);
        out
    }
}

/// The five terms of the relative energy `ℱ[μ|ν]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergySplit {
    pub diffusion: f64,
    pub self1: f64,
    pub self2: f64,
    pub cross1: f64,
    pub cross2: f64,
}

impl EnergySplit {
    /// `𝓕̃`: diffusion plus self-interactions.
    pub fn f_tilde(&self) -> f64 {
        self.diffusion + self.self1 + self.self2
    }

    /// `𝒦`: cross-interactions against the frozen state.
    pub fn cross(&self) -> f64 {
        self.cross1 + self.cross2
    }

    pub fn total(&self) -> f64 {
        self.f_tilde() + self.cross()
    }
}

/// `h Σ_j A(ρ₁ⱼ, ρ₂ⱼ)`.
pub fn diffusion_energy(pair: &SpeciesPair, spec: &DiffusionSpec) -> f64 {
    let h = pair.grid().h();
    h * pair
        .rho1
        .values()
        .iter()
        .zip(pair.rho2.values())
        .map(|(&a, &b)| spec.a(a, b))
        .sum::<f64>()
}

/// `½ h² Σ_j Σ_k H(x_j − x_k) ρ_j ρ_k`.
pub fn self_energy(rho: &Density, pot: &PotentialSpec) -> Result<f64> {
    if !pot.kind.is_self() {
        return Err(Error::KindMismatch { expected: "self", got: pot.kind.name() });
    }
    if pot.is_zero() {
        return Ok(0.0);
    }
    let g = rho.grid();
    let conv = KernelTable::new(g, |x| pot.value(x)).convolve(rho.values());
    let h = g.h();
    Ok(0.5 * h * h * conv.iter().zip(rho.values()).map(|(c, r)| c * r).sum::<f64>())
}

/// `h² Σ_j Σ_k K(x_j − x_k) ν_k μ_j` with `ν` frozen.
pub fn cross_energy(mu: &Density, nu_frozen: &Density, pot: &PotentialSpec) -> Result<f64> {
    if pot.kind.is_self() {
        return Err(Error::KindMismatch { expected: "cross", got: pot.kind.name() });
    }
    if mu.grid() != nu_frozen.grid() {
        return Err(Error::GridMismatch);
    }
    if pot.is_zero() {
        return Ok(0.0);
    }
    let g = mu.grid();
    let conv = KernelTable::new(g, |x| pot.value(x)).convolve(nu_frozen.values());
    let h = g.h();
    Ok(h * h * conv.iter().zip(mu.values()).map(|(c, r)| c * r).sum::<f64>())
}

/// Relative energy `ℱ[candidate | frozen]` split into its five terms.
pub fn relative_energy(candidate: &SpeciesPair, frozen: &SpeciesPair, model: &ModelSpec) -> Result<EnergySplit> {
    if candidate.grid() != frozen.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(EnergySplit {
        diffusion: diffusion_energy(candidate, &model.diffusion),
        self1: self_energy(&candidate.rho1, &model.h1)?,
        self2: self_energy(&candidate.rho2, &model.h2)?,
        cross1: cross_energy(&candidate.rho1, &frozen.rho2, &model.k1)?,
        cross2: cross_energy(&candidate.rho2, &frozen.rho1, &model.k2)?,
    })
}

/// Kernel tables of a model on a fixed grid, `None` for zero kernels.
#[derive(Debug, Clone)]
pub struct ModelTables {
    pub h1: Option<KernelTable>,
    pub h2: Option<KernelTable>,
    pub k1: Option<KernelTable>,
    pub k2: Option<KernelTable>,
}

impl ModelTables {
    pub fn new(grid: &Grid1D, model: &ModelSpec) -> Self {
        let table = |p: &PotentialSpec| (!p.is_zero()).then(|| KernelTable::new(grid, |x| p.value(x)));
        Self { h1: table(&model.h1), h2: table(&model.h2), k1: table(&model.k1), k2: table(&model.k2) }
    }

    pub fn self_table(&self, i: usize) -> Option<&KernelTable> {
        if i == 1 {
            self.h1.as_ref()
        } else {
            self.h2.as_ref()
        }
    }

    pub fn cross_table(&self, i: usize) -> Option<&KernelTable> {
        if i == 1 {
            self.k1.as_ref()
        } else {
            self.k2.as_ref()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::normalize;
    use crate::model::{presets, KernelForm, PotentialKind};

    fn uniform(g: &Grid1D, lo: f64, hi: f64) -> Density {
        normalize(&g.sample(|x| ((x > lo) && (x < hi)) as u8 as f64), g).unwrap()
    }

    #[test]
    fn kernel_table_matches_brute_force() {
        let g = Grid1D::new(-1.0, 1.0, 17).unwrap();
        let f = |x: f64| (x - 0.1).sin();
        let t = KernelTable::new(&g, f);
        let rho: Vec<f64> = (0..17).map(|j| (j as f64).sqrt()).collect();
        let out = t.convolve(&rho);
        for j in 0..17 {
            let direct: f64 = (0..17).map(|k| f(g.center(j) - g.center(k)) * rho[k]).sum();
            assert!((out[j] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn self_energy_examples() {
        let g = Grid1D::new(-0.5, 1.5, 400).unwrap();
        let rho = uniform(&g, 0.0, 1.0);
        let zero = PotentialSpec::zero(PotentialKind::SelfH1);
        assert_eq!(self_energy(&rho, &zero).unwrap(), 0.0);
        let quad = PotentialSpec::new(PotentialKind::SelfH1, KernelForm::Quadratic { coef: 1.0 });
        let e = self_energy(&rho, &quad).unwrap();
        assert!((e - 1.0 / 24.0).abs() < 1e-3);
        let shifted = uniform(&g, 0.25, 1.25);
        assert!((self_energy(&shifted, &quad).unwrap() - e).abs() < 1e-8);
        let k = PotentialSpec::zero(PotentialKind::CrossK1);
        assert!(matches!(self_energy(&rho, &k), Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn cross_energy_examples() {
        let g = Grid1D::new(-1.0, 1.0, 64).unwrap();
        let mut raw = vec![0.0; 64];
        raw[20] = 1.0;
        let point = normalize(&raw, &g).unwrap();
        let k = PotentialSpec::new(PotentialKind::CrossK1, KernelForm::Gaussian { weight: -1.0, width: 1.0 });
        assert!((cross_energy(&point, &point, &k).unwrap() + 1.0).abs() < 1e-12);
        let zero = PotentialSpec::zero(PotentialKind::CrossK2);
        assert_eq!(cross_energy(&point, &point, &zero).unwrap(), 0.0);
    }

    #[test]
    fn diffusion_energy_example1() {
        let g = Grid1D::new(0.0, 1.0, 100).unwrap();
        let one = uniform(&g, 0.0, 1.0);
        let pair = SpeciesPair::new(one.clone(), one).unwrap();
        let spec = presets::example1_diffusion(1.0, 1.0, 2.0, 2.0);
        assert!((diffusion_energy(&pair, &spec) - 5.0).abs() < 1e-3);
    }
}
