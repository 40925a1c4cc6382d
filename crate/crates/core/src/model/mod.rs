//! Diffusion function, interaction kernels, energies and assumption audits.

pub mod audit;
mod diffusion;
mod energy;
mod potential;
pub mod presets;

pub use diffusion::{DiffusionLaw, DiffusionSpec, Jet, Monomial, RHO_FLOOR};
pub use energy::{
    cross_energy, diffusion_energy, relative_energy, self_energy, EnergySplit, KernelTable, ModelTables,
};
pub use potential::{KernelConstants, KernelForm, PotentialKind, PotentialSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Full data of the two-species system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub diffusion: DiffusionSpec,
    pub h1: PotentialSpec,
    pub h2: PotentialSpec,
    pub k1: PotentialSpec,
    pub k2: PotentialSpec,
}

impl ModelSpec {
    /// Checks that every kernel sits in its own slot.
    pub fn validate(&self) -> Result<()> {
        let slots = [
            (&self.h1, PotentialKind::SelfH1),
            (&self.h2, PotentialKind::SelfH2),
            (&self.k1, PotentialKind::CrossK1),
            (&self.k2, PotentialKind::CrossK2),
        ];
        for (p, kind) in slots {
            if p.kind != kind {
                return Err(Error::KindMismatch { expected: kind.name(), got: p.kind.name() });
            }
        }
        Ok(())
    }

    /// `Lip(K₁)² + Lip(K₂)²`, the drift constant of the dissipation estimate.
    pub fn cross_lip_sq(&self) -> f64 {
        let l1 = self.k1.constants.lip_value;
        let l2 = self.k2.constants.lip_value;
        l1 * l1 + l2 * l2
    }

    pub fn self_kernel(&self, i: usize) -> &PotentialSpec {
        if i == 1 {
            &self.h1
        } else {
            &self.h2
        }
    }

    pub fn cross_kernel(&self, i: usize) -> &PotentialSpec {
        if i == 1 {
            &self.k1
        } else {
            &self.k2
        }
    }

    /// Upper bound on `d/ds` of all interaction energies along the heat flow
    /// of unit-mass densities: the sum of the four Laplacian bounds.
    pub fn laplacian_bound_total(&self) -> f64 {
        [&self.h1, &self.h2, &self.k1, &self.k2]
            .iter()
            .filter(|p| !p.is_zero())
            .map(|p| p.constants.laplacian_bound)
            .sum()
    }
}
