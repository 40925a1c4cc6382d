//! Built-in diffusion laws and kernels.

use super::{DiffusionLaw, DiffusionSpec, KernelForm, ModelSpec, Monomial, PotentialKind, PotentialSpec};

/// Smallest eigenvalue of a symmetric 2×2 matrix.
fn min_eig(a: f64, b: f64, d: f64) -> f64 {
    let tr = 0.5 * (a + d);
    let det = a * d - b * b;
    tr - (tr * tr - det).max(0.0).sqrt()
}

/// `A = a ρ₁^{m₁} + b ρ₂^{m₂}`.
pub fn decoupled_diffusion(a: f64, b: f64, m1: f64, m2: f64) -> DiffusionSpec {
    DiffusionSpec {
        law: DiffusionLaw::PowerSum { a, b, c: 0.0, k: 2.0 },
        m1,
        m2,
        alpha1: m1,
        alpha2: m2,
        c1: Some((a * m1 * (m1 - 1.0)).min(b * m2 * (m2 - 1.0))),
        r1_max: None,
    }
}

/// `A = a ρ₁^{m₁} + b (ρ₁^{m₁/2} + ρ₂^{m₂/2})²`, a positive definite quadratic form in `η`.
pub fn example1_diffusion(a: f64, b: f64, m1: f64, m2: f64) -> DiffusionSpec {
    // For m = 2 the Hessian in ρ is constant and equals the one in η.
    let c1 = (m1 == 2.0 && m2 == 2.0).then(|| min_eig(2.0 * (a + b), 2.0 * b, 2.0 * b));
    DiffusionSpec {
        law: DiffusionLaw::EtaPolynomial {
            terms: vec![
                Monomial { coef: a + b, p: 2.0, q: 0.0 },
                Monomial { coef: 2.0 * b, p: 1.0, q: 1.0 },
                Monomial { coef: b, p: 0.0, q: 2.0 },
            ],
        },
        m1,
        m2,
        alpha1: m1,
        alpha2: m2,
        c1,
        r1_max: None,
    }
}

/// `A = a ρ₁^{m₁} + b ρ₂^{m₂} + c (ρ₁+ρ₂)³`.
///
/// The cubic grows like `ρ³`, below the cap `ρ^{3m}`; the growth exponents
/// are set to `3m/2` so that the mixed terms of the Hessian are admissible.
pub fn example2_diffusion(a: f64, b: f64, c: f64, m1: f64, m2: f64) -> DiffusionSpec {
    DiffusionSpec {
        law: DiffusionLaw::PowerSum { a, b, c, k: 3.0 },
        m1,
        m2,
        alpha1: 1.5 * m1,
        alpha2: 1.5 * m2,
        c1: Some((a * m1 * (m1 - 1.0)).min(b * m2 * (m2 - 1.0))),
        r1_max: None,
    }
}

/// `A = a ρ₁^m + b (ρ₁+ρ₂)²` with `1 < m < 2`, valid on `0 ≤ ρ₁ ≤ r1_max`.
pub fn example3_diffusion(a: f64, b: f64, m: f64, r1_max: f64) -> DiffusionSpec {
    DiffusionSpec {
        law: DiffusionLaw::PowerSum { a, b: 0.0, c: b, k: 2.0 },
        m1: m,
        m2: 2.0,
        alpha1: m,
        alpha2: 2.0,
        c1: None,
        r1_max: Some(r1_max),
    }
}

/// `A = (ρ₁+ρ₂)²`, which violates uniform convexity.
pub fn counterexample_diffusion() -> DiffusionSpec {
    DiffusionSpec {
        law: DiffusionLaw::PowerSum { a: 0.0, b: 0.0, c: 1.0, k: 2.0 },
        m1: 2.0,
        m2: 2.0,
        alpha1: 2.0,
        alpha2: 2.0,
        c1: None,
        r1_max: None,
    }
}

pub fn zero_diffusion() -> DiffusionSpec {
    DiffusionSpec {
        law: DiffusionLaw::EtaPolynomial { terms: Vec::new() },
        m1: 2.0,
        m2: 2.0,
        alpha1: 2.0,
        alpha2: 2.0,
        c1: None,
        r1_max: None,
    }
}

pub fn quadratic(kind: PotentialKind, coef: f64) -> PotentialSpec {
    PotentialSpec::new(kind, KernelForm::Quadratic { coef })
}

pub fn gaussian(kind: PotentialKind, weight: f64, width: f64) -> PotentialSpec {
    PotentialSpec::new(kind, KernelForm::Gaussian { weight, width })
}

/// Model with the given diffusion and no interactions.
pub fn diffusion_only(diffusion: DiffusionSpec) -> ModelSpec {
    ModelSpec {
        diffusion,
        h1: PotentialSpec::zero(PotentialKind::SelfH1),
        h2: PotentialSpec::zero(PotentialKind::SelfH2),
        k1: PotentialSpec::zero(PotentialKind::CrossK1),
        k2: PotentialSpec::zero(PotentialKind::CrossK2),
    }
}

pub fn zero_model() -> ModelSpec {
    diffusion_only(zero_diffusion())
}

/// Each species solves `∂ₜρ = ∂ₓₓ ρ²`.
pub fn decoupled_pme() -> ModelSpec {
    diffusion_only(decoupled_diffusion(1.0, 1.0, 2.0, 2.0))
}

/// Example-1 diffusion, weak quadratic confinement, and non-symmetric
/// Gaussian cross kernels: species 1 is attracted to species 2, which is
/// repelled by species 1.
pub fn coupled_gaussian() -> ModelSpec {
    ModelSpec {
        diffusion: example1_diffusion(1.0, 0.5, 2.0, 2.0),
        h1: quadratic(PotentialKind::SelfH1, 0.5),
        h2: quadratic(PotentialKind::SelfH2, 0.5),
        k1: gaussian(PotentialKind::CrossK1, -1.0, 1.0),
        k2: gaussian(PotentialKind::CrossK2, 0.5, 0.7),
    }
}

/// Decoupled diffusion with the same attractive Gaussian for both species.
pub fn symmetric_attraction() -> ModelSpec {
    ModelSpec {
        diffusion: decoupled_diffusion(0.5, 0.5, 2.0, 2.0),
        h1: PotentialSpec::zero(PotentialKind::SelfH1),
        h2: PotentialSpec::zero(PotentialKind::SelfH2),
        k1: gaussian(PotentialKind::CrossK1, -1.0, 1.0),
        k2: gaussian(PotentialKind::CrossK2, -1.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_eig_of_example1() {
        // [[4, 2], [2, 2]] has eigenvalues 3 ± √5.
        assert!((min_eig(4.0, 2.0, 2.0) - (3.0 - 5f64.sqrt())).abs() < 1e-14);
    }
}
