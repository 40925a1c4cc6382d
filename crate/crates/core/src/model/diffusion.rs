//! The diffusion function `A(ρ₁,ρ₂) = B(ρ₁^{m₁/2}, ρ₂^{m₂/2})` and its derivatives.

use serde::{Deserialize, Serialize};

/// Floor applied to densities before raising them to negative powers.
pub const RHO_FLOOR: f64 = 1e-12;

/// One term `coef · η₁^p · η₂^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub p: f64,
    pub q: f64,
}

/// Library of functional forms for the diffusion function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum DiffusionLaw {
    /// `B(η₁,η₂) = Σ coef · η₁^p η₂^q`.
    EtaPolynomial { terms: Vec<Monomial> },
    /// `A(ρ₁,ρ₂) = a ρ₁^{m₁} + b ρ₂^{m₂} + c (ρ₁+ρ₂)^k`.
    PowerSum { a: f64, b: f64, c: f64, k: f64 },
}

/// Diffusion data: the law, the exponents and the declared constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSpec {
    pub law: DiffusionLaw,
    pub m1: f64,
    pub m2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Declared coercivity constant; `None` defers to the audit.
    pub c1: Option<f64>,
    /// Upper end of the admissible range of `ρ₁`, if the law needs one.
    pub r1_max: Option<f64>,
}

/// Value, gradient and Hessian `[f, f₁, f₂, f₁₁, f₁₂, f₂₂]`.
pub type Jet = [f64; 6];

fn pw(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if x <= 0.0 {
        if e > 0.0 {
            0.0
        } else {
            RHO_FLOOR.powf(e)
        }
    } else {
        x.powf(e)
    }
}

/// `coef · x^e` with `0 · ∞ = 0`.
fn cpw(coef: f64, x: f64, e: f64) -> f64 {
    if coef == 0.0 {
        0.0
    } else {
        coef * pw(x, e)
    }
}

/// Jet of `coef · x^P · y^Q`.
fn mono_jet(coef: f64, pe: f64, qe: f64, x: f64, y: f64) -> Jet {
    let (xp, yq) = (pw(x, pe), pw(y, qe));
    let (dx, dy) = (cpw(pe, x, pe - 1.0), cpw(qe, y, qe - 1.0));
    let (dxx, dyy) = (cpw(pe * (pe - 1.0), x, pe - 2.0), cpw(qe * (qe - 1.0), y, qe - 2.0));
    [
        coef * xp * yq,
        coef * dx * yq,
        coef * xp * dy,
        coef * dxx * yq,
        coef * dx * dy,
        coef * xp * dyy,
    ]
}

fn add(acc: &mut Jet, j: Jet) {
    for (a, b) in acc.iter_mut().zip(j) {
        *a += b;
    }
}

impl DiffusionSpec {
    pub fn is_zero(&self) -> bool {
        match &self.law {
            DiffusionLaw::EtaPolynomial { terms } => terms.iter().all(|t| t.coef == 0.0),
            DiffusionLaw::PowerSum { a, b, c, .. } => *a == 0.0 && *b == 0.0 && *c == 0.0,
        }
    }

    /// `A` and its first and second partial derivatives in `(ρ₁, ρ₂)`.
    pub fn a_jet(&self, r1: f64, r2: f64) -> Jet {
        let mut out = [0.0; 6];
        match &self.law {
            DiffusionLaw::EtaPolynomial { terms } => {
                for t in terms {
                    add(&mut out, mono_jet(t.coef, t.p * self.m1 / 2.0, t.q * self.m2 / 2.0, r1, r2));
                }
            }
            DiffusionLaw::PowerSum { a, b, c, k } => {
                add(&mut out, mono_jet(*a, self.m1, 0.0, r1, r2));
                add(&mut out, mono_jet(*b, 0.0, self.m2, r1, r2));
                if *c != 0.0 {
                    let s = r1 + r2;
                    let v = c * pw(s, *k);
                    let d = cpw(c * k, s, k - 1.0);
                    let dd = cpw(c * k * (k - 1.0), s, k - 2.0);
                    add(&mut out, [v, d, d, dd, dd, dd]);
                }
            }
        }
        out
    }

    pub fn a(&self, r1: f64, r2: f64) -> f64 {
        self.a_jet(r1, r2)[0]
    }

    /// `(A_{ρ₁}, A_{ρ₂})`.
    pub fn a_grad(&self, r1: f64, r2: f64) -> [f64; 2] {
        let j = self.a_jet(r1, r2);
        [j[1], j[2]]
    }

    /// `B` and its derivatives in `(η₁, η₂)`.
    pub fn b_jet(&self, e1: f64, e2: f64) -> Jet {
        match &self.law {
            DiffusionLaw::EtaPolynomial { terms } => {
                let mut out = [0.0; 6];
                for t in terms {
                    add(&mut out, mono_jet(t.coef, t.p, t.q, e1, e2));
                }
                out
            }
            DiffusionLaw::PowerSum { .. } => {
                // Chain rule through ρᵢ = ηᵢ^{2/mᵢ}.
                let (g1, g2) = (2.0 / self.m1, 2.0 / self.m2);
                let (r1, r2) = (pw(e1, g1), pw(e2, g2));
                let (d1, d2) = (g1 * pw(e1, g1 - 1.0), g2 * pw(e2, g2 - 1.0));
                let (dd1, dd2) = (cpw(g1 * (g1 - 1.0), e1, g1 - 2.0), cpw(g2 * (g2 - 1.0), e2, g2 - 2.0));
                let a = self.a_jet(r1, r2);
                [
                    a[0],
                    a[1] * d1,
                    a[2] * d2,
                    a[3] * d1 * d1 + if a[1] == 0.0 { 0.0 } else { a[1] * dd1 },
                    a[4] * d1 * d2,
                    a[5] * d2 * d2 + if a[2] == 0.0 { 0.0 } else { a[2] * dd2 },
                ]
            }
        }
    }

    pub fn eta1(&self, r1: f64) -> f64 {
        pw(r1, self.m1 / 2.0)
    }

    pub fn eta2(&self, r2: f64) -> f64 {
        pw(r2, self.m2 / 2.0)
    }

    /// `A_{ρᵢ}` for species `i ∈ {1, 2}`.
    pub fn a_rho(&self, i: usize, r1: f64, r2: f64) -> f64 {
        self.a_jet(r1, r2)[i]
    }

    /// Diagonal second derivative `A_{ρᵢρᵢ}`.
    pub fn a_rho_rho(&self, i: usize, r1: f64, r2: f64) -> f64 {
        let j = self.a_jet(r1, r2);
        if i == 1 {
            j[3]
        } else {
            j[5]
        }
    }

    pub fn m(&self, i: usize) -> f64 {
        if i == 1 {
            self.m1
        } else {
            self.m2
        }
    }
}
