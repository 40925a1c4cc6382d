//! Self-interaction kernels `H₁, H₂` and cross-interaction kernels `K₁, K₂`.

use serde::{Deserialize, Serialize};

/// Role a kernel plays in the energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    SelfH1,
    SelfH2,
    CrossK1,
    CrossK2,
}

impl PotentialKind {
    pub fn is_self(self) -> bool {
        matches!(self, Self::SelfH1 | Self::SelfH2)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::SelfH1 => "self_H1",
            Self::SelfH2 => "self_H2",
            Self::CrossK1 => "cross_K1",
            Self::CrossK2 => "cross_K2",
        }
    }
}

/// Library of kernel shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum KernelForm {
    Zero,
    /// `coef · x² / 2`.
    Quadratic { coef: f64 },
    /// `weight · exp(−x²/width²)`.
    Gaussian { weight: f64, width: f64 },
    /// `coef · |x|`.
    Abs { coef: f64 },
}

/// Constants a kernel declares about itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    /// Lipschitz constant of the kernel (infinite if not globally Lipschitz).
    pub lip_value: f64,
    /// Lipschitz constant of the gradient.
    pub lip_grad: f64,
    /// Upper bound `C̄` on the Laplacian.
    pub laplacian_bound: f64,
    /// Lower growth constant: `H − H(0) ≥ −growth_c1 (1 + |x|^growth_alpha)`.
    pub growth_c1: f64,
    /// Upper growth constant: `H − H(0) ≤ growth_c2 (1 + |x|²)`.
    pub growth_c2: f64,
    pub growth_alpha: f64,
    /// Constant in `|∇H(x)| ≤ C (1 + |x|)`.
    pub h1_const: f64,
}

impl KernelForm {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Quadratic { coef } => 0.5 * coef * x * x,
            Self::Gaussian { weight, width } => weight * (-(x * x) / (width * width)).exp(),
            Self::Abs { coef } => coef * x.abs(),
        }
    }

    pub fn grad(&self, x: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Quadratic { coef } => coef * x,
            Self::Gaussian { weight, width } => {
                let w2 = width * width;
                -2.0 * weight * x / w2 * (-(x * x) / w2).exp()
            }
            Self::Abs { coef } => {
                if x == 0.0 {
                    0.0
                } else {
                    coef * x.signum()
                }
            }
        }
    }

    /// Second derivative, away from kinks.
    pub fn laplacian(&self, x: f64) -> f64 {
        match *self {
            Self::Zero | Self::Abs { .. } => 0.0,
            Self::Quadratic { coef } => coef,
            Self::Gaussian { weight, width } => {
                let w2 = width * width;
                weight * (4.0 * x * x / (w2 * w2) - 2.0 / w2) * (-(x * x) / w2).exp()
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Self::Zero => true,
            Self::Quadratic { coef } | Self::Abs { coef } => coef == 0.0,
            Self::Gaussian { weight, .. } => weight == 0.0,
        }
    }

    /// Closed-form constants for the shape.
    pub fn analytic_constants(&self) -> KernelConstants {
        let zero = KernelConstants {
            lip_value: 0.0,
            lip_grad: 0.0,
            laplacian_bound: 0.0,
            growth_c1: 1.0,
            growth_c2: 1.0,
            growth_alpha: 1.0,
            h1_const: 0.0,
        };
        match *self {
            Self::Zero => zero,
            Self::Quadratic { coef } => KernelConstants {
                lip_value: if coef == 0.0 { 0.0 } else { f64::INFINITY },
                lip_grad: coef.abs(),
                laplacian_bound: coef.max(0.0),
                growth_c1: (-0.5 * coef).max(0.0) + 1.0,
                growth_c2: (0.5 * coef).max(0.0) + 1.0,
                growth_alpha: if coef < 0.0 { 2.0 } else { 1.0 },
                h1_const: coef.abs(),
            },
            Self::Gaussian { weight, width } => {
                let w = weight.abs();
                let w2 = width * width;
                let lip = w * (2.0 / std::f64::consts::E).sqrt() / width;
                KernelConstants {
                    lip_value: lip,
                    lip_grad: 2.0 * w / w2,
                    laplacian_bound: if weight < 0.0 {
                        2.0 * w / w2
                    } else {
                        4.0 * w * (-1.5f64).exp() / w2
                    },
                    growth_c1: 2.0 * w + 1.0,
                    growth_c2: 2.0 * w + 1.0,
                    growth_alpha: 1.0,
                    h1_const: lip,
                }
            }
            // The distributional Laplacian of |x| is 2δ₀, which no finite
            // bound covers; the declared value only holds away from 0.
            Self::Abs { coef } => KernelConstants {
                lip_value: coef.abs(),
                lip_grad: if coef == 0.0 { 0.0 } else { f64::INFINITY },
                laplacian_bound: 0.0,
                growth_c1: coef.abs() + 1.0,
                growth_c2: coef.abs() + 1.0,
                growth_alpha: 1.0,
                h1_const: coef.abs(),
            },
        }
    }
}

/// A kernel together with its role and declared constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub form: KernelForm,
    pub constants: KernelConstants,
}

impl PotentialSpec {
    /// Kernel with its closed-form constants.
    pub fn new(kind: PotentialKind, form: KernelForm) -> Self {
        Self { kind, form, constants: form.analytic_constants() }
    }

    pub fn zero(kind: PotentialKind) -> Self {
        Self::new(kind, KernelForm::Zero)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.form.value(x)
    }

    pub fn grad(&self, x: f64) -> f64 {
        self.form.grad(x)
    }

    pub fn is_zero(&self) -> bool {
        self.form.is_zero()
    }

    /// Same kernel multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let form = match self.form {
            KernelForm::Zero => KernelForm::Zero,
            KernelForm::Quadratic { coef } => KernelForm::Quadratic { coef: coef * factor },
            KernelForm::Gaussian { weight, width } => KernelForm::Gaussian { weight: weight * factor, width },
            KernelForm::Abs { coef } => KernelForm::Abs { coef: coef * factor },
        };
        Self::new(self.kind, form)
    }
}
