//! Weak formulation residuals and difference quotients along perturbations
//! of the identity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid1D, SpeciesPair};
use crate::jko::{snapshot_index, Trajectory};
use crate::model::{KernelTable, ModelSpec, PotentialSpec};

use super::CheckResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// `exp(−1/(1 − r²))` with `r = (x − center)/width`.
    Bump,
    /// `r` times the bump.
    PolyBump,
}

/// Smooth test function supported on `[center − width, center + width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub center: f64,
    pub width: f64,
    pub kind: TestKind,
}

impl TestFunction {
    /// Value and first two derivatives in `x`.
    pub fn jet(&self, x: f64) -> [f64; 3] {
        let r = (x - self.center) / self.width;
        if r.abs() >= 1.0 {
            return [0.0; 3];
        }
        let q = 1.0 - r * r;
        let b = (-1.0 / q).exp();
        let g1 = -2.0 * r / (q * q);
        let g2 = -2.0 / (q * q) - 8.0 * r * r / (q * q * q);
        let (b1, b2) = (g1 * b, (g2 + g1 * g1) * b);
        let (v, d1, d2) = match self.kind {
            TestKind::Bump => (b, b1, b2),
            TestKind::PolyBump => (r * b, b + r * b1, 2.0 * b1 + r * b2),
        };
        let w = self.width;
        [v, d1 / w, d2 / (w * w)]
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x)[0]
    }

    pub fn grad(&self, x: f64) -> f64 {
        self.jet(x)[1]
    }

    pub fn laplacian(&self, x: f64) -> f64 {
        self.jet(x)[2]
    }

    /// `sup |ζ'|`, sampled finely over the support.
    pub fn lip(&self) -> f64 {
        (0..=2000)
            .map(|k| self.grad(self.center + self.width * (-1.0 + k as f64 / 1000.0)).abs())
            .fold(0.0, f64::max)
    }

    fn inside(&self, g: &Grid1D) -> bool {
        self.width > 0.0 && self.center - self.width >= g.x_min && self.center + self.width <= g.x_max
    }
}

/// Centered differences, one-sided at the two ends.
fn gradient(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|j| match (j, n) {
            (_, 1) => 0.0,
            (0, _) => (f[1] - f[0]) / h,
            (j, n) if j == n - 1 => (f[j] - f[j - 1]) / h,
            (j, _) => (f[j + 1] - f[j - 1]) / (2.0 * h),
        })
        .collect()
}

fn table(g: &Grid1D, p: &PotentialSpec) -> Option<KernelTable> {
    (!p.is_zero()).then(|| KernelTable::new(g, |x| p.grad(x)))
}

/// Right-hand side of the weak form for species `i` at the new state, with
/// the cross-interaction against the previous state of the other species.
fn weak_rhs(
    now: &SpeciesPair,
    prev: &SpeciesPair,
    model: &ModelSpec,
    i: usize,
    phi: &[[f64; 3]],
    tables: &(Option<KernelTable>, Option<KernelTable>),
) -> f64 {
    let g = now.grid();
    let h = g.h();
    let j = 3 - i;
    let (own, other) = (now.species(i).values(), now.species(j).values());
    let d = &model.diffusion;
    let pair = |k: usize| if i == 1 { (own[k], other[k]) } else { (other[k], own[k]) };
    let mut a_other = Vec::with_capacity(own.len());
    let mut rhs = 0.0;
    for k in 0..own.len() {
        let (r1, r2) = pair(k);
        let jet = d.a_jet(r1, r2);
        rhs += (own[k] * jet[i] - jet[0]) * phi[k][2];
        a_other.push(jet[j]);
    }
    let grad_other = gradient(other, h);
    rhs -= (0..own.len()).map(|k| a_other[k] * grad_other[k] * phi[k][1]).sum::<f64>();
    rhs *= h;
    if let Some(t) = &tables.0 {
        // −½ ∫∫ ρ(x) ρ(y) H'(x − y) (φ'(x) − φ'(y))
        let weighted: Vec<f64> = own.iter().zip(phi).map(|(r, p)| r * p[1]).collect();
        let a = t.convolve(own);
        let b = t.convolve(&weighted);
        let s: f64 = (0..own.len()).map(|k| weighted[k] * a[k] - own[k] * b[k]).sum();
        rhs -= 0.5 * h * h * s;
    }
    if let Some(t) = &tables.1 {
        let c = t.convolve(prev.species(j).values());
        rhs -= h * h * (0..own.len()).map(|k| own[k] * phi[k][1] * c[k]).sum::<f64>();
    }
    rhs
}

/// `|∫φ dρᵢ(t₁) − ∫φ dρᵢ(t₀) − Σₙ τ Rₙ(φ)|` over the steps inside the window,
/// where `Rₙ` is the weak right-hand side evaluated at `𝛒ⁿ` with the cross
/// term frozen at `𝛒ⁿ⁻¹`. The diffusion part uses
/// `∫(ρᵢA_{ρᵢ} − A)Δφ − ∫A_{ρⱼ}∇ρⱼ·∇φ`, which is the chain rule through `B`.
pub fn weak_residual(
    traj: &Trajectory,
    model: &ModelSpec,
    phi: &TestFunction,
    species: usize,
    window: (f64, f64),
) -> Result<f64> {
    let (t0, t1) = window;
    let tau = traj.tau();
    let horizon = traj.horizon();
    if !(t0 >= 0.0 && t1 <= horizon + 1e-9 * tau && t0 < t1) {
        return Err(Error::UnsupportedWindow(t0, t1));
    }
    let (n0, n1) = (snapshot_index(t0, tau), snapshot_index(t1, tau).min(traj.n_steps()));
    if n0 >= n1 {
        return Err(Error::UnsupportedWindow(t0, t1));
    }
    if !(species == 1 || species == 2) {
        return Err(Error::InvalidArgument(format!("species must be 1 or 2, got {species}")));
    }
    let g = traj.grid;
    if !phi.inside(&g) {
        return Err(Error::InvalidArgument("test function support leaves the grid".into()));
    }
    let jets: Vec<[f64; 3]> = g.centers().iter().map(|&x| phi.jet(x)).collect();
    let tables = (table(&g, model.self_kernel(species)), table(&g, model.cross_kernel(species)));
    let pairing = |s: &SpeciesPair| g.h() * s.species(species).values().iter().zip(&jets).map(|(r, p)| r * p[0]).sum::<f64>();
    let mut acc = 0.0;
    for n in n0 + 1..=n1 {
        acc += weak_rhs(&traj.snapshots[n], &traj.snapshots[n - 1], model, species, &jets, &tables);
    }
    Ok((pairing(&traj.snapshots[n1]) - pairing(&traj.snapshots[n0]) - tau * acc).abs())
}

/// `‖(f∘(id + εζ) − f)/ε − ζ f'‖_{L²}` for each `ε`, with `f` extended
/// piecewise linearly between cell centers.
pub fn difference_quotient_errors(f: &[f64], grid: &Grid1D, zeta: &TestFunction, eps: &[f64]) -> Result<Vec<f64>> {
    if f.len() != grid.n_cells {
        return Err(Error::LengthMismatch { expected: grid.n_cells, got: f.len() });
    }
    let lip = zeta.lip();
    if let Some(&e) = eps.iter().find(|&&e| !(e > 0.0) || e * lip >= 1.0) {
        return Err(Error::NonMonotonePerturbation(e));
    }
    let h = grid.h();
    let n = grid.n_cells;
    let df = gradient(f, h);
    let interp = |x: f64| -> f64 {
        let s = ((x - grid.center(0)) / h).clamp(0.0, (n - 1) as f64);
        let k = (s.floor() as usize).min(n.saturating_sub(2));
        let w = s - k as f64;
        if n == 1 {
            f[0]
        } else {
            (1.0 - w) * f[k] + w * f[k + 1]
        }
    };
    Ok(eps
        .iter()
        .map(|&e| {
            let sq: f64 = (0..n)
                .map(|j| {
                    let x = grid.center(j);
                    let z = zeta.value(x);
                    ((interp(x + e * z) - f[j]) / e - z * df[j]).powi(2)
                })
                .sum();
            (h * sq).sqrt()
        })
        .collect())
}

/// First-order convergence of the difference quotient: each halving of `ε`
/// must shrink the error by at least 1.8.
pub fn check_difference_quotient(f: &[f64], grid: &Grid1D, zeta: &TestFunction, eps: &[f64]) -> Result<CheckResult> {
    let errors = difference_quotient_errors(f, grid, zeta, eps)?;
    let mut result = CheckResult::new("difference_quotient", true, f64::NEG_INFINITY, Vec::new());
    for (k, e) in errors.iter().enumerate() {
        result.fitted.insert(format!("error_{k}"), *e);
    }
    if errors.iter().all(|&e| e <= 1e-14) {
        result.worst_slack = 0.0;
        return Ok(result.with_note("errors vanish"));
    }
    for k in 1..errors.len() {
        let expected = 0.9 * eps[k - 1] / eps[k];
        let ratio = errors[k - 1] / errors[k];
        let slack = expected - ratio;
        if slack > result.worst_slack {
            result.worst_slack = slack;
            result.witness = vec![eps[k - 1], eps[k], ratio];
        }
    }
    if errors.len() < 2 {
        result.worst_slack = 0.0;
    }
    result.passed = result.worst_slack <= 0.0;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_function_derivatives_match_finite_differences() {
        for kind in [TestKind::Bump, TestKind::PolyBump] {
            let phi = TestFunction { center: 0.3, width: 0.7, kind };
            let d = 1e-5;
            for k in 1..40 {
                let x = -0.4 + 1.4 * k as f64 / 40.0;
                let fd1 = (phi.value(x + d) - phi.value(x - d)) / (2.0 * d);
                let fd2 = (phi.grad(x + d) - phi.grad(x - d)) / (2.0 * d);
                assert!((fd1 - phi.grad(x)).abs() < 1e-6, "{kind:?} {x}");
                assert!((fd2 - phi.laplacian(x)).abs() < 1e-6, "{kind:?} {x}");
            }
            assert_eq!(phi.jet(1.0), [0.0; 3]);
            assert_eq!(phi.jet(-0.4), [0.0; 3]);
        }
    }

    #[test]
    fn difference_quotient_converges_at_first_order() {
        let g = Grid1D::new(-2.0, 2.0, 16384).unwrap();
        let f = g.sample(|x| (-x * x).exp());
        let zeta = TestFunction { center: 0.0, width: 1.5, kind: TestKind::Bump };
        let r = check_difference_quotient(&f, &g, &zeta, &[1e-2, 5e-3, 2.5e-3]).unwrap();
        assert!(r.passed, "{r:?}");
        let e0 = r.fitted["error_0"];
        let e1 = r.fitted["error_1"];
        assert!(e0 / e1 > 1.8 && e0 / e1 < 2.2);
    }

    #[test]
    fn zero_perturbation_has_zero_error() {
        let g = Grid1D::new(-2.0, 2.0, 64).unwrap();
        let f = g.sample(|x| x.sin());
        let zeta = TestFunction { center: 0.0, width: 1.0, kind: TestKind::Bump };
        let r = check_difference_quotient(&f, &g, &zeta, &[]).unwrap();
        assert!(r.passed);
        let zeta_far = TestFunction { center: 5.0, width: 1.0, kind: TestKind::Bump };
        let e = difference_quotient_errors(&f, &g, &zeta_far, &[1e-2]).unwrap();
        assert_eq!(e, vec![0.0]);
    }

    #[test]
    fn large_eps_is_rejected() {
        let g = Grid1D::new(-2.0, 2.0, 64).unwrap();
        let f = vec![1.0; 64];
        let zeta = TestFunction { center: 0.0, width: 0.1, kind: TestKind::Bump };
        assert!(matches!(
            difference_quotient_errors(&f, &g, &zeta, &[1.0]),
            Err(Error::NonMonotonePerturbation(_))
        ));
    }
}
