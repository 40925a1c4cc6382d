//! Quadratic Wasserstein distance, quantiles and optimal maps in one dimension.
//!
//! Densities are piecewise constant, so their CDFs are piecewise linear
//! between cell boundaries and their quantile functions are piecewise linear
//! in the mass variable `s`. The squared distance
//! `∫₀¹ |F_μ⁻¹(s) − F_ν⁻¹(s)|² ds` is integrated exactly by merging the
//! breakpoints of both quantile functions.

use crate::error::{Error, Result};
use crate::grid::{Density, Grid1D, SpeciesPair};

/// Quantile positions `F⁻¹(s_k)` at `s_k = (k + ½)/n_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileVector {
    pub n_q: usize,
    pub values: Vec<f64>,
}

/// Samples the quantile function of `rho` at `n_q` midpoint mass levels.
pub fn quantile(rho: &Density, n_q: usize) -> QuantileVector {
    let g = rho.grid();
    let cdf = rho.cdf();
    let values = (0..n_q)
        .map(|k| inverse_cdf(g, &cdf, (k as f64 + 0.5) / n_q as f64))
        .collect();
    QuantileVector { n_q, values }
}

/// Generalized inverse `inf{x : F(x) ≥ s}` of a piecewise-linear CDF.
pub fn inverse_cdf(g: &Grid1D, cdf: &[f64], s: f64) -> f64 {
    let n = g.n_cells;
    if s <= 0.0 {
        let k = cdf.partition_point(|&v| v <= 0.0).clamp(1, n);
        return g.boundary(k - 1);
    }
    // First boundary index with cdf >= s; the cell to its left has positive mass.
    let j = cdf.partition_point(|&v| v < s).clamp(1, n);
    let k = j - 1;
    let dc = cdf[k + 1] - cdf[k];
    if dc <= 0.0 {
        return g.boundary(k + 1);
    }
    g.boundary(k) + g.h() * ((s - cdf[k]) / dc).clamp(0.0, 1.0)
}

/// Right limit `F⁻¹(s⁺)` of the quantile function.
fn inverse_cdf_right(g: &Grid1D, cdf: &[f64], s: f64) -> f64 {
    let n = g.n_cells;
    let j = cdf.partition_point(|&v| v <= s).clamp(1, n);
    let k = j - 1;
    let dc = cdf[k + 1] - cdf[k];
    if dc <= 0.0 {
        return g.boundary(k + 1);
    }
    g.boundary(k) + g.h() * ((s - cdf[k]) / dc).clamp(0.0, 1.0)
}

/// Left limit `F⁻¹(s⁻)` of the quantile function.
fn inverse_cdf_left(g: &Grid1D, cdf: &[f64], s: f64) -> f64 {
    if s <= 0.0 {
        return inverse_cdf_right(g, cdf, s);
    }
    inverse_cdf(g, cdf, s)
}

fn next_nonempty(c: &[f64], mut k: usize) -> usize {
    let n = c.len() - 1;
    while k < n && c[k + 1] <= c[k] {
        k += 1;
    }
    k
}

/// Exact `W₂²` between the densities with boundary CDFs `a` and `c`.
///
/// When `grad` is given it receives `∂W₂²/∂c_k` for every boundary `k`. At
/// empty cells, where `W₂²` has a kink, the one-sided derivative in the
/// direction that opens the cell is used.
pub fn w2_sq_cdf(g: &Grid1D, a: &[f64], c: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
    let n = g.n_cells;
    let h = g.h();
    debug_assert_eq!(a.len(), n + 1);
    debug_assert_eq!(c.len(), n + 1);
    if let Some(gr) = grad.as_deref_mut() {
        gr.iter_mut().for_each(|v| *v = 0.0);
    }
    let mut total = 0.0;
    let mut i = next_nonempty(a, 0);
    let mut k = next_nonempty(c, 0);
    let mut s = 0.0f64;
    while i < n && k < n {
        let (a0, a1) = (a[i], a[i + 1]);
        let (c0, c1) = (c[k], c[k + 1]);
        let s_hi = a1.min(c1);
        if s_hi > s {
            let (da, dc) = (a1 - a0, c1 - c0);
            let v0 = ((s - a0) / da).clamp(0.0, 1.0);
            let v1 = ((s_hi - a0) / da).clamp(0.0, 1.0);
            let u0 = ((s - c0) / dc).clamp(0.0, 1.0);
            let u1 = ((s_hi - c0) / dc).clamp(0.0, 1.0);
            let (bi, bk) = (g.boundary(i), g.boundary(k));
            let d0 = (bi + h * v0) - (bk + h * u0);
            let d1 = (bi + h * v1) - (bk + h * u1);
            total += (s_hi - s) * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0;
            if let Some(gr) = grad.as_deref_mut() {
                // Simpson is exact: the integrands are quadratic in u.
                let du = u1 - u0;
                let um = 0.5 * (u0 + u1);
                let dm = 0.5 * (d0 + d1);
                let lower = du / 6.0 * (d0 * (1.0 - u0) + 4.0 * dm * (1.0 - um) + d1 * (1.0 - u1));
                let upper = du / 6.0 * (d0 * u0 + 4.0 * dm * um + d1 * u1);
                gr[k] += 2.0 * h * lower;
                gr[k + 1] += 2.0 * h * upper;
            }
        }
        s = s.max(s_hi);
        if a1 <= s {
            i = next_nonempty(a, i + 1);
        }
        if c1 <= s {
            k = next_nonempty(c, k + 1);
        }
    }
    if let Some(gr) = grad {
        for k in 0..n {
            if c[k + 1] > c[k] {
                continue;
            }
            let s_star = c[k];
            let bk = g.boundary(k);
            let dl = inverse_cdf_left(g, a, s_star) - bk;
            let dr = inverse_cdf_right(g, a, s_star) - bk;
            gr[k] += 2.0 * h * (dl / 2.0 - h / 6.0);
            gr[k + 1] += 2.0 * h * (dr / 2.0 - h / 3.0);
        }
    }
    total.max(0.0)
}

/// Exact squared quadratic Wasserstein distance.
pub fn w2_sq(mu: &Density, nu: &Density) -> f64 {
    assert_eq!(mu.grid(), nu.grid(), "w2 requires a common grid");
    w2_sq_cdf(mu.grid(), &mu.cdf(), &nu.cdf(), None)
}

/// Quadratic Wasserstein distance.
pub fn w2(mu: &Density, nu: &Density) -> f64 {
    w2_sq(mu, nu).sqrt()
}

/// Midpoint-rule approximation of `W₂²` from `n_q` sampled quantiles.
pub fn w2_sq_sampled(mu: &Density, nu: &Density, n_q: usize) -> f64 {
    let qa = quantile(mu, n_q);
    let qb = quantile(nu, n_q);
    qa.values.iter().zip(&qb.values).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n_q as f64
}

/// Product metric `W₂²(μ₁,ν₁) + W₂²(μ₂,ν₂)`.
pub fn product_w2_sq(a: &SpeciesPair, b: &SpeciesPair) -> f64 {
    w2_sq(&a.rho1, &b.rho1) + w2_sq(&a.rho2, &b.rho2)
}

/// Monotone rearrangement `T = F_ν⁻¹ ∘ F_μ` sampled at cell centers.
///
/// Cells left (right) of the support of `μ` are sent to the left (right)
/// end of the support of `ν`.
pub fn optimal_map(mu: &Density, nu: &Density) -> Result<Vec<f64>> {
    if mu.grid() != nu.grid() {
        return Err(Error::GridMismatch);
    }
    let g = mu.grid();
    let (lo, hi) = mu.support().ok_or(Error::ZeroMass)?;
    if let Some(j) = (lo..=hi).find(|&j| mu.values()[j] == 0.0) {
        return Err(Error::DegenerateSupport(j));
    }
    let (cm, cn) = (mu.cdf(), nu.cdf());
    let h = g.h();
    Ok((0..g.n_cells)
        .map(|j| {
            let s = cm[j] + 0.5 * h * mu.values()[j];
            if s <= 0.0 {
                inverse_cdf_right(g, &cn, 0.0)
            } else if s >= 1.0 {
                inverse_cdf(g, &cn, 1.0)
            } else {
                inverse_cdf(g, &cn, s)
            }
        })
        .collect())
}

/// Transport cost `h Σ |x_j − T(x_j)|² μ_j` of a map sampled at centers.
pub fn map_cost(mu: &Density, map: &[f64]) -> f64 {
    let g = mu.grid();
    g.h() * mu
        .values()
        .iter()
        .enumerate()
        .map(|(j, &v)| (g.center(j) - map[j]).powi(2) * v)
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::normalize;

    fn indicator(g: &Grid1D, lo: f64, hi: f64) -> Density {
        normalize(&g.sample(|x| ((x > lo) && (x < hi)) as u8 as f64), g).unwrap()
    }

    #[test]
    fn quantile_of_uniform() {
        let g = Grid1D::new(0.0, 1.0, 100).unwrap();
        let q = quantile(&indicator(&g, 0.0, 1.0), 400);
        for (k, &v) in q.values.iter().enumerate() {
            let s = (k as f64 + 0.5) / 400.0;
            assert!((v - s).abs() < g.h());
        }
    }

    #[test]
    fn quantile_of_single_cell() {
        let g = Grid1D::new(0.0, 1.0, 32).unwrap();
        let mut raw = vec![0.0; 32];
        raw[9] = 1.0;
        let q = quantile(&normalize(&raw, &g).unwrap(), 128);
        assert!(q.values.iter().all(|&v| v >= g.boundary(9) && v <= g.boundary(10)));
    }

    #[test]
    fn quantile_symmetry() {
        let g = Grid1D::new(-1.0, 1.0, 200).unwrap();
        let c = 0.0;
        let rho = normalize(&g.sample(|x| (1.0 - (x - c).powi(2) * 2.0).max(0.0)), &g).unwrap();
        let q = quantile(&rho, 800);
        for k in 0..800 {
            assert!((q.values[k] + q.values[799 - k] - 2.0 * c).abs() < 1e-6);
        }
    }

    #[test]
    fn w2_examples() {
        let g = Grid1D::new(0.0, 3.0, 1024).unwrap();
        let a = indicator(&g, 0.0, 1.0);
        assert_eq!(w2(&a, &a), 0.0);
        let b = indicator(&g, 1.0, 2.0);
        assert!((w2(&a, &b) - 1.0).abs() < 2e-3);
        assert!((w2_sq_sampled(&a, &b, 4096).sqrt() - 1.0).abs() < 2e-3);
    }

    #[test]
    fn w2_shift_is_exact_for_cell_multiples() {
        let g = Grid1D::new(-2.0, 2.0, 400).unwrap();
        let f = |x: f64| (1.0 - 4.0 * x * x).max(0.0);
        let k = 30;
        let s = k as f64 * g.h();
        let mu = normalize(&g.sample(f), &g).unwrap();
        let nu = normalize(&g.sample(|x| f(x - s)), &g).unwrap();
        assert!((w2(&mu, &nu) - s).abs() < 1e-10);
    }

    #[test]
    fn exact_and_sampled_agree() {
        let g = Grid1D::new(-1.0, 2.0, 96).unwrap();
        let mu = normalize(&g.sample(|x| (-(x * x) * 5.0).exp()), &g).unwrap();
        let nu = normalize(&g.sample(|x| (1.0 - (x - 0.7).abs()).max(0.0)), &g).unwrap();
        let exact = w2_sq(&mu, &nu);
        // The quantile of `nu` is steep near its support ends, so the midpoint rule converges slowly.
        let sampled = w2_sq_sampled(&mu, &nu, 400_000);
        assert!((exact - sampled).abs() < 1e-7 * exact, "{exact} {sampled}");
    }

    #[test]
    fn cdf_gradient_matches_finite_differences() {
        let g = Grid1D::new(0.0, 1.0, 12).unwrap();
        let mut ra = vec![0.0; 12];
        let mut rc = vec![0.0; 12];
        for j in 0..12 {
            ra[j] = 1.0 + (j as f64 * 0.7).sin().abs();
            rc[j] = if j < 3 { 0.0 } else { 0.5 + (j as f64 * 1.3).cos().abs() };
        }
        let a = normalize(&ra, &g).unwrap().cdf();
        let c = normalize(&rc, &g).unwrap().cdf();
        let mut grad = vec![0.0; 13];
        w2_sq_cdf(&g, &a, &c, Some(&mut grad));
        let eps = 1e-7;
        // Interior boundaries of nonempty cells: two-sided derivative.
        for k in 4..12 {
            let mut cp = c.clone();
            let mut cm = c.clone();
            cp[k] += eps;
            cm[k] -= eps;
            let fd = (w2_sq_cdf(&g, &a, &cp, None) - w2_sq_cdf(&g, &a, &cm, None)) / (2.0 * eps);
            assert!((fd - grad[k]).abs() < 1e-6 * (1.0 + fd.abs()), "k={k} fd={fd} g={}", grad[k]);
        }
        // Boundary 3 sits at the edge of the vacuum: moving it up opens cell 2.
        let mut cp = c.clone();
        cp[3] += eps;
        let fd = (w2_sq_cdf(&g, &a, &cp, None) - w2_sq_cdf(&g, &a, &c, None)) / eps;
        assert!((fd - grad[3]).abs() < 1e-5 * (1.0 + fd.abs()), "fd={fd} g={}", grad[3]);
    }

    #[test]
    fn product_metric_examples() {
        let g = Grid1D::new(-2.0, 2.0, 400).unwrap();
        let f = |x: f64| (1.0 - 4.0 * x * x).max(0.0);
        let base = normalize(&g.sample(f), &g).unwrap();
        let moved = normalize(&g.sample(|x| f(x - 0.3)), &g).unwrap();
        let p0 = SpeciesPair::new(base.clone(), base.clone()).unwrap();
        let p1 = SpeciesPair::new(moved.clone(), base.clone()).unwrap();
        let p2 = SpeciesPair::new(moved.clone(), moved).unwrap();
        assert_eq!(product_w2_sq(&p0, &p0), 0.0);
        assert!((product_w2_sq(&p0, &p1) - 0.09).abs() < 1e-3);
        assert!((product_w2_sq(&p0, &p2) - 0.18).abs() < 2e-3);
    }

    #[test]
    fn optimal_map_examples() {
        let g = Grid1D::new(0.0, 3.0, 300).unwrap();
        let u1 = indicator(&g, 0.0, 1.0);
        let u2 = indicator(&g, 0.0, 2.0);
        let t = optimal_map(&u1, &u1).unwrap();
        for j in 0..100 {
            assert!((t[j] - g.center(j)).abs() < 1e-12);
        }
        let t = optimal_map(&u1, &u2).unwrap();
        for j in 0..100 {
            assert!((t[j] - 2.0 * g.center(j)).abs() < 2.0 * g.h());
        }
        let cost = map_cost(&u1, &t);
        let w = w2_sq(&u1, &u2);
        assert!((cost - w).abs() < 1e-4 * w, "{cost} {w}");

        let shifted = indicator(&g, 0.5, 1.5);
        let t = optimal_map(&u1, &shifted).unwrap();
        for j in 0..100 {
            assert!((t[j] - g.center(j) - 0.5).abs() < g.h());
        }
    }

    #[test]
    fn optimal_map_rejects_interior_vacuum() {
        let g = Grid1D::new(0.0, 1.0, 20).unwrap();
        let mut raw = vec![1.0; 20];
        raw[7] = 0.0;
        let mu = normalize(&raw, &g).unwrap();
        assert_eq!(optimal_map(&mu, &mu), Err(Error::DegenerateSupport(7)));
    }
}
