//! Test-side oracles, written without calling into the library algorithms.

#![allow(dead_code)]

use jkoflow::grid::normalize;
use jkoflow::{Density, Grid1D};

/// Segments `(s₀, s₁, x₀, x₁)` of the quantile function of a
/// piecewise-constant density given by cell masses; the function is linear
/// on each segment and jumps across empty cells.
fn quantile_segments(x_min: f64, h: f64, masses: &[f64]) -> Vec<(f64, f64, f64, f64)> {
    let total: f64 = masses.iter().sum();
    let mut segs = Vec::new();
    let mut acc = 0.0;
    for (j, &m) in masses.iter().enumerate() {
        if m > 0.0 {
            let s0 = acc / total;
            acc += m;
            segs.push((s0, (acc / total).min(1.0), x_min + h * j as f64, x_min + h * (j + 1) as f64));
        }
    }
    segs.last_mut().expect("positive mass").1 = 1.0;
    segs
}

fn eval_segment(seg: (f64, f64, f64, f64), s: f64) -> f64 {
    seg.2 + (seg.3 - seg.2) * (s - seg.0) / (seg.1 - seg.0)
}

/// Exact `W₂` from `∫₀¹ |F⁻¹ − G⁻¹|²`: both quantile functions are linear
/// between merged segment ends, so Simpson's rule is exact on each piece.
pub fn w2_oracle(a: &Density, b: &Density) -> f64 {
    let g = a.grid();
    let h = g.h();
    let na = quantile_segments(g.x_min, h, &a.values().iter().map(|v| v * h).collect::<Vec<_>>());
    let nb = quantile_segments(g.x_min, h, &b.values().iter().map(|v| v * h).collect::<Vec<_>>());
    let mut cuts: Vec<f64> = na.iter().chain(&nb).flat_map(|n| [n.0, n.1]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (mut ka, mut kb) = (0, 0);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        if s1 <= s0 {
            continue;
        }
        let mid = 0.5 * (s0 + s1);
        while na[ka].1 < mid {
            ka += 1;
        }
        while nb[kb].1 < mid {
            kb += 1;
        }
        let d = |s: f64| eval_segment(na[ka], s) - eval_segment(nb[kb], s);
        total += (s1 - s0) / 6.0 * (d(s0).powi(2) + 4.0 * d(mid).powi(2) + d(s1).powi(2));
    }
    total.sqrt()
}

/// Unit-mass Barenblatt profile of `∂ₜρ = ∂ₓₓ(ρ²)`:
/// `t^{-1/3} (C − x²/(12 t^{2/3}))₊`.
pub struct PmeBarenblatt {
    c: f64,
}

impl PmeBarenblatt {
    pub fn new() -> Self {
        // Mass (4/3) C √(12 C) = 1.
        Self { c: (3.0 / (4.0 * 12f64.sqrt())).powf(2.0 / 3.0) }
    }

    pub fn radius(&self, t: f64) -> f64 {
        (12.0 * self.c).sqrt() * t.powf(1.0 / 3.0)
    }

    fn antiderivative(&self, x: f64, t: f64) -> f64 {
        let r = self.radius(t);
        let x = x.clamp(-r, r);
        t.powf(-1.0 / 3.0) * (self.c * x - x.powi(3) / (36.0 * t.powf(2.0 / 3.0)))
    }

    /// Exact cell averages on `grid`.
    pub fn cell_averages(&self, grid: &Grid1D, t: f64) -> Vec<f64> {
        let h = grid.h();
        (0..grid.n_cells)
            .map(|j| {
                let (a, b) = (grid.x_min + j as f64 * h, grid.x_min + (j + 1) as f64 * h);
                (self.antiderivative(b, t) - self.antiderivative(a, t)) / h
            })
            .collect()
    }

    pub fn density(&self, grid: &Grid1D, t: f64) -> Density {
        normalize(&self.cell_averages(grid, t), grid).expect("profile inside grid")
    }
}

/// `(1 − ((x − c)/w)²)₊`, normalized on the grid.
pub fn bump(grid: &Grid1D, c: f64, w: f64) -> Density {
    normalize(&grid.sample(|x| (1.0 - ((x - c) / w).powi(2)).max(0.0)), grid).expect("bump inside grid")
}

pub fn l1(a: &[f64], b: &[f64], h: f64) -> f64 {
    h * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

pub fn mass(v: &[f64], h: f64) -> f64 {
    h * v.iter().sum::<f64>()
}

/// `h Σ x_j² ρ_j` at cell centers.
pub fn second_moment(grid: &Grid1D, v: &[f64]) -> f64 {
    let h = grid.h();
    h * v.iter().enumerate().map(|(j, r)| (grid.x_min + (j as f64 + 0.5) * h).powi(2) * r).sum::<f64>()
}
