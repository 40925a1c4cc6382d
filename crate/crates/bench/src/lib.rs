//! Fixtures shared by the jkoflow benchmarks.

use jkoflow::grid::normalize;
use jkoflow::{Density, Grid1D, SpeciesPair};

/// Normalized `(1 − ((x − c)/w)²)₊` on `grid`.
pub fn bump(grid: &Grid1D, center: f64, width: f64) -> Density {
    normalize(&grid.sample(|x| (1.0 - ((x - center) / width).powi(2)).max(0.0)), grid).expect("bump inside grid")
}

/// The two-bump initial pair used by the coupled preset on `[-4, 4]`.
pub fn coupled_pair(n_cells: usize) -> SpeciesPair {
    let g = Grid1D::new(-4.0, 4.0, n_cells).expect("valid grid");
    SpeciesPair::new(bump(&g, -0.6, 0.7), bump(&g, 0.7, 0.6)).expect("same grid")
}
