//! Property tests for the invariants of the transport and solver layers.

mod common;

use common::{bump, mass, w2_oracle};
use jkoflow::grid::{normalize, pushforward};
use jkoflow::isotonic::{isotonic_project, project_monotone_box};
use jkoflow::jko::jko_step;
use jkoflow::model::presets;
use jkoflow::transport::{optimal_map, w2, w2_sq};
use jkoflow::{Density, Grid1D, JkoConfig, SpeciesPair};
use proptest::prelude::*;

fn grid() -> Grid1D {
    Grid1D::new(-1.0, 1.0, 48).unwrap()
}

fn density() -> impl Strategy<Value = Density> {
    proptest::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], 48)
        .prop_filter("positive mass", |v| v.iter().sum::<f64>() > 1e-3)
        .prop_map(|v| normalize(&v, &grid()).unwrap())
}

fn positive_density() -> impl Strategy<Value = Density> {
    proptest::collection::vec(1e-3..1.0f64, 48).prop_map(|v| normalize(&v, &grid()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w2_matches_quantile_oracle(a in density(), b in density()) {
        prop_assert!((w2(&a, &b) - w2_oracle(&a, &b)).abs() <= 1e-9);
    }

    #[test]
    fn w2_is_a_metric(a in density(), b in density(), c in density()) {
        let (ab, ba) = (w2(&a, &b), w2(&b, &a));
        prop_assert!(w2(&a, &a) <= 1e-12);
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!(w2(&a, &c) <= ab + w2(&b, &c) + 1e-12);
    }

    #[test]
    fn translation_costs_shift_squared(a in density(), k in 0usize..8) {
        // Shifting by k cells inside an enlarged grid moves every quantile by k h.
        let g = grid();
        let wide = Grid1D::new(g.x_min, g.x_max + 8.0 * g.h(), g.n_cells + 8).unwrap();
        let mut u = a.values().to_vec();
        u.extend(std::iter::repeat(0.0).take(8));
        let mut v = vec![0.0; k];
        v.extend_from_slice(a.values());
        v.extend(std::iter::repeat(0.0).take(8 - k));
        let (u, v) = (normalize(&u, &wide).unwrap(), normalize(&v, &wide).unwrap());
        let shift = k as f64 * g.h();
        prop_assert!((w2_sq(&u, &v) - shift * shift).abs() <= 1e-12);
    }

    #[test]
    fn isotonic_projection_is_optimal(y in proptest::collection::vec(-5.0..5.0f64, 1..40), q in proptest::collection::vec(-5.0..5.0f64, 40)) {
        let mut p = y.clone();
        isotonic_project(&mut p);
        prop_assert!(p.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        prop_assert!((p.iter().sum::<f64>() - y.iter().sum::<f64>()).abs() <= 1e-9);
        // Variational inequality against an arbitrary nondecreasing competitor.
        let mut q: Vec<f64> = q[..y.len()].to_vec();
        q.sort_by(f64::total_cmp);
        let ip: f64 = y.iter().zip(&p).zip(&q).map(|((y, p), q)| (y - p) * (q - p)).sum();
        prop_assert!(ip <= 1e-9);
    }

    #[test]
    fn box_projection_stays_in_box(y in proptest::collection::vec(-5.0..5.0f64, 1..40)) {
        let mut p = y;
        project_monotone_box(&mut p, -1.0, 2.0);
        prop_assert!(p.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(p.iter().all(|&v| (-1.0..=2.0).contains(&v)));
    }

    #[test]
    fn optimal_map_pushes_forward(a in positive_density(), b in density()) {
        let map = optimal_map(&a, &b).unwrap();
        prop_assert!(map.windows(2).all(|w| w[0] <= w[1]));
        let pushed = pushforward(&a, &map).unwrap();
        prop_assert!((pushed.mass() - 1.0).abs() <= 1e-12);
        prop_assert!(pushed.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn optimal_map_rejects_interior_holes(a in positive_density(), b in density(), hole in 1usize..47) {
        let mut v = a.values().to_vec();
        v[hole] = 0.0;
        let a = normalize(&v, &grid()).unwrap();
        prop_assert!(matches!(optimal_map(&a, &b), Err(jkoflow::Error::DegenerateSupport(j)) if j == hole));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn jko_step_conserves_mass_and_decreases_energy(c1 in -0.4..0.0f64, c2 in 0.0..0.4f64, w1 in 0.3..0.6f64, w2 in 0.3..0.6f64) {
        let g = Grid1D::new(-2.0, 2.0, 64).unwrap();
        let p = SpeciesPair::new(bump(&g, c1, w1), bump(&g, c2, w2)).unwrap();
        let config = JkoConfig { tau: 2e-3, ..Default::default() };
        let (next, rec) = jko_step(&p, &presets::coupled_gaussian(), &config).unwrap();
        for i in [1, 2] {
            let v = next.species(i).values();
            prop_assert!((mass(v, g.h()) - 1.0).abs() <= 1e-12);
            prop_assert!(v.iter().all(|&x| x >= 0.0));
        }
        prop_assert!(rec.one_step_slack(config.tau) <= config.inner_tol);
    }
}
