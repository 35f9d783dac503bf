//! Variation formulas against finite differences of the solved energy.

use std::sync::Arc;

use teichlab_core::deformation::TeichPoint;
use teichlab_core::fuchsian::{bolza_group, DEFAULT_BALL_CAP};
use teichlab_core::harmonic::{SolverOptions, SolverWorkspace, Target};
use teichlab_core::mesh::build_mesh;
use teichlab_core::quad_diff::{basis, PoincareSeries};
use teichlab_core::variation::{
    first_variation, levi_of_energy, map_velocity, relative_frobenius, second_variation, solve_stencil, EnergyLandscape,
};

#[test]
fn torus_variations_match_finite_differences() {
    let g = bolza_group();
    let mesh = build_mesh(&g, 3).unwrap();
    let series = Arc::new(PoincareSeries::enumerate(&g, 10.0, DEFAULT_BALL_CAP).unwrap());
    let b = basis(series, &mesh).unwrap();
    let ws = SolverWorkspace::new(&mesh).unwrap();
    let land = EnergyLandscape {
        mesh: &mesh,
        basis: &b,
        workspace: &ws,
        options: SolverOptions::default(),
        target: Target::default_torus(),
    };
    let h = 1e-2 * b.chart_radius;
    let st = solve_stencil(&land, &TeichPoint::ORIGIN, h).unwrap();
    let levi = levi_of_energy(&TeichPoint::ORIGIN, h, &st.map(|m| m.energy), |e| e).unwrap();
    let f = first_variation(&mesh, &b, &st.values[0]);
    for a in 0..3 {
        assert!((f[a] - levi.gradient[a]).norm() < 0.02 * levi.gradient[a].norm(), "{f:?} vs {:?}", levi.gradient);
    }
    let v: [Vec<_>; 3] = std::array::from_fn(|a| map_velocity(&st, a, h).unwrap());
    let sv = second_variation(&mesh, &b, &st.values[0], &v);
    assert!(relative_frobenius(&sv.total, &levi.matrix) < 0.05);
    assert!(sv.curvature_term.iter().flatten().all(|x| x.norm() == 0.0));
    assert!(levi.eigenvalues[0] > 0.0);
}

#[test]
fn hyperbolic_levi_form_at_the_base_point_is_twice_the_gram() {
    let g = bolza_group();
    let mesh = build_mesh(&g, 2).unwrap();
    let series = Arc::new(PoincareSeries::enumerate(&g, 8.0, DEFAULT_BALL_CAP).unwrap());
    let b = basis(series, &mesh).unwrap();
    let ws = SolverWorkspace::new(&mesh).unwrap();
    let land = EnergyLandscape {
        mesh: &mesh,
        basis: &b,
        workspace: &ws,
        options: SolverOptions::default(),
        target: Target::Hyperbolic,
    };
    let h = 1e-2 * b.chart_radius;
    let st = solve_stencil(&land, &TeichPoint::ORIGIN, h).unwrap();
    let levi = levi_of_energy(&TeichPoint::ORIGIN, h, &st.map(|m| m.energy), |e| e).unwrap();
    let gram = b.gram.matrix();
    let two_g = std::array::from_fn(|i| std::array::from_fn(|j| gram[i][j] * 2.0));
    assert!(relative_frobenius(&levi.matrix, &two_g) < 0.1, "{:?}", levi.eigenvalues);
    let f = first_variation(&mesh, &b, &st.values[0]);
    assert!(f.iter().all(|x| x.norm() < 1e-6 * st.values[0].energy));
}
