//! Surface, basis and harmonic-map oracles on coarse meshes.

use std::f64::consts::PI;
use std::sync::Arc;

use teichlab_core::curvature::TargetGeometry;
use teichlab_core::deformation::{structure_at, TeichPoint};
use teichlab_core::fuchsian::{bolza_group, DEFAULT_BALL_CAP};
use teichlab_core::harmonic::{EnergyModel, MapField, SolverMethod, SolverOptions, SolverWorkspace, Target};
use teichlab_core::mesh::build_mesh;
use teichlab_core::quad_diff::{basis, PoincareSeries};
use teichlab_core::variation::{density_stats, EnergyLandscape};
use teichlab_core::C64;

#[test]
fn area_converges_to_four_pi() {
    let g = bolza_group();
    let errs: Vec<f64> = (1..=4)
        .map(|l| (build_mesh(&g, l).unwrap().hyperbolic_area() - 4.0 * PI).abs())
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "{errs:?}");
    }
    assert!((g.octagon.gauss_bonnet_area() - 4.0 * PI).abs() < 1e-12);
}

#[test]
fn euler_characteristic_is_minus_two() {
    let g = bolza_group();
    for l in 1..=3 {
        assert_eq!(build_mesh(&g, l).unwrap().euler_characteristic(), -2);
    }
}

#[test]
fn basis_is_orthonormal_and_nearly_holomorphic() {
    let g = bolza_group();
    let mesh = build_mesh(&g, 2).unwrap();
    let series = Arc::new(PoincareSeries::enumerate(&g, 8.0, DEFAULT_BALL_CAP).unwrap());
    let b = basis(series, &mesh).unwrap();
    let m = b.gram.matrix();
    let s2 = b.scale * b.scale;
    for i in 0..3 {
        for j in 0..3 {
            let expected = if i == j { s2 } else { 0.0 };
            assert!((m[i][j] - C64::new(expected, 0.0)).norm() < 1e-10, "{m:?}");
        }
    }
    assert_eq!(b.seeds, vec![0, 2, 4]);
    assert!(b.chart_radius > 0.0 && b.sup_mu.iter().all(|&s| s <= 1.0 + 1e-12));
}

#[test]
fn identity_energy_and_density() {
    let g = bolza_group();
    let mesh = build_mesh(&g, 3).unwrap();
    let series = Arc::new(PoincareSeries::enumerate(&g, 8.0, DEFAULT_BALL_CAP).unwrap());
    let b = basis(series, &mesh).unwrap();
    let ws = SolverWorkspace::new(&mesh).unwrap();
    let structure = structure_at(&TeichPoint::ORIGIN, &b).unwrap();
    let model = EnergyModel::new(&mesh, &structure, Target::Hyperbolic, ws.lumped.clone()).unwrap();
    let id = MapField::identity(&mesh);
    let e = model.energy(&id);
    assert!((e / (4.0 * PI) - 1.0).abs() < 5e-3, "E(id) = {e}");
    let d = density_stats(&mesh, &id, e);
    assert!(d.max_deviation < 1e-10);
    assert!(id.gluing_residual(&mesh, &g) < 1e-12);
}

#[test]
fn newton_and_gradient_descent_agree() {
    let g = bolza_group();
    let mesh = build_mesh(&g, 2).unwrap();
    let series = Arc::new(PoincareSeries::enumerate(&g, 8.0, DEFAULT_BALL_CAP).unwrap());
    let b = basis(series, &mesh).unwrap();
    let ws = SolverWorkspace::new(&mesh).unwrap();
    let z = TeichPoint([C64::new(0.3 * b.chart_radius, 0.1 * b.chart_radius), C64::new(0.0, 0.0), C64::new(0.0, 0.2 * b.chart_radius)]);
    let solve = |method, tol| {
        let land = EnergyLandscape {
            mesh: &mesh,
            basis: &b,
            workspace: &ws,
            options: SolverOptions { tol, max_iterations: 5000, method },
            target: Target::Hyperbolic,
        };
        land.solve(&z, None).unwrap()
    };
    let newton = solve(SolverMethod::Newton, 1e-11);
    let gd = solve(SolverMethod::GradientDescent, 2e-6);
    assert!(newton.residual < 1e-11);
    assert!((newton.energy - gd.energy).abs() < 1e-8 * newton.energy, "{} vs {}", newton.energy, gd.energy);
    for w in newton.energy_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-12 * w[0]);
    }
}

#[test]
fn torus_energy_is_positive_and_solve_is_harmonic() {
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
        target: Target::default_torus(),
    };
    let m = land.solve(&TeichPoint::ORIGIN, None).unwrap();
    assert_eq!(m.target.geometry(), TargetGeometry::Torus);
    assert!(m.energy > 0.0 && m.residual < 1e-10);
    assert!(m.gluing_residual(&mesh, &g) < 1e-12);
    // Any other map in the class has larger energy.
    let structure = structure_at(&TeichPoint::ORIGIN, &b).unwrap();
    let model = EnergyModel::new(&mesh, &structure, m.target, ws.lumped.clone()).unwrap();
    let mut bumped = m.clone();
    bumped.values[3] += C64::new(0.01, -0.02);
    assert!(model.energy(&bumped) > m.energy);
}
