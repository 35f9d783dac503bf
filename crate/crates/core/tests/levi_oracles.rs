//! Finite-difference Levi forms against closed forms.

use proptest::prelude::*;
use teichlab_core::deformation::TeichPoint;
use teichlab_core::variation::{frobenius, difference, hermitian_eigenvalues, levi_form, log_energy_from_inverse, Hermitian3};
use teichlab_core::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `Σ conj(z_a) A_ab z_b` for Hermitian `A` has Levi form `∂_a∂̄_b f = A_ba`.
fn hermitian_quadratic(a: &Hermitian3, z: &TeichPoint) -> f64 {
    let mut s = c(0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            s += z.0[i].conj() * a[i][j] * z.0[j];
        }
    }
    s.re
}

fn hermitian_from(diag: [f64; 3], off: [C64; 3]) -> Hermitian3 {
    [
        [c(diag[0], 0.0), off[0], off[1]],
        [off[0].conj(), c(diag[1], 0.0), off[2]],
        [off[1].conj(), off[2].conj(), c(diag[2], 0.0)],
    ]
}

#[test]
fn modulus_squared_of_one_coordinate() {
    let z = TeichPoint([c(0.1, -0.2), c(0.0, 0.3), c(0.05, 0.0)]);
    let f = levi_form(&z, 1e-2, |p| Ok(p.0[0].norm_sqr())).unwrap();
    let mut expected = [[c(0.0, 0.0); 3]; 3];
    expected[0][0] = c(1.0, 0.0);
    assert!(frobenius(&difference(&f.matrix, &expected)) < 1e-9);
    assert!((f.gradient[0] - z.0[0].conj()).norm() < 1e-9);
}

#[test]
fn pluriharmonic_function_has_zero_levi_form() {
    let z = TeichPoint([c(0.2, 0.1), c(-0.1, 0.05), c(0.0, -0.2)]);
    let g = levi_form(&z, 1e-2, |p| Ok((p.0[0] * p.0[1] + p.0[2] * p.0[2] * p.0[0]).re)).unwrap();
    assert!(frobenius(&g.matrix) < 1e-8, "{:?}", g.matrix);
}

#[test]
fn log_of_modulus_squared_plus_one() {
    // log(1 + |z₀|²) at 0 has Levi form e₀e₀*.
    let f = levi_form(&TeichPoint::ORIGIN, 1e-2, |p| Ok((1.0 + p.0[0].norm_sqr()).ln())).unwrap();
    assert!((f.matrix[0][0].re - 1.0).abs() < 1e-8);
    assert!(f.matrix[1][1].norm() < 1e-12 && f.matrix[0][1].norm() < 1e-12);
}

#[test]
fn chain_rule_for_inverse_reproduces_log() {
    let a = hermitian_from([2.0, 1.0, 0.5], [c(0.1, 0.2), c(-0.1, 0.0), c(0.0, 0.3)]);
    let energy = |p: &TeichPoint| 3.0 + hermitian_quadratic(&a, p) + p.0[1].re;
    let z = TeichPoint([c(0.05, 0.02), c(-0.03, 0.04), c(0.01, -0.02)]);
    let h = 1e-2;
    let e = levi_form(&z, h, |p| Ok(energy(p))).unwrap();
    let inv = levi_form(&z, h, |p| Ok(1.0 / energy(p))).unwrap();
    let log = levi_form(&z, h, |p| Ok(energy(p).ln())).unwrap();
    let chain = log_energy_from_inverse(energy(&z), &inv, &e);
    assert!(frobenius(&difference(&chain, &log.matrix)) < 1e-8);
}

proptest! {
    #[test]
    fn quadratic_forms_are_recovered(
        d in prop::array::uniform3(-2.0f64..2.0),
        o in prop::array::uniform6(-1.0f64..1.0),
        z in prop::array::uniform6(-0.3f64..0.3),
    ) {
        let a = hermitian_from(d, [c(o[0], o[1]), c(o[2], o[3]), c(o[4], o[5])]);
        let z = TeichPoint([c(z[0], z[1]), c(z[2], z[3]), c(z[4], z[5])]);
        let f = levi_form(&z, 0.1, |p| Ok(hermitian_quadratic(&a, p))).unwrap();
        let at: Hermitian3 = std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]));
        prop_assert!(frobenius(&difference(&f.matrix, &at)) < 1e-9);
        let ev = hermitian_eigenvalues(&a);
        prop_assert!(ev[0] <= ev[1] && ev[1] <= ev[2]);
        let trace: f64 = (0..3).map(|i| a[i][i].re).sum();
        prop_assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-12);
    }
}
