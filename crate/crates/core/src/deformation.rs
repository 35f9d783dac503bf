//! The chart `z ↦ μ(z) = Σ z^α μ_α` and the conformal structure it induces
//! on the fixed mesh.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::hyperbolic::C64;
use crate::quad_diff::{BeltramiBasis, DIM};

/// Beltrami coefficients at or above this bound are rejected.
pub const MAX_SUP_MU: f64 = 0.5;

/// Chart coordinates `z ∈ ℂ³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeichPoint(pub [C64; DIM]);

impl TeichPoint {
    pub const ORIGIN: TeichPoint = TeichPoint([C64::new(0.0, 0.0); DIM]);

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: C64) -> TeichPoint {
        TeichPoint(self.0.map(|z| z * s))
    }

    pub fn add(&self, other: &TeichPoint) -> TeichPoint {
        TeichPoint(std::array::from_fn(|a| self.0[a] + other.0[a]))
    }

    /// Unit vector `e_α`.
    pub fn basis(alpha: usize) -> TeichPoint {
        let mut z = [C64::new(0.0, 0.0); DIM];
        z[alpha] = C64::new(1.0, 0.0);
        TeichPoint(z)
    }
}

/// Tensor `(m11, m12, m22)` of `|dv + μ dv̄|²` in real coordinates.
#[inline]
pub fn beltrami_tensor(mu: C64) -> [f64; 3] {
    let n = mu.norm_sqr();
    [1.0 + n + 2.0 * mu.re, 2.0 * mu.im, 1.0 + n - 2.0 * mu.re]
}

/// Conformal structure of `(X₀, μ(z))` sampled on a mesh.
#[derive(Debug, Clone)]
pub struct ConformalStructure {
    pub z: TeichPoint,
    pub mu_quad: Vec<C64>,
    pub mu_bary: Vec<C64>,
    /// Per-triangle tensor evaluated at the barycenter.
    pub tensors: Vec<[f64; 3]>,
    pub sup_mu: f64,
}

impl ConformalStructure {
    /// Multiplies every tensor by a positive per-triangle factor.
    pub fn rescaled(&self, factor: impl Fn(usize) -> f64) -> ConformalStructure {
        let mut out = self.clone();
        for (t, m) in out.tensors.iter_mut().enumerate() {
            let s = factor(t);
            *m = m.map(|x| x * s);
        }
        out
    }
}

/// `μ(z)` at quadrature points and barycenters with per-triangle tensors.
pub fn structure_at(z: &TeichPoint, basis: &BeltramiBasis) -> Result<ConformalStructure> {
    let combine = |m: &[C64; DIM]| -> C64 { (0..DIM).map(|a| z.0[a] * m[a]).sum() };
    let mu_quad: Vec<C64> = basis.mu_quad.iter().map(combine).collect();
    let mu_bary: Vec<C64> = basis.mu_bary.iter().map(combine).collect();
    let sup_mu = mu_quad
        .iter()
        .chain(&mu_bary)
        .map(|m| m.norm())
        .fold(0.0, f64::max);
    if !(sup_mu < MAX_SUP_MU) {
        return Err(LabError::OutOfChart(format!(
            "sup|μ(z)| = {sup_mu:.4} is not below {MAX_SUP_MU}"
        )));
    }
    let tensors = mu_bary.iter().map(|&m| beltrami_tensor(m)).collect();
    Ok(ConformalStructure {
        z: *z,
        mu_quad,
        mu_bary,
        tensors,
        sup_mu,
    })
}

/// Errors unless `|z|_∞ ≤ chart_radius`.
pub fn check_in_chart(z: &TeichPoint, chart_radius: f64) -> Result<()> {
    let r = z.sup_norm();
    if r > chart_radius * (1.0 + 1e-12) {
        return Err(LabError::OutOfChart(format!(
            "|z|_inf = {r:.6} exceeds the chart radius {chart_radius:.6}"
        )));
    }
    Ok(())
}

/// The Kodaira–Spencer direction `μ_α` at quadrature points.
pub fn kodaira_spencer_direction(basis: &BeltramiBasis, alpha: usize) -> Vec<C64> {
    basis.mu_quad.iter().map(|m| m[alpha]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_mu_gives_identity() {
        assert_eq!(beltrami_tensor(C64::new(0.0, 0.0)), [1.0, 0.0, 1.0]);
    }

    proptest! {
        #[test]
        fn determinant_identity(re in -0.7f64..0.7, im in -0.7f64..0.7) {
            let mu = C64::new(re, im);
            let m = beltrami_tensor(mu);
            let det = m[0] * m[2] - m[1] * m[1];
            let expect = (1.0 - mu.norm_sqr()).powi(2);
            prop_assert!((det - expect).abs() < 1e-12);
        }

        #[test]
        fn tensor_is_the_expanded_square(re in -0.7f64..0.7, im in -0.7f64..0.7, x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let mu = C64::new(re, im);
            let d = C64::new(x, y);
            let direct = (d + mu * d.conj()).norm_sqr();
            let m = beltrami_tensor(mu);
            let quad = m[0] * x * x + 2.0 * m[1] * x * y + m[2] * y * y;
            prop_assert!((direct - quad).abs() < 1e-12);
        }
    }
}
