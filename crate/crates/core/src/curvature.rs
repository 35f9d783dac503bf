//! Target geometry in real coordinates: metric, Christoffel symbols and the
//! curvature tensor extended complex-multilinearly.
//!
//! `R(X,Y,Z,W) = −⟨R(X,Y)Z, W⟩` with `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_{[X,Y]}`,
//! so `R(X,Y,X,Y)` is the sectional curvature on a real orthonormal pair.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::hyperbolic::{metric_factor, C64};

/// Complexified tangent vector: complex coefficients of `∂_x, ∂_y`.
pub type ComplexTangent = [C64; 2];

/// Norm convention used in the Hermitian sectional curvature.
pub const HERMITIAN_NORM_CONVENTION: &str = "|X|^2 = <X, conj X> (sesquilinear)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetGeometry {
    /// Poincaré disk, metric `4/(1−|u|²)² (dx² + dy²)`.
    Hyperbolic,
    /// `ℝ²/ℤ²` with the Euclidean metric.
    Torus,
}

pub fn conj(x: ComplexTangent) -> ComplexTangent {
    x.map(|c| c.conj())
}

impl TargetGeometry {
    /// Conformal factor of the metric at `u`.
    pub fn conformal_factor(&self, u: C64) -> f64 {
        match self {
            TargetGeometry::Hyperbolic => metric_factor(u),
            TargetGeometry::Torus => 1.0,
        }
    }

    pub fn metric(&self, u: C64) -> [[f64; 2]; 2] {
        let r = self.conformal_factor(u);
        [[r, 0.0], [0.0, r]]
    }

    /// Complex-bilinear extension `⟨X, Y⟩` (no conjugation).
    pub fn inner(&self, u: C64, x: ComplexTangent, y: ComplexTangent) -> C64 {
        (x[0] * y[0] + x[1] * y[1]) * self.conformal_factor(u)
    }

    /// Gradient of `log ρ`.
    fn dlog(&self, u: C64) -> [f64; 2] {
        match self {
            TargetGeometry::Hyperbolic => {
                let s = 1.0 - u.norm_sqr();
                [4.0 * u.re / s, 4.0 * u.im / s]
            }
            TargetGeometry::Torus => [0.0, 0.0],
        }
    }

    /// Hessian of `log ρ`.
    fn ddlog(&self, u: C64) -> [[f64; 2]; 2] {
        match self {
            TargetGeometry::Hyperbolic => {
                let s = 1.0 - u.norm_sqr();
                let p = [u.re, u.im];
                std::array::from_fn(|i| {
                    std::array::from_fn(|j| {
                        let d = if i == j { 4.0 / s } else { 0.0 };
                        d + 8.0 * p[i] * p[j] / (s * s)
                    })
                })
            }
            TargetGeometry::Torus => [[0.0; 2]; 2],
        }
    }

    /// `Γ^k_{ij}` indexed `[k][i][j]`.
    pub fn christoffel(&self, u: C64) -> [[[f64; 2]; 2]; 2] {
        let g = self.dlog(u);
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        std::array::from_fn(|k| {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| 0.5 * (delta(k, i) * g[j] + delta(k, j) * g[i] - delta(i, j) * g[k]))
            })
        })
    }

    /// `∂_m Γ^k_{ij}` indexed `[m][k][i][j]`.
    fn christoffel_derivative(&self, u: C64) -> [[[[f64; 2]; 2]; 2]; 2] {
        let h = self.ddlog(u);
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        std::array::from_fn(|m| {
            std::array::from_fn(|k| {
                std::array::from_fn(|i| {
                    std::array::from_fn(|j| {
                        0.5 * (delta(k, i) * h[m][j] + delta(k, j) * h[m][i] - delta(i, j) * h[m][k])
                    })
                })
            })
        })
    }

    /// Covariant derivative `∂V + Γ(du, V)` of a vector field along a map,
    /// given the coordinate derivative `dv` and the map derivative `du` in the
    /// same (possibly complex) direction.
    pub fn covariant(&self, u: C64, dv: ComplexTangent, du: ComplexTangent, v: ComplexTangent) -> ComplexTangent {
        let gamma = self.christoffel(u);
        std::array::from_fn(|k| {
            let mut acc = dv[k];
            for i in 0..2 {
                for j in 0..2 {
                    acc += du[i] * v[j] * gamma[k][i][j];
                }
            }
            acc
        })
    }

    /// Closed constant-curvature form: `K(⟨X,Z⟩⟨Y,W⟩ − ⟨Y,Z⟩⟨X,W⟩)` with `K = −1`
    /// for the disk and `0` for the torus.
    pub fn riemann(&self, u: C64, x: ComplexTangent, y: ComplexTangent, z: ComplexTangent, w: ComplexTangent) -> C64 {
        match self {
            TargetGeometry::Hyperbolic => {
                self.inner(u, y, z) * self.inner(u, x, w) - self.inner(u, x, z) * self.inner(u, y, w)
            }
            TargetGeometry::Torus => C64::new(0.0, 0.0),
        }
    }

    /// The same tensor assembled from Christoffel symbols and their derivatives.
    pub fn riemann_from_christoffel(
        &self,
        u: C64,
        x: ComplexTangent,
        y: ComplexTangent,
        z: ComplexTangent,
        w: ComplexTangent,
    ) -> C64 {
        let gamma = self.christoffel(u);
        let dgamma = self.christoffel_derivative(u);
        let g = self.metric(u);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        // R(∂_i, ∂_j)∂_k = R^l_{ijk} ∂_l
                        let mut r = dgamma[i][l][j][k] - dgamma[j][l][i][k];
                        for m in 0..2 {
                            r += gamma[l][i][m] * gamma[m][j][k] - gamma[l][j][m] * gamma[m][i][k];
                        }
                        for n in 0..2 {
                            acc -= x[i] * y[j] * z[k] * w[n] * (r * g[l][n]);
                        }
                    }
                }
            }
        }
        acc
    }

    /// Hermitian sectional curvature
    /// `R(X,Y,X̄,Ȳ) / (‖X‖²‖Y‖² − |⟨X,Ȳ⟩|²)` with `‖X‖² = ⟨X,X̄⟩`.
    pub fn hermitian_sectional(&self, u: C64, x: ComplexTangent, y: ComplexTangent) -> Result<C64> {
        let nx = self.inner(u, x, conj(x)).re;
        let ny = self.inner(u, y, conj(y)).re;
        let cross = self.inner(u, x, conj(y)).norm_sqr();
        let den = nx * ny - cross;
        if !(den > 1e-12) {
            return Err(LabError::DegeneratePlane(format!(
                "Hermitian plane denominator {den:.3e} is not positive"
            )));
        }
        Ok(self.riemann(u, x, y, conj(x), conj(y)) / den)
    }
}

/// Deviations from the algebraic identities of the curvature tensor at one
/// point, relative to `ρ²·|X||Y||Z||W|`.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct TensorDefects {
    /// `R(X,Y,Z,W) + R(Y,X,Z,W)`.
    pub antisymmetry_front: f64,
    /// `R(X,Y,Z,W) + R(X,Y,W,Z)`.
    pub antisymmetry_back: f64,
    /// `R(X,Y,Z,W) − R(Z,W,X,Y)`.
    pub pair_symmetry: f64,
    /// `R(X,Y,Z,W) + R(Y,Z,X,W) + R(Z,X,Y,W)`.
    pub bianchi: f64,
    /// Closed form against the Christoffel assembly.
    pub closed_form: f64,
}

impl TensorDefects {
    pub fn max(&self) -> f64 {
        [self.antisymmetry_front, self.antisymmetry_back, self.pair_symmetry, self.bianchi, self.closed_form]
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// Entrywise maximum.
    pub fn merge(&self, o: &TensorDefects) -> TensorDefects {
        TensorDefects {
            antisymmetry_front: self.antisymmetry_front.max(o.antisymmetry_front),
            antisymmetry_back: self.antisymmetry_back.max(o.antisymmetry_back),
            pair_symmetry: self.pair_symmetry.max(o.pair_symmetry),
            bianchi: self.bianchi.max(o.bianchi),
            closed_form: self.closed_form.max(o.closed_form),
        }
    }
}

impl TargetGeometry {
    /// Identity defects of the Christoffel-assembled tensor on one quadruple.
    pub fn tensor_defects(
        &self,
        u: C64,
        x: ComplexTangent,
        y: ComplexTangent,
        z: ComplexTangent,
        w: ComplexTangent,
    ) -> TensorDefects {
        let norm = |v: ComplexTangent| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        let rho = self.conformal_factor(u).max(1.0);
        let scale = rho * rho * norm(x) * norm(y) * norm(z) * norm(w);
        let r = |a, b, c, d| self.riemann_from_christoffel(u, a, b, c, d);
        let base = r(x, y, z, w);
        let rel = |v: C64| if scale > 0.0 { v.norm() / scale } else { v.norm() };
        TensorDefects {
            antisymmetry_front: rel(base + r(y, x, z, w)),
            antisymmetry_back: rel(base + r(x, y, w, z)),
            pair_symmetry: rel(base - r(z, w, x, y)),
            bianchi: rel(base + r(y, z, x, w) + r(z, x, y, w)),
            closed_form: rel(base - self.riemann(u, x, y, z, w)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(a: f64, b: f64, c: f64, d: f64) -> ComplexTangent {
        [C64::new(a, b), C64::new(c, d)]
    }

    #[test]
    fn orthonormal_real_plane_at_origin() {
        let h = TargetGeometry::Hyperbolic;
        let s = 1.0 / metric_factor(C64::new(0.0, 0.0)).sqrt();
        let e1 = t(s, 0.0, 0.0, 0.0);
        let e2 = t(0.0, 0.0, s, 0.0);
        assert!((h.riemann(C64::new(0.0, 0.0), e1, e2, e1, e2) + 1.0).norm() < 1e-14);
        assert!((h.hermitian_sectional(C64::new(0.0, 0.0), e1, e2).unwrap() + 1.0).norm() < 1e-14);
    }

    #[test]
    fn flat_torus_is_zero() {
        let x = t(0.3, 0.1, -0.2, 0.5);
        let y = t(-0.1, 0.4, 0.7, 0.2);
        let g = TargetGeometry::Torus;
        assert_eq!(g.riemann(C64::new(0.1, 0.2), x, y, x, y), C64::new(0.0, 0.0));
        assert_eq!(g.hermitian_sectional(C64::new(0.1, 0.2), x, y).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn coordinate_formula_matches_closed_form() {
        let h = TargetGeometry::Hyperbolic;
        let u = C64::new(0.31, -0.42);
        let x = t(0.3, 0.1, -0.2, 0.5);
        let y = t(-0.1, 0.4, 0.7, 0.2);
        let z = t(0.9, -0.3, 0.1, 0.1);
        let w = t(0.2, 0.2, -0.6, 0.4);
        let a = h.riemann(u, x, y, z, w);
        let b = h.riemann_from_christoffel(u, x, y, z, w);
        assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()), "{a} vs {b}");
    }

    #[test]
    fn parallel_plane_is_degenerate() {
        let x = t(0.3, 0.1, -0.2, 0.5);
        let y = x.map(|c| c * C64::new(0.0, 2.0));
        assert!(matches!(
            TargetGeometry::Hyperbolic.hermitian_sectional(C64::new(0.0, 0.0), x, y),
            Err(LabError::DegeneratePlane(_))
        ));
    }
}
