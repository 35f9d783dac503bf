//! Poincaré disk geometry in the curvature −1 normalization.
//!
//! The conformal density is `φ(v) = 2/(1−|v|²)²`; the Riemannian metric in
//! real coordinates is `2φ·(dx² + dy²)` and the area form is `2φ dx dy`.
//! Tangent vectors handed to [`disk_exp`] / returned by [`disk_log`] are
//! expressed in the orthonormal frame at the base point, so their modulus is
//! the hyperbolic length.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

/// A point of the open unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint(pub C64);

impl DiskPoint {
    pub const ORIGIN: DiskPoint = DiskPoint(C64::new(0.0, 0.0));

    pub fn new(v: C64) -> Option<Self> {
        (v.norm_sqr() < 1.0).then_some(DiskPoint(v))
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        DiskPoint(C64::from_polar(r, theta))
    }

    #[inline]
    pub fn value(self) -> C64 {
        self.0
    }
}

/// `v ↦ (a v + b)/(b̄ v + ā)` with `|a|² − |b|² = 1`, defined up to a global sign.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Mobius {
    pub a: C64,
    pub b: C64,
}

impl Mobius {
    pub const IDENTITY: Mobius = Mobius {
        a: C64::new(1.0, 0.0),
        b: C64::new(0.0, 0.0),
    };

    /// Builds a transform and rescales it to unit pseudo-determinant.
    /// Returns `None` when `|a|² − |b|² ≤ 0` (not disk preserving).
    pub fn new(a: C64, b: C64) -> Option<Self> {
        let det = a.norm_sqr() - b.norm_sqr();
        if det <= 0.0 || !det.is_finite() {
            return None;
        }
        let s = det.sqrt();
        Some(Mobius { a: a / s, b: b / s })
    }

    /// Rotation `v ↦ e^{iθ} v`.
    pub fn rotation(theta: f64) -> Self {
        Mobius {
            a: C64::from_polar(1.0, theta / 2.0),
            b: C64::new(0.0, 0.0),
        }
    }

    /// Hyperbolic translation along the real axis moving the origin to `tanh(t/2)`.
    pub fn real_translation(t: f64) -> Self {
        Mobius {
            a: C64::new((t / 2.0).cosh(), 0.0),
            b: C64::new((t / 2.0).sinh(), 0.0),
        }
    }

    /// The disk automorphism sending `p` to the origin with positive derivative at `p`.
    pub fn to_origin(p: C64) -> Self {
        let s = (1.0 - p.norm_sqr()).sqrt();
        Mobius {
            a: C64::new(1.0 / s, 0.0),
            b: -p / s,
        }
    }

    #[inline]
    pub fn apply(&self, v: C64) -> C64 {
        (self.a * v + self.b) / (self.b.conj() * v + self.a.conj())
    }

    #[inline]
    pub fn apply_point(&self, p: DiskPoint) -> DiskPoint {
        DiskPoint(self.apply(p.0))
    }

    /// Complex derivative `1/(b̄ v + ā)²`.
    #[inline]
    pub fn derivative(&self, v: C64) -> C64 {
        let d = self.b.conj() * v + self.a.conj();
        (d * d).inv()
    }

    /// Second complex derivative `−2 b̄/(b̄ v + ā)³`.
    #[inline]
    pub fn second_derivative(&self, v: C64) -> C64 {
        let d = self.b.conj() * v + self.a.conj();
        -2.0 * self.b.conj() / (d * d * d)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Mobius) -> Mobius {
        // [[a, b], [b̄, ā]] matrix product keeps the same shape.
        let a = self.a * other.a + self.b * other.b.conj();
        let b = self.a * other.b + self.b * other.a.conj();
        Mobius { a, b }
    }

    pub fn inverse(&self) -> Mobius {
        Mobius {
            a: self.a.conj(),
            b: -self.b,
        }
    }

    pub fn pseudo_determinant(&self) -> f64 {
        self.a.norm_sqr() - self.b.norm_sqr()
    }

    /// Rescales to unit pseudo-determinant (guards rounding drift in long products).
    pub fn normalized(&self) -> Mobius {
        let s = self.pseudo_determinant().sqrt();
        Mobius {
            a: self.a / s,
            b: self.b / s,
        }
    }

    /// Max-norm matrix distance, minimized over the sign ambiguity.
    pub fn distance(&self, other: &Mobius) -> f64 {
        let plus = (self.a - other.a).norm().max((self.b - other.b).norm());
        let minus = (self.a + other.a).norm().max((self.b + other.b).norm());
        plus.min(minus)
    }

    pub fn approx_eq(&self, other: &Mobius, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    /// Translation length `2 arccosh |Re a|` (hyperbolic elements only).
    pub fn translation_length(&self) -> f64 {
        2.0 * self.a.re.abs().max(1.0).acosh()
    }

    /// Representative with `Re a > 0` (or `Im a > 0` when `Re a = 0`).
    pub fn canonical_sign(&self) -> Mobius {
        if self.a.re < 0.0 || (self.a.re == 0.0 && self.a.im < 0.0) {
            Mobius {
                a: -self.a,
                b: -self.b,
            }
        } else {
            *self
        }
    }
}

impl std::ops::Mul for Mobius {
    type Output = Mobius;
    fn mul(self, rhs: Mobius) -> Mobius {
        self.compose(&rhs)
    }
}

/// `φ_{vv̄}(v) = 2/(1−|v|²)²`.
#[inline]
pub fn density_phi(v: C64) -> f64 {
    let s = 1.0 - v.norm_sqr();
    2.0 / (s * s)
}

/// Conformal factor of the real metric, `ρ = 2φ = 4/(1−|v|²)²`.
#[inline]
pub fn metric_factor(v: C64) -> f64 {
    2.0 * density_phi(v)
}

/// Hyperbolic distance `2 artanh |(q−p)/(1−p̄q)|`.
pub fn hyperbolic_distance(p: C64, q: C64) -> f64 {
    let x = ((q - p) / (C64::new(1.0, 0.0) - p.conj() * q)).norm();
    2.0 * x.min(1.0).atanh()
}

/// Distance from the origin.
#[inline]
pub fn distance_from_origin(v: C64) -> f64 {
    2.0 * v.norm().atanh()
}

/// Exponential map at `p` of a frame tangent vector `xi` (|xi| = hyperbolic length).
pub fn disk_exp(p: C64, xi: C64) -> C64 {
    let s = xi.norm();
    if s == 0.0 {
        return p;
    }
    let at_origin = xi * ((s / 2.0).tanh() / s);
    Mobius::to_origin(p).inverse().apply(at_origin)
}

/// Inverse of [`disk_exp`]: the frame tangent vector at `p` pointing to `q`.
pub fn disk_log(p: C64, q: C64) -> C64 {
    let x = Mobius::to_origin(p).apply(q);
    let r = x.norm();
    if r == 0.0 {
        return C64::new(0.0, 0.0);
    }
    x * (2.0 * r.atanh() / r)
}

/// Converts a coordinate tangent vector at `p` to the orthonormal frame.
#[inline]
pub fn coord_to_frame(p: C64, w: C64) -> C64 {
    w * metric_factor(p).sqrt()
}

/// Converts a frame tangent vector at `p` to coordinates.
#[inline]
pub fn frame_to_coord(p: C64, xi: C64) -> C64 {
    xi / metric_factor(p).sqrt()
}

/// Geodesic midpoint of `p` and `q`.
pub fn geodesic_midpoint(p: C64, q: C64) -> C64 {
    disk_exp(p, disk_log(p, q) * 0.5)
}

/// Area `2π(cosh R − 1)` of a hyperbolic disk of radius `R`.
pub fn disk_area(radius: f64) -> f64 {
    2.0 * std::f64::consts::PI * (radius.cosh() - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{PI, SQRT_2};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn generator() -> Mobius {
        let ch = 1.0 + SQRT_2;
        Mobius::new(c(ch, 0.0), c((ch * ch - 1.0).sqrt(), 0.0)).unwrap()
    }

    #[test]
    fn identity_fixes_points() {
        assert_eq!(Mobius::IDENTITY.apply(c(0.3, 0.0)), c(0.3, 0.0));
        assert_eq!(Mobius::IDENTITY.derivative(c(0.3, 0.2)), c(1.0, 0.0));
    }

    #[test]
    fn generator_moves_origin() {
        // tanh(arccosh(1+√2)) evaluated independently
        let expected = (1.0 + SQRT_2).acosh().tanh();
        let g = generator();
        assert!((g.apply(c(0.0, 0.0)) - c(expected, 0.0)).norm() < 1e-14);
        assert!((expected - 0.91018).abs() < 1e-5);
        // 1/cosh² t
        let d = g.derivative(c(0.0, 0.0));
        assert!((d.re - 1.0 / (1.0 + SQRT_2).powi(2)).abs() < 1e-14);
        assert!((d.re - 0.17157).abs() < 1e-5);
        let dist = distance_from_origin(g.apply(c(0.0, 0.0)));
        assert!((dist - 2.0 * (1.0 + SQRT_2).acosh()).abs() < 1e-12);
        assert!((dist - 3.057142).abs() < 1e-6);
    }

    #[test]
    fn distances() {
        assert!((hyperbolic_distance(c(0.0, 0.0), c(0.5, 0.0)) - 3f64.ln()).abs() < 1e-14);
        assert_eq!(hyperbolic_distance(c(0.2, 0.1), c(0.2, 0.1)), 0.0);
    }

    #[test]
    fn density_values() {
        assert_eq!(density_phi(c(0.0, 0.0)), 2.0);
        assert!((density_phi(c(0.5, 0.0)) - 2.0 / 0.5625).abs() < 1e-14);
    }

    #[test]
    fn curvature_equation_by_finite_differences() {
        // ∂∂̄ = Δ/4; the 5-point Laplacian of log φ must reproduce φ to O(h²).
        let f = |v: C64| density_phi(v).ln();
        let mut prev = f64::INFINITY;
        for &h in &[1e-2, 5e-3, 2.5e-3] {
            let mut worst: f64 = 0.0;
            for &v in &[c(0.1, 0.2), c(-0.5, 0.3), c(0.7, -0.1)] {
                let lap = (f(v + h) + f(v - h) + f(v + c(0.0, h)) + f(v - c(0.0, h)) - 4.0 * f(v))
                    / (h * h);
                worst = worst.max((lap / 4.0 - density_phi(v)).abs() / density_phi(v));
            }
            assert!(worst < prev);
            prev = worst;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn hyperbolic_disk_area_by_quadrature() {
        // Radial integral of 2φ·r over r ∈ [0, tanh(R/2)] with composite Gauss–Legendre.
        let radius: f64 = 1.7;
        let rmax = (radius / 2.0).tanh();
        let nodes = [
            (-0.906179845938664, 0.236926885056189),
            (-0.538469310105683, 0.478628670499366),
            (0.0, 0.568888888888889),
            (0.538469310105683, 0.478628670499366),
            (0.906179845938664, 0.236926885056189),
        ];
        let panels = 200;
        let mut total = 0.0;
        for k in 0..panels {
            let lo = rmax * k as f64 / panels as f64;
            let hi = rmax * (k + 1) as f64 / panels as f64;
            for &(x, w) in &nodes {
                let r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
                total += 0.5 * (hi - lo) * w * 2.0 * density_phi(c(r, 0.0)) * r * 2.0 * PI;
            }
        }
        assert!((total - disk_area(radius)).abs() / disk_area(radius) < 1e-6);
    }

    #[test]
    fn exp_from_origin_along_real_axis() {
        let t: f64 = 1.3;
        assert!((disk_exp(c(0.0, 0.0), c(t, 0.0)) - c((t / 2.0).tanh(), 0.0)).norm() < 1e-15);
        assert!(disk_log(c(0.4, 0.1), c(0.4, 0.1)).norm() < 1e-14);
    }

    #[test]
    fn midpoint_is_equidistant() {
        let (p, q) = (c(0.3, -0.6), c(-0.2, 0.7));
        let m = geodesic_midpoint(p, q);
        let d = hyperbolic_distance(p, q);
        assert!((hyperbolic_distance(p, m) - d / 2.0).abs() < 1e-12);
        assert!((hyperbolic_distance(q, m) - d / 2.0).abs() < 1e-12);
    }

    fn disk_point() -> impl Strategy<Value = C64> {
        (0.0..0.95f64, 0.0..(2.0 * PI)).prop_map(|(r, t)| C64::from_polar(r, t))
    }

    fn mobius() -> impl Strategy<Value = Mobius> {
        (disk_point(), 0.0..(2.0 * PI)).prop_map(|(p, t)| {
            Mobius::rotation(t).compose(&Mobius::to_origin(p))
        })
    }

    proptest! {
        #[test]
        fn mobius_preserves_distance(g in mobius(), p in disk_point(), q in disk_point()) {
            let before = hyperbolic_distance(p, q);
            let after = hyperbolic_distance(g.apply(p), g.apply(q));
            prop_assert!((before - after).abs() < 1e-11 * (1.0 + before));
            prop_assert!(g.apply(p).norm() < 1.0);
        }

        #[test]
        fn compose_and_inverse_keep_unit_determinant(g in mobius(), h in mobius(), v in disk_point()) {
            prop_assert!((g.compose(&h).pseudo_determinant() - 1.0).abs() < 1e-12);
            prop_assert!((g.inverse().pseudo_determinant() - 1.0).abs() < 1e-12);
            let back = g.compose(&g.inverse()).apply(v);
            prop_assert!((back - v).norm() < 1e-13);
            let lhs = g.compose(&h).derivative(v);
            let rhs = g.derivative(h.apply(v)) * h.derivative(v);
            prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
            prop_assert!(g.compose(&h).inverse().approx_eq(&h.inverse().compose(&g.inverse()), 1e-10));
        }

        #[test]
        fn exp_log_round_trip(p in disk_point(), q in disk_point()) {
            let xi = disk_log(p, q);
            prop_assert!((xi.norm() - hyperbolic_distance(p, q)).abs() < 1e-9);
            prop_assert!((disk_exp(p, xi) - q).norm() < 1e-10);
        }

        #[test]
        fn second_derivative_matches_difference_quotient(g in mobius(), v in disk_point()) {
            let v = v * 0.9;
            let h = 1e-6;
            let fd = (g.derivative(v + h) - g.derivative(v - h)) / (2.0 * h);
            prop_assert!((fd - g.second_derivative(v)).norm() < 1e-5 * (1.0 + fd.norm()));
        }
    }
}
