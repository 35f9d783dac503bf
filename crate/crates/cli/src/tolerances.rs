//! Acceptance tolerances. Every bound used by `verify` is defined here.

/// Relative error of the quadrature area against `4π`.
pub const AREA_REL: f64 = 1e-3;
/// Relative `∂̄` residual of each basis differential.
pub const HOLOMORPHY_REL: f64 = 1e-4;
/// Hermitian defect of the Gram matrix.
pub const GRAM_HERMITIAN: f64 = 1e-12;
/// Normalized off-diagonal of the raw seed Gram.
pub const SEED_OFF_DIAGONAL: f64 = 1e-2;
/// Gram change under one mesh refinement.
pub const GRAM_MESH_STABILITY: f64 = 1e-3;
/// Gram change when the series radius drops by 2.
pub const GRAM_RADIUS_STABILITY: f64 = 1e-2;
/// Series radius decrement for the stability and monotonicity checks.
pub const RADIUS_STEP: f64 = 2.0;
/// Harmonic residual of the solve started at the identity, relative to `E`.
pub const IDENTITY_GRADIENT: f64 = 1e-8;
/// Newton updates allowed from the identity at the base point.
pub const IDENTITY_ITERATIONS: f64 = 2.0;
/// `|∂E/∂z^α|` at the base point, relative to `E`.
pub const FD_GRADIENT: f64 = 1e-4;
/// First-variation integral at the holomorphic point, relative to `E`.
pub const HOLOMORPHIC_FIRST_VARIATION: f64 = 1e-6;
/// Relative Frobenius error of the Levi-form identities.
pub const LEVI_IDENTITY_REL: f64 = 0.05;
/// Spread of the identity-map energy density.
pub const DENSITY_SPREAD: f64 = 1e-6;
/// Mean density against `E/4π`.
pub const DENSITY_MEAN_REL: f64 = 1e-3;
/// First-variation formula against the FD derivative, per direction.
pub const FIRST_VARIATION_REL: f64 = 0.01;
/// Second-variation formula against the FD Levi form.
pub const SECOND_VARIATION_REL: f64 = 0.05;
/// Sign checks use `ε = EPS_FACTOR · error bar`.
pub const EPS_FACTOR: f64 = 3.0;
/// Chart points per target for the sign checks (base point included).
pub const PSH_POINTS: usize = 5;
/// Sample points lie in the polydisk of radius `PSH_RADIUS · r_max`.
pub const PSH_RADIUS: f64 = 0.5;
/// Cauchy–Schwarz slack factor.
pub const CAUCHY_SCHWARZ_SLACK: f64 = 1e-6;
pub const CAUCHY_SCHWARZ_DIRECTIONS: usize = 20;
/// Random planes for the curvature sign.
pub const CURVATURE_PLANES: usize = 1000;
/// Every hyperbolic `K_C` must lie below this.
pub const NEGATIVE_CURVATURE: f64 = -1e-6;
/// Curvature identities, relative.
pub const TENSOR_IDENTITY: f64 = 1e-10;
/// Sample points for the tensor identities lie in `|u| ≤ CURVATURE_DISK`.
pub const CURVATURE_DISK: f64 = 0.9;
