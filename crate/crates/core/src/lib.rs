//! Numerical kernels for energy functionals of harmonic maps over a local
//! Teichmüller chart of the Bolza surface.
//!
//! The surface is the regular octagon with opposite sides glued; complex
//! structures near the Bolza point are Beltrami deformations along harmonic
//! Beltrami differentials built from Poincaré series. Harmonic maps into a
//! hyperbolic disk or a flat torus are solved with piecewise-linear elements,
//! and finite-difference Levi forms of the energy are compared against the
//! closed-form variation formulas.

pub mod curvature;
pub mod deformation;
pub mod error;
pub mod fuchsian;
pub mod harmonic;
pub mod hyperbolic;
pub mod mesh;
pub mod quad_diff;
pub mod sparse;
pub mod variation;

pub use error::{LabError, Result};
pub use hyperbolic::C64;
