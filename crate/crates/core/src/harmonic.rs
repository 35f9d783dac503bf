//! Discrete Dirichlet energy of equivariant maps `(X₀, μ) → N` and the
//! harmonic-map solvers.
//!
//! Unknowns live on quotient vertices. A boundary copy `p` of a vertex with
//! value `U` carries `T_p(U)` for the hyperbolic target (identity
//! representation) and `U + c(p)` for the torus, where `c` is the period of
//! the homology class of the copy.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{ComplexTangent, TargetGeometry};
use crate::deformation::ConformalStructure;
use crate::error::{LabError, Result};
use crate::fuchsian::{AbelianClass, SurfaceGroup};
use crate::hyperbolic::{coord_to_frame, disk_exp, disk_log, frame_to_coord, metric_factor, Mobius, C64};
use crate::mesh::{pairwise_sum, QuotientMesh, QUAD_BARY, QUAD_WEIGHT};
use crate::sparse::{CholeskySolver, SymmetricMatrix, SymmetricPattern};

/// Maps within this distance of the unit circle are rejected.
pub const DISK_MARGIN: f64 = 1e-6;

/// Homotopy data of the map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Target {
    /// Disk target, equivariant for the identity representation.
    Hyperbolic,
    /// Flat torus `ℝ²/ℤ²`; `periods[j]` is the translation attached to `g_j`.
    Torus { periods: [C64; 4] },
}

impl Target {
    /// Torus class with period `(1, 0)` on the class of `g₀`.
    pub fn default_torus() -> Target {
        let mut periods = [C64::new(0.0, 0.0); 4];
        periods[0] = C64::new(1.0, 0.0);
        Target::Torus { periods }
    }

    pub fn geometry(&self) -> TargetGeometry {
        match self {
            Target::Hyperbolic => TargetGeometry::Hyperbolic,
            Target::Torus { .. } => TargetGeometry::Torus,
        }
    }

    fn offset(&self, class: &AbelianClass) -> C64 {
        match self {
            Target::Hyperbolic => C64::new(0.0, 0.0),
            Target::Torus { periods } => class.iter().zip(periods).map(|(&n, p)| p * n as f64).sum(),
        }
    }
}

/// Vertex values of a map together with solver metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapField {
    pub target: Target,
    /// One value per quotient vertex (target coordinate, `x + iy`).
    pub values: Vec<C64>,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Energy before each update and after the last one.
    pub energy_history: Vec<f64>,
}

impl MapField {
    /// The identity map (hyperbolic target).
    pub fn identity(mesh: &QuotientMesh) -> MapField {
        MapField::unsolved(
            Target::Hyperbolic,
            mesh.representatives.iter().map(|&i| mesh.points[i]).collect(),
        )
    }

    /// The constant map (torus target with the given periods).
    pub fn constant(mesh: &QuotientMesh, target: Target, value: C64) -> MapField {
        MapField::unsolved(target, vec![value; mesh.num_dofs()])
    }

    pub fn unsolved(target: Target, values: Vec<C64>) -> MapField {
        MapField {
            target,
            values,
            energy: f64::NAN,
            residual: f64::NAN,
            iterations: 0,
            energy_history: Vec::new(),
        }
    }

    /// Value carried by octagon point `i`.
    pub fn point_value(&self, mesh: &QuotientMesh, i: usize) -> C64 {
        let u = self.values[mesh.dof[i]];
        match self.target {
            Target::Hyperbolic => mesh.transform[i].mobius.apply(u),
            Target::Torus { .. } => u + self.target.offset(&mesh.transform[i].class),
        }
    }

    pub fn point_values(&self, mesh: &QuotientMesh) -> Vec<C64> {
        (0..mesh.points.len()).map(|i| self.point_value(mesh, i)).collect()
    }

    /// Pushes a tangent vector at the representative of point `i` to the copy `i`.
    pub fn push_tangent(&self, mesh: &QuotientMesh, i: usize, v: ComplexTangent) -> ComplexTangent {
        match self.target {
            Target::Hyperbolic => {
                let c = mesh.transform[i].mobius.derivative(self.values[mesh.dof[i]]);
                [c.re * v[0] - c.im * v[1], c.im * v[0] + c.re * v[1]]
            }
            Target::Torus { .. } => v,
        }
    }

    /// Largest mismatch between glued copies (zero by construction up to rounding).
    pub fn gluing_residual(&self, mesh: &QuotientMesh, group: &SurfaceGroup) -> f64 {
        mesh.gluing
            .iter()
            .map(|g| {
                let a = self.point_value(mesh, g.point);
                let b = self.point_value(mesh, g.partner);
                let image = match self.target {
                    Target::Hyperbolic => group.generators[g.generator].apply(a),
                    Target::Torus { .. } => a + self.target.offset(&group.generator(g.generator).class),
                };
                (image - b).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Which nonlinear iteration to use for the disk target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// Newton with the exact discrete Hessian, sparse Cholesky and Armijo backtracking.
    Newton,
    /// Mass-preconditioned Riemannian gradient descent with Armijo backtracking.
    GradientDescent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop when the residual (relative to `E`) falls below this.
    pub tol: f64,
    pub max_iterations: usize,
    pub method: SolverMethod,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iterations: 50,
            method: SolverMethod::Newton,
        }
    }
}

/// Energy functional of one conformal structure on one mesh.
pub struct EnergyModel<'a> {
    pub mesh: &'a QuotientMesh,
    pub target: Target,
    /// Per-triangle `A·∇λᵀK∇λ`.
    pub local: Vec<[[f64; 3]; 3]>,
    /// Lumped hyperbolic domain area per quotient vertex.
    pub lumped: Arc<Vec<f64>>,
    /// Points whose transform is not the identity.
    twisted: Vec<bool>,
}

/// Mesh-dependent data shared by every solve on that mesh.
#[derive(Debug, Clone)]
pub struct SolverWorkspace {
    pub lumped: Arc<Vec<f64>>,
    /// Block pattern of the disk-target Hessian (two unknowns per vertex).
    pub block_pattern: Arc<SymmetricPattern>,
    /// For each triangle, storage slots of the 36 local entries (`usize::MAX`
    /// for entries in the upper triangle).
    pub block_scatter: Arc<Vec<[usize; 36]>>,
    pub block_solver: Arc<CholeskySolver>,
    pub scalar_pattern: Arc<SymmetricPattern>,
    pub scalar_scatter: Arc<Vec<[usize; 9]>>,
    pub scalar_solver: Arc<CholeskySolver>,
}

impl SolverWorkspace {
    pub fn new(mesh: &QuotientMesh) -> Result<Self> {
        let scalar = mesh.scalar_pattern();
        let block = SymmetricPattern::from_entries(
            2 * mesh.num_dofs(),
            scalar.col_ptr.windows(2).enumerate().flat_map(|(c, w)| {
                let rows = &scalar.row_idx[w[0]..w[1]];
                rows.iter().flat_map(move |&r| {
                    (0..2).flat_map(move |a| (0..2).map(move |b| (2 * r + a, 2 * c + b)))
                })
            }),
        );
        let block_scatter: Vec<[usize; 36]> = mesh
            .triangles
            .iter()
            .map(|tri| {
                let d = tri.map(|i| mesh.dof[i]);
                let mut slots = [usize::MAX; 36];
                for a in 0..3 {
                    for c in 0..2 {
                        for b in 0..3 {
                            for e in 0..2 {
                                let (row, col) = (2 * d[a] + c, 2 * d[b] + e);
                                if row >= col {
                                    slots[(2 * a + c) * 6 + 2 * b + e] = block.position(row, col).expect("block pattern");
                                }
                            }
                        }
                    }
                }
                slots
            })
            .collect();
        let scalar_scatter: Vec<[usize; 9]> = mesh
            .triangles
            .iter()
            .map(|tri| {
                let d = tri.map(|i| mesh.dof[i]);
                let mut slots = [usize::MAX; 9];
                for a in 0..3 {
                    for b in 0..3 {
                        if d[a] >= d[b] {
                            slots[3 * a + b] = scalar.position(d[a], d[b]).expect("scalar pattern");
                        }
                    }
                }
                slots
            })
            .collect();
        let block = Arc::new(block);
        let scalar = Arc::new(scalar);
        Ok(SolverWorkspace {
            lumped: Arc::new(mesh.lumped_area()),
            block_solver: Arc::new(CholeskySolver::new(block.clone())?),
            block_pattern: block,
            block_scatter: Arc::new(block_scatter),
            scalar_solver: Arc::new(CholeskySolver::new(scalar.clone())?),
            scalar_pattern: scalar,
            scalar_scatter: Arc::new(scalar_scatter),
        })
    }
}

struct Evaluation {
    energy: f64,
    gradient: Vec<f64>,
    hessian: Option<SymmetricMatrix>,
}

/// Per-triangle contribution: energy, gradient and Hessian in the 6 local unknowns.
struct Local {
    energy: f64,
    grad: [f64; 6],
    hess: [[f64; 6]; 6],
}

impl<'a> EnergyModel<'a> {
    pub fn new(mesh: &'a QuotientMesh, structure: &ConformalStructure, target: Target, lumped: Arc<Vec<f64>>) -> Result<Self> {
        let local = (0..mesh.triangles.len())
            .map(|t| mesh.local_stiffness(t, structure.tensors[t]))
            .collect::<Result<Vec<_>>>()?;
        let twisted = mesh
            .transform
            .iter()
            .map(|g| g.class != [0; 4] || !g.mobius.approx_eq(&Mobius::IDENTITY, 0.0))
            .collect();
        Ok(EnergyModel {
            mesh,
            target,
            local,
            lumped,
            twisted,
        })
    }

    fn triangle_local(&self, t: usize, w: [C64; 3], hessian: bool) -> Local {
        let l = &self.local[t];
        let mut s = 0.0;
        let mut gs = [0.0; 6];
        for a in 0..3 {
            for b in 0..3 {
                s += 0.5 * l[a][b] * (w[a].re * w[b].re + w[a].im * w[b].im);
                gs[2 * a] += l[a][b] * w[b].re;
                gs[2 * a + 1] += l[a][b] * w[b].im;
            }
        }
        let mut hess = [[0.0; 6]; 6];
        if let Target::Torus { .. } = self.target {
            if hessian {
                for a in 0..3 {
                    for b in 0..3 {
                        hess[2 * a][2 * b] = l[a][b];
                        hess[2 * a + 1][2 * b + 1] = l[a][b];
                    }
                }
            }
            return Local { energy: s, grad: gs, hess };
        }
        let mut p = 0.0;
        let mut gp = [0.0; 6];
        let mut hp = [[0.0; 6]; 6];
        for lam in QUAD_BARY.iter() {
            let u = w[0] * lam[0] + w[1] * lam[1] + w[2] * lam[2];
            let sq = 1.0 - u.norm_sqr();
            let inv = 1.0 / sq;
            let inv2 = inv * inv;
            let inv3 = inv2 * inv;
            p += QUAD_WEIGHT * 4.0 * inv2;
            let uc = [u.re, u.im];
            for a in 0..3 {
                for c in 0..2 {
                    gp[2 * a + c] += QUAD_WEIGHT * lam[a] * 16.0 * uc[c] * inv3;
                }
            }
            if hessian {
                let inv4 = inv2 * inv2;
                for a in 0..3 {
                    for b in 0..3 {
                        let ll = QUAD_WEIGHT * lam[a] * lam[b];
                        for c in 0..2 {
                            for d in 0..2 {
                                let delta = if c == d { 16.0 * inv3 } else { 0.0 };
                                hp[2 * a + c][2 * b + d] += ll * (delta + 96.0 * uc[c] * uc[d] * inv4);
                            }
                        }
                    }
                }
            }
        }
        let mut grad = [0.0; 6];
        for i in 0..6 {
            grad[i] = s * gp[i] + p * gs[i];
        }
        if hessian {
            for i in 0..6 {
                for j in 0..6 {
                    let hs = if i % 2 == j % 2 { l[i / 2][j / 2] } else { 0.0 };
                    hess[i][j] = s * hp[i][j] + gs[i] * gp[j] + gp[i] * gs[j] + p * hs;
                }
            }
        }
        Local { energy: s * p, grad, hess }
    }

    /// Energy of a map.
    pub fn energy(&self, map: &MapField) -> f64 {
        self.energy_of(&map.values)
    }

    fn energy_of(&self, values: &[C64]) -> f64 {
        let map = MapField::unsolved(self.target, values.to_vec());
        let per: Vec<f64> = (0..self.mesh.triangles.len())
            .into_par_iter()
            .map(|t| {
                let w = self.mesh.triangles[t].map(|i| map.point_value(self.mesh, i));
                self.triangle_local(t, w, false).energy
            })
            .collect();
        pairwise_sum(&per)
    }

    fn evaluate(&self, values: &[C64], hessian: bool, ws: &SolverWorkspace) -> Evaluation {
        let mesh = self.mesh;
        let map = MapField::unsolved(self.target, values.to_vec());
        let hyperbolic = self.target == Target::Hyperbolic;
        // Per-point value, first and second derivative of the copy transform.
        let jets: Vec<(C64, C64, C64)> = (0..mesh.points.len())
            .map(|i| {
                let u = values[mesh.dof[i]];
                if hyperbolic && self.twisted[i] {
                    let m = mesh.transform[i].mobius;
                    (m.apply(u), m.derivative(u), m.second_derivative(u))
                } else {
                    (map.point_value(mesh, i), C64::new(1.0, 0.0), C64::new(0.0, 0.0))
                }
            })
            .collect();
        let locals: Vec<Local> = (0..mesh.triangles.len())
            .into_par_iter()
            .map(|t| {
                let w = mesh.triangles[t].map(|i| jets[i].0);
                self.triangle_local(t, w, hessian)
            })
            .collect();
        let n = mesh.num_dofs();
        let mut gradient = vec![0.0; 2 * n];
        let mut hess = hessian.then(|| SymmetricMatrix::zeros(ws.block_pattern.clone()));
        let energies: Vec<f64> = locals.iter().map(|l| l.energy).collect();
        for (t, loc) in locals.iter().enumerate() {
            let tri = mesh.triangles[t];
            // Real Jacobians of the copy transforms, [[re, −im], [im, re]].
            let jac: [[[f64; 2]; 2]; 3] = std::array::from_fn(|a| {
                let c = jets[tri[a]].1;
                [[c.re, -c.im], [c.im, c.re]]
            });
            let mut g_loc = [0.0; 6];
            for a in 0..3 {
                for c in 0..2 {
                    // Jᵀ g
                    g_loc[2 * a + c] = jac[a][0][c] * loc.grad[2 * a] + jac[a][1][c] * loc.grad[2 * a + 1];
                }
            }
            for a in 0..3 {
                let d = mesh.dof[tri[a]];
                gradient[2 * d] += g_loc[2 * a];
                gradient[2 * d + 1] += g_loc[2 * a + 1];
            }
            if let Some(h) = hess.as_mut() {
                let slots = &ws.block_scatter[t];
                for a in 0..3 {
                    for b in 0..3 {
                        // Jₐᵀ H_ab J_b
                        let mut blk = [[0.0; 2]; 2];
                        for c in 0..2 {
                            for e in 0..2 {
                                let mut acc = 0.0;
                                for x in 0..2 {
                                    for y in 0..2 {
                                        acc += jac[a][x][c] * loc.hess[2 * a + x][2 * b + y] * jac[b][y][e];
                                    }
                                }
                                blk[c][e] = acc;
                            }
                        }
                        if a == b && hyperbolic && self.twisted[tri[a]] {
                            let g = C64::new(loc.grad[2 * a], loc.grad[2 * a + 1]);
                            let cc = g.conj() * jets[tri[a]].2;
                            blk[0][0] += cc.re;
                            blk[0][1] -= cc.im;
                            blk[1][0] -= cc.im;
                            blk[1][1] -= cc.re;
                        }
                        for c in 0..2 {
                            for e in 0..2 {
                                let slot = slots[(2 * a + c) * 6 + 2 * b + e];
                                if slot != usize::MAX {
                                    h.values[slot] += blk[c][e];
                                }
                            }
                        }
                    }
                }
            }
        }
        Evaluation {
            energy: pairwise_sum(&energies),
            gradient,
            hessian: hess,
        }
    }

    /// Mass-weighted tension norm `sqrt(Σ |g_i|²/(ρ(u_i) m_i)) / E`.
    fn residual_of(&self, values: &[C64], gradient: &[f64], energy: f64) -> f64 {
        let geom = self.target.geometry();
        let sum: f64 = (0..values.len())
            .map(|i| {
                let g2 = gradient[2 * i].powi(2) + gradient[2 * i + 1].powi(2);
                g2 / (geom.conformal_factor(values[i]) * self.lumped[i])
            })
            .sum();
        if energy > 0.0 {
            sum.sqrt() / energy
        } else {
            sum.sqrt()
        }
    }

    /// Energy gradient with respect to the vertex values (`[re, im]` per vertex).
    pub fn gradient(&self, map: &MapField, ws: &SolverWorkspace) -> Vec<f64> {
        self.evaluate(&map.values, false, ws).gradient
    }

    /// Discrete tension norm of a map, relative to its energy.
    pub fn harmonic_residual(&self, map: &MapField, ws: &SolverWorkspace) -> f64 {
        let ev = self.evaluate(&map.values, false, ws);
        self.residual_of(&map.values, &ev.gradient, ev.energy)
    }

    /// Harmonic map into the disk in the identity class, starting from `initial`.
    pub fn solve_hyperbolic(&self, initial: &MapField, options: &SolverOptions, ws: &SolverWorkspace) -> Result<MapField> {
        if self.target != Target::Hyperbolic || initial.target != Target::Hyperbolic {
            return Err(LabError::InvalidInput("solve_hyperbolic needs the disk target".into()));
        }
        let mut values = initial.values.clone();
        check_disk(&values)?;
        let mut history = Vec::new();
        for iteration in 0..=options.max_iterations {
            let ev = self.evaluate(&values, options.method == SolverMethod::Newton, ws);
            let residual = self.residual_of(&values, &ev.gradient, ev.energy);
            history.push(ev.energy);
            if residual < options.tol {
                return Ok(MapField {
                    target: Target::Hyperbolic,
                    values,
                    energy: ev.energy,
                    residual,
                    iterations: iteration,
                    energy_history: history,
                });
            }
            if iteration == options.max_iterations {
                return Err(LabError::MaxIterationsExceeded(format!(
                    "residual {residual:.3e} after {iteration} iterations (tol {:.1e})",
                    options.tol
                )));
            }
            let mut direction = match (&ev.hessian, options.method) {
                (Some(h), SolverMethod::Newton) => newton_direction(h, &ev.gradient, ws)?,
                _ => self.preconditioned_descent(&values, &ev.gradient),
            };
            let mut slope: f64 = direction.iter().zip(&ev.gradient).map(|(d, g)| d * g).sum();
            if !(slope < 0.0) {
                direction = self.preconditioned_descent(&values, &ev.gradient);
                slope = direction.iter().zip(&ev.gradient).map(|(d, g)| d * g).sum();
            }
            values = self.line_search(&values, &direction, ev.energy, slope)?;
            check_disk(&values)?;
        }
        unreachable!("loop returns on its last iteration")
    }

    fn preconditioned_descent(&self, values: &[C64], gradient: &[f64]) -> Vec<f64> {
        let geom = self.target.geometry();
        let mut d = vec![0.0; gradient.len()];
        for i in 0..values.len() {
            let w = 1.0 / (geom.conformal_factor(values[i]) * self.lumped[i]);
            d[2 * i] = -gradient[2 * i] * w;
            d[2 * i + 1] = -gradient[2 * i + 1] * w;
        }
        d
    }

    fn line_search(&self, values: &[C64], direction: &[f64], energy: f64, slope: f64) -> Result<Vec<C64>> {
        let noise = 1e-13 * energy.abs().max(1.0);
        let mut t = 1.0;
        for _ in 0..40 {
            let trial: Vec<C64> = values
                .iter()
                .enumerate()
                .map(|(i, &u)| {
                    let step = C64::new(direction[2 * i], direction[2 * i + 1]) * t;
                    disk_exp(u, coord_to_frame(u, step))
                })
                .collect();
            if trial.iter().all(|u| u.norm() < 1.0 - DISK_MARGIN) {
                let e = self.energy_of(&trial);
                let armijo = e <= energy + 1e-4 * t * slope;
                // Below the rounding floor the predicted decrease is invisible.
                let flat = -t * slope < noise && e <= energy + noise;
                if armijo || flat {
                    return Ok(trial);
                }
            }
            t *= 0.5;
        }
        Err(LabError::LineSearchFailure(format!(
            "no sufficient decrease from E = {energy:.12e} (slope {slope:.3e})"
        )))
    }

    /// Harmonic map into the flat torus: one linear solve per component with
    /// vertex 0 pinned at the origin.
    pub fn solve_torus(&self, ws: &SolverWorkspace) -> Result<MapField> {
        if !matches!(self.target, Target::Torus { .. }) {
            return Err(LabError::InvalidInput("solve_torus needs the torus target".into()));
        }
        let mesh = self.mesh;
        let n = mesh.num_dofs();
        let zero = MapField::constant(mesh, self.target, C64::new(0.0, 0.0));
        let mut k = SymmetricMatrix::zeros(ws.scalar_pattern.clone());
        for (t, l) in self.local.iter().enumerate() {
            let slots = &ws.scalar_scatter[t];
            for a in 0..3 {
                for b in 0..3 {
                    let s = slots[3 * a + b];
                    if s != usize::MAX {
                        k.values[s] += l[a][b];
                    }
                }
            }
        }
        let pin = k.max_diagonal();
        k.add(0, 0, pin);
        let factor = ws.scalar_solver.factor(&k)?;
        let g0 = self.evaluate(&zero.values, false, ws).gradient;
        let rhs_x: Vec<f64> = (0..n).map(|i| -g0[2 * i]).collect();
        let rhs_y: Vec<f64> = (0..n).map(|i| -g0[2 * i + 1]).collect();
        let x = factor.solve(&rhs_x);
        let y = factor.solve(&rhs_y);
        let values: Vec<C64> = x.iter().zip(&y).map(|(&a, &b)| C64::new(a, b)).collect();
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(LabError::SolverDivergence("torus solve produced non-finite values".into()));
        }
        let ev = self.evaluate(&values, false, ws);
        let residual = self.residual_of(&values, &ev.gradient, ev.energy);
        Ok(MapField {
            target: self.target,
            values,
            energy: ev.energy,
            residual,
            iterations: 1,
            energy_history: vec![ev.energy],
        })
    }
}

fn newton_direction(h: &SymmetricMatrix, gradient: &[f64], ws: &SolverWorkspace) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = gradient.iter().map(|g| -g).collect();
    if let Ok(f) = ws.block_solver.factor(h) {
        return Ok(f.solve(&rhs));
    }
    let scale = h.max_diagonal();
    let mut shift = 1e-8 * scale;
    for _ in 0..12 {
        let mut shifted = h.clone();
        shifted.shift_diagonal(shift);
        if let Ok(f) = ws.block_solver.factor(&shifted) {
            return Ok(f.solve(&rhs));
        }
        shift *= 10.0;
    }
    Err(LabError::SolverDivergence(
        "Hessian stayed indefinite under diagonal shifts".into(),
    ))
}

fn check_disk(values: &[C64]) -> Result<()> {
    match values.iter().position(|u| !(u.norm() < 1.0 - DISK_MARGIN)) {
        Some(i) => Err(LabError::SolverDivergence(format!(
            "vertex {i} left the disk interior (|u| = {:.9})",
            values[i].norm()
        ))),
        None => Ok(()),
    }
}

/// Tangent field along `base` from central differences of maps at `±h`:
/// `(log(u₀,u₊) − log(u₀,u₋)) / 2h` in coordinates.
pub fn central_velocity(base: &MapField, plus: &MapField, minus: &MapField, h: f64) -> Vec<C64> {
    base.values
        .iter()
        .zip(plus.values.iter().zip(&minus.values))
        .map(|(&u0, (&up, &um))| match base.target {
            Target::Hyperbolic => {
                frame_to_coord(u0, disk_log(u0, up) - disk_log(u0, um)) / (2.0 * h)
            }
            Target::Torus { .. } => (up - um) / (2.0 * h),
        })
        .collect()
}

/// `∂u/∂z^α = (D_s − i D_t)/2` from the real and imaginary direction velocities.
pub fn complex_velocity(ds: &[C64], dt: &[C64]) -> Vec<ComplexTangent> {
    ds.iter()
        .zip(dt)
        .map(|(s, t)| {
            let i = C64::new(0.0, 1.0);
            [(s.re - i * t.re) * 0.5, (s.im - i * t.im) * 0.5]
        })
        .collect()
}

/// Richardson combination `(4·fine − coarse)/3` of second-order estimates.
pub fn richardson(coarse: &[ComplexTangent], fine: &[ComplexTangent]) -> Vec<ComplexTangent> {
    coarse
        .iter()
        .zip(fine)
        .map(|(c, f)| [(f[0] * 4.0 - c[0]) / 3.0, (f[1] * 4.0 - c[1]) / 3.0])
        .collect()
}

/// Identity check of the disk metric convention used by the energy.
#[inline]
pub fn target_density(u: C64) -> f64 {
    metric_factor(u)
}
