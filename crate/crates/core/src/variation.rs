//! Energy as a function on the chart: finite-difference Levi forms, the
//! first and second variation formulas and the derived inequalities.

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{conj, ComplexTangent, TargetGeometry};
use crate::deformation::{check_in_chart, structure_at, TeichPoint};
use crate::error::{LabError, Result};
use crate::harmonic::{central_velocity, complex_velocity, richardson, EnergyModel, MapField, SolverOptions, SolverWorkspace, Target};
use crate::hyperbolic::{density_phi, C64};
use crate::mesh::{QuotientMesh, QUAD_BARY, QUAD_WEIGHT};
use crate::quad_diff::{BeltramiBasis, DIM};

pub type Hermitian3 = [[C64; DIM]; DIM];

/// Harmonic-map energy `z ↦ E(z)` for one target on one mesh and basis.
pub struct EnergyLandscape<'a> {
    pub mesh: &'a QuotientMesh,
    pub basis: &'a BeltramiBasis,
    pub workspace: &'a SolverWorkspace,
    pub options: SolverOptions,
    pub target: Target,
}

impl<'a> EnergyLandscape<'a> {
    /// Harmonic map at `z`; the disk target starts from `warm` or the identity.
    pub fn solve(&self, z: &TeichPoint, warm: Option<&MapField>) -> Result<MapField> {
        check_in_chart(z, self.basis.chart_radius)?;
        let structure = structure_at(z, self.basis)?;
        let model = EnergyModel::new(self.mesh, &structure, self.target, self.workspace.lumped.clone())?;
        match self.target {
            Target::Hyperbolic => {
                let identity;
                let start = match warm {
                    Some(m) => m,
                    None => {
                        identity = MapField::identity(self.mesh);
                        &identity
                    }
                };
                model.solve_hyperbolic(start, &self.options, self.workspace)
            }
            Target::Torus { .. } => model.solve_torus(self.workspace),
        }
    }

    /// Solves at every point in parallel, each warm-started from `warm`.
    pub fn solve_all(&self, points: &[TeichPoint], warm: Option<&MapField>) -> Result<Vec<MapField>> {
        points.par_iter().map(|z| self.solve(z, warm)).collect()
    }
}

/// Unit directions used by the polarized Levi stencil, in evaluation order:
/// `e_α` for each `α`, then `e_a ± e_b`, `e_a ± i e_b` for `a < b`.
pub fn levi_directions() -> Vec<TeichPoint> {
    let mut out: Vec<TeichPoint> = (0..DIM).map(TeichPoint::basis).collect();
    for a in 0..DIM {
        for b in a + 1..DIM {
            for s in [C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0)] {
                out.push(TeichPoint::basis(a).add(&TeichPoint::basis(b).scaled(s)));
            }
        }
    }
    out
}

/// The four points `z ± hζ`, `z ± ihζ`.
pub fn cross_points(z: &TeichPoint, zeta: &TeichPoint, h: f64) -> [TeichPoint; 4] {
    [C64::new(h, 0.0), C64::new(-h, 0.0), C64::new(0.0, h), C64::new(0.0, -h)].map(|s| z.add(&zeta.scaled(s)))
}

/// Every point needed for a Levi form at step `h` and `h/2`, center first.
pub fn levi_stencil(z: &TeichPoint, h: f64) -> Vec<TeichPoint> {
    let mut out = vec![*z];
    for step in [h, 0.5 * h] {
        for zeta in levi_directions() {
            out.extend(cross_points(z, &zeta, step));
        }
    }
    out
}

/// Samples of a chart function on a stencil, looked up by exact coordinates.
#[derive(Debug, Clone)]
pub struct StencilValues<T> {
    pub points: Vec<TeichPoint>,
    pub values: Vec<T>,
}

impl<T> StencilValues<T> {
    pub fn get(&self, z: &TeichPoint) -> Result<&T> {
        self.points
            .iter()
            .position(|p| p == z)
            .map(|i| &self.values[i])
            .ok_or_else(|| LabError::InvalidInput(format!("no sample at {:?}", z.0)))
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> StencilValues<U> {
        StencilValues {
            points: self.points.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }
}

/// Solves at every point of the Levi stencil around `z`.
pub fn solve_stencil(landscape: &EnergyLandscape, z: &TeichPoint, h: f64) -> Result<StencilValues<MapField>> {
    let points = levi_stencil(z, h);
    let center = landscape.solve(z, None)?;
    let rest = landscape.solve_all(&points[1..], Some(&center))?;
    let mut values = Vec::with_capacity(points.len());
    values.push(center);
    values.extend(rest);
    Ok(StencilValues { points, values })
}

/// Finite-difference Levi form with Richardson extrapolation and error bars.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeviForm {
    pub matrix: Hermitian3,
    pub coarse: Hermitian3,
    pub fine: Hermitian3,
    /// Entrywise `|L(h) − L(h/2)|`.
    pub error_bar: [[f64; DIM]; DIM],
    /// Frobenius norm of `L(h) − L(h/2)`.
    pub frobenius_error: f64,
    /// `∂f/∂z^α` at the center.
    pub gradient: [C64; DIM],
    pub gradient_error: [f64; DIM],
    pub eigenvalues: [f64; DIM],
    pub h: f64,
}

fn levi_at_step(z: &TeichPoint, h: f64, f: &impl Fn(&TeichPoint) -> Result<f64>) -> Result<Hermitian3> {
    let f0 = f(z)?;
    let quad = |zeta: &TeichPoint| -> Result<f64> {
        let mut acc = -4.0 * f0;
        for p in cross_points(z, zeta, h) {
            acc += f(&p)?;
        }
        Ok(acc / (4.0 * h * h))
    };
    let dirs = levi_directions();
    let mut m = [[C64::new(0.0, 0.0); DIM]; DIM];
    for a in 0..DIM {
        m[a][a] = C64::new(quad(&dirs[a])?, 0.0);
    }
    let mut k = DIM;
    for a in 0..DIM {
        for b in a + 1..DIM {
            let lp = quad(&dirs[k])?;
            let lm = quad(&dirs[k + 1])?;
            let lip = quad(&dirs[k + 2])?;
            let lim = quad(&dirs[k + 3])?;
            k += 4;
            let v = C64::new(lp - lm, lip - lim) * 0.25;
            m[a][b] = v;
            m[b][a] = v.conj();
        }
    }
    Ok(m)
}

fn gradient_at_step(z: &TeichPoint, h: f64, f: &impl Fn(&TeichPoint) -> Result<f64>) -> Result<[C64; DIM]> {
    let mut g = [C64::new(0.0, 0.0); DIM];
    for (a, ga) in g.iter_mut().enumerate() {
        let [p, m, ip, im] = cross_points(z, &TeichPoint::basis(a), h);
        let ds = (f(&p)? - f(&m)?) / (2.0 * h);
        let dt = (f(&ip)? - f(&im)?) / (2.0 * h);
        *ga = C64::new(ds, -dt) * 0.5;
    }
    Ok(g)
}

/// Eigenvalues of a Hermitian 3×3 matrix in ascending order.
pub fn hermitian_eigenvalues(m: &Hermitian3) -> [f64; DIM] {
    let mat = Matrix3::from_fn(|i, j| m[i][j]);
    let mut e: Vec<f64> = SymmetricEigen::new(mat).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    [e[0], e[1], e[2]]
}

pub fn frobenius(m: &Hermitian3) -> f64 {
    m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn difference(a: &Hermitian3, b: &Hermitian3) -> Hermitian3 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] - b[i][j]))
}

pub fn scaled(a: &Hermitian3, s: f64) -> Hermitian3 {
    a.map(|row| row.map(|z| z * s))
}

/// `‖a − b‖_F / ‖b‖_F`.
pub fn relative_frobenius(a: &Hermitian3, b: &Hermitian3) -> f64 {
    frobenius(&difference(a, b)) / frobenius(b)
}

/// Levi form of `f` at `z` from the polarized cross stencil at `h` and `h/2`.
pub fn levi_form(z: &TeichPoint, h: f64, f: impl Fn(&TeichPoint) -> Result<f64>) -> Result<LeviForm> {
    let coarse = levi_at_step(z, h, &f)?;
    let fine = levi_at_step(z, 0.5 * h, &f)?;
    let matrix: Hermitian3 = std::array::from_fn(|i| std::array::from_fn(|j| (fine[i][j] * 4.0 - coarse[i][j]) / 3.0));
    let error_bar = std::array::from_fn(|i| std::array::from_fn(|j| (coarse[i][j] - fine[i][j]).norm()));
    let g1 = gradient_at_step(z, h, &f)?;
    let g2 = gradient_at_step(z, 0.5 * h, &f)?;
    Ok(LeviForm {
        matrix,
        coarse,
        fine,
        error_bar,
        frobenius_error: frobenius(&difference(&coarse, &fine)),
        gradient: std::array::from_fn(|a| (g2[a] * 4.0 - g1[a]) / 3.0),
        gradient_error: std::array::from_fn(|a| (g1[a] - g2[a]).norm()),
        eigenvalues: hermitian_eigenvalues(&matrix),
        h,
    })
}

/// Levi form of a function of the energy, `f(z) = g(E(z))`, from stencil energies.
pub fn levi_of_energy(z: &TeichPoint, h: f64, energies: &StencilValues<f64>, g: impl Fn(f64) -> f64) -> Result<LeviForm> {
    levi_form(z, h, |p| energies.get(p).map(|&e| g(e)))
}

/// `−E·Levi(1/E) + E⁻²·∂E(∂E)*`, which equals `Levi(log E)`.
pub fn log_energy_from_inverse(energy: f64, inverse: &LeviForm, energy_levi: &LeviForm) -> Hermitian3 {
    let d = energy_levi.gradient;
    std::array::from_fn(|a| {
        std::array::from_fn(|b| inverse.matrix[a][b] * (-energy) + d[a] * d[b].conj() / (energy * energy))
    })
}

/// Map derivative `V_α = ∂u/∂z^α` at the stencil center, Richardson-extrapolated.
pub fn map_velocity(maps: &StencilValues<MapField>, alpha: usize, h: f64) -> Result<Vec<ComplexTangent>> {
    let center = &maps.values[0];
    let z = maps.points[0];
    let at_step = |step: f64| -> Result<Vec<ComplexTangent>> {
        let [p, m, ip, im] = cross_points(&z, &TeichPoint::basis(alpha), step);
        let ds = central_velocity(center, maps.get(&p)?, maps.get(&m)?, step);
        let dt = central_velocity(center, maps.get(&ip)?, maps.get(&im)?, step);
        Ok(complex_velocity(&ds, &dt))
    };
    Ok(richardson(&at_step(h)?, &at_step(0.5 * h)?))
}

/// First derivatives of the map at one triangle.
struct Jet {
    /// Map value at each quadrature point.
    u: [C64; 3],
    /// `u_v` and `u_v̄` per target component.
    du_v: ComplexTangent,
    du_vbar: ComplexTangent,
    area: f64,
}

fn jet(mesh: &QuotientMesh, values: &[C64], t: usize) -> Jet {
    let tri = mesh.triangles[t];
    let e = &mesh.elements[t];
    let w = tri.map(|i| values[i]);
    let dx: C64 = (0..3).map(|a| w[a] * e.grad[a][0]).sum();
    let dy: C64 = (0..3).map(|a| w[a] * e.grad[a][1]).sum();
    let i = C64::new(0.0, 1.0);
    let du_v = [(dx.re - i * dy.re) * 0.5, (dx.im - i * dy.im) * 0.5];
    Jet {
        u: QUAD_BARY.map(|l| w[0] * l[0] + w[1] * l[1] + w[2] * l[2]),
        du_v,
        du_vbar: conj(du_v),
        area: e.area,
    }
}

/// Hopf-differential pairing `−∫ μ_α h(u_v, u_v) √−1 dv∧dv̄` at the base point.
pub fn first_variation(mesh: &QuotientMesh, basis: &BeltramiBasis, map: &MapField) -> [C64; DIM] {
    let geom = map.target.geometry();
    let values = map.point_values(mesh);
    let per: Vec<[C64; DIM]> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let j = jet(mesh, &values, t);
            let mut acc = [C64::new(0.0, 0.0); DIM];
            for q in 0..3 {
                let hopf = geom.inner(j.u[q], j.du_v, j.du_v);
                for (a, x) in acc.iter_mut().enumerate() {
                    *x -= basis.mu_quad[3 * t + q][a] * hopf * (2.0 * j.area * QUAD_WEIGHT);
                }
            }
            acc
        })
        .collect();
    sum_rows(&per)
}

fn sum_rows<const N: usize>(rows: &[[C64; N]]) -> [C64; N] {
    let mut out = [C64::new(0.0, 0.0); N];
    for r in rows {
        for (o, x) in out.iter_mut().zip(r) {
            *o += x;
        }
    }
    out
}

/// Second variation split into its two integrals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SecondVariation {
    /// `2∫ h(W_α, W̄_β)` with `W_α = ∇_v̄ V_α − μ_α u_v`.
    pub gradient_term: Hermitian3,
    /// `−2∫ R(u_v, V_α, u_v̄, V̄_β)`.
    pub curvature_term: Hermitian3,
    pub total: Hermitian3,
}

/// `W_α` at the quadrature points of every triangle.
fn w_fields(mesh: &QuotientMesh, basis: &BeltramiBasis, map: &MapField, velocity: &[Vec<ComplexTangent>; DIM]) -> Vec<[[ComplexTangent; DIM]; 3]> {
    let geom = map.target.geometry();
    let values = map.point_values(mesh);
    let pushed: [Vec<ComplexTangent>; DIM] = std::array::from_fn(|a| {
        (0..mesh.points.len())
            .map(|i| map.push_tangent(mesh, i, velocity[a][mesh.dof[i]]))
            .collect()
    });
    (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let j = jet(mesh, &values, t);
            let tri = mesh.triangles[t];
            let e = &mesh.elements[t];
            std::array::from_fn(|q| {
                std::array::from_fn(|a| {
                    let vv = tri.map(|i| pushed[a][i]);
                    let v_at = field_at(&vv, QUAD_BARY[q]);
                    let dvbar: ComplexTangent = std::array::from_fn(|c| {
                        let dx: C64 = (0..3).map(|k| vv[k][c] * e.grad[k][0]).sum();
                        let dy: C64 = (0..3).map(|k| vv[k][c] * e.grad[k][1]).sum();
                        (dx + C64::new(0.0, 1.0) * dy) * 0.5
                    });
                    let cov = geom.covariant(j.u[q], dvbar, j.du_vbar, v_at);
                    let mu = basis.mu_quad[3 * t + q][a];
                    [cov[0] - mu * j.du_v[0], cov[1] - mu * j.du_v[1]]
                })
            })
        })
        .collect()
}

fn field_at(v: &[ComplexTangent; 3], lam: [f64; 3]) -> ComplexTangent {
    std::array::from_fn(|c| v[0][c] * lam[0] + v[1][c] * lam[1] + v[2][c] * lam[2])
}

/// Second variation at the base point from the map and its derivatives `V_α`.
pub fn second_variation(mesh: &QuotientMesh, basis: &BeltramiBasis, map: &MapField, velocity: &[Vec<ComplexTangent>; DIM]) -> SecondVariation {
    let geom = map.target.geometry();
    let values = map.point_values(mesh);
    let w = w_fields(mesh, basis, map, velocity);
    let pushed: [Vec<ComplexTangent>; DIM] = std::array::from_fn(|a| {
        (0..mesh.points.len())
            .map(|i| map.push_tangent(mesh, i, velocity[a][mesh.dof[i]]))
            .collect()
    });
    let zero = [[C64::new(0.0, 0.0); DIM]; DIM];
    let per: Vec<(Hermitian3, Hermitian3)> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let j = jet(mesh, &values, t);
            let tri = mesh.triangles[t];
            let mut grad = zero;
            let mut curv = zero;
            for q in 0..3 {
                let weight = 2.0 * j.area * QUAD_WEIGHT;
                let v: [ComplexTangent; DIM] = std::array::from_fn(|a| field_at(&tri.map(|i| pushed[a][i]), QUAD_BARY[q]));
                for a in 0..DIM {
                    for b in 0..DIM {
                        grad[a][b] += geom.inner(j.u[q], w[t][q][a], conj(w[t][q][b])) * (2.0 * weight);
                        if geom == TargetGeometry::Hyperbolic {
                            curv[a][b] -= geom.riemann(j.u[q], j.du_v, v[a], j.du_vbar, conj(v[b])) * (2.0 * weight);
                        }
                    }
                }
            }
            (grad, curv)
        })
        .collect();
    let mut gradient_term = zero;
    let mut curvature_term = zero;
    for (g, c) in &per {
        for a in 0..DIM {
            for b in 0..DIM {
                gradient_term[a][b] += g[a][b];
                curvature_term[a][b] += c[a][b];
            }
        }
    }
    let total = std::array::from_fn(|a| std::array::from_fn(|b| gradient_term[a][b] + curvature_term[a][b]));
    SecondVariation {
        gradient_term,
        curvature_term,
        total,
    }
}

/// Both sides of `|∂E(ξ)|² ≤ E · ∫ h(ξW, ξW̄) √−1 dv∧dv̄` for a direction `ξ`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CauchySchwarzSample {
    pub lhs: f64,
    pub rhs: f64,
}

/// Evaluates the Cauchy–Schwarz bound along each direction `ξ`.
pub fn cauchy_schwarz(
    mesh: &QuotientMesh,
    basis: &BeltramiBasis,
    map: &MapField,
    velocity: &[Vec<ComplexTangent>; DIM],
    directions: &[[C64; DIM]],
) -> Vec<CauchySchwarzSample> {
    let geom = map.target.geometry();
    let values = map.point_values(mesh);
    let d = first_variation(mesh, basis, map);
    let w = w_fields(mesh, basis, map, velocity);
    let energy = map.energy;
    directions
        .iter()
        .map(|xi| {
            let lhs = (0..DIM).map(|a| xi[a] * d[a]).sum::<C64>().norm_sqr();
            let per: Vec<f64> = (0..mesh.triangles.len())
                .map(|t| {
                    let j = jet(mesh, &values, t);
                    (0..3)
                        .map(|q| {
                            let xw: ComplexTangent = std::array::from_fn(|c| (0..DIM).map(|a| xi[a] * w[t][q][a][c]).sum());
                            geom.inner(j.u[q], xw, conj(xw)).re * 2.0 * j.area * QUAD_WEIGHT
                        })
                        .sum()
                })
                .collect();
            let integral: f64 = per.iter().sum();
            CauchySchwarzSample {
                lhs,
                rhs: energy * integral,
            }
        })
        .collect()
}

/// Energy density relative to the hyperbolic area form of the domain.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DensityStats {
    pub mean: f64,
    /// `max |e − mean| / mean` over quadrature points.
    pub max_deviation: f64,
    /// Discrete energy divided by `4π`.
    pub energy_over_area: f64,
}

/// Density `g(u_v, ū_v)/φ` at every quadrature point; for real target
/// coordinates it equals `(|u_v|² + |u_v̄|²)_h / (2φ)`.
pub fn energy_density(mesh: &QuotientMesh, map: &MapField) -> Vec<f64> {
    let geom = map.target.geometry();
    let values = map.point_values(mesh);
    (0..mesh.triangles.len())
        .flat_map(|t| {
            let j = jet(mesh, &values, t);
            let e = &mesh.elements[t];
            (0..3)
                .map(|q| {
                    let s = geom.inner(j.u[q], j.du_v, j.du_vbar).re + geom.inner(j.u[q], j.du_vbar, j.du_v).re;
                    s / (2.0 * density_phi(e.quad_points[q]))
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

pub fn density_stats(mesh: &QuotientMesh, map: &MapField, energy: f64) -> DensityStats {
    let d = energy_density(mesh, map);
    let area = mesh.hyperbolic_area();
    let mean = mesh.integrate(&d, crate::mesh::AreaForm::Hyperbolic) / area;
    let max_deviation = d.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max) / mean;
    DensityStats {
        mean,
        max_deviation,
        energy_over_area: energy / (4.0 * std::f64::consts::PI),
    }
}
