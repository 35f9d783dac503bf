//! Holomorphic quadratic differentials as truncated Poincaré series, the
//! harmonic Beltrami differentials `μ = conj(q)/φ`, and the Weil–Petersson
//! Gram matrix.

use std::sync::Arc;

use nalgebra::{Complex, Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fuchsian::{enumerate_ball, GroupBall, SurfaceGroup};
use crate::hyperbolic::{density_phi, C64};
use crate::mesh::{AreaForm, QuotientMesh};

/// Seed polynomials are `v^k` for `k < NUM_SEEDS`.
pub const NUM_SEEDS: usize = 5;

/// Basis size, `3g − 3` for genus 2.
pub const DIM: usize = 3;

/// Truncated Poincaré series `Θ_k(v) = Σ_γ γ′(v)² (γv)^k` over a group ball.
#[derive(Debug, Clone)]
pub struct PoincareSeries {
    pub radius: f64,
    /// `(a, b)` of each ball element, nearest first.
    terms: Vec<(C64, C64)>,
}

impl PoincareSeries {
    pub fn new(ball: &GroupBall) -> Self {
        PoincareSeries {
            radius: ball.radius,
            terms: ball.elements.iter().map(|g| (g.a, g.b)).collect(),
        }
    }

    pub fn enumerate(group: &SurfaceGroup, radius: f64, cap: usize) -> Result<Self> {
        Ok(Self::new(&enumerate_ball(group, radius, cap)?))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// All seed values `Θ_0(v), …, Θ_4(v)`.
    pub fn seeds(&self, v: C64) -> [C64; NUM_SEEDS] {
        let mut acc = [C64::new(0.0, 0.0); NUM_SEEDS];
        for &(a, b) in &self.terms {
            let den = b.conj() * v + a.conj();
            let inv = den.inv();
            let d = inv * inv;
            let w = (a * v + b) * inv;
            let mut term = d * d;
            for slot in acc.iter_mut() {
                *slot += term;
                term *= w;
            }
        }
        acc
    }
}

/// Seed values tabulated on the quadrature points and barycenters of a mesh.
#[derive(Debug, Clone)]
pub struct SeedTable {
    pub radius: f64,
    pub level: u32,
    /// Three entries per triangle, in triangle order.
    pub quad: Vec<[C64; NUM_SEEDS]>,
    pub bary: Vec<[C64; NUM_SEEDS]>,
}

impl SeedTable {
    /// Evaluates sector 0 directly and the other sectors through
    /// `Θ_k(e^{iθ}v) = e^{ikθ} Θ_k(v)` for the octagon rotation `θ = π/4`.
    pub fn on_mesh(series: &PoincareSeries, mesh: &QuotientMesh) -> Self {
        let n = mesh.sector_len();
        let sector0: Vec<([[C64; NUM_SEEDS]; 3], [C64; NUM_SEEDS])> = (0..n)
            .into_par_iter()
            .map(|t| {
                let e = &mesh.elements[t];
                (e.quad_points.map(|p| series.seeds(p)), series.seeds(e.barycenter))
            })
            .collect();
        let mut quad = Vec::with_capacity(3 * mesh.triangles.len());
        let mut bary = Vec::with_capacity(mesh.triangles.len());
        for s in 0..8 {
            let phases: [C64; NUM_SEEDS] =
                std::array::from_fn(|k| C64::from_polar(1.0, (k * s) as f64 * std::f64::consts::FRAC_PI_4));
            let rotate = |vals: &[C64; NUM_SEEDS]| -> [C64; NUM_SEEDS] { std::array::from_fn(|k| vals[k] * phases[k]) };
            for (q, b) in &sector0 {
                for vals in q {
                    quad.push(rotate(vals));
                }
                bary.push(rotate(b));
            }
        }
        SeedTable {
            radius: series.radius,
            level: mesh.level,
            quad,
            bary,
        }
    }
}

/// `q = Σ_k c_k Θ_k`, weight-4 automorphic and holomorphic.
#[derive(Debug, Clone)]
pub struct QuadraticDifferential {
    pub coefficients: [C64; NUM_SEEDS],
    pub series: Arc<PoincareSeries>,
}

impl QuadraticDifferential {
    pub fn eval(&self, v: C64) -> C64 {
        combine(&self.coefficients, &self.series.seeds(v))
    }

    /// Harmonic Beltrami differential `conj(q(v))/φ(v)`.
    pub fn beltrami(&self, v: C64) -> C64 {
        harmonic_beltrami(self.eval(v), v)
    }
}

fn combine(c: &[C64; NUM_SEEDS], seeds: &[C64; NUM_SEEDS]) -> C64 {
    c.iter().zip(seeds).map(|(a, b)| a * b).sum()
}

/// `μ(v) = ((1−|v|²)²/2) · conj(q)`.
#[inline]
pub fn harmonic_beltrami(q: C64, v: C64) -> C64 {
    q.conj() / density_phi(v)
}

/// Hermitian Gram matrix `G_{αβ̄} = ∫ μ_α conj(μ_β) √−1 φ dv∧dv̄`.
#[derive(Debug, Clone, Serialize)]
pub struct WpGram {
    /// Row-major `[re, im]` pairs.
    pub entries: Vec<Vec<[f64; 2]>>,
    pub level: u32,
    pub series_radius: f64,
}

impl WpGram {
    pub fn matrix(&self) -> Vec<Vec<C64>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|&[re, im]| C64::new(re, im)).collect())
            .collect()
    }

    pub fn as_matrix3(&self) -> Matrix3<Complex<f64>> {
        let m = self.matrix();
        Matrix3::from_fn(|i, j| m[i][j])
    }

    pub fn hermitian_defect(&self) -> f64 {
        let m = self.matrix();
        let mut worst: f64 = 0.0;
        for i in 0..m.len() {
            for j in 0..m.len() {
                worst = worst.max((m[i][j] - m[j][i].conj()).norm());
            }
        }
        worst
    }
}

/// Gram of arbitrary fields sampled at quadrature points.
pub fn gram_of(fields: &[Vec<C64>], mesh: &QuotientMesh) -> Vec<Vec<C64>> {
    let n = fields.len();
    let mut g = vec![vec![C64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in i..n {
            let prod: Vec<C64> = fields[i].iter().zip(&fields[j]).map(|(a, b)| a * b.conj()).collect();
            let v = mesh.integrate_complex(&prod, AreaForm::Hyperbolic);
            g[i][j] = v;
            g[j][i] = v.conj();
        }
        g[i][i] = C64::new(g[i][i].re, 0.0);
    }
    g
}

/// Weil–Petersson Gram of Beltrami fields sampled at quadrature points.
pub fn wp_gram(mu_quad: &[[C64; DIM]], mesh: &QuotientMesh, series_radius: f64) -> WpGram {
    let fields: Vec<Vec<C64>> = (0..DIM).map(|a| mu_quad.iter().map(|m| m[a]).collect()).collect();
    let g = gram_of(&fields, mesh);
    WpGram {
        entries: g.iter().map(|row| row.iter().map(|z| [z.re, z.im]).collect()).collect(),
        level: mesh.level,
        series_radius,
    }
}

/// Harmonic Beltrami basis of the chart together with its provenance.
#[derive(Debug, Clone)]
pub struct BeltramiBasis {
    pub q: Vec<QuadraticDifferential>,
    /// Selected seed exponents.
    pub seeds: Vec<usize>,
    /// Gram of the five raw seed differentials.
    pub seed_gram: Vec<Vec<C64>>,
    /// Global factor applied after orthonormalization so that every `sup|μ_α| ≤ 1`.
    pub scale: f64,
    /// `sup|μ_α|` after rescaling, sampled at quadrature points and barycenters.
    pub sup_mu: [f64; DIM],
    /// Largest `|z|_∞` with `sup|Σ z^α μ_α| ≤ 0.2`.
    pub chart_radius: f64,
    pub mu_quad: Vec<[C64; DIM]>,
    pub mu_bary: Vec<[C64; DIM]>,
    pub gram: WpGram,
    pub series_radius: f64,
    pub level: u32,
}

/// Relative threshold for accepting a seed in the pivoted selection.
const SEED_PIVOT_TOL: f64 = 1e-6;

/// Builds the WP-orthonormal basis from seeds `1, v, v², v³, v⁴`, taken in
/// order and kept when independent of those already selected.
pub fn basis(series: Arc<PoincareSeries>, mesh: &QuotientMesh) -> Result<BeltramiBasis> {
    let table = SeedTable::on_mesh(&series, mesh);
    basis_from_table(series, mesh, &table)
}

pub fn basis_from_table(series: Arc<PoincareSeries>, mesh: &QuotientMesh, table: &SeedTable) -> Result<BeltramiBasis> {
    let quad_points = mesh.quadrature_points();
    let seed_fields: Vec<Vec<C64>> = (0..NUM_SEEDS)
        .map(|k| {
            table
                .quad
                .iter()
                .zip(&quad_points)
                .map(|(s, &p)| harmonic_beltrami(s[k], p))
                .collect()
        })
        .collect();
    let seed_gram = gram_of(&seed_fields, mesh);
    let max_diag = (0..NUM_SEEDS).map(|k| seed_gram[k][k].re).fold(0.0, f64::max);

    let mut seeds: Vec<usize> = Vec::new();
    for k in 0..NUM_SEEDS {
        if seeds.len() == DIM {
            break;
        }
        let residual = schur_residual(&seed_gram, &seeds, k);
        if residual > SEED_PIVOT_TOL * max_diag {
            seeds.push(k);
        }
    }
    if seeds.len() < DIM {
        return Err(LabError::RankDeficient(format!(
            "only {} independent series among {NUM_SEEDS} seeds",
            seeds.len()
        )));
    }
    let sel = Matrix3::from_fn(|i, j| seed_gram[seeds[i]][seeds[j]]);
    let eig = SymmetricEigen::new(sel).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) || hi / lo > 1e6 {
        return Err(LabError::RankDeficient(format!(
            "selected seed Gram has condition number {:.3e}",
            hi / lo
        )));
    }
    // G = L L*, rows of L⁻¹ give μ-coefficients with identity Gram.
    let chol = sel
        .cholesky()
        .ok_or_else(|| LabError::RankDeficient("seed Gram is not positive definite".into()))?;
    let linv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| LabError::RankDeficient("seed Gram factor is singular".into()))?;

    let mu_coeff = |alpha: usize, vals: &[C64; NUM_SEEDS], v: C64| -> C64 {
        (0..DIM).map(|j| linv[(alpha, j)] * harmonic_beltrami(vals[seeds[j]], v)).sum()
    };
    let bary_points: Vec<C64> = mesh.elements.iter().map(|e| e.barycenter).collect();
    let mut mu_quad: Vec<[C64; DIM]> = table
        .quad
        .iter()
        .zip(&quad_points)
        .map(|(s, &p)| std::array::from_fn(|a| mu_coeff(a, s, p)))
        .collect();
    let mut mu_bary: Vec<[C64; DIM]> = table
        .bary
        .iter()
        .zip(&bary_points)
        .map(|(s, &p)| std::array::from_fn(|a| mu_coeff(a, s, p)))
        .collect();

    let sup = |a: usize, quad: &[[C64; DIM]], bary: &[[C64; DIM]]| {
        quad.iter().chain(bary).map(|m| m[a].norm()).fold(0.0, f64::max)
    };
    let raw_sup = (0..DIM).map(|a| sup(a, &mu_quad, &mu_bary)).fold(0.0, f64::max);
    let scale = if raw_sup > 1.0 { 1.0 / raw_sup } else { 1.0 };
    for m in mu_quad.iter_mut().chain(mu_bary.iter_mut()) {
        for x in m.iter_mut() {
            *x *= scale;
        }
    }
    let sup_mu: [f64; DIM] = std::array::from_fn(|a| sup(a, &mu_quad, &mu_bary));
    let total = mu_quad
        .iter()
        .chain(&mu_bary)
        .map(|m| m.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let chart_radius = 0.2 / total;

    // μ_α = Σ_j T_{αj} conj(Θ_j)/φ  ⇔  q_α = Σ_j conj(T_{αj}) Θ_j.
    let q = (0..DIM)
        .map(|a| {
            let mut coefficients = [C64::new(0.0, 0.0); NUM_SEEDS];
            for j in 0..DIM {
                coefficients[seeds[j]] = linv[(a, j)].conj() * scale;
            }
            QuadraticDifferential {
                coefficients,
                series: series.clone(),
            }
        })
        .collect();
    let gram = wp_gram(&mu_quad, mesh, series.radius);
    Ok(BeltramiBasis {
        q,
        seeds,
        seed_gram,
        scale,
        sup_mu,
        chart_radius,
        mu_quad,
        mu_bary,
        gram,
        series_radius: series.radius,
        level: mesh.level,
    })
}

/// Beltrami fields `conj(q_α)/φ` of fixed differentials at the quadrature
/// points of the table's mesh.
pub fn beltrami_from_table(q: &[QuadraticDifferential], mesh: &QuotientMesh, table: &SeedTable) -> Vec<[C64; DIM]> {
    table
        .quad
        .iter()
        .zip(mesh.quadrature_points())
        .map(|(s, p)| std::array::from_fn(|a| harmonic_beltrami(combine(&q[a].coefficients, s), p)))
        .collect()
}

/// `G_kk − g_kSᵀ G_SS⁻¹ g_kS`: squared norm of seed `k` orthogonal to `selected`.
fn schur_residual(g: &[Vec<C64>], selected: &[usize], k: usize) -> f64 {
    let m = selected.len();
    if m == 0 {
        return g[k][k].re;
    }
    let gs = nalgebra::DMatrix::from_fn(m, m, |i, j| g[selected[i]][selected[j]]);
    let gk = nalgebra::DVector::from_fn(m, |i, _| g[selected[i]][k]);
    match gs.cholesky() {
        Some(ch) => {
            let x = ch.solve(&gk);
            (g[k][k] - gk.dotc(&x)).re
        }
        None => 0.0,
    }
}

/// Numerical rank of a Hermitian Gram from its eigenvalues, relative to the largest.
pub fn numerical_rank(g: &[Vec<C64>], rel_tol: f64) -> usize {
    let n = g.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| g[i][j]);
    let eig = SymmetricEigen::new(m).eigenvalues;
    let max = eig.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    eig.iter().filter(|&&e| e > rel_tol * max).count()
}

/// Residual diagnostics of one quadratic differential.
#[derive(Debug, Clone, Serialize)]
pub struct HolomorphyResidual {
    /// Finite-difference `|∂̄q|` at sampled interior points, relative to `|∂q|`.
    pub interior: f64,
    /// Largest seam jump `|q(gx)g′(x)² − q(x)|/φ(x)` over glued boundary
    /// points, relative to `sup |q|/φ`.
    pub seam: f64,
    /// `max(interior, seam)`.
    pub total: f64,
}

/// The truncated series is holomorphic in the disk, so on the quotient its
/// `∂̄` is carried by the seam, where the section jumps by the automorphy
/// defect; the interior term guards the evaluator itself.
pub fn holomorphy_residual(q: &QuadraticDifferential, mesh: &QuotientMesh, group: &SurfaceGroup) -> HolomorphyResidual {
    let delta = 1e-4;
    let stride = (mesh.triangles.len() / 256).max(1);
    let samples: Vec<C64> = (0..mesh.triangles.len())
        .step_by(stride)
        .map(|t| mesh.elements[t].barycenter)
        .collect();
    let terms: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|&v| {
            let dx = q.eval(v + delta) - q.eval(v - delta);
            let dy = q.eval(v + C64::new(0.0, delta)) - q.eval(v - C64::new(0.0, delta));
            let i = C64::new(0.0, 1.0);
            let dbar = (dx + i * dy) / (4.0 * delta);
            let d = (dx - i * dy) / (4.0 * delta);
            let w = density_phi(v).powf(-1.5);
            ((dbar.norm() * w).powi(2), (d.norm() * w).powi(2))
        })
        .collect();
    let (num, den) = terms.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let interior = if den > 0.0 { (num / den).sqrt() } else { 0.0 };

    let mut scale: f64 = 0.0;
    for e in mesh.elements.iter().step_by(stride) {
        scale = scale.max(q.eval(e.barycenter).norm() / density_phi(e.barycenter));
    }
    let jumps: Vec<f64> = mesh
        .gluing
        .par_iter()
        .map(|g| {
            let x = mesh.points[g.point];
            let gm = group.generators[g.generator];
            let d = gm.derivative(x);
            let jump = q.eval(mesh.points[g.partner]) * d * d - q.eval(x);
            jump.norm() / density_phi(x)
        })
        .collect();
    let seam = if scale > 0.0 {
        jumps.iter().fold(0.0f64, |a, &b| a.max(b)) / scale
    } else {
        0.0
    };
    HolomorphyResidual {
        interior,
        seam,
        total: interior.max(seam),
    }
}

/// Largest `|q(gv)g′(v)² − q(v)|` over the given points and all generators.
pub fn automorphy_residual(q: &QuadraticDifferential, group: &SurfaceGroup, points: &[C64]) -> f64 {
    points
        .par_iter()
        .map(|&v| {
            let base = q.eval(v);
            group
                .generators
                .iter()
                .map(|g| {
                    let d = g.derivative(v);
                    (q.eval(g.apply(v)) * d * d - base).norm()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::{bolza_group, DEFAULT_BALL_CAP};
    use crate::hyperbolic::Mobius;

    #[test]
    fn identity_ball_gives_monomials() {
        let group = bolza_group();
        let series = PoincareSeries::enumerate(&group, 0.1, DEFAULT_BALL_CAP).unwrap();
        let v = C64::new(0.2, -0.3);
        let s = series.seeds(v);
        for (k, val) in s.iter().enumerate() {
            assert!((val - v.powu(k as u32)).norm() < 1e-15);
        }
    }

    #[test]
    fn rotation_character() {
        let group = bolza_group();
        let series = PoincareSeries::enumerate(&group, 8.0, DEFAULT_BALL_CAP).unwrap();
        let v = C64::new(0.17, 0.05);
        let r = Mobius::rotation(std::f64::consts::FRAC_PI_4);
        let a = series.seeds(v);
        let b = series.seeds(r.apply(v));
        for k in 0..NUM_SEEDS {
            let phase = C64::from_polar(1.0, k as f64 * std::f64::consts::FRAC_PI_4);
            assert!((b[k] - a[k] * phase).norm() < 1e-10 * (1.0 + a[k].norm()), "k={k}");
        }
    }

    #[test]
    fn beltrami_at_origin() {
        assert_eq!(harmonic_beltrami(C64::new(2.0, 1.0), C64::new(0.0, 0.0)), C64::new(1.0, -0.5));
        assert_eq!(harmonic_beltrami(C64::new(0.0, 0.0), C64::new(0.3, 0.1)), C64::new(0.0, 0.0));
    }

    #[test]
    fn schur_residual_of_dependent_seed_is_zero() {
        let one = C64::new(1.0, 0.0);
        let g = vec![vec![one * 2.0, one * 4.0], vec![one * 4.0, one * 8.0]];
        assert!(schur_residual(&g, &[0], 1).abs() < 1e-12);
        assert_eq!(numerical_rank(&g, 1e-10), 1);
    }
}
