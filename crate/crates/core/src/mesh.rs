//! Geodesic triangulation of the fundamental octagon with side gluing.
//!
//! Level 0 is the fan of 16 triangles joining the center to the corners and
//! side midpoints; each level splits every triangle into four using geodesic
//! edge midpoints. Triangles are stored sector by sector: triangle
//! `s·sector_len + t` is the image of triangle `t` under rotation by `sπ/4`.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fuchsian::{GroupElement, SurfaceGroup};
use crate::hyperbolic::{geodesic_midpoint, metric_factor, C64};
use crate::sparse::{SymmetricMatrix, SymmetricPattern};

/// Barycentric coordinates of the three interior quadrature points.
pub const QUAD_BARY: [[f64; 3]; 3] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];

/// Weight of each quadrature point relative to the triangle area.
pub const QUAD_WEIGHT: f64 = 1.0 / 3.0;

/// Euclidean data of a straight triangle in the disk coordinate.
#[derive(Debug, Clone, Copy)]
pub struct Element {
    pub area: f64,
    /// Gradients of the three barycentric hat functions.
    pub grad: [[f64; 2]; 3],
    pub quad_points: [C64; 3],
    pub barycenter: C64,
}

/// A boundary point on `side` sent by generator `generator` to `partner`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Gluing {
    pub point: usize,
    pub side: usize,
    pub partner: usize,
    pub generator: usize,
}

/// Which measure an integral is taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AreaForm {
    /// `√−1 φ dv∧dv̄ = 2φ dx dy`.
    Hyperbolic,
    /// `√−1 dv∧dv̄ = 2 dx dy`.
    Euclidean,
}

#[derive(Debug, Clone)]
pub struct QuotientMesh {
    pub level: u32,
    pub points: Vec<C64>,
    pub triangles: Vec<[usize; 3]>,
    pub elements: Vec<Element>,
    /// Octagon sides each point lies on (empty for interior points).
    pub point_sides: Vec<Vec<usize>>,
    pub gluing: Vec<Gluing>,
    /// Quotient vertex of each point.
    pub dof: Vec<usize>,
    /// `points[i] = transform[i] · points[representatives[dof[i]]]`.
    pub transform: Vec<GroupElement>,
    pub representatives: Vec<usize>,
    /// Number of undirected edges in the octagon triangulation.
    pub octagon_edges: usize,
    pub boundary_edges: usize,
}

fn element(points: &[C64], tri: [usize; 3]) -> Element {
    let [p0, p1, p2] = tri.map(|i| points[i]);
    let e1 = p1 - p0;
    let e2 = p2 - p0;
    let det = e1.re * e2.im - e1.im * e2.re;
    let area = 0.5 * det;
    // ∇λ_i is the edge opposite vertex i turned by a quarter turn, over twice the area.
    let edge = |a: C64, b: C64| {
        let d = b - a;
        [d.im / det, -d.re / det]
    };
    let grad = [edge(p2, p1), edge(p0, p2), edge(p1, p0)];
    let quad_points = QUAD_BARY.map(|w| p0 * w[0] + p1 * w[1] + p2 * w[2]);
    Element {
        area,
        grad,
        quad_points,
        barycenter: (p0 + p1 + p2) / 3.0,
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Builds the quotient mesh at refinement `level` (16·4^level triangles).
pub fn build_mesh(group: &SurfaceGroup, level: u32) -> Result<QuotientMesh> {
    if level > 9 {
        return Err(LabError::InvalidInput(format!(
            "mesh level {level} is beyond the supported range 0..=9"
        )));
    }
    let oct = &group.octagon;
    let mut points = vec![C64::new(0.0, 0.0)];
    let mut point_sides: Vec<Vec<usize>> = vec![vec![]];
    let corner0 = points.len();
    for j in 0..8 {
        points.push(oct.vertices[j]);
        point_sides.push(vec![j, (j + 1) % 8]);
    }
    let mid0 = points.len();
    for k in 0..8 {
        points.push(oct.side_midpoints[k]);
        point_sides.push(vec![k]);
    }
    let mut triangles = Vec::with_capacity(16 << (2 * level));
    let mut boundary: HashMap<(usize, usize), usize> = HashMap::new();
    for s in 0..8 {
        let prev = corner0 + (s + 7) % 8;
        let cur = corner0 + s;
        let mid = mid0 + s;
        triangles.push([0, prev, mid]);
        triangles.push([0, mid, cur]);
        boundary.insert(edge_key(prev, mid), s);
        boundary.insert(edge_key(mid, cur), s);
    }
    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next_boundary = HashMap::new();
        let mut refined = Vec::with_capacity(triangles.len() * 4);
        for tri in &triangles {
            let mut mids = [0usize; 3];
            for (slot, (a, b)) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])]
                .into_iter()
                .enumerate()
            {
                let key = edge_key(a, b);
                let m = *midpoints.entry(key).or_insert_with(|| {
                    points.push(geodesic_midpoint(points[key.0], points[key.1]));
                    let side = boundary.get(&key).copied();
                    point_sides.push(side.into_iter().collect());
                    if let Some(side) = side {
                        let m = points.len() - 1;
                        next_boundary.insert(edge_key(key.0, m), side);
                        next_boundary.insert(edge_key(m, key.1), side);
                    }
                    points.len() - 1
                });
                mids[slot] = m;
            }
            let [a, b, c] = *tri;
            let [mab, mbc, mca] = mids;
            refined.push([a, mab, mca]);
            refined.push([mab, b, mbc]);
            refined.push([mca, mbc, c]);
            refined.push([mab, mbc, mca]);
        }
        triangles = refined;
        boundary = next_boundary;
    }

    let elements: Vec<Element> = triangles.iter().map(|&t| element(&points, t)).collect();
    if let Some(t) = elements.iter().position(|e| e.area <= 0.0) {
        return Err(LabError::InvalidInput(format!(
            "triangle {t} has non-positive orientation"
        )));
    }

    let mut octagon_edges = std::collections::HashSet::new();
    for t in &triangles {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            octagon_edges.insert(edge_key(a, b));
        }
    }

    let gluing = glue(group, &points, &point_sides)?;
    let (dof, transform, representatives) = identify(group, &points, &gluing)?;
    Ok(QuotientMesh {
        level,
        points,
        triangles,
        elements,
        point_sides,
        gluing,
        dof,
        transform,
        representatives,
        octagon_edges: octagon_edges.len(),
        boundary_edges: boundary.len(),
    })
}

fn glue(group: &SurfaceGroup, points: &[C64], point_sides: &[Vec<usize>]) -> Result<Vec<Gluing>> {
    let mut by_side: Vec<Vec<usize>> = vec![Vec::new(); 8];
    for (i, sides) in point_sides.iter().enumerate() {
        for &k in sides {
            by_side[k].push(i);
        }
    }
    let mut gluing = Vec::new();
    for k in 0..8 {
        let generator = (k + 4) % 8;
        let g = group.generators[generator];
        for &i in &by_side[k] {
            let image = g.apply(points[i]);
            let (partner, dist) = by_side[generator]
                .iter()
                .map(|&j| (j, (points[j] - image).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .ok_or_else(|| LabError::InvalidInput(format!("side {generator} is empty")))?;
            if dist > 1e-9 {
                return Err(LabError::InvalidInput(format!(
                    "boundary point {i} on side {k} has no partner (gap {dist:.3e})"
                )));
            }
            gluing.push(Gluing {
                point: i,
                side: k,
                partner,
                generator,
            });
        }
    }
    Ok(gluing)
}

type Identification = (Vec<usize>, Vec<GroupElement>, Vec<usize>);

fn identify(group: &SurfaceGroup, points: &[C64], gluing: &[Gluing]) -> Result<Identification> {
    let n = points.len();
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for g in gluing {
        adjacency[g.point].push((g.partner, g.generator));
        adjacency[g.partner].push((g.point, (g.generator + 4) % 8));
    }
    let mut dof = vec![usize::MAX; n];
    let mut transform = vec![GroupElement::IDENTITY; n];
    let mut representatives = Vec::new();
    for start in 0..n {
        if dof[start] != usize::MAX {
            continue;
        }
        let id = representatives.len();
        representatives.push(start);
        dof[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for &(j, k) in &adjacency[i] {
                if dof[j] == usize::MAX {
                    dof[j] = id;
                    transform[j] = group.generator(k).compose(&transform[i]);
                    queue.push_back(j);
                }
            }
        }
    }
    for i in 0..n {
        let rep = points[representatives[dof[i]]];
        let err = (transform[i].mobius.apply(rep) - points[i]).norm();
        if err > 1e-9 {
            return Err(LabError::InvalidInput(format!(
                "identification of point {i} is inconsistent (error {err:.3e})"
            )));
        }
    }
    Ok((dof, transform, representatives))
}

impl QuotientMesh {
    pub fn num_dofs(&self) -> usize {
        self.representatives.len()
    }

    /// Triangles per rotation sector, `2·4^level`.
    pub fn sector_len(&self) -> usize {
        self.triangles.len() / 8
    }

    pub fn quotient_edges(&self) -> usize {
        self.octagon_edges - self.boundary_edges / 2
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_dofs() as i64 - self.quotient_edges() as i64 + self.triangles.len() as i64
    }

    /// All quadrature points, three per triangle in triangle order.
    pub fn quadrature_points(&self) -> Vec<C64> {
        self.elements.iter().flat_map(|e| e.quad_points).collect()
    }

    /// Integrates values given at quadrature points (layout of
    /// [`quadrature_points`](Self::quadrature_points)).
    pub fn integrate(&self, values: &[f64], form: AreaForm) -> f64 {
        assert_eq!(values.len(), 3 * self.elements.len());
        let per_triangle: Vec<f64> = self
            .elements
            .iter()
            .enumerate()
            .map(|(t, e)| {
                (0..3)
                    .map(|q| {
                        let w = match form {
                            AreaForm::Hyperbolic => metric_factor(e.quad_points[q]),
                            AreaForm::Euclidean => 2.0,
                        };
                        w * values[3 * t + q]
                    })
                    .sum::<f64>()
                    * QUAD_WEIGHT
                    * e.area
            })
            .collect();
        pairwise_sum(&per_triangle)
    }

    /// Complex version of [`integrate`](Self::integrate).
    pub fn integrate_complex(&self, values: &[C64], form: AreaForm) -> C64 {
        let re: Vec<f64> = values.iter().map(|v| v.re).collect();
        let im: Vec<f64> = values.iter().map(|v| v.im).collect();
        C64::new(self.integrate(&re, form), self.integrate(&im, form))
    }

    /// Quadrature of the hyperbolic area of the octagon.
    pub fn hyperbolic_area(&self) -> f64 {
        self.integrate(&vec![1.0; 3 * self.elements.len()], AreaForm::Hyperbolic)
    }

    /// Hyperbolic area lumped to quotient vertices.
    pub fn lumped_area(&self) -> Vec<f64> {
        let mut mass = vec![0.0; self.num_dofs()];
        for (t, e) in self.elements.iter().enumerate() {
            let a = e.area * QUAD_WEIGHT * e.quad_points.iter().map(|&p| metric_factor(p)).sum::<f64>();
            for &i in &self.triangles[t] {
                mass[self.dof[i]] += a / 3.0;
            }
        }
        mass
    }

    /// Smallest Euclidean interior angle over all triangles, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        let mut best = f64::INFINITY;
        for t in &self.triangles {
            for k in 0..3 {
                let p = self.points[t[k]];
                let a = self.points[t[(k + 1) % 3]] - p;
                let b = self.points[t[(k + 2) % 3]] - p;
                best = best.min((a.conj() * b).arg().abs().to_degrees());
            }
        }
        best
    }

    /// Largest distance between a glued point's image and its partner.
    pub fn gluing_residual(&self, group: &SurfaceGroup) -> f64 {
        self.gluing
            .iter()
            .map(|g| (group.generators[g.generator].apply(self.points[g.point]) - self.points[g.partner]).norm())
            .fold(0.0, f64::max)
    }

    /// Local stiffness matrix `A·∇λ_aᵀ K ∇λ_b` with `K = √det M · M⁻¹`,
    /// `M = (m11, m12, m22)`.
    pub fn local_stiffness(&self, t: usize, m: [f64; 3]) -> Result<[[f64; 3]; 3]> {
        let det = m[0] * m[2] - m[1] * m[1];
        if !(det > 1e-12) || !(m[0] > 0.0) {
            return Err(LabError::DegenerateMetric(format!(
                "conformal tensor on triangle {t} has determinant {det:.3e}"
            )));
        }
        let s = det.sqrt();
        let k = [m[2] / s, -m[1] / s, m[0] / s];
        let e = &self.elements[t];
        let mut out = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let ga = e.grad[a];
                let gb = e.grad[b];
                out[a][b] = e.area
                    * (ga[0] * (k[0] * gb[0] + k[1] * gb[1]) + ga[1] * (k[1] * gb[0] + k[2] * gb[1]));
            }
        }
        Ok(out)
    }

    /// Sparsity pattern of the scalar operator on quotient vertices.
    pub fn scalar_pattern(&self) -> SymmetricPattern {
        SymmetricPattern::from_entries(
            self.num_dofs(),
            self.triangles.iter().flat_map(|t| {
                let d = t.map(|i| self.dof[i]);
                (0..3).flat_map(move |a| (0..3).map(move |b| (d[a], d[b])))
            }),
        )
    }

    /// Assembles the scalar Dirichlet operator `Σ_t A ∇λᵀK∇λ` on quotient
    /// vertices for per-triangle conformal tensors.
    pub fn assemble_stiffness(&self, tensors: &[[f64; 3]]) -> Result<SymmetricMatrix> {
        if tensors.len() != self.triangles.len() {
            return Err(LabError::InvalidInput(format!(
                "expected {} tensors, got {}",
                self.triangles.len(),
                tensors.len()
            )));
        }
        let pattern = std::sync::Arc::new(self.scalar_pattern());
        let mut matrix = SymmetricMatrix::zeros(pattern);
        for (t, tri) in self.triangles.iter().enumerate() {
            let local = self.local_stiffness(t, tensors[t])?;
            let d = tri.map(|i| self.dof[i]);
            for a in 0..3 {
                for b in 0..3 {
                    if d[a] >= d[b] {
                        matrix.add(d[a], d[b], local[a][b]);
                    }
                }
            }
        }
        Ok(matrix)
    }

    /// Plain-text dump: vertex table, triangle table, gluing table.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# quotient mesh level {}", self.level);
        let _ = writeln!(out, "vertices {}", self.points.len());
        for (i, p) in self.points.iter().enumerate() {
            let _ = writeln!(out, "{i} {:.17e} {:.17e} {}", p.re, p.im, self.dof[i]);
        }
        let _ = writeln!(out, "triangles {}", self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            let _ = writeln!(out, "{t} {} {} {}", tri[0], tri[1], tri[2]);
        }
        let _ = writeln!(out, "gluing {}", self.gluing.len());
        for g in &self.gluing {
            let _ = writeln!(out, "{} {} {} {}", g.point, g.side, g.partner, g.generator);
        }
        out
    }

    /// Summary counts for reporting.
    pub fn summary(&self, group: &SurfaceGroup) -> MeshSummary {
        let area = self.hyperbolic_area();
        let exact = 4.0 * std::f64::consts::PI;
        let mut sides = BTreeMap::new();
        for g in &self.gluing {
            *sides.entry(g.side).or_insert(0usize) += 1;
        }
        MeshSummary {
            level: self.level,
            octagon_vertices: self.points.len(),
            quotient_vertices: self.num_dofs(),
            quotient_edges: self.quotient_edges(),
            triangles: self.triangles.len(),
            euler_characteristic: self.euler_characteristic(),
            hyperbolic_area: area,
            area_relative_error: (area - exact).abs() / exact,
            min_angle_degrees: self.min_angle_degrees(),
            gluing_residual: self.gluing_residual(group),
            boundary_points_per_side: sides.into_values().collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshSummary {
    pub level: u32,
    pub octagon_vertices: usize,
    pub quotient_vertices: usize,
    pub quotient_edges: usize,
    pub triangles: usize,
    pub euler_characteristic: i64,
    pub hyperbolic_area: f64,
    pub area_relative_error: f64,
    pub min_angle_degrees: f64,
    pub gluing_residual: f64,
    pub boundary_points_per_side: Vec<usize>,
}

/// Fixed-order pairwise summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::bolza_group;
    use std::f64::consts::PI;

    #[test]
    fn level_zero_counts() {
        let mesh = build_mesh(&bolza_group(), 0).unwrap();
        assert_eq!(mesh.triangles.len(), 16);
        assert_eq!(mesh.num_dofs(), 6);
        assert_eq!(mesh.quotient_edges(), 24);
        assert_eq!(mesh.euler_characteristic(), -2);
    }

    #[test]
    fn euler_characteristic_every_level() {
        let group = bolza_group();
        for level in 0..=4 {
            let mesh = build_mesh(&group, level).unwrap();
            assert_eq!(mesh.triangles.len(), 16 << (2 * level));
            assert_eq!(mesh.euler_characteristic(), -2, "level {level}");
            assert!(mesh.gluing_residual(&group) < 1e-10);
        }
    }

    #[test]
    fn corners_collapse_to_one_vertex() {
        let mesh = build_mesh(&bolza_group(), 2).unwrap();
        let corner_dofs: std::collections::HashSet<usize> = (1..9).map(|i| mesh.dof[i]).collect();
        assert_eq!(corner_dofs.len(), 1);
    }

    #[test]
    fn sectors_are_rotations() {
        let mesh = build_mesh(&bolza_group(), 2).unwrap();
        let n = mesh.sector_len();
        for s in 0..8 {
            let rot = C64::from_polar(1.0, s as f64 * PI / 4.0);
            for t in 0..n {
                for q in 0..3 {
                    let a = mesh.elements[t].quad_points[q] * rot;
                    let b = mesh.elements[s * n + t].quad_points[q];
                    assert!((a - b).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn constant_integrates_to_zero_and_area_close() {
        let mesh = build_mesh(&bolza_group(), 3).unwrap();
        let zeros = vec![0.0; 3 * mesh.elements.len()];
        assert_eq!(mesh.integrate(&zeros, AreaForm::Hyperbolic), 0.0);
        assert!((mesh.hyperbolic_area() - 4.0 * PI).abs() / (4.0 * PI) < 2e-2);
    }

    #[test]
    fn degenerate_tensor_rejected() {
        let mesh = build_mesh(&bolza_group(), 0).unwrap();
        let err = mesh.local_stiffness(0, [1.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, LabError::DegenerateMetric(_)));
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-12);
    }
}
