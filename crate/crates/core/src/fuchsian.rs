//! The Bolza surface group: side pairings of the regular octagon with all
//! interior angles π/4, ball enumeration and reduction into the octagon.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI, SQRT_2};

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::hyperbolic::{disk_log, distance_from_origin, hyperbolic_distance, Mobius, C64};

/// Default element cap for [`enumerate_ball`].
pub const DEFAULT_BALL_CAP: usize = 2_000_000;

/// Abelianized class of a group element: exponents of `g₀..g₃`.
pub type AbelianClass = [i32; 4];

/// Adds the class of generator `k` (with `g_{k+4} = g_k⁻¹`) to `class`.
pub fn add_generator_class(class: &mut AbelianClass, k: usize) {
    if k < 4 {
        class[k] += 1;
    } else {
        class[k - 4] -= 1;
    }
}

/// A group element together with its image in H₁(Σ; ℤ).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GroupElement {
    pub mobius: Mobius,
    pub class: AbelianClass,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement {
        mobius: Mobius::IDENTITY,
        class: [0; 4],
    };

    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let mut class = self.class;
        for (c, o) in class.iter_mut().zip(other.class) {
            *c += o;
        }
        GroupElement {
            mobius: self.mobius.compose(&other.mobius),
            class,
        }
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            mobius: self.mobius.inverse(),
            class: self.class.map(|c| -c),
        }
    }
}

/// Side `side` of the octagon is the image of side `partner` under `transform`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SidePairing {
    pub side: usize,
    pub partner: usize,
    pub transform: Mobius,
}

/// Regular octagon centered at the origin; side `k` faces the ray at angle `kπ/4`.
#[derive(Debug, Clone, Serialize)]
pub struct FundamentalOctagon {
    /// Corner `j` sits at angle `(2j+1)π/8`; side `k` joins corners `k−1` and `k`.
    pub vertices: Vec<C64>,
    pub side_midpoints: Vec<C64>,
    pub inradius: f64,
    pub circumradius: f64,
}

impl FundamentalOctagon {
    fn regular() -> Self {
        // Inradius r: cosh r = cot(π/8) = 1+√2; circumradius R: cosh R = cot²(π/8).
        let cot = 1.0 + SQRT_2;
        let inradius = cot.acosh();
        let circumradius = (cot * cot).acosh();
        let vertices = (0..8)
            .map(|j| C64::from_polar((circumradius / 2.0).tanh(), (2 * j + 1) as f64 * FRAC_PI_8))
            .collect();
        let side_midpoints = (0..8)
            .map(|k| C64::from_polar((inradius / 2.0).tanh(), k as f64 * FRAC_PI_4))
            .collect();
        FundamentalOctagon {
            vertices,
            side_midpoints,
            inradius,
            circumradius,
        }
    }

    /// Interior angle at corner `j`, measured between the two geodesic sides.
    pub fn interior_angle(&self, j: usize) -> f64 {
        let c = self.vertices[j];
        let prev = self.vertices[(j + 7) % 8];
        let next = self.vertices[(j + 1) % 8];
        let a = disk_log(c, prev);
        let b = disk_log(c, next);
        (a.conj() * b).arg().abs()
    }

    /// Hyperbolic area from Gauss–Bonnet, `(n−2)π − Σ angles`.
    pub fn gauss_bonnet_area(&self) -> f64 {
        6.0 * PI - (0..8).map(|j| self.interior_angle(j)).sum::<f64>()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceGroup {
    pub generators: [Mobius; 8],
    pub genus: usize,
    pub pairing_table: Vec<SidePairing>,
    /// Generator indices `w` with `g_{w[n−1]} ∘ ⋯ ∘ g_{w[0]} = ±id`.
    pub relation: Vec<usize>,
    pub octagon: FundamentalOctagon,
}

/// Builds the Bolza group `g_k = Rot(kπ/4) ∘ T ∘ Rot(−kπ/4)` where `T` translates
/// along the real axis with `cosh(ℓ/2) = 1+√2`.
pub fn bolza_group() -> SurfaceGroup {
    let ch = 1.0 + SQRT_2;
    let t = Mobius {
        a: C64::new(ch, 0.0),
        b: C64::new((ch * ch - 1.0).sqrt(), 0.0),
    };
    let generators: [Mobius; 8] = std::array::from_fn(|k| {
        let r = Mobius::rotation(k as f64 * FRAC_PI_4);
        r.compose(&t).compose(&r.inverse()).canonical_sign()
    });
    let pairing_table = (0..8)
        .map(|k| SidePairing {
            side: k,
            partner: (k + 4) % 8,
            transform: generators[k],
        })
        .collect();
    let octagon = FundamentalOctagon::regular();
    let relation = vertex_cycle(&generators, &octagon);
    SurfaceGroup {
        generators,
        genus: 2,
        pairing_table,
        relation,
        octagon,
    }
}

/// Walks the corner cycle: send the current side to its partner, move to the
/// image corner, switch to the other side through it, until the start recurs.
fn vertex_cycle(generators: &[Mobius; 8], octagon: &FundamentalOctagon) -> Vec<usize> {
    let corner_index = |p: C64| -> usize {
        (0..8)
            .min_by(|&a, &b| {
                (octagon.vertices[a] - p)
                    .norm()
                    .total_cmp(&(octagon.vertices[b] - p).norm())
            })
            .unwrap()
    };
    let (start_corner, start_side) = (0usize, 0usize);
    let (mut corner, mut side) = (start_corner, start_side);
    let mut word = Vec::new();
    loop {
        // g_{side+4} maps side `side` onto side `side+4`.
        let k = (side + 4) % 8;
        word.push(k);
        let image = generators[k].apply(octagon.vertices[corner]);
        corner = corner_index(image);
        let arrived = (side + 4) % 8;
        // Corner j lies on sides j and j+1.
        side = if arrived == corner { (corner + 1) % 8 } else { corner };
        if corner == start_corner && side == start_side {
            break;
        }
        if word.len() > 64 {
            break;
        }
    }
    word
}

impl SurfaceGroup {
    pub fn generator(&self, k: usize) -> GroupElement {
        let mut class = [0; 4];
        add_generator_class(&mut class, k);
        GroupElement {
            mobius: self.generators[k],
            class,
        }
    }

    /// Product of the relation word as a transform.
    pub fn relation_product(&self) -> Mobius {
        self.relation
            .iter()
            .fold(Mobius::IDENTITY, |acc, &k| self.generators[k].compose(&acc))
    }

    /// Distance of the relation product to `±I`.
    pub fn relation_residual(&self) -> f64 {
        self.relation_product().distance(&Mobius::IDENTITY)
    }

    /// Closed-octagon membership with slack `tol` in the distance comparison.
    pub fn in_domain(&self, v: C64, tol: f64) -> bool {
        let d0 = distance_from_origin(v);
        self.generators
            .iter()
            .all(|g| distance_from_origin(g.apply(v)) >= d0 - tol)
    }

    /// Greedy reduction into the closed octagon; returns the reduced point and
    /// the word `w` with `v = g_{w[0]} ∘ g_{w[1]} ∘ ⋯ (reduced)`.
    pub fn reduce_to_domain(&self, v: C64) -> Result<(C64, Vec<usize>)> {
        if !(v.norm() < 1.0) {
            return Err(LabError::NonConvergence(format!(
                "point {v} is not inside the unit disk"
            )));
        }
        let mut x = v;
        let mut word = Vec::new();
        for _ in 0..10_000 {
            let current = x.norm();
            let (best_k, best) = (0..8)
                .map(|k| (k, self.generators[k].apply(x)))
                .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .unwrap();
            if best.norm() < current * (1.0 - 1e-13) - 1e-15 {
                x = best;
                // Applied g_k to x, so the previous point is g_{k+4}(x).
                word.push((best_k + 4) % 8);
            } else {
                return Ok((x, word));
            }
            if x.norm() >= 1.0 {
                break;
            }
        }
        Err(LabError::NonConvergence(format!(
            "greedy reduction of {v} stalled"
        )))
    }

    /// Applies the word returned by [`reduce_to_domain`](Self::reduce_to_domain).
    pub fn apply_word(&self, word: &[usize], p: C64) -> C64 {
        word.iter()
            .rev()
            .fold(p, |x, &k| self.generators[k].apply(x))
    }
}

/// Group elements `γ` with `d(0, γ·0) ≤ radius`, sorted by distance.
#[derive(Debug, Clone)]
pub struct GroupBall {
    pub elements: Vec<Mobius>,
    pub radius: f64,
}

impl GroupBall {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

fn bin_key(p: C64) -> (i64, i64) {
    ((p.re * 1e9).round() as i64, (p.im * 1e9).round() as i64)
}

/// Breadth-first closure over right multiplication by generators, pruned at
/// `radius`. Every non-identity element has a neighbor `γ g_k` strictly closer
/// to the origin (the octagon is the Dirichlet domain of 0), so pruning is exact.
///
/// Duplicates are detected through the orbit point `γ·0`: the group acts
/// freely, distinct elements move 0 to points at least a systole apart, and
/// the orbit point is far better conditioned than the matrix entries, whose
/// rounding grows like `e^{d/2}`.
pub fn enumerate_ball(group: &SurfaceGroup, radius: f64, cap: usize) -> Result<GroupBall> {
    if !(radius > 0.0) {
        return Err(LabError::InvalidInput(format!(
            "ball radius must be positive, got {radius}"
        )));
    }
    let mut elements = vec![Mobius::IDENTITY];
    let mut centers = vec![C64::new(0.0, 0.0)];
    let mut bins: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    bins.insert(bin_key(C64::new(0.0, 0.0)), vec![0]);
    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &idx in &frontier {
            let gamma = elements[idx];
            for g in &group.generators {
                let cand = gamma.compose(g).normalized().canonical_sign();
                let center = cand.apply(C64::new(0.0, 0.0));
                if distance_from_origin(center) > radius {
                    continue;
                }
                let (kx, ky) = bin_key(center);
                let mut seen = false;
                'outer: for dx in -1..=1 {
                    for dy in -1..=1 {
                        if let Some(list) = bins.get(&(kx + dx, ky + dy)) {
                            if list.iter().any(|&j| hyperbolic_distance(centers[j], center) < 1e-3) {
                                seen = true;
                                break 'outer;
                            }
                        }
                    }
                }
                if seen {
                    continue;
                }
                if elements.len() >= cap {
                    return Err(LabError::BudgetExceeded(format!(
                        "ball of radius {radius} exceeds {cap} elements"
                    )));
                }
                bins.entry((kx, ky)).or_default().push(elements.len());
                next.push(elements.len());
                elements.push(cand);
                centers.push(center);
            }
        }
        frontier = next;
    }
    let mut keyed: Vec<(f64, f64, Mobius)> = elements
        .into_iter()
        .map(|g| {
            let c = g.apply(C64::new(0.0, 0.0));
            (distance_from_origin(c), c.arg(), g)
        })
        .collect();
    keyed.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    Ok(GroupBall {
        elements: keyed.into_iter().map(|(_, _, g)| g).collect(),
        radius,
    })
}

/// Systole of the Bolza surface, `2 arccosh(1+√2)`.
pub fn systole() -> f64 {
    2.0 * (1.0 + SQRT_2).acosh()
}

/// Hyperbolic distance between two octagon corners after pairing (diagnostic).
pub fn pairing_edge_error(group: &SurfaceGroup) -> f64 {
    let oct = &group.octagon;
    let mut worst: f64 = 0.0;
    for p in &group.pairing_table {
        // side `partner` joins corners partner−1 and partner; both must land on side `side`.
        for j in [(p.partner + 7) % 8, p.partner] {
            let img = p.transform.apply(oct.vertices[j]);
            let best = oct
                .vertices
                .iter()
                .map(|&c| hyperbolic_distance(c, img))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
        let mid = p.transform.apply(oct.side_midpoints[p.partner]);
        worst = worst.max(hyperbolic_distance(mid, oct.side_midpoints[p.side]));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn generators_have_systole_translation_length() {
        let g = bolza_group();
        for m in &g.generators {
            assert!((m.translation_length() - 3.057142).abs() < 1e-6);
            assert!((m.pseudo_determinant() - 1.0).abs() < 1e-12);
        }
        let o = g.generators[0].apply(C64::new(0.0, 0.0));
        assert!((o.re - 0.91018).abs() < 1e-5 && o.im.abs() < 1e-15);
        for k in 0..4 {
            assert!(g.generators[k + 4].approx_eq(&g.generators[k].inverse(), 1e-12));
        }
    }

    #[test]
    fn relation_closes() {
        let g = bolza_group();
        assert_eq!(g.relation.len(), 8);
        assert!(g.relation_residual() < 1e-10, "{}", g.relation_residual());
        // Every generator pair appears once in each direction.
        let mut class = [0; 4];
        for &k in &g.relation {
            add_generator_class(&mut class, k);
        }
        assert_eq!(class, [0; 4]);
    }

    #[test]
    fn octagon_constants() {
        let g = bolza_group();
        let oct = &g.octagon;
        assert!((oct.vertices[0].norm() - 2f64.powf(-0.25)).abs() < 1e-12);
        for j in 0..8 {
            assert!((oct.interior_angle(j) - FRAC_PI_4).abs() < 1e-10);
        }
        assert!((oct.gauss_bonnet_area() - 4.0 * PI).abs() < 1e-9);
        assert!(pairing_edge_error(&g) < 1e-10);
    }

    #[test]
    fn small_balls() {
        let g = bolza_group();
        assert_eq!(enumerate_ball(&g, 0.1, DEFAULT_BALL_CAP).unwrap().len(), 1);
        assert_eq!(enumerate_ball(&g, 3.06, DEFAULT_BALL_CAP).unwrap().len(), 9);
        // brute force: nothing else below the systole in a larger ball
        let big = enumerate_ball(&g, 4.0, DEFAULT_BALL_CAP).unwrap();
        let below = big
            .elements
            .iter()
            .filter(|m| distance_from_origin(m.apply(C64::new(0.0, 0.0))) <= 3.06)
            .count();
        assert_eq!(below, 9);
    }

    #[test]
    fn ball_properties() {
        let g = bolza_group();
        let ball = enumerate_ball(&g, 7.0, DEFAULT_BALL_CAP).unwrap();
        assert!(ball.elements[0].approx_eq(&Mobius::IDENTITY, 1e-14));
        for (i, m) in ball.elements.iter().enumerate() {
            assert!((m.pseudo_determinant() - 1.0).abs() < 1e-12);
            assert!(distance_from_origin(m.apply(C64::new(0.0, 0.0))) <= 7.0 + 1e-9);
            let inv = m.inverse();
            assert!(ball.elements.iter().any(|x| x.approx_eq(&inv, 1e-8)));
            for other in &ball.elements[..i] {
                assert!(other.distance(m) > 1e-8);
            }
        }
        let next = enumerate_ball(&g, 8.0, DEFAULT_BALL_CAP).unwrap();
        let ratio = next.len() as f64 / ball.len() as f64;
        let e = std::f64::consts::E;
        assert!(ratio > e * 0.5 && ratio < e * 2.0, "ratio {ratio}");
    }

    #[test]
    fn large_ball_has_no_rounding_duplicates() {
        let g = bolza_group();
        let a = enumerate_ball(&g, 12.0, DEFAULT_BALL_CAP).unwrap().len() as f64;
        let b = enumerate_ball(&g, 13.0, DEFAULT_BALL_CAP).unwrap().len() as f64;
        let e = std::f64::consts::E;
        assert!(b / a > e * 0.5 && b / a < e * 2.0, "ratio {}", b / a);
    }

    #[test]
    fn ball_budget() {
        let g = bolza_group();
        assert!(matches!(
            enumerate_ball(&g, 8.0, 100),
            Err(LabError::BudgetExceeded(_))
        ));
    }

    #[test]
    fn reduction_examples() {
        let g = bolza_group();
        let v = C64::new(0.1, 0.05);
        assert_eq!(g.reduce_to_domain(v).unwrap(), (v, vec![]));
        let (p, w) = g.reduce_to_domain(g.generators[0].apply(C64::new(0.1, 0.0))).unwrap();
        assert!((p - C64::new(0.1, 0.0)).norm() < 1e-12);
        assert_eq!(w, vec![0]);
    }

    #[test]
    fn neighbors_do_not_overlap() {
        let g = bolza_group();
        for k in 0..8 {
            for i in 0..40 {
                let r = 0.6 * (i as f64 + 0.5) / 40.0;
                let p = C64::from_polar(r, 0.37 * i as f64);
                assert!(g.in_domain(p, 1e-12));
                let q = g.generators[k].apply(p);
                assert!(!g.in_domain(q, 1e-9));
            }
        }
    }

    proptest! {
        #[test]
        fn reduction_round_trip(r in 0.0..0.999f64, t in 0.0..(2.0 * PI)) {
            let g = bolza_group();
            let v = C64::from_polar(r, t);
            let (p, w) = g.reduce_to_domain(v).unwrap();
            prop_assert!(g.in_domain(p, 1e-9));
            prop_assert!((g.apply_word(&w, p) - v).norm() < 1e-9);
            let (again, w2) = g.reduce_to_domain(p).unwrap();
            prop_assert!(w2.is_empty());
            prop_assert_eq!(again, p);
        }
    }
}
