//! The acceptance criteria, evaluated on one configured lab.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teichlab_core::curvature::{ComplexTangent, TargetGeometry, TensorDefects};
use teichlab_core::deformation::TeichPoint;
use teichlab_core::fuchsian::DEFAULT_BALL_CAP;
use teichlab_core::harmonic::MapField;
use teichlab_core::mesh::build_mesh;
use teichlab_core::quad_diff::{beltrami_from_table, holomorphy_residual, wp_gram, PoincareSeries, QuadraticDifferential, DIM};
use teichlab_core::variation::{
    cauchy_schwarz, density_stats, first_variation, frobenius, hermitian_eigenvalues, levi_of_energy, levi_stencil,
    log_energy_from_inverse, map_velocity, relative_frobenius, scaled, second_variation, solve_stencil, Hermitian3, LeviForm,
    StencilValues,
};
use teichlab_core::C64;

use crate::error::CliError;
use crate::lab::{seed_table, Lab};
use crate::report::{Check, CriterionRecord, Status, VerificationReport};
use crate::tolerances as tol;

/// Levi forms of `E`, `log E` and `1/E` at one chart point.
struct PointForms {
    z: TeichPoint,
    energy: f64,
    energy_levi: LeviForm,
    log_levi: LeviForm,
    inverse_levi: LeviForm,
}

impl PointForms {
    fn from_energies(z: TeichPoint, h: f64, energies: &StencilValues<f64>) -> Result<PointForms, CliError> {
        Ok(PointForms {
            z,
            energy: *energies.get(&z)?,
            energy_levi: levi_of_energy(&z, h, energies, |e| e)?,
            log_levi: levi_of_energy(&z, h, energies, f64::ln)?,
            inverse_levi: levi_of_energy(&z, h, energies, |e| 1.0 / e)?,
        })
    }
}

/// Origin stencil of one target with the derived quantities.
struct OriginData {
    center: MapField,
    forms: PointForms,
    velocity: [Vec<ComplexTangent>; DIM],
}

struct Shared {
    hyperbolic: OriginData,
    torus: OriginData,
    /// Forms at the random sample points, per target.
    samples: Vec<(TargetGeometry, PointForms)>,
    /// Energies of the hyperbolic origin stencil, for the rerun check.
    hyperbolic_stencil: StencilValues<(f64, f64)>,
}

fn origin_data(lab: &Lab, geometry: TargetGeometry) -> Result<(OriginData, StencilValues<(f64, f64)>), CliError> {
    let h = lab.fd_h();
    let stencil = solve_stencil(&lab.landscape(geometry), &TeichPoint::ORIGIN, h)?;
    let energies = stencil.map(|m| m.energy);
    let forms = PointForms::from_energies(TeichPoint::ORIGIN, h, &energies)?;
    let velocity = [0, 1, 2].map(|a| map_velocity(&stencil, a, h));
    let [v0, v1, v2] = velocity;
    let summary = stencil.map(|m| (m.energy, m.residual));
    let mut values = stencil.values;
    Ok((
        OriginData {
            center: values.swap_remove(0),
            forms,
            velocity: [v0?, v1?, v2?],
        },
        summary,
    ))
}

/// Random chart points in the polydisk of radius `PSH_RADIUS · r_max`.
fn sample_points(lab: &Lab) -> Vec<TeichPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(lab.config.seed);
    let radius = tol::PSH_RADIUS * lab.chart_radius();
    (1..tol::PSH_POINTS)
        .map(|_| {
            TeichPoint(std::array::from_fn(|_| {
                let r = radius * rng.gen::<f64>().sqrt();
                C64::from_polar(r, 2.0 * PI * rng.gen::<f64>())
            }))
        })
        .collect()
}

fn shared(lab: &Lab) -> Result<Shared, CliError> {
    let (hyperbolic, hyperbolic_stencil) = origin_data(lab, TargetGeometry::Hyperbolic)?;
    let (torus, _) = origin_data(lab, TargetGeometry::Torus)?;
    let h = lab.fd_h();
    let mut samples = Vec::new();
    for geometry in [TargetGeometry::Hyperbolic, TargetGeometry::Torus] {
        for z in sample_points(lab) {
            let energies = solve_stencil(&lab.landscape(geometry), &z, h)?.map(|m| m.energy);
            samples.push((geometry, PointForms::from_energies(z, h, &energies)?));
        }
    }
    Ok(Shared {
        hyperbolic,
        torus,
        samples,
        hyperbolic_stencil,
    })
}

fn gram3(m: &[Vec<C64>]) -> Hermitian3 {
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][j]))
}

fn name_of(g: TargetGeometry) -> &'static str {
    match g {
        TargetGeometry::Hyperbolic => "hyperbolic",
        TargetGeometry::Torus => "torus",
    }
}

const CRITERIA: [(u32, &str, &str); 13] = [
    (1, "surface area", "area(Bolza) = 4π"),
    (2, "basis holomorphy", "∂̄q_α = 0, truncation error decreasing in R"),
    (3, "Weil-Petersson Gram", "G Hermitian positive definite, stable under refinement"),
    (4, "identity is critical", "E'(0) = 0 at the identity"),
    (5, "Levi form of E", "∂∂̄E(0) = 2G"),
    (6, "Levi form of log E", "∂∂̄ log E(0) = G/2π"),
    (7, "identity energy density", "e(id) ≡ E/area"),
    (8, "first variation", "∂E/∂z^α = −∫ μ_α h(u_v, u_v)"),
    (9, "second variation", "∂∂̄E = 2∫|W|² − 2∫R(u_v, V, u_v̄, V̄)"),
    (10, "plurisubharmonicity", "Levi(log E) ≥ 0, Levi(E) ≥ 0, Levi(1/E) ≤ 0"),
    (11, "Cauchy-Schwarz", "|∂E(ξ)|² ≤ E·∫|ξW|²"),
    (12, "complexified curvature", "K_C < 0 (disk), K_C = 0 (torus)"),
    (13, "reproducibility", "identical numbers on rerun"),
];

/// Runs every criterion; errors inside a criterion are recorded as failures.
pub fn run_verify(lab: &Lab) -> Result<VerificationReport, CliError> {
    let data = shared(lab);
    let mut records = Vec::with_capacity(CRITERIA.len());
    for (id, name, anchor) in CRITERIA {
        let result = match &data {
            Ok(d) => criterion(lab, d, id),
            Err(_) if matches!(id, 1 | 2 | 3 | 12) => criterion_without_solves(lab, id),
            Err(e) => Err(clone_error(e)),
        };
        let record = match result {
            Ok((checks, bar)) => CriterionRecord::new(id, name, anchor, checks, bar),
            Err(e) => CriterionRecord::errored(id, name, anchor, e.to_string()),
        };
        records.push(record);
    }
    Ok(VerificationReport::new(lab.provenance(), records))
}

fn clone_error(e: &CliError) -> CliError {
    match e {
        CliError::ConfigInvalid(s) => CliError::ConfigInvalid(s.clone()),
        CliError::CacheCorrupt(s) => CliError::CacheCorrupt(s.clone()),
        CliError::Io(s) => CliError::Io(s.clone()),
        CliError::Lab(l) => CliError::Lab(l.clone()),
    }
}

type Outcome = Result<(Vec<Check>, Option<f64>), CliError>;

fn criterion_without_solves(lab: &Lab, id: u32) -> Outcome {
    match id {
        1 => area(lab),
        2 => holomorphy(lab),
        3 => gram(lab),
        12 => curvature(lab),
        _ => unreachable!("criterion {id} needs harmonic maps"),
    }
}

fn criterion(lab: &Lab, d: &Shared, id: u32) -> Outcome {
    match id {
        1 | 2 | 3 | 12 => criterion_without_solves(lab, id),
        4 => critical_point(lab, d),
        5 => energy_levi(lab, d),
        6 => log_energy_levi(lab, d),
        7 => density(lab, d),
        8 => first_variation_check(lab, d),
        9 => second_variation_check(lab, d),
        10 => plurisubharmonicity(d),
        11 => cauchy_schwarz_check(lab, d),
        13 => reproducibility(lab, d),
        _ => unreachable!("unknown criterion {id}"),
    }
}

fn area(lab: &Lab) -> Outcome {
    let a = lab.mesh.hyperbolic_area();
    Ok((
        vec![
            Check::at_most("relative area error", (a - 4.0 * PI).abs() / (4.0 * PI), tol::AREA_REL),
            Check::info("quadrature area", a),
            Check::info("octagon Gauss-Bonnet area", lab.group.octagon.gauss_bonnet_area()),
            Check::info("Euler characteristic", lab.mesh.euler_characteristic() as f64),
        ],
        None,
    ))
}

fn truncated(q: &[QuadraticDifferential], series: &Arc<PoincareSeries>) -> Vec<QuadraticDifferential> {
    q.iter()
        .map(|q| QuadraticDifferential {
            coefficients: q.coefficients,
            series: series.clone(),
        })
        .collect()
}

fn smaller_series(lab: &Lab) -> Result<Arc<PoincareSeries>, CliError> {
    Ok(Arc::new(PoincareSeries::enumerate(
        &lab.group,
        lab.config.series_radius - tol::RADIUS_STEP,
        DEFAULT_BALL_CAP,
    )?))
}

fn holomorphy(lab: &Lab) -> Outcome {
    let small = truncated(&lab.basis.q, &smaller_series(lab)?);
    let mut checks = Vec::new();
    let mut ratios = Vec::new();
    for (a, (q, qs)) in lab.basis.q.iter().zip(&small).enumerate() {
        let r = holomorphy_residual(q, &lab.mesh, &lab.group);
        let rs = holomorphy_residual(qs, &lab.mesh, &lab.group);
        checks.push(Check::below(format!("residual q_{a}"), r.total, tol::HOLOMORPHY_REL));
        ratios.push((a, r.total / rs.total, r, rs));
    }
    for (a, ratio, r, rs) in ratios {
        checks.push(Check::below(format!("residual ratio q_{a} R/(R-2)"), ratio, 1.0));
        checks.push(Check::info(format!("interior q_{a}"), r.interior));
        checks.push(Check::info(format!("seam q_{a}"), r.seam));
        checks.push(Check::info(format!("residual q_{a} at R-2"), rs.total));
    }
    Ok((checks, None))
}

fn gram(lab: &Lab) -> Outcome {
    let g = gram3(&lab.basis.gram.matrix());
    let level = lab.config.mesh_level;
    let other_level = if level > 1 { level - 1 } else { level + 1 };
    let other_mesh = build_mesh(&lab.group, other_level)?;
    let other_table = seed_table(&lab.cache, &lab.series, &other_mesh)?;
    let g_mesh = gram3(&wp_gram(&beltrami_from_table(&lab.basis.q, &other_mesh, &other_table), &other_mesh, lab.series.radius).matrix());
    let small = smaller_series(lab)?;
    let small_table = seed_table(&lab.cache, &small, &lab.mesh)?;
    let g_radius = gram3(&wp_gram(&beltrami_from_table(&truncated(&lab.basis.q, &small), &lab.mesh, &small_table), &lab.mesh, small.radius).matrix());
    let eig = hermitian_eigenvalues(&g);
    let seed = &lab.basis.seed_gram;
    let sel = &lab.basis.seeds;
    let mut off: f64 = 0.0;
    for (i, &a) in sel.iter().enumerate() {
        for &b in &sel[i + 1..] {
            off = off.max(seed[a][b].norm() / (seed[a][a].re * seed[b][b].re).sqrt());
        }
    }
    Ok((
        vec![
            Check::at_most(format!("mesh stability L{level} vs L{other_level}"), relative_frobenius(&g_mesh, &g), tol::GRAM_MESH_STABILITY),
            Check::at_most("series stability R vs R-2", relative_frobenius(&g_radius, &g), tol::GRAM_RADIUS_STABILITY),
            Check::at_most("Hermitian defect", lab.basis.gram.hermitian_defect(), tol::GRAM_HERMITIAN),
            Check::strictly_positive("min eigenvalue", eig[0], 0.0),
            Check::below("raw seed normalized off-diagonal", off, tol::SEED_OFF_DIAGONAL),
            Check::info("max eigenvalue", eig[DIM - 1]),
        ],
        None,
    ))
}

fn critical_point(lab: &Lab, d: &Shared) -> Outcome {
    let c = &d.hyperbolic.center;
    let e = c.energy;
    let landscape = lab.landscape(TargetGeometry::Hyperbolic);
    let raw = {
        let structure = teichlab_core::deformation::structure_at(&TeichPoint::ORIGIN, &lab.basis)?;
        let model = teichlab_core::harmonic::EnergyModel::new(
            &lab.mesh,
            &structure,
            landscape.target,
            lab.workspace.lumped.clone(),
        )?;
        model.harmonic_residual(&MapField::identity(&lab.mesh), &lab.workspace)
    };
    let fd = d.hyperbolic.forms.energy_levi.gradient.iter().map(|g| g.norm()).fold(0.0, f64::max);
    let fv = first_variation(&lab.mesh, &lab.basis, c).iter().map(|g| g.norm()).fold(0.0, f64::max);
    Ok((
        vec![
            Check::below("harmonic residual from identity", c.residual, tol::IDENTITY_GRADIENT),
            Check::at_most("Newton iterations from identity", c.iterations as f64, tol::IDENTITY_ITERATIONS),
            Check::below("max |FD dE/dz| / E", fd / e, tol::FD_GRADIENT),
            Check::at_most("max |first variation| / E", fv / e, tol::HOLOMORPHIC_FIRST_VARIATION),
            Check::info("raw identity residual", raw),
            Check::info("E(0)", e),
        ],
        Some(d.hyperbolic.forms.energy_levi.gradient_error.iter().copied().fold(0.0, f64::max) / e),
    ))
}

fn energy_levi(lab: &Lab, d: &Shared) -> Outcome {
    let f = &d.hyperbolic.forms.energy_levi;
    let expected = scaled(&gram3(&lab.basis.gram.matrix()), 2.0);
    let rel = relative_frobenius(&f.matrix, &expected);
    let mut checks = vec![Check::at_most("relative Frobenius error", rel, tol::LEVI_IDENTITY_REL)];
    for (k, e) in f.eigenvalues.iter().enumerate() {
        checks.push(Check::info(format!("eigenvalue {k}"), *e));
    }
    Ok((checks, Some(f.frobenius_error / frobenius(&expected))))
}

fn log_energy_levi(lab: &Lab, d: &Shared) -> Outcome {
    let f = &d.hyperbolic.forms.log_levi;
    let expected = scaled(&gram3(&lab.basis.gram.matrix()), 1.0 / (2.0 * PI));
    let rel = relative_frobenius(&f.matrix, &expected);
    let mut checks = vec![Check::at_most("relative Frobenius error", rel, tol::LEVI_IDENTITY_REL)];
    for (k, e) in f.eigenvalues.iter().enumerate() {
        checks.push(Check::info(format!("eigenvalue {k}"), *e));
    }
    Ok((checks, Some(f.frobenius_error / frobenius(&expected))))
}

fn density(lab: &Lab, d: &Shared) -> Outcome {
    let e = d.hyperbolic.forms.energy;
    let s = density_stats(&lab.mesh, &MapField::identity(&lab.mesh), e);
    let torus = density_stats(&lab.mesh, &d.torus.center, d.torus.forms.energy);
    Ok((
        vec![
            Check::at_most("identity density spread", s.max_deviation, tol::DENSITY_SPREAD),
            Check::at_most("|mean - E/4π| / (E/4π)", (s.mean - s.energy_over_area).abs() / s.energy_over_area, tol::DENSITY_MEAN_REL),
            Check::info("mean density", s.mean),
            Check::info("torus density spread", torus.max_deviation),
        ],
        None,
    ))
}

fn first_variation_check(lab: &Lab, d: &Shared) -> Outcome {
    let f = first_variation(&lab.mesh, &lab.basis, &d.torus.center);
    let fd = &d.torus.forms.energy_levi;
    let mut checks = Vec::new();
    let mut bar: f64 = 0.0;
    for a in 0..DIM {
        let rel = (f[a] - fd.gradient[a]).norm() / fd.gradient[a].norm();
        checks.push(Check::at_most(format!("direction {a} relative error"), rel, tol::FIRST_VARIATION_REL));
        bar = bar.max(fd.gradient_error[a] / fd.gradient[a].norm());
    }
    for a in 0..DIM {
        checks.push(Check::info(format!("FD |dE/dz^{a}|"), fd.gradient[a].norm()));
    }
    Ok((checks, Some(bar)))
}

fn second_variation_check(lab: &Lab, d: &Shared) -> Outcome {
    let mut checks = Vec::new();
    let mut bar: f64 = 0.0;
    for (g, o) in [(TargetGeometry::Hyperbolic, &d.hyperbolic), (TargetGeometry::Torus, &d.torus)] {
        let sv = second_variation(&lab.mesh, &lab.basis, &o.center, &o.velocity);
        let levi = &o.forms.energy_levi;
        checks.push(Check::at_most(
            format!("{} formula vs FD Levi", name_of(g)),
            relative_frobenius(&sv.total, &levi.matrix),
            tol::SECOND_VARIATION_REL,
        ));
        if g == TargetGeometry::Torus {
            checks.push(Check::at_most("torus curvature term", frobenius(&sv.curvature_term), 0.0));
        } else {
            checks.push(Check::info("hyperbolic curvature term", frobenius(&sv.curvature_term)));
        }
        bar = bar.max(levi.frobenius_error / frobenius(&levi.matrix));
    }
    Ok((checks, Some(bar)))
}

fn plurisubharmonicity(d: &Shared) -> Outcome {
    let mut checks = Vec::new();
    let mut bar: f64 = 0.0;
    let origin = [(TargetGeometry::Hyperbolic, &d.hyperbolic.forms), (TargetGeometry::Torus, &d.torus.forms)];
    let h0 = &d.hyperbolic.forms.log_levi;
    checks.push(Check::strictly_positive(
        "hyperbolic min eig Levi(log E) at 0",
        h0.eigenvalues[0],
        tol::EPS_FACTOR * h0.frobenius_error,
    ));
    let points = origin.into_iter().chain(d.samples.iter().map(|(g, f)| (*g, f)));
    let mut index = [0usize; 2];
    for (g, f) in points {
        let k = &mut index[(g == TargetGeometry::Torus) as usize];
        let tag = format!("{} p{}", name_of(g), *k);
        *k += 1;
        let e = f.energy;
        let eps_log = tol::EPS_FACTOR * f.log_levi.frobenius_error;
        let eps_rel = tol::EPS_FACTOR * f.energy_levi.frobenius_error / e;
        let eps_inv = tol::EPS_FACTOR * f.inverse_levi.frobenius_error;
        bar = bar.max(eps_log).max(eps_rel).max(eps_inv);
        let log_min = f.log_levi.eigenvalues[0];
        let e_min = f.energy_levi.eigenvalues[0];
        let inv_max = f.inverse_levi.eigenvalues[DIM - 1];
        checks.push(Check::sign_at_least(format!("{tag} min eig Levi(log E)"), log_min, eps_log, log_min));
        checks.push(Check::sign_at_least(format!("{tag} min eig Levi(E)"), e_min, eps_rel * e, e_min));
        checks.push(Check::sign_at_most(format!("{tag} max eig Levi(1/E)"), inv_max, eps_inv, inv_max));
        let chain = log_energy_from_inverse(e, &f.inverse_levi, &f.energy_levi);
        let g = f.energy_levi.gradient;
        let grad_norm = g.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let grad_err = f.energy_levi.gradient_error.iter().map(|x| x * x).sum::<f64>().sqrt();
        let chain_tol = tol::EPS_FACTOR
            * (f.log_levi.frobenius_error + e * f.inverse_levi.frobenius_error + 2.0 * grad_norm * grad_err / (e * e));
        let diff = frobenius(&teichlab_core::variation::difference(&chain, &f.log_levi.matrix));
        checks.push(Check::at_most(format!("{tag} chain rule defect"), diff, chain_tol));
        checks.push(Check::info(format!("{tag} |z|_inf"), f.z.sup_norm()));
    }
    Ok((checks, Some(bar)))
}

fn cauchy_schwarz_check(lab: &Lab, d: &Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(lab.config.seed ^ 0x5a5a_5a5a);
    let directions: Vec<[C64; DIM]> = (0..tol::CAUCHY_SCHWARZ_DIRECTIONS)
        .map(|_| std::array::from_fn(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    let samples = cauchy_schwarz(&lab.mesh, &lab.basis, &d.torus.center, &d.torus.velocity, &directions);
    let worst = samples.iter().map(|s| s.lhs / s.rhs).fold(0.0, f64::max);
    let tightest = samples.iter().map(|s| s.lhs / s.rhs).fold(f64::INFINITY, f64::min);
    Ok((
        vec![
            Check::at_most("max lhs/rhs", worst, 1.0 + tol::CAUCHY_SCHWARZ_SLACK),
            Check::info("min lhs/rhs", tightest),
        ],
        None,
    ))
}

fn random_tangent(rng: &mut ChaCha8Rng) -> ComplexTangent {
    std::array::from_fn(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn curvature(lab: &Lab) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(lab.config.seed ^ 0xc0ff_ee00);
    let mut hyperbolic_max = f64::NEG_INFINITY;
    let mut torus_max: f64 = 0.0;
    let mut imaginary: f64 = 0.0;
    let mut defects = [TensorDefects::default(); 2];
    for _ in 0..tol::CURVATURE_PLANES {
        let u = C64::from_polar(tol::CURVATURE_DISK * rng.gen::<f64>().sqrt(), 2.0 * PI * rng.gen::<f64>());
        let [x, y, z, w] = [0; 4].map(|_| random_tangent(&mut rng));
        let kh = TargetGeometry::Hyperbolic.hermitian_sectional(u, x, y)?;
        let kt = TargetGeometry::Torus.hermitian_sectional(u, x, y)?;
        hyperbolic_max = hyperbolic_max.max(kh.re);
        imaginary = imaginary.max(kh.im.abs());
        torus_max = torus_max.max(kt.norm());
        for (k, g) in [TargetGeometry::Hyperbolic, TargetGeometry::Torus].into_iter().enumerate() {
            defects[k] = defects[k].merge(&g.tensor_defects(u, x, y, z, w));
        }
    }
    Ok((
        vec![
            Check::below("hyperbolic max K_C", hyperbolic_max, tol::NEGATIVE_CURVATURE),
            Check::at_most("torus max |K_C|", torus_max, 0.0),
            Check::at_most("hyperbolic max |Im K_C|", imaginary, tol::TENSOR_IDENTITY),
            Check::at_most("hyperbolic tensor identity defect", defects[0].max(), tol::TENSOR_IDENTITY),
            Check::at_most("torus tensor identity defect", defects[1].max(), tol::TENSOR_IDENTITY),
            Check::info("hyperbolic Bianchi defect", defects[0].bianchi),
            Check::info("hyperbolic pair symmetry defect", defects[0].pair_symmetry),
        ],
        None,
    ))
}

/// Re-solves the center and the coarse diagonal points of the hyperbolic
/// origin stencil and compares bit patterns.
fn reproducibility(lab: &Lab, d: &Shared) -> Outcome {
    let h = lab.fd_h();
    let points: Vec<TeichPoint> = levi_stencil(&TeichPoint::ORIGIN, h).into_iter().take(1 + 4 * DIM).collect();
    let landscape = lab.landscape(TargetGeometry::Hyperbolic);
    let center = landscape.solve(&points[0], None)?;
    let rest = landscape.solve_all(&points[1..], Some(&center))?;
    let mut worst: f64 = 0.0;
    for (z, m) in points.iter().zip(std::iter::once(&center).chain(&rest)) {
        let &(e, r) = d.hyperbolic_stencil.get(z)?;
        worst = worst.max((m.energy - e).abs()).max((m.residual - r).abs());
    }
    Ok((
        vec![
            Check::at_most("max rerun difference", worst, 0.0),
            Check::info("points re-solved", points.len() as f64),
        ],
        None,
    ))
}

/// Status used for the process exit code.
pub fn exit_code(report: &VerificationReport) -> i32 {
    match report.overall {
        Status::Pass => crate::error::EXIT_PASS,
        _ => crate::error::EXIT_CRITERION_FAILURE,
    }
}
