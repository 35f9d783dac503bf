//! Subcommand bodies. Each returns its output text and exit status.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use teichlab_core::curvature::TargetGeometry;
use teichlab_core::deformation::{check_in_chart, TeichPoint};
use teichlab_core::fuchsian::{pairing_edge_error, systole, DEFAULT_BALL_CAP};
use teichlab_core::quad_diff::{beltrami_from_table, holomorphy_residual, wp_gram, PoincareSeries, QuadraticDifferential};
use teichlab_core::variation::{hermitian_eigenvalues, levi_of_energy, relative_frobenius, solve_stencil, Hermitian3};
use teichlab_core::{LabError, C64};

use crate::config::format_point;
use crate::error::{CliError, EXIT_PASS};
use crate::lab::{seed_table, Lab};
use crate::verify::{exit_code, run_verify};

/// Text written to stdout (or a file) and the process exit status.
pub struct Output {
    pub text: String,
    pub code: i32,
}

impl Output {
    fn json(value: &impl Serialize) -> Output {
        let mut text = serde_json::to_string_pretty(value).expect("output serializes");
        text.push('\n');
        Output { text, code: EXIT_PASS }
    }
}

fn target_name(g: TargetGeometry) -> &'static str {
    match g {
        TargetGeometry::Hyperbolic => "hyperbolic",
        TargetGeometry::Torus => "torus",
    }
}

fn hermitian3(m: &[Vec<C64>]) -> Hermitian3 {
    std::array::from_fn(|i| std::array::from_fn(|j| m[i][j]))
}

pub fn surface_info(lab: &Lab) -> Result<Output, CliError> {
    Ok(Output::json(&json!({
        "provenance": lab.provenance(),
        "group": lab.group,
        "relation_residual": lab.group.relation_residual(),
        "pairing_edge_error": pairing_edge_error(&lab.group),
        "systole": systole(),
        "octagon_area": lab.group.octagon.gauss_bonnet_area(),
        "genus": lab.group.genus,
    })))
}

pub fn mesh_info(lab: &Lab, export: Option<&Path>) -> Result<Output, CliError> {
    if let Some(path) = export {
        std::fs::write(path, lab.mesh.export_text())?;
    }
    Ok(Output::json(&json!({
        "provenance": lab.provenance(),
        "summary": lab.mesh.summary(&lab.group),
        "export": export.map(|p| p.display().to_string()),
    })))
}

#[derive(Serialize)]
struct ConvergenceRow {
    series_radius: f64,
    series_terms: usize,
    /// Relative Frobenius change of the fixed-coefficient Gram against the configured radius.
    gram_relative_change: f64,
    holomorphy_residual: Vec<f64>,
}

/// Series radii of the convergence table: the configured one and up to two smaller.
fn table_radii(r: f64) -> Vec<f64> {
    [r - 4.0, r - 2.0, r].into_iter().filter(|&x| x >= 6.0).collect()
}

pub fn wp_gram_report(lab: &Lab) -> Result<Output, CliError> {
    let gram = &lab.basis.gram;
    let g = hermitian3(&gram.matrix());
    let residuals: Vec<_> = lab.basis.q.iter().map(|q| holomorphy_residual(q, &lab.mesh, &lab.group)).collect();
    let mut table = Vec::new();
    for r in table_radii(lab.config.series_radius) {
        let series = if r == lab.series.radius {
            lab.series.clone()
        } else {
            std::sync::Arc::new(PoincareSeries::enumerate(&lab.group, r, DEFAULT_BALL_CAP)?)
        };
        let q: Vec<QuadraticDifferential> = lab
            .basis
            .q
            .iter()
            .map(|q| QuadraticDifferential {
                coefficients: q.coefficients,
                series: series.clone(),
            })
            .collect();
        let t = seed_table(&lab.cache, &series, &lab.mesh)?;
        let gr = hermitian3(&wp_gram(&beltrami_from_table(&q, &lab.mesh, &t), &lab.mesh, r).matrix());
        table.push(ConvergenceRow {
            series_radius: r,
            series_terms: series.len(),
            gram_relative_change: relative_frobenius(&gr, &g),
            holomorphy_residual: q.iter().map(|q| holomorphy_residual(q, &lab.mesh, &lab.group).total).collect(),
        });
    }
    Ok(Output::json(&json!({
        "provenance": lab.provenance(),
        "gram": gram.entries,
        "hermitian_defect": gram.hermitian_defect(),
        "eigenvalues": hermitian_eigenvalues(&g),
        "seeds": lab.basis.seeds,
        "seed_gram": lab.basis.seed_gram,
        "holomorphy_residual": residuals,
        "convergence": table,
    })))
}

pub fn harmonic_solve(lab: &Lab, z: &TeichPoint) -> Result<Output, CliError> {
    let geometry = lab.config.target;
    let (map, key) = lab.solve_cached(z, geometry)?;
    Ok(Output::json(&json!({
        "provenance": lab.provenance(),
        "z": format_point(z),
        "target": target_name(geometry),
        "energy": map.energy,
        "residual": map.residual,
        "iterations": map.iterations,
        "cache_key": key,
    })))
}

pub fn energy_scan(lab: &Lab) -> Result<Output, CliError> {
    let geometry = lab.config.target;
    let points = lab.config.grid.points();
    for z in &points {
        check_in_chart(z, lab.chart_radius()).map_err(|e| match e {
            LabError::OutOfChart(m) => CliError::ConfigInvalid(format!("grid point {}: {m}", format_point(z))),
            other => CliError::Lab(other),
        })?;
    }
    let maps: Vec<_> = points.par_iter().map(|z| lab.solve_cached(z, geometry)).collect::<Result<_, _>>()?;
    let mut text = lab.provenance().comment_lines();
    text.push_str(&format!("# target: {}\n", target_name(geometry)));
    text.push_str("z,E,residual\n");
    for (z, (m, _)) in points.iter().zip(&maps) {
        text.push_str(&format!("{},{:?},{:?}\n", format_point(z).replace(',', " "), m.energy, m.residual));
    }
    Ok(Output { text, code: EXIT_PASS })
}

/// Function of the energy whose Levi form is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum LeviFunction {
    Energy,
    LogEnergy,
    InverseEnergy,
}

pub fn levi(lab: &Lab, z: &TeichPoint, function: LeviFunction) -> Result<Output, CliError> {
    let geometry = lab.config.target;
    let h = lab.fd_h();
    let energies = solve_stencil(&lab.landscape(geometry), z, h)?.map(|m| m.energy);
    let (name, form) = match function {
        LeviFunction::Energy => ("E", levi_of_energy(z, h, &energies, |e| e)?),
        LeviFunction::LogEnergy => ("log E", levi_of_energy(z, h, &energies, f64::ln)?),
        LeviFunction::InverseEnergy => ("1/E", levi_of_energy(z, h, &energies, |e| 1.0 / e)?),
    };
    Ok(Output::json(&json!({
        "provenance": lab.provenance(),
        "z": format_point(z),
        "target": target_name(geometry),
        "function": name,
        "energy": energies.get(z)?,
        "levi": form,
    })))
}

pub fn verify(lab: &Lab, output: Option<&Path>) -> Result<Output, CliError> {
    let report = run_verify(lab)?;
    let json = report.to_json();
    let mut summary: String = report.criteria.iter().map(|c| c.line() + "\n").collect();
    summary.push_str(&format!("overall {}\n", report.overall.label()));
    let text = match output {
        Some(path) => {
            std::fs::write(path, &json)?;
            summary
        }
        None => {
            eprint!("{summary}");
            json
        }
    };
    Ok(Output {
        text,
        code: exit_code(&report),
    })
}
