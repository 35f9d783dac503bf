//! Shared setup for every subcommand: group, mesh, basis and cached tables.

use std::collections::BTreeMap;
use std::sync::Arc;

use teichlab_core::curvature::TargetGeometry;
use teichlab_core::deformation::TeichPoint;
use teichlab_core::fuchsian::{bolza_group, SurfaceGroup, DEFAULT_BALL_CAP};
use teichlab_core::harmonic::{MapField, SolverMethod, SolverOptions, SolverWorkspace, Target};
use teichlab_core::mesh::{build_mesh, QuotientMesh};
use teichlab_core::quad_diff::{basis_from_table, BeltramiBasis, PoincareSeries, SeedTable, NUM_SEEDS};
use teichlab_core::variation::EnergyLandscape;
use teichlab_core::C64;

use crate::cache::Cache;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{BasisProvenance, Provenance};

pub const MAX_NEWTON_ITERATIONS: usize = 50;

pub struct Lab {
    pub config: RunConfig,
    pub group: SurfaceGroup,
    pub mesh: QuotientMesh,
    pub series: Arc<PoincareSeries>,
    /// Basis with `chart_radius` replaced by the override when one is set.
    pub basis: BeltramiBasis,
    pub basis_chart_radius: f64,
    pub workspace: SolverWorkspace,
    pub cache: Cache,
}

impl Lab {
    pub fn build(config: RunConfig) -> Result<Lab, CliError> {
        let group = bolza_group();
        let mesh = build_mesh(&group, config.mesh_level)?;
        let series = Arc::new(PoincareSeries::enumerate(&group, config.series_radius, DEFAULT_BALL_CAP)?);
        let cache = Cache::new(&config.cache_dir);
        let table = seed_table(&cache, &series, &mesh)?;
        let mut basis = basis_from_table(series.clone(), &mesh, &table)?;
        let basis_chart_radius = basis.chart_radius;
        if let Some(r) = config.chart_radius_override {
            basis.chart_radius = r;
        }
        let workspace = SolverWorkspace::new(&mesh)?;
        Ok(Lab {
            config,
            group,
            mesh,
            series,
            basis,
            basis_chart_radius,
            workspace,
            cache,
        })
    }

    pub fn chart_radius(&self) -> f64 {
        self.basis.chart_radius
    }

    /// Finite-difference step `h = fd_step · r_max`.
    pub fn fd_h(&self) -> f64 {
        self.config.fd_step * self.chart_radius()
    }

    pub fn provenance(&self) -> Provenance {
        Provenance::new(
            &self.config,
            self.chart_radius(),
            BasisProvenance::of(&self.basis, self.series.len(), self.basis_chart_radius),
        )
    }

    pub fn target(geometry: TargetGeometry) -> Target {
        match geometry {
            TargetGeometry::Hyperbolic => Target::Hyperbolic,
            TargetGeometry::Torus => Target::default_torus(),
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.config.solver_tol,
            max_iterations: MAX_NEWTON_ITERATIONS,
            method: SolverMethod::Newton,
        }
    }

    pub fn landscape(&self, geometry: TargetGeometry) -> EnergyLandscape<'_> {
        EnergyLandscape {
            mesh: &self.mesh,
            basis: &self.basis,
            workspace: &self.workspace,
            options: self.solver_options(),
            target: Lab::target(geometry),
        }
    }

    /// Cache key of the harmonic map at `z`.
    pub fn map_key(&self, z: &TeichPoint, geometry: TargetGeometry) -> String {
        let target = match Lab::target(geometry) {
            Target::Hyperbolic => "hyperbolic".to_string(),
            Target::Torus { periods } => format!("torus {}", bits(&periods)),
        };
        let material = format!(
            "level {}\nseries_radius {}\nsolver_tol {}\ntarget {target}\nz {}\n",
            self.config.mesh_level,
            hex(self.config.series_radius),
            hex(self.config.solver_tol),
            bits(&z.0)
        );
        Cache::key("harmonic-map", &material)
    }

    /// Harmonic map at `z`, read from the cache when present.
    pub fn solve_cached(&self, z: &TeichPoint, geometry: TargetGeometry) -> Result<(MapField, String), CliError> {
        let key = self.map_key(z, geometry);
        let target = Lab::target(geometry);
        let n = self.mesh.num_dofs();
        if let Some(entry) = self.cache.load("harmonic-map", &key)? {
            let p = &entry.payload;
            if p.len() < 4 || p.len() != 4 + p[3] as usize + 2 * n {
                return Err(CliError::CacheCorrupt(format!("harmonic-map {key}: payload shape mismatch")));
            }
            let h = p[3] as usize;
            let values = p[4 + h..].chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect();
            let map = MapField {
                target,
                values,
                energy: p[0],
                residual: p[1],
                iterations: p[2] as usize,
                energy_history: p[4..4 + h].to_vec(),
            };
            return Ok((map, key));
        }
        let map = self.landscape(geometry).solve(z, None)?;
        let mut payload = vec![map.energy, map.residual, map.iterations as f64, map.energy_history.len() as f64];
        payload.extend(&map.energy_history);
        payload.extend(map.values.iter().flat_map(|v| [v.re, v.im]));
        let provenance = BTreeMap::from([
            ("config_digest".to_string(), self.config.digest()),
            ("mesh_level".to_string(), self.config.mesh_level.to_string()),
            ("series_radius".to_string(), format!("{:?}", self.config.series_radius)),
            ("solver_tol".to_string(), format!("{:?}", self.config.solver_tol)),
            ("target".to_string(), format!("{geometry:?}").to_lowercase()),
            ("tool_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("z".to_string(), crate::config::format_point(z)),
        ]);
        self.cache.store("harmonic-map", &key, &provenance, &payload)?;
        Ok((map, key))
    }
}

fn hex(x: f64) -> String {
    format!("{:016x}", x.to_bits())
}

fn bits(z: &[C64]) -> String {
    z.iter().map(|c| format!("{}:{}", hex(c.re), hex(c.im))).collect::<Vec<_>>().join(",")
}

/// Seed values of `series` on `mesh`, read from or written to the cache.
pub fn seed_table(cache: &Cache, series: &PoincareSeries, mesh: &QuotientMesh) -> Result<SeedTable, CliError> {
    let material = format!(
        "level {}\nseries_radius {}\nterms {}\n",
        mesh.level,
        hex(series.radius),
        series.len()
    );
    let key = Cache::key("seed-table", &material);
    let nq = 3 * mesh.triangles.len();
    let nb = mesh.triangles.len();
    let width = 2 * NUM_SEEDS;
    if let Some(entry) = cache.load("seed-table", &key)? {
        if entry.payload.len() != width * (nq + nb) {
            return Err(CliError::CacheCorrupt(format!("seed-table {key}: payload shape mismatch")));
        }
        let rows: Vec<[C64; NUM_SEEDS]> = entry
            .payload
            .chunks_exact(width)
            .map(|c| std::array::from_fn(|k| C64::new(c[2 * k], c[2 * k + 1])))
            .collect();
        return Ok(SeedTable {
            radius: series.radius,
            level: mesh.level,
            quad: rows[..nq].to_vec(),
            bary: rows[nq..].to_vec(),
        });
    }
    let table = SeedTable::on_mesh(series, mesh);
    let payload: Vec<f64> = table
        .quad
        .iter()
        .chain(&table.bary)
        .flat_map(|row| row.iter().flat_map(|c| [c.re, c.im]))
        .collect();
    let provenance = BTreeMap::from([
        ("mesh_level".to_string(), mesh.level.to_string()),
        ("series_radius".to_string(), format!("{:?}", series.radius)),
        ("series_terms".to_string(), series.len().to_string()),
        ("layout".to_string(), "quadrature-then-barycenter,point-major,re-im".to_string()),
        ("tool_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ]);
    cache.store("seed-table", &key, &provenance, &payload)?;
    Ok(table)
}
