//! Run configuration: TOML file, command-line overrides and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use teichlab_core::curvature::TargetGeometry;
use teichlab_core::deformation::TeichPoint;
use teichlab_core::C64;

use crate::error::CliError;

/// Environment variable that overrides `cache_dir` from the config file.
pub const CACHE_DIR_ENV: &str = "TEICHLAB_CACHE_DIR";

pub const MAX_MESH_LEVEL: u32 = 7;
pub const MAX_GRID_POINTS: usize = 10_000;

/// Rectangular grid in the `z^axis` plane; other coordinates are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub axis: usize,
    /// Real-part range `[lo, hi]` in chart coordinates.
    pub re: [f64; 2],
    /// Imaginary-part range `[lo, hi]`.
    pub im: [f64; 2],
    /// Number of samples along the real and imaginary ranges.
    pub steps: [usize; 2],
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            axis: 0,
            re: [-0.1, 0.1],
            im: [0.0, 0.0],
            steps: [5, 1],
        }
    }
}

impl GridSpec {
    /// Grid points in row-major order (imaginary part outer).
    pub fn points(&self) -> Vec<TeichPoint> {
        let lerp = |r: [f64; 2], n: usize, k: usize| {
            if n <= 1 {
                r[0]
            } else {
                r[0] + (r[1] - r[0]) * k as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.steps[0] * self.steps[1]);
        for j in 0..self.steps[1] {
            for i in 0..self.steps[0] {
                let mut z = [C64::new(0.0, 0.0); 3];
                z[self.axis] = C64::new(lerp(self.re, self.steps[0], i), lerp(self.im, self.steps[1], j));
                out.push(TeichPoint(z));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mesh_level: u32,
    pub series_radius: f64,
    /// Replaces the basis-derived chart radius when set.
    pub chart_radius_override: Option<f64>,
    /// Finite-difference step as a fraction of the chart radius.
    pub fd_step: f64,
    /// Relative harmonic residual at which the nonlinear solve stops.
    pub solver_tol: f64,
    pub target: TargetGeometry,
    pub grid: GridSpec,
    pub cache_dir: PathBuf,
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub thread_count: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mesh_level: 5,
            series_radius: 12.0,
            chart_radius_override: None,
            fd_step: 1e-2,
            solver_tol: 1e-10,
            target: TargetGeometry::Hyperbolic,
            grid: GridSpec::default(),
            cache_dir: PathBuf::from(".teichlab-cache"),
            seed: 20_240_601,
            thread_count: 0,
        }
    }
}

/// The part of the configuration that can change a computed number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub mesh_level: u32,
    pub series_radius: f64,
    pub chart_radius_override: Option<f64>,
    pub fd_step: f64,
    pub solver_tol: f64,
    pub target: TargetGeometry,
    pub grid: GridSpec,
    pub seed: u64,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mesh_level: Option<u32>,
    pub series_radius: Option<f64>,
    pub chart_radius_override: Option<f64>,
    pub fd_step: Option<f64>,
    pub solver_tol: Option<f64>,
    pub target: Option<TargetGeometry>,
    pub grid_axis: Option<usize>,
    pub grid_re: Option<[f64; 2]>,
    pub grid_im: Option<[f64; 2]>,
    pub grid_steps: Option<[usize; 2]>,
    pub cache_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub thread_count: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::ConfigInvalid(e.message().to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Precedence: flag, then environment (cache directory only), then file, then default.
    pub fn resolve(file: Option<&Path>, overrides: &Overrides, env_cache_dir: Option<PathBuf>) -> Result<Self, CliError> {
        let mut c = match file {
            Some(p) => Self::from_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(d) = env_cache_dir {
            c.cache_dir = d;
        }
        let o = overrides;
        c.mesh_level = o.mesh_level.unwrap_or(c.mesh_level);
        c.series_radius = o.series_radius.unwrap_or(c.series_radius);
        c.chart_radius_override = o.chart_radius_override.or(c.chart_radius_override);
        c.fd_step = o.fd_step.unwrap_or(c.fd_step);
        c.solver_tol = o.solver_tol.unwrap_or(c.solver_tol);
        c.target = o.target.unwrap_or(c.target);
        c.grid.axis = o.grid_axis.unwrap_or(c.grid.axis);
        c.grid.re = o.grid_re.unwrap_or(c.grid.re);
        c.grid.im = o.grid_im.unwrap_or(c.grid.im);
        c.grid.steps = o.grid_steps.unwrap_or(c.grid.steps);
        if let Some(d) = &o.cache_dir {
            c.cache_dir = d.clone();
        }
        c.seed = o.seed.unwrap_or(c.seed);
        c.thread_count = o.thread_count.unwrap_or(c.thread_count);
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::ConfigInvalid(msg));
        if !(1..=MAX_MESH_LEVEL).contains(&self.mesh_level) {
            return bad(format!("mesh_level must lie in 1..={MAX_MESH_LEVEL}, got {}", self.mesh_level));
        }
        if !(self.series_radius >= 6.0 && self.series_radius <= 16.0) {
            return bad(format!("series_radius must lie in [6, 16], got {}", self.series_radius));
        }
        if let Some(r) = self.chart_radius_override {
            if !(r > 0.0 && r < 1.0) {
                return bad(format!("chart_radius_override must lie in (0, 1), got {r}"));
            }
        }
        if !(self.fd_step > 0.0 && self.fd_step <= 0.05) {
            return bad(format!("fd_step must lie in (0, 0.05], got {}", self.fd_step));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol <= 1e-4) {
            return bad(format!("solver_tol must lie in (0, 1e-4], got {}", self.solver_tol));
        }
        let g = &self.grid;
        if g.axis >= 3 {
            return bad(format!("grid.axis must be 0, 1 or 2, got {}", g.axis));
        }
        for (name, r) in [("grid.re", g.re), ("grid.im", g.im)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                return bad(format!("{name} must be a finite range lo <= hi, got {r:?}"));
            }
        }
        let n = g.steps[0].saturating_mul(g.steps[1]);
        if g.steps.contains(&0) || n > MAX_GRID_POINTS {
            return bad(format!("grid.steps must be positive with at most {MAX_GRID_POINTS} points, got {:?}", g.steps));
        }
        if self.thread_count > 1024 {
            return bad(format!("thread_count must be at most 1024, got {}", self.thread_count));
        }
        Ok(())
    }

    pub fn resolved(&self) -> ResolvedConfig {
        ResolvedConfig {
            mesh_level: self.mesh_level,
            series_radius: self.series_radius,
            chart_radius_override: self.chart_radius_override,
            fd_step: self.fd_step,
            solver_tol: self.solver_tol,
            target: self.target,
            grid: self.grid.clone(),
            seed: self.seed,
        }
    }

    /// SHA-256 of the canonical JSON of [`ResolvedConfig`].
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(&self.resolved()).expect("config serializes to JSON");
        sha256_hex(json.as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses `a+bi`, `a-bi`, `a`, `bi` (exponents allowed).
pub fn parse_complex(s: &str) -> Result<C64, CliError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || CliError::ConfigInvalid(format!("cannot parse complex number {s:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |x: &str| -> Result<f64, CliError> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse::<f64>().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|_| bad())?;
            Ok(C64::new(re, imag(&body[k..])?))
        }
        None => Ok(C64::new(0.0, imag(body)?)),
    }
}

/// Parses a comma-separated triple of complex numbers.
pub fn parse_point(s: &str) -> Result<TeichPoint, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::ConfigInvalid(format!(
            "expected three comma-separated complex numbers, got {s:?}"
        )));
    }
    let mut z = [C64::new(0.0, 0.0); 3];
    for (slot, p) in z.iter_mut().zip(parts) {
        *slot = parse_complex(p)?;
    }
    Ok(TeichPoint(z))
}

/// Formats a point so that [`parse_point`] recovers it exactly.
pub fn format_point(z: &TeichPoint) -> String {
    z.0.iter()
        .map(|c| format!("{:?}{}{:?}i", c.re, if c.im.is_sign_negative() { "" } else { "+" }, c.im))
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_roundtrip() {
        let c = RunConfig {
            chart_radius_override: Some(0.1),
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(matches!(RunConfig::from_toml("mesh_levle = 3"), Err(CliError::ConfigInvalid(_))));
    }

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("1.5").unwrap(), C64::new(1.5, 0.0));
        assert_eq!(parse_complex("-2i").unwrap(), C64::new(0.0, -2.0));
        assert_eq!(parse_complex("1e-3-2.5e-2i").unwrap(), C64::new(1e-3, -2.5e-2));
        assert_eq!(parse_complex("i").unwrap(), C64::new(0.0, 1.0));
        assert!(parse_complex("1+").is_err());
    }

    #[test]
    fn flag_beats_env_beats_file() {
        let o = Overrides {
            cache_dir: Some("flag".into()),
            ..Overrides::default()
        };
        let c = RunConfig::resolve(None, &o, Some("env".into())).unwrap();
        assert_eq!(c.cache_dir, PathBuf::from("flag"));
        let c = RunConfig::resolve(None, &Overrides::default(), Some("env".into())).unwrap();
        assert_eq!(c.cache_dir, PathBuf::from("env"));
    }

    #[test]
    fn digest_ignores_runtime_keys() {
        let a = RunConfig::default();
        let b = RunConfig {
            cache_dir: "elsewhere".into(),
            thread_count: 3,
            ..RunConfig::default()
        };
        assert_eq!(a.digest(), b.digest());
        let c = RunConfig {
            seed: 1,
            ..RunConfig::default()
        };
        assert_ne!(a.digest(), c.digest());
    }
}
