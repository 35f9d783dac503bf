use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use teichlab::commands::{self, LeviFunction, Output};
use teichlab::config::{parse_point, Overrides, RunConfig, CACHE_DIR_ENV};
use teichlab::error::{CliError, EXIT_ERROR};
use teichlab::lab::Lab;
use teichlab_core::curvature::TargetGeometry;

#[derive(Parser)]
#[command(name = "teichlab", version, about = "Harmonic-map energy on the Teichmüller space of the Bolza surface")]
struct Cli {
    #[command(flatten)]
    config: ConfigFlags,
    #[command(subcommand)]
    command: Command,
}

/// Flags mirroring the TOML keys; a flag beats the file.
#[derive(Args)]
struct ConfigFlags {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, alias = "level", global = true)]
    mesh_level: Option<u32>,
    #[arg(long, global = true)]
    series_radius: Option<f64>,
    #[arg(long, global = true)]
    chart_radius_override: Option<f64>,
    /// Finite-difference step as a fraction of the chart radius.
    #[arg(long, global = true)]
    fd_step: Option<f64>,
    #[arg(long, alias = "tol", global = true)]
    solver_tol: Option<f64>,
    #[arg(long, value_enum, global = true)]
    target: Option<TargetArg>,
    #[arg(long, global = true)]
    grid_axis: Option<usize>,
    /// Real range `lo,hi`.
    #[arg(long, value_parser = pair::<f64>, global = true, allow_hyphen_values = true)]
    grid_re: Option<[f64; 2]>,
    /// Imaginary range `lo,hi`.
    #[arg(long, value_parser = pair::<f64>, global = true, allow_hyphen_values = true)]
    grid_im: Option<[f64; 2]>,
    /// Samples `n_re,n_im`.
    #[arg(long, value_parser = pair::<usize>, global = true)]
    grid_steps: Option<[usize; 2]>,
    /// Cache directory; overrides the environment variable.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    thread_count: Option<usize>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum TargetArg {
    Hyperbolic,
    Torus,
}

#[derive(Subcommand)]
enum Command {
    /// Group generators, relation and octagon diagnostics.
    SurfaceInfo,
    /// Mesh counts and quality; optionally export the mesh as text.
    MeshInfo {
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Weil-Petersson Gram, holomorphy residuals and series convergence.
    WpGram,
    /// Harmonic map at one chart point.
    HarmonicSolve {
        /// Chart point `a+bi,c+di,e+fi`.
        #[arg(long, allow_hyphen_values = true)]
        z: String,
    },
    /// Energy on the configured grid, as CSV.
    EnergyScan,
    /// Finite-difference Levi form at one chart point.
    Levi {
        #[arg(long, allow_hyphen_values = true, default_value = "0,0,0")]
        z: String,
        #[arg(long, value_enum, default_value = "energy")]
        function: LeviFunction,
    },
    /// Every acceptance criterion; exit 0 when all pass.
    Verify {
        /// Write the JSON report here and print the summary lines instead.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the resolved configuration as TOML.
    ShowConfig,
}

fn pair<T: std::str::FromStr>(s: &str) -> Result<[T; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok([
            a.trim().parse().map_err(|_| format!("bad value {a:?}"))?,
            b.trim().parse().map_err(|_| format!("bad value {b:?}"))?,
        ]),
        _ => Err(format!("expected two comma-separated values, got {s:?}")),
    }
}

fn overrides(f: &ConfigFlags) -> Overrides {
    Overrides {
        mesh_level: f.mesh_level,
        series_radius: f.series_radius,
        chart_radius_override: f.chart_radius_override,
        fd_step: f.fd_step,
        solver_tol: f.solver_tol,
        target: f.target.map(|t| match t {
            TargetArg::Hyperbolic => TargetGeometry::Hyperbolic,
            TargetArg::Torus => TargetGeometry::Torus,
        }),
        grid_axis: f.grid_axis,
        grid_re: f.grid_re,
        grid_im: f.grid_im,
        grid_steps: f.grid_steps,
        cache_dir: f.cache_dir.clone(),
        seed: f.seed,
        thread_count: f.thread_count,
    }
}

fn run(cli: Cli) -> Result<Output, CliError> {
    let env_cache = std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from);
    let config = RunConfig::resolve(cli.config.config.as_deref(), &overrides(&cli.config), env_cache)?;
    if let Command::ShowConfig = cli.command {
        return Ok(Output {
            text: config.to_toml(),
            code: 0,
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.thread_count)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    pool.install(|| {
        let lab = Lab::build(config)?;
        match &cli.command {
            Command::SurfaceInfo => commands::surface_info(&lab),
            Command::MeshInfo { export } => commands::mesh_info(&lab, export.as_deref()),
            Command::WpGram => commands::wp_gram_report(&lab),
            Command::HarmonicSolve { z } => commands::harmonic_solve(&lab, &parse_point(z)?),
            Command::EnergyScan => commands::energy_scan(&lab),
            Command::Levi { z, function } => commands::levi(&lab, &parse_point(z)?, *function),
            Command::Verify { output } => commands::verify(&lab, output.as_deref()),
            Command::ShowConfig => unreachable!("handled before the lab is built"),
        }
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{}", out.text);
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
