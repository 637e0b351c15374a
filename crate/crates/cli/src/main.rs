mod commands;
mod config;
mod format;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use circle_finsler::hyperbolic::HorocycleWeight;
use circle_finsler::Vec3;
use clap::{Parser, Subcommand, ValueEnum};

use commands::{Curve, MetricQuery, Oracle};
use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numeric(#[from] circle_finsler::Error),
    #[error("inadmissible curvature field: {0}")]
    Inadmissible(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Inadmissible(_) => 1,
            Self::Usage(_) | Self::Numeric(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "circfin", version, about = "Finsler metrics on the sphere whose geodesics are circles")]
struct Cli {
    /// TOML run configuration; defaults apply to anything it leaves out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set kappa.coefficients=[0,0,0.5]`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check admissibility of the curvature field.
    Validate,
    /// Evaluate F at a tangent vector, or sample the unit indicatrix.
    Metric {
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        point: Vec3,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, required_unless_present = "indicatrix")]
        vector: Option<Vec3>,
        /// Number of directions.
        #[arg(long, conflicts_with = "vector")]
        indicatrix: Option<usize>,
    },
    /// Compare the metric length of a curve with the Crofton integral.
    CroftonCheck {
        #[arg(long, value_enum, default_value = "random", conflicts_with = "points")]
        curve: CurveKind,
        /// Polyline vertices `x,y,z;x,y,z;...`.
        #[arg(long, allow_hyphen_values = true)]
        points: Option<String>,
        #[arg(long, value_enum, default_value = "grid")]
        oracle: OracleKind,
        #[arg(long, default_value_t = 0.01)]
        threshold: f64,
    },
    /// Integrate a geodesic from a contact element.
    Geodesic {
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        point: Vec3,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        tangent: Vec3,
        #[arg(long, default_value_t = 1.0)]
        time: f64,
    },
    /// Recover the measure from the metric on a grid.
    Roundtrip {
        #[arg(long, default_value_t = 4)]
        grid_level: u32,
        #[arg(long, default_value_t = 0.02)]
        threshold: f64,
    },
    /// Horocycle metrics on the hyperbolic plane.
    Hyperbolic {
        #[arg(long, value_enum, default_value = "unit")]
        weight: WeightKind,
        #[arg(long, default_value_t = 1.0)]
        time: f64,
    },
    /// Write the circle of every grid point as JSON lines.
    FibrationExport {
        /// Defaults to `quadrature.sphere_grid_level`.
        #[arg(long)]
        grid_level: Option<u32>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveKind {
    Equator,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Grid,
    Mc,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightKind {
    Unit,
    Xi3,
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts: Vec<f64> =
        s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}"))).collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, z] if parts.iter().all(|v| v.is_finite()) => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected three finite numbers x,y,z, got '{s}'")),
    }
}

fn parse_points(s: &str) -> Result<Vec<Vec3>, CliError> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(|p| parse_vec3(p).map_err(CliError::Usage)).collect()
}

fn run(cli: Cli) -> Result<commands::Outcome, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let config = RunConfig::resolve(cli.config.as_deref(), &cli.overrides)?;
    match cli.command {
        Command::Validate => commands::validate(&config),
        Command::Metric { point, vector, indicatrix } => {
            let query = match (vector, indicatrix) {
                (_, Some(n)) => MetricQuery::Indicatrix(n),
                (Some(v), None) => MetricQuery::Value(v),
                (None, None) => unreachable!("clap requires one of them"),
            };
            commands::metric(&config, point, query)
        }
        Command::CroftonCheck { curve, points, oracle, threshold } => {
            let curve = match (points, curve) {
                (Some(p), _) => Curve::Points(parse_points(&p)?),
                (None, CurveKind::Equator) => Curve::Equator,
                (None, CurveKind::Random) => Curve::Random,
            };
            let oracle = match oracle {
                OracleKind::Grid => Oracle::Grid,
                OracleKind::Mc => Oracle::MonteCarlo,
            };
            commands::crofton_check(&config, curve, oracle, threshold)
        }
        Command::Geodesic { point, tangent, time } => commands::geodesic(&config, point, tangent, time),
        Command::Roundtrip { grid_level, threshold } => commands::roundtrip(&config, grid_level, threshold),
        Command::Hyperbolic { weight, time } => {
            let weight = match weight {
                WeightKind::Unit => HorocycleWeight::unit(),
                WeightKind::Xi3 => HorocycleWeight::Xi3,
            };
            commands::hyperbolic(&config, weight, time)
        }
        Command::FibrationExport { grid_level } => {
            commands::fibration_export(&config, grid_level.unwrap_or(config.quadrature.sphere_grid_level))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(outcome.text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::from(if outcome.passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("circfin: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
