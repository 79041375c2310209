//! `conewalk`: batch front end for harmonic functions of killed random walks
//! in lattice cones.
//!
//! Exit codes: 0 pass, 1 validation or check failure, 2 numerical
//! non-convergence, 3 I/O error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ModelConfig;

#[derive(Debug, Parser)]
#[command(name = "conewalk", version, about = "Harmonic functions of random walks killed outside a lattice cone")]
pub struct Cli {
    /// Model configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV outputs.
    #[arg(long, global = true, default_value = "conewalk-out")]
    out: PathBuf,
    /// Truncation radius, overriding the config.
    #[arg(long, global = true)]
    radius: Option<i64>,
    /// RNG seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Monte Carlo step horizon.
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Only print failures.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the modelling assumptions on the law and the cone.
    Validate,
    /// Sample the boundary of D and locate the arc endpoints.
    Boundary {
        /// Number of equally spaced directions.
        #[arg(long = "points", default_value_t = 256)]
        points: usize,
    },
    /// Build h_a on the truncated domain.
    Harmonic {
        /// Direction q as `x,y`; a(q) is the tilt.
        #[arg(long, conflicts_with = "endpoint", value_parser = commands::parse_vec2)]
        q: Option<conewalk::Vec2>,
        /// `c1` or `c2`.
        #[arg(long, value_parser = commands::parse_wall)]
        endpoint: Option<conewalk::Wall>,
    },
    /// Run the verification suite on the configured model.
    Verify {
        /// Comma-separated criterion ids; all when absent.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<String>,
    },
    /// Green-function ratio table along a direction.
    Martin {
        /// Direction `x,y`; the middle of the arc when absent.
        #[arg(long, value_parser = commands::parse_vec2)]
        q: Option<conewalk::Vec2>,
        /// Comma-separated target distances.
        #[arg(long, value_delimiter = ',', default_value = "10,20,40")]
        radii: Vec<i64>,
        /// Probe points `x,y;x,y`; the unit neighbours of the reference point when absent.
        #[arg(long, value_delimiter = ';', value_parser = commands::parse_point)]
        probes: Option<Vec<conewalk::LatticePoint>>,
        /// Reference point `x,y`; the interior point nearest to 3q when absent.
        #[arg(long = "z-ref", value_parser = commands::parse_point)]
        z_ref: Option<conewalk::LatticePoint>,
    },
    /// Simulated absorption probabilities of a tilted walk.
    Absorption {
        /// Tilt `x,y`.
        #[arg(long, conflicts_with = "endpoint", value_parser = commands::parse_vec2)]
        tilt: Option<conewalk::Vec2>,
        /// Tilt a(c1) or a(c2).
        #[arg(long, value_parser = commands::parse_wall)]
        endpoint: Option<conewalk::Wall>,
        /// Start point `x,y`.
        #[arg(long, value_parser = commands::parse_point)]
        start: conewalk::LatticePoint,
        /// Comma-separated horizons reported from the same paths; `--horizon` when absent.
        #[arg(long, value_delimiter = ',')]
        horizons: Vec<usize>,
    },
    /// Simulated mean overshoot below a wall under the endpoint tilt.
    Overshoot {
        /// `c1` or `c2`.
        #[arg(long, value_parser = commands::parse_wall)]
        wall: conewalk::Wall,
        /// Start point `x,y`.
        #[arg(long, value_parser = commands::parse_point)]
        start: conewalk::LatticePoint,
    },
}

/// Why a command did not pass, mapped to the exit code.
#[derive(Debug)]
pub enum Failure {
    Check(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Check(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<conewalk::Error> for Failure {
    fn from(e: conewalk::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Check(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn load(cli: &Cli) -> Result<ModelConfig, Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Check("--config is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let mut config = ModelConfig::parse(&text).map_err(|e| Failure::Check(format!("{}: {e}", path.display())))?;
    if let Some(r) = cli.radius {
        config = config.with_radius(r).map_err(Failure::Check)?;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|config| commands::run(&cli, &config));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
