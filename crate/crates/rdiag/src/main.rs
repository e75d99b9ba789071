use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rdiag::cli::{self, Command, GridSpec, OutputFormat, RunConfig};

#[derive(Parser)]
#[command(
    name = "rdiag",
    about = "Brown measures, determinants, and subordination functions of R-diagonal operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Measure specification file (JSON)
    #[arg(long)]
    measure: PathBuf,
    /// Radial grid as rmin:rmax:n
    #[arg(long)]
    grid: Option<String>,
    /// Complex point as re,im
    #[arg(long)]
    lambda: Option<String>,
    /// Regularization / imaginary-axis parameter
    #[arg(long)]
    t: Option<f64>,
    /// Output path (stdout when omitted); written atomically
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, default_value = "csv")]
    format: String,
    /// RNG seed for Monte Carlo commands
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Tolerance overrides, repeatable: --tol name=value
    #[arg(long = "tol")]
    tol: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Radial Brown CDF and density on a grid
    Cdf(Common),
    /// Alias for cdf output (same columns)
    Density(Common),
    /// Fuglede-Kadison determinant at lambda (t = 0 unless --t is given)
    Det(Common),
    /// Subordination values s(r, t) on a radial grid at fixed t
    Subord(Common),
    /// Measure summary: annulus radii, moments, origin mass
    Moments(Common),
    /// Finite-dimensional Monte Carlo validation
    #[command(name = "validate-mc")]
    ValidateMc {
        #[command(flatten)]
        common: Common,
        /// Matrix dimension
        #[arg(long, default_value_t = 250)]
        n: usize,
        /// Number of independent samples
        #[arg(long, default_value_t = 1)]
        samples: usize,
    },
    /// Cross-route consistency checks; exit 1 when any tolerance fails
    Consistency(Common),
}

fn parse_grid(text: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid must be rmin:rmax:n, got {text:?}"));
    }
    let min: f64 = parts[0].parse().map_err(|e| format!("bad rmin: {e}"))?;
    let max: f64 = parts[1].parse().map_err(|e| format!("bad rmax: {e}"))?;
    let n: usize = parts[2].parse().map_err(|e| format!("bad n: {e}"))?;
    if !(min > 0.0 && max >= min && n >= 1) {
        return Err(format!("grid bounds must be positive and ordered, got {text:?}"));
    }
    Ok(GridSpec { min, max, n })
}

fn parse_lambda(text: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("lambda must be re,im, got {text:?}"));
    }
    let re: f64 = parts[0].parse().map_err(|e| format!("bad re: {e}"))?;
    let im: f64 = parts[1].parse().map_err(|e| format!("bad im: {e}"))?;
    Ok((re, im))
}

fn parse_tols(items: &[String]) -> Result<BTreeMap<String, f64>, String> {
    let mut map = BTreeMap::new();
    for item in items {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| format!("tolerance must be name=value, got {item:?}"))?;
        let v: f64 = value.parse().map_err(|e| format!("bad tolerance value: {e}"))?;
        map.insert(name.to_string(), v);
    }
    Ok(map)
}

fn build_config(command: Command, common: Common, mc: Option<(usize, usize)>) -> Result<RunConfig, String> {
    let mut config = RunConfig::new(command, common.measure);
    config.grid = common.grid.as_deref().map(parse_grid).transpose()?;
    config.lambda = common.lambda.as_deref().map(parse_lambda).transpose()?;
    config.t = common.t;
    config.out = common.out;
    config.format = match common.format.as_str() {
        "csv" => OutputFormat::Csv,
        "json" => OutputFormat::Json,
        other => return Err(format!("format must be csv or json, got {other:?}")),
    };
    config.seed = common.seed;
    config.tolerances = parse_tols(&common.tol)?;
    if let Some((n, samples)) = mc {
        config.mc_n = n;
        config.mc_samples = samples;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let built = match cli.command {
        Cmd::Cdf(c) => build_config(Command::Cdf, c, None),
        Cmd::Density(c) => build_config(Command::Density, c, None),
        Cmd::Det(c) => build_config(Command::Det, c, None),
        Cmd::Subord(c) => build_config(Command::Subord, c, None),
        Cmd::Moments(c) => build_config(Command::Moments, c, None),
        Cmd::ValidateMc { common, n, samples } => {
            build_config(Command::ValidateMc, common, Some((n, samples)))
        }
        Cmd::Consistency(c) => build_config(Command::Consistency, c, None),
    };
    let config = match built {
        Ok(c) => c,
        Err(message) => {
            let doc = serde_json::json!({"code": "input_error", "message": message, "context": null});
            eprintln!("{doc}");
            return ExitCode::from(2);
        }
    };
    match cli::run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let doc = serde_json::json!({
                "code": err.code,
                "message": err.message,
                "context": err.context,
            });
            eprintln!("{doc}");
            ExitCode::from(err.exit_code as u8)
        }
    }
}
