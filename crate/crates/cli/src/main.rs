//! `finsler` — CLI harness for the Finsler geometry engine.
//!
//! Subcommands: `eval` (pointwise tensor table), `verify` (identity suite
//! with machine-readable verdicts), `profile` (torsion profile along a
//! geodesic as CSV), `classify` (Randers-compatibility verdict).
//!
//! Exit status: 0 = pass, 1 = check failure or runtime error, 2 = config
//! error. Identical configs and seeds give bit-identical outputs.

mod commands;
mod config;
mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, Format};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "finsler", version, about = "Numerical Finsler geometry harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the machine-readable output to this path instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Print every pointwise quantity (F, g, C, I, h, M, G, N, E, L, J,
    /// K^i_k, flag samples) at one (x, y) as a flat key/value table.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Base point, comma separated.
        #[arg(long)]
        x: String,
        /// Direction, comma separated.
        #[arg(long)]
        y: String,
    },
    /// Run the curvature identity suite; exit 0 iff every check passes.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Torsion profile along a unit-speed geodesic: CSV columns
    /// t, M, K, residual, margin plus a JSON verdict summary.
    Profile {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Transported probe vector.
        #[arg(long)]
        u: String,
        /// Geodesic parameter span (defaults to the config value).
        #[arg(long)]
        t_max: Option<f64>,
        /// Grid steps (defaults to the config value).
        #[arg(long)]
        steps: Option<usize>,
        /// Curvature bound `a` asserting K <= -a^2, enabling the
        /// cosh/sinh comparison margin.
        #[arg(long)]
        bound: Option<f64>,
    },
    /// Estimate the Matsumoto torsion norm across sample points and report
    /// a randers-compatible / not-randers verdict (dimension n >= 3).
    Classify {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of base points (defaults to the config value).
        #[arg(long)]
        points: Option<usize>,
        /// Flagpole directions per point (defaults to the config value).
        #[arg(long)]
        dirs: Option<usize>,
    },
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let mut cfg = match config::parse_config(&text) {
        Ok(cfg) => cfg,
        Err(violations) => {
            let mut msg = String::from("invalid configuration:\n");
            for v in &violations {
                msg.push_str(&format!("  {v}\n"));
            }
            return Err(Failure::Config(msg));
        }
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn emit(common: &CommonArgs, payload: &str) -> Result<(), Failure> {
    match &common.out {
        Some(path) => fs::write(path, payload)
            .map_err(|e| Failure::Run(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Eval { common, x, y } => {
            let cfg = load_config(&common)?;
            let n = cfg.metric.n;
            let xv = commands::parse_vector(&x, n, "x")?;
            let yv = commands::parse_vector(&y, n, "y")?;
            let table = commands::run_eval(&cfg, &xv, &yv, common.format)?;
            emit(&common, &table)?;
            Ok(true)
        }
        Command::Verify { common } => {
            let cfg = load_config(&common)?;
            let (rendered, table, pass) = commands::run_verify(&cfg, common.format)?;
            emit(&common, &rendered)?;
            if common.out.is_some() {
                eprint!("{table}");
            }
            Ok(pass)
        }
        Command::Profile {
            common,
            x,
            y,
            u,
            t_max,
            steps,
            bound,
        } => {
            let cfg = load_config(&common)?;
            let n = cfg.metric.n;
            let xv = commands::parse_vector(&x, n, "x")?;
            let yv = commands::parse_vector(&y, n, "y")?;
            let uv = commands::parse_vector(&u, n, "u")?;
            let output = commands::run_profile(&cfg, &xv, &yv, &uv, t_max, steps, bound)?;
            emit(&common, &output.csv)?;
            if common.out.is_some() {
                println!("{}", output.verdict_json);
            } else {
                eprintln!("{}", output.verdict_json);
            }
            Ok(output.pass)
        }
        Command::Classify {
            common,
            points,
            dirs,
        } => {
            let cfg = load_config(&common)?;
            let verdict = commands::run_classify(&cfg, points, dirs, common.format)?;
            emit(&common, &verdict)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
