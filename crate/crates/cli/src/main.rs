use std::fs;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use groupsample::experiment::{self, Check, ExperimentConfig, SweepParam, Verdict};
use groupsample::pointsets::PointSet;
use groupsample::Error;

/// Sampling and frame experiments on ℝ, the affine group and the Heisenberg group.
#[derive(Parser)]
#[command(name = "groupsample", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write report.json, table.csv and points.csv.
    Run {
        config: PathBuf,
        /// Override a config key (`key=value`), repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory (same as `--set output=DIR`).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rerun an experiment over a list of parameter values.
    Sweep {
        config: PathBuf,
        /// One of r, omega, grid.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Certify separation and density of a point set.
    Verify {
        points: PathBuf,
        #[arg(long)]
        sep: Option<f64>,
        #[arg(long)]
        dense: Option<f64>,
        /// Grid spacing for the certificate (default: smallest radius / 10).
        #[arg(long)]
        h: Option<f64>,
        /// The region is a torus (e.g. sets written by the line experiments).
        #[arg(long)]
        periodic: bool,
    },
}

enum Failure {
    Checks,
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn load_config(path: &PathBuf, set: &[String], output: &Option<PathBuf>) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut overrides = set.to_vec();
    if let Some(o) = output {
        overrides.push(format!("output={}", o.display()));
    }
    Ok(ExperimentConfig::parse(&text, &overrides)?)
}

fn print_checks(prefix: &str, checks: &[Check]) {
    for c in checks {
        let tag = match c.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::HypothesisNotMet => "N/A ",
        };
        println!("{tag} {prefix}{}: {}", c.name, c.detail);
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, set, output } => {
            let cfg = load_config(&config, &set, &output)?;
            let rep = experiment::run_and_write(&cfg)?;
            print_checks("", &rep.checks);
            println!(
                "{} in {:.1} s, cache {} hit / {} miss, written to {}",
                rep.experiment,
                rep.wall_seconds,
                rep.cache_hits,
                rep.cache_misses,
                cfg.output.display()
            );
            if rep.passed() { Ok(()) } else { Err(Failure::Checks) }
        }
        Command::Sweep { config, param, values, set, output } => {
            let cfg = load_config(&config, &set, &output)?;
            let param: SweepParam = param.parse()?;
            let rep = experiment::sweep(&cfg, param, &values)?;
            rep.write(&cfg.output)?;
            for (v, row) in values.iter().zip(&rep.rows) {
                print_checks(&format!("[{v}] "), &row.checks);
            }
            print_checks("trend ", &rep.trend_checks);
            print!("{}", rep.table.to_csv());
            if rep.passed() { Ok(()) } else { Err(Failure::Checks) }
        }
        Command::Verify { points, sep, dense, h, periodic } => {
            let f = fs::File::open(&points).map_err(|e| Failure::Usage(format!("{}: {e}", points.display())))?;
            let set = PointSet::read_csv(BufReader::new(f))?;
            let smallest = [sep, dense].into_iter().flatten().fold(f64::INFINITY, f64::min);
            let rep = experiment::verify(&set, sep, dense, h.unwrap_or(smallest / 10.0), periodic)?;
            println!("{}", serde_json::to_string_pretty(&rep).map_err(Error::from)?);
            if rep.passed() { Ok(()) } else { Err(Failure::Checks) }
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
