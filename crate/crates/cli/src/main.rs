use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use growup_core::harness::{self, RunConfig, SweepSpec};
use growup_core::Error;

/// Relative output directories are placed under this root when it is set.
const OUTPUT_ROOT_ENV: &str = "GROWUP_OUTPUT_ROOT";

#[derive(Parser)]
#[command(name = "growup", version, about = "Radial chemotaxis simulator and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the base configuration at several masses, given in multiples of 8π.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        masses: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every row of a series file against its invariants.
    Validate {
        #[arg(long)]
        csv: PathBuf,
    },
    /// Recompute the report of a finished run and print it.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

fn output_dir(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if path.is_relative() => PathBuf::from(root).join(path),
        _ => path.to_path_buf(),
    }
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::ConfigParse { .. } | Error::Resolution(_) => 2,
        Error::Divergence { .. } | Error::Positivity { .. } => 3,
        Error::Stiffness { .. } => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}

fn dispatch(cmd: Command) -> growup_core::Result<u8> {
    match cmd {
        Command::Simulate { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let dir = output_dir(out.as_deref().unwrap_or(&cfg.output.directory));
            let outcome = harness::run(&cfg, &dir)?;
            let r = &outcome.report;
            println!(
                "{}: {} after {} steps (t = {}), growth {}, F trend {}",
                dir.display(),
                r.status.message,
                r.status.steps,
                r.status.t_final,
                r.growth.verdict.as_str(),
                r.f_trend.verdict.as_str()
            );
            Ok(outcome.exit_code() as u8)
        }
        Command::Sweep { config, masses, out } => {
            let cfg = RunConfig::load(&config)?;
            let root = output_dir(out.as_deref().unwrap_or(&cfg.output.directory));
            let spec = SweepSpec::new(cfg, masses, root.clone())?;
            let rows = harness::sweep(&spec)?;
            for r in &rows {
                println!("{}x8pi: {} {} {}", r.multiplier, r.termination, r.growth_verdict, r.error);
            }
            println!("summary: {}", root.join("summary.csv").display());
            Ok(0)
        }
        Command::Validate { csv } => {
            let v = harness::validate_series(&csv)?;
            for m in &v.violations {
                println!("{m}");
            }
            println!("{}: {} rows, {} violations", csv.display(), v.rows, v.violations.len());
            Ok(if v.ok() { 0 } else { 1 })
        }
        Command::Report { run } => {
            let report = harness::report_from_dir(&run)?;
            print!("{}", report.to_toml_string());
            Ok(0)
        }
    }
}
