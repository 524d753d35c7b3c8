//! `orbit`: run pricing simulations, check instance structure, fit slopes.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use orbit_core::hard_instance::{hard_instance_report, HardFamily};
use orbit_core::harness::{
    build_instance, emit, fit_loglog_slope, hard_family_omega, hard_family_params,
    read_summary_csv, ExperimentConfig,
};
use orbit_core::seed::{Purpose, SeedStream};
use orbit_core::verify::structure_report;
use orbit_core::OrbitError;
use rand::Rng;

#[derive(Parser)]
#[command(
    name = "orbit",
    version,
    about = "Contextual dynamic pricing with binary feedback"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an experiment and write transcripts, summary.csv and meta.txt.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the number of repetitions.
        #[arg(long)]
        reps: Option<usize>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Numerical structure checks on the configured instance.
    Verify {
        #[arg(value_enum)]
        target: VerifyTarget,
        #[arg(long)]
        config: PathBuf,
    },
    /// Log-log slope of median regret against T.
    Slope {
        #[arg(long)]
        summary: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyTarget {
    Structure,
    HardInstance,
}

/// Sign vectors drawn for `verify hard-instance` besides the configured one.
const EXTRA_SIGN_VECTORS: usize = 4;

fn exit_code(err: &OrbitError) -> u8 {
    if err.is_configuration() {
        2
    } else {
        3
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn say(text: &str) {
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn execute(cli: Cli) -> Result<bool, OrbitError> {
    match cli.command {
        Command::Run {
            config,
            out,
            reps,
            seed,
        } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(r) = reps {
                cfg.repetitions = r;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let summary = emit(&cfg, &out)?;
            for h in &summary.horizons {
                say(&format!(
                    "T = {}: median {:.6e}, IQR [{:.6e}, {:.6e}], mean {:.6e} over {} repetitions\n",
                    h.horizon,
                    h.median,
                    h.q25,
                    h.q75,
                    h.mean,
                    h.finals.len()
                ));
            }
            Ok(true)
        }
        Command::Verify {
            target: VerifyTarget::Structure,
            config,
        } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let instance = build_instance(&cfg, cfg.horizons[0])?;
            let report = structure_report(&instance)?;
            say(&report.to_text());
            Ok(report.passed())
        }
        Command::Verify {
            target: VerifyTarget::HardInstance,
            config,
        } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let family = HardFamily::new(hard_family_params(&cfg, cfg.horizons[0]))?;
            let mut omegas = vec![hard_family_omega(&cfg, family.m())];
            let mut rng = SeedStream::new(cfg.master_seed, 0).rng(Purpose::Auxiliary);
            for _ in 0..EXTRA_SIGN_VECTORS {
                omegas.push(
                    (0..family.m())
                        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                        .collect(),
                );
            }
            let report = hard_instance_report(&family, &omegas)?;
            say(&report.to_text());
            Ok(report.passed())
        }
        Command::Slope { summary } => {
            let points = read_summary_csv(&summary)?;
            let fit = fit_loglog_slope(&points)?;
            say(&format!(
                "slope = {:.16e}\nintercept = {:.16e}\nr_squared = {:.16e}\n",
                fit.slope, fit.intercept, fit.r_squared
            ));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("orbit: structural checks failed");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("orbit: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
