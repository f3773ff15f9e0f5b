//! Command-line front end: parse arguments, load the scenario, dispatch to
//! the runner, report artifacts. Exit codes: 0 success, 1 configuration or
//! I/O failure, 2 completed run whose rate fit is not a valid exponential
//! (artifacts are still written so the curve can be inspected).

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use supertransfer_cli::runner::{self, Overrides, RunnerError};
use supertransfer_cli::scenario::{MethodSpec, Scenario};

#[derive(Parser)]
#[command(
    name = "supertransfer",
    about = "Simulate and analyze collectively enhanced excitation transfer",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one scenario and fit the donor→acceptor transfer rate.
    #[command(name = "transfer")]
    Transfer(CommonArgs),
    /// Map the protection rule: transfer rate over a (λ^D, δ^D) grid.
    #[command(name = "sweep-rule2")]
    SweepRule2(CommonArgs),
    /// Transfer rate versus donor/acceptor aggregate sizes.
    #[command(name = "scaling")]
    Scaling(CommonArgs),
    /// Validate the noise generator against its target statistics.
    #[command(name = "noise-calibrate")]
    NoiseCalibrate(CommonArgs),
    /// Audit the dispersive bus elimination of a two-bus circuit.
    #[command(name = "circuit-reduce")]
    CircuitReduce(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Master seed, overriding the scenario's run.seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Solver, overriding the scenario's run.method.
    #[arg(long, value_enum, value_name = "METHOD")]
    method: Option<MethodArg>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MethodArg {
    Lindblad,
    Stochastic,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            jobs: self.jobs,
            method: self.method.map(|m| match m {
                MethodArg::Lindblad => MethodSpec::Lindblad,
                MethodArg::Stochastic => MethodSpec::Stochastic,
            }),
        }
    }
}

fn report_artifacts(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> Result<u8, RunnerError> {
    let args = match &cli.command {
        Command::Transfer(a)
        | Command::SweepRule2(a)
        | Command::Scaling(a)
        | Command::NoiseCalibrate(a)
        | Command::CircuitReduce(a) => a,
    };
    let scenario = Scenario::load(&args.scenario)?;
    let overrides = args.overrides();
    match cli.command {
        Command::Transfer(ref args) => {
            let outcome = runner::run_transfer(&scenario, &overrides, &args.out)?;
            report_artifacts(&outcome.artifacts);
            match &outcome.fit {
                Some(fit) => println!(
                    "forward rate {:.6} /us (gamma {:.6}, plateau {:.4}, valid {})",
                    fit.forward_rate(),
                    fit.gamma,
                    fit.p_infinity,
                    fit.exponential_valid
                ),
                None => println!(
                    "rate fit failed: {}",
                    outcome.fit_error.as_deref().unwrap_or("unknown")
                ),
            }
            Ok(runner::exit_code_for_transfer(&outcome) as u8)
        }
        Command::SweepRule2(ref args) => {
            let outcome = runner::run_rule2_sweep(&scenario, &overrides, &args.out)?;
            report_artifacts(&outcome.artifacts);
            println!(
                "baseline gamma0 {:.6} /us over {} cells",
                outcome.gamma0,
                outcome.cells.len()
            );
            Ok(0)
        }
        Command::Scaling(ref args) => {
            let outcome = runner::run_scaling(&scenario, &overrides, &args.out)?;
            report_artifacts(&outcome.artifacts);
            println!(
                "reference rate {:.6} /us, {} size combinations",
                outcome.gamma0,
                outcome.cells.len()
            );
            Ok(0)
        }
        Command::NoiseCalibrate(ref args) => {
            let outcome = runner::run_noise_calibration(&scenario, &overrides, &args.out)?;
            report_artifacts(&outcome.artifacts);
            println!(
                "fitted cutoff {:.3} (target {:.3}), fitted sigma^2 {:.3} (target {:.3})",
                outcome.fitted_cutoff,
                outcome.cutoff,
                outcome.fitted_sigma2,
                outcome.sigma * outcome.sigma
            );
            Ok(0)
        }
        Command::CircuitReduce(ref args) => {
            let outcome = runner::run_circuit_reduce(&scenario, &args.out)?;
            report_artifacts(&outcome.artifacts);
            println!(
                "dispersive regime ok: {}, worst eigenvalue deviation {:.3e}",
                outcome.dispersive_ok, outcome.max_rel_deviation
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
