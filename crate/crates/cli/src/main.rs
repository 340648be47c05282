//! `mhd`: batch front end for the solver, relative-energy experiments,
//! measure-valued audits and closure checks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mhd_core::harness::{
    cmd_dmv_audit, cmd_eos_check, cmd_kp_check, cmd_relent, cmd_simulate, AuditFault, HarnessError, ReferenceKind,
    RunConfig,
};

/// Exit status when a command ran but its check failed.
const CHECK_FAILED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "mhd", version, about = "Compressible resistive MHD solver and diagnostics")]
struct Cli {
    /// Override the random seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output directory; overrides the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gibbs, stability and structural checks of the configured closure.
    EosCheck { config: PathBuf },
    /// Run the configuration and write the time series and snapshots.
    Simulate { config: PathBuf },
    /// Relative energy against a reference, with the amplitude sweep.
    Relent {
        config: PathBuf,
        #[arg(long, default_value = "equilibrium", value_parser = ["equilibrium", "fine"])]
        reference: String,
        /// Skip the amplitude sweep.
        #[arg(long)]
        no_sweep: bool,
    },
    /// Audit the weak identities on a seeded ensemble.
    DmvAudit {
        config: PathBuf,
        #[arg(long, default_value_t = 4)]
        ensemble: usize,
        /// Negative control: flip-heating, mass-loss, momentum-kick, monopole,
        /// entropy-drain or corrupt-strain.
        #[arg(long)]
        fault: Option<String>,
    },
    /// Korn-Poincare sweep on the configured grid and its refinement.
    KpCheck {
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        sweep: usize,
    },
}

fn load(path: &PathBuf, cli: &Cli) -> Result<RunConfig, HarnessError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.out.is_some() {
        cfg.out.clone_from(&cli.out);
    }
    Ok(cfg)
}

fn print<T: serde::Serialize>(report: &T) -> Result<(), HarnessError> {
    println!("{}", serde_json::to_string_pretty(report)?);
    Ok(())
}

/// Runs the command; `Ok(false)` means the report failed its check.
fn execute(cli: &Cli) -> Result<bool, HarnessError> {
    match &cli.command {
        Command::EosCheck { config } => {
            let cfg = load(config, cli)?;
            let rep = cmd_eos_check(&cfg, cfg.out.as_deref())?;
            print(&rep)?;
            eprintln!(
                "eos-check {}: gibbs {}, stability {}, structural {}",
                rep.eos,
                verdict(rep.gibbs.passed),
                verdict(rep.stability.passed),
                rep.structural_status
            );
            Ok(rep.passed)
        }
        Command::Simulate { config } => {
            let cfg = load(config, cli)?;
            let sc = cfg.scenario()?;
            let rep = cmd_simulate(&sc, cfg.out.as_deref())?;
            print(&rep)?;
            Ok(true)
        }
        Command::Relent { config, reference, no_sweep } => {
            let cfg = load(config, cli)?;
            let sc = cfg.scenario()?;
            let kind: ReferenceKind = reference.parse()?;
            let rep = cmd_relent(&sc, kind, !no_sweep, cfg.out.as_deref())?;
            print(&rep)?;
            eprintln!(
                "relent: sup H = {:e}, c_fit = {}, sweep slope = {}",
                rep.sup_h, rep.gronwall.c_fit, rep.sweep_slope
            );
            Ok(true)
        }
        Command::DmvAudit { config, ensemble, fault } => {
            let cfg = load(config, cli)?;
            let sc = cfg.scenario()?;
            let fault = fault.as_deref().map(str::parse::<AuditFault>).transpose()?;
            let rep = cmd_dmv_audit(&sc, *ensemble, fault, cfg.out.as_deref())?;
            print(&rep)?;
            for id in &rep.audit.identities {
                eprintln!(
                    "{:<26} {} worst {:+.3e} ({}) tol {:.3e}",
                    id.identity,
                    verdict(id.passed),
                    id.worst_residual,
                    id.worst_test,
                    id.tolerance
                );
            }
            Ok(rep.audit.passed)
        }
        Command::KpCheck { config, sweep } => {
            let cfg = load(config, cli)?;
            let sc = cfg.scenario()?;
            let rep = cmd_kp_check(&sc, *sweep, cfg.out.as_deref())?;
            print(&rep)?;
            Ok(rep.stable)
        }
    }
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    if let Err(e) = pool {
        eprintln!("error: cannot start the worker pool: {e}");
        return ExitCode::FAILURE;
    }
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
