use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use ffns::checks::CheckResult;
use ffns::config::load_config;
use ffns::error::{FfnsError, EXIT_CONFIG, EXIT_PASS};
use ffns::runner::{exit_code, resolve_out, Runner, Summary, KERNEL_CHECKS};

/// Forced Navier-Stokes far-field verification laboratory.
#[derive(Debug, Parser)]
#[command(name = "ffns", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario config file.
    #[arg(long, global = true, env = "FFNS_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true, env = "FFNS_OUT")]
    out: Option<PathBuf>,
    /// Worker threads; overrides `[output] threads`.
    #[arg(long, global = true, env = "FFNS_THREADS")]
    threads: Option<usize>,
    /// Comma-separated subset of the configured checks.
    #[arg(long, global = true, env = "FFNS_ONLY", value_delimiter = ',')]
    only: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Kernel, decomposition and kernel-integral checks.
    KernelCheck,
    /// Solve the scenario and store the trajectory.
    Simulate,
    /// Run trajectory checks against the stored trajectory.
    Verify,
    /// Collect stored check results into the JSON summary.
    Report,
    /// Everything, in order.
    All,
}

fn print_results(results: &[CheckResult]) {
    for r in results {
        let detail = match (&r.error, r.fits.first()) {
            (Some(e), _) => e.message.clone(),
            (None, Some(f)) => format!(
                "{} exponent {:.4} (predicted {:.4})",
                f.quantity, f.fitted, f.predicted
            ),
            _ => String::new(),
        };
        println!("{:<14} {:<9} {detail}", r.name, r.status.label());
        for n in r.notes.iter().filter(|n| n.starts_with("failed")) {
            println!("{:<14} {:<9} {n}", "", "");
        }
    }
}

fn print_summary(s: &Summary) {
    print_results(&s.checks);
    println!(
        "scenario {} ({}): {}",
        s.scenario,
        &s.scenario_hash[..16],
        s.verdict
    );
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let path = cli.config.clone().ok_or_else(|| {
        FfnsError::ConfigInvalid(vec!["--config (or FFNS_CONFIG) is required".into()])
    })?;
    let cfg = load_config(&path)?;
    let threads = cli.threads.or(cfg.threads()).unwrap_or(0);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let out = resolve_out(cli.out.as_deref(), &cfg);
    let mut runner = Runner::new(cfg, out, cli.only)?;
    Ok(match cli.command {
        Command::KernelCheck => {
            let r = runner.kernel_checks()?;
            print_results(&r);
            exit_code(&r)
        }
        Command::Simulate => {
            let traj = runner.simulate()?;
            println!(
                "solved {} slices in {} sweeps, final update {:e}",
                traj.times.len(),
                traj.iteration_log.len(),
                traj.iteration_log.last().copied().unwrap_or(0.0)
            );
            EXIT_PASS
        }
        Command::Verify => {
            if runner.selected().iter().all(|n| KERNEL_CHECKS.contains(n)) {
                EXIT_PASS
            } else {
                let traj = runner.load_trajectory()?;
                let r = runner.verify(&traj)?;
                print_results(&r);
                exit_code(&r)
            }
        }
        Command::Report => {
            let s = runner.report()?;
            print_summary(&s);
            s.exit_code
        }
        Command::All => {
            let s = runner.all()?;
            print_summary(&s);
            s.exit_code
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<FfnsError>()
                .map_or(EXIT_CONFIG, FfnsError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
