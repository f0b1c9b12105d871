use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use bdglab::config::RunConfig;
use bdglab::{check, commands, CliError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bdglab", version, about = "Stationary BdG states on a magnetic lattice cell")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config entry, e.g. `--set thermo.t=0.05`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum of the magnetic Laplacian with Landau clusters.
    Spectrum(Common),
    /// Translation-invariant normal state.
    Normal(Common),
    /// Critical temperature from the lowest Hessian eigenvalue.
    Tc(Common),
    /// Self-consistent vortex lattice from the unstable mode.
    Scf(Common),
    /// Invariant suite.
    Check(Common),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (Command::Spectrum(c) | Command::Normal(c) | Command::Tc(c) | Command::Scf(c) | Command::Check(c)) =
        &cli.command;
    let cfg = RunConfig::load(&c.config, &c.overrides)?;
    let out = c.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    commands::write_resolved_config(&cfg, &out)?;
    match cli.command {
        Command::Spectrum(_) => {
            let s = commands::spectrum(&cfg, &out)?;
            println!("{} eigenvalues in {} clusters", s.values.len(), s.clusters.len());
        }
        Command::Normal(_) => {
            let n = commands::normal(&cfg, &out)?;
            println!("xi = {:e}, residual = {:e}", n.xi, n.residual);
        }
        Command::Tc(_) => {
            for r in commands::tc(&cfg, &out)? {
                println!("b = {:e}: {} {}", r.b, r.verdict, r.t_c.map_or_else(String::new, |t| format!("{t:e}")));
            }
        }
        Command::Scf(_) => {
            let s = commands::scf(&cfg, &out).context("scf run")?;
            println!(
                "{} in {} iterations, order parameter {:e}, dF {:e}",
                s.verdict, s.iterations, s.order_parameter, s.delta_f
            );
        }
        Command::Check(_) => {
            let r = check::check(&cfg, &out).context("invariant suite")?;
            println!("{} checks passed", r.checks.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
