//! `hillstab`: stability certificates and simulations for damped Hill,
//! Duffing and wave equations.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use commands::{
    CertifyArgs, DuffingArgs, ResonanceArgs, SimulateHillArgs, Status, SweepArgs, WaveArgs,
};
use config::Config;

#[derive(Parser, Debug)]
#[command(name = "hillstab", version, about, propagate_version = true)]
struct Cli {
    /// Flat TOML file of `key = value` parameters; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check u'' + cu' + (b + a(t))u = 0 with 0 ≤ a ≤ C for exponential stability.
    Certify(CertifyArgs),
    /// Propagate the Hill equation for a piecewise-constant a(t).
    SimulateHill(SimulateHillArgs),
    /// Build and verify the parametric-resonance counterexample.
    Resonance(ResonanceArgs),
    /// Ultimate bound and convergence of two forced Duffing solutions.
    Duffing(DuffingArgs),
    /// Synchronization of two solutions of the forced cubic wave equation.
    Wave(WaveArgs),
    /// Batch runs: sharpness ratios, resonance families, certification grids.
    Sweep(SweepArgs),
    /// Run the command named by the `command` key of the config file.
    Run,
}

fn take_command(cfg: &mut Config, expected: Option<&str>) -> Result<String> {
    let named = cfg.string(None, "command")?;
    match (named, expected) {
        (Some(n), Some(e)) if n != e => {
            bail!("config key `command`: file is for `{n}` but `{e}` was invoked")
        }
        (Some(n), _) => Ok(n),
        (None, Some(e)) => Ok(e.to_string()),
        (None, None) => bail!("config key `command` is required by `run`"),
    }
}

fn dispatch(cli: Cli) -> Result<Status> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    let command = match cli.command {
        Command::Run => {
            if cli.config.is_none() {
                bail!("`run` needs --config");
            }
            match take_command(&mut cfg, None)?.as_str() {
                "certify" => Command::Certify(Default::default()),
                "simulate-hill" => Command::SimulateHill(Default::default()),
                "resonance" => Command::Resonance(Default::default()),
                "duffing" => Command::Duffing(Default::default()),
                "wave" => Command::Wave(Default::default()),
                "sweep" => Command::Sweep(Default::default()),
                other => bail!("config key `command`: unknown command `{other}`"),
            }
        }
        c => c,
    };
    match command {
        Command::Certify(a) => {
            take_command(&mut cfg, Some("certify"))?;
            commands::certify_cmd(a, &mut cfg)
        }
        Command::SimulateHill(a) => {
            take_command(&mut cfg, Some("simulate-hill"))?;
            commands::simulate_hill_cmd(a, &mut cfg)
        }
        Command::Resonance(a) => {
            take_command(&mut cfg, Some("resonance"))?;
            commands::resonance_cmd(a, &mut cfg)
        }
        Command::Duffing(a) => {
            take_command(&mut cfg, Some("duffing"))?;
            commands::duffing_cmd(a, &mut cfg)
        }
        Command::Wave(a) => {
            take_command(&mut cfg, Some("wave"))?;
            commands::wave_cmd(a, &mut cfg)
        }
        Command::Sweep(a) => {
            take_command(&mut cfg, Some("sweep"))?;
            commands::sweep_cmd(a, &mut cfg)
        }
        Command::Run => unreachable!("resolved above"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::Uncertified(msg)) => {
            eprintln!("not certified: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
