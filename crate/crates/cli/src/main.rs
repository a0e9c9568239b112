use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fibercap::bounds::RateMethod;
use fibercap_cli::{compare, run, RawConfig, RunConfig};

/// Achievable-rate power sweeps for the finite-memory fiber channel.
///
/// Without a subcommand, runs a single sweep and writes CSV.
#[derive(Parser)]
#[command(name = "fibercap", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep several config files over one grid into a single CSV.
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// key = value file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// nonlinearity coefficient (W^-2)
    #[arg(long)]
    eta: Option<f64>,
    /// ASE noise variance (W)
    #[arg(long)]
    sigma_a2: Option<f64>,
    /// channel memory N
    #[arg(long)]
    memory: Option<usize>,
    /// closed-form, gn, mc or cgm
    #[arg(long)]
    method: Option<RateMethod>,
    #[arg(long, allow_hyphen_values = true)]
    pmin_dbm: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pmax_dbm: Option<f64>,
    #[arg(long)]
    pstep_dbm: Option<f64>,
    /// mc: samples per grid point
    #[arg(long)]
    ns: Option<usize>,
    /// mc: quantizer points per axis are 2 nq - 1
    #[arg(long)]
    nq: Option<usize>,
    /// mc: quantizer tail probability
    #[arg(long)]
    eps: Option<f64>,
    /// cgm: mixture order
    #[arg(long)]
    k: Option<usize>,
    /// cgm: objective evaluations per grid point
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// output CSV (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn into_config(self) -> fibercap_cli::Result<RunConfig> {
        let base = match &self.config {
            Some(path) => RawConfig::from_file(path)?,
            None => RawConfig::default(),
        };
        let flags = RawConfig {
            eta: self.eta,
            sigma_a2: self.sigma_a2,
            memory: self.memory,
            method: self.method,
            pmin_dbm: self.pmin_dbm,
            pmax_dbm: self.pmax_dbm,
            pstep_dbm: self.pstep_dbm,
            ns: self.ns,
            nq: self.nq,
            eps: self.eps,
            k: self.k,
            budget: self.budget,
            seed: self.seed,
            out: self.out,
            label: None,
        };
        base.merge(flags).build()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Some(Command::Compare { configs, out }) => configs
            .iter()
            .map(|p| RunConfig::from_file(p))
            .collect::<fibercap_cli::Result<Vec<_>>>()
            .and_then(|cfgs| compare(&cfgs, out.as_deref()).map(drop)),
        None => cli.run.into_config().and_then(|cfg| run(&cfg).map(drop)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
