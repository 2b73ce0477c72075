use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::{cmd_fig1, cmd_simulate, cmd_surface, cmd_train, CliError, CliResult, ExperimentConfig, RunOptions};
use crate::trainer::TrainableParam;

#[derive(Debug, Parser)]
#[command(name = "qdc", version, about = "Dissipative quantum binary classifier experiments")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Steady ⟨σz⟩ against the coupling offset Δg/g, simulated and closed form.
    Fig1(Common),
    /// Gradient-descent training, one trace per learning rate.
    Train(Common),
    /// Cost surface over two parameters with the descent path overlaid.
    Surface(Common),
    /// Collision-by-collision evolution to the steady state.
    Simulate(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment file (`key = value` lines). Optional for fig1.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Parameter family: g, theta or phi.
    #[arg(long)]
    param: Option<TrainableParam>,
    /// Comma-separated learning rates, replacing train.eta.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    eta: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with status 3 if any run stops short of its tolerance.
    #[arg(long)]
    require_converged: bool,
}

fn load(path: Option<&PathBuf>, required: bool) -> CliResult<ExperimentConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            ExperimentConfig::parse(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
        None if required => Err(CliError::Config("--config is required for this command".into())),
        None => Ok(ExperimentConfig::default()),
    }
}

/// Parses `args` (program name first) and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let (common, required) = match &cli.command {
        Command::Fig1(c) => (c, false),
        Command::Train(c) | Command::Surface(c) | Command::Simulate(c) => (c, true),
    };
    let opts = RunOptions {
        param: common.param,
        etas: common.eta.clone(),
        seed: common.seed,
        require_converged: common.require_converged,
    };
    let result = load(common.config.as_ref(), required).and_then(|cfg| match &cli.command {
        Command::Fig1(_) => cmd_fig1(&cfg, &common.out, &opts),
        Command::Train(_) => cmd_train(&cfg, &common.out, &opts),
        Command::Surface(_) => cmd_surface(&cfg, &common.out, &opts),
        Command::Simulate(_) => cmd_simulate(&cfg, &common.out, &opts),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qdc: {e}");
            e.exit_code()
        }
    }
}
