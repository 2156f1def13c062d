use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use synergy_lab::{configure_threads, execute, Experiment, Format, Invocation};

#[derive(Parser)]
#[command(name = "synergy-lab", version, about = "Exact and estimated synergy experiments on toy problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// csv, json or plotdata.
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Write here instead of stdout (overrides the config's output_path).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Report information quantities in bits.
    #[arg(long)]
    bits: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Exact synergy of one additive model.
    Additive(Common),
    /// Synergy over a grid of mixing weights.
    SweepLambda(Common),
    /// Exact synergy and lower bound as the action space grows.
    SweepNa(Common),
    /// Synergy of each transformation family on a toy image dataset.
    Zoo(Common),
    /// Marginal independence and conditional dependence in collider models.
    ExplainAway(Common),
    /// Class-feature gain and related checks for every encoder.
    Encoders(Common),
    /// Generalization bound on every encoder.
    BoundCheck(Common),
    /// V-information under a predictive family.
    Vinfo(Common),
    /// Cross-entropy estimate of the synergy.
    Estimate(Common),
    /// Bottleneck encoder with and against class supervision.
    Controlled(Common),
}

impl Command {
    fn split(self) -> (Experiment, Common) {
        match self {
            Command::Additive(c) => (Experiment::Additive, c),
            Command::SweepLambda(c) => (Experiment::SweepLambda, c),
            Command::SweepNa(c) => (Experiment::SweepNa, c),
            Command::Zoo(c) => (Experiment::Zoo, c),
            Command::ExplainAway(c) => (Experiment::ExplainAway, c),
            Command::Encoders(c) => (Experiment::Encoders, c),
            Command::BoundCheck(c) => (Experiment::BoundCheck, c),
            Command::Vinfo(c) => (Experiment::Vinfo, c),
            Command::Estimate(c) => (Experiment::Estimate, c),
            Command::Controlled(c) => (Experiment::Controlled, c),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (experiment, c) = cli.command.split();
    let inv = Invocation { config: c.config, format: c.format, out: c.out, seed: c.seed, bits: c.bits };
    let result = configure_threads().and_then(|()| execute(experiment, &inv));
    match result {
        Ok(Some(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("synergy-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
