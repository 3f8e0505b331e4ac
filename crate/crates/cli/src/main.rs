use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use twinbeam_cli::commands::{
    cmd_finetune, cmd_generate, cmd_nn_baseline, cmd_sweep_twinsize, cmd_zeroshot, RunContext,
};

/// Digital-twin beam selection experiments: simulate a site, train beam
/// classifiers on the twin, and measure how they transfer to a mismatched
/// surrogate-real deployment.
#[derive(Debug, Parser)]
#[command(name = "twinbeam", version, about)]
struct Cli {
    /// Experiment config JSON; omitted = the built-in default experiment.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (overrides the config's output_dir).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Comma-separated seed list overriding the config's seeds.
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    seeds: Option<Vec<u64>>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the twin and surrogate-real datasets.
    Generate,
    /// Train on the twin and evaluate zero-shot on surrogate-real data.
    Zeroshot {
        /// Evaluate on held-out twin points instead (sanity check; expects
        /// near-perfect accuracy).
        #[arg(long)]
        eval_on_twin: bool,
    },
    /// Learning curve over twin training-set sizes.
    SweepTwinsize,
    /// Fine-tune zero-shot models on small real budgets vs. from scratch.
    Finetune,
    /// Nearest-neighbor baseline: copy the closest twin point's beams.
    NnBaseline,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let ctx = RunContext::new(cli.config.as_deref(), cli.out, cli.seeds)?;
    match cli.command {
        Command::Generate => cmd_generate(&ctx),
        Command::Zeroshot { eval_on_twin } => cmd_zeroshot(&ctx, eval_on_twin),
        Command::SweepTwinsize => cmd_sweep_twinsize(&ctx),
        Command::Finetune => cmd_finetune(&ctx),
        Command::NnBaseline => cmd_nn_baseline(&ctx),
    }
}
