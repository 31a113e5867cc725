mod config;
mod output;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use crate::output::OutDir;
use crate::stages::Ctx;

/// Topic discovery, clade labeling, sentiment classifiers and brand
/// reputation for comment corpora.
#[derive(Debug, Parser)]
#[command(name = "cladesense", version)]
struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true, env = "CLADESENSE_CONFIG")]
    config: Option<PathBuf>,

    /// Output directory; overrides the config's `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Fail on malformed input records and unassigned clades.
    #[arg(long, global = true)]
    strict: bool,

    /// Override a config value, e.g. `--set topics.eps=0.8`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Most frequent n-grams.
    Ngrams,
    /// Embed, cluster and describe topics.
    Topics,
    /// Ward dendrogram over topic centroids and the clade cut.
    Clades,
    /// Apply clade sentiments and propagate them to comments.
    Label,
    /// Train every classifier on every seed.
    Train {
        /// Split before oversampling.
        #[arg(long)]
        split_first: bool,
    },
    /// Score the trained models on their test folds.
    Evaluate,
    /// Rank topics by similarity to each brand.
    Reputation,
    /// Summarize all stages.
    Report,
    /// Run every stage in order, stopping at the first failure.
    RunAll {
        /// Split before oversampling.
        #[arg(long)]
        split_first: bool,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut loaded = config::load(cli.config.as_deref(), &cli.overrides)?;
    let split_first = matches!(
        cli.command,
        Command::Train { split_first: true } | Command::RunAll { split_first: true }
    );
    if split_first {
        loaded.config.train.split_first = true;
    }
    let out_path = stages::out_dir(cli.out, &loaded);
    let out = OutDir::acquire(&out_path)?;
    let ctx = Ctx {
        loaded,
        out,
        strict: cli.strict,
    };
    match cli.command {
        Command::Ngrams => ctx.run("ngrams"),
        Command::Topics => ctx.run("topics"),
        Command::Clades => ctx.run("clades"),
        Command::Label => ctx.run("label"),
        Command::Train { .. } => ctx.run("train"),
        Command::Evaluate => ctx.run("evaluate"),
        Command::Reputation => ctx.run("reputation"),
        Command::Report => ctx.run("report"),
        Command::RunAll { .. } => ctx.run_all(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
