use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qcs::config::{Overrides, Run};
use qcs::pipeline::{self, Options};
use qcs_core::scoring::ScoringVariant;

/// Training-free search over hardware-aware variational circuits.
#[derive(Parser)]
#[command(name = "qcs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate candidate genomes and the manifest.
    Generate(Common),
    /// Compute CNR, RepCap and final scores for every candidate.
    Score(Common),
    /// Train candidates and record test metrics.
    TrainEval(Common),
    /// Correlate scores with test metrics.
    Correlate(Common),
    /// Run every stage in order.
    Pipeline(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Global seed, overriding `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict scoring and correlation to one variant.
    #[arg(long, value_parser = parse_variant)]
    variant: Option<ScoringVariant>,
    /// Train only the k best-scoring circuits.
    #[arg(long)]
    top_k: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn parse_variant(s: &str) -> Result<ScoringVariant, String> {
    s.parse().map_err(|e: qcs_core::Error| e.to_string())
}

fn run(stage: &str, common: &Common) -> anyhow::Result<()> {
    let overrides = Overrides { seed: common.seed, output_dir: common.out.clone(), variant: common.variant };
    let run = Run::load(&common.config, &overrides)?;
    let opts = Options { jobs: common.jobs, top_k: common.top_k, verbose: true };
    eprintln!("[{stage}] config_digest={} seed={}", run.digest, run.config.seed);
    match stage {
        "generate" => pipeline::cmd_generate(&run, &opts).map(drop),
        "score" => pipeline::cmd_score(&run, &opts).map(drop),
        "train-eval" => pipeline::cmd_train_eval(&run, &opts).map(drop),
        "correlate" => pipeline::cmd_correlate(&run, &opts).map(drop),
        _ => pipeline::pipeline(&run, &opts).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, common) = match &cli.command {
        Command::Generate(c) => ("generate", c),
        Command::Score(c) => ("score", c),
        Command::TrainEval(c) => ("train-eval", c),
        Command::Correlate(c) => ("correlate", c),
        Command::Pipeline(c) => ("pipeline", c),
    };
    match run(stage, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("qcs {stage}: error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
