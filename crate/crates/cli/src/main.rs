mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Interpretable claim classification: train students, explain predictions,
/// cross-validate pipelines.
#[derive(Debug, Parser)]
#[command(name = "claimlens", version)]
pub struct Cli {
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for every random choice in the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a dataset and write it as canonical JSONL.
    Ingest {
        input: PathBuf,
        /// Input format; guessed from the extension when omitted.
        #[arg(long)]
        format: Option<String>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Back-translate every original claim and append the paraphrases.
    Augment(AugmentArgs),
    /// Logistic regression on hard labels.
    Train(FitArgs),
    /// Logistic student fitted to teacher probabilities.
    Distill {
        #[command(flatten)]
        fit: FitArgs,
        /// Teacher-target JSONL covering every claim.
        #[arg(long)]
        teacher: PathBuf,
        /// Weight of the teacher term in [0, 1].
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        temperature: Option<f64>,
    },
    /// Single CART tree.
    Tree {
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        min_leaf: Option<usize>,
    },
    /// Random forest.
    Forest {
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long)]
        n_trees: Option<usize>,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        min_leaf: Option<usize>,
        #[arg(long)]
        feature_fraction: Option<f64>,
        #[arg(long)]
        no_bootstrap: bool,
    },
    /// Attribute one prediction to words and render an explanation card.
    Explain(ExplainArgs),
    /// Stratified k-fold cross-validation with a model comparison report.
    Eval(EvalArgs),
    /// Write the planted synthetic corpus.
    Synth {
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        n_claims: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Training dataset (JSONL or CSV).
    pub dataset: PathBuf,
    /// Output directory for model.json, vectorizer.json and the manifest.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// gd or adam.
    #[arg(long)]
    pub optimizer: Option<String>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    pub dataset: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Pivot language code.
    #[arg(long)]
    pub pivot: Option<String>,
    /// train_folds_only or whole_dataset.
    #[arg(long)]
    pub scope: Option<String>,
    /// JSONL of {"id", "paraphrase"} pairs used instead of a live service.
    #[arg(
        long,
        conflicts_with = "endpoint",
        required_unless_present = "endpoint"
    )]
    pub fixture: Option<PathBuf>,
    /// Translation service URL.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Environment variable holding the service's bearer token.
    #[arg(long)]
    pub token_env: Option<String>,
    #[arg(long)]
    pub max_concurrency: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// Directory written by train, distill, tree or forest.
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset supplying the background rows and, with --id, the claim.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, conflicts_with = "text", required_unless_present = "text")]
    pub id: Option<String>,
    /// Free text to explain instead of a dataset record.
    #[arg(long)]
    pub text: Option<String>,
    /// linear, exact, tree or sampling.
    #[arg(long)]
    pub method: Option<String>,
    /// T, TSE or TSESE.
    #[arg(long)]
    pub tier: Option<String>,
    /// json, html or terminal.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Permutations for the sampling method.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub background_size: Option<usize>,
    /// Write the card here instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub dataset: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub k: Option<u64>,
    /// Models to compare, comma separated: logistic, distilled, tree, forest.
    #[arg(long, value_delimiter = ',')]
    pub model: Vec<String>,
    /// Report formats, comma separated: markdown, csv, json.
    #[arg(long, value_delimiter = ',')]
    pub report: Vec<String>,
    /// Teacher targets, required for the distilled model.
    #[arg(long)]
    pub teacher: Option<PathBuf>,
    /// train_folds_only or whole_dataset.
    #[arg(long)]
    pub scope: Option<String>,
}

/// Invalid input detected by the CLI itself.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<claimlens::Error>() {
            return if e.is_user_error() { 2 } else { 1 };
        }
        if cause.is::<UsageError>() || cause.is::<std::io::Error>() || cause.is::<toml::de::Error>()
        {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
