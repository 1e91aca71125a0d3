//! `codeorigin` command-line tool.
//!
//! Exit status: 0 on success, 1 when an operation fails, 2 on bad usage
//! (including an input corpus with no matching files).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use codeorigin::{Category, FeatureGroup, Label, Language, ModelKind};

#[derive(Debug, Parser)]
#[command(name = "codeorigin", version, about = "Stylometric human vs LLM source-code detection")]
pub struct Cli {
    /// Seed for every stochastic step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// TOML run configuration; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus directory (or a single file).
    pub corpus: PathBuf,
    #[arg(long, short)]
    pub language: Option<Language>,
    /// Minimum document frequency for vocabulary words.
    #[arg(long)]
    pub min_df: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract feature vectors from a corpus into CSV (or JSONL).
    Extract {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, short)]
        out: PathBuf,
        /// Use this vocabulary instead of building one from the corpus.
        #[arg(long, conflicts_with = "vocab_out")]
        vocab: Option<PathBuf>,
        /// Write the built vocabulary here.
        #[arg(long)]
        vocab_out: Option<PathBuf>,
        /// Label every file, ignoring `human/` and `llm/` directories.
        #[arg(long)]
        label: Option<Label>,
    },
    /// Train a model on an extracted dataset.
    Train {
        dataset: PathBuf,
        #[arg(long, short, default_value = "forest")]
        model: ModelKind,
        #[arg(long, short, default_value = "all")]
        group: FeatureGroup,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Score a dataset with a saved model.
    Eval {
        dataset: PathBuf,
        #[arg(long, short)]
        model: PathBuf,
        #[arg(long, short, default_value = "all")]
        group: FeatureGroup,
        /// Per-file predictions as CSV.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Metrics and resolved config as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Cross-validate every model on every feature group.
    Ablate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<ModelKind>>,
        #[arg(long, value_delimiter = ',')]
        groups: Option<Vec<FeatureGroup>>,
        /// Grid as CSV.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Full report and resolved config as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Tokens whose frequencies differ by more than half between corpora.
    Freqdiff {
        /// First corpus; with no second corpus its `human/` files are A
        /// and its `llm/` files are B.
        a: PathBuf,
        b: Option<PathBuf>,
        #[arg(long, short)]
        language: Option<Language>,
        #[arg(long, default_value = "identifiers", value_parser = parse_category)]
        category: Category,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Clean a repository manifest.
    Cleanse {
        #[arg(long)]
        manifest: PathBuf,
        /// Year window START:END (default: the latest two years present).
        #[arg(long)]
        window: Option<String>,
        /// Third-party name list (default: builtin).
        #[arg(long)]
        third_party: Option<PathBuf>,
        /// Latest plausible creation year (default: this year).
        #[arg(long)]
        max_year: Option<i32>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Compile a program and judge it against test cases.
    Judge {
        #[arg(long)]
        source: PathBuf,
        /// Task directory of input_<k>.txt / expected_<k>.txt, or a
        /// directory of such task directories.
        #[arg(long)]
        tests: PathBuf,
        #[arg(long, short)]
        language: Option<Language>,
        /// Toolchain TOML (default: g++ and javac).
        #[arg(long)]
        toolchain: Option<PathBuf>,
        /// Leave timings out of the report.
        #[arg(long)]
        no_timings: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Generate a two-style synthetic corpus.
    Synth {
        #[arg(long, short)]
        language: Option<Language>,
        #[arg(long, default_value_t = 200)]
        per_class: usize,
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn parse_category(s: &str) -> Result<Category, String> {
    Category::from_id(s).ok_or_else(|| {
        let ids: Vec<_> = Category::ALL.iter().map(|c| c.id()).collect();
        format!("unknown category `{s}` (expected one of {})", ids.join(", "))
    })
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Failed(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
