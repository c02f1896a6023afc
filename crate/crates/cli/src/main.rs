use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

mod build;
mod eval;
mod train;

#[derive(Parser)]
#[command(name = "ecg", version, about = "Build entity context graphs, train entity embeddings and evaluate them")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

/// Options shared by the training commands.
#[derive(Args, Debug, Clone)]
pub struct TrainOpts {
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Individual overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Checkpoint directory to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Continue from this checkpoint until the configured epoch count.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ClassifierArg {
    Nb,
    Knn,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Extract an ECG from entity-centric documents (JSON lines).
    BuildEcg {
        /// Documents, one JSON object per line: either
        /// {"id","primary_entity","paragraphs":[{"tokens","mentions"}]} or
        /// {"id","primary_entity","text"} (needs --dictionary).
        #[arg(long)]
        input: PathBuf,
        /// `surface<TAB>entity` lines used to spot mentions in raw text.
        #[arg(long)]
        dictionary: Option<PathBuf>,
        /// Maximum relation length in tokens.
        #[arg(long, default_value_t = 400)]
        m: usize,
        /// Stopword file (one word per line) replacing the built-in English list.
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Match dictionary surfaces case-sensitively.
        #[arg(long)]
        case_sensitive: bool,
        /// Drop the tail's own mention tokens from its relation text.
        #[arg(long)]
        remove_mention_tokens: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract a user-review-aspect ECG from reviews (JSON lines of {"user","text","product"}).
    BuildEcgReviews {
        #[arg(long)]
        input: PathBuf,
        /// `surface<TAB>aspect` lines.
        #[arg(long)]
        aspects: PathBuf,
        #[arg(long, default_value_t = 120)]
        m: usize,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train entity embeddings and the relation encoder on an ECG.
    Train {
        #[arg(long)]
        ecg: PathBuf,
        /// Pretrained word vectors (`token v1 … vd` per line).
        #[arg(long)]
        words: PathBuf,
        #[command(flatten)]
        opts: TrainOpts,
    },
    /// Train on labelled KG triples (`head<TAB>relation<TAB>tail`).
    TrainKg {
        #[arg(long)]
        kg: PathBuf,
        #[command(flatten)]
        opts: TrainOpts,
    },
    /// Train the KG and ECG networks together over one entity table.
    TrainJoint {
        #[arg(long)]
        kg: PathBuf,
        #[arg(long)]
        ecg: PathBuf,
        #[arg(long)]
        words: PathBuf,
        #[command(flatten)]
        opts: TrainOpts,
    },
    /// Link prediction: mean rank and Hits@10 over head and tail prediction.
    EvalLp {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Test triples as a KG triple file.
        #[arg(long, conflicts_with = "test_ecg", required_unless_present = "test_ecg")]
        test_kg: Option<PathBuf>,
        /// Test triples as an ECG file (needs --words).
        #[arg(long)]
        test_ecg: Option<PathBuf>,
        #[arg(long)]
        words: Option<PathBuf>,
        /// Known-true triples (same format as the test file) removed from
        /// the candidate pool; implies the filtered setting.
        #[arg(long)]
        known: Vec<PathBuf>,
        /// Filtered setting using the test triples (and any --known files).
        #[arg(long)]
        filtered: bool,
        /// Append a JSON record of the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validated classification of labelled entities.
    EvalCls {
        #[arg(long)]
        checkpoint: PathBuf,
        /// `entity<TAB>label` lines.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        classifier: ClassifierArg,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 5)]
        neighbours: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Entities closest to one entity by cosine similarity.
    Nearest {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        entity: String,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the entity table as `entity<TAB>v1<TAB>…<TAB>vk`.
    ExportEmbeddings {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::BuildEcg {
            input,
            dictionary,
            m,
            stopwords,
            case_sensitive,
            remove_mention_tokens,
            out,
        } => build::build_ecg(&build::BuildArgs {
            input,
            dictionary,
            m,
            stopwords,
            case_fold: !case_sensitive,
            remove_mention_tokens,
            out,
        }),
        Command::BuildEcgReviews {
            input,
            aspects,
            m,
            stopwords,
            out,
        } => build::build_reviews(&input, &aspects, m, stopwords.as_deref(), &out),
        Command::Train { ecg, words, opts } => train::train(Some(&ecg), None, Some(&words), &opts),
        Command::TrainKg { kg, opts } => train::train(None, Some(&kg), None, &opts),
        Command::TrainJoint { kg, ecg, words, opts } => train::train(Some(&ecg), Some(&kg), Some(&words), &opts),
        Command::EvalLp {
            checkpoint,
            test_kg,
            test_ecg,
            words,
            known,
            filtered,
            out,
        } => eval::link_prediction(&eval::LpArgs {
            checkpoint,
            test_kg,
            test_ecg,
            words,
            known,
            filtered,
            out,
        }),
        Command::EvalCls {
            checkpoint,
            labels,
            classifier,
            folds,
            neighbours,
            seed,
            out,
        } => eval::classify(&checkpoint, &labels, classifier, folds, neighbours, seed, out.as_deref()),
        Command::Nearest { checkpoint, entity, n, out } => eval::nearest(&checkpoint, &entity, n, out.as_deref()),
        Command::ExportEmbeddings { checkpoint, out } => eval::export(&checkpoint, out.as_deref()),
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
