//! `thinc`: extract proxy features, train per-theory GA2M classifiers, tune
//! and evaluate the voting ensemble, and export explanations.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use thinc_core::explain::OverlayShape;

#[derive(Parser, Debug)]
#[command(
    name = "thinc",
    version,
    about = "Interpretable humor classification from token-level channel series"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Overrides the seed in training settings and synth specs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "THINC_THREADS")]
    pub threads: Option<usize>,

    /// Where to write the run manifest (default: `<output>.manifest.json`).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
}

/// A theory config given as a file or as the name of a built-in one.
#[derive(Args, Debug)]
#[command(group(ArgGroup::new("theory_source").args(["config", "theory"])))]
pub struct TheorySource {
    /// Theory config file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Built-in theory: incongruity, relief, superiority or surprise_disambiguation.
    #[arg(long)]
    pub theory: Option<String>,
}

/// Per-theory classifiers and their feature matrices, joined by instance id.
#[derive(Args, Debug)]
pub struct Panel {
    #[arg(long, num_args = 1.., required = true)]
    pub models: Vec<PathBuf>,

    /// One matrix per model, in the same order.
    #[arg(long, num_args = 1.., required = true)]
    pub features: Vec<PathBuf>,

    /// `id,label` CSV; defaults to the labels stored in the first matrix.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Turn a corpus into a theory's feature matrix.
    Extract {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        source: TheorySource,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Train one GA2M classifier on a feature matrix.
    Train {
        #[arg(long)]
        features: PathBuf,
        /// Attaches feature specs and hypotheses and fixes the column set.
        #[command(flatten)]
        source: TheorySource,
        #[arg(long)]
        theory_name: Option<String>,
        /// Training settings (TOML); unset keys keep their defaults.
        #[arg(long)]
        settings: Option<PathBuf>,
        #[arg(long)]
        model_out: PathBuf,
    },
    /// Fit soft-voting weights that maximize average precision.
    TuneEnsemble {
        #[command(flatten)]
        panel: Panel,
        /// Name of the split the weights are fitted on, recorded in the ensemble.
        #[arg(long)]
        fit_split: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report ensemble and per-classifier metrics.
    Evaluate {
        #[arg(long)]
        ensemble: PathBuf,
        #[command(flatten)]
        panel: Panel,
        #[arg(long)]
        report_out: PathBuf,
    },
    /// Write per-classifier probabilities and ensemble scores.
    Predict {
        #[arg(long)]
        ensemble: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        models: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        features: Vec<PathBuf>,
        #[arg(long)]
        scores_out: PathBuf,
    },
    /// Export explanation data for a trained model.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[command(subcommand)]
        view: ExplainView,
    },
    /// Generate a synthetic corpus with planted signals.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Synth spec (TOML); flags below override it.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        positive_rate: Option<f64>,
        #[arg(long)]
        signal_strength: Option<f64>,
    },
}

#[derive(Subcommand, Debug)]
pub enum ExplainView {
    /// One feature's learned function with its bagging envelope.
    Function {
        #[arg(long)]
        feature: String,
        /// Scores agreement with a hypothesized shape.
        #[arg(long)]
        overlay: Option<OverlayShape>,
        #[arg(long, default_value_t = 1.0)]
        magnitude: f64,
        /// `.csv` writes plot rows; anything else writes JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-term contributions for one instance.
    Local {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean absolute contribution of every term over a matrix.
    Global {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot start {threads} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    match std::panic::catch_unwind(|| commands::run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_user_error() { 2 } else { 1 })
        }
        Err(_) => ExitCode::from(1),
    }
}
