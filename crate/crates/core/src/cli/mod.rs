//! Command-line front end: `build-graph`, `corrupt`, `decompose`, `train`,
//! `eval`, `gradcheck` and `synth`.
//!
//! Exit codes: 0 success, 1 I/O or data error, 2 configuration or usage
//! error, 3 numerical failure.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{parse_noise, Loaded, RunConfig, Source, RUN_KEYS};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) | Error::Parse { .. } | Error::OracleScaleExceeded { .. } => EXIT_CONFIG,
        Error::Diverged { .. } => EXIT_NUMERIC,
        Error::InvalidData(_) | Error::Io(_) => EXIT_DATA,
    }
}

#[derive(Debug, Parser)]
#[command(name = "rgcn", version, about = "Robust graph convolutional networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a feature graph from points, a pixel grid or a text corpus.
    BuildGraph(BuildGraphArgs),
    /// Inject masking or Gaussian noise into a matrix.
    Corrupt(CorruptArgs),
    /// Split a matrix into low-rank and sparse parts with a robust autoencoder.
    Decompose(DecomposeArgs),
    /// Train a model from a `key = value` config.
    Train(RunArgs),
    /// Score a saved checkpoint on the test split of a config's data.
    Eval(EvalArgs),
    /// Compare analytic and finite-difference gradients on a toy model.
    Gradcheck(GradcheckArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct BuildGraphArgs {
    /// Matrix whose rows are the vertices (e.g. word embeddings).
    #[arg(long, conflicts_with_all = ["grid", "corpus"])]
    pub points: Option<PathBuf>,
    /// Pixel grid `HxW`.
    #[arg(long)]
    pub grid: Option<String>,
    /// One document per line; builds the bag-of-words matrix too.
    #[arg(long, requires = "embeddings")]
    pub corpus: Option<PathBuf>,
    /// Word embeddings, one `word v1 v2 ...` line per word.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Labels of the corpus documents, filtered along with them.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    pub k: usize,
    #[arg(long, default_value = "euclidean")]
    pub metric: String,
    #[arg(long, default_value_t = 10000)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 5)]
    pub min_doc_len: usize,
    #[arg(long, default_value_t = 5)]
    pub min_df: usize,
    /// Edge list file, or the output directory with `--corpus`.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, default_value = "masking")]
    pub kind: String,
    #[arg(long)]
    pub level: f64,
    #[arg(long, default_value_t = crate::noise::MASK_VALUE)]
    pub val: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mask the same columns in every row.
    #[arg(long)]
    pub shared_columns: bool,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub output_dir: PathBuf,
    /// Defaults to `1 / sqrt(max(N, M))`.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Threshold continuation factor; 1 keeps lambda fixed.
    #[arg(long, default_value_t = 1.0)]
    pub lambda_decay: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub tol: f64,
    #[arg(long, default_value_t = 20)]
    pub max_outer: usize,
    #[arg(long, default_value_t = 50)]
    pub inner_epochs: usize,
    /// Encoder widths, comma separated.
    #[arg(long, default_value = "16")]
    pub hidden: String,
    #[arg(long, default_value = "linear")]
    pub activation: String,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 100)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Planted low-rank part, for recovery scores.
    #[arg(long, requires = "truth_e")]
    pub truth_l: Option<PathBuf>,
    /// Planted sparse part, for recovery scores.
    #[arg(long)]
    pub truth_e: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// `key = value` config file.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "run")]
    pub output_dir: PathBuf,
    /// `--key value` overrides of config entries.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Config naming the data; model keys come from the checkpoint.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    pub vertices: usize,
    #[arg(long, default_value_t = 4)]
    pub batch: usize,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// `classification`, `multiview` or `lowrank-sparse`.
    #[arg(long, default_value = "classification")]
    pub kind: String,
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub vertices: usize,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long, default_value_t = 400)]
    pub train: usize,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[arg(long)]
    pub spread: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub views: usize,
    /// Low-rank fixture: rows, columns, rank, spike fraction and magnitude.
    #[arg(long, default_value_t = 20)]
    pub rows: usize,
    #[arg(long, default_value_t = 20)]
    pub cols: usize,
    #[arg(long, default_value_t = 1)]
    pub rank: usize,
    #[arg(long, default_value_t = 0.05)]
    pub spike_fraction: f64,
    #[arg(long, default_value_t = 10.0)]
    pub spike_magnitude: f64,
}

/// Pairs `--key value` (or `--key=value`) tokens.
pub fn parse_overrides(tokens: &[String]) -> crate::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = tokens.iter();
    while let Some(tok) = it.next() {
        let Some(key) = tok.strip_prefix("--") else {
            return Err(Error::InvalidParameter(format!("expected --key, got {tok:?}")));
        };
        match key.split_once('=') {
            Some((k, v)) => out.push((k.replace('-', "_"), v.to_string())),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| Error::InvalidParameter(format!("--{key} needs a value")))?;
                out.push((key.replace('-', "_"), v.clone()));
            }
        }
    }
    Ok(out)
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
