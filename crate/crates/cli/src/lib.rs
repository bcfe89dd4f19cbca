//! The `hyperkg` command line: training, evaluation, verification, degree
//! analysis and synthetic dataset generation.
//!
//! Machine-readable results go to stdout or files, progress to stderr.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hyperkg::Error;
use serde_json::{Map, Value};

pub mod commands;
pub mod config;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_VOCAB: i32 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidArgument(_) | Error::Infeasible(_) => EXIT_CONFIG,
            Error::Parse { .. }
            | Error::UnknownSymbol { .. }
            | Error::IdOutOfRange { .. }
            | Error::EmptyRelation(_)
            | Error::Io { .. }
            | Error::Json(_) => EXIT_DATA,
            Error::NumericAbort(_) | Error::NonFinite { .. } => EXIT_NUMERIC,
            Error::VocabMismatch { .. } => EXIT_VOCAB,
            _ => EXIT_FAILURE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hyperkg", version, about = "Knowledge-base embeddings in the Poincaré ball")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write its log, checkpoints and test report.
    Train(TrainArgs),
    /// Evaluate a checkpoint with filtered ranking.
    Eval(EvalArgs),
    /// Run the region, counterexample and gradient checks.
    Verify(VerifyArgs),
    /// Degree distribution and power-law fit of a dataset.
    AnalyzeDegrees(DegreeArgs),
    /// Generate a synthetic dataset from the is_a/part_of rules.
    GenDataset(GenArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Hyper-parameter preset (wn18rr, wn18rr-mobius, wn18rr-noreg,
    /// fb15k237, fb15k237-mobius, fb15k237-noreg, wd, wdpp).
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON file with configuration keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub negs_e: Option<usize>,
    #[arg(long)]
    pub negs_r: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub beta: Option<usize>,
    /// euclidean-add or mobius-add
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[arg(long)]
    pub batches_per_epoch: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// bernoulli or uniform
    #[arg(long)]
    pub corruption_mode: Option<String>,
    #[arg(long)]
    pub full_reg_sweep: Option<bool>,
    /// Comma-separated Hits@k cutoffs for the final report.
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
}

impl TrainArgs {
    /// The flags that were given, keyed like the configuration file.
    pub fn overrides(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| Value::String(p.to_string_lossy().into_owned()));
        put("data_dir", path(&self.data_dir));
        put("out", path(&self.out));
        put("gamma", self.gamma.map(Value::from));
        put("lambda", self.lambda.map(Value::from));
        put("eta", self.eta.map(Value::from));
        put("negs_e", self.negs_e.map(Value::from));
        put("negs_r", self.negs_r.map(Value::from));
        put("dim", self.dim.map(Value::from));
        put("beta", self.beta.map(Value::from));
        put("variant", self.variant.clone().map(Value::from));
        put("max_epochs", self.max_epochs.map(Value::from));
        put("eval_every", self.eval_every.map(Value::from));
        put("batches_per_epoch", self.batches_per_epoch.map(Value::from));
        put("eps", self.eps.map(Value::from));
        put("seed", self.seed.map(Value::from));
        put("corruption_mode", self.corruption_mode.clone().map(Value::from));
        put("full_reg_sweep", self.full_reg_sweep.map(Value::from));
        put("ks", self.ks.clone().map(Value::from));
        m
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,3,10")]
    pub ks: Vec<usize>,
    /// valid or test
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Also write one CSV row per ranking query.
    #[arg(long)]
    pub per_query: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Samples per region for the locus and convexity checks.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 100)]
    pub regions: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,5,100")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random configurations for the gradient check.
    #[arg(long, default_value_t = 1000)]
    pub grad_configs: u64,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DegreeArgs {
    #[arg(long)]
    pub data_dir: PathBuf,
    /// CSV path; the JSON summary is written next to it with a .json extension.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub d_min: u64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// a or ab
    #[arg(long, default_value = "a")]
    pub rules: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub n_entities: Option<usize>,
    #[arg(long)]
    pub n_facts: Option<usize>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Train(a) => commands::train(a, stdout, stderr),
        Command::Eval(a) => commands::eval(a, stdout, stderr),
        Command::Verify(a) => commands::verify(a, stdout, stderr),
        Command::AnalyzeDegrees(a) => commands::analyze_degrees(a, stdout, stderr),
        Command::GenDataset(a) => commands::gen_dataset(a, stdout, stderr),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code
        }
    }
}
