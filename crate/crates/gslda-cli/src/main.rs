mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Train, run and evaluate cascaded object detectors built with greedy
/// sparse LDA or boosting.
#[derive(Parser, Debug)]
#[command(name = "gslda", version)]
pub struct Cli {
    /// Random seed; overrides any seed in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON file with the command's configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a cascade from a dataset manifest.
    Train(TrainArgs),
    /// Scan images and write detections as CSV.
    Detect(DetectArgs),
    /// Compute an ROC curve against ground truth.
    Eval(EvalArgs),
    /// Run the two-dimensional toy comparison of AdaBoost and GSLDA.
    Toy(ToyArgs),
    /// Write a synthetic face-like corpus.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Adaboost,
    Asymboost,
    Gslda,
    Bgslda1,
    Bgslda2,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset manifest (JSON).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output model file.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Stage log (JSON lines); defaults to standard output.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Per-stage minimum detection rate.
    #[arg(long)]
    pub dmin: Option<f64>,
    /// Per-stage maximum false-positive rate.
    #[arg(long)]
    pub fmax: Option<f64>,
    /// Overall false-positive target.
    #[arg(long)]
    pub f_target: Option<f64>,
    /// Weight of the negative class in the within-class scatter.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Asymmetry ratio for asymboost and bgslda2.
    #[arg(long)]
    pub asym_k: Option<f64>,
    /// Slack added to the pruning bound.
    #[arg(long)]
    pub prune_eps: Option<f64>,
    /// Run backward elimination after each forward step.
    #[arg(long)]
    pub dual_pass: bool,
    /// Stump cap per node.
    #[arg(long)]
    pub max_stumps: Option<usize>,
    #[arg(long)]
    pub max_stages: Option<usize>,
    /// Keep a seeded random subset of this many Haar features.
    #[arg(long)]
    pub pool_limit: Option<usize>,
    /// Position stride of the Haar enumeration.
    #[arg(long)]
    pub pool_stride: Option<usize>,
    #[arg(long)]
    pub negatives_per_stage: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[arg(long)]
    pub scale_factor: Option<f64>,
    #[arg(long)]
    pub step: Option<usize>,
    #[arg(long)]
    pub min_neighbors: Option<usize>,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// PGM images or directories of them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Detections CSV; defaults to standard output.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Report average Haar evaluations per window.
    #[arg(long)]
    pub profile: bool,
    /// Emit raw accepted windows.
    #[arg(long)]
    pub no_merge: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Depth,
    Threshold,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// Manifest listing test images and ground truth.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value = "depth")]
    pub mode: ModeArg,
    /// ROC CSV; defaults to standard output.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Summary JSON; defaults to standard error.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub scan: ScanArgs,
}

#[derive(Args, Debug)]
pub struct ToyArgs {
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 4)]
    pub rounds: usize,
    #[arg(long)]
    pub n_pos: Option<usize>,
    #[arg(long)]
    pub n_neg: Option<usize>,
    /// Report JSON; defaults to standard output.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// CSV of the first trial's points (x,y,label).
    #[arg(long)]
    pub points: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub n_pos: Option<usize>,
    #[arg(long)]
    pub n_neg: Option<usize>,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub n_reservoir: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
}

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    GoalNotMet(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::GoalNotMet(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::GoalNotMet(m) => m,
        }
    }
}

impl From<gslda::Error> for Failure {
    fn from(e: gslda::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
