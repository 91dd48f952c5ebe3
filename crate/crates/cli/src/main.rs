//! `popcd`: train RBMs, measure estimator bias and variance, and evaluate
//! models from the command line.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "popcd", version, about = "Binary RBM training with CD, PCD, PT and population-weighted CD")]
struct Cli {
    /// Worker threads; defaults to one per core. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one or more independently seeded trials from a config file.
    Train(TrainArgs),
    /// Measure bias and variance of k-step estimators on a reference model.
    BiasVariance(RunArgs),
    /// Estimate log Z of a model with annealed importance sampling.
    AisEval(AisArgs),
    /// Write a generated dataset in lines01 format.
    GenData(GenDataArgs),
    /// Exact negative log-likelihood of a model on a dataset.
    ExactEval(ExactArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML experiment config.
    #[arg(long, short)]
    pub config: PathBuf,
    /// Override a config entry, e.g. `--set train.learning_rate=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory (overrides experiment.output_dir).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base seed (overrides experiment.seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of trials (overrides experiment.trials).
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Record cumulative training time in the wall_clock_ms column.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Lines01,
    IdxImagesThreshold,
}

impl From<FormatArg> for popcd::BinaryFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Lines01 => popcd::BinaryFormat::Lines01,
            FormatArg::IdxImagesThreshold => popcd::BinaryFormat::IdxImagesThreshold,
        }
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset file.
    #[arg(long, conflicts_with = "bars_stripes")]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "lines01")]
    pub format: FormatArg,
    /// Use the generated bars-and-stripes set of this side length.
    #[arg(long, value_name = "SIDE")]
    pub bars_stripes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model parameter file.
    #[arg(long, required_unless_present = "zeros")]
    pub model: Option<PathBuf>,
    /// Use the all-zero model with this many hidden units.
    #[arg(long, value_name = "HIDDEN", conflicts_with = "model")]
    pub zeros: Option<usize>,
    /// Visible units of the all-zero model when no data is given.
    #[arg(long, requires = "zeros")]
    pub visible: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BaseArg {
    Biases,
    Uniform,
}

#[derive(Debug, Args)]
pub struct AisArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 128)]
    pub particles: usize,
    #[arg(long, default_value_t = 10_000)]
    pub intermediate: usize,
    /// 512 particles and 50000 intermediate distributions.
    #[arg(long, conflicts_with_all = ["particles", "intermediate"])]
    pub full_scale: bool,
    /// Starting distribution of the annealing path.
    #[arg(long, value_enum, default_value = "biases")]
    pub base: BaseArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also report the exact value when the model is small enough.
    #[arg(long)]
    pub compare_exact: bool,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DataKind {
    BarsStripes,
    ArtificialModes,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(value_enum)]
    pub kind: DataKind,
    #[arg(long, default_value_t = 4)]
    pub side: usize,
    #[arg(long, default_value_t = 16)]
    pub dimension: usize,
    #[arg(long, default_value_t = 4)]
    pub num_modes: usize,
    #[arg(long, default_value_t = 0.001)]
    pub flip_prob: f64,
    #[arg(long, default_value_t = 2000)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the modes of an artificial-modes set here.
    #[arg(long)]
    pub modes_out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<String, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(CliError::runtime)?;
    }
    match cli.command {
        Command::Train(args) => commands::train(&args),
        Command::BiasVariance(args) => commands::bias_variance(&args),
        Command::AisEval(args) => commands::ais_eval(&args),
        Command::GenData(args) => commands::gen_data(&args),
        Command::ExactEval(args) => commands::exact_eval(&args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => e.exit(),
            _ => {
                let _ = e.print();
                std::process::exit(1);
            }
        },
    };
    match run(cli) {
        Ok(summary) => {
            if !summary.is_empty() {
                println!("{summary}");
            }
        }
        Err(e) => {
            eprintln!("popcd: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
