//! `texscore` command-line driver.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or parse errors.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "texscore",
    version,
    about = "GLCM texture scoring with manifold regularizing features"
)]
pub struct Cli {
    /// Cap on worker threads (falls back to TEXSCORE_THREADS).
    #[arg(long, global = true, env = "TEXSCORE_THREADS")]
    pub threads: Option<usize>,

    /// Flat key=value file supplying defaults for the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Comma-separated label set accepted in manifests.
    #[arg(long, global = true, value_delimiter = ',', default_value = "0,1,2,3")]
    pub labels: Vec<u32>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute GLCM feature vectors (one CSV row per image).
    Glcm(GlcmArgs),
    /// Eigenvalue spectrum of a feature CSV.
    PcaSpectrum(SpectrumArgs),
    /// Fit feature and forest models on the labeled images of a manifest.
    Train(TrainArgs),
    /// Predict labels for images.
    Score(ScoreArgs),
    /// Repeated random-split evaluation of a feature mode.
    Experiment(ExperimentArgs),
    /// Write a synthetic four-class texture set and its manifest.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TextureArgs {
    /// Compass direction of the pixel pair: e, w, n, s, ne, nw, se, sw.
    #[arg(long, default_value = "ne")]
    pub direction: String,
    #[arg(long, default_value_t = 3)]
    pub distance: usize,
    #[arg(long, default_value_t = 51)]
    pub levels: usize,
    /// Use raw co-occurrence counts instead of frequencies.
    #[arg(long)]
    pub raw_counts: bool,
}

#[derive(Debug, Args)]
pub struct GlcmArgs {
    #[command(flatten)]
    pub texture: TextureArgs,
    /// Read image paths from a manifest instead of the positional list.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    pub images: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Feature CSV without header, one row per observation.
    #[arg(long)]
    pub features: PathBuf,
    /// Number of eigenvalues (default: min(rows, columns)).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// glcm, pc-only, glcm+pc, image+ae-image, glcm+ae-image, glcm+ae-glcm
    #[arg(long, default_value = "glcm")]
    pub mode: String,
    /// Manifold dimension (hidden units) for autoencoder modes.
    #[arg(long, default_value_t = 25)]
    pub dim: usize,
    /// Principal components for PCA modes.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[command(flatten)]
    pub texture: TextureArgs,
    /// Pooling grid side for pixel modes.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lambda: f64,
    #[arg(long, default_value_t = 500)]
    pub trees: usize,
    /// Features tried per split (default floor(sqrt(p))).
    #[arg(long)]
    pub mtry: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub min_leaf: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Directory receiving the model files.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Directory written by `train`. Without it, the manifest's labeled rows
    /// train and its unlabeled rows are scored in one transductive pass.
    #[arg(long)]
    pub models: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Fit manifold features on the labeled rows only.
    #[arg(long)]
    pub inductive: bool,
    /// Output `path,label` CSV (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    pub images: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    #[arg(long, default_value_t = 0.5)]
    pub train_fraction: f64,
    /// Fit manifold features on training rows only.
    #[arg(long)]
    pub inductive: bool,
    /// Fit manifold features once and reuse them across runs.
    #[arg(long)]
    pub shared_model: bool,
    /// Sweep these component counts (comma-separated) instead of one mode.
    #[arg(long, value_delimiter = ',')]
    pub k_list: Vec<usize>,
    /// With --k-list: principal components as the only features.
    #[arg(long)]
    pub sole: bool,
    /// Report CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 25)]
    pub per_class: usize,
    #[arg(long, default_value_t = 96)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for PGM files and manifest.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cmd = Cli::command();
    let args = match config::merge(&cmd, args) {
        Ok(a) => a,
        Err(config::ConfigError(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let cli = match cmd
        .try_get_matches_from(args)
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| commands::dispatch(&cli)),
            Err(e) => Err(commands::CliError::Usage(format!(
                "cannot build thread pool: {e}"
            ))),
        },
        None => commands::dispatch(&cli),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(commands::CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("{}", Cli::command().render_usage());
            EXIT_USAGE
        }
        Err(commands::CliError::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}
