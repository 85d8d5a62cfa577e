//! The `specmap` command line: `gen`, `embed`, `metrics`, `grid` and `serve`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use specmap::artifact::GlyphStages;
use specmap::{EigenMode, Metric, ScheduleMode};

pub mod commands;
pub mod serve;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] specmap::Error),
    #[error("{0}")]
    Usage(String),
    #[error("port {port} is already in use")]
    PortInUse { port: u16 },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_validation() => EXIT_VALIDATION,
            CliError::Usage(_) => EXIT_VALIDATION,
            _ => EXIT_RUNTIME,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "specmap", version, about = "Spectral-subspace neighbor embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset (.spem or .csv plus a JSON sidecar).
    Gen(GenArgs),
    /// Embed a data matrix and write an artifact.
    Embed(EmbedArgs),
    /// Score every stage of an artifact against its input data.
    Metrics(MetricsArgs),
    /// Aggregate thumbnails over a grid laid on one stage.
    Grid(GridArgs),
    /// Serve artifacts (and optionally a viewer bundle) over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetKind {
    SwissRoll,
    MultiscaleLoop,
    Blobs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatrixFormat {
    Spem,
    Csv,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    pub dataset: DatasetKind,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// File stem; defaults to the dataset name.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, value_enum, default_value_t = MatrixFormat::Spem)]
    pub format: MatrixFormat,
    /// Gaussian noise; defaults to 0 for the Swiss roll and 0.05 for the loop.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Ambient dimension of the loop and blobs.
    #[arg(long, default_value_t = 30)]
    pub dims: usize,
    #[arg(long, default_value_t = 16)]
    pub freq: u32,
    #[arg(long, default_value_t = 0.15)]
    pub amp: f64,
    #[arg(long, default_value_t = 5)]
    pub blobs: usize,
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Input matrix (.spem or .csv).
    pub input: PathBuf,
    /// Artifact path.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Treat the last CSV column as integer labels.
    #[arg(long)]
    pub label_column: bool,
    #[arg(long, default_value_t = 15)]
    pub k: usize,
    #[arg(long, default_value = "euclidean")]
    pub metric: Metric,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub min_dist: f64,
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    #[arg(long, default_value_t = 5)]
    pub neg: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub stages: usize,
    #[arg(long, default_value = "equal")]
    pub schedule: ScheduleMode,
    /// Largest subspace size (default N - 1).
    #[arg(long)]
    pub max_modes: Option<usize>,
    /// Also run the optimizer once in the largest subspace.
    #[arg(long)]
    pub full_spectrum: bool,
    #[arg(long, default_value = "auto")]
    pub eigen: EigenMode,
    /// Parallel updates with relaxed ordering (not reproducible).
    #[arg(long)]
    pub relaxed: bool,
    /// Noise added to the spectral initialization, relative to its extent.
    #[arg(long)]
    pub init_noise: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub glyph_k: usize,
    #[arg(long, default_value = "final")]
    pub glyph_stages: GlyphStages,
    /// Record wall-clock times (artifacts are then no longer byte-reproducible).
    #[arg(long)]
    pub timestamps: bool,
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReferenceStage {
    Final,
    Full,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub artifact: PathBuf,
    /// The matrix the artifact was computed from.
    pub data: PathBuf,
    #[arg(long)]
    pub label_column: bool,
    #[arg(long, default_value_t = 15)]
    pub k: usize,
    #[arg(long, default_value_t = 15)]
    pub demap_k: usize,
    #[arg(long, value_enum, default_value_t = ReferenceStage::Final)]
    pub reference: ReferenceStage,
    /// Orthogonally align stages onto the reference before comparing.
    #[arg(long)]
    pub align: bool,
    #[arg(long, default_value_t = 0)]
    pub pair_seed: u64,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Store the report inside the artifact.
    #[arg(long)]
    pub attach: bool,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    pub artifact: PathBuf,
    /// Matrix whose rows are the thumbnails.
    pub thumbnails: PathBuf,
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub height: usize,
    /// Stage index; negative values count from the end.
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    pub stage: isize,
    #[arg(long, default_value_t = 10)]
    pub cols: usize,
    #[arg(long, default_value_t = 10)]
    pub rows: usize,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub png: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Directory holding `<name>.json` artifacts.
    pub dir: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Static viewer bundle served at `/`.
    #[arg(long)]
    pub viewer: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Gen(a) => commands::gen(&a).map(|p| eprintln!("wrote {}", p.display())),
        Command::Embed(a) => commands::embed(&a),
        Command::Metrics(a) => commands::metrics(&a),
        Command::Grid(a) => commands::grid(&a),
        Command::Serve(a) => serve::serve(&a),
    }
}

pub fn main_with(cli: Cli) -> ExitCode {
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
