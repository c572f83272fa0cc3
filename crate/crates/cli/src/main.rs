//! `bodyshape`: batch front end for synthesis, model building, measurement,
//! reconstruction, editing and silhouette regression.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 partial data
//! failure, 3 internal invariant violation.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::PipelineConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// Some subjects failed; the others were written.
    #[error("{0}")]
    Partial(String),
    #[error(transparent)]
    Core(#[from] bodyshape::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use bodyshape::Error as E;
        match self {
            CliError::Usage(_) => 1,
            CliError::Partial(_) => 2,
            CliError::Core(e) => match e {
                E::Io { .. }
                | E::Parse { .. }
                | E::Schema(_)
                | E::Json(_)
                | E::InvalidArgument(_)
                | E::InvalidMesh(_)
                | E::EmptyMesh
                | E::Segmentation(_)
                | E::MissingPart(_)
                | E::MissingInterface(..)
                | E::DimensionMismatch { .. }
                | E::Checksum { .. } => 1,
                E::Generation(_)
                | E::Measurement { .. }
                | E::EmptyIntersection
                | E::OpenChain { .. }
                | E::EmptyPart(_)
                | E::NonManifoldEdge(..) => 2,
                E::Degenerate(_) => 3,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self.exit_code() {
            1 => "usage",
            2 => "data",
            _ => "internal",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bodyshape", version, about = "Part-based body shape models and virtual tailor measurements")]
struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Random seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a corpus of synthetic humanoids.
    Synth(SynthArgs),
    /// Fit the per-part PCA model to a corpus.
    BuildModel(BuildModelArgs),
    /// Measure meshes with the virtual tailor.
    Measure(MeasureArgs),
    /// Fit the measurement-to-coefficient map.
    FitMap(FitMapArgs),
    /// Build bodies from rows of a measurement CSV.
    Reconstruct(ReconstructArgs),
    /// Change measurements of a body and rebuild it.
    Edit(EditArgs),
    /// Render a binary silhouette as PGM.
    Render(RenderArgs),
    /// Train the silhouette regressor on a corpus.
    TrainReg(TrainRegArgs),
    /// Evaluate the silhouette regressor and write the MAE table.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    /// Relative standard deviation of the log-normal perturbation.
    #[arg(long)]
    pub spread: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub radial_segments: Option<usize>,
    #[arg(long)]
    pub rings: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BuildModelArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Principal components per part.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Mesh to measure; repeat for several.
    #[arg(long, conflicts_with = "corpus")]
    pub mesh: Vec<PathBuf>,
    /// Segmentation of the meshes.
    #[arg(long, conflicts_with = "model")]
    pub seg: Option<PathBuf>,
    /// Take the segmentation from a model (for reconstructed meshes).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Measure every subject of a corpus in manifest order.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitMapArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Train on the corpus ground truth instead of tailor measurements.
    #[arg(long)]
    pub truth: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub measurements: PathBuf,
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output directory for `body_NNNN.obj` and `targets.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EditArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Slot to change (name or unique prefix); pairs with `--delta`.
    #[arg(long, required = true)]
    pub slot: Vec<String>,
    /// Change in millimetres.
    #[arg(long, required = true, allow_negative_numbers = true)]
    pub delta: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ViewArg {
    Frontal,
    Lateral,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, value_enum)]
    pub view: ViewArg,
    /// Subject height in mm (default: the mesh's vertical extent).
    #[arg(long)]
    pub height: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainRegArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Train on the first N subjects (default: all).
    #[arg(long)]
    pub train: Option<usize>,
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub regressor: Option<PathBuf>,
    /// Evaluate subjects from this index on (the ones not trained on).
    #[arg(long, default_value_t = 0)]
    pub from: usize,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot set up {jobs} workers: {e}")))?;
    }
    match &cli.command {
        Command::Synth(a) => commands::synth(&cfg, a),
        Command::BuildModel(a) => commands::build_model(&cfg, a),
        Command::Measure(a) => commands::measure(&cfg, a),
        Command::FitMap(a) => commands::fit_map(&cfg, a),
        Command::Reconstruct(a) => commands::reconstruct(&cfg, a),
        Command::Edit(a) => commands::edit(&cfg, a),
        Command::Render(a) => commands::render(&cfg, a),
        Command::TrainReg(a) => commands::train_reg(&cfg, a),
        Command::Eval(a) => commands::eval(&cfg, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            let report = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
                "exit_code": code,
            });
            eprintln!("{report}");
            ExitCode::from(code)
        }
    }
}
