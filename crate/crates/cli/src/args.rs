use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use curvlens::bulk::BulkMethod;
use curvlens::models::CurvatureKind;
use curvlens::optim::Variant;
use curvlens::ProbeKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "curvlens",
    version,
    about = "Lanczos curvature spectroscopy experiments"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GlobalOpts {
    /// Seed for every random draw of the command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving the artifacts; created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Format of the summary printed on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Lanczos densities of random-matrix ensembles.
    Rmt(RmtArgs),
    /// Curvature spectrum of a model checkpoint or a fresh model.
    Spectrum(SpectrumArgs),
    /// Oracle eigenvalues, diagonal entries and Lanczos atoms side by side.
    CompareDiag(CompareDiagArgs),
    /// Train a model with one of the step-size schedules.
    Train(TrainArgs),
    /// Loss along Ritz directions around a checkpoint.
    Landscape(LandscapeArgs),
    /// Lanczos versus power-iteration bound factors.
    BoundsTable(BoundsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Rmt(_) => "rmt",
            Command::Spectrum(_) => "spectrum",
            Command::CompareDiag(_) => "compare-diag",
            Command::Train(_) => "train",
            Command::Landscape(_) => "landscape",
            Command::BoundsTable(_) => "bounds-table",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    Wigner,
    Wishart,
    Planted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlantedPreset {
    /// 1000 dims: 500 zeros and bands on [0, 15], [0, 60], [-10, 0].
    ThreeBand,
    /// 3000 dims: 2500 zeros, 480 on [0, 10], 20 on [0, 300].
    BulkMean,
}

/// Where a planted spectrum comes from: a JSON spec file or a preset.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PlantedOpts {
    /// Planted spectrum JSON `{dim, groups: [{count, dist, lo, hi}], seed}`.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<PlantedPreset>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RmtArgs {
    #[arg(value_enum)]
    pub ensemble: Ensemble,
    /// Matrix dimension P (ignored for planted spectra).
    #[arg(long, default_value_t = 1000)]
    pub dim: usize,
    /// Wishart ratio q = P / T.
    #[arg(long, default_value_t = 2.0)]
    pub ratio: f64,
    #[command(flatten)]
    pub planted: PlantedOpts,
    /// Keep the raw N(0, 1) Wigner entries instead of scaling by 1/sqrt(P).
    #[arg(long)]
    pub unnormalized: bool,
    #[command(flatten)]
    pub lanczos: LanczosOpts,
    /// Outliers excluded by the weighted bulk mean.
    #[arg(long, default_value_t = 0)]
    pub layers: usize,
    /// Relative gap threshold for the outlier count.
    #[arg(long, default_value_t = 0.1)]
    pub gap: f64,
    /// Histogram bins for the oracle eigenvalues.
    #[arg(long, default_value_t = 60)]
    pub bins: usize,
    /// Skip the dense eigendecomposition and its histogram.
    #[arg(long)]
    pub no_oracle: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LanczosOpts {
    /// Lanczos steps m.
    #[arg(long, default_value_t = 30)]
    pub steps: usize,
    /// Number of independent probe vectors.
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    #[arg(long, default_value = "gaussian")]
    pub probe: ProbeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logreg,
    Mlp,
}

/// A freshly initialized model, used when no checkpoint is given.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ModelOpts {
    /// Start from this checkpoint instead of a fresh model.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModelKind::Logreg)]
    pub model: ModelKind,
    /// Hidden widths of the MLP, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "16")]
    pub hidden: Vec<usize>,
    /// Weight decay γ.
    #[arg(long, default_value_t = 0.01)]
    pub weight_decay: f64,
    /// Standard deviation of the initial logistic weights.
    #[arg(long, default_value_t = 0.1)]
    pub init_scale: f64,
}

/// Gaussian-blob data; without `--dataset` the toy problem is used.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DataOpts {
    /// Dataset spec JSON `{n_samples, d_in, n_c, blob_separation, seed}`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Size of an independent held-out set.
    #[arg(long, default_value_t = 0)]
    pub test_samples: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelOpts,
    #[command(flatten)]
    pub data: DataOpts,
    #[arg(long, default_value = "ggn")]
    pub curvature: CurvatureKind,
    /// Lanczos steps m.
    #[arg(long, default_value_t = 30)]
    pub steps: usize,
    /// Number of independent probe vectors.
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    #[arg(long, default_value = "rademacher")]
    pub probe: ProbeKind,
    /// Seed of the probe vectors alone; defaults to a stream derived from
    /// `--seed`.
    #[arg(long)]
    pub probe_seed: Option<u64>,
    /// Samples in the curvature batch; 0 uses the whole training set.
    #[arg(long, default_value_t = 0)]
    pub batch: usize,
    /// Outliers excluded by the bulk estimators; defaults to the layer count.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Relative gap threshold for the outlier count.
    #[arg(long, default_value_t = 0.1)]
    pub gap: f64,
    /// Write the Ritz vectors of the first probe for `landscape`.
    #[arg(long)]
    pub keep_vectors: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagSource {
    Wigner,
    Planted,
    Diag,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CompareDiagArgs {
    #[arg(value_enum)]
    pub source: DiagSource,
    /// Wigner dimension.
    #[arg(long, default_value_t = 500)]
    pub dim: usize,
    #[command(flatten)]
    pub planted: PlantedOpts,
    /// Diagonal entries for the `diag` source, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub values: Vec<f64>,
    #[command(flatten)]
    pub lanczos: LanczosOpts,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub model: ModelOpts,
    #[command(flatten)]
    pub data: DataOpts,
    #[arg(long, default_value = "ssgd")]
    pub variant: Variant,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    /// Steps between spectral refreshes.
    #[arg(long, default_value_t = 100)]
    pub refresh: usize,
    /// Lanczos steps per refresh.
    #[arg(long, default_value_t = 30)]
    pub lanczos_steps: usize,
    #[arg(long, default_value = "ggn")]
    pub curvature: CurvatureKind,
    /// Samples in the refresh curvature batch; 0 uses the whole training set.
    #[arg(long, default_value_t = 0)]
    pub curvature_batch: usize,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long, default_value = "weighted")]
    pub bulk_method: BulkMethod,
    #[arg(long, default_value = "rademacher")]
    pub probe: ProbeKind,
    /// Step size of the fixed variants.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Momentum of `sgdm_fixed`.
    #[arg(long, default_value_t = 0.9)]
    pub beta: f64,
    /// Smoothness L for the theoretical variants; derived for logistic models.
    #[arg(long)]
    pub lipschitz: Option<f64>,
    /// Strong convexity μ for the theoretical variants; derived for logistic models.
    #[arg(long)]
    pub strong_convexity: Option<f64>,
    /// Steps between full-data evaluations; 0 evaluates only at the end.
    #[arg(long, default_value_t = 100)]
    pub eval_interval: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LandscapeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Spectrum file written by `spectrum --keep-vectors`.
    #[arg(long)]
    pub spectrum: PathBuf,
    #[command(flatten)]
    pub data: DataOpts,
    #[arg(long, default_value_t = 0.25)]
    pub dist: f64,
    /// Grid points per direction; odd so that t = 0 is included.
    #[arg(long, default_value_t = 21)]
    pub n_points: usize,
    /// Directions taken from each end of the spectrum.
    #[arg(long, default_value_t = curvlens::optim::DEFAULT_LANDSCAPE_DIRECTIONS)]
    pub per_side: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BoundsArgs {
    /// Spectral gaps λ1/λ2, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1.5,1.1,1.01")]
    pub gaps: Vec<f64>,
    /// Iteration counts m, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20")]
    pub steps: Vec<usize>,
}
