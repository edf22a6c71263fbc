use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "prnu", version, about = "Camera identification from sensor pattern noise")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build or quantize camera fingerprints.
    #[command(subcommand)]
    Fingerprint(FingerprintCommand),
    /// Match probe images against a fingerprint.
    Match(MatchArgs),
    /// ROC curve and AUC from positive/negative score lists.
    Roc(RocArgs),
    /// Generate a synthetic multi-camera dataset.
    Simulate(SimulateArgs),
    /// Finite-difference check of the loss gradients.
    Losscheck(LosscheckArgs),
    /// Denoise one image, or write its noise residual.
    Denoise(DenoiseArgs),
}

#[derive(Subcommand, Debug)]
pub enum FingerprintCommand {
    /// Estimate a fingerprint from a directory of images.
    Build(BuildArgs),
    /// Quantize a raw PRNU1 fingerprint to PNG + sidecar.
    Quantize(QuantizeArgs),
}

/// `WxH` crop size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CropSize {
    pub width: usize,
    pub height: usize,
}

impl FromStr for CropSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| format!("invalid crop dimension {v:?}"))
        };
        Ok(Self { width: parse(w)?, height: parse(h)? })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct DenoiserArgs {
    /// Residual extractor id.
    #[arg(long, default_value = "dwt")]
    pub denoiser: String,
    /// Noise standard deviation for the wavelet filter, in intensity units.
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    pub image_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub denoiser: DenoiserArgs,
    #[arg(long)]
    pub crop: Option<CropSize>,
    /// Write a PRNU1 float fingerprint instead of a quantized PNG.
    #[arg(long)]
    pub raw: bool,
    /// Skip zero-meaning and spectral Wiener filtering.
    #[arg(long)]
    pub no_postprocess: bool,
    /// Quantization scale `a`.
    #[arg(long, default_value_t = prnu_core::quantizer::DEFAULT_SCALE)]
    pub scale: f64,
    /// Camera id stored in the sidecar; defaults to the directory name.
    #[arg(long)]
    pub camera_id: Option<String>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct QuantizeArgs {
    /// Raw PRNU1 fingerprint.
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = prnu_core::quantizer::DEFAULT_SCALE, conflicts_with = "search_grid")]
    pub scale: f64,
    /// Search the scale over `start:stop:step` instead of using --scale.
    #[arg(long)]
    pub search_grid: Option<String>,
    #[arg(long)]
    pub camera_id: Option<String>,
}

#[derive(Args, Debug)]
pub struct MatchArgs {
    /// Probe images.
    pub probes: Vec<PathBuf>,
    /// Fingerprint: quantized `.png` (with sidecar) or PRNU1 raw.
    #[arg(long)]
    pub fingerprint: PathBuf,
    /// Take probes from a simulator manifest; tiles are matched at their offsets.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 60.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 5)]
    pub omega_radius: usize,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Correlate against the fingerprint weighted by probe intensity.
    #[arg(long)]
    pub weighted: bool,
    /// Center-crop probe and fingerprint to WxH.
    #[arg(long)]
    pub crop: Option<CropSize>,
    #[command(flatten)]
    pub denoiser: DenoiserArgs,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RocArgs {
    /// Scores of matching pairs, one number per line.
    #[arg(long)]
    pub positive: PathBuf,
    /// Scores of non-matching pairs.
    #[arg(long)]
    pub negative: PathBuf,
    /// False-positive rates at which to report the true-positive rate.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.001, 0.01])]
    pub fp: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scenario JSON.
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct LosscheckArgs {
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Side length of the random square instances.
    #[arg(long, default_value_t = 16)]
    pub size: usize,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
}

#[derive(Args, Debug)]
pub struct DenoiseArgs {
    pub image: PathBuf,
    /// Output image (denoised) or `.prnu` residual.
    #[arg(long)]
    pub out: PathBuf,
    /// Write the residual `I - F(I)` in PRNU1 format.
    #[arg(long)]
    pub residual: bool,
    #[arg(long)]
    pub crop: Option<CropSize>,
    #[command(flatten)]
    pub denoiser: DenoiserArgs,
}
