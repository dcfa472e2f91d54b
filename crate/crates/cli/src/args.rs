use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hfseg_core::denoise::BilateralParams;
use hfseg_core::image::CubeDims;
use hfseg_core::mser::MserParams;
use hfseg_core::pipeline::PipelineConfig;
use hfseg_core::roi::{FcmParams, FilterChain, Normalization, RoiParams, RoiPolicy};
use hfseg_core::study::SweepAxis;

#[derive(Debug, Parser)]
#[command(
    name = "hfseg",
    version,
    about = "Segment and quantify hyperreflective foci in SD-OCT B-scans and cubes",
    args_override_self = true
)]
pub struct Cli {
    /// Flat key=value file whose entries act as flags; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bilateral-filter a B-scan.
    Denoise(DenoiseArgs),
    /// Compute the retina-band ROI mask of a B-scan.
    Roi(StageArgs),
    /// Detect maximally stable bright regions of a B-scan.
    Mser(StageArgs),
    /// Run the full pipeline on a B-scan or a raw cube.
    Segment(SegmentArgs),
    /// Run the full pipeline on a raw cube.
    SegmentCube(SegmentCubeArgs),
    /// Write synthetic B-scans with ground-truth masks.
    Phantom(PhantomArgs),
    /// Compare predicted masks with ground-truth masks.
    Eval(EvalArgs),
    /// Sweep one parameter and report mean Dice per value.
    Sweep(SweepArgs),
    /// Dump the component tree of a B-scan as CSV.
    TreeDump(TreeDumpArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BilateralArgs {
    /// Spatial standard deviation of the bilateral filter, pixels.
    #[arg(long, default_value_t = 3.0)]
    pub sigma_s: f64,
    /// Range standard deviation of the bilateral filter, gray levels.
    #[arg(long, default_value_t = 20.0)]
    pub sigma_r: f64,
    /// Odd bilateral window side, pixels.
    #[arg(long, default_value_t = 7)]
    pub bilateral_window: usize,
}

impl BilateralArgs {
    pub fn params(&self) -> BilateralParams {
        BilateralParams {
            sigma_s: self.sigma_s,
            sigma_r: self.sigma_r,
            window: self.bilateral_window,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChainArg {
    Median,
    SpatialThenMedian,
    Spatial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    PerCluster,
    Probabilistic,
}

#[derive(Debug, Clone, Args)]
pub struct RoiArgs {
    /// Number of fuzzy clusters.
    #[arg(long, default_value_t = 4)]
    pub clusters: usize,
    /// Fuzzifier exponent, > 1.
    #[arg(long, default_value_t = 2.0)]
    pub fuzzifier: f64,
    /// Odd membership filter window, pixels.
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    /// Convergence threshold on the largest membership change.
    #[arg(long, default_value_t = 0.002)]
    pub tol: f64,
    /// Iteration cap for fuzzy c-means.
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
    /// Disk radius of the closing by reconstruction, pixels.
    #[arg(long, default_value_t = 1)]
    pub se_radius: usize,
    /// Membership filters applied after mapping to pixels.
    #[arg(long, value_enum, default_value_t = ChainArg::Median)]
    pub filter_chain: ChainArg,
    /// Membership normalization.
    #[arg(long, value_enum, default_value_t = NormArg::PerCluster)]
    pub normalization: NormArg,
    /// Keep every ROI component of at least this many pixels instead of only the largest.
    #[arg(long, value_name = "PX")]
    pub roi_min_component: Option<usize>,
}

impl RoiArgs {
    pub fn params(&self, seed: u64) -> RoiParams {
        RoiParams {
            fcm: FcmParams {
                clusters: self.clusters,
                fuzzifier: self.fuzzifier,
                tolerance: self.tol,
                max_iters: self.max_iters,
                seed,
            },
            window: self.window,
            se_radius: self.se_radius,
            filter_chain: match self.filter_chain {
                ChainArg::Median => FilterChain::Median,
                ChainArg::SpatialThenMedian => FilterChain::SpatialThenMedian,
                ChainArg::Spatial => FilterChain::Spatial,
            },
            normalization: match self.normalization {
                NormArg::PerCluster => Normalization::PerCluster,
                NormArg::Probabilistic => Normalization::Probabilistic,
            },
            policy: match self.roi_min_component {
                Some(n) => RoiPolicy::MinComponentArea(n),
                None => RoiPolicy::LargestComponent,
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MserArgs {
    /// Stability range, normalized units.
    #[arg(long, default_value_t = 0.21)]
    pub delta: f64,
    /// Lowest region level, normalized units.
    #[arg(long, default_value_t = 2.10)]
    pub g_min: f64,
    /// Largest accepted stability score.
    #[arg(long, default_value_t = 1.0)]
    pub max_variation: f64,
    /// Gray levels per normalized unit.
    #[arg(long, default_value_t = 51.0)]
    pub intensity_scale: f64,
    /// Relative area difference below which nested regions are duplicates.
    #[arg(long, default_value_t = 0.2)]
    pub similarity_tol: f64,
}

impl MserArgs {
    pub fn params(&self) -> MserParams {
        MserParams {
            delta: self.delta,
            g_min: self.g_min,
            max_variation: self.max_variation,
            intensity_scale: self.intensity_scale,
            similarity_tol: self.similarity_tol,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub bilateral: BilateralArgs,
    #[command(flatten)]
    pub roi: RoiArgs,
    #[command(flatten)]
    pub mser: MserArgs,
    /// Smallest kept focus, pixels.
    #[arg(long, default_value_t = 5)]
    pub min_area: usize,
    /// Largest kept focus, pixels. No cap unless given.
    #[arg(long)]
    pub max_area: Option<usize>,
    /// Skip bilateral preprocessing.
    #[arg(long)]
    pub no_denoise: bool,
    /// Seed for every random choice.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl PipelineArgs {
    pub fn config(&self) -> PipelineConfig {
        PipelineConfig {
            denoise: !self.no_denoise,
            bilateral: self.bilateral.params(),
            roi: self.roi.params(self.seed),
            mser: self.mser.params(),
            min_area: self.min_area,
            max_area: self.max_area,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CubeArgs {
    /// Raw 8-bit cube, B-scan major.
    #[arg(long)]
    pub cube: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    pub cube_width: usize,
    #[arg(long, default_value_t = 1024)]
    pub cube_height: usize,
    #[arg(long, default_value_t = 128)]
    pub cube_bscans: usize,
}

impl CubeArgs {
    pub fn dims(&self) -> CubeDims {
        CubeDims {
            width: self.cube_width,
            height: self.cube_height,
            bscans: self.cube_bscans,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DenoiseArgs {
    /// Input B-scan (PGM or PNG, 8-bit gray).
    #[arg(long)]
    pub input: PathBuf,
    /// Output image path.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub bilateral: BilateralArgs,
}

#[derive(Debug, Clone, Args)]
pub struct StageArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    /// Input B-scan (PGM or PNG, 8-bit gray).
    #[arg(long, conflicts_with = "cube", required_unless_present = "cube")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub cube: CubeArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads for cubes.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Also write one overlay per B-scan of a cube.
    #[arg(long)]
    pub overlays: bool,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SegmentCubeArgs {
    /// Raw 8-bit cube, B-scan major.
    #[arg(long)]
    pub cube: PathBuf,
    #[arg(long, default_value_t = 512)]
    pub cube_width: usize,
    #[arg(long, default_value_t = 1024)]
    pub cube_height: usize,
    #[arg(long, default_value_t = 128)]
    pub cube_bscans: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Also write one overlay per B-scan.
    #[arg(long)]
    pub overlays: bool,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PhantomArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of B-scans.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Seed of the first B-scan; the others use consecutive seeds.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 512)]
    pub width: usize,
    #[arg(long, default_value_t = 1024)]
    pub height: usize,
    /// Top row of the retina band; defaults to 300/1024 of the height.
    #[arg(long)]
    pub band_top: Option<usize>,
    /// Bottom row of the retina band; defaults to 620/1024 of the height.
    #[arg(long)]
    pub band_bottom: Option<usize>,
    /// Foci per B-scan; defaults to 6 + seed mod 7.
    #[arg(long)]
    pub foci: Option<usize>,
    /// Multiplicative speckle strength (0 disables).
    #[arg(long, default_value_t = 0.25)]
    pub speckle: f64,
    /// Also write all B-scans as one raw cube.
    #[arg(long)]
    pub cube: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Directory of predicted masks.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of ground-truth masks with matching file names.
    #[arg(long)]
    pub gt: PathBuf,
    /// CSV output path; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    M,
    W,
    #[value(name = "T", alias = "t")]
    T,
    Delta,
    G,
}

impl Axis {
    pub fn study_axis(self) -> SweepAxis {
        match self {
            Axis::M => SweepAxis::M,
            Axis::W => SweepAxis::W,
            Axis::T => SweepAxis::T,
            Axis::Delta => SweepAxis::Delta,
            Axis::G => SweepAxis::G,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Parameter to sweep.
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    /// Number of phantom B-scans when no images are given.
    #[arg(long, default_value_t = 4)]
    pub phantoms: usize,
    /// Directory of input B-scans, paired by name with --gt-dir.
    #[arg(long, requires = "gt_dir")]
    pub images: Option<PathBuf>,
    #[arg(long, requires = "images")]
    pub gt_dir: Option<PathBuf>,
    /// Output directory for sweep.csv and sweep.svg.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TreeDumpArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// CSV output path; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Denoise before building the tree.
    #[arg(long)]
    pub denoise: bool,
    #[command(flatten)]
    pub bilateral: BilateralArgs,
    #[command(flatten)]
    pub mser: MserArgs,
}
