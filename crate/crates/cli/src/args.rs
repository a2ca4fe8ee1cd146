use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "pixdiff",
    version,
    about = "Local binary patterns and pixel difference convolutions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Histogram of mapped LBP codes of a PGM image.
    LbpHist(LbpHistArgs),
    /// Run a difference operator on a PGM image and write |response| as PGM.
    PdcRun(PdcRunArgs),
    /// Check that direct and reparameterized operators agree.
    Verify(VerifyArgs),
    /// Time direct, reparameterized and dense convolution paths.
    Bench(BenchArgs),
    /// Compare analytic gradients against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Pgm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mapping {
    Raw,
    Ri,
    U2,
    Riu2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Interp {
    Nearest,
    Bilinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BorderArg {
    Replicate,
    Crop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Pad {
    Zero,
    Replicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    Single,
    Double,
}

#[derive(Debug, Args)]
pub struct LbpHistArgs {
    /// Binary (P5) PGM image.
    #[arg(long)]
    pub input: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, value_enum, default_value = "riu2")]
    pub mapping: Mapping,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 8)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "nearest")]
    pub interpolation: Interp,
    #[arg(long, value_enum, default_value = "replicate")]
    pub border: BorderArg,
    /// Report raw counts only (frequencies are still listed).
    #[arg(long)]
    pub counts: bool,
}

#[derive(Debug, Args)]
pub struct PdcRunArgs {
    /// Binary (P5) PGM image.
    #[arg(long)]
    pub input: PathBuf,
    /// cpdc, apdc, rpdc, cdc, gcdc, ccdc-hv, ccdc-dg, mediconv, lbc or custom.
    #[arg(long)]
    pub op: Option<String>,
    /// Pair-set JSON file; selects the custom operator.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Mixing weight of gcdc and ccdc (1 = pure difference).
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    /// Seed of the random operator weights.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Response map (PGM).
    #[arg(long)]
    pub out: PathBuf,
    /// Statistics JSON; defaults to the output path with a `.json` extension.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "pgm")]
    pub format: Format,
    #[arg(long, value_enum, default_value = "replicate")]
    pub pad: Pad,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Operator to check; the standard set when omitted.
    #[arg(long)]
    pub op: Option<String>,
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Problem size as NxCxHxW; output channels equal C.
    #[arg(long, default_value = "1x16x64x64")]
    pub shape: String,
    #[arg(long, value_enum, default_value = "single")]
    pub precision: PrecisionArg,
    /// Defaults to 1e-5 in single and 1e-12 in double precision.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Operator to time; cpdc, apdc and rpdc when omitted.
    #[arg(long)]
    pub op: Option<String>,
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "1x16x256x256")]
    pub shape: String,
    #[arg(long, default_value_t = 50)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 3)]
    pub warmup: usize,
    /// Worker threads; 0 uses every available core.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, value_enum, default_value = "single")]
    pub precision: PrecisionArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Operator to check; every operator when omitted.
    #[arg(long)]
    pub op: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}
