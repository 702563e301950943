//! `objtoken` command-line tool.
//!
//! ```bash
//! # synthetic corpus of 100 blob scenes
//! objtoken synth --out corpus --count 100 --seed 7 --objects 6 --binomial
//!
//! # adaptive hard-mask merging over every scene, with stats and a histogram
//! objtoken pipeline --in corpus --out runs --mode adaptive-hard --emit tokens,stats,svg --jobs 4
//!
//! # fixed-rate merging of one bundle down to 64 tokens
//! objtoken pipeline --in corpus/scene_00000 --out one --mode fixed-rate --n-target 64
//!
//! # cost estimates
//! objtoken estimate --tokens 63.1 --preset segmentation-7b --baseline-tokens 2880 --baseline-preset clip-7b
//! ```
//!
//! Run summaries go to stdout as JSON, diagnostics to stderr. Exit status is
//! 0 on success, 2 for invalid input and 3 for I/O failures.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "objtoken",
    version,
    about = "Object-centric visual token compression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Filter masks and merge features into a sorted token sequence.
    Pipeline(PipelineArgs),
    /// Generate a synthetic scene corpus.
    Synth(SynthArgs),
    /// Token-count statistics over run summaries.
    Stats(StatsArgs),
    /// Analytic FLOPs / KV-cache estimates.
    Estimate(EstimateArgs),
    /// Check a bundle against its manifest and tensor invariants.
    Validate(ValidateArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    AdaptiveSoft,
    AdaptiveHard,
    FixedRate,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    LargeFirst,
    SmallFirst,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FilterOrderArg {
    DownsampleFirst,
    FilterFirst,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum EmitArg {
    Tokens,
    Stats,
    Svg,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// JSON config; command-line flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input bundle, or a corpus directory containing corpus.json.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long = "out")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub n_target: Option<usize>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long, value_enum)]
    pub filter_order: Option<FilterOrderArg>,
    /// Comma-separated outputs to write (default: tokens).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub emit: Option<Vec<EmitArg>>,
    /// Histogram bin width for `--emit svg` / `--emit stats`.
    #[arg(long, default_value_t = 10)]
    pub bin_width: u64,
    /// Worker threads across scenes.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long = "out")]
    pub output: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub height: usize,
    #[arg(long, default_value_t = 16)]
    pub width: usize,
    #[arg(long, default_value_t = 8)]
    pub channels: usize,
    /// Objects per scene (the maximum with --binomial).
    #[arg(long, default_value_t = 3)]
    pub objects: usize,
    #[arg(long, value_enum, default_value_t = KindArg::Blob)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 1.0)]
    pub softness: f64,
    #[arg(long, default_value_t = 4.0)]
    pub contrast: f64,
    /// Draw each scene's object count from Binomial(objects, 1/2).
    #[arg(long)]
    pub binomial: bool,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Rect,
    Blob,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// JSON-lines file of run summaries, or a directory searched for summary.json files.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Directory for stats.json, stats.csv, histogram.csv and histogram.svg.
    #[arg(long = "out")]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub bin_width: u64,
    /// Row label in the CSV table.
    #[arg(long, default_value = "corpus")]
    pub name: String,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    /// 7B decoder behind CLIP ViT-L/14 (1.91 TFLOPs vision).
    #[value(name = "clip-7b")]
    Clip7b,
    /// 7B decoder behind ConvNeXt-L + Mask2Former (1.74 TFLOPs vision).
    #[value(name = "segmentation-7b")]
    Segmentation7b,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Token count (fractional averages allowed).
    #[arg(long)]
    pub tokens: f64,
    #[arg(long, value_enum, default_value_t = PresetArg::Segmentation7b)]
    pub preset: PresetArg,
    #[arg(long)]
    pub params: Option<f64>,
    #[arg(long)]
    pub layers: Option<u64>,
    #[arg(long)]
    pub hidden: Option<u64>,
    #[arg(long)]
    pub bytes: Option<u64>,
    #[arg(long)]
    pub vision_flops: Option<f64>,
    /// Add the 4·L·n²·d attention term.
    #[arg(long)]
    pub quadratic: bool,
    /// Baseline token count for a reduction report.
    #[arg(long)]
    pub baseline_tokens: Option<f64>,
    #[arg(long, value_enum, default_value_t = PresetArg::Clip7b)]
    pub baseline_preset: PresetArg,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Pipeline(args) => commands::pipeline::run(args),
        Command::Synth(args) => commands::synth::run(args),
        Command::Stats(args) => commands::stats::run(args),
        Command::Estimate(args) => commands::estimate::run(args),
        Command::Validate(args) => commands::validate::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}
