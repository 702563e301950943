use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use objtoken::analytics::{compute_stats, histogram, histogram_csv, histogram_svg, stats_csv};
use objtoken::pipeline::{self, FilterOrder, Mode, PipelineOptions, RunSummary};
use objtoken::sequence_io::write_sequence;
use objtoken::synth::{CorpusIndex, CORPUS_FILE};
use objtoken::{read_bundle, Strategy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{print_line, thread_pool, write_json, write_text};
use crate::{EmitArg, FilterOrderArg, ModeArg, PipelineArgs, StrategyArg};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Emit {
    pub tokens: bool,
    pub stats: bool,
    pub svg: bool,
}

/// Pipeline settings as read from `--config`; every field is optional so
/// flags can fill the gaps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub mode: Option<Mode>,
    pub n_target: Option<usize>,
    pub strategy: Option<Strategy>,
    pub filter_order: Option<FilterOrder>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub emit: Option<Emit>,
    pub jobs: Option<usize>,
    pub bin_width: Option<u64>,
}

struct Resolved {
    options: PipelineOptions,
    input: PathBuf,
    output: PathBuf,
    emit: Emit,
    jobs: usize,
    bin_width: u64,
}

fn resolve(args: PipelineArgs) -> Result<Resolved> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str::<PipelineConfig>(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(m) = args.mode {
        cfg.mode = Some(match m {
            ModeArg::AdaptiveSoft => Mode::AdaptiveSoft,
            ModeArg::AdaptiveHard => Mode::AdaptiveHard,
            ModeArg::FixedRate => Mode::FixedRate,
        });
    }
    if args.n_target.is_some() {
        cfg.n_target = args.n_target;
    }
    if let Some(s) = args.strategy {
        cfg.strategy = Some(match s {
            StrategyArg::LargeFirst => Strategy::LargeFirst,
            StrategyArg::SmallFirst => Strategy::SmallFirst,
        });
    }
    if let Some(o) = args.filter_order {
        cfg.filter_order = Some(match o {
            FilterOrderArg::DownsampleFirst => FilterOrder::DownsampleFirst,
            FilterOrderArg::FilterFirst => FilterOrder::FilterFirst,
        });
    }
    if args.input.is_some() {
        cfg.input = args.input;
    }
    if args.output.is_some() {
        cfg.output = args.output;
    }
    if let Some(list) = args.emit {
        cfg.emit = Some(Emit {
            tokens: list.contains(&EmitArg::Tokens),
            stats: list.contains(&EmitArg::Stats),
            svg: list.contains(&EmitArg::Svg),
        });
    }
    if args.jobs.is_some() {
        cfg.jobs = args.jobs;
    }

    let Some(mode) = cfg.mode else {
        bail!("pipeline: --mode is required");
    };
    let Some(input) = cfg.input else {
        bail!("pipeline: --in is required");
    };
    let Some(output) = cfg.output else {
        bail!("pipeline: --out is required");
    };
    let options = PipelineOptions {
        mode,
        n_target: cfg.n_target,
        strategy: cfg.strategy,
        filter_order: cfg.filter_order.unwrap_or_default(),
    };
    options.validate().context("pipeline config")?;
    let bin_width = cfg.bin_width.unwrap_or(args.bin_width);
    if bin_width < 1 {
        bail!("pipeline: bin width must be at least 1");
    }
    Ok(Resolved {
        options,
        input,
        output,
        emit: cfg.emit.unwrap_or(Emit {
            tokens: true,
            ..Emit::default()
        }),
        jobs: cfg.jobs.unwrap_or(1),
        bin_width,
    })
}

#[derive(Debug, Serialize)]
struct SceneSummary<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    scene: Option<&'a str>,
    #[serde(flatten)]
    summary: &'a RunSummary,
}

fn process(input: &Path, output: &Path, opts: &PipelineOptions, emit: Emit) -> Result<RunSummary> {
    let bundle =
        read_bundle(input).with_context(|| format!("reading bundle {}", input.display()))?;
    let features = bundle
        .feature_map("features")
        .with_context(|| format!("{}: tensor `features`", input.display()))?;
    let masks = bundle
        .mask_stack("masks")
        .with_context(|| format!("{}: tensor `masks`", input.display()))?;
    let out = pipeline::run(&features, &masks, opts)
        .with_context(|| format!("{}: {} pipeline", input.display(), opts.mode))?;
    if emit.tokens {
        write_sequence(output, &out.sequence, &out.meta)
            .with_context(|| format!("writing tokens to {}", output.display()))?;
        write_json(&output.join("summary.json"), &out.summary)?;
    }
    Ok(out.summary)
}

pub fn run(args: PipelineArgs) -> Result<()> {
    let r = resolve(args)?;
    fs::create_dir_all(&r.output).with_context(|| format!("creating {}", r.output.display()))?;

    let summaries: Vec<(Option<String>, RunSummary)> = if r.input.join(CORPUS_FILE).is_file() {
        let index = CorpusIndex::read(&r.input).context("reading corpus index")?;
        let pool = thread_pool(r.jobs)?;
        let results: Vec<Result<RunSummary>> = pool.install(|| {
            index
                .scenes
                .par_iter()
                .map(|entry| {
                    process(
                        &index.scene_dir(&r.input, entry),
                        &r.output.join(&entry.name),
                        &r.options,
                        r.emit,
                    )
                })
                .collect()
        });
        index
            .scenes
            .iter()
            .zip(results)
            .map(|(e, res)| res.map(|s| (Some(e.name.clone()), s)))
            .collect::<Result<_>>()?
    } else {
        vec![(None, process(&r.input, &r.output, &r.options, r.emit)?)]
    };

    for (scene, summary) in &summaries {
        print_line(&SceneSummary {
            scene: scene.as_deref(),
            summary,
        })?;
    }

    if r.emit.stats || r.emit.svg {
        let counts: Vec<u64> = summaries
            .iter()
            .map(|(_, s)| s.token_count as u64)
            .collect();
        let bins = histogram(&counts, r.bin_width)?;
        if r.emit.stats {
            let stats = compute_stats(&counts)?;
            write_json(&r.output.join("stats.json"), &stats)?;
            write_text(
                &r.output.join("stats.csv"),
                &stats_csv(&[(r.options.mode.as_str(), &stats)]),
            )?;
            write_text(
                &r.output.join("histogram.csv"),
                &histogram_csv(&bins, r.bin_width),
            )?;
        }
        if r.emit.svg {
            let title = format!("Token distribution ({})", r.options.mode);
            write_text(
                &r.output.join("histogram.svg"),
                &histogram_svg(&bins, r.bin_width, &title),
            )?;
        }
    }
    Ok(())
}
