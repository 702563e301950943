use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use objtoken::analytics::TokenCountStats;
use objtoken::analytics::{compute_stats, histogram, histogram_csv, histogram_svg, stats_csv, Bin};
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::{print_line, write_json, write_text};
use crate::StatsArgs;

#[derive(Deserialize)]
struct CountOnly {
    token_count: u64,
}

#[derive(Serialize)]
struct Report<'a> {
    stats: &'a TokenCountStats,
    bin_width: u64,
    histogram: &'a [Bin],
}

fn parse_line(line: &str, origin: &str) -> Result<u64> {
    let c: CountOnly =
        serde_json::from_str(line).with_context(|| format!("{origin}: not a run summary"))?;
    Ok(c.token_count)
}

/// Token counts from a JSON-lines file, or from every `summary.json` under a
/// directory in path order.
fn collect_counts(input: &Path) -> Result<Vec<u64>> {
    if input.is_dir() {
        let mut paths: Vec<_> = WalkDir::new(input)
            .sort_by_file_name()
            .into_iter()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_type().is_file() && e.file_name() == "summary.json")
            .map(|e| e.into_path())
            .collect();
        paths.sort();
        paths
            .iter()
            .map(|p| {
                let text =
                    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                parse_line(&text, &p.display().to_string())
            })
            .collect()
    } else {
        let text =
            fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, l)| parse_line(l, &format!("{}:{}", input.display(), n + 1)))
            .collect()
    }
}

pub fn run(args: StatsArgs) -> Result<()> {
    let counts = collect_counts(&args.input)?;
    if counts.is_empty() {
        bail!("stats: no run summaries found in {}", args.input.display());
    }
    let stats = compute_stats(&counts)?;
    let bins = histogram(&counts, args.bin_width)?;
    if let Some(out) = &args.output {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        write_json(&out.join("stats.json"), &stats)?;
        write_text(
            &out.join("stats.csv"),
            &stats_csv(&[(args.name.as_str(), &stats)]),
        )?;
        write_text(
            &out.join("histogram.csv"),
            &histogram_csv(&bins, args.bin_width),
        )?;
        let title = format!("Token distribution of {}", args.name);
        write_text(
            &out.join("histogram.svg"),
            &histogram_svg(&bins, args.bin_width, &title),
        )?;
    }
    print_line(&Report {
        stats: &stats,
        bin_width: args.bin_width,
        histogram: &bins,
    })
}
