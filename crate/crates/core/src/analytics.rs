//! Token-count statistics, histograms and analytic cost estimators.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vision-encoder FLOPs per image for a CLIP ViT-L/14 encoder.
pub const CLIP_VIT_L14_FLOPS: f64 = 1.91e12;
/// Vision FLOPs per image for a ConvNeXt-L backbone.
pub const CONVNEXT_L_FLOPS: f64 = 1.44e12;
/// FLOPs per image for a Mask2Former segmentation head.
pub const MASK2FORMER_HEAD_FLOPS: f64 = 0.30e12;
/// Backbone plus segmentation head.
pub const SEGMENTATION_VISION_FLOPS: f64 = 1.74e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenCountStats {
    pub count: usize,
    pub min: u64,
    pub max: u64,
    pub mean: f64,
    /// Lower-middle element for even lengths.
    pub median: u64,
    /// Population standard deviation.
    pub standard_deviation: f64,
}

pub fn compute_stats(counts: &[u64]) -> Result<TokenCountStats> {
    if counts.is_empty() {
        return Err(Error::Empty("token count list"));
    }
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mean = sorted.iter().map(|&c| c as f64).sum::<f64>() / n;
    let var = sorted
        .iter()
        .map(|&c| {
            let d = c as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    Ok(TokenCountStats {
        count: sorted.len(),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        mean,
        median: sorted[(sorted.len() - 1) / 2],
        standard_deviation: var.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bin {
    pub start: u64,
    pub frequency: usize,
}

/// Fixed-width bins covering `[0, max]`, including empty ones.
pub fn histogram(counts: &[u64], bin_width: u64) -> Result<Vec<Bin>> {
    if bin_width < 1 {
        return Err(Error::InvalidParameter(
            "bin width must be at least 1".into(),
        ));
    }
    let Some(&max) = counts.iter().max() else {
        return Ok(Vec::new());
    };
    let mut bins: Vec<Bin> = (0..=max / bin_width)
        .map(|k| Bin {
            start: k * bin_width,
            frequency: 0,
        })
        .collect();
    for &c in counts {
        bins[(c / bin_width) as usize].frequency += 1;
    }
    Ok(bins)
}

/// One-row-per-table CSV with a header line.
pub fn stats_csv(rows: &[(&str, &TokenCountStats)]) -> String {
    let mut out = String::from("dataset,count,min,max,mean,median,sd\n");
    for (name, s) in rows {
        let _ = writeln!(
            out,
            "{name},{},{},{},{:.1},{},{:.1}",
            s.count, s.min, s.max, s.mean, s.median, s.standard_deviation
        );
    }
    out
}

pub fn histogram_csv(bins: &[Bin], bin_width: u64) -> String {
    let mut out = String::from("bin_start,bin_end,frequency\n");
    for b in bins {
        let _ = writeln!(out, "{},{},{}", b.start, b.start + bin_width, b.frequency);
    }
    out
}

/// Static bar chart with labeled token-count intervals on the x axis.
pub fn histogram_svg(bins: &[Bin], bin_width: u64, title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const LEFT: f64 = 56.0;
    const RIGHT: f64 = 16.0;
    const TOP: f64 = 36.0;
    const BOTTOM: f64 = 64.0;
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;
    let peak = bins.iter().map(|b| b.frequency).max().unwrap_or(0).max(1);
    let slot = plot_w / bins.len().max(1) as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let base = TOP + plot_h;
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#,
        W - RIGHT
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{base}" stroke="black"/>"#
    );
    for tick in 0..=4 {
        let value = peak as f64 * tick as f64 / 4.0;
        let y = base - plot_h * tick as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{:.0}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            value
        );
    }
    for (k, b) in bins.iter().enumerate() {
        let bar_h = plot_h * b.frequency as f64 / peak as f64;
        let x = LEFT + slot * k as f64;
        let _ = writeln!(
            svg,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4c78a8"><title>[{}, {}): {}</title></rect>"##,
            x + slot * 0.1,
            base - bar_h,
            slot * 0.8,
            bar_h,
            b.start,
            b.start + bin_width,
            b.frequency
        );
        let cx = x + slot / 2.0;
        let _ = writeln!(
            svg,
            r#"<text x="{cx:.2}" y="{:.1}" text-anchor="end" transform="rotate(-45 {cx:.2} {:.1})">[{}, {})</text>"#,
            base + 14.0,
            base + 14.0,
            b.start,
            b.start + bin_width
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">token count</text>"#,
        LEFT + plot_w / 2.0,
        H - 6.0
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelCostConfig {
    /// Language-model parameter count.
    pub llm_params: f64,
    pub n_layers: u64,
    pub hidden_dim: u64,
    /// 2 (half precision) or 4 (single precision).
    pub bytes_per_element: u64,
    /// Fixed per-image vision cost.
    pub vision_flops: f64,
    pub include_quadratic_attention: bool,
}

impl ModelCostConfig {
    pub fn validate(&self) -> Result<()> {
        if self.llm_params.is_nan()
            || self.llm_params <= 0.0
            || self.n_layers == 0
            || self.hidden_dim == 0
        {
            return Err(Error::InvalidParameter(
                "llm_params, n_layers and hidden_dim must be positive".into(),
            ));
        }
        if !matches!(self.bytes_per_element, 2 | 4) {
            return Err(Error::InvalidParameter(format!(
                "bytes_per_element must be 2 or 4, got {}",
                self.bytes_per_element
            )));
        }
        if self.vision_flops.is_nan() || self.vision_flops < 0.0 {
            return Err(Error::InvalidParameter("vision_flops must be >= 0".into()));
        }
        Ok(())
    }

    /// 7B decoder (32 layers, width 4096, fp16) behind a CLIP ViT-L/14 encoder.
    pub fn clip_7b() -> Self {
        Self {
            llm_params: 7e9,
            n_layers: 32,
            hidden_dim: 4096,
            bytes_per_element: 2,
            vision_flops: CLIP_VIT_L14_FLOPS,
            include_quadratic_attention: false,
        }
    }

    /// Same decoder behind a ConvNeXt-L backbone with a segmentation head.
    pub fn segmentation_7b() -> Self {
        Self {
            vision_flops: SEGMENTATION_VISION_FLOPS,
            ..Self::clip_7b()
        }
    }
}

/// `2 * layers * tokens * hidden * bytes`: keys and values for every layer.
pub fn kv_cache_bytes(n_tokens: u64, cfg: &ModelCostConfig) -> u64 {
    2 * cfg.n_layers * n_tokens * cfg.hidden_dim * cfg.bytes_per_element
}

/// Same as [`kv_cache_bytes`] for fractional (averaged) token counts.
pub fn kv_cache_bytes_f64(n_tokens: f64, cfg: &ModelCostConfig) -> f64 {
    2.0 * cfg.n_layers as f64 * n_tokens * cfg.hidden_dim as f64 * cfg.bytes_per_element as f64
}

/// Prefill cost: `vision + 2 * P * n`, plus `4 * L * n^2 * d` when attention
/// is counted.
pub fn prefill_flops(n_tokens: f64, cfg: &ModelCostConfig) -> f64 {
    let mut flops = cfg.vision_flops + 2.0 * cfg.llm_params * n_tokens;
    if cfg.include_quadratic_attention {
        flops += 4.0 * cfg.n_layers as f64 * n_tokens * n_tokens * cfg.hidden_dim as f64;
    }
    flops
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostPoint {
    pub tokens: f64,
    pub flops: f64,
    pub kv_bytes: f64,
}

impl CostPoint {
    pub fn estimate(tokens: f64, cfg: &ModelCostConfig) -> Self {
        Self {
            tokens,
            flops: prefill_flops(tokens, cfg),
            kv_bytes: kv_cache_bytes_f64(tokens, cfg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub baseline: CostPoint,
    pub compressed: CostPoint,
    pub flops_ratio: f64,
    pub kv_ratio: f64,
    pub token_ratio: f64,
}

/// Baseline-over-compressed ratios for tokens, FLOPs and KV cache.
pub fn reduction_report(
    baseline: (f64, &ModelCostConfig),
    compressed: (f64, &ModelCostConfig),
) -> Result<ReductionReport> {
    let b = CostPoint::estimate(baseline.0, baseline.1);
    let c = CostPoint::estimate(compressed.0, compressed.1);
    if !(b.tokens > 0.0 && b.flops > 0.0 && b.kv_bytes > 0.0) {
        return Err(Error::InvalidParameter(
            "baseline quantities must be positive".into(),
        ));
    }
    let ratio = |num: f64, den: f64, what: &str| {
        if den == 0.0 {
            Err(Error::InvalidParameter(format!(
                "compressed {what} is zero; ratio undefined"
            )))
        } else {
            Ok(num / den)
        }
    };
    Ok(ReductionReport {
        baseline: b,
        compressed: c,
        flops_ratio: ratio(b.flops, c.flops, "FLOPs")?,
        kv_ratio: ratio(b.kv_bytes, c.kv_bytes, "KV cache")?,
        token_ratio: ratio(b.tokens, c.tokens, "token count")?,
    })
}
