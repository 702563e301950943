use anyhow::{bail, Result};
use objtoken::analytics::{reduction_report, CostPoint, ModelCostConfig};
use serde::Serialize;

use super::print_line;
use crate::{EstimateArgs, PresetArg};

fn preset(p: PresetArg) -> ModelCostConfig {
    match p {
        PresetArg::Clip7b => ModelCostConfig::clip_7b(),
        PresetArg::Segmentation7b => ModelCostConfig::segmentation_7b(),
    }
}

fn with_overrides(mut cfg: ModelCostConfig, args: &EstimateArgs) -> ModelCostConfig {
    if let Some(p) = args.params {
        cfg.llm_params = p;
    }
    if let Some(l) = args.layers {
        cfg.n_layers = l;
    }
    if let Some(d) = args.hidden {
        cfg.hidden_dim = d;
    }
    if let Some(b) = args.bytes {
        cfg.bytes_per_element = b;
    }
    if let Some(v) = args.vision_flops {
        cfg.vision_flops = v;
    }
    cfg.include_quadratic_attention |= args.quadratic;
    cfg
}

#[derive(Serialize)]
struct Estimate {
    config: ModelCostConfig,
    tokens: f64,
    flops: f64,
    kv_cache_bytes: f64,
    kv_cache_mib: f64,
}

impl Estimate {
    fn new(tokens: f64, config: ModelCostConfig) -> Self {
        let p = CostPoint::estimate(tokens, &config);
        Self {
            config,
            tokens,
            flops: p.flops,
            kv_cache_bytes: p.kv_bytes,
            kv_cache_mib: p.kv_bytes / (1024.0 * 1024.0),
        }
    }
}

#[derive(Serialize)]
struct Report {
    compressed: Estimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flops_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kv_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    token_ratio: Option<f64>,
}

pub fn run(args: EstimateArgs) -> Result<()> {
    if !(args.tokens >= 0.0 && args.tokens.is_finite()) {
        bail!("estimate: --tokens must be a finite non-negative number");
    }
    let cfg = with_overrides(preset(args.preset), &args);
    cfg.validate()?;
    let mut report = Report {
        compressed: Estimate::new(args.tokens, cfg),
        baseline: None,
        flops_ratio: None,
        kv_ratio: None,
        token_ratio: None,
    };
    if let Some(base_tokens) = args.baseline_tokens {
        let base_cfg = with_overrides(preset(args.baseline_preset), &args);
        let base_cfg = ModelCostConfig {
            vision_flops: preset(args.baseline_preset).vision_flops,
            ..base_cfg
        };
        let r = reduction_report((base_tokens, &base_cfg), (args.tokens, &cfg))?;
        report.baseline = Some(Estimate::new(base_tokens, base_cfg));
        report.flops_ratio = Some(r.flops_ratio);
        report.kv_ratio = Some(r.kv_ratio);
        report.token_ratio = Some(r.token_ratio);
    }
    print_line(&report)
}
