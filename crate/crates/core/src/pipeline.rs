//! End-to-end inference data flow: masks are brought to the feature grid,
//! filtered, then merged into a sorted token sequence.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed_rate::{fixed_rate_merge, BudgetPlan, Strategy};
use crate::masks::{competitive_filter, downsample_masks, SoftMask, ValidMasks};
use crate::merge::{merge_hard, merge_soft, TokenSequence};
use crate::sequence_io::SequenceMeta;
use crate::tensor_io::{FeatureMap, MaskStack};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    AdaptiveSoft,
    AdaptiveHard,
    FixedRate,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::AdaptiveSoft => "adaptive_soft",
            Mode::AdaptiveHard => "adaptive_hard",
            Mode::FixedRate => "fixed_rate",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "adaptive_soft" => Ok(Mode::AdaptiveSoft),
            "adaptive_hard" => Ok(Mode::AdaptiveHard),
            "fixed_rate" => Ok(Mode::FixedRate),
            _ => Err(Error::InvalidParameter(format!("unknown mode `{s}`"))),
        }
    }
}

/// Whether masks are resampled before or after the competitive filter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterOrder {
    #[default]
    DownsampleFirst,
    /// Filter at mask resolution, resample the survivors, then rebuild the
    /// hard labels on the feature grid (which may drop further queries).
    FilterFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub mode: Mode,
    #[serde(default)]
    pub n_target: Option<usize>,
    #[serde(default)]
    pub strategy: Option<Strategy>,
    #[serde(default)]
    pub filter_order: FilterOrder,
}

impl PipelineOptions {
    pub fn adaptive_soft() -> Self {
        Self::adaptive(Mode::AdaptiveSoft)
    }

    pub fn adaptive_hard() -> Self {
        Self::adaptive(Mode::AdaptiveHard)
    }

    fn adaptive(mode: Mode) -> Self {
        Self {
            mode,
            n_target: None,
            strategy: None,
            filter_order: FilterOrder::default(),
        }
    }

    pub fn fixed_rate(n_target: usize, strategy: Strategy) -> Self {
        Self {
            mode: Mode::FixedRate,
            n_target: Some(n_target),
            strategy: Some(strategy),
            filter_order: FilterOrder::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            Mode::FixedRate => {
                if self.n_target.is_none() {
                    return Err(Error::InvalidParameter(
                        "fixed_rate mode requires n_target".into(),
                    ));
                }
            }
            _ => {
                if self.n_target.is_some() {
                    return Err(Error::InvalidParameter(format!(
                        "{} mode does not take n_target",
                        self.mode
                    )));
                }
                if self.strategy.is_some() {
                    return Err(Error::InvalidParameter(format!(
                        "{} mode does not take a strategy",
                        self.mode
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: Mode,
    pub grid: [usize; 2],
    pub queries: usize,
    pub valid_masks: usize,
    pub token_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_target: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consumed_budget: Option<usize>,
    pub overshoot: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub valid: ValidMasks,
    pub sequence: TokenSequence,
    pub meta: SequenceMeta,
    pub summary: RunSummary,
}

/// Brings masks to the feature grid and filters them.
pub fn prepare_masks(
    features: &FeatureMap,
    masks: &MaskStack,
    order: FilterOrder,
) -> Result<ValidMasks> {
    let (h, w) = features.grid();
    match order {
        FilterOrder::DownsampleFirst => {
            let resized = if masks.grid() == (h, w) {
                masks.clone()
            } else {
                downsample_masks(masks, h, w)?
            };
            Ok(competitive_filter(&resized))
        }
        FilterOrder::FilterFirst => {
            let native = competitive_filter(masks);
            let ids: Vec<u32> = native.query_ids().collect();
            let kept: Vec<f32> = ids
                .iter()
                .flat_map(|&q| masks.mask(q as usize).iter().copied())
                .collect();
            let kept = MaskStack::new(ids.len(), masks.height(), masks.width(), kept)?;
            let resized = if masks.grid() == (h, w) {
                kept
            } else {
                downsample_masks(&kept, h, w)?
            };
            let soft = ids
                .iter()
                .enumerate()
                .map(|(k, &query_id)| SoftMask {
                    query_id,
                    probs: resized.mask(k).to_vec(),
                })
                .collect();
            ValidMasks::from_soft(h, w, soft)
        }
    }
}

pub fn run(
    features: &FeatureMap,
    masks: &MaskStack,
    opts: &PipelineOptions,
) -> Result<PipelineOutput> {
    opts.validate()?;
    let valid = prepare_masks(features, masks, opts.filter_order)?;
    let (h, w) = features.grid();
    let mut summary = RunSummary {
        mode: opts.mode,
        grid: [h, w],
        queries: masks.count(),
        valid_masks: valid.len(),
        token_count: 0,
        n_target: None,
        strategy: None,
        consumed_budget: None,
        overshoot: false,
    };
    let (sequence, meta) = match opts.mode {
        Mode::AdaptiveSoft => {
            let seq = merge_soft(features, &valid)?;
            let meta = SequenceMeta::of(&seq);
            (seq, meta)
        }
        Mode::AdaptiveHard => {
            let seq = merge_hard(features, &valid)?;
            let meta = SequenceMeta::of(&seq);
            (seq, meta)
        }
        Mode::FixedRate => {
            let n_target = opts.n_target.expect("validated");
            let strategy = opts.strategy.unwrap_or(Strategy::LargeFirst);
            let out = fixed_rate_merge(features, &valid, BudgetPlan::new(n_target, strategy)?)?;
            summary.n_target = Some(n_target);
            summary.strategy = Some(strategy);
            summary.consumed_budget = Some(out.consumed_budget);
            summary.overshoot = out.overshoot();
            let meta = SequenceMeta::of_fixed_rate(&out);
            (out.sequence, meta)
        }
    };
    summary.token_count = sequence.len();
    Ok(PipelineOutput {
        valid,
        sequence,
        meta,
        summary,
    })
}
