//! Budgeted fixed-rate merging.
//!
//! Segments (hard regions) are visited in area order. Starting from a budget
//! of `HW - n_target` tokens to remove, each segment is either merged whole
//! (cost `area - 1`), partially merged to spend exactly the remaining budget,
//! or kept as-is once the budget is gone. Partial merges take the first
//! `budget + 1` members in raster order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masks::ValidMasks;
use crate::merge::{centroid_sort, Accumulator, MergedToken, TokenKind, TokenSequence};
use crate::tensor_io::FeatureMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Largest segments are merged first.
    LargeFirst,
    /// Smallest segments are merged first.
    SmallFirst,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::LargeFirst => "large_first",
            Strategy::SmallFirst => "small_first",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "large_first" | "large-first" => Ok(Strategy::LargeFirst),
            "small_first" | "small-first" => Ok(Strategy::SmallFirst),
            other => Err(Error::InvalidParameter(format!(
                "unknown strategy `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetPlan {
    n_target: usize,
    strategy: Strategy,
}

impl BudgetPlan {
    pub fn new(n_target: usize, strategy: Strategy) -> Result<Self> {
        if n_target < 1 {
            return Err(Error::InvalidParameter(
                "n_target must be at least 1".into(),
            ));
        }
        Ok(Self { n_target, strategy })
    }

    pub fn n_target(&self) -> usize {
        self.n_target
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    /// Initial budget `HW - n_target`; non-positive means nothing is merged.
    pub fn delta(&self, grid_tokens: usize) -> i64 {
        grid_tokens as i64 - self.n_target as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub query_id: u32,
    pub area: usize,
    /// Member raster indices, strictly increasing.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentOrder(pub Vec<Segment>);

impl SegmentOrder {
    pub fn ids(&self) -> Vec<u32> {
        self.0.iter().map(|s| s.query_id).collect()
    }
}

/// Groups hard-labelled pixels into segments and orders them by area,
/// breaking ties on ascending query id.
pub fn plan_segments(valid: &ValidMasks, strategy: Strategy) -> SegmentOrder {
    let mut segments: Vec<Segment> = valid
        .areas()
        .iter()
        .map(|(&query_id, &area)| Segment {
            query_id,
            area,
            members: Vec::with_capacity(area),
        })
        .collect();
    // areas is a BTreeMap, so segments are in ascending id order here.
    for (i, label) in valid.hard().iter().enumerate() {
        let slot = segments
            .binary_search_by_key(label, |s| s.query_id)
            .expect("hard labels are retained ids");
        segments[slot].members.push(i);
    }
    match strategy {
        Strategy::LargeFirst => {
            segments.sort_by(|a, b| b.area.cmp(&a.area).then(a.query_id.cmp(&b.query_id)))
        }
        Strategy::SmallFirst => {
            segments.sort_by(|a, b| a.area.cmp(&b.area).then(a.query_id.cmp(&b.query_id)))
        }
    }
    SegmentOrder(segments)
}

/// A merged group of original tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeGroup {
    pub source: u32,
    pub kind: TokenKind,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedRateOutput {
    pub sequence: TokenSequence,
    pub plan: BudgetPlan,
    /// `HW - n_target`, possibly negative.
    pub initial_budget: i64,
    /// Tokens removed; equals `min(max(initial_budget, 0), HW - N_masks)`.
    pub consumed_budget: usize,
    /// Every group of two or more tokens that was merged, in visiting order.
    pub groups: Vec<MergeGroup>,
}

impl FixedRateOutput {
    pub fn overshoot(&self) -> bool {
        self.sequence.len() > self.plan.n_target()
    }
}

pub fn fixed_rate_merge(
    features: &FeatureMap,
    valid: &ValidMasks,
    plan: BudgetPlan,
) -> Result<FixedRateOutput> {
    if features.grid() != valid.grid() {
        return Err(Error::GridMismatch {
            features: features.grid(),
            masks: valid.grid(),
        });
    }
    let channels = features.channels();
    let initial_budget = plan.delta(features.len());
    let mut budget = initial_budget.max(0) as usize;
    let mut tokens: Vec<MergedToken> = Vec::new();
    let mut groups = Vec::new();

    let passthrough = |i: usize, source: u32| MergedToken {
        features: features.token(i).to_vec(),
        centroid: i as f64,
        source,
        kind: TokenKind::Passthrough,
    };

    for segment in plan_segments(valid, plan.strategy()).0 {
        let cost = segment.area.saturating_sub(1);
        if segment.area == 0 {
            continue;
        }
        if budget > 0 && cost <= budget {
            let mut acc = Accumulator::new(channels);
            for &i in &segment.members {
                acc.add(i, features.token(i));
            }
            tokens.push(acc.finish(segment.query_id, TokenKind::Hard));
            if segment.area > 1 {
                groups.push(MergeGroup {
                    source: segment.query_id,
                    kind: TokenKind::Hard,
                    members: segment.members,
                });
            }
            budget -= cost;
        } else if budget > 0 {
            let (head, tail) = segment.members.split_at(budget + 1);
            let mut acc = Accumulator::new(channels);
            for &i in head {
                acc.add(i, features.token(i));
            }
            tokens.push(acc.finish(segment.query_id, TokenKind::Partial));
            tokens.extend(tail.iter().map(|&i| passthrough(i, segment.query_id)));
            groups.push(MergeGroup {
                source: segment.query_id,
                kind: TokenKind::Partial,
                members: head.to_vec(),
            });
            budget = 0;
        } else {
            tokens.extend(
                segment
                    .members
                    .iter()
                    .map(|&i| passthrough(i, segment.query_id)),
            );
        }
    }

    let consumed_budget = initial_budget.max(0) as usize - budget;
    Ok(FixedRateOutput {
        sequence: centroid_sort(tokens, features.grid()),
        plan,
        initial_budget,
        consumed_budget,
        groups,
    })
}

/// Output size predicted from the budget: `clamp(n_target, n_masks, hw)`.
pub fn expected_count(grid_tokens: usize, n_masks: usize, n_target: usize) -> usize {
    let delta = (grid_tokens as i64 - n_target as i64).max(0) as usize;
    grid_tokens - delta.min(grid_tokens - n_masks)
}
