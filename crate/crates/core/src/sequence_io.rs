//! Serialization of token sequences as bundles.
//!
//! Layout: `tokens` (`N x C`), `centroids` (`N`), plus `meta.json` holding
//! sources, kinds and grid. Fixed-rate runs also record the plan, the budget
//! and group membership.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed_rate::{FixedRateOutput, MergeGroup, Strategy};
use crate::merge::{MergedToken, TokenKind, TokenSequence};
use crate::tensor_io::{read_bundle, write_bundle, Bundle, Tensor};

pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub grid: [usize; 2],
    pub channels: usize,
    pub count: usize,
    pub sources: Vec<u32>,
    pub kinds: Vec<TokenKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_rate: Option<FixedRateMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedRateMeta {
    pub strategy: Strategy,
    pub n_target: usize,
    pub initial_budget: i64,
    pub consumed_budget: usize,
    pub groups: Vec<MergeGroup>,
}

impl SequenceMeta {
    pub fn of(seq: &TokenSequence) -> Self {
        let (h, w) = seq.grid();
        Self {
            grid: [h, w],
            channels: seq.channels(),
            count: seq.len(),
            sources: seq.tokens().iter().map(|t| t.source).collect(),
            kinds: seq.tokens().iter().map(|t| t.kind).collect(),
            fixed_rate: None,
        }
    }

    pub fn of_fixed_rate(out: &FixedRateOutput) -> Self {
        Self {
            fixed_rate: Some(FixedRateMeta {
                strategy: out.plan.strategy(),
                n_target: out.plan.n_target(),
                initial_budget: out.initial_budget,
                consumed_budget: out.consumed_budget,
                groups: out.groups.clone(),
            }),
            ..Self::of(&out.sequence)
        }
    }
}

pub fn sequence_bundle(seq: &TokenSequence) -> Bundle {
    let n = seq.len();
    let c = seq.channels();
    let mut bundle = Bundle::new();
    let tokens = Tensor {
        shape: vec![n, c],
        data: seq
            .tokens()
            .iter()
            .flat_map(|t| t.features.iter().copied())
            .collect(),
    };
    let centroids = Tensor {
        shape: vec![n],
        data: seq.centroids().map(|c| c as f32).collect(),
    };
    bundle.insert("tokens", tokens).expect("fresh bundle");
    bundle.insert("centroids", centroids).expect("fresh bundle");
    bundle
}

/// Writes tensors and metadata for a sequence into `dir`.
pub fn write_sequence(
    dir: impl AsRef<Path>,
    seq: &TokenSequence,
    meta: &SequenceMeta,
) -> Result<()> {
    let dir = dir.as_ref();
    write_bundle(dir, &sequence_bundle(seq))?;
    let path = dir.join(META_FILE);
    let mut text = serde_json::to_string_pretty(meta).expect("meta serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Reads a sequence written by [`write_sequence`]. Centroids come back at
/// `f32` precision.
pub fn read_sequence(dir: impl AsRef<Path>) -> Result<(TokenSequence, SequenceMeta)> {
    let dir = dir.as_ref();
    let bundle = read_bundle(dir)?;
    let path = dir.join(META_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta: SequenceMeta =
        serde_json::from_str(&text).map_err(|source| Error::Json { path, source })?;

    let tokens = bundle
        .get("tokens")
        .ok_or_else(|| Error::MissingTensor("tokens".into()))?;
    let centroids = bundle
        .get("centroids")
        .ok_or_else(|| Error::MissingTensor("centroids".into()))?;
    let n = meta.count;
    let c = meta.channels;
    if tokens.shape != [n, c]
        || centroids.shape != [n]
        || meta.sources.len() != n
        || meta.kinds.len() != n
    {
        return Err(Error::Shape(format!(
            "sequence metadata ({n} tokens x {c}) disagrees with tensors {:?} / {:?}",
            tokens.shape, centroids.shape
        )));
    }
    let list = (0..n)
        .map(|k| MergedToken {
            features: tokens.data[k * c..(k + 1) * c].to_vec(),
            centroid: f64::from(centroids.data[k]),
            source: meta.sources[k],
            kind: meta.kinds[k],
        })
        .collect();
    let seq = crate::merge::centroid_sort(list, (meta.grid[0], meta.grid[1]));
    Ok((seq, meta))
}
