//! Mask-guided token merging and centroid-guided sorting.
//!
//! For mask `n` with weights `w[n][i]` over raster index `i` (zero-based):
//!
//! ```text
//! t_n = sum_i w[n][i] * f_i / sum_i w[n][i]
//! c_n = sum_i w[n][i] * i   / sum_i w[n][i]
//! ```
//!
//! Sums run in `f64` in raster order; outputs are rounded to `f32` features
//! and kept as `f64` centroids.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masks::ValidMasks;
use crate::tensor_io::FeatureMap;

/// Soft masks whose total weight falls below this are rejected.
pub const MIN_MASK_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Soft,
    Hard,
    Partial,
    Passthrough,
}

impl TokenKind {
    /// Secondary sort key: an original token sorts before a merged token
    /// with the same centroid.
    fn rank(self) -> u8 {
        match self {
            TokenKind::Passthrough => 0,
            _ => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TokenKind::Soft => "soft",
            TokenKind::Hard => "hard",
            TokenKind::Partial => "partial",
            TokenKind::Passthrough => "passthrough",
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergedToken {
    pub features: Vec<f32>,
    /// Position in flattened raster-index units.
    pub centroid: f64,
    /// Query id of the mask the token came from.
    pub source: u32,
    pub kind: TokenKind,
}

impl MergedToken {
    fn sort_key_cmp(&self, other: &Self) -> Ordering {
        self.centroid
            .total_cmp(&other.centroid)
            .then(self.kind.rank().cmp(&other.kind.rank()))
            .then(self.source.cmp(&other.source))
    }
}

/// Tokens in ascending centroid order.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    tokens: Vec<MergedToken>,
    height: usize,
    width: usize,
}

impl TokenSequence {
    pub fn tokens(&self) -> &[MergedToken] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<MergedToken> {
        self.tokens
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Feature width, or 0 for an empty sequence.
    pub fn channels(&self) -> usize {
        self.tokens.first().map_or(0, |t| t.features.len())
    }

    pub fn centroids(&self) -> impl Iterator<Item = f64> + '_ {
        self.tokens.iter().map(|t| t.centroid)
    }

    pub fn is_sorted(&self) -> bool {
        self.tokens
            .windows(2)
            .all(|w| w[0].centroid <= w[1].centroid)
    }
}

/// Stable ascending sort by centroid; equal centroids put passthrough tokens
/// first, then order by source id.
pub fn centroid_sort(mut tokens: Vec<MergedToken>, grid: (usize, usize)) -> TokenSequence {
    tokens.sort_by(MergedToken::sort_key_cmp);
    TokenSequence {
        tokens,
        height: grid.0,
        width: grid.1,
    }
}

fn check_grid(features: &FeatureMap, valid: &ValidMasks) -> Result<()> {
    if features.grid() != valid.grid() {
        return Err(Error::GridMismatch {
            features: features.grid(),
            masks: valid.grid(),
        });
    }
    Ok(())
}

/// One token per retained soft mask, weighted by its probabilities.
pub fn merge_soft(features: &FeatureMap, valid: &ValidMasks) -> Result<TokenSequence> {
    check_grid(features, valid)?;
    let channels = features.channels();
    let mut tokens = Vec::with_capacity(valid.len());
    for mask in valid.soft() {
        let mut weight = 0.0f64;
        let mut position = 0.0f64;
        let mut acc = vec![0.0f64; channels];
        for (i, &w) in mask.probs.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let w = f64::from(w);
            weight += w;
            position += w * i as f64;
            for (a, &f) in acc.iter_mut().zip(features.token(i)) {
                *a += w * f64::from(f);
            }
        }
        if weight < MIN_MASK_WEIGHT {
            return Err(Error::DegenerateMask {
                query_id: mask.query_id,
                weight,
            });
        }
        tokens.push(MergedToken {
            features: acc.iter().map(|a| (a / weight) as f32).collect(),
            centroid: position / weight,
            source: mask.query_id,
            kind: TokenKind::Soft,
        });
    }
    Ok(centroid_sort(tokens, features.grid()))
}

/// One token per hard region: the arithmetic mean of its member features.
pub fn merge_hard(features: &FeatureMap, valid: &ValidMasks) -> Result<TokenSequence> {
    check_grid(features, valid)?;
    let mut groups: std::collections::BTreeMap<u32, Accumulator> = valid
        .areas()
        .keys()
        .map(|&id| (id, Accumulator::new(features.channels())))
        .collect();
    for (i, label) in valid.hard().iter().enumerate() {
        groups
            .get_mut(label)
            .expect("hard labels are retained ids")
            .add(i, features.token(i));
    }
    let tokens = groups
        .into_iter()
        .map(|(source, acc)| acc.finish(source, TokenKind::Hard))
        .collect();
    Ok(centroid_sort(tokens, features.grid()))
}

/// Unit-weight running mean of features and raster positions.
#[derive(Debug, Clone)]
pub(crate) struct Accumulator {
    count: usize,
    position: f64,
    sums: Vec<f64>,
}

impl Accumulator {
    pub(crate) fn new(channels: usize) -> Self {
        Self {
            count: 0,
            position: 0.0,
            sums: vec![0.0; channels],
        }
    }

    pub(crate) fn add(&mut self, index: usize, features: &[f32]) {
        self.count += 1;
        self.position += index as f64;
        for (s, &f) in self.sums.iter_mut().zip(features) {
            *s += f64::from(f);
        }
    }

    pub(crate) fn finish(self, source: u32, kind: TokenKind) -> MergedToken {
        let n = self.count as f64;
        MergedToken {
            features: self.sums.iter().map(|s| (s / n) as f32).collect(),
            centroid: self.position / n,
            source,
            kind,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masks::SoftMask;

    fn fmap(h: usize, w: usize, c: usize, data: Vec<f32>) -> FeatureMap {
        FeatureMap::new(h, w, c, data).unwrap()
    }

    fn token(centroid: f64, source: u32) -> MergedToken {
        MergedToken {
            features: vec![source as f32],
            centroid,
            source,
            kind: TokenKind::Soft,
        }
    }

    #[test]
    fn uniform_soft_mask_gives_mean() {
        let f = fmap(2, 3, 2, (0..12).map(|v| v as f32).collect());
        let v = ValidMasks::from_soft(
            2,
            3,
            vec![SoftMask {
                query_id: 0,
                probs: vec![1.0; 6],
            }],
        )
        .unwrap();
        let seq = merge_soft(&f, &v).unwrap();
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.tokens()[0].features, vec![5.0, 6.0]);
        assert_eq!(seq.tokens()[0].centroid, 2.5);
    }

    #[test]
    fn weighted_soft_merge() {
        let f = fmap(1, 4, 1, vec![0.0, 1.0, 2.0, 3.0]);
        let v = ValidMasks::from_soft(
            1,
            4,
            vec![SoftMask {
                query_id: 0,
                probs: vec![0.9, 0.1, 0.1, 0.9],
            }],
        )
        .unwrap();
        let seq = merge_soft(&f, &v).unwrap();
        let t = &seq.tokens()[0];
        assert!((t.features[0] - 1.5).abs() < 1e-6);
        assert!((t.centroid - 1.5).abs() < 1e-9);
    }

    #[test]
    fn degenerate_soft_mask() {
        let f = fmap(1, 2, 1, vec![0.0, 1.0]);
        let v = ValidMasks::from_soft(
            1,
            2,
            vec![
                SoftMask {
                    query_id: 0,
                    probs: vec![0.5, 0.5],
                },
                SoftMask {
                    query_id: 3,
                    probs: vec![0.6, 0.0],
                },
            ],
        )
        .unwrap();
        // Zero out query 3 after filtering to simulate an upstream edit.
        let edited = v.clone().with_soft(vec![
            SoftMask {
                query_id: 0,
                probs: vec![0.5, 0.5],
            },
            SoftMask {
                query_id: 3,
                probs: vec![0.0, 0.0],
            },
        ]);
        assert!(matches!(
            merge_soft(&f, &edited),
            Err(Error::DegenerateMask { query_id: 3, .. })
        ));
    }

    #[test]
    fn hard_two_element_mean() {
        let f = fmap(2, 2, 2, vec![1.0, 0.0, 9.0, 9.0, 9.0, 9.0, 3.0, 4.0]);
        let v = ValidMasks::from_soft(
            2,
            2,
            vec![
                SoftMask {
                    query_id: 0,
                    probs: vec![1.0, 0.0, 0.0, 1.0],
                },
                SoftMask {
                    query_id: 1,
                    probs: vec![0.0, 1.0, 1.0, 0.0],
                },
            ],
        )
        .unwrap();
        let seq = merge_hard(&f, &v).unwrap();
        let t0 = seq.tokens().iter().find(|t| t.source == 0).unwrap();
        assert_eq!(t0.features, vec![2.0, 2.0]);
        assert_eq!(t0.centroid, 1.5);
        assert_eq!(t0.kind, TokenKind::Hard);
    }

    #[test]
    fn full_grid_hard_mask_is_global_mean() {
        let f = fmap(3, 3, 1, (0..9).map(|v| v as f32).collect());
        let v = ValidMasks::from_soft(
            3,
            3,
            vec![SoftMask {
                query_id: 5,
                probs: vec![0.4; 9],
            }],
        )
        .unwrap();
        let seq = merge_hard(&f, &v).unwrap();
        assert_eq!(seq.tokens()[0].features, vec![4.0]);
        assert_eq!(seq.tokens()[0].centroid, 4.0);
    }

    #[test]
    fn grid_mismatch() {
        let f = fmap(1, 2, 1, vec![0.0, 1.0]);
        let v = ValidMasks::from_soft(
            2,
            1,
            vec![SoftMask {
                query_id: 0,
                probs: vec![1.0; 2],
            }],
        )
        .unwrap();
        assert!(matches!(
            merge_hard(&f, &v),
            Err(Error::GridMismatch { .. })
        ));
        assert!(matches!(
            merge_soft(&f, &v),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn sort_by_centroid() {
        let seq = centroid_sort(vec![token(6.8, 0), token(2.1, 1), token(4.0, 2)], (1, 10));
        assert_eq!(
            seq.tokens().iter().map(|t| t.source).collect::<Vec<_>>(),
            [1, 2, 0]
        );
        assert!(seq.is_sorted());
    }

    #[test]
    fn sort_keeps_sorted_input() {
        let input = vec![token(1.0, 3), token(2.0, 1), token(3.0, 2)];
        let seq = centroid_sort(input.clone(), (1, 4));
        assert_eq!(seq.tokens(), &input[..]);
    }

    #[test]
    fn sort_small_list() {
        let seq = centroid_sort(vec![token(5.0, 0), token(1.0, 1), token(3.0, 2)], (1, 6));
        assert_eq!(seq.centroids().collect::<Vec<_>>(), [1.0, 3.0, 5.0]);
    }

    #[test]
    fn equal_centroids_break_on_source() {
        let seq = centroid_sort(vec![token(2.0, 7), token(2.0, 2)], (1, 5));
        assert_eq!(
            seq.tokens().iter().map(|t| t.source).collect::<Vec<_>>(),
            [2, 7]
        );
    }

    #[test]
    fn passthrough_precedes_merged_at_equal_centroid() {
        let mut merged = token(3.0, 1);
        merged.kind = TokenKind::Hard;
        let mut original = token(3.0, 9);
        original.kind = TokenKind::Passthrough;
        let seq = centroid_sort(vec![merged, original], (1, 5));
        assert_eq!(seq.tokens()[0].kind, TokenKind::Passthrough);
    }
}
