//! Test-only oracles. These deliberately avoid the library's merge and
//! filter code paths: everything is recomputed from raw slices with
//! explicit (row, column) loops.

#![allow(dead_code)]

use objtoken::synth::SplitMix64;
use objtoken::{FeatureMap, MaskStack};

/// Weighted average of features and raster positions, channel by channel.
pub struct OracleToken {
    pub features: Vec<f64>,
    pub centroid: f64,
}

pub fn weighted_average(features: &FeatureMap, weights: &[f64]) -> Option<OracleToken> {
    let (h, w) = features.grid();
    let c = features.channels();
    let raw = features.data();
    let mut total = 0.0;
    let mut pos = 0.0;
    for y in 0..h {
        for x in 0..w {
            let wt = weights[y * w + x];
            total += wt;
            pos += wt * (y * w + x) as f64;
        }
    }
    if total <= 0.0 {
        return None;
    }
    let mut out = vec![0.0; c];
    for (ch, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for y in 0..h {
            for x in 0..w {
                acc += weights[y * w + x] * raw[(y * w + x) * c + ch] as f64;
            }
        }
        *slot = acc / total;
    }
    Some(OracleToken {
        features: out,
        centroid: pos / total,
    })
}

/// Per-pixel winner by exhaustive scan; ties go to the lower query index.
pub fn argmax_labels(masks: &MaskStack) -> Vec<u32> {
    let (h, w) = masks.grid();
    let plane = h * w;
    let raw = masks.data();
    let mut labels = vec![0u32; plane];
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = 0usize;
        for q in 0..masks.count() {
            if raw[q * plane + i] > raw[best * plane + i] {
                best = q;
            }
        }
        *label = best as u32;
    }
    labels
}

/// Sorted distinct winners.
pub fn winner_set(labels: &[u32]) -> Vec<u32> {
    let mut v = labels.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Random feature map and mask stack with sizes in the given ranges.
///
/// Masks are smooth-ish random fields so that several queries survive the
/// competitive filter without every query winning somewhere.
pub struct RandomScene {
    pub features: FeatureMap,
    pub masks: MaskStack,
}

pub fn random_scene(
    seed: u64,
    max_side: usize,
    max_channels: usize,
    max_masks: usize,
) -> RandomScene {
    let mut rng = SplitMix64::new(seed);
    let mut below = |n: usize| (rng.next_u64() % n as u64) as usize;
    let h = 1 + below(max_side);
    let w = 1 + below(max_side);
    let c = 1 + below(max_channels);
    let n = 1 + below(max_masks);
    let mut rng = SplitMix64::new(seed ^ 0xA5A5_A5A5);
    let features: Vec<f32> = (0..h * w * c)
        .map(|_| (rng.next_f64() * 20.0 - 10.0) as f32)
        .collect();
    let mut masks = Vec::with_capacity(n * h * w);
    for _ in 0..n {
        let cy = rng.next_f64() * h as f64;
        let cx = rng.next_f64() * w as f64;
        let s = 1.0 + rng.next_f64() * (h.max(w) as f64);
        let peak = 0.3 + 0.7 * rng.next_f64();
        for y in 0..h {
            for x in 0..w {
                let d2 = (y as f64 + 0.5 - cy).powi(2) + (x as f64 + 0.5 - cx).powi(2);
                let jitter = 0.05 * rng.next_f64();
                let v = (peak * (-d2 / (2.0 * s * s)).exp() + jitter).clamp(0.0, 1.0);
                masks.push(v as f32);
            }
        }
    }
    RandomScene {
        features: FeatureMap::new(h, w, c, features).unwrap(),
        masks: MaskStack::new(n, h, w, masks).unwrap(),
    }
}
