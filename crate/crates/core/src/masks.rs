//! Resolution matching and competitive filtering of query probability masks.
//!
//! Filtering keeps exactly the queries that win the per-pixel argmax at one
//! or more pixels. Ties go to the lowest query id, so results do not depend
//! on evaluation order.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tensor_io::{MaskStack, Tensor};

/// A retained query and its (unmodified) probability map.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMask {
    pub query_id: u32,
    /// Flattened `h x w` probabilities in raster order.
    pub probs: Vec<f32>,
}

/// Filtered soft masks plus the non-overlapping hard partition they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidMasks {
    height: usize,
    width: usize,
    soft: Vec<SoftMask>,
    hard: Vec<u32>,
    areas: BTreeMap<u32, usize>,
}

impl ValidMasks {
    /// Builds the valid set from arbitrary soft masks: computes the hard
    /// labeling and drops any mask that wins no pixel.
    ///
    /// The relative order of the retained soft masks is preserved.
    pub fn from_soft(height: usize, width: usize, soft: Vec<SoftMask>) -> Result<Self> {
        if soft.is_empty() {
            return Err(Error::Empty("soft mask set"));
        }
        if height == 0 || width == 0 {
            return Err(Error::Shape(format!(
                "grid must be positive, got {height}x{width}"
            )));
        }
        let plane = height * width;
        for m in &soft {
            if m.probs.len() != plane {
                return Err(Error::Shape(format!(
                    "soft mask for query {} has {} values, grid needs {plane}",
                    m.query_id,
                    m.probs.len()
                )));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for m in &soft {
            if !seen.insert(m.query_id) {
                return Err(Error::InvalidParameter(format!(
                    "query id {} appears twice in the soft set",
                    m.query_id
                )));
            }
        }

        let hard: Vec<u32> = (0..plane)
            .map(|i| {
                let mut best = &soft[0];
                for m in &soft[1..] {
                    let (p, b) = (m.probs[i], best.probs[i]);
                    if p > b || (p == b && m.query_id < best.query_id) {
                        best = m;
                    }
                }
                best.query_id
            })
            .collect();

        let mut areas = BTreeMap::new();
        for &label in &hard {
            *areas.entry(label).or_insert(0usize) += 1;
        }
        let soft = soft
            .into_iter()
            .filter(|m| areas.contains_key(&m.query_id))
            .collect();
        Ok(Self {
            height,
            width,
            soft,
            hard,
            areas,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn soft(&self) -> &[SoftMask] {
        &self.soft
    }

    /// Hard label per pixel in raster order; each label is a retained query id.
    pub fn hard(&self) -> &[u32] {
        &self.hard
    }

    /// Pixel count per retained query id.
    pub fn areas(&self) -> &BTreeMap<u32, usize> {
        &self.areas
    }

    /// Number of retained masks.
    pub fn len(&self) -> usize {
        self.soft.len()
    }

    pub fn is_empty(&self) -> bool {
        self.soft.is_empty()
    }

    pub fn query_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.soft.iter().map(|m| m.query_id)
    }

    /// Hard label map as an `h x w` tensor of integer-valued floats.
    ///
    /// Labels above 2^24 do not survive the conversion exactly.
    pub fn hard_tensor(&self) -> Tensor {
        Tensor {
            shape: vec![self.height, self.width],
            data: self.hard.iter().map(|&l| l as f32).collect(),
        }
    }

    /// Soft masks as an `N x h x w` tensor, in soft-list order.
    pub fn soft_tensor(&self) -> Tensor {
        Tensor {
            shape: vec![self.soft.len(), self.height, self.width],
            data: self
                .soft
                .iter()
                .flat_map(|m| m.probs.iter().copied())
                .collect(),
        }
    }

    /// Replaces the soft set. The hard labeling is left stale until
    /// [`soft_to_hard`] is applied.
    pub fn with_soft(mut self, soft: Vec<SoftMask>) -> Self {
        self.soft = soft;
        self
    }
}

/// Bilinear resampling with half-pixel centers and border clamping.
///
/// Source coordinate for destination index `d` is
/// `s = (d + 0.5) * (src / dst) - 0.5`, clamped into the source grid.
pub fn downsample_masks(masks: &MaskStack, target_h: usize, target_w: usize) -> Result<MaskStack> {
    if target_h == 0 || target_w == 0 {
        return Err(Error::InvalidParameter(format!(
            "target size must be positive, got {target_h}x{target_w}"
        )));
    }
    let (src_h, src_w) = masks.grid();
    let rows = axis_taps(src_h, target_h);
    let cols = axis_taps(src_w, target_w);

    let mut out = Vec::with_capacity(masks.count() * target_h * target_w);
    for q in 0..masks.count() {
        let m = masks.mask(q);
        for &(y0, y1, fy) in &rows {
            for &(x0, x1, fx) in &cols {
                let at = |y: usize, x: usize| f64::from(m[y * src_w + x]);
                let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
                let bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
                let v = top * (1.0 - fy) + bottom * fy;
                out.push((v as f32).clamp(0.0, 1.0));
            }
        }
    }
    MaskStack::new(masks.count(), target_h, target_w, out)
}

/// Per destination index: the two source neighbors and the weight of the second.
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    let last = (src - 1) as f64;
    (0..dst)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let lo = s.floor();
            let frac = s - lo;
            let lo = lo as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, frac)
        })
        .collect()
}

/// Pixel-wise competitive filter over all queries of `masks`.
///
/// Query ids are the stack indices.
pub fn competitive_filter(masks: &MaskStack) -> ValidMasks {
    let (h, w) = masks.grid();
    let soft = (0..masks.count())
        .map(|q| SoftMask {
            query_id: q as u32,
            probs: masks.mask(q).to_vec(),
        })
        .collect();
    ValidMasks::from_soft(h, w, soft).expect("mask stack is non-empty and well-shaped")
}

/// Recomputes the hard labeling from the current soft set.
///
/// Soft masks that no longer win any pixel are dropped, so the soft list and
/// the area map keep the same id set.
pub fn soft_to_hard(valid: ValidMasks) -> Result<ValidMasks> {
    let (h, w) = valid.grid();
    ValidMasks::from_soft(h, w, valid.soft)
}
