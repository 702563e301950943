//! Deterministic synthetic scenes: feature maps plus query probability masks
//! with a known ground-truth labeling.
//!
//! Randomness comes from splitmix64 only, and the transcendental functions
//! come from `libm`, so a given [`SceneSpec`] renders to the same bytes on
//! every platform.
//!
//! Draw order for one scene, all from a single generator seeded with
//! `spec.seed`:
//!
//! 1. per object, in order: peak, then the shape parameters
//!    (rect: height, width, top, left; blob: center y, center x, radius);
//! 2. per label (background first, then objects), per channel: signature;
//! 3. per pixel in raster order, per channel: noise.
//!
//! Query 0 is the background; object `k` is query `k + 1`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_io::{write_bundle, Bundle, FeatureMap, MaskStack, Tensor};

/// Amplitude of the uniform per-element feature noise.
pub const NOISE_AMPLITUDE: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// First splitmix64 output for state `x`.
pub fn splitmix64(x: u64) -> u64 {
    SplitMix64::new(x).next_u64()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Rect,
    Blob,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub n_objects: usize,
    pub object_kind: ObjectKind,
    /// Width of the Gaussian falloff outside each shape; 0 gives hard edges.
    pub softness: f64,
    /// Scale of the per-label feature signatures.
    pub feature_contrast: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            height: 16,
            width: 16,
            channels: 8,
            n_objects: 3,
            object_kind: ObjectKind::Blob,
            softness: 1.0,
            feature_contrast: 4.0,
        }
    }
}

/// Shape geometry in pixel units; pixel `(y, x)` is sampled at its center
/// `(y + 0.5, x + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Rect {
        top: f64,
        left: f64,
        bottom: f64,
        right: f64,
    },
    Disc {
        cy: f64,
        cx: f64,
        radius: f64,
    },
}

impl Shape {
    /// Euclidean distance from `(py, px)` to the shape; 0 inside.
    fn distance(&self, py: f64, px: f64) -> f64 {
        match *self {
            Shape::Rect {
                top,
                left,
                bottom,
                right,
            } => {
                let dy = (top - py).max(py - bottom).max(0.0);
                let dx = (left - px).max(px - right).max(0.0);
                libm::sqrt(dy * dy + dx * dx)
            }
            Shape::Disc { cy, cx, radius } => {
                let (dy, dx) = (py - cy, px - cx);
                (libm::sqrt(dy * dy + dx * dx) - radius).max(0.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacedObject {
    pub shape: Shape,
    /// Probability inside the shape, in `[0.9, 1]` for sampled objects.
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub features: FeatureMap,
    pub masks: MaskStack,
    /// Ground-truth query id per pixel, raster order.
    pub labels: Vec<u32>,
}

impl Scene {
    pub fn to_bundle(&self) -> Bundle {
        let (h, w) = self.features.grid();
        let mut bundle = Bundle::new();
        bundle
            .insert("features", self.features.to_tensor())
            .expect("fresh bundle");
        bundle
            .insert("masks", self.masks.to_tensor())
            .expect("fresh bundle");
        let labels = Tensor {
            shape: vec![h, w],
            data: self.labels.iter().map(|&l| l as f32).collect(),
        };
        bundle.insert("labels", labels).expect("fresh bundle");
        bundle
    }

    /// Number of distinct ground-truth labels.
    pub fn label_count(&self) -> usize {
        let mut seen: Vec<u32> = self.labels.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

fn validate(spec: &SceneSpec) -> Result<()> {
    if spec.height == 0 || spec.width == 0 || spec.channels == 0 {
        return Err(Error::InvalidParameter(format!(
            "scene dims must be positive, got {}x{}x{}",
            spec.height, spec.width, spec.channels
        )));
    }
    if spec.n_objects > spec.height * spec.width {
        return Err(Error::InvalidParameter(format!(
            "{} objects do not fit a {}x{} grid",
            spec.n_objects, spec.height, spec.width
        )));
    }
    if !(spec.softness >= 0.0 && spec.softness.is_finite()) {
        return Err(Error::InvalidParameter(
            "softness must be finite and >= 0".into(),
        ));
    }
    if !(spec.feature_contrast >= 0.0 && spec.feature_contrast.is_finite()) {
        return Err(Error::InvalidParameter(
            "feature_contrast must be finite and >= 0".into(),
        ));
    }
    Ok(())
}

fn sample_object(rng: &mut SplitMix64, spec: &SceneSpec) -> PlacedObject {
    let (h, w) = (spec.height as f64, spec.width as f64);
    let peak = 0.9 + 0.1 * rng.next_f64();
    let shape = match spec.object_kind {
        ObjectKind::Rect => {
            let rh = h * (0.15 + 0.35 * rng.next_f64());
            let rw = w * (0.15 + 0.35 * rng.next_f64());
            let top = rng.next_f64() * (h - rh);
            let left = rng.next_f64() * (w - rw);
            Shape::Rect {
                top,
                left,
                bottom: top + rh,
                right: left + rw,
            }
        }
        ObjectKind::Blob => {
            let cy = rng.next_f64() * h;
            let cx = rng.next_f64() * w;
            let radius = h.min(w) * (0.1 + 0.25 * rng.next_f64());
            Shape::Disc { cy, cx, radius }
        }
    };
    PlacedObject { shape, peak }
}

/// Samples object placements and renders the scene.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    validate(spec)?;
    let mut rng = SplitMix64::new(spec.seed);
    let objects: Vec<PlacedObject> = (0..spec.n_objects)
        .map(|_| sample_object(&mut rng, spec))
        .collect();
    render(spec, &objects, &mut rng)
}

/// Renders given objects; signatures and noise are drawn from `spec.seed`.
pub fn render_scene(spec: &SceneSpec, objects: &[PlacedObject]) -> Result<Scene> {
    validate(spec)?;
    render(spec, objects, &mut SplitMix64::new(spec.seed))
}

fn render(spec: &SceneSpec, objects: &[PlacedObject], rng: &mut SplitMix64) -> Result<Scene> {
    let (h, w, c) = (spec.height, spec.width, spec.channels);
    let plane = h * w;
    let n_queries = objects.len() + 1;

    let mut masks = vec![0.0f32; n_queries * plane];
    let mut labels = vec![0u32; plane];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let (py, px) = (y as f64 + 0.5, x as f64 + 0.5);
            let mut max_obj = 0.0f64;
            let mut best: Option<(f32, u32)> = None;
            for (k, obj) in objects.iter().enumerate() {
                let d = obj.shape.distance(py, px);
                let v = if d == 0.0 {
                    obj.peak
                } else if spec.softness > 0.0 {
                    obj.peak * libm::exp(-(d * d) / (2.0 * spec.softness * spec.softness))
                } else {
                    0.0
                };
                let v = v.clamp(0.0, 1.0);
                masks[(k + 1) * plane + i] = v as f32;
                max_obj = max_obj.max(v);
                if d == 0.0 {
                    let p = obj.peak.clamp(0.0, 1.0) as f32;
                    if best.is_none_or(|(bp, _)| p > bp) {
                        best = Some((p, k as u32 + 1));
                    }
                }
            }
            masks[i] = (1.0 - max_obj).clamp(0.0, 1.0) as f32;
            labels[i] = best.map_or(0, |(_, q)| q);
        }
    }

    let signatures: Vec<f64> = (0..n_queries * c)
        .map(|_| spec.feature_contrast * (2.0 * rng.next_f64() - 1.0))
        .collect();
    let mut features = Vec::with_capacity(plane * c);
    for &label in &labels {
        let sig = &signatures[label as usize * c..(label as usize + 1) * c];
        for &s in sig {
            let noise = NOISE_AMPLITUDE * (2.0 * rng.next_f64() - 1.0);
            features.push((s + noise) as f32);
        }
    }

    Ok(Scene {
        features: FeatureMap::new(h, w, c, features)?,
        masks: MaskStack::new(n_queries, h, w, masks)?,
        labels,
    })
}

/// How many objects each corpus scene gets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum ObjectCount {
    /// Always `template.n_objects`.
    Fixed,
    /// Binomial(`template.n_objects`, 1/2), drawn from a generator seeded
    /// with `splitmix64(scene_seed)`.
    Binomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub name: String,
    pub seed: u64,
    pub n_objects: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusIndex {
    pub version: u32,
    pub seed: u64,
    pub count: usize,
    pub object_count: ObjectCount,
    pub template: SceneSpec,
    pub scenes: Vec<CorpusEntry>,
}

pub const CORPUS_FILE: &str = "corpus.json";

impl CorpusIndex {
    pub fn spec_for(&self, entry: &CorpusEntry) -> SceneSpec {
        SceneSpec {
            seed: entry.seed,
            n_objects: entry.n_objects,
            ..self.template.clone()
        }
    }

    pub fn read(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join(CORPUS_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json { path, source })
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(CORPUS_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("index serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn scene_dir(&self, root: impl AsRef<Path>, entry: &CorpusEntry) -> PathBuf {
        root.as_ref().join(&entry.name)
    }
}

/// Scene `i` uses seed `splitmix64(seed ^ i)`.
pub fn plan_corpus(
    template: &SceneSpec,
    count: usize,
    seed: u64,
    object_count: ObjectCount,
) -> Result<CorpusIndex> {
    if count < 1 {
        return Err(Error::InvalidParameter(
            "corpus count must be at least 1".into(),
        ));
    }
    validate(template)?;
    let scenes = (0..count)
        .map(|i| {
            let scene_seed = splitmix64(seed ^ i as u64);
            let n_objects = match object_count {
                ObjectCount::Fixed => template.n_objects,
                ObjectCount::Binomial => {
                    let mut rng = SplitMix64::new(splitmix64(scene_seed));
                    (0..template.n_objects)
                        .filter(|_| rng.next_f64() < 0.5)
                        .count()
                }
            };
            CorpusEntry {
                name: format!("scene_{i:05}"),
                seed: scene_seed,
                n_objects,
            }
        })
        .collect();
    Ok(CorpusIndex {
        version: 1,
        seed,
        count,
        object_count,
        template: SceneSpec {
            seed: 0,
            ..template.clone()
        },
        scenes,
    })
}

/// Generates and writes every scene of a corpus plus its `corpus.json`.
pub fn generate_corpus(
    template: &SceneSpec,
    count: usize,
    seed: u64,
    object_count: ObjectCount,
    out: impl AsRef<Path>,
) -> Result<CorpusIndex> {
    let out = out.as_ref();
    let index = plan_corpus(template, count, seed, object_count)?;
    for entry in &index.scenes {
        let scene = generate_scene(&index.spec_for(entry))?;
        write_bundle(index.scene_dir(out, entry), &scene.to_bundle())?;
    }
    index.write(out)?;
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masks::competitive_filter;

    #[test]
    fn splitmix_reference_values() {
        // Reference outputs for seed 1234567 from the published C implementation.
        let mut rng = SplitMix64::new(1234567);
        let expected = [
            6457827717110365317u64,
            3203168211198807973,
            9817491932198370423,
            4593380528125082431,
            16408922859458223821,
        ];
        for e in expected {
            assert_eq!(rng.next_u64(), e);
        }
    }

    #[test]
    fn no_objects_is_all_background() {
        let spec = SceneSpec {
            n_objects: 0,
            ..SceneSpec::default()
        };
        let scene = generate_scene(&spec).unwrap();
        assert_eq!(scene.masks.count(), 1);
        assert!(scene.masks.data().iter().all(|&v| v == 1.0));
        let valid = competitive_filter(&scene.masks);
        assert!(valid.hard().iter().all(|&l| l == 0));
    }

    #[test]
    fn full_cover_rect_hides_background() {
        let spec = SceneSpec {
            height: 6,
            width: 5,
            softness: 0.0,
            ..SceneSpec::default()
        };
        let obj = PlacedObject {
            shape: Shape::Rect {
                top: 0.0,
                left: 0.0,
                bottom: 6.0,
                right: 5.0,
            },
            peak: 0.95,
        };
        let scene = render_scene(&spec, &[obj]).unwrap();
        let valid = competitive_filter(&scene.masks);
        assert_eq!(valid.query_ids().collect::<Vec<_>>(), [1]);
        let seq = crate::merge::merge_hard(&scene.features, &valid).unwrap();
        assert_eq!(seq.len(), 1);
    }

    #[test]
    fn deterministic() {
        let spec = SceneSpec {
            seed: 42,
            height: 8,
            width: 8,
            n_objects: 3,
            ..SceneSpec::default()
        };
        assert_eq!(
            generate_scene(&spec).unwrap(),
            generate_scene(&spec).unwrap()
        );
    }

    #[test]
    fn hard_edges_recover_ground_truth() {
        for seed in 0..50 {
            for kind in [ObjectKind::Rect, ObjectKind::Blob] {
                let spec = SceneSpec {
                    seed,
                    height: 12,
                    width: 10,
                    n_objects: 4,
                    object_kind: kind,
                    softness: 0.0,
                    feature_contrast: 100.0,
                    ..SceneSpec::default()
                };
                let scene = generate_scene(&spec).unwrap();
                let valid = competitive_filter(&scene.masks);
                assert_eq!(valid.hard(), &scene.labels[..], "seed {seed} {kind:?}");
            }
        }
    }

    #[test]
    fn masks_stay_in_range() {
        let spec = SceneSpec {
            seed: 9,
            softness: 2.5,
            n_objects: 6,
            ..SceneSpec::default()
        };
        let scene = generate_scene(&spec).unwrap();
        assert!(scene.masks.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn too_many_objects() {
        let spec = SceneSpec {
            height: 2,
            width: 2,
            n_objects: 5,
            ..SceneSpec::default()
        };
        assert!(generate_scene(&spec).is_err());
    }

    #[test]
    fn corpus_seeds_follow_mixing_rule() {
        let index = plan_corpus(&SceneSpec::default(), 3, 77, ObjectCount::Fixed).unwrap();
        for (i, e) in index.scenes.iter().enumerate() {
            assert_eq!(e.seed, splitmix64(77 ^ i as u64));
        }
        assert!(plan_corpus(&SceneSpec::default(), 0, 77, ObjectCount::Fixed).is_err());
    }

    #[test]
    fn single_scene_corpus_matches_direct_generation() {
        let dir = tempfile::tempdir().unwrap();
        let template = SceneSpec::default();
        let index = generate_corpus(&template, 1, 5, ObjectCount::Fixed, dir.path()).unwrap();
        let direct = generate_scene(&SceneSpec {
            seed: splitmix64(5),
            ..template
        })
        .unwrap();
        let read = crate::tensor_io::read_bundle(dir.path().join(&index.scenes[0].name)).unwrap();
        assert_eq!(read, direct.to_bundle());
        assert_eq!(CorpusIndex::read(dir.path()).unwrap(), index);
    }
}
