//! WebAssembly bindings for the `www/` demo page.
//!
//! Three operations are exported: generate a synthetic scene, merge it with
//! one of the pipeline modes, and estimate decoder cost for a token count.
//! The logic lives in plain Rust functions so it can be tested natively.

use objtoken::analytics::{reduction_report, CostPoint, ModelCostConfig};
use objtoken::pipeline::{self, Mode, PipelineOptions};
use objtoken::synth::{generate_scene, ObjectKind, Scene, SceneSpec};
use objtoken::{Strategy, TokenKind};
use wasm_bindgen::prelude::*;

/// Distinct, stable colour for a query id (golden-angle hue walk).
pub fn color(id: u32) -> [u8; 3] {
    if id == 0 {
        return [60, 60, 70];
    }
    let hue = (id as f64 * 137.507_764) % 360.0;
    hsv(hue, 0.65, 0.95)
}

fn hsv(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * s;
    let x = c * (1.0 - ((h / 60.0) % 2.0 - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match (h / 60.0) as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r, g, b].map(|u| ((u + m) * 255.0).round() as u8)
}

fn pale(rgb: [u8; 3]) -> [u8; 3] {
    rgb.map(|u| ((u as u16 + 255) / 2) as u8)
}

fn rgba(pixels: impl Iterator<Item = [u8; 3]>) -> Vec<u8> {
    pixels.flat_map(|[r, g, b]| [r, g, b, 255]).collect()
}

pub fn make_scene(
    seed: u32,
    size: usize,
    objects: usize,
    softness: f64,
    rect: bool,
) -> Result<Scene, String> {
    let spec = SceneSpec {
        seed: seed as u64,
        height: size,
        width: size,
        n_objects: objects,
        object_kind: if rect {
            ObjectKind::Rect
        } else {
            ObjectKind::Blob
        },
        softness,
        ..SceneSpec::default()
    };
    generate_scene(&spec).map_err(|e| e.to_string())
}

/// Result of one merge, flattened for the page.
#[derive(Debug, Clone)]
pub struct MergeResult {
    pub token_count: usize,
    pub valid_masks: usize,
    pub overshoot: bool,
    /// Per-pixel colour of the token each pixel contributes to.
    pub rgba: Vec<u8>,
    pub centroids: Vec<f64>,
    pub summary: String,
}

pub fn merge_scene(
    scene: &Scene,
    mode: &str,
    n_target: usize,
    small_first: bool,
) -> Result<MergeResult, String> {
    let mode: Mode = mode.parse().map_err(|e: objtoken::Error| e.to_string())?;
    let opts = match mode {
        Mode::AdaptiveSoft => PipelineOptions::adaptive_soft(),
        Mode::AdaptiveHard => PipelineOptions::adaptive_hard(),
        Mode::FixedRate => {
            let s = if small_first {
                Strategy::SmallFirst
            } else {
                Strategy::LargeFirst
            };
            PipelineOptions::fixed_rate(n_target, s)
        }
    };
    let out = pipeline::run(&scene.features, &scene.masks, &opts).map_err(|e| e.to_string())?;
    let hard = out.valid.hard();

    let pixels: Vec<[u8; 3]> = match mode {
        Mode::AdaptiveHard => hard.iter().map(|&q| color(q)).collect(),
        Mode::AdaptiveSoft => {
            let soft = out.valid.soft();
            (0..hard.len())
                .map(|i| {
                    let mut acc = [0.0f64; 3];
                    let mut total = 0.0;
                    for m in soft {
                        let p = m.probs[i] as f64;
                        total += p;
                        for (a, c) in acc.iter_mut().zip(color(m.query_id)) {
                            *a += p * c as f64;
                        }
                    }
                    acc.map(|a| {
                        if total > 0.0 {
                            (a / total).round() as u8
                        } else {
                            0
                        }
                    })
                })
                .collect()
        }
        Mode::FixedRate => {
            let mut merged = vec![false; hard.len()];
            if let Some(fr) = &out.meta.fixed_rate {
                for g in &fr.groups {
                    for &i in &g.members {
                        merged[i] = g.kind != TokenKind::Passthrough;
                    }
                }
            }
            hard.iter()
                .zip(&merged)
                .map(|(&q, &m)| if m { color(q) } else { pale(color(q)) })
                .collect()
        }
    };

    Ok(MergeResult {
        token_count: out.summary.token_count,
        valid_masks: out.summary.valid_masks,
        overshoot: out.summary.overshoot,
        rgba: rgba(pixels.into_iter()),
        centroids: out.sequence.centroids().collect(),
        summary: serde_json::to_string(&out.summary).map_err(|e| e.to_string())?,
    })
}

fn preset(name: &str) -> Result<ModelCostConfig, String> {
    match name {
        "clip-7b" => Ok(ModelCostConfig::clip_7b()),
        "segmentation-7b" => Ok(ModelCostConfig::segmentation_7b()),
        other => Err(format!("unknown preset `{other}`")),
    }
}

/// JSON with FLOPs and KV-cache size for `tokens`, plus ratios against a
/// CLIP baseline of `baseline_tokens`.
pub fn estimate_json(
    tokens: f64,
    preset_name: &str,
    baseline_tokens: f64,
) -> Result<String, String> {
    let cfg = preset(preset_name)?;
    let base = ModelCostConfig::clip_7b();
    let point = CostPoint::estimate(tokens, &cfg);
    let report =
        reduction_report((baseline_tokens, &base), (tokens, &cfg)).map_err(|e| e.to_string())?;
    let v = serde_json::json!({
        "tokens": tokens,
        "flops": point.flops,
        "kv_cache_mib": point.kv_bytes / (1024.0 * 1024.0),
        "baseline_flops": report.baseline.flops,
        "baseline_kv_cache_mib": report.baseline.kv_bytes / (1024.0 * 1024.0),
        "flops_ratio": report.flops_ratio,
        "kv_ratio": report.kv_ratio,
    });
    Ok(v.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    scene: Scene,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(
        seed: u32,
        size: usize,
        objects: usize,
        softness: f64,
        rect: bool,
    ) -> Result<Demo, JsError> {
        make_scene(seed, size, objects, softness, rect)
            .map(|scene| Demo { scene })
            .map_err(|e| JsError::new(&e))
    }

    pub fn size(&self) -> usize {
        self.scene.features.height()
    }

    /// Ground-truth object labels as RGBA.
    pub fn labels_rgba(&self) -> Vec<u8> {
        rgba(self.scene.labels.iter().map(|&l| color(l)))
    }

    pub fn merge(
        &self,
        mode: &str,
        n_target: usize,
        small_first: bool,
    ) -> Result<MergeView, JsError> {
        merge_scene(&self.scene, mode, n_target, small_first)
            .map(|inner| MergeView { inner })
            .map_err(|e| JsError::new(&e))
    }
}

#[wasm_bindgen]
pub struct MergeView {
    inner: MergeResult,
}

#[wasm_bindgen]
impl MergeView {
    pub fn token_count(&self) -> usize {
        self.inner.token_count
    }

    pub fn valid_masks(&self) -> usize {
        self.inner.valid_masks
    }

    pub fn overshoot(&self) -> bool {
        self.inner.overshoot
    }

    pub fn rgba(&self) -> Vec<u8> {
        self.inner.rgba.clone()
    }

    pub fn centroids(&self) -> Vec<f64> {
        self.inner.centroids.clone()
    }

    pub fn summary(&self) -> String {
        self.inner.summary.clone()
    }
}

#[wasm_bindgen]
pub fn estimate(tokens: f64, preset: &str, baseline_tokens: f64) -> Result<String, JsError> {
    estimate_json(tokens, preset, baseline_tokens).map_err(|e| JsError::new(&e))
}
