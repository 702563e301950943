use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use objtoken::synth::{render_scene, ObjectKind, PlacedObject, SceneSpec, Shape};
use objtoken::{write_bundle, Bundle, Tensor};
use serde_json::Value;
use tempfile::TempDir;

fn objtoken(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_objtoken"))
        .args(args)
        .output()
        .expect("spawn objtoken")
}

fn ok_lines(out: &Output) -> Vec<Value> {
    assert!(
        out.status.success(),
        "status {:?}, stderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn rect(top: f64, left: f64, bottom: f64, right: f64) -> PlacedObject {
    PlacedObject {
        shape: Shape::Rect {
            top,
            left,
            bottom,
            right,
        },
        peak: 0.95,
    }
}

/// 12x12 scene with three hard-edged, well separated rectangles plus background.
fn three_object_bundle(dir: &Path) {
    let spec = SceneSpec {
        seed: 5,
        height: 12,
        width: 12,
        channels: 4,
        n_objects: 3,
        object_kind: ObjectKind::Rect,
        softness: 0.0,
        feature_contrast: 4.0,
    };
    let objects = [
        rect(0.0, 0.0, 4.0, 4.0),
        rect(0.0, 8.0, 4.0, 12.0),
        rect(8.0, 0.0, 12.0, 5.0),
    ];
    let scene = render_scene(&spec, &objects).unwrap();
    write_bundle(dir, &scene.to_bundle()).unwrap();
}

fn files_under(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn adaptive_hard_three_objects_gives_four_tokens() {
    let tmp = TempDir::new().unwrap();
    let scene = tmp.path().join("scene");
    three_object_bundle(&scene);
    let out = tmp.path().join("out");
    let lines = ok_lines(&objtoken(&[
        "pipeline",
        "--in",
        p(&scene),
        "--out",
        p(&out),
        "--mode",
        "adaptive-hard",
    ]));
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0]["token_count"], 4);
    assert_eq!(lines[0]["valid_masks"], 4);
    assert_eq!(lines[0]["overshoot"], false);

    let manifest: Value =
        serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(
        manifest["tensors"]["tokens"]["shape"],
        serde_json::json!([4, 4])
    );
    let meta: Value = serde_json::from_slice(&fs::read(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["count"], 4);
    assert!(meta["kinds"]
        .as_array()
        .unwrap()
        .iter()
        .all(|k| k == "hard"));
}

#[test]
fn fixed_rate_at_full_resolution_is_passthrough() {
    let tmp = TempDir::new().unwrap();
    let scene = tmp.path().join("scene");
    three_object_bundle(&scene);
    let out = tmp.path().join("out");
    let lines = ok_lines(&objtoken(&[
        "pipeline",
        "--in",
        p(&scene),
        "--out",
        p(&out),
        "--mode",
        "fixed-rate",
        "--n-target",
        "144",
    ]));
    assert_eq!(lines[0]["token_count"], 144);
    assert_eq!(lines[0]["consumed_budget"], 0);
    let meta: Value = serde_json::from_slice(&fs::read(out.join("meta.json")).unwrap()).unwrap();
    assert!(meta["kinds"]
        .as_array()
        .unwrap()
        .iter()
        .all(|k| k == "passthrough"));
}

#[test]
fn fixed_rate_below_mask_count_overshoots() {
    let tmp = TempDir::new().unwrap();
    let scene = tmp.path().join("scene");
    three_object_bundle(&scene);
    let out = tmp.path().join("out");
    let lines = ok_lines(&objtoken(&[
        "pipeline",
        "--in",
        p(&scene),
        "--out",
        p(&out),
        "--mode",
        "fixed-rate",
        "--n-target",
        "2",
    ]));
    assert_eq!(lines[0]["token_count"], 4);
    assert_eq!(lines[0]["overshoot"], true);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = TempDir::new().unwrap();
    let scene = tmp.path().join("scene");
    three_object_bundle(&scene);
    let cfg = tmp.path().join("cfg.json");
    let body = serde_json::json!({
        "mode": "fixed_rate",
        "n_target": 10,
        "strategy": "small_first",
        "input": scene,
        "output": tmp.path().join("out"),
    });
    fs::write(&cfg, body.to_string()).unwrap();

    let lines = ok_lines(&objtoken(&["pipeline", "--config", p(&cfg)]));
    assert_eq!(lines[0]["token_count"], 10);
    assert_eq!(lines[0]["strategy"], "small_first");

    let lines = ok_lines(&objtoken(&[
        "pipeline",
        "--config",
        p(&cfg),
        "--n-target",
        "20",
    ]));
    assert_eq!(lines[0]["token_count"], 20);
}

#[test]
fn exit_codes_separate_bad_input_from_io() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");

    let missing = tmp.path().join("nowhere");
    let r = objtoken(&[
        "pipeline",
        "--in",
        p(&missing),
        "--out",
        p(&out),
        "--mode",
        "adaptive-soft",
    ]);
    assert_eq!(r.status.code(), Some(3));

    let scene = tmp.path().join("scene");
    three_object_bundle(&scene);
    let r = objtoken(&[
        "pipeline",
        "--in",
        p(&scene),
        "--out",
        p(&out),
        "--mode",
        "fixed-rate",
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("n_target"));

    // out-of-range mask probability
    let bad = tmp.path().join("bad");
    let mut b = Bundle::new();
    b.insert(
        "features",
        Tensor::new(vec![1, 2, 1], vec![0.0, 1.0]).unwrap(),
    )
    .unwrap();
    b.insert("masks", Tensor::new(vec![1, 1, 2], vec![1.5, 0.2]).unwrap())
        .unwrap();
    write_bundle(&bad, &b).unwrap();
    let r = objtoken(&[
        "pipeline",
        "--in",
        p(&bad),
        "--out",
        p(&out),
        "--mode",
        "adaptive-hard",
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("masks"));

    // payload shorter than the manifest shape
    let payload = scene.join("features.bin");
    let bytes = fs::read(&payload).unwrap();
    fs::write(&payload, &bytes[..bytes.len() - 4]).unwrap();
    let r = objtoken(&["validate", "--in", p(&scene)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("features"));
}

#[test]
fn corpus_runs_are_byte_identical_across_reruns_and_jobs() {
    let tmp = TempDir::new().unwrap();
    let corpus = tmp.path().join("corpus");
    ok_lines(&objtoken(&[
        "synth",
        "--out",
        p(&corpus),
        "--count",
        "6",
        "--seed",
        "11",
        "--objects",
        "5",
        "--binomial",
        "--jobs",
        "3",
    ]));
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let first = objtoken(&[
        "pipeline",
        "--in",
        p(&corpus),
        "--out",
        p(&a),
        "--mode",
        "adaptive-soft",
        "--emit",
        "tokens,stats,svg",
        "--jobs",
        "1",
    ]);
    let second = objtoken(&[
        "pipeline",
        "--in",
        p(&corpus),
        "--out",
        p(&b),
        "--mode",
        "adaptive-soft",
        "--emit",
        "tokens,stats,svg",
        "--jobs",
        "4",
    ]);
    assert_eq!(ok_lines(&first).len(), 6);
    assert_eq!(first.stdout, second.stdout);
    let fa = files_under(&a);
    assert_eq!(fa, files_under(&b));
    for f in [
        "stats.json",
        "stats.csv",
        "histogram.csv",
        "histogram.svg",
        "scene_00005/tokens.bin",
    ] {
        assert!(fa.contains_key(f), "missing {f}");
    }

    let again = tmp.path().join("corpus2");
    ok_lines(&objtoken(&[
        "synth",
        "--out",
        p(&again),
        "--count",
        "6",
        "--seed",
        "11",
        "--objects",
        "5",
        "--binomial",
    ]));
    assert_eq!(files_under(&corpus), files_under(&again));
}

#[test]
fn stats_reads_summary_lines() {
    let tmp = TempDir::new().unwrap();
    let jsonl = tmp.path().join("runs.jsonl");
    fs::write(
        &jsonl,
        "{\"token_count\":3}\n{\"token_count\":5}\n\n{\"token_count\":4}\n{\"token_count\":12}\n",
    )
    .unwrap();
    let lines = ok_lines(&objtoken(&["stats", "--in", p(&jsonl), "--bin-width", "5"]));
    let s = &lines[0]["stats"];
    assert_eq!(s["count"], 4);
    assert_eq!(s["min"], 3);
    assert_eq!(s["max"], 12);
    assert_eq!(s["mean"], 6.0);
    assert_eq!(s["median"], 4);
    let hist = lines[0]["histogram"].as_array().unwrap();
    let freq: Vec<u64> = hist
        .iter()
        .map(|b| b["frequency"].as_u64().unwrap())
        .collect();
    assert_eq!(freq, [2, 1, 1]);
}

#[test]
fn estimate_reports_baseline_kv_cache() {
    // 2 * 32 layers * 2880 tokens * 4096 dims * 2 bytes = 1440 MiB
    let lines = ok_lines(&objtoken(&[
        "estimate", "--tokens", "2880", "--preset", "clip-7b",
    ]));
    assert_eq!(lines[0]["compressed"]["kv_cache_mib"], 1440.0);
    assert_eq!(lines[0]["compressed"]["kv_cache_bytes"], 1_509_949_440.0);
}
