use anyhow::{Context, Result};
use objtoken::synth::{generate_scene, plan_corpus, ObjectCount, ObjectKind, SceneSpec};
use objtoken::write_bundle;
use rayon::prelude::*;
use serde::Serialize;

use super::{print_line, thread_pool};
use crate::{KindArg, SynthArgs};

#[derive(Serialize)]
struct SynthSummary<'a> {
    out: String,
    count: usize,
    seed: u64,
    scenes: Vec<&'a str>,
    objects: Vec<usize>,
}

pub fn run(args: SynthArgs) -> Result<()> {
    let template = SceneSpec {
        seed: 0,
        height: args.height,
        width: args.width,
        channels: args.channels,
        n_objects: args.objects,
        object_kind: match args.kind {
            KindArg::Rect => ObjectKind::Rect,
            KindArg::Blob => ObjectKind::Blob,
        },
        softness: args.softness,
        feature_contrast: args.contrast,
    };
    let object_count = if args.binomial {
        ObjectCount::Binomial
    } else {
        ObjectCount::Fixed
    };
    let index = plan_corpus(&template, args.count, args.seed, object_count)?;

    let pool = thread_pool(args.jobs)?;
    pool.install(|| {
        index.scenes.par_iter().try_for_each(|entry| -> Result<()> {
            let scene = generate_scene(&index.spec_for(entry))
                .with_context(|| format!("generating {}", entry.name))?;
            let dir = index.scene_dir(&args.output, entry);
            write_bundle(&dir, &scene.to_bundle())
                .with_context(|| format!("writing {}", dir.display()))?;
            Ok(())
        })
    })?;
    index.write(&args.output).context("writing corpus index")?;

    print_line(&SynthSummary {
        out: args.output.display().to_string(),
        count: index.count,
        seed: index.seed,
        scenes: index.scenes.iter().map(|e| e.name.as_str()).collect(),
        objects: index.scenes.iter().map(|e| e.n_objects).collect(),
    })
}
