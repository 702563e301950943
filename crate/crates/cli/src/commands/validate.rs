use anyhow::{Context, Result};
use objtoken::read_bundle;
use serde::Serialize;

use super::print_line;
use crate::ValidateArgs;

#[derive(Serialize)]
struct TensorReport {
    name: String,
    shape: Vec<usize>,
    role: &'static str,
}

#[derive(Serialize)]
struct Report {
    path: String,
    ok: bool,
    tensors: Vec<TensorReport>,
}

/// Reads every payload, then applies the typed checks to the well-known
/// tensor names (`features`, `masks`).
pub fn run(args: ValidateArgs) -> Result<()> {
    let bundle =
        read_bundle(&args.input).with_context(|| format!("validating {}", args.input.display()))?;
    let mut tensors = Vec::new();
    for (name, t) in bundle.iter() {
        let role = match name {
            "features" => {
                bundle.feature_map(name)?;
                "feature_map"
            }
            "masks" => {
                bundle.mask_stack(name)?;
                "mask_stack"
            }
            _ => "tensor",
        };
        tensors.push(TensorReport {
            name: name.to_owned(),
            shape: t.shape.clone(),
            role,
        });
    }
    if let (Some(f), Some(m)) = (bundle.get("features"), bundle.get("masks")) {
        if f.shape.len() == 3 && m.shape.len() == 3 && f.shape[..2] != m.shape[1..] {
            eprintln!(
                "note: masks grid {:?} differs from features grid {:?}; the pipeline will resample",
                &m.shape[1..],
                &f.shape[..2]
            );
        }
    }
    print_line(&Report {
        path: args.input.display().to_string(),
        ok: true,
        tensors,
    })
}
