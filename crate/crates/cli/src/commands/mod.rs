pub mod estimate;
pub mod pipeline;
pub mod stats;
pub mod synth;
pub mod validate;

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

const EXIT_VALIDATION: u8 = 2;
const EXIT_IO: u8 = 3;

/// 3 if any cause in the chain is a filesystem failure, otherwise 2.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|cause| {
        cause.downcast_ref::<std::io::Error>().is_some()
            || cause
                .downcast_ref::<objtoken::Error>()
                .is_some_and(objtoken::Error::is_io)
    });
    if io {
        EXIT_IO
    } else {
        EXIT_VALIDATION
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn print_line(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

pub fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()?)
}
