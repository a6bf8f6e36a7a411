//! Committed fixture files and the code that regenerates them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sospde::model::{preset_document, ModelDocument};
use sospde::sdp::{sdpa_string, SdpProblem};
use sospde::search::{build_problem, CheckOptions};
use sospde::System;

/// Example models with the parameter values stored in their documents.
pub const EXAMPLES: [(&str, &[(&str, f64)]); 4] = [
    ("example1", &[("lambda", 4.5)]),
    ("example2", &[("lambda", 3.5)]),
    ("example3", &[("lambda", 0.5)]),
    ("example4", &[]),
];

pub fn example_document(name: &str) -> Result<ModelDocument> {
    let (_, params) = EXAMPLES.iter().find(|(n, _)| *n == name).with_context(|| format!("no example {}", name))?;
    let params: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    Ok(preset_document(name, &params)?)
}

fn trivial_problem() -> SdpProblem {
    let mut p = SdpProblem::with_blocks(&[("X", 2)], 0);
    p.push_row(vec![(0, 1.0)], 1.0, "x11");
    p
}

/// Every generated fixture as `(path relative to the fixture root, contents)`.
/// The hand-written audit files are not included.
pub fn generate() -> Result<Vec<(PathBuf, String)>> {
    let mut out = Vec::new();
    for (name, _) in EXAMPLES {
        out.push((PathBuf::from(format!("models/{}.json", name)), example_document(name)?.to_json()));
    }
    out.push((PathBuf::from("sdpa/trivial.dat-s"), sdpa_string(&trivial_problem())));
    let sys: System = example_document("example1")?.to_system()?;
    let p = build_problem(&sys, 1, &CheckOptions::default())?;
    out.push((PathBuf::from("sdpa/example1_d1.dat-s"), sdpa_string(&p)));
    Ok(out)
}

pub fn write_all(root: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (rel, text) in generate()? {
        let path = root.join(&rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        written.push(rel);
    }
    Ok(written)
}

/// Relative paths whose committed contents differ from a fresh generation.
pub fn stale(root: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for (rel, text) in generate()? {
        match std::fs::read(root.join(&rel)) {
            Ok(bytes) if bytes == text.as_bytes() => {}
            _ => out.push(rel),
        }
    }
    Ok(out)
}
