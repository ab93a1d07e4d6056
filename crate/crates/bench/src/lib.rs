//! Fixture loading shared by the benchmarks.

use std::path::PathBuf;

use modsynth_core::{load_catalog, Catalog, Request};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Loads `fixtures/<name>` with meshes resolved against it.
pub fn catalog(name: &str) -> Catalog {
    let dir = fixtures().join(name);
    load_catalog(&[&dir]).expect("fixture catalog loads").with_root(dir)
}

pub fn request(file: &str) -> Request {
    let text = std::fs::read_to_string(fixtures().join("requests").join(file)).expect("fixture request exists");
    serde_json::from_str(&text).expect("fixture request parses")
}
