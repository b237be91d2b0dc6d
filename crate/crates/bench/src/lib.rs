//! Shared fixtures for the benchmarks.

use std::fs::File;
use std::path::Path;

use casgen_core::{load_cleveland, DataTable};

/// The Cleveland table shipped in the workspace `data/` directory.
pub fn cleveland() -> DataTable {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/processed.cleveland.data");
    let file = File::open(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    load_cleveland(file).expect("Cleveland data loads").table
}
