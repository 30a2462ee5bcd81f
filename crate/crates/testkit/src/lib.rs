//! Test support: exhaustive oracles, random problem generators and readers
//! for the fixture formats.

pub mod brute;
pub mod gen;
pub mod gprolog;
pub mod model;
pub mod modelgen;

use std::path::PathBuf;

/// Absolute path of a file under the workspace `fixtures/` directory.
pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    let p = fixture_path(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("cannot read {}: {e}", p.display()))
}
