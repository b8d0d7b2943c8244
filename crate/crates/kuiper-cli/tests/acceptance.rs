//! Runs the ten acceptance criteria in order and prints one line each.
//!
//! The binary succeeds when every criterion has its documented outcome:
//! criteria listed in `EXPECTED_FAILURES` are known to fail at desk scale or
//! against the published table, all others must pass.

use std::path::PathBuf;

use kuiper_cli::acceptance::{self, EXPECTED_FAILURES};

fn main() {
    let cache = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("frames");
    let results = acceptance::all(Some(&cache)).expect("acceptance criteria ran");
    println!();
    for c in &results {
        println!("{c}");
    }
    let passed = results.iter().filter(|c| c.pass).count();
    println!("acceptance: {passed}/{} pass; expected failures {EXPECTED_FAILURES:?}", results.len());
    let surprises: Vec<u8> = results.iter().filter(|c| c.pass != c.expected_pass()).map(|c| c.id).collect();
    assert_eq!(results.len(), 10);
    assert!(surprises.is_empty(), "criteria with an undocumented outcome: {surprises:?}");
}
