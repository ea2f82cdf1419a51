//! Runs every acceptance criterion and prints one verdict line each.
//!
//! `cargo test --test acceptance -- 3 5` runs a subset.

use std::process::ExitCode;

use pilotwave::acceptance::{run, CRITERIA};

const SEED: u64 = 20_240_601;

fn main() -> ExitCode {
    let picked: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let ids: Vec<usize> = if picked.is_empty() {
        (1..=CRITERIA).collect()
    } else {
        picked
    };
    let mut failed = Vec::new();
    for id in ids {
        let c = run(id, SEED);
        println!("{c}");
        if !c.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
