//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are never captured.

use std::process::ExitCode;

use weakhilbert::acceptance::{self, CRITERIA};
use weakhilbert::Caps;

const SEED: u64 = 7;

fn main() -> ExitCode {
    let caps = Caps::default();
    let mut failed = Vec::new();
    println!("acceptance suite, seed {SEED}");
    for id in 1..=CRITERIA {
        let r = acceptance::run(id, SEED, &caps);
        println!("{}", r.line());
        for b in &r.bundles {
            println!("  bundle: {}", serde_json::to_string(b).unwrap());
        }
        if !r.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: {CRITERIA}/{CRITERIA} criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
