//! Prints one pass/fail line per acceptance criterion and fails if any fails.
//!
//! Runs the full level by default; set `OPPENHEIM_ACCEPTANCE=fast` for the
//! quick subset.

use oppenheim_runner::acceptance::{render_line, run_criterion, CRITERIA};

fn main() {
    let fast = std::env::var("OPPENHEIM_ACCEPTANCE").is_ok_and(|v| v == "fast");
    let mut failed = Vec::new();
    println!("\nacceptance ({} level, seed 0, 8 shards)", if fast { "fast" } else { "full" });
    for &(id, _, in_fast, _) in CRITERIA {
        if fast && !in_fast {
            continue;
        }
        let r = run_criterion(id, 0, 8).expect("criterion exists");
        println!("{}", render_line(&r));
        if !r.passed {
            failed.push(r.id);
        }
    }
    if failed.is_empty() {
        println!("all criteria passed");
    } else {
        println!("failed criteria: {}", failed.join(", "));
        std::process::exit(1);
    }
}
