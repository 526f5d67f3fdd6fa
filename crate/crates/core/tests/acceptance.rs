//! Acceptance gate: runs every validation check against the embedded golden
//! data and prints one pass/fail line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use chancompat::validation::{Golden, Validator, CHECK_NAMES};

fn main() -> ExitCode {
    let validator = Validator::new(Golden::default(), 1);
    let mut failed = Vec::new();
    println!("\nrunning {} acceptance criteria", CHECK_NAMES.len());
    for (i, name) in CHECK_NAMES.iter().enumerate() {
        let start = Instant::now();
        let outcome = validator.run(name).expect("known check");
        println!(
            "criterion {:>2} {:<27} {} ({:.1}s) {}",
            i + 1,
            name,
            if outcome.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
        if !outcome.passed {
            failed.push(*name);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed\n", CHECK_NAMES.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria: {}\n", failed.join(", "));
        ExitCode::FAILURE
    }
}
