//! Acceptance suite: every criterion at its stated tolerance, one line each.
//!
//! Runs without the libtest harness so the report lines are always printed.
//! `SPINLOC_ACCEPTANCE=tree,sphere` restricts the run to named suites.

use spinloc::verify::{run_suite, DEFAULT_SEED, SUITES};

fn main() {
    let filter = std::env::var("SPINLOC_ACCEPTANCE").ok();
    let wanted: Vec<&str> = match &filter {
        Some(list) => list.split(',').map(str::trim).collect(),
        None => SUITES[..11].to_vec(),
    };
    let mut failed = 0;
    for name in wanted {
        for report in run_suite(name, DEFAULT_SEED).expect("known suite") {
            println!("{report}");
            if !report.passed {
                failed += 1;
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
