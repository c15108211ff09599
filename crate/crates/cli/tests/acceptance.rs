//! Acceptance criteria 1-9. Criteria 1-8 run in-process one after another so their
//! runtime budgets are not shared with other tests; criterion 9 runs the binary.

use std::process::Command;
use std::time::Instant;

use pfa_rd_geo::selftest::{run_criterion, SelftestOptions, CRITERIA};

#[test]
fn acceptance() {
    let opts = SelftestOptions::default();
    let mut failed = Vec::new();
    for id in CRITERIA {
        let outcome = run_criterion(id, &opts);
        println!("{outcome}");
        if !outcome.passed {
            failed.push(id);
        }
    }

    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_pfa-rd-geo"))
        .arg("selftest")
        .output()
        .expect("selftest runs");
    let secs = start.elapsed().as_secs_f64();
    let ok = out.status.success() && secs < 60.0;
    println!(
        "criterion 9 {}: selftest end to end (exit {:?}, {secs:.2} s)",
        if ok { "PASS" } else { "FAIL" },
        out.status.code()
    );
    if !ok {
        print!("{}", String::from_utf8_lossy(&out.stdout));
        failed.push(9);
    }

    let perturbed = Command::new(env!("CARGO_BIN_EXE_pfa-rd-geo"))
        .args(["selftest", "--perturb-a21", "1e-2", "--criteria", "1,2"])
        .output()
        .expect("selftest runs");
    assert!(
        !perturbed.status.success(),
        "a perturbed a21 must fail selftest"
    );

    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
