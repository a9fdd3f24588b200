//! Runs every acceptance criterion and prints one line per criterion.

use fbnl_core::verify::{criterion_count, run_criterion};

#[test]
fn acceptance_criteria() {
    let mut failed = Vec::new();
    for id in 1..=criterion_count() {
        let rep = run_criterion(id).unwrap();
        println!("{}", rep.summary());
        if !rep.passed {
            println!("      tolerance: {}", rep.tolerance);
            for (k, v) in &rep.measured {
                println!("      {k} = {v:.10e}");
            }
        }
        for note in &rep.notes {
            println!("      {note}");
        }
        if !rep.passed {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
