//! End-to-end acceptance gate. Runs every criterion in
//! `manycover::acceptance` and prints one line per criterion so a failing
//! run shows exactly which guarantees broke and by how much.

use manycover::acceptance::run_all;

#[test]
fn acceptance_suite() {
    let results = run_all();
    let mut failed = Vec::new();
    for r in &results {
        println!("[{}] {} — {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.details);
        if !r.passed {
            failed.push(r.name);
        }
    }
    println!("{}/{} criteria passed", results.len() - failed.len(), results.len());
    assert!(failed.is_empty(), "failed criteria: {}", failed.join(", "));
}
