//! The release gate. One line per criterion; run with `-- --nocapture` to
//! see the values. Thresholds live next to each criterion in the library
//! and are pinned: a red line here means the build is not releasable.

#[test]
fn acceptance_suite() {
    let results = regsde_cli::acceptance::run_all(20260826).expect("suite must run");
    assert_eq!(results.len(), 14);
    let mut failed = Vec::new();
    for r in &results {
        println!("{}", r.line());
        if !r.pass {
            failed.push(r.line());
        }
    }
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
