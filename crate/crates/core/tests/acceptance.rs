//! The acceptance suite as a test target: one criterion per test-visible
//! line, each at its stated tolerance.

use hyperq_core::accept;

#[test]
fn acceptance_criteria() {
    let results = accept::run_all();
    let mut all = true;
    for r in &results {
        println!(
            "criterion {:>2} [{}] {:>7.2}s  {} — {}",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            r.seconds,
            r.name,
            r.detail
        );
        all &= r.passed;
    }
    assert!(all, "acceptance criteria failed");
}
