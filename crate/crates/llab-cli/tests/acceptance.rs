//! Acceptance suite: one test per verification criterion, each printing a
//! single pass/fail line and enforcing its runtime budget. A shared lock
//! serializes the tests so the budgets are measured one at a time.

use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use llab_cli::verify::{self, CriterionResult};
use llab_core::Caps;

static LOCK: Mutex<()> = Mutex::new(());

const SEED: u64 = 7;

fn check(
    run: fn(u64, &Caps) -> anyhow::Result<CriterionResult>,
    budget: Duration,
) -> CriterionResult {
    let _guard = LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let caps = Caps::default();
    let start = Instant::now();
    let result = run(SEED, &caps).expect("criterion ran to completion");
    let elapsed = start.elapsed();
    let status = if result.pass { "PASS" } else { "FAIL" };
    println!("criterion {} [{status}] {}: {}", result.index, result.name, result.detail);
    assert!(result.pass, "criterion {} failed: {}", result.index, result.detail);
    assert!(
        elapsed <= budget,
        "criterion {} took {elapsed:?}, budget {budget:?}",
        result.index
    );
    result
}

#[test]
fn criterion_01_dimension_oracle_equivalence() {
    check(verify::criterion1, Duration::from_secs(60));
}

#[test]
fn criterion_02_soa_mistake_budget() {
    check(verify::criterion2, Duration::from_secs(60));
}

#[test]
fn criterion_03_tree_walk_forcing() {
    check(verify::criterion3, Duration::from_secs(10));
}

#[test]
fn criterion_04_subsequence_expert_regret() {
    check(verify::criterion4, Duration::from_secs(300));
}

#[test]
fn criterion_05_best_expert_witness() {
    check(verify::criterion5, Duration::from_secs(300));
}

#[test]
fn criterion_06_multiplicative_weights_regret() {
    check(verify::criterion6, Duration::from_secs(30));
}

#[test]
fn criterion_07_graph_dimension_separation() {
    check(verify::criterion7, Duration::from_secs(300));
}

#[test]
fn criterion_08_rademacher_oracle() {
    check(verify::criterion8, Duration::from_secs(60));
}

#[test]
fn criterion_09_finite_label_baseline() {
    check(verify::criterion9, Duration::from_secs(120));
}

#[test]
fn criterion_10_verify_is_reproducible() {
    let _guard = LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_llab"))
            .args(["verify", "--seed", "7"])
            .output()
            .expect("verify ran")
    };
    let first = run();
    let second = run();
    let pass = first.status.success()
        && second.status.success()
        && first.stdout == second.stdout
        && first.stderr == second.stderr;
    let status = if pass { "PASS" } else { "FAIL" };
    println!(
        "criterion 10 [{status}] verify-reproducibility: two seeded runs, identical output and exit 0"
    );
    assert!(first.status.success(), "first verify run failed: {first:?}");
    assert!(second.status.success(), "second verify run failed: {second:?}");
    assert_eq!(first.stdout, second.stdout, "verify reports differ between runs");
    assert_eq!(first.stderr, second.stderr, "verify stderr differs between runs");
}
