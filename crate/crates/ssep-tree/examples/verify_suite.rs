//! The hermetic verification suite, as the `ssep verify` subcommand runs it:
//! exact identities (resolvent identity, pathwise decomposition, duality,
//! normalization) plus a quick statistical smoke pass.
//!
//! Run: cargo run --release --example verify_suite

use ssep_tree::config::ExperimentConfig;
use ssep_tree::runner::{run, Subcommand};

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.out_dir = std::env::temp_dir().join("ssep-verify-example");
    let report = run(Subcommand::Verify, &cfg).expect("verify suite runs");
    for check in &report.checks {
        println!("{} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
    }
    std::process::exit(if report.all_passed() { 0 } else { 1 });
}
