//! Thin batch front end: `ssep <subcommand> <config-file>`.
//!
//! Subcommands: simulate, sigma, clt, mdp, decompose, verify, heat.
//! Environment overrides (the only two): SSEP_OUT_DIR, SSEP_WORKERS.
//! Exit codes: 0 all asserted checks passed, 1 check failure, 2 config
//! error, 3 state-space cap exceeded.

use std::process::ExitCode;

use ssep_tree::config::ExperimentConfig;
use ssep_tree::runner::{run, Subcommand};

fn usage() -> ExitCode {
    eprintln!("usage: ssep <simulate|sigma|clt|mdp|decompose|verify|heat> [config-file]");
    eprintln!("  env overrides: SSEP_OUT_DIR, SSEP_WORKERS");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    if args.len() < 2 || args.len() > 3 {
        return usage();
    }
    let Some(sub) = Subcommand::parse(&args[1]) else {
        eprintln!("unknown subcommand {:?}", args[1]);
        return usage();
    };

    let mut cfg = if let Some(path) = args.get(2) {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("config error: cannot read {path}: {e}");
                return ExitCode::from(2);
            }
        };
        match ExperimentConfig::parse(&text) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("config error: {e}");
                return ExitCode::from(2);
            }
        }
    } else {
        ExperimentConfig::default()
    };

    if let Ok(dir) = std::env::var("SSEP_OUT_DIR") {
        cfg.out_dir = dir.into();
    }
    if let Ok(workers) = std::env::var("SSEP_WORKERS") {
        match workers.parse::<usize>() {
            Ok(w) if w >= 1 => cfg.workers = w,
            _ => {
                eprintln!("config error: SSEP_WORKERS={workers:?} is not a positive integer");
                return ExitCode::from(2);
            }
        }
    }

    match run(sub, &cfg) {
        Ok(report) => {
            for note in &report.notes {
                println!("note: {note}");
            }
            for check in &report.checks {
                let tag = if check.passed { "PASS" } else { "FAIL" };
                println!("{tag} {}: {}", check.name, check.detail);
            }
            for artifact in &report.artifacts {
                println!("wrote {}", artifact.display());
            }
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
