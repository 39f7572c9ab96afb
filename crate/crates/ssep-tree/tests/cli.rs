//! Binary-level behavior: exit codes, refusals, and artifact writing.

use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ssep")
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("ssep-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn verify_passes_and_exits_zero() {
    let dir = scratch("verify");
    let out = Command::new(bin())
        .arg("verify")
        .env("SSEP_OUT_DIR", &dir)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "stdout:\n{stdout}");
    assert!(stdout.contains("PASS resolvent_identity_star"), "{stdout}");
    assert!(stdout.contains("PASS pathwise_duality"), "{stdout}");
    assert!(!stdout.contains("FAIL"), "{stdout}");
}

#[test]
fn malformed_config_exits_two_with_field() {
    let dir = scratch("badcfg");
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, "[experiment]\nnot_a_key = 1\n").unwrap();
    let out = Command::new(bin()).arg("simulate").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("experiment.not_a_key"), "{stderr}");
}

#[test]
fn invalid_subcommand_exits_two() {
    let out = Command::new(bin()).arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cap_exceeded_exits_three() {
    let dir = scratch("cap");
    let cfg = dir.join("cap.cfg");
    std::fs::write(
        &cfg,
        "[experiment]\nradius = 30\nt_grid = 1\nreplicates = 1\n\n[caps]\nvertices = 1000\n",
    )
    .unwrap();
    let out = Command::new(bin())
        .arg("simulate")
        .arg(&cfg)
        .env("SSEP_OUT_DIR", dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sigma_refuses_uncentered_function() {
    let dir = scratch("uncentered");
    let cfg = dir.join("s.cfg");
    std::fs::write(
        &cfg,
        "[experiment]\nradius = 2\nt_grid = 1\nreplicates = 40\nfunction = inline\n\
         function_sites = \nfunction_table = 0,1\n",
    )
    .unwrap();
    let out = Command::new(bin())
        .arg("sigma")
        .arg(&cfg)
        .env("SSEP_OUT_DIR", dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("not centered") && stderr.contains("center"), "{stderr}");
}

#[test]
fn simulate_writes_versioned_artifacts_and_resolved_config() {
    let dir = scratch("artifacts");
    let cfg = dir.join("sim.cfg");
    std::fs::write(
        &cfg,
        "[experiment]\nradius = 2\nseed = 5\nreplicates = 10\nt_grid = 0.5,1\n",
    )
    .unwrap();
    let out_dir = dir.join("out");
    let out = Command::new(bin())
        .arg("simulate")
        .arg(&cfg)
        .env("SSEP_OUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let xi = std::fs::read_to_string(out_dir.join("xi.csv")).unwrap();
    assert!(xi.starts_with("# schema: xi v1\npath_id,t,xi,seed\n"));
    assert_eq!(xi.lines().count(), 2 + 10 * 2);
    let resolved = std::fs::read_to_string(out_dir.join("simulate.resolved.cfg")).unwrap();
    assert!(resolved.contains("seed = 5"));
    // The resolved config reparses to the same canonical form.
    let reparsed = ssep_tree::config::ExperimentConfig::parse(&resolved).unwrap();
    assert!(resolved.ends_with(&reparsed.to_config_string()));
}

#[test]
fn workers_env_override_is_validated() {
    let out = Command::new(bin())
        .arg("verify")
        .env("SSEP_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn heat_subcommand_reports_bound() {
    let dir = scratch("heat");
    let cfg = dir.join("h.cfg");
    // Small rep count keeps this a smoke test; the acceptance suite runs the
    // full-strength version.
    std::fs::write(&cfg, "[experiment]\nheat_reps = 4000\nheat_u_grid = 0.5,1\n").unwrap();
    let out = Command::new(bin())
        .arg("heat")
        .arg(&cfg)
        .env("SSEP_OUT_DIR", dir.join("out"))
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("PASS heat_kernel_bound"), "{stdout}");
    let csv = std::fs::read_to_string(dir.join("out").join("heat.csv")).unwrap();
    assert!(csv.starts_with("# schema: heat v1\n"));
    assert_eq!(csv.lines().count(), 2 + 4); // 2 d-values x 2 u-values
}
