use std::path::Path;
use std::process::Command as Process;

use normsol_cli::config::{parse_config, ConfigError, RunConfig};
use normsol_cli::run::{run, Command, RunOptions};

const MINIMAL: &str = r#"{"problem":"scalar","dimension":3,"terms":[{"a":1,"p":4}],"m":1.0}"#;

fn invalid_message(text: &str) -> String {
    match parse_config(text).unwrap_err() {
        ConfigError::Invalid(e) => e.to_string(),
        other => panic!("expected a validation error, got {other}"),
    }
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn small_scalar() -> RunConfig {
    let mut c = parse_config(MINIMAL).unwrap();
    c.grid.r_max = 2.0;
    c.grid.n = 2048;
    c
}

#[test]
fn minimal_scalar_config_is_valid() {
    let c = parse_config(MINIMAL).unwrap();
    assert_eq!(c.dimension(), 3);
    assert_eq!(c.grid.n, 4096);
    assert_eq!(c.seed, 0);
}

#[test]
fn positive_coupling_is_rejected() {
    let msg = invalid_message(r#"{"problem":"system","mu1":1,"mu2":1,"beta":0.1,"m1":1,"m2":1}"#);
    assert!(msg.contains("beta") && msg.contains("β<0"), "{msg}");
}

#[test]
fn mass_subcritical_exponent_is_rejected() {
    let msg = invalid_message(r#"{"problem":"scalar","dimension":3,"terms":[{"a":1,"p":3.0}],"m":1.0}"#);
    assert!(msg.contains("2+4/N"), "{msg}");
}

#[test]
fn other_validations_name_their_field() {
    assert!(invalid_message(r#"{"problem":"scalar","dimension":3,"terms":[{"a":1,"p":4}],"m":-1}"#).contains("m"));
    assert!(invalid_message(r#"{"problem":"scalar","dimension":2,"terms":[{"a":1,"p":5}],"m":"omega_mass"}"#)
        .contains("omega_mass"));
    assert!(invalid_message(
        r#"{"problem":"scalar","dimension":3,"terms":[{"a":1,"p":4}],"m":1,"minimax":{"nodes":5}}"#
    )
    .contains("17"));
    assert!(invalid_message(r#"{"problem":"scalar","dimension":3,"terms":[{"a":1,"p":4}],"m":1,"grid":{"n":8}}"#)
        .contains("nodes"));
}

#[test]
fn parse_errors_carry_line_and_column() {
    match parse_config("{\n  \"problem\": \"scalar\",\n  \"dimension\": 3,,\n}").unwrap_err() {
        ConfigError::Parse { line, column, .. } => {
            assert_eq!(line, 3);
            assert_eq!(column, 18);
        }
        e => panic!("{e}"),
    }
}

#[test]
fn ground_state_run_emits_identities() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions { out: dir.path().to_path_buf(), emit_plot_data: false };
    let (manifest, code) = run(&Command::GroundState, &RunConfig::default_system(), &opts).unwrap();
    assert_eq!(code, 0);
    let ids = read_json(&dir.path().join("identities.json"));
    let grad = ids["gradient_ratio"].as_f64().unwrap();
    let quartic = ids["quartic_ratio"].as_f64().unwrap();
    assert!((grad - 3.0).abs() < 1e-3 && (quartic - 4.0).abs() < 1e-3);
    assert!(dir.path().join("omega.csv").exists());
    let listed: Vec<&str> = manifest.files.iter().map(|f| f.path.as_str()).collect();
    assert!(listed.contains(&"omega.csv") && listed.contains(&"identities.json"));
    assert!(manifest.files.iter().all(|f| f.sha256.len() == 64));
}

#[test]
fn identical_runs_have_identical_hashes() {
    let config = small_scalar();
    for command in [Command::SolveSingle, Command::GnScan, Command::FlowTrace] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let opts = |d: &Path| RunOptions { out: d.to_path_buf(), emit_plot_data: true };
        let (ma, _) = run(&command, &config, &opts(a.path())).unwrap();
        let (mb, _) = run(&command, &config, &opts(b.path())).unwrap();
        assert_eq!(ma.config_hash, mb.config_hash);
        let hashes = |m: &normsol_cli::RunManifest| m.files.iter().map(|f| (f.path.clone(), f.sha256.clone())).collect::<Vec<_>>();
        assert_eq!(hashes(&ma), hashes(&mb), "{}", command.name());
    }
}

#[test]
fn seeds_change_random_artifacts() {
    let mut config = small_scalar();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ma, _) = run(&Command::GnScan, &config, &RunOptions { out: a.path().into(), emit_plot_data: false }).unwrap();
    config.seed = 5;
    let (mb, _) = run(&Command::GnScan, &config, &RunOptions { out: b.path().into(), emit_plot_data: false }).unwrap();
    let scan = |m: &normsol_cli::RunManifest| m.files.iter().find(|f| f.path == "gn_scan.csv").unwrap().sha256.clone();
    assert_ne!(scan(&ma), scan(&mb));
}

#[test]
fn solve_single_then_validate_round_trips() {
    let config = small_scalar();
    let dir = tempfile::tempdir().unwrap();
    let (manifest, code) =
        run(&Command::SolveSingle, &config, &RunOptions { out: dir.path().into(), emit_plot_data: true }).unwrap();
    assert_eq!(code, 0, "{:?}", manifest.status);
    assert!(dir.path().join("path_profile.csv").exists());
    let report = read_json(&dir.path().join("report.json"));
    let level = report["level"].as_f64().unwrap();
    // m = 1 rescales the cubic ground state: b = ½|ω|²·(|ω|²/m)
    let w = 18.897251;
    assert!((level - 0.5 * w * w).abs() / level < 1e-4, "{level}");

    let out = tempfile::tempdir().unwrap();
    let profiles = vec![dir.path().join("solution.csv")];
    let (_, code) =
        run(&Command::Validate { profiles }, &config, &RunOptions { out: out.path().into(), emit_plot_data: false })
            .unwrap();
    assert_eq!(code, 0);
    let v = read_json(&out.path().join("validation.json"));
    assert_eq!(v["status"], "converged");
}

#[test]
fn solve_system_reports_the_identity_residuals() {
    let mut config = RunConfig::default_system();
    config.grid.n = 2048;
    let dir = tempfile::tempdir().unwrap();
    let (_, code) = run(&Command::SolveSystem, &config, &RunOptions { out: dir.path().into(), emit_plot_data: false }).unwrap();
    assert!(code == 0 || code == 2);
    let r = read_json(&dir.path().join("system_report.json"));
    let residuals = r["identity_residuals"].as_array().unwrap();
    assert_eq!(residuals.len(), 3);
    assert!(residuals.iter().all(|x| x.as_f64().unwrap() < 1e-3), "{residuals:?}");
    assert!(dir.path().join("u1.csv").exists() && dir.path().join("u2.csv").exists());
}

#[test]
fn solver_failures_write_diagnostics_and_exit_two() {
    // the surface needs a finer grid than this
    let mut config = RunConfig::default_system();
    config.grid.n = 1024;
    let dir = tempfile::tempdir().unwrap();
    let (manifest, code) =
        run(&Command::MinimaxSurface, &config, &RunOptions { out: dir.path().into(), emit_plot_data: false }).unwrap();
    assert_eq!(code, 2);
    assert!(manifest.files.iter().any(|f| f.path == "diagnostics.json"));
    assert!(read_json(&dir.path().join("diagnostics.json"))["error"].as_str().unwrap().contains("increase"));
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_normsol");
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"problem":"system","mu1":1,"mu2":1,"beta":0.1,"m1":1,"m2":1}"#).unwrap();
    let out = Process::new(exe).args(["solve-system", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("β<0"));

    std::fs::write(&bad, "{\"problem\": \"scalar\",\n\"dimension\": }").unwrap();
    let out = Process::new(exe).args(["gn-scan", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"), "{}", String::from_utf8_lossy(&out.stderr));

    let res = dir.path().join("gs");
    let out = Process::new(exe).arg("ground-state").arg("--out").arg(&res).env("NORMSOL_THREADS", "1").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(res.join("manifest.json").exists());
}
