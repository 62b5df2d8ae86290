use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lhskit"));
    c.env_remove("LHSKIT_THREADS");
    c
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn small_config(dir: &Path, structure: &str, extra: &str) -> PathBuf {
    let p = dir.join("cfg.json");
    std::fs::write(
        &p,
        format!(r#"{{"structure": {structure}, "grid": {{"samples_per_coord": 6, "random_samples": 64}}, "seed": 7{extra}}}"#),
    )
    .unwrap();
    p
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn check<'a>(r: &'a Value, id: &str) -> &'a Value {
    r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["id"] == id)
        .unwrap_or_else(|| panic!("no record {id}"))
}

#[test]
fn verify_torus_bundle_config() {
    let cfg = repo().join("configs/torus_bundle.json");
    let out = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let c = check(&r, "dbeta_c_zeta_identity");
    assert_eq!(c["pass"], true);
    assert_eq!(c["detail"]["expected"], 1.0);
    assert!(c["worst_residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(c["samples"], 32 * 32 * 32 + 2048);
    assert_eq!(r["seed"], 20240601);
    assert_eq!(r["config"]["structure"]["torus_bundle"]["matrix"], serde_json::json!([[2, 1], [1, 1]]));
}

/// `|tr(A^k) − 2|` by repeated integer multiplication.
fn trace_count(a: [[i64; 2]; 2], k: usize) -> i64 {
    let mut m = [[1i64, 0], [0, 1]];
    for _ in 0..k {
        m = [
            [m[0][0] * a[0][0] + m[0][1] * a[1][0], m[0][0] * a[0][1] + m[0][1] * a[1][1]],
            [m[1][0] * a[0][0] + m[1][1] * a[1][0], m[1][0] * a[0][1] + m[1][1] * a[1][1]],
        ];
    }
    (m[0][0] + m[1][1] - 2).abs()
}

#[test]
fn orbits_csv_counts() {
    let cfg = repo().join("configs/torus_bundle.json");
    let out = run(&["orbits", "--config", cfg.to_str().unwrap(), "--kmax", "4", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,algebraic,enumerated,refined,max_residual,matched"));
    let mut counts = Vec::new();
    for (k, line) in (1..).zip(lines) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0].parse::<usize>().unwrap(), k);
        let refined: i64 = f[3].parse().unwrap();
        assert_eq!(refined, trace_count([[2, 1], [1, 1]], k));
        assert!(f[4].parse::<f64>().unwrap() <= 1e-10);
        assert_eq!(f[5], "true");
        counts.push(refined);
    }
    assert_eq!(counts, [1, 5, 16, 45]);
}

#[test]
fn obstruct_klein_fails() {
    let out = run(&["obstruct", "--surface", "klein"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    let c = check(&r, "admissible_surface");
    assert_eq!(c["detail"]["verdict"]["reasons"], serde_json::json!(["klein_bottle"]));
    assert_eq!(r["pass"], false);
    assert!(r.get("seed").is_none());
}

#[test]
fn obstruct_variants() {
    assert_eq!(run(&["obstruct", "--surface", "torus"]).status.code(), Some(0));
    assert_eq!(run(&["obstruct", "--surface", "crosscaps:4"]).status.code(), Some(0));
    let out = run(&["obstruct", "--surface", "crosscaps:4", "--mod4", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().nth(1).unwrap().split(',').next_back(), Some("mod4_filter"));
    assert_eq!(run(&["obstruct", "--surface", "crosscaps:0"]).status.code(), Some(2));
    assert_eq!(run(&["obstruct", "--surface", "mobius"]).status.code(), Some(2));
    let table = run(&["obstruct", "--format", "csv", "--max", "3"]);
    assert_eq!(table.status.code(), Some(0));
    // genus 0..=3 and crosscaps 1..=3
    assert_eq!(String::from_utf8(table.stdout).unwrap().lines().count(), 1 + 4 + 3);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, r#"{"structure": {"mcduff": {}}, "grid": {"samples_per_coord": 4, "bogus": 1}}"#).unwrap();
    let out = run(&["verify", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("grid") && err.contains("bogus"), "{err}");
    assert!(out.stdout.is_empty());

    std::fs::write(&p, r#"{"structure": {"torus_bundle": {"matrix": [[1, 1], [0, 1]]}}}"#).unwrap();
    let out = run(&["verify", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("structure.torus_bundle.matrix"));

    let missing = dir.path().join("nope.json");
    assert_eq!(run(&["verify", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_config_error() {
    let out = bin().args(["obstruct", "--surface", "torus"]).env("LHSKIT_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_byte_stable_across_modes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), r#"{"mcduff": {}}"#, "");
    let c = cfg.to_str().unwrap();
    let a = run(&["verify", "--config", c]);
    let b = run(&["verify", "--config", c]);
    let seq = run(&["verify", "--config", c, "--sequential"]);
    let one = bin().args(["verify", "--config", c]).env("LHSKIT_THREADS", "1").output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, seq.stdout);
    assert_eq!(a.stdout, one.stdout);
}

#[test]
fn seed_changes_random_samples() {
    let dir = tempfile::tempdir().unwrap();
    let a = small_config(dir.path(), r#"{"mcduff": {}}"#, "");
    let out_a = run(&["verify", "--config", a.to_str().unwrap()]);
    let b = dir.path().join("b.json");
    std::fs::write(
        &b,
        r#"{"structure": {"mcduff": {}}, "grid": {"samples_per_coord": 6, "random_samples": 64}, "seed": 8}"#,
    )
    .unwrap();
    let out_b = run(&["verify", "--config", b.to_str().unwrap()]);
    assert_ne!(out_a.stdout, out_b.stdout);
    assert_eq!(report(&out_b)["seed"], 8);
}

#[test]
fn out_file_and_timings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), r#"{"torus_bundle": {}}"#, "");
    let dest = dir.path().join("report.json");
    let out = run(&["integral", "--config", cfg.to_str().unwrap(), "--out", dest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&dest).unwrap()).unwrap();
    assert!(check(&r, "stabham_integral").get("wall_time_ms").is_none());
    let timed = run(&["integral", "--config", cfg.to_str().unwrap(), "--timings"]);
    assert!(check(&report(&timed), "stabham_integral")["wall_time_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn flow_csv_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), r#"{"torus_bundle": {}}"#, r#", "flow": {"csv_rows": 11}"#);
    let out = run(&["flow", "--config", cfg.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "time,th1,th2,t");
    assert_eq!(lines.len(), 12);
    // t grows like e^time until it wraps at e^ν
    let row: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row, vec![0.0, 0.2, 0.6, 1.4]);
    let row: Vec<f64> = lines[3].split(',').map(|x| x.parse().unwrap()).collect();
    assert!((row[3] - 1.4 * row[0].exp()).abs() < 1e-9, "{row:?}");
}

#[test]
fn suspend_csv_has_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), r#"{"mcduff": {}}"#, r#", "epsilon": "auto""#);
    let out = run(&["suspend", "--config", cfg.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,theta,F_formula,F_measured,det_dlambda"));
    for l in lines {
        let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[3] - 2.0).abs() < 1e-9 && (f[4] - 2.0).abs() < 2e-4);
    }
}

#[test]
fn theta_perturbation_breaks_deck_invariance() {
    let cfg = repo().join("configs/torus_theta_perturbed.json");
    let out = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(check(&r, "normal_change_identity")["pass"], true);
    assert_eq!(check(&r, "deck_invariance")["pass"], false);
    assert_eq!(check(&r, "deformation_equivalence")["pass"], true);
}

#[test]
fn log_periodic_perturbation_passes_integral() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(
        dir.path(),
        r#"{"torus_bundle": {}}"#,
        r#", "normal_change": {"g": "0.1*cos(2*pi*log(t)/0.9624236501192069)"}"#,
    );
    let out = run(&["integral", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let d = &check(&r, "stabham_integral")["detail"];
    assert!(d["integrand_sup"].as_f64().unwrap() >= 1e-3);
    assert!(d["integral"].as_f64().unwrap().abs() <= 1e-6);
    assert_eq!(check(&r, "stabham_excess_vanishes_somewhere")["pass"], true);
    let ids: Vec<&str> = r["checks"].as_array().unwrap().iter().map(|c| c["id"].as_str().unwrap()).collect();
    assert!(!ids.contains(&"stabham_integrand_vanishes"));
}

#[test]
fn torus_only_stages_fail_cleanly_elsewhere() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), r#"{"mcduff": {}}"#, "");
    for sub in ["orbits", "lagrangian", "integral"] {
        let out = run(&[sub, "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{sub}");
        let r = report(&out);
        let first = &r["checks"][0];
        assert_eq!(first["pass"], false);
        assert!(first["error"].as_str().unwrap().len() > 10);
    }
}

#[test]
fn shipped_configs_match_schema_keys() {
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(repo().join("schema/config.schema.json")).unwrap()).unwrap();
    let mut keys: Vec<String> = schema["properties"].as_object().unwrap().keys().cloned().collect();
    keys.sort();
    let cfg = lhskit::config::Config {
        seed: Some(1),
        expect_dbeta_c_zeta: Some(1.0),
        normal_change: Some(lhskit::config::NormalChangeSpec {
            g: "0".into(),
            xi: None,
            sign: 1,
        }),
        ..Default::default()
    };
    let v = serde_json::to_value(&cfg).unwrap();
    let mut have: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
    have.sort();
    assert_eq!(keys, have);
    let tol_schema: Vec<&String> = schema["properties"]["tolerances"]["properties"].as_object().unwrap().keys().collect();
    let tol_have = v["tolerances"].as_object().unwrap();
    assert_eq!(tol_schema.len(), tol_have.len());
    for k in tol_schema {
        let d = schema["properties"]["tolerances"]["properties"][k]["default"].as_f64().unwrap();
        assert_eq!(tol_have[k].as_f64().unwrap(), d, "{k}");
    }
    for entry in std::fs::read_dir(repo().join("configs")).unwrap() {
        let p = entry.unwrap().path();
        lhskit::config::Config::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}

#[test]
fn expression_config_matches_builtin() {
    let cfg = repo().join("configs/torus_expressions.json");
    let out = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(check(&r, "dbeta_c_zeta_identity")["pass"], true);
    assert_eq!(check(&r, "deck_invariance")["pass"], true);
}
