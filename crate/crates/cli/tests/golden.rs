//! Fixed scenario in, byte-identical artifacts out. Set `UPDATE_GOLDEN=1` to regenerate.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn scenario(name: &str) -> PathBuf {
    manifest().join("tests/scenarios").join(format!("{name}.json"))
}

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diffgeo-lab"))
        .args(args)
        .env_remove("DIFFGEO_LAB_JOBS")
        .output()
        .expect("binary runs")
}

fn run(cmd: &str, scenario_name: &str, out: &Path, extra: &[&str]) -> Output {
    let sc = scenario(scenario_name);
    let mut args = vec![cmd, "--scenario", sc.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    lab(&args)
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    if let Ok(entries) = fs::read_dir(dir) {
        for e in entries {
            let e = e.unwrap();
            files.insert(e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap());
        }
    }
    files
}

fn check_golden(cmd: &str, scenario_name: &str, expected_code: i32) {
    let tmp = tempfile::tempdir().unwrap();
    let out = lab_output(cmd, scenario_name, tmp.path());
    assert_eq!(
        out.status.code(),
        Some(expected_code),
        "{cmd}: stderr = {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let produced = read_dir(tmp.path());
    assert!(!produced.is_empty(), "{cmd} wrote nothing");
    let golden_dir = manifest().join("tests/golden").join(scenario_name);

    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        let _ = fs::remove_dir_all(&golden_dir);
        fs::create_dir_all(&golden_dir).unwrap();
        for (name, body) in &produced {
            fs::write(golden_dir.join(name), body).unwrap();
        }
        return;
    }

    let expected = read_dir(&golden_dir);
    assert_eq!(
        produced.keys().collect::<Vec<_>>(),
        expected.keys().collect::<Vec<_>>(),
        "{cmd}: artifact set differs from {}",
        golden_dir.display()
    );
    for (name, body) in &produced {
        assert!(
            body == &expected[name],
            "{cmd}: {name} differs from its golden copy"
        );
    }
}

fn lab_output(cmd: &str, scenario_name: &str, out: &Path) -> Output {
    run(cmd, scenario_name, out, &[])
}

macro_rules! golden {
    ($($test:ident: $cmd:literal => $code:literal;)*) => {
        $(
            #[test]
            fn $test() {
                check_golden($cmd, $cmd, $code);
            }
        )*
    };
}

golden! {
    simulate: "simulate" => 0;
    prolonged: "prolonged" => 0;
    fundamental: "fundamental" => 0;
    fixed_points: "fixed-points" => 0;
    limit_cycle: "limit-cycle" => 0;
    floquet: "floquet" => 0;
    lyapunov: "lyapunov" => 0;
    decay_scan: "decay-scan" => 0;
    pair_contraction: "pair-contraction" => 0;
    entrain: "entrain" => 0;
    interconnect: "interconnect" => 0;
    horizontal: "horizontal" => 0;
    cone_verify: "cone-verify" => 0;
    pf_field: "pf-field" => 0;
    corollary2: "corollary2" => 0;
    dichotomy: "dichotomy" => 0;
    homoclinic_gap: "homoclinic-gap" => 0;
    atlas: "atlas" => 0;
    homoclinic_curve: "homoclinic-curve" => 0;
    critical_damping: "critical-damping" => 0;
}

#[test]
fn cone_verify_at_k2_is_marginal_and_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run("cone-verify", "cone-verify-marginal", tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("cone.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"]["verdict"], "marginally-invariant");
}

#[test]
fn floquet_product_matches_damping() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run("floquet", "floquet", tmp.path(), &[]);
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("floquet.json")).unwrap()).unwrap();
    let (r1, r2, t) = (
        v["rho1"].as_f64().unwrap(),
        v["rho2"].as_f64().unwrap(),
        v["period"].as_f64().unwrap(),
    );
    assert!((r1 - 1.0).abs() < 1e-6, "rho1 = {r1}");
    let expected = (-0.5 * t).exp();
    assert!(((r2 - expected) / expected).abs() < 1e-6, "rho2 = {r2}, e^(-kT) = {expected}");
}

#[test]
fn unknown_key_exits_65_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = run("simulate", "simulate-invalid", &out_dir, &[]);
    assert_eq!(out.status.code(), Some(65));
    assert!(!out_dir.exists());
}

#[test]
fn usage_errors_exit_64() {
    let sc = scenario("simulate");
    let sc = sc.to_str().unwrap();
    assert_eq!(lab(&["no-such-command", "--scenario", sc, "--out", "x"]).status.code(), Some(64));
    assert_eq!(lab(&["simulate", "--scenario", sc]).status.code(), Some(64));
    assert_eq!(lab(&["simulate", "--scenario", sc, "--out", "x", "--jobs", "zero"]).status.code(), Some(64));
    assert_eq!(lab(&["--help"]).status.code(), Some(0));
}

#[test]
fn wrong_system_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    // the decay-scan scenario is overdamped; fixed points need the full pendulum
    let out = run("fixed-points", "decay-scan", tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(65));
}

#[test]
fn print_config_round_trips() {
    let dir = manifest().join("tests/scenarios");
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        if name.ends_with("-invalid") {
            continue;
        }
        let cmd = name.trim_end_matches("-marginal");
        let first = lab(&[cmd, "--scenario", path.to_str().unwrap(), "--print-config"]);
        assert!(first.status.success(), "{name}: {}", String::from_utf8_lossy(&first.stderr));

        let tmp = tempfile::tempdir().unwrap();
        let resolved = tmp.path().join("resolved.json");
        fs::write(&resolved, &first.stdout).unwrap();
        let second = lab(&[cmd, "--scenario", resolved.to_str().unwrap(), "--print-config"]);
        assert!(second.status.success());
        assert_eq!(first.stdout, second.stdout, "{name}: print-config is not a fixed point");

        let a: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
        let b: serde_json::Value = serde_json::from_slice(&second.stdout).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn print_config_fills_option_defaults() {
    let out = lab(&["cone-verify", "--scenario", scenario("corollary2").to_str().unwrap(), "--print-config"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["options"]["n_theta"], 720);
    assert_eq!(v["options"]["n_v"], 13);
    assert_eq!(v["options"]["tau"], 1.0);
    assert_eq!(v["options"]["cone"], "pendulum-default");
    assert_eq!(v["integrator"]["method"]["kind"], "adaptive-rk45");
}

#[test]
fn atlas_output_does_not_depend_on_jobs() {
    let one = tempfile::tempdir().unwrap();
    let four = tempfile::tempdir().unwrap();
    assert!(run("atlas", "atlas", one.path(), &["--jobs", "1"]).status.success());
    let sc = scenario("atlas");
    let out = Command::new(env!("CARGO_BIN_EXE_diffgeo-lab"))
        .args(["atlas", "--scenario", sc.to_str().unwrap(), "--out", four.path().to_str().unwrap()])
        .env("DIFFGEO_LAB_JOBS", "4")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(read_dir(one.path()), read_dir(four.path()));
}
