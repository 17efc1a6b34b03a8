use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use qisim::output::{emit_csv, grid_rows, parse_grid_csv};
use serde_json::Value;
use sha2::{Digest, Sha256};

fn qisim(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qisim"));
    cmd.args(args).env_remove("QISIM_SEED").env_remove("SOURCE_DATE_EPOCH");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("qisim runs")
}

fn run_in(dir: &Path, command: &str, extra: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut args = vec![command, "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    qisim(&args, envs)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn reproduce_all_composes_every_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "reproduce-all", &[], &[]);
    let checks = json(&dir.path().join("checks.json"));
    let all_passed = checks["all_passed"].as_bool().unwrap();
    assert_eq!(out.status.code(), Some(if all_passed { 0 } else { 4 }));
    let failures: Vec<&str> = checks["failures"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for f in &failures {
        assert!(String::from_utf8_lossy(&out.stderr).contains(f));
    }

    let manifest = json(&dir.path().join("manifest.json"));
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(outputs.len() >= 10, "{} outputs", outputs.len());
    let on_disk = files(dir.path());
    assert_eq!(on_disk.len(), outputs.len() + 1, "every file but the manifest is listed");
    for o in outputs {
        let path = o["path"].as_str().unwrap();
        assert_eq!(o["sha256"].as_str().unwrap(), sha256(&on_disk[path]), "{path}");
    }
    for stem in ["visibility", "timedist", "eit", "store", "bell", "g13", "checks"] {
        assert!(on_disk.contains_key(&format!("{stem}.json")), "{stem}.json missing");
    }
    assert_eq!(manifest["config_echo"]["eit.od"], 55.0);
    assert_eq!(manifest["command"], "reproduce-all");
    assert_eq!(manifest["input_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn config_errors_exit_before_any_output() {
    let root = tempfile::tempdir().unwrap();
    let dir = root.path().join("never");
    for bad in ["eit.od=-1", "no.such.key=1", "source.sigma_hz=1e6"] {
        let mut extra = vec!["--set", bad];
        if bad.starts_with("source.sigma") {
            extra.extend(["--set", "source.T_p_s=1e-8"]);
        }
        let out = run_in(&dir, "reproduce-all", &extra, &[]);
        assert_eq!(out.status.code(), Some(2), "{bad}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!dir.exists(), "{bad} created output");
    }
    let out = run_in(&dir, "g13", &[], &[("QISIM_SEED", "not-a-number")]);
    assert_eq!(out.status.code(), Some(2));
    let cfg = root.path().join("broken.toml");
    std::fs::write(&cfg, "[eit]\nod = \n").unwrap();
    let out = run_in(&dir, "eit", &["--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.exists());
}

#[test]
fn config_file_and_overrides_layer() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("run.toml");
    std::fs::write(&cfg, "eit.od = 20\n[g13]\ng0 = 30.0\n").unwrap();
    let out = run_in(
        root.path(),
        "g13",
        &["--config", cfg.to_str().unwrap(), "--set", "g13.g0=40", "--set", "output.formats=[\"json\"]"],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let g = json(&root.path().join("g13.json"));
    assert_eq!(g["g0"], 40.0);
    let manifest = json(&root.path().join("manifest.json"));
    assert_eq!(manifest["config_echo"]["eit.od"], 20);
    let names: Vec<&str> =
        manifest["outputs"].as_array().unwrap().iter().map(|o| o["path"].as_str().unwrap()).collect();
    assert_eq!(names, ["g13.json"]);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mc = ["--set", "channel.jitter_samples=500", "--set", "store.storage_times_s=[0.0, 2e-7, 1e-6]"];
    let pin = [("SOURCE_DATE_EPOCH", "1700000000"), ("QISIM_SEED", "11")];
    for d in [&a, &b] {
        assert!(run_in(d.path(), "store", &mc, &pin).status.success());
    }
    assert_eq!(files(a.path()), files(b.path()));
    let other_seed = [("SOURCE_DATE_EPOCH", "1700000000"), ("QISIM_SEED", "12")];
    assert!(run_in(c.path(), "store", &mc, &other_seed).status.success());
    assert_ne!(
        std::fs::read(a.path().join("store.json")).unwrap(),
        std::fs::read(c.path().join("store.json")).unwrap(),
        "the seed should drive the Monte Carlo jitter"
    );
    let manifest = json(&a.path().join("manifest.json"));
    assert_eq!(manifest["timestamp"], "2023-11-14T22:13:20Z");
    assert_eq!(manifest["config_echo"]["seed"], 11);
}

#[test]
fn visibility_sweep_reports_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        "visibility",
        &["--set", "visibility.sigma_hz=[-1.0, 12.5e6]", "--set", "visibility.T_p_s=[]"],
        &[],
    );
    assert!(out.status.success());
    let v = json(&dir.path().join("visibility.json"));
    let rows = v["rows"].as_array().unwrap();
    assert!(rows[0]["error"].is_string() && rows[0]["visibility"].is_null());
    let good = rows[1]["visibility"].as_f64().unwrap();
    assert!((good - 0.97).abs() <= 0.01);
    let csv = std::fs::read_to_string(dir.path().join("visibility.csv")).unwrap();
    assert!(csv.starts_with("sigma_hz,T_p_s,visibility,error\n"));

    let out =
        run_in(dir.path(), "visibility", &["--set", "visibility.sigma_hz=[-1.0]", "--set", "visibility.T_p_s=[]"], &[]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn model_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        run_in(dir.path(), "visibility", &["--set", "grids.n_freq=16", "--set", "visibility.curve_points=0"], &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run_in(dir.path(), "eit", &["--set", "eit.rabi_hz=0"], &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn timedist_grid_files_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "timedist", &["--set", "timedist.T_p_s=[1e-7]", "--set", "grids.n_time=64"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["timedist_Tp100ns.csv", "timedist_Tp100ns_stored.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        let grid = parse_grid_csv(&text).unwrap();
        assert_eq!(grid.len(), 64 * 64);
        let peak = grid.iter().map(|g| g.2).fold(0.0, f64::max);
        assert_eq!(peak, 1.0);
        assert!(!text.contains('\r'));
    }
    let summary = json(&dir.path().join("timedist.json"));
    assert!(summary["rows"][0]["pearson"].as_f64().unwrap() > 0.3);
}

#[test]
fn bell_rows_flag_violations() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "bell", &["--set", "channel.V_src=0.7", "--set", "channel.background_b=0"], &[]);
    assert!(out.status.success());
    let b = json(&dir.path().join("bell.json"));
    for row in b["rows"].as_array().unwrap() {
        assert_eq!(row["violated"], false);
        assert!(row["s"].as_f64().unwrap() <= 2.0);
    }
    let out = run_in(
        dir.path(),
        "bell",
        &["--set", "channel.V_src=1", "--set", "channel.background_b=0", "--set", "channel.phase_jitter_rad=0"],
        &[],
    );
    assert!(out.status.success());
    let b = json(&dir.path().join("bell.json"));
    let s0 = b["rows"][0]["s"].as_f64().unwrap();
    assert!((s0 - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-9);
}

#[test]
fn store_identity_channel_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        run_in(dir.path(), "store", &["--set", "channel.background_b=0", "--set", "channel.phase_jitter_rad=0"], &[]);
    assert!(out.status.success());
    let s = json(&dir.path().join("store.json"));
    for f in s["rows"][0]["fidelities"].as_array().unwrap() {
        assert!((f["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_csv_round_trips_exactly(
        t in prop::collection::vec(-1e6f64..1e6, 1..12),
        seed in any::<u64>(),
    ) {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            f64::from_bits((state >> 12) | 0x3ff0_0000_0000_0000) - 1.0
        };
        let n = t.len();
        let values: Vec<f64> = (0..n * n).map(|_| next() * 10f64.powi((next() * 40.0) as i32 - 20)).collect();
        let text = emit_csv(&["t1_ns", "t2_ns", "density"], &grid_rows(&t, |i, j| values[i * n + j]));
        let parsed = parse_grid_csv(&text).unwrap();
        prop_assert_eq!(parsed.len(), n * n);
        for (k, (a, b, v)) in parsed.into_iter().enumerate() {
            prop_assert_eq!(a.to_bits(), t[k / n].to_bits());
            prop_assert_eq!(b.to_bits(), t[k % n].to_bits());
            prop_assert_eq!(v.to_bits(), values[k].to_bits());
        }
    }
}
