use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kljn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kljn"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = kljn(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn ok_text(args: &[&str]) -> String {
    let out = kljn(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    kljn(args).status.code().expect("exit code, not a signal")
}

fn assert_schema(schema_file: &str, instance: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(schema_file);
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_file}: {errors:?}");
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn cable_info() {
    let v = ok_json(&["cable-info", "--preset", "rg58-1m5"]);
    assert!(rel(v["min_wave_frequency"].as_f64().unwrap(), 6.667e7) < 1e-3);
    assert_schema("cable-derived.schema.json", &v);

    let long = ok_json(&["cable-info", "--preset", "rg58-1m5", "--length", "3.0"]);
    let ratio = v["min_wave_frequency"].as_f64().unwrap() / long["min_wave_frequency"].as_f64().unwrap();
    assert!(rel(ratio, 2.0) < 1e-12);

    let out = kljn(&["cable-info"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(code(&["cable-info", "--preset", "no-such-cable"]), 2);
    assert_eq!(code(&["cable-info", "--length", "-1"]), 2);
    assert_eq!(code(&["cable-info", "--l-per-m", "abc"]), 2);
}

#[test]
fn cable_from_file_with_suffixes() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("cable.json");
    fs::write(&file, r#"{"l_per_m": "250n", "c_per_m": "100p", "length_m": 1.5}"#).unwrap();
    let v = ok_json(&["cable-info", "--cable-file", file.to_str().unwrap()]);
    assert_eq!(v["total_resistance"].as_f64(), Some(0.0));
    assert!(rel(v["wave_impedance"].as_f64().unwrap(), 50.0) < 1e-12);
}

#[test]
fn wave_check() {
    let v = ok_json(&["wave-check", "--preset", "rg58-1m5", "--fc", "5k"]);
    assert_eq!(v["mode_count_below_f_c"], 0);
    assert_schema("forbidden-band.schema.json", &v);
    let two = ok_json(&["wave-check", "--fc", "166.6666667M"]);
    assert_eq!(two["mode_count_below_f_c"], 2);
    assert_eq!(code(&["wave-check", "--fc", "0"]), 2);
    assert_eq!(code(&["wave-check"]), 2);
}

#[test]
fn ac_sweep_reproduces_the_two_panels() {
    let csv = ok_text(&["ac-sweep"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("freq_hz,mag_uab_v,phase_deg,phase_unwrapped_deg"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 100.0);
    assert!((first[2] - 90.0).abs() < 0.5);
    assert_eq!(csv.lines().count(), 1 + 101);

    let rows = ok_json(&["ac-sweep", "--model", "lossy", "--f-start", "13.3690k", "--f-stop", "13.3691k", "--format", "json"]);
    assert_schema("ac-sweep.schema.json", &rows);
    assert!((rows[0]["phase_deg"].as_f64().unwrap() - 45.0).abs() < 1.0);

    for model in ["pi", "ladder:16"] {
        assert!(ok_text(&["ac-sweep", "--model", model, "--f-stop", "1M"]).lines().count() > 10);
    }
    assert_eq!(code(&["ac-sweep", "--model", "ladder:0"]), 2);
    assert_eq!(code(&["ac-sweep", "--model", "rc"]), 2);
    assert_eq!(code(&["ac-sweep", "--f-start", "1M", "--f-stop", "1k"]), 2);
}

#[test]
fn phase_velocity_table() {
    let csv = ok_text(&["phase-velocity-table", "--preset", "rg58-1m5"]);
    assert!(csv.starts_with("r_ohm,f_hz,v_m_per_s,exceeds_light_speed\n"));
    let rows = ok_json(&["phase-velocity-table", "--format", "json"]);
    assert_schema("phase-velocity-table.schema.json", &rows);
    let cell = |r: f64, f: f64| {
        rows.as_array()
            .unwrap()
            .iter()
            .find(|c| c["r_ohm"] == r && c["f_hz"] == f)
            .unwrap()
            .clone()
    };
    assert!(rel(cell(50.0, 1e3)["v_m_per_s"].as_f64().unwrap(), 1.99999e8) < 5e-3);
    assert!(rel(cell(10e3, 5e3)["v_m_per_s"].as_f64().unwrap(), 4.00041e10) < 5e-3);
    assert_eq!(cell(10e3, 5e3)["exceeds_light_speed"], true);
    for r in [10.0, 20.0, 50.0, 1e3, 10e3] {
        let a = cell(r, 1e3)["v_m_per_s"].as_f64().unwrap();
        let b = cell(r, 5e3)["v_m_per_s"].as_f64().unwrap();
        assert!(rel(a, b) < 1e-3);
    }
}

#[test]
fn thermal_budget() {
    let v = ok_json(&["thermal-budget", "--matched", "--fc", "666.6667k"]);
    assert_schema("energy-budget.schema.json", &v);
    assert!((v["deficit_electric"].as_f64().unwrap() - 0.01).abs() < 1e-4);
    assert!((v["deficit_magnetic"].as_f64().unwrap() - 0.01).abs() < 1e-4);

    let numeric = ok_json(&["thermal-budget", "--matched", "--fc", "666.6667k", "--method", "numeric"]);
    assert!(rel(numeric["electric_energy"].as_f64().unwrap(), v["electric_energy"].as_f64().unwrap()) < 1e-9);

    let g = ok_json(&["thermal-budget", "--ra", "1k", "--rb", "10k", "--fc", "5k", "--T", "300"]);
    let (c, l) = (150e-12, 0.375e-6);
    let r_par: f64 = 1e3 * 10e3 / 11e3;
    let f0c = 1.0 / (2.0 * std::f64::consts::PI * c * r_par);
    let f0l = 11e3 / (2.0 * std::f64::consts::PI * l);
    assert!(rel(g["corner_electric"].as_f64().unwrap(), f0c) < 1e-9);
    assert!(rel(g["corner_magnetic"].as_f64().unwrap(), f0l) < 1e-9);

    assert_eq!(code(&["thermal-budget", "--matched", "--fc", "1k", "--T", "0"]), 2);
    assert_eq!(code(&["thermal-budget", "--fc", "1k"]), 2);
    assert_eq!(code(&["thermal-budget", "--ra", "1k", "--fc", "1k"]), 2);
    assert_eq!(code(&["thermal-budget", "--ra", "inf", "--rb", "1k", "--fc", "1k"]), 2);
}

#[test]
fn delay_probe() {
    let v = ok_json(&["delay-probe", "--direction", "bob", "--rb", "10"]);
    assert_schema("delay-measurement.schema.json", &v);
    assert!(rel(v["delay"].as_f64().unwrap(), 37.5e-9) < 0.05);
    assert!(rel(v["equivalent_velocity"].as_f64().unwrap(), 4e7) < 0.05);

    let ab = ok_json(&["delay-probe", "--direction", "bob", "--ra", "50", "--rb", "50"]);
    let ba = ok_json(&["delay-probe", "--direction", "alice", "--ra", "50", "--rb", "50"]);
    assert!(rel(ab["delay"].as_f64().unwrap(), ba["delay"].as_f64().unwrap()) < 1e-6);

    let hl_ab = ok_json(&["delay-probe", "--direction", "toward-bob", "--ra", "1k", "--rb", "10k"]);
    let hl_ba = ok_json(&["delay-probe", "--direction", "toward-alice", "--ra", "1k", "--rb", "10k"]);
    let ratio = hl_ab["delay"].as_f64().unwrap() / hl_ba["delay"].as_f64().unwrap();
    assert!(rel(ratio, 0.1) < 0.05);

    assert_eq!(code(&["delay-probe", "--direction", "bob", "--probe-freq", "10M"]), 2);
    // A phase below the numeric floor is a numeric failure, not bad input.
    assert_eq!(code(&["delay-probe", "--direction", "bob", "--rb", "1e15"]), 3);
}

#[test]
fn kljn_run_outputs_manifest_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, r#"{"r_low": "1k", "r_high": "10k", "noise_cutoff": "5k", "bit_period": "40m", "cable": "rg58-1m5"}"#)
        .unwrap();
    let config_schema: Value = serde_json::from_str(&fs::read_to_string(&cfg).unwrap()).unwrap();
    assert_schema("kljn-config.schema.json", &config_schema);

    let out_a = dir.path().join("a");
    let args = [
        "kljn-run",
        "--config",
        cfg.to_str().unwrap(),
        "--bits",
        "24",
        "--seed",
        "42",
        "--per-bit-csv",
        "--dump-trace",
        "3",
        "--output-dir",
        out_a.to_str().unwrap(),
    ];
    assert_eq!(code(&args), 0);

    let report: Value = serde_json::from_str(&fs::read_to_string(out_a.join("report.json")).unwrap()).unwrap();
    assert_schema("exchange-report.schema.json", &report);
    assert_eq!(report["exchanges"].as_array().unwrap().len(), 24);
    assert_eq!(report["legit_error_rate"], 0.0);

    let manifest: Value = serde_json::from_str(&fs::read_to_string(out_a.join("manifest.json")).unwrap()).unwrap();
    assert_schema("manifest.schema.json", &manifest);
    assert_eq!(manifest["rng_seed"], 42);
    assert_eq!(manifest["parameters"]["config"]["r_high"], 10e3);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);

    let csv = fs::read_to_string(out_a.join("exchanges.csv")).unwrap();
    assert!(csv.starts_with("bit,alice,bob,secure,msv_v2,msc_a2,decoded_ok\n"));
    assert_eq!(csv.lines().count(), 25);

    let trace = fs::read(out_a.join("trace-bit3.bin")).unwrap();
    assert_eq!(&trace[..4], b"KLJN");
    assert_eq!(trace.len(), 24 + 3 * 4000 * 8);

    let leftovers: Vec<_> = fs::read_dir(&out_a)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with('.'))
        .collect();
    assert!(leftovers.is_empty());

    let out_b = dir.path().join("b");
    let replay = [
        "replay".to_string(),
        out_a.join("manifest.json").to_str().unwrap().to_string(),
        "--output-dir".into(),
        out_b.to_str().unwrap().to_string(),
    ];
    let replay: Vec<&str> = replay.iter().map(|s| s.as_str()).collect();
    assert_eq!(code(&replay), 0);
    for file in ["report.json", "exchanges.csv", "trace-bit3.bin"] {
        assert_eq!(fs::read(out_a.join(file)).unwrap(), fs::read(out_b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn kljn_run_rejects_malformed_configs() {
    let dir = tempfile::tempdir().unwrap();
    for (text, field) in [
        (r#"{"r_low": "1x"}"#, "r_low"),
        (r#"{"noise_cutoff": "10M"}"#, "noise_cutoff"),
        (r#"{"mystery": 1}"#, "mystery"),
        (r#"{"r_low": 1"#, "config"),
    ] {
        let cfg = dir.path().join("bad.json");
        fs::write(&cfg, text).unwrap();
        let out = kljn(&["kljn-run", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(field), "{text}");
    }
    assert_eq!(code(&["kljn-run", "--config", "/nonexistent/config.json"]), 2);
    assert_eq!(code(&["kljn-run", "--bits", "0"]), 2);
    assert_eq!(code(&["kljn-run", "--bits", "2", "--per-bit-csv"]), 2);
    assert_eq!(code(&["kljn-run", "--bits", "2", "--dump-trace", "5", "--output-dir", dir.path().to_str().unwrap()]), 2);
}

#[test]
fn stdout_mode_emits_manifest_on_stderr() {
    let out = kljn(&["kljn-run", "--bits", "4", "--seed", "9"]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["exchanges"].as_array().unwrap().len(), 4);
    let stderr = String::from_utf8(out.stderr).unwrap();
    let manifest: Value = serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
    assert_schema("manifest.schema.json", &manifest);
    assert_eq!(manifest["rng_seed"], 9);

    let again = kljn(&["kljn-run", "--bits", "4", "--seed", "9"]);
    assert_eq!(out.stdout, again.stdout);
}
