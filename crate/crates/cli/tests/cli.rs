use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn brine(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brine"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn schema() -> Value {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas/run_report.schema.json");
    read_json(&p)
}

/// Checks the keywords the report schema uses.
fn validate(v: &Value, s: &Value, path: &str) -> Result<(), String> {
    if let Some(t) = s.get("type") {
        let types: Vec<&str> = match t {
            Value::String(x) => vec![x.as_str()],
            Value::Array(xs) => xs.iter().map(|x| x.as_str().unwrap()).collect(),
            _ => return Err(format!("{path}: bad schema type")),
        };
        let ok = types.iter().any(|t| match *t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "boolean" => v.is_boolean(),
            "null" => v.is_null(),
            "number" => v.is_number(),
            "integer" => v.is_u64() || v.is_i64(),
            _ => false,
        });
        if !ok {
            return Err(format!("{path}: {v} is not {types:?}"));
        }
    }
    if let (Some(min), Some(x)) = (s.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if x < min {
            return Err(format!("{path}: {x} < {min}"));
        }
    }
    if let Some(Value::Array(options)) = s.get("enum") {
        if !options.contains(v) {
            return Err(format!("{path}: {v} not in {options:?}"));
        }
    }
    if let Value::Object(obj) = v {
        if let Some(Value::Array(req)) = s.get("required") {
            for r in req {
                if !obj.contains_key(r.as_str().unwrap()) {
                    return Err(format!("{path}: missing {r}"));
                }
            }
        }
        let props = s.get("properties").and_then(Value::as_object);
        for (k, x) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(sub) => validate(x, sub, &format!("{path}.{k}"))?,
                None if s.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("{path}: unexpected key {k}"))
                }
                None => {}
            }
        }
    }
    if let (Value::Array(items), Some(sub)) = (v, s.get("items")) {
        for (i, x) in items.iter().enumerate() {
            validate(x, sub, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}

#[test]
fn validator_rejects_malformed_reports() {
    let s = schema();
    let good = serde_json::json!({
        "scenario": "x", "frames_written": 0, "frame_taus": [], "events": [],
        "assertions": [{"name": "a", "passed": true, "measured": null, "expected": "e"}],
        "wall_time_s": 0.1, "error": null, "notes": []
    });
    validate(&good, &s, "$").unwrap();
    let mut bad = good.clone();
    bad["frames_written"] = serde_json::json!(-1);
    assert!(validate(&bad, &s, "$").is_err());
    let mut bad = good.clone();
    bad["extra"] = serde_json::json!(1);
    assert!(validate(&bad, &s, "$").is_err());
    let mut bad = good;
    bad["assertions"][0]["passed"] = serde_json::json!("yes");
    assert!(validate(&bad, &s, "$").is_err());
}

#[test]
fn dump_defaults_has_table_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = brine(&["dump-defaults"], dir.path());
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["params"]["beta"].as_f64(), Some(1.85));
    assert_eq!(v["params"]["H"].as_f64(), Some(1e6));
    assert_eq!(v["params"]["delta_g"].as_f64(), Some(1.23e-8));
}

#[test]
fn dumped_scenario_runs_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = brine(&["dump-defaults", "--scenario", "sphere"], dir.path());
    assert_eq!(code(&o), 0);
    let mut sc: Value = serde_json::from_slice(&o.stdout).unwrap();
    sc["stop"]["tau_end"] = serde_json::json!(0.1);
    sc["frame_taus"] = serde_json::json!([0.0, 0.05, 0.1]);
    sc["checks"] = serde_json::json!([{"check": "no_pinch"}]);
    let cfg = serde_json::json!({ "scenario": sc });
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let o = brine(
        &["evolve", "--config", "cfg.json", "--out", "run"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv::Reader::from_path(dir.path().join("run/frames.csv")).unwrap();
    let taus: Vec<f64> = rd
        .records()
        .map(|r| r.unwrap()[0].parse().unwrap())
        .collect();
    assert_eq!(taus.len(), 3 * 64);
    assert_eq!(taus[64], 0.05);
}

#[test]
fn pore_pinch_event() {
    let dir = tempfile::tempdir().unwrap();
    let o = brine(&["equilibrium-pore", "--set", "b0=0.015"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let out = dir.path().join("brine-out/equilibrium-pore");
    let ev = read_json(&out.join("events.json"));
    assert_eq!(ev[0]["type"], "pinch");
    let x3 = ev[0]["x3"].as_f64().unwrap();
    assert!((x3 / 38.7 - 1.0).abs() < 0.05, "{x3}");
    let report = read_json(&out.join("report.json"));
    validate(&report, &schema(), "$").unwrap();
    let mut rd = csv::Reader::from_path(out.join("pore_profile.csv")).unwrap();
    assert_eq!(
        rd.headers().unwrap().iter().collect::<Vec<_>>(),
        ["x3_mm", "r_mm", "dr_dx3"]
    );
}

#[test]
fn pore_sweep_without_gradient() {
    let dir = tempfile::tempdir().unwrap();
    let o = brine(&["equilibrium-pore", "--out", "sweep"], dir.path());
    assert_eq!(code(&o), 0);
    let report = read_json(&dir.path().join("sweep/report.json"));
    validate(&report, &schema(), "$").unwrap();
    assert_eq!(report["assertions"].as_array().unwrap().len(), 4);
    assert!(dir.path().join("sweep/pore_profile_b0_0.0032.csv").exists());
}

#[test]
fn tube_a_frames() {
    let dir = tempfile::tempdir().unwrap();
    let o = brine(
        &["evolve", "--scenario", "tube-A", "--out", "a/b"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let out = dir.path().join("a/b");
    let mut rd = csv::Reader::from_path(out.join("frames.csv")).unwrap();
    assert_eq!(
        rd.headers().unwrap().iter().collect::<Vec<_>>(),
        ["tau", "s", "r_mm", "x3_mm"]
    );
    let mut taus: Vec<f64> = rd
        .records()
        .map(|r| r.unwrap()[0].parse().unwrap())
        .collect();
    taus.dedup();
    assert_eq!(taus, [1.0, 3.0, 4.0, 5.0]);
    validate(&read_json(&out.join("report.json")), &schema(), "$").unwrap();
    assert!(std::fs::read_to_string(out.join("summary.txt"))
        .unwrap()
        .contains("PASS"));
}

#[test]
fn runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    for d in ["one", "two"] {
        assert_eq!(
            code(&brine(
                &["evolve", "--scenario", "sphere", "--out", d],
                dir.path()
            )),
            0
        );
    }
    let a = std::fs::read(dir.path().join("one/frames.csv")).unwrap();
    let b = std::fs::read(dir.path().join("two/frames.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn failed_assertions_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = brine(
        &["evolve", "--scenario", "tube-A", "--set", "a0=-4"],
        dir.path(),
    );
    assert_eq!(code(&o), 1, "a0 is not a key outside the pore section");
    let o = brine(&["dump-defaults", "--scenario", "sphere"], dir.path());
    let mut sc: Value = serde_json::from_slice(&o.stdout).unwrap();
    sc["name"] = serde_json::json!("short");
    sc["stop"]["tau_end"] = serde_json::json!(0.02);
    sc["frame_taus"] = serde_json::json!([]);
    sc["checks"] = serde_json::json!([{"check": "pinch_occurs"}, {"check": "no_pinch"}]);
    std::fs::write(
        dir.path().join("c.json"),
        serde_json::json!({ "scenario": sc }).to_string(),
    )
    .unwrap();
    let o = brine(&["evolve", "--config", "c.json"], dir.path());
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stdout));
    let report = read_json(&dir.path().join("brine-out/evolve/short/report.json"));
    validate(&report, &schema(), "$").unwrap();
    let passed: Vec<bool> = report["assertions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["passed"].as_bool().unwrap())
        .collect();
    assert_eq!(passed, [false, true]);
}

#[test]
fn errors_exit_one_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = brine(
        &["evolve", "--scenario", "tube-A", "--set", "betta=2"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("betta"));
    let o = brine(&["evolve", "--scenario", "tube-Z"], dir.path());
    assert_eq!(code(&o), 1);
    let o = brine(
        &["evolve", "--set", "beta=-1", "--scenario", "tube-A"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"pore": {"b0": 0.01, "radius": 2}}"#,
    )
    .unwrap();
    let o = brine(&["equilibrium-pore", "--config", "c.json"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("radius"));
    assert_eq!(code(&brine(&["no-such-command"], dir.path())), 1);
    assert_eq!(code(&brine(&["--help"], dir.path())), 0);
}

#[test]
fn phasefield_trajectory_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = brine(
        &[
            "phasefield-1d",
            "--set",
            "steps=100",
            "--set",
            "save_every_steps=50",
            "--out",
            "pf",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let out = dir.path().join("pf");
    let mut rd = csv::Reader::from_path(out.join("trajectory.csv")).unwrap();
    assert_eq!(
        rd.headers().unwrap().iter().collect::<Vec<_>>(),
        ["time", "x", "phi", "theta", "rho"]
    );
    assert_eq!(rd.records().count(), 3 * 192);
    let d = read_json(&out.join("diagnostics.json"));
    assert_eq!(d.as_array().unwrap().len(), 3);
    assert!(d[0]["total_salt"].is_number());
    validate(&read_json(&out.join("report.json")), &schema(), "$").unwrap();
}

#[test]
fn convergence_and_drift_reports() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["convergence", "drift"] {
        let o = brine(&[cmd, "--out", cmd], dir.path());
        assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stdout));
        validate(
            &read_json(&dir.path().join(cmd).join("report.json")),
            &schema(),
            "$",
        )
        .unwrap();
    }
}

#[test]
fn suite_writes_each_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = brine(&["suite", "--out", "s"], dir.path());
    let c = code(&o);
    assert!(c == 0 || c == 2, "{c}");
    let suite = read_json(&dir.path().join("s/suite_report.json"));
    let runs = suite["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 4);
    let all_pass = suite["assertions"]
        .as_array()
        .unwrap()
        .iter()
        .all(|a| a["passed"] == true)
        && runs.iter().all(|r| {
            r["assertions"]
                .as_array()
                .unwrap()
                .iter()
                .all(|a| a["passed"] == true)
        });
    assert_eq!(c == 0, all_pass);
    for r in runs {
        validate(r, &schema(), "$").unwrap();
        let name = r["scenario"].as_str().unwrap();
        assert!(dir.path().join("s").join(name).join("frames.csv").exists());
    }
}
