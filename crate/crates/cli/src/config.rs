//! Run configuration: a strict JSON document plus `--set key=value` edits.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use brine_core::model::ModelParams;
use brine_core::scenario::{ParamOverrides, Scenario};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Static pore run. Without `b0` the three-gradient sweep runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoreConfig {
    pub r0: f64,
    pub a0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
    pub x3_max: f64,
}

impl Default for PoreConfig {
    fn default() -> Self {
        Self {
            r0: 2.0,
            a0: -4.0,
            b0: None,
            x3_max: 40.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseFieldMode {
    Trajectory,
    Suite,
}

/// One-dimensional run. Lengths `z_length` and `x0_z` are in units of `1/H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseFieldConfig {
    pub mode: PhaseFieldMode,
    #[serde(rename = "H")]
    pub h: f64,
    pub cells_per_unit: usize,
    pub z_length: f64,
    pub x0_z: f64,
    /// °K.
    pub theta0: f64,
    pub rho0: f64,
    pub steps: usize,
    pub save_every_steps: usize,
    /// Defaults to the stability bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Steps per width in suite mode.
    pub suite_steps: usize,
}

impl Default for PhaseFieldConfig {
    fn default() -> Self {
        Self {
            mode: PhaseFieldMode::Trajectory,
            h: 25.0,
            cells_per_unit: 8,
            z_length: 24.0,
            x0_z: 12.0,
            theta0: 273.0,
            rho0: 0.5,
            steps: 2000,
            save_every_steps: 200,
            dt: None,
            suite_steps: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub params: ParamOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Built-in scenario name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_name: Option<String>,
    /// Inline scenario, used instead of a built-in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub pore: PoreConfig,
    #[serde(default)]
    pub phasefield: PhaseFieldConfig,
}

impl RunConfig {
    pub fn model_params(&self) -> Result<ModelParams> {
        let p = self.params.apply(&ModelParams::defaults());
        p.validate().context("model parameters")?;
        Ok(p)
    }
}

/// Top-level sections and the flat keys each one accepts.
const SECTIONS: [(&str, &[&str]); 3] = [
    ("pore", &["r0", "a0", "b0", "x3_max"]),
    (
        "phasefield",
        &[
            "mode",
            "H",
            "cells_per_unit",
            "z_length",
            "x0_z",
            "theta0",
            "rho0",
            "steps",
            "save_every_steps",
            "dt",
            "suite_steps",
        ],
    ),
    (
        "params",
        &[
            "beta",
            "theta_star",
            "delta_g",
            "H",
            "sigma_theta",
            "sigma_N",
            "length_scale_Lb",
            "curvature_drive",
            "newton_tol",
            "newton_max_iter",
            "r_pinch",
            "mobility_floor",
            "stability_factor",
        ],
    ),
];

const TOP_LEVEL: [&str; 6] = [
    "params",
    "out_dir",
    "scenario_name",
    "scenario",
    "pore",
    "phasefield",
];

/// Dotted path for a `--set` key. Flat keys resolve to the command's own
/// section first, then to the model parameters.
fn resolve_key(key: &str, section: Option<&str>) -> Result<Vec<String>> {
    if key.contains('.') {
        return Ok(key.split('.').map(str::to_string).collect());
    }
    if TOP_LEVEL.contains(&key) {
        return Ok(vec![key.to_string()]);
    }
    let mut order: Vec<&str> = section.into_iter().collect();
    order.push("params");
    for s in order {
        if let Some((_, keys)) = SECTIONS.iter().find(|(n, _)| *n == s) {
            if keys.contains(&key) {
                return Ok(vec![s.to_string(), key.to_string()]);
            }
        }
    }
    bail!("unknown configuration key `{key}`")
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Applies one `key=value` edit to the raw configuration document.
pub fn apply_set(doc: &mut Value, assignment: &str, section: Option<&str>) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| anyhow!("--set expects key=value, got `{assignment}`"))?;
    let path = resolve_key(key.trim(), section)?;
    let mut node = doc;
    for (k, part) in path.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| anyhow!("configuration key `{key}` does not name an object field"))?;
        if k + 1 == path.len() {
            obj.insert(part.clone(), parse_value(raw.trim()));
            return Ok(());
        }
        node = obj
            .entry(part.clone())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

/// Loads `path` (if any), applies the edits and parses strictly.
///
/// Section defaults are merged under the document so partial sections are
/// accepted.
pub fn load(path: Option<&Path>, sets: &[String], section: Option<&str>) -> Result<RunConfig> {
    let mut doc = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", p.display()))?
        }
        None => Value::Object(Map::new()),
    };
    if !doc.is_object() {
        bail!("configuration must be a JSON object");
    }
    for s in sets {
        apply_set(&mut doc, s, section)?;
    }
    let defaults = serde_json::to_value(RunConfig::default())?;
    for name in ["pore", "phasefield"] {
        if let Some(Value::Object(user)) = doc.get(name) {
            let mut merged = defaults[name].as_object().cloned().unwrap_or_default();
            for (k, v) in user {
                merged.insert(k.clone(), v.clone());
            }
            doc[name] = Value::Object(merged);
        }
    }
    let cfg: RunConfig =
        serde_json::from_value(doc).map_err(|e| anyhow!("invalid configuration: {e}"))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use brine_core::scenario::builtin;

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default();
        cfg.params.beta = Some(2.0);
        cfg.scenario = builtin("tube-B");
        cfg.pore.b0 = Some(0.015);
        cfg.out_dir = Some("out".into());
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn flat_keys_resolve_by_section() {
        let cfg = load(None, &["b0=0.015".into(), "beta=2".into()], Some("pore")).unwrap();
        assert_eq!(cfg.pore.b0, Some(0.015));
        assert_eq!(cfg.params.beta, Some(2.0));
        let cfg = load(None, &["H=50".into()], Some("phasefield")).unwrap();
        assert_eq!(cfg.phasefield.h, 50.0);
        assert_eq!(cfg.params.h, None);
        let cfg = load(
            None,
            &["params.H=50".into(), "curvature_drive=contracting".into()],
            None,
        )
        .unwrap();
        assert_eq!(cfg.params.h, Some(50.0));
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = load(None, &["betta=2".into()], None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("betta"), "{err}");
        let err = load(None, &["params.betta=2".into()], None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("betta"), "{err}");
        let err = load(None, &["pore.radius=2".into()], None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("radius"), "{err}");
        assert!(load(None, &["novalue".into()], None).is_err());
    }

    #[test]
    fn file_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"params": {"delta_g": 0}, "pore": {"b0": 0.0032}}"#,
        )
        .unwrap();
        let cfg = load(Some(&path), &["a0=-5".into()], Some("pore")).unwrap();
        assert_eq!(cfg.params.delta_g, Some(0.0));
        assert_eq!(cfg.pore.a0, -5.0);
        assert_eq!(cfg.pore.r0, 2.0);
        std::fs::write(&path, r#"{"param": {}}"#).unwrap();
        let err = load(Some(&path), &[], None).unwrap_err().to_string();
        assert!(err.contains("param"), "{err}");
    }

    #[test]
    fn ranges_checked() {
        let cfg = load(None, &["beta=-1".into()], None).unwrap();
        assert!(cfg.model_params().is_err());
    }
}
