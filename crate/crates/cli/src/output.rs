//! Frame, profile and report files.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use brine_core::phasefield::{Diagnostics1D, Field1D};
use brine_core::scenario::{Event, RunReport};
use brine_core::stefan::{BrineState, PoreProfile};
use serde::Serialize;

pub const CURVE_HEADER: [&str; 4] = ["tau", "s", "r_mm", "x3_mm"];
pub const FIELD_HEADER: [&str; 5] = ["time", "x", "phi", "theta", "rho"];
pub const PORE_HEADER: [&str; 3] = ["x3_mm", "r_mm", "dr_dx3"];

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    csv::Writer::from_path(path).with_context(|| format!("opening {}", path.display()))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush()
        .with_context(|| format!("writing {}", path.display()))
}

pub fn write_frames(path: &Path, frames: &[BrineState]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(CURVE_HEADER)?;
    for f in frames {
        for i in 0..f.curve.len() {
            w.write_record([
                num(f.tau),
                num(f.curve.s_nodes[i]),
                num(f.curve.r[i]),
                num(f.curve.x3[i]),
            ])
            .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    finish(w, path)
}

pub fn write_fields(path: &Path, frames: &[Field1D]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(FIELD_HEADER)?;
    for f in frames {
        for i in 0..f.grid.n_cells {
            w.write_record([
                num(f.time),
                num(f.grid.x(i)),
                num(f.phi[i]),
                num(f.theta[i]),
                num(f.rho[i]),
            ])
            .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    finish(w, path)
}

pub fn write_pore(path: &Path, profile: &PoreProfile) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(PORE_HEADER)?;
    for k in 0..profile.x3.len() {
        w.write_record([
            num(profile.x3[k]),
            num(profile.r[k]),
            num(profile.dr_dx3[k]),
        ])
        .with_context(|| format!("writing {}", path.display()))?;
    }
    finish(w, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// `report.json` and `summary.txt` in `dir`.
pub fn write_report(dir: &Path, report: &RunReport) -> Result<()> {
    write_json(&dir.join("report.json"), report)?;
    fs::write(dir.join("summary.txt"), report.summary())
        .with_context(|| format!("writing {}", dir.join("summary.txt").display()))
}

pub fn write_events(path: &Path, events: &[Event]) -> Result<()> {
    write_json(path, &events)
}

#[derive(Serialize)]
pub struct DiagnosticsFrame {
    pub time: f64,
    #[serde(flatten)]
    pub diagnostics: Diagnostics1D,
}

#[cfg(test)]
mod tests {
    use super::*;
    use brine_core::stefan::sphere;

    #[test]
    fn empty_frames_give_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/frames.csv");
        write_frames(&p, &[]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "tau,s,r_mm,x3_mm\n");
        let q = dir.path().join("fields.csv");
        write_fields(&q, &[]).unwrap();
        assert_eq!(fs::read_to_string(&q).unwrap(), "time,x,phi,theta,rho\n");
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let st = BrineState {
            curve: sphere(16, 0.3, 0.1).unwrap(),
            total_salt: 1.0,
            tau: 0.7,
        };
        write_frames(&p, std::slice::from_ref(&st)).unwrap();
        let mut rd = csv::Reader::from_path(&p).unwrap();
        let rows: Vec<Vec<f64>> = rd
            .records()
            .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 16);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row[0], 0.7);
            assert_eq!(row[2], st.curve.r[i]);
            assert_eq!(row[3], st.curve.x3[i]);
        }
    }

    #[test]
    fn unwritable_path_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = write_frames(&blocker.join("frames.csv"), &[]).unwrap_err();
        assert!(format!("{err:#}").contains("file"), "{err:#}");
    }
}
