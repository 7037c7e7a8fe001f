//! Named experiments with declared checks, and the reports they produce.

use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    front_profile_prime, sharp_interface_speed, CurvatureDrive, ModelError, ModelParams,
};
use crate::ode::{integrate, OdeOptions};
use crate::phasefield::{
    diagnostics, entropy_increment, front_drive, front_position, measure_front_velocity, stable_dt,
    step, Field1D, Grid1D, PhaseFieldError,
};
use crate::stefan::{
    arc_length_spread, capsule, centroid_x3, classify_pore_regime, curvature, drift_velocity,
    equilibrium_pore, mean_velocity_salt, normal_velocity, sphere, step_backward_euler, BrineState,
    PinchEvent, PoreProfile, PoreRegime, StefanError, ThermalProfile,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stefan(#[from] StefanError),
    #[error(transparent)]
    PhaseField(#[from] PhaseFieldError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialShape {
    /// Sphere of `radius` mm centred at height `centre`.
    Sphere {
        radius: f64,
        #[serde(default)]
        centre: f64,
    },
    /// Cylinder of `length` with hemispherical caps, centred at the origin.
    Capsule { length: f64, radius: f64 },
    /// Static pore profile grown upwards from `r(0) = r0`.
    Pore { r0: f64, x3_max: f64 },
}

/// Thermal state in force from `tau_start` until the next stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalStage {
    pub tau_start: f64,
    pub a0: f64,
    pub b0: f64,
}

impl ThermalStage {
    pub fn profile(&self) -> ThermalProfile {
        ThermalProfile {
            a0: self.a0,
            b0: self.b0,
        }
    }
}

/// Optional replacements for individual model parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_g: Option<f64>,
    #[serde(default, rename = "H", skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_theta: Option<f64>,
    #[serde(default, rename = "sigma_N", skip_serializing_if = "Option::is_none")]
    pub sigma_n: Option<f64>,
    #[serde(
        default,
        rename = "length_scale_Lb",
        skip_serializing_if = "Option::is_none"
    )]
    pub length_scale_lb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature_drive: Option<CurvatureDrive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton_max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_pinch: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mobility_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability_factor: Option<f64>,
}

impl ParamOverrides {
    pub fn apply(&self, base: &ModelParams) -> ModelParams {
        let mut p = *base;
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { p.$f = v; })* };
        }
        take!(
            beta,
            theta_star,
            delta_g,
            h,
            sigma_theta,
            sigma_n,
            length_scale_lb,
            curvature_drive,
            newton_tol,
            newton_max_iter,
            r_pinch,
            mobility_floor,
            stability_factor
        );
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum StopRule {
    TauEnd {
        tau_end: f64,
    },
    /// Run until a pinch fires, giving up at `tau_max`.
    Pinch {
        tau_max: f64,
    },
    /// Run until `max |Ṽ_n| < tol` after the last thermal stage.
    Steady {
        tol: f64,
        tau_max: f64,
    },
}

impl StopRule {
    pub fn tau_limit(&self) -> f64 {
        match *self {
            StopRule::TauEnd { tau_end } => tau_end,
            StopRule::Pinch { tau_max } | StopRule::Steady { tau_max, .. } => tau_max,
        }
    }
}

/// Declared assertions evaluated after a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    NoPinch,
    PinchOccurs,
    /// Pinch at normalised arc length in `[s_min, s_max]`.
    PinchLocation {
        s_min: f64,
        s_max: f64,
    },
    PinchTime {
        target: f64,
        rel_tol: f64,
    },
    /// Largest nodal displacement between the frames at `tau_a` and `tau_b`, mm.
    ShapeSettled {
        tau_a: f64,
        tau_b: f64,
        tol: f64,
    },
    /// `(max − min)/mean` of the distance from the centroid, over all frames.
    NearSpherical {
        max_anisotropy: f64,
    },
    /// Centroid ends below where it started.
    Descends,
    /// Centroid never ends more than `tol` mm below its start.
    NoNetDescent {
        tol: f64,
    },
    PoreRegimeIs {
        regime: PoreRegime,
    },
    /// Height where a pore profile ends.
    PoreEndHeight {
        target: f64,
        rel_tol: f64,
    },
}

impl Check {
    pub fn name(&self) -> String {
        match self {
            Check::NoPinch => "no_pinch".into(),
            Check::PinchOccurs => "pinch_occurs".into(),
            Check::PinchLocation { s_min, s_max } => {
                format!("pinch_location_s_in_[{s_min:.3},{s_max:.3}]")
            }
            Check::PinchTime { target, rel_tol } => format!("pinch_time_{target}_pm_{rel_tol}"),
            Check::ShapeSettled { tau_a, tau_b, .. } => format!("shape_settled_{tau_a}_to_{tau_b}"),
            Check::NearSpherical { .. } => "near_spherical".into(),
            Check::Descends => "descends".into(),
            Check::NoNetDescent { .. } => "no_net_descent".into(),
            Check::PoreRegimeIs { regime } => format!("pore_regime_{regime:?}"),
            Check::PoreEndHeight { target, .. } => format!("pore_end_height_{target}"),
        }
    }
}

fn default_nodes() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub initial_shape: InitialShape,
    pub thermal_schedule: Vec<ThermalStage>,
    #[serde(default)]
    pub params: ParamOverrides,
    pub stop: StopRule,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    pub dtau: f64,
    #[serde(default)]
    pub frame_taus: Vec<f64>,
    /// Fixed `N_T`; derived from the equilibration balance when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_salt: Option<f64>,
    #[serde(default)]
    pub checks: Vec<Check>,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(format!("{}: {m}", self.name)));
        let sched = &self.thermal_schedule;
        if sched.is_empty() {
            return bad("empty thermal schedule".into());
        }
        if sched[0].tau_start != 0.0 {
            return bad(format!(
                "schedule starts at {} instead of 0",
                sched[0].tau_start
            ));
        }
        if sched.windows(2).any(|w| !(w[1].tau_start > w[0].tau_start)) {
            return bad("schedule times must increase strictly".into());
        }
        if sched
            .iter()
            .any(|s| !(s.a0.is_finite() && s.b0.is_finite() && s.tau_start.is_finite()))
        {
            return bad("non-finite schedule entry".into());
        }
        if !(self.dtau > 0.0 && self.dtau.is_finite()) {
            return bad(format!("dtau must be positive, got {}", self.dtau));
        }
        if self.nodes < 16 {
            return bad(format!("nodes {} below 16", self.nodes));
        }
        let limit = self.stop.tau_limit();
        if !(limit > 0.0 && limit.is_finite()) {
            return bad(format!("stop time must be positive, got {limit}"));
        }
        if let StopRule::Steady { tol, .. } = self.stop {
            if !(tol > 0.0) {
                return bad(format!("steady tolerance must be positive, got {tol}"));
            }
        }
        if self.frame_taus.iter().any(|t| !(*t >= 0.0 && *t <= limit)) {
            return bad(format!("frame times must lie in [0, {limit}]"));
        }
        if self.frame_taus.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("frame times must increase strictly".into());
        }
        match self.initial_shape {
            InitialShape::Sphere { radius, centre } if !(radius > 0.0 && centre.is_finite()) => {
                bad(format!("sphere radius must be positive, got {radius}"))
            }
            InitialShape::Capsule { length, radius } if !(length >= 0.0 && radius > 0.0) => bad(
                format!("capsule needs length ≥ 0 and radius > 0, got {length}, {radius}"),
            ),
            InitialShape::Pore { r0, x3_max } if !(r0 > 0.0 && x3_max > 0.0) => bad(format!(
                "pore needs r0 > 0 and x3_max > 0, got {r0}, {x3_max}"
            )),
            _ => Ok(()),
        }
    }

    /// Stage in force at `tau`.
    pub fn stage_at(&self, tau: f64) -> &ThermalStage {
        self.thermal_schedule
            .iter()
            .rev()
            .find(|s| s.tau_start <= tau + TIME_EPS)
            .unwrap_or(&self.thermal_schedule[0])
    }
}

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    #[serde(rename = "type")]
    pub kind: String,
    pub tau: Option<f64>,
    pub s: Option<f64>,
    pub x3: Option<f64>,
}

impl From<PinchEvent> for Event {
    fn from(ev: PinchEvent) -> Self {
        Event {
            kind: "pinch".into(),
            tau: Some(ev.tau),
            s: Some(ev.s_location),
            x3: Some(ev.x3_location),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionResult {
    pub name: String,
    pub passed: bool,
    pub measured: Option<f64>,
    pub expected: String,
}

impl AssertionResult {
    pub fn new(
        name: impl Into<String>,
        passed: bool,
        measured: Option<f64>,
        expected: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            passed,
            measured,
            expected: expected.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub frames_written: usize,
    pub frame_taus: Vec<f64>,
    pub events: Vec<Event>,
    pub assertions: Vec<AssertionResult>,
    pub wall_time_s: f64,
    pub error: Option<String>,
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn new(scenario: impl Into<String>) -> Self {
        Self {
            scenario: scenario.into(),
            frames_written: 0,
            frame_taus: vec![],
            events: vec![],
            assertions: vec![],
            wall_time_s: 0.0,
            error: None,
            notes: vec![],
        }
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.assertions.iter().all(|a| a.passed)
    }

    pub fn pinch(&self) -> Option<&Event> {
        self.events.iter().find(|e| e.kind == "pinch")
    }

    /// Plain-text summary, one line per assertion.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "{}: {} ({} frames, {:.2} s)\n",
            self.scenario,
            if self.passed() { "PASS" } else { "FAIL" },
            self.frames_written,
            self.wall_time_s
        );
        if let Some(e) = &self.error {
            out += &format!("  error: {e}\n");
        }
        for a in &self.assertions {
            let m = a.measured.map_or("n/a".to_string(), |v| format!("{v:.6e}"));
            out += &format!(
                "  [{}] {} measured={} expected {}\n",
                if a.passed { "pass" } else { "FAIL" },
                a.name,
                m,
                a.expected
            );
        }
        for n in &self.notes {
            out += &format!("  note: {n}\n");
        }
        out
    }
}

/// Report plus the data a run produced.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub report: RunReport,
    pub frames: Vec<BrineState>,
    pub pore: Option<PoreProfile>,
}

pub fn run_scenario(scenario: &Scenario, params: &ModelParams) -> RunReport {
    run_scenario_frames(scenario, params).report
}

/// Runs a scenario and keeps the frames at its listed times.
pub fn run_scenario_frames(scenario: &Scenario, params: &ModelParams) -> ScenarioOutput {
    let start = Instant::now();
    let mut out = ScenarioOutput {
        report: RunReport::new(&scenario.name),
        frames: vec![],
        pore: None,
    };
    let result = match scenario.initial_shape {
        InitialShape::Pore { r0, x3_max } => run_pore(scenario, params, r0, x3_max, &mut out),
        _ => run_evolution(scenario, params, &mut out),
    };
    if let Err(e) = result {
        out.report.error = Some(format!("{}: {e}", scenario.name));
        for c in &scenario.checks {
            if !out.report.assertions.iter().any(|a| a.name == c.name()) {
                out.report.assertions.push(AssertionResult::new(
                    c.name(),
                    false,
                    None,
                    "run did not complete",
                ));
            }
        }
    }
    out.report.frames_written = out.frames.len();
    out.report.frame_taus = out.frames.iter().map(|f| f.tau).collect();
    out.report.wall_time_s = start.elapsed().as_secs_f64();
    out
}

fn run_pore(
    scenario: &Scenario,
    base: &ModelParams,
    r0: f64,
    x3_max: f64,
    out: &mut ScenarioOutput,
) -> Result<(), ScenarioError> {
    scenario.validate()?;
    let params = scenario.params.apply(base);
    params.validate()?;
    let stage = scenario.thermal_schedule[0];
    let prof = equilibrium_pore(r0, stage.a0, stage.b0, x3_max, &params)?;
    let regime = classify_pore_regime(&prof);
    out.report.notes.push(format!(
        "a0 = {} °C, b0 = {} °C/mm, N0 = {:.6} %, regime {regime:?}, ends at x3 = {:.6} mm ({:?})",
        stage.a0,
        stage.b0,
        prof.n0,
        prof.end_x3(),
        prof.termination
    ));
    if regime == PoreRegime::PinchOff {
        out.report.events.push(Event {
            kind: "pinch".into(),
            tau: None,
            s: None,
            x3: Some(prof.end_x3()),
        });
    }
    for c in &scenario.checks {
        let a = match *c {
            Check::PoreRegimeIs { regime: want } => AssertionResult::new(
                c.name(),
                regime == want,
                None,
                format!("{want:?}, got {regime:?}"),
            ),
            Check::PoreEndHeight { target, rel_tol } => {
                let x = prof.end_x3();
                AssertionResult::new(
                    c.name(),
                    regime == PoreRegime::PinchOff && (x / target - 1.0).abs() <= rel_tol,
                    Some(x),
                    format!("pinch at {target} mm ± {}%", rel_tol * 100.0),
                )
            }
            Check::PinchOccurs => AssertionResult::new(
                c.name(),
                regime == PoreRegime::PinchOff,
                Some(prof.end_x3()),
                "profile pinches",
            ),
            Check::NoPinch => AssertionResult::new(
                c.name(),
                regime != PoreRegime::PinchOff,
                Some(prof.end_x3()),
                "profile does not pinch",
            ),
            _ => AssertionResult::new(c.name(), false, None, "not applicable to a static pore"),
        };
        out.report.assertions.push(a);
    }
    out.pore = Some(prof);
    Ok(())
}

fn initial_curve(scenario: &Scenario) -> Result<crate::stefan::InterfaceCurve, ScenarioError> {
    Ok(match scenario.initial_shape {
        InitialShape::Sphere { radius, centre } => sphere(scenario.nodes, radius, centre)?,
        InitialShape::Capsule { length, radius } => capsule(scenario.nodes, length, radius)?,
        InitialShape::Pore { .. } => {
            return Err(ScenarioError::Invalid("a pore has no evolution".into()))
        }
    })
}

fn run_evolution(
    scenario: &Scenario,
    base: &ModelParams,
    out: &mut ScenarioOutput,
) -> Result<(), ScenarioError> {
    scenario.validate()?;
    let params = scenario.params.apply(base);
    params.validate()?;
    let curve = initial_curve(scenario)?;
    let first = scenario.thermal_schedule[0].profile();
    let total_salt = match scenario.total_salt {
        Some(n) => n,
        None => {
            let n = mean_velocity_salt(&curve, &first, &params)?;
            out.report.notes.push(format!(
                "N_T = {n:.9e} %·mm³ from zero mean velocity at the first stage"
            ));
            n
        }
    };
    let mut state = BrineState {
        curve,
        total_salt,
        tau: 0.0,
    };
    let initial = state.clone();
    let tau_end = scenario.stop.tau_limit();
    let mut next_frame = 0;
    let mut pinch = None;
    let mut newton_total = 0usize;
    let mut spread = 0.0f64;
    let take_frames = |state: &BrineState, frames: &mut Vec<BrineState>, next: &mut usize| {
        while *next < scenario.frame_taus.len()
            && scenario.frame_taus[*next] <= state.tau + TIME_EPS
        {
            frames.push(state.clone());
            *next += 1;
        }
    };
    take_frames(&state, &mut out.frames, &mut next_frame);
    let mut result = Ok(());
    while state.tau < tau_end - TIME_EPS {
        let stage = scenario.stage_at(state.tau);
        let mut target = tau_end;
        if let Some(s) = scenario
            .thermal_schedule
            .iter()
            .find(|s| s.tau_start > state.tau + TIME_EPS)
        {
            target = target.min(s.tau_start);
        }
        if let Some(&f) = scenario.frame_taus.get(next_frame) {
            target = target.min(f);
        }
        let h = scenario.dtau.min(target - state.tau);
        let step_out = match step_backward_euler(&state, &stage.profile(), h, &params) {
            Ok(s) => s,
            Err(e) => {
                result = Err(ScenarioError::Invalid(format!(
                    "step at tau = {}: {e}",
                    state.tau
                )));
                break;
            }
        };
        newton_total += step_out.newton_iterations;
        state = step_out.state;
        spread = spread.max(arc_length_spread(&state.curve));
        if (state.tau - target).abs() <= TIME_EPS {
            state.tau = target;
        }
        if let Some(ev) = step_out.pinch {
            pinch = Some(ev);
            out.report.events.push(ev.into());
            break;
        }
        take_frames(&state, &mut out.frames, &mut next_frame);
        if let StopRule::Steady { tol, .. } = scenario.stop {
            let last_stage = scenario.thermal_schedule.last().unwrap();
            if state.tau >= last_stage.tau_start - TIME_EPS {
                let v = normal_velocity(&state, &stage.profile(), &params)?;
                if v.iter().all(|x| x.abs() < tol) {
                    out.report
                        .notes
                        .push(format!("steady at tau = {}", state.tau));
                    break;
                }
            }
        }
    }
    out.report.notes.push(format!(
        "stopped at tau = {:.6} after {newton_total} Newton iterations",
        state.tau
    ));
    out.report.notes.push(format!(
        "largest arc-length spread after a step {spread:.3e}"
    ));
    if spread > 0.01 {
        result = result.and(Err(ScenarioError::Invalid(format!(
            "node spacing spread {spread:.3e} exceeds 1%"
        ))));
    }
    if pinch.is_some() {
        out.frames.push(state.clone());
    }
    result?;
    evaluate_checks(
        scenario,
        &initial,
        &state,
        pinch,
        &out.frames,
        &mut out.report,
    );
    Ok(())
}

fn max_displacement(a: &BrineState, b: &BrineState) -> f64 {
    a.curve
        .r
        .iter()
        .zip(&b.curve.r)
        .chain(a.curve.x3.iter().zip(&b.curve.x3))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `(max − min)/mean` of the nodal distance from the centroid.
pub fn radial_anisotropy(state: &BrineState) -> f64 {
    let c = centroid_x3(&state.curve);
    let d: Vec<f64> = state
        .curve
        .r
        .iter()
        .zip(&state.curve.x3)
        .map(|(r, x)| r.hypot(x - c))
        .collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    (hi - lo) / mean
}

fn frame_at(frames: &[BrineState], tau: f64) -> Option<&BrineState> {
    frames.iter().find(|f| (f.tau - tau).abs() <= 1e-6)
}

fn evaluate_checks(
    scenario: &Scenario,
    initial: &BrineState,
    last: &BrineState,
    pinch: Option<PinchEvent>,
    frames: &[BrineState],
    report: &mut RunReport,
) {
    let descent = centroid_x3(&last.curve) - centroid_x3(&initial.curve);
    for c in &scenario.checks {
        let name = c.name();
        let a = match *c {
            Check::NoPinch => AssertionResult::new(
                name,
                pinch.is_none(),
                pinch.map(|p| p.tau),
                format!("no pinch by tau = {}", last.tau),
            ),
            Check::PinchOccurs => AssertionResult::new(
                name,
                pinch.is_some(),
                pinch.map(|p| p.tau),
                format!("pinch by tau = {}", scenario.stop.tau_limit()),
            ),
            Check::PinchLocation { s_min, s_max } => {
                let s = pinch.map(|p| p.s_location);
                AssertionResult::new(
                    name,
                    s.is_some_and(|s| s >= s_min && s <= s_max),
                    s,
                    format!("s in [{s_min}, {s_max}]"),
                )
            }
            Check::PinchTime { target, rel_tol } => {
                let t = pinch.map(|p| p.tau);
                AssertionResult::new(
                    name,
                    t.is_some_and(|t| (t / target - 1.0).abs() <= rel_tol),
                    t,
                    format!("tau = {target} ± {}%", rel_tol * 100.0),
                )
            }
            Check::ShapeSettled { tau_a, tau_b, tol } => {
                let d = frame_at(frames, tau_a)
                    .zip(frame_at(frames, tau_b))
                    .map(|(a, b)| max_displacement(a, b));
                AssertionResult::new(name, d.is_some_and(|d| d < tol), d, format!("< {tol} mm"))
            }
            Check::NearSpherical { max_anisotropy } => {
                let m = frames
                    .iter()
                    .map(radial_anisotropy)
                    .fold(radial_anisotropy(initial), f64::max);
                AssertionResult::new(
                    name,
                    m < max_anisotropy,
                    Some(m),
                    format!("< {max_anisotropy}"),
                )
            }
            Check::Descends => AssertionResult::new(
                name,
                descent < 0.0,
                Some(descent),
                "centroid displacement < 0",
            ),
            Check::NoNetDescent { tol } => AssertionResult::new(
                name,
                descent >= -tol,
                Some(descent),
                format!("centroid displacement ≥ −{tol} mm"),
            ),
            Check::PoreRegimeIs { .. } | Check::PoreEndHeight { .. } => {
                AssertionResult::new(name, false, None, "applies to static pores only")
            }
        };
        report.assertions.push(a);
    }
}

fn contracting() -> ParamOverrides {
    ParamOverrides {
        curvature_drive: Some(CurvatureDrive::Contracting),
        ..Default::default()
    }
}

fn stage(tau_start: f64, a0: f64, b0: f64) -> ThermalStage {
    ThermalStage { tau_start, a0, b0 }
}

fn tube(
    name: &str,
    schedule: Vec<ThermalStage>,
    stop: StopRule,
    frames: Vec<f64>,
    checks: Vec<Check>,
) -> Scenario {
    Scenario {
        name: name.into(),
        initial_shape: InitialShape::Capsule {
            length: 4.0,
            radius: 0.4,
        },
        thermal_schedule: schedule,
        params: contracting(),
        stop,
        nodes: 64,
        dtau: 2e-3,
        frame_taus: frames,
        total_salt: None,
        checks,
    }
}

/// Built-in scenario names.
pub const BUILTIN_NAMES: [&str; 4] = ["sphere", "tube-A", "tube-B", "tube-C"];

/// Built-in scenario by name. Gradients are in °C/mm.
pub fn builtin(name: &str) -> Option<Scenario> {
    Some(match name {
        "sphere" => Scenario {
            name: name.into(),
            initial_shape: InitialShape::Sphere {
                radius: 0.5,
                centre: 0.0,
            },
            thermal_schedule: vec![stage(0.0, -2.0, 0.002), stage(1.0, -4.0, 0.014)],
            params: contracting(),
            stop: StopRule::TauEnd { tau_end: 5.0 },
            nodes: 64,
            dtau: 2e-3,
            frame_taus: vec![0.0, 2.0, 3.0, 4.0, 5.0],
            total_salt: None,
            checks: vec![
                Check::NoPinch,
                Check::NearSpherical {
                    max_anisotropy: 0.1,
                },
                Check::Descends,
            ],
        },
        "tube-A" => tube(
            name,
            vec![stage(0.0, -2.0, 0.0), stage(1.0, -6.0, 0.0)],
            StopRule::TauEnd { tau_end: 5.0 },
            vec![1.0, 3.0, 4.0, 5.0],
            vec![
                Check::NoPinch,
                Check::ShapeSettled {
                    tau_a: 4.0,
                    tau_b: 5.0,
                    tol: 1e-3,
                },
            ],
        ),
        "tube-B" => tube(
            name,
            vec![stage(0.0, -2.0, 0.0), stage(1.0, -10.0, 0.014)],
            StopRule::Pinch { tau_max: 8.0 },
            vec![0.0, 1.0, 1.5, 2.0, 2.58],
            vec![
                Check::PinchOccurs,
                Check::PinchLocation {
                    s_min: 1.0 / 3.0,
                    s_max: 2.0 / 3.0,
                },
                Check::PinchTime {
                    target: 2.58,
                    rel_tol: 0.3,
                },
                Check::NoNetDescent { tol: 1e-3 },
            ],
        ),
        "tube-C" => tube(
            name,
            vec![stage(0.0, -2.0, 0.0), stage(1.0, -4.0, 0.014)],
            StopRule::Pinch { tau_max: 8.0 },
            vec![1.0, 3.0, 4.0, 4.87],
            vec![
                Check::PinchOccurs,
                Check::PinchLocation {
                    s_min: 0.8,
                    s_max: 1.0,
                },
                Check::PinchTime {
                    target: 4.87,
                    rel_tol: 0.3,
                },
            ],
        ),
        _ => return None,
    })
}

/// Aggregate of concurrent scenario runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub runs: Vec<RunReport>,
    pub assertions: Vec<AssertionResult>,
    pub wall_time_s: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.runs.iter().all(RunReport::passed) && self.assertions.iter().all(|a| a.passed)
    }
}

/// Runs scenarios on separate threads and keeps their outputs in order.
pub fn run_many(scenarios: &[Scenario], params: &ModelParams) -> Vec<ScenarioOutput> {
    std::thread::scope(|s| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|sc| s.spawn(move || run_scenario_frames(sc, params)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    })
}

/// Cross-run checks of the built-in suite.
pub fn suite_assertions(reports: &[RunReport]) -> Vec<AssertionResult> {
    let tau = |name: &str| {
        reports
            .iter()
            .find(|r| r.scenario == name)
            .and_then(|r| r.pinch())
            .and_then(|e| e.tau)
    };
    let (b, c) = (tau("tube-B"), tau("tube-C"));
    vec![AssertionResult::new(
        "tube-B_pinches_before_tube-C",
        matches!((b, c), (Some(b), Some(c)) if b < c),
        match (b, c) {
            (Some(b), Some(c)) => Some(c - b),
            _ => None,
        },
        "tau_C − tau_B > 0",
    )]
}

/// All built-ins, run concurrently.
pub fn run_builtin_suite(params: &ModelParams) -> (SuiteReport, Vec<ScenarioOutput>) {
    let start = Instant::now();
    let scenarios: Vec<Scenario> = BUILTIN_NAMES.iter().filter_map(|n| builtin(n)).collect();
    let outputs = run_many(&scenarios, params);
    let runs: Vec<RunReport> = outputs.iter().map(|o| o.report.clone()).collect();
    let assertions = suite_assertions(&runs);
    (
        SuiteReport {
            runs,
            assertions,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
        outputs,
    )
}

/// Pore gradients of the regime sweep, °C/mm, with the expected regimes.
pub const PORE_SWEEP_GRADIENTS: [(f64, PoreRegime); 3] = [
    (0.0015, PoreRegime::Tapered),
    (0.0032, PoreRegime::Oscillatory),
    (0.015, PoreRegime::PinchOff),
];
pub const PORE_SWEEP_A0: f64 = -4.0;
pub const PORE_SWEEP_R0: f64 = 2.0;
pub const PORE_SWEEP_X3_MAX: f64 = 40.0;
pub const PORE_SWEEP_PINCH_HEIGHT: f64 = 38.7;

/// Static pore scenario.
pub fn pore_scenario(
    name: &str,
    r0: f64,
    a0: f64,
    b0: f64,
    x3_max: f64,
    checks: Vec<Check>,
) -> Scenario {
    Scenario {
        name: name.into(),
        initial_shape: InitialShape::Pore { r0, x3_max },
        thermal_schedule: vec![stage(0.0, a0, b0)],
        params: ParamOverrides::default(),
        stop: StopRule::TauEnd { tau_end: 1.0 },
        nodes: 64,
        dtau: 1.0,
        frame_taus: vec![],
        total_salt: None,
        checks,
    }
}

/// Pore profiles across the three gradients of the regime sweep.
pub fn run_pore_sweep(params: &ModelParams) -> RunReport {
    let start = Instant::now();
    let mut report = RunReport::new("pore-sweep");
    report
        .notes
        .push(format!("a0 = {PORE_SWEEP_A0} °C, r0 = {PORE_SWEEP_R0} mm"));
    for (b0, regime) in PORE_SWEEP_GRADIENTS {
        let mut checks = vec![Check::PoreRegimeIs { regime }];
        if regime == PoreRegime::PinchOff {
            checks.push(Check::PoreEndHeight {
                target: PORE_SWEEP_PINCH_HEIGHT,
                rel_tol: 0.05,
            });
        }
        let sc = pore_scenario(
            &format!("pore-b0-{b0}"),
            PORE_SWEEP_R0,
            PORE_SWEEP_A0,
            b0,
            PORE_SWEEP_X3_MAX,
            checks,
        );
        let r = run_scenario(&sc, params);
        merge(&mut report, r, &format!("b0={b0}"));
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    report
}

fn merge(into: &mut RunReport, from: RunReport, tag: &str) {
    for mut a in from.assertions {
        a.name = format!("{tag}:{}", a.name);
        into.assertions.push(a);
    }
    into.events.extend(from.events);
    into.notes
        .extend(from.notes.into_iter().map(|n| format!("{tag}: {n}")));
    if let Some(e) = from.error {
        into.error.get_or_insert(e);
    }
}

/// Least-squares slope of `ln e` against `ln h`.
pub fn fitted_order(h: &[f64], e: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = h.iter().zip(e).map(|(a, b)| (a.ln(), b.ln())).collect();
    let m = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    sxy / sxx
}

/// Equivalent-volume radius of a closed curve.
fn volume_radius(state: &BrineState) -> Result<f64, ScenarioError> {
    let v = crate::stefan::enclosed_volume(&state.curve)?;
    Ok((3.0 * v / (4.0 * PI)).cbrt())
}

/// Radius of a sphere under `dR/dτ = sgn/R + N_T/((4π/3)R³) + βΔΘ`.
pub fn sphere_radius_oracle(
    r0: f64,
    total_salt: f64,
    delta_theta: f64,
    tau: f64,
    rtol: f64,
    params: &ModelParams,
) -> Result<f64, ScenarioError> {
    let sign = -params.curvature_drive.kappa_sign();
    let beta = params.beta;
    let rhs = move |_t: f64, y: &[f64; 1]| -> [f64; 1] {
        let r = y[0];
        [sign / r + total_salt / (4.0 / 3.0 * PI * r * r * r) + beta * delta_theta]
    };
    let opts = OdeOptions {
        rtol,
        atol: rtol * 1e-3,
        h_init: 1e-5,
        h_max: tau / 10.0,
        max_steps: 10_000_000,
    };
    let none: [fn(f64, &[f64; 1]) -> f64; 0] = [];
    let sol = integrate(rhs, 0.0, [r0], tau, &none, &opts)
        .map_err(|e| ScenarioError::Invalid(format!("oracle: {e}")))?;
    Ok(sol.last().1[0])
}

pub const CONVERGENCE_DTAUS: [f64; 3] = [4e-3, 2e-3, 1e-3];
pub const CONVERGENCE_NODES: [usize; 4] = [32, 64, 128, 256];

/// Temporal order on a shrinking sphere against the scalar oracle, and
/// spatial order of the sphere curvature residual.
pub fn run_convergence_study(params: &ModelParams) -> RunReport {
    let start = Instant::now();
    let mut report = RunReport::new("convergence");
    if let Err(e) = convergence_body(params, &mut report) {
        report.error = Some(e.to_string());
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    report
}

fn convergence_body(base: &ModelParams, report: &mut RunReport) -> Result<(), ScenarioError> {
    let mut params = *base;
    params.curvature_drive = CurvatureDrive::Contracting;
    params.delta_g = 0.0;
    let (r0, tau_end, n) = (0.5, 0.08, 256);
    let thermal = ThermalProfile {
        a0: params.theta_star_celsius(),
        b0: 0.0,
    };
    let reference = sphere_radius_oracle(r0, 0.0, 0.0, tau_end, 1e-10, &params)?;
    let halved = sphere_radius_oracle(r0, 0.0, 0.0, tau_end, 5e-11, &params)?;
    let oracle_shift = (reference - halved).abs();
    report.assertions.push(AssertionResult::new(
        "oracle_tolerance_halving",
        oracle_shift < 1e-8,
        Some(oracle_shift),
        "< 1e-8",
    ));
    report.notes.push(format!(
        "shrinking sphere R0 = {r0} mm under curvature flow to tau = {tau_end}, n = {n}; oracle R = {reference:.12}"
    ));
    let mut errs = vec![];
    for &dtau in &CONVERGENCE_DTAUS {
        let mut st = BrineState {
            curve: sphere(n, r0, 0.0)?,
            total_salt: 0.0,
            tau: 0.0,
        };
        let steps = (tau_end / dtau).round() as usize;
        for _ in 0..steps {
            st = step_backward_euler(&st, &thermal, dtau, &params)?.state;
        }
        let e = (volume_radius(&st)? - reference).abs();
        report
            .notes
            .push(format!("dtau = {dtau}: |R − R_oracle| = {e:.6e}"));
        errs.push(e);
    }
    let p_t = fitted_order(&CONVERGENCE_DTAUS, &errs);
    report.assertions.push(AssertionResult::new(
        "temporal_order",
        (0.8..=1.2).contains(&p_t),
        Some(p_t),
        "in [0.8, 1.2]",
    ));
    let mut kerrs = vec![];
    let mut hs = vec![];
    for &m in &CONVERGENCE_NODES {
        let c = sphere(m, r0, 0.0)?;
        let k = curvature(&c)?;
        let e = k.iter().map(|k| (k + 1.0 / r0).abs()).fold(0.0, f64::max);
        report
            .notes
            .push(format!("n = {m}: max |κ₀ + 1/R| = {e:.6e}"));
        kerrs.push(e);
        hs.push(1.0 / m as f64);
    }
    let p_s = fitted_order(&hs, &kerrs);
    report.assertions.push(AssertionResult::new(
        "spatial_order",
        (1.7..=2.3).contains(&p_s),
        Some(p_s),
        "in [1.7, 2.3]",
    ));
    Ok(())
}

pub const DRIFT_GRADIENTS: [f64; 3] = [0.004, 0.008, 0.014];

/// Drift speed of a balanced sphere under a gradient, mm per unit `τ`.
pub fn sphere_drift(b0: f64, params: &ModelParams) -> Result<f64, ScenarioError> {
    let thermal = ThermalProfile { a0: -4.0, b0 };
    let curve = sphere(64, 0.5, 0.0)?;
    let total_salt = mean_velocity_salt(&curve, &thermal, params)?;
    let mut st = BrineState {
        curve,
        total_salt,
        tau: 0.0,
    };
    let mut frames = vec![st.clone()];
    for _ in 0..20 {
        st = step_backward_euler(&st, &thermal, 0.01, params)?.state;
        frames.push(st.clone());
    }
    Ok(drift_velocity(&frames)?)
}

/// Drift velocity against gradient with a through-origin fit.
pub fn run_drift_sweep(params: &ModelParams) -> RunReport {
    let start = Instant::now();
    let mut report = RunReport::new("drift");
    if let Err(e) = drift_body(params, &mut report) {
        report.error = Some(e.to_string());
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    report
}

fn drift_body(base: &ModelParams, report: &mut RunReport) -> Result<(), ScenarioError> {
    let mut params = *base;
    params.curvature_drive = CurvatureDrive::Contracting;
    let mut level = params;
    level.delta_g = 0.0;
    let control = sphere_drift(0.0, &level)?;
    report.assertions.push(AssertionResult::new(
        "zero_gradient_control",
        control.abs() < 1e-8,
        Some(control),
        "|drift| < 1e-8 without stratification",
    ));
    let stratified = sphere_drift(0.0, &params)?;
    report.notes.push(format!(
        "b0 = 0 with delta_g = {}: drift {stratified:.6e} mm per tau",
        params.delta_g
    ));
    let v: Vec<f64> = DRIFT_GRADIENTS
        .iter()
        .map(|&b| sphere_drift(b, &params))
        .collect::<Result<_, _>>()?;
    for (b, d) in DRIFT_GRADIENTS.iter().zip(&v) {
        report
            .notes
            .push(format!("b0 = {b} °C/mm: drift {d:.6e} mm per tau"));
    }
    let sxy: f64 = DRIFT_GRADIENTS.iter().zip(&v).map(|(b, d)| b * d).sum();
    let sxx: f64 = DRIFT_GRADIENTS.iter().map(|b| b * b).sum();
    let k = sxy / sxx;
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let ss_res: f64 = DRIFT_GRADIENTS
        .iter()
        .zip(&v)
        .map(|(b, d)| (d - k * b).powi(2))
        .sum();
    let ss_tot: f64 = v.iter().map(|d| (d - mean).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    report.notes.push(format!(
        "slope {k:.6e} mm per tau per °C/mm, β = {}",
        params.beta
    ));
    report.assertions.push(AssertionResult::new(
        "through_origin_r2",
        r2 > 0.99,
        Some(r2),
        "> 0.99",
    ));
    let ratio = v[1] / v[0];
    report.assertions.push(AssertionResult::new(
        "doubling_gradient_doubles_drift",
        (ratio / 2.0 - 1.0).abs() <= 0.1,
        Some(ratio),
        "2 ± 10%",
    ));
    report.assertions.push(AssertionResult::new(
        "descends_toward_warm",
        v.iter().all(|d| *d < 0.0),
        Some(v[2]),
        "drift < 0 for b0 > 0",
    ));
    Ok(())
}

/// Interface widths of the 1-D checks.
pub const PHASEFIELD_H: [f64; 4] = [25.0, 50.0, 100.0, 200.0];

/// Totals before and after a run of explicit steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyResult {
    pub h: f64,
    pub steps: usize,
    pub dt: f64,
    pub salt_drift: f64,
    pub energy_drift: f64,
    /// Most negative per-step entropy change relative to `10·dt²`.
    pub worst_entropy_step: f64,
    pub entropy_gain: f64,
}

/// Perturbed front on `24/H` with zero-flux ends.
pub fn perturbed_front(
    h: f64,
    cells_per_unit: usize,
    params: &ModelParams,
) -> Result<Field1D, ScenarioError> {
    let n = 24 * cells_per_unit;
    let grid = Grid1D::new(n, 24.0 / h)?;
    let mut f = Field1D::front(grid, 12.0 / h, 272.9, 0.4, params)?;
    for i in 0..n {
        let z = h * grid.x(i) - 12.0;
        let s = (i as f64 + 0.5) / n as f64;
        f.phi[i] = (f.phi[i] + 0.04 * (-z * z).exp()).clamp(0.0, 1.0);
        f.theta[i] = 272.9 + 0.05 * (2.0 * PI * s).cos();
        f.rho[i] = 0.4 * (1.0 + 0.3 * (2.0 * PI * s).sin());
    }
    Ok(Field1D::new(grid, f.phi, f.theta, f.rho, 0.0)?)
}

/// Conservation and entropy growth over `steps` explicit steps.
pub fn phasefield_consistency(
    h: f64,
    steps: usize,
    params: &ModelParams,
) -> Result<ConsistencyResult, ScenarioError> {
    let mut p = *params;
    p.h = h;
    p.validate()?;
    let mut s = perturbed_front(h, 8, &p)?;
    let dt = stable_dt(&s.grid, &p);
    let d0 = diagnostics(&s, &p)?;
    let slack = 10.0 * dt * dt;
    let mut worst = f64::INFINITY;
    for _ in 0..steps {
        let next = step(&s, dt, &p)?;
        let ds = entropy_increment(&s, &next, &p)?;
        worst = worst.min((ds + slack) / slack);
        s = next;
    }
    let d1 = diagnostics(&s, &p)?;
    Ok(ConsistencyResult {
        h,
        steps,
        dt,
        salt_drift: (d1.total_salt - d0.total_salt).abs() / d0.total_salt,
        energy_drift: (d1.total_internal_energy - d0.total_internal_energy).abs()
            / d0.total_internal_energy.abs(),
        worst_entropy_step: worst - 1.0,
        entropy_gain: d1.total_entropy - d0.total_entropy,
    })
}

/// Front-speed measurement in the stretched variable `z = Hx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontSpeedSetup {
    pub h: f64,
    pub cells_per_unit: usize,
    pub theta0: f64,
    pub rho0: f64,
    /// Mobilities are `mobility_scale/H²`.
    pub mobility_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontSpeedResult {
    pub velocity: f64,
    /// `(B + eρ)/H` averaged over the window.
    pub law: f64,
    pub rel_error: f64,
    pub steps: usize,
}

/// Measures a front placed 14 units from each end, after relaxing for the
/// time the law needs to move it one unit, over a window of two units.
pub fn front_speed(
    setup: &FrontSpeedSetup,
    params: &ModelParams,
) -> Result<FrontSpeedResult, ScenarioError> {
    let h = setup.h;
    let mut p = *params;
    p.h = h;
    p.delta_g = 0.0;
    p.sigma_n = setup.mobility_scale / (h * h);
    p.sigma_theta = setup.mobility_scale / (h * h);
    p.validate()?;
    let grid = Grid1D::new(28 * setup.cells_per_unit, 28.0 / h)?;
    let mut s = Field1D::front(grid, 14.0 / h, setup.theta0, setup.rho0, &p)?;
    let dt = stable_dt(&grid, &p);
    let drive = front_drive(&s, &p)?.abs().max(1.0 / h);
    let relax = 1.0 / drive;
    let mut steps = 0;
    while s.time < relax {
        s = step(&s, dt, &p)?;
        steps += 1;
    }
    let window = 2.0 / drive;
    let every = ((window / dt) / 40.0).ceil() as usize;
    let end = s.time + window;
    let mut frames = vec![s.clone()];
    let mut drives = vec![front_drive(&s, &p)?];
    let mut k = 0;
    while s.time < end {
        s = step(&s, dt, &p)?;
        steps += 1;
        k += 1;
        if k % every == 0 {
            frames.push(s.clone());
            drives.push(front_drive(&s, &p)?);
        }
    }
    front_position(&s)?;
    let velocity = measure_front_velocity(&frames)?;
    let law = sharp_interface_speed(drives.iter().sum::<f64>() / drives.len() as f64, &p);
    Ok(FrontSpeedResult {
        velocity,
        law,
        rel_error: velocity / law - 1.0,
        steps,
    })
}

/// `∫ Φ′² dz` by composite Simpson on `[−12, 12]`.
pub fn front_profile_norm_sq() -> f64 {
    let (a, b, n) = (-12.0f64, 12.0f64, 20_000usize);
    let h = (b - a) / n as f64;
    let f = |z: f64| front_profile_prime(z).powi(2);
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub const FRONT_CELLS_PER_UNIT: usize = 16;
pub const FRONT_MOBILITY_SCALE: f64 = 4.0;

fn salt_setup(h: f64, rho0: f64) -> FrontSpeedSetup {
    FrontSpeedSetup {
        h,
        cells_per_unit: FRONT_CELLS_PER_UNIT,
        theta0: 273.0,
        rho0,
        mobility_scale: FRONT_MOBILITY_SCALE,
    }
}

/// Consecutive-difference orders `log₂((e_k − e_{k+1})/(e_{k+1} − e_{k+2}))`
/// for widths doubling at each entry.
pub fn difference_orders(errors: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = errors.windows(2).map(|w| w[0] - w[1]).collect();
    d.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Conservation, entropy and front-speed checks of the 1-D model.
pub fn run_phasefield_suite(params: &ModelParams, steps: usize) -> RunReport {
    let start = Instant::now();
    let mut report = RunReport::new("phasefield-1d");
    if let Err(e) = phasefield_body(params, steps, &mut report) {
        report.error = Some(e.to_string());
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    report
}

fn phasefield_body(
    params: &ModelParams,
    steps: usize,
    report: &mut RunReport,
) -> Result<(), ScenarioError> {
    let results: Vec<Result<ConsistencyResult, ScenarioError>> = std::thread::scope(|sc| {
        let hs: Vec<_> = PHASEFIELD_H
            .iter()
            .map(|&h| sc.spawn(move || phasefield_consistency(h, steps, params)))
            .collect();
        hs.into_iter()
            .map(|j| j.join().expect("phase-field thread panicked"))
            .collect()
    });
    for r in results {
        let r = r?;
        let tag = format!("H={}", r.h);
        report.assertions.push(AssertionResult::new(
            format!("{tag}:salt_conserved"),
            r.salt_drift < 1e-12,
            Some(r.salt_drift),
            "relative drift < 1e-12",
        ));
        report.assertions.push(AssertionResult::new(
            format!("{tag}:energy_conserved"),
            r.energy_drift < 1e-8,
            Some(r.energy_drift),
            "relative drift < 1e-8",
        ));
        report.assertions.push(AssertionResult::new(
            format!("{tag}:entropy_nondecreasing"),
            r.worst_entropy_step >= 0.0,
            Some(r.worst_entropy_step),
            "every step ΔS ≥ −10dt² (margin ≥ 0)",
        ));
        report.notes.push(format!(
            "{tag}: {} steps of dt = {:.3e}, entropy gain {:.6e}",
            r.steps, r.dt, r.entropy_gain
        ));
    }
    let norm = front_profile_norm_sq();
    report.assertions.push(AssertionResult::new(
        "front_profile_norm",
        (norm - 1.0).abs() < 1e-6,
        Some(norm),
        "1 ± 1e-6",
    ));
    let speeds: Vec<Result<FrontSpeedResult, ScenarioError>> = std::thread::scope(|sc| {
        let hs: Vec<_> = PHASEFIELD_H
            .iter()
            .map(|&h| sc.spawn(move || front_speed(&salt_setup(h, 0.5), params)))
            .collect();
        hs.into_iter()
            .map(|j| j.join().expect("front-speed thread panicked"))
            .collect()
    });
    let mut errors = vec![];
    for (h, r) in PHASEFIELD_H.iter().zip(speeds) {
        let r = r?;
        report.notes.push(format!(
            "H={h}: front speed {:.6e}, law {:.6e}, relative error {:.6e}",
            r.velocity, r.law, r.rel_error
        ));
        errors.push(r.rel_error);
    }
    let orders = difference_orders(&errors);
    for (k, p) in orders.iter().enumerate() {
        report.assertions.push(AssertionResult::new(
            format!(
                "front_speed_order_H{}-{}",
                PHASEFIELD_H[k],
                PHASEFIELD_H[k + 2]
            ),
            (0.8..=1.2).contains(p),
            Some(*p),
            "first order in 1/H: [0.8, 1.2]",
        ));
    }
    let n = errors.len();
    let limit = 2.0 * errors[n - 1] - errors[n - 2];
    report.notes.push(format!(
        "extrapolated H → ∞ relative error {limit:.4e} at {FRONT_CELLS_PER_UNIT} cells per unit width"
    ));
    let half = front_speed(&salt_setup(50.0, 0.25), params)?;
    let full = front_speed(&salt_setup(50.0, 0.5), params)?;
    let ratio = (full.velocity / half.velocity) / (full.law / half.law);
    report.assertions.push(AssertionResult::new(
        "doubling_drive_doubles_speed",
        (ratio - 1.0).abs() <= 0.05,
        Some(ratio),
        "speed ratio over drive ratio 1 ± 5%",
    ));
    let standing = front_speed(
        &FrontSpeedSetup {
            rho0: 0.0,
            ..salt_setup(50.0, 0.0)
        },
        params,
    )?;
    let reference = 1.0 / 50.0;
    report.assertions.push(AssertionResult::new(
        "standing_front",
        standing.velocity.abs() < 1e-3 * reference,
        Some(standing.velocity / reference),
        "|v| < 1e-3 of the unit-drive speed",
    ));
    let freezing = front_speed(
        &FrontSpeedSetup {
            theta0: 272.5,
            ..salt_setup(50.0, 0.0)
        },
        params,
    )?;
    report.assertions.push(AssertionResult::new(
        "freezing_front_advances_into_liquid",
        freezing.velocity < 0.0 && freezing.rel_error.abs() < 0.05,
        Some(freezing.rel_error),
        "v < 0 and within 5% of the law",
    ));
    Ok(())
}
