//! `brine`: command-line driver for the brine inclusion models.

mod config;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use brine_core::model::{ModelParams, TableMetadata};
use brine_core::phasefield::{diagnostics, integrate, stable_dt, Field1D, Grid1D};
use brine_core::scenario::{
    builtin, pore_scenario, run_builtin_suite, run_convergence_study, run_drift_sweep,
    run_phasefield_suite, run_pore_sweep, run_scenario_frames, AssertionResult, Check, RunReport,
    Scenario, BUILTIN_NAMES, PORE_SWEEP_A0, PORE_SWEEP_GRADIENTS, PORE_SWEEP_PINCH_HEIGHT,
    PORE_SWEEP_R0,
};
use brine_core::stefan::{equilibrium_pore, PoreRegime};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{PhaseFieldMode, RunConfig};
use output::{
    write_events, write_fields, write_frames, write_json, write_pore, write_report,
    DiagnosticsFrame,
};

#[derive(Parser)]
#[command(
    name = "brine",
    version,
    about = "Brine inclusion models: pore profiles, interface evolution, 1-D phase field"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set b0=0.015`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory, created when missing.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Static pore profile, or the three-gradient sweep when no b0 is given.
    EquilibriumPore(Common),
    /// Run one scenario, built-in or from the configuration.
    Evolve {
        /// Built-in scenario name.
        #[arg(long)]
        scenario: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Run every built-in scenario concurrently.
    Suite(Common),
    /// Temporal and spatial convergence study.
    Convergence(Common),
    /// Drift speed against thermal gradient.
    Drift(Common),
    /// One-dimensional phase-field trajectory or check suite.
    #[command(name = "phasefield-1d")]
    PhaseField1d(Common),
    /// Print the default parameters as JSON, or a built-in scenario.
    DumpDefaults {
        #[arg(long)]
        scenario: Option<String>,
    },
}

/// Whether all assertions held.
type Passed = bool;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<Passed> {
    match command {
        Command::EquilibriumPore(c) => equilibrium_pore_cmd(&c),
        Command::Evolve { scenario, common } => evolve_cmd(scenario, &common),
        Command::Suite(c) => suite_cmd(&c),
        Command::Convergence(c) => report_cmd(&c, "convergence", run_convergence_study),
        Command::Drift(c) => report_cmd(&c, "drift", run_drift_sweep),
        Command::PhaseField1d(c) => phasefield_cmd(&c),
        Command::DumpDefaults { scenario } => dump_cmd(scenario),
    }
}

fn out_dir(common: &Common, cfg: &RunConfig, command: &str) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| Path::new("brine-out").join(command))
}

/// Writes to stdout, ignoring a closed pipe.
fn say(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn finish(dir: &Path, report: &RunReport) -> Result<Passed> {
    write_report(dir, report)?;
    say(&format!(
        "{}output in {}\n",
        report.summary(),
        dir.display()
    ));
    Ok(report.passed())
}

fn equilibrium_pore_cmd(common: &Common) -> Result<Passed> {
    let cfg = config::load(common.config.as_deref(), &common.set, Some("pore"))?;
    let params = cfg.model_params()?;
    let dir = out_dir(common, &cfg, "equilibrium-pore");
    let pc = &cfg.pore;
    let report = match pc.b0 {
        Some(b0) => {
            let mut checks = vec![];
            let standard = pc.r0 == PORE_SWEEP_R0 && pc.a0 == PORE_SWEEP_A0;
            if let Some((_, regime)) = PORE_SWEEP_GRADIENTS
                .iter()
                .find(|(g, _)| standard && *g == b0)
            {
                checks.push(Check::PoreRegimeIs { regime: *regime });
                if *regime == PoreRegime::PinchOff {
                    checks.push(Check::PoreEndHeight {
                        target: PORE_SWEEP_PINCH_HEIGHT,
                        rel_tol: 0.05,
                    });
                }
            }
            let sc = pore_scenario(
                &format!("pore-b0-{b0}"),
                pc.r0,
                pc.a0,
                b0,
                pc.x3_max,
                checks,
            );
            let out = run_scenario_frames(&sc, &params);
            if let Some(p) = &out.pore {
                write_pore(&dir.join("pore_profile.csv"), p)?;
            }
            write_events(&dir.join("events.json"), &out.report.events)?;
            out.report
        }
        None => {
            let report = run_pore_sweep(&params);
            for (b0, _) in PORE_SWEEP_GRADIENTS {
                let p = equilibrium_pore(PORE_SWEEP_R0, PORE_SWEEP_A0, b0, pc.x3_max, &params)?;
                write_pore(&dir.join(format!("pore_profile_b0_{b0}.csv")), &p)?;
            }
            write_events(&dir.join("events.json"), &report.events)?;
            report
        }
    };
    finish(&dir, &report)
}

fn resolve_scenario(flag: Option<String>, cfg: &RunConfig) -> Result<Scenario> {
    if let Some(name) = flag.or_else(|| cfg.scenario_name.clone()) {
        if cfg.scenario.is_some() {
            bail!("give either a scenario name or an inline scenario, not both");
        }
        return builtin(&name).ok_or_else(|| {
            anyhow!(
                "unknown scenario `{name}`; built-ins are {}",
                BUILTIN_NAMES.join(", ")
            )
        });
    }
    cfg.scenario
        .clone()
        .ok_or_else(|| anyhow!("no scenario: pass --scenario NAME or put one in the configuration"))
}

fn write_scenario_output(
    dir: &Path,
    sc: &Scenario,
    out: &brine_core::scenario::ScenarioOutput,
) -> Result<()> {
    write_json(&dir.join("scenario.json"), sc)?;
    write_frames(&dir.join("frames.csv"), &out.frames)?;
    write_events(&dir.join("events.json"), &out.report.events)?;
    if let Some(p) = &out.pore {
        write_pore(&dir.join("pore_profile.csv"), p)?;
    }
    write_report(dir, &out.report)
}

fn evolve_cmd(flag: Option<String>, common: &Common) -> Result<Passed> {
    let cfg = config::load(common.config.as_deref(), &common.set, None)?;
    let params = cfg.model_params()?;
    let sc = resolve_scenario(flag, &cfg)?;
    sc.validate()?;
    let dir = out_dir(common, &cfg, &format!("evolve/{}", sc.name));
    let out = run_scenario_frames(&sc, &params);
    write_scenario_output(&dir, &sc, &out)?;
    say(&format!(
        "{}output in {}\n",
        out.report.summary(),
        dir.display()
    ));
    if let Some(e) = &out.report.error {
        bail!("{e}");
    }
    Ok(out.report.passed())
}

fn suite_cmd(common: &Common) -> Result<Passed> {
    let cfg = config::load(common.config.as_deref(), &common.set, None)?;
    let params = cfg.model_params()?;
    let dir = out_dir(common, &cfg, "suite");
    let (suite, outputs) = run_builtin_suite(&params);
    for out in &outputs {
        let name = &out.report.scenario;
        let sc = builtin(name).ok_or_else(|| anyhow!("missing built-in {name}"))?;
        write_scenario_output(&dir.join(name), &sc, out)?;
    }
    write_json(&dir.join("suite_report.json"), &suite)?;
    let mut text = String::new();
    for r in &suite.runs {
        text += &r.summary();
    }
    for a in &suite.assertions {
        text += &format!(
            "suite: [{}] {}\n",
            if a.passed { "pass" } else { "FAIL" },
            a.name
        );
    }
    std::fs::write(dir.join("summary.txt"), &text)
        .with_context(|| format!("writing {}", dir.join("summary.txt").display()))?;
    say(&format!("{text}output in {}\n", dir.display()));
    Ok(suite.passed())
}

fn report_cmd(common: &Common, name: &str, f: fn(&ModelParams) -> RunReport) -> Result<Passed> {
    let cfg = config::load(common.config.as_deref(), &common.set, None)?;
    let params = cfg.model_params()?;
    let dir = out_dir(common, &cfg, name);
    let report = f(&params);
    finish(&dir, &report)
}

fn phasefield_cmd(common: &Common) -> Result<Passed> {
    let cfg = config::load(common.config.as_deref(), &common.set, Some("phasefield"))?;
    let mut params = cfg.model_params()?;
    let dir = out_dir(common, &cfg, "phasefield-1d");
    let pf = &cfg.phasefield;
    if pf.mode == PhaseFieldMode::Suite {
        let report = run_phasefield_suite(&params, pf.suite_steps);
        return finish(&dir, &report);
    }
    params.h = pf.h;
    params.validate()?;
    if pf.save_every_steps == 0 {
        bail!("save_every_steps must be positive");
    }
    let n = (pf.z_length * pf.cells_per_unit as f64).round() as usize;
    let grid = Grid1D::new(n, pf.z_length / pf.h)?;
    let init = Field1D::front(grid, pf.x0_z / pf.h, pf.theta0, pf.rho0, &params)?;
    let dt = pf.dt.unwrap_or_else(|| stable_dt(&grid, &params));
    let mut report = RunReport::new("phasefield-1d");
    report.notes.push(format!(
        "H = {}, {n} cells, dt = {dt:.6e}, {} steps",
        pf.h, pf.steps
    ));
    let start = std::time::Instant::now();
    let frames = integrate(&init, dt, pf.steps, pf.save_every_steps, &params)?;
    report.wall_time_s = start.elapsed().as_secs_f64();
    let diags: Vec<DiagnosticsFrame> = frames
        .iter()
        .map(|f| {
            diagnostics(f, &params).map(|d| DiagnosticsFrame {
                time: f.time,
                diagnostics: d,
            })
        })
        .collect::<Result<_, _>>()?;
    write_fields(&dir.join("trajectory.csv"), &frames)?;
    write_json(&dir.join("diagnostics.json"), &diags)?;
    let (first, last) = (&diags[0].diagnostics, &diags[diags.len() - 1].diagnostics);
    let salt = if first.total_salt == 0.0 {
        last.total_salt.abs()
    } else {
        ((last.total_salt - first.total_salt) / first.total_salt).abs()
    };
    let energy = ((last.total_internal_energy - first.total_internal_energy)
        / first.total_internal_energy)
        .abs();
    let slack = 10.0 * dt * dt * pf.save_every_steps as f64;
    let worst = diags
        .windows(2)
        .map(|w| w[1].diagnostics.total_entropy - w[0].diagnostics.total_entropy)
        .fold(f64::INFINITY, f64::min);
    report.assertions.push(AssertionResult::new(
        "salt_conserved",
        salt < 1e-12,
        Some(salt),
        "relative drift < 1e-12",
    ));
    report.assertions.push(AssertionResult::new(
        "energy_conserved",
        energy < 1e-8,
        Some(energy),
        "relative drift < 1e-8",
    ));
    report.assertions.push(AssertionResult::new(
        "entropy_nondecreasing",
        diags.len() < 2 || worst >= -slack,
        worst.is_finite().then_some(worst),
        "ΔS ≥ −10dt² per step between saved frames",
    ));
    report.frames_written = frames.len();
    report.frame_taus = frames.iter().map(|f| f.time).collect();
    finish(&dir, &report)
}

#[derive(Serialize)]
struct Defaults {
    params: ModelParams,
    table: TableMetadata,
}

fn dump_cmd(scenario: Option<String>) -> Result<Passed> {
    let text = match scenario {
        Some(name) => {
            let sc = builtin(&name).ok_or_else(|| {
                anyhow!(
                    "unknown scenario `{name}`; built-ins are {}",
                    BUILTIN_NAMES.join(", ")
                )
            })?;
            serde_json::to_string_pretty(&sc)?
        }
        None => serde_json::to_string_pretty(&Defaults {
            params: ModelParams::defaults(),
            table: TableMetadata::table(),
        })?,
    };
    say(&(text + "\n"));
    Ok(true)
}
