//! Static pore profiles `r(x₃)` balancing curvature against the cryoscopic drive.

use serde::{Deserialize, Serialize};

use super::{InterfaceCurve, StefanError, ThermalProfile, Topology};
use crate::model::ModelParams;
use crate::ode::{integrate, OdeOptions, Termination};

/// Slope magnitude at which the graph `r(x₃)` is declared vertical.
pub const TURNING_SLOPE: f64 = 1e6;
/// Rises smaller than this fraction of `r(0)` are not counted as oscillations.
pub const OSCILLATION_RISE_FRACTION: f64 = 0.025;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoreTermination {
    ReachedEnd,
    RadiusCollapse,
    TurningPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoreRegime {
    Tapered,
    Oscillatory,
    PinchOff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoreProfile {
    pub x3: Vec<f64>,
    pub r: Vec<f64>,
    pub dr_dx3: Vec<f64>,
    /// Salt fixed by `r″(0) = 0`, % weight.
    pub n0: f64,
    pub thermal: ThermalProfile,
    pub termination: PoreTermination,
}

impl PoreProfile {
    pub fn end_x3(&self) -> f64 {
        *self.x3.last().unwrap()
    }

    pub fn end_r(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// Radius at `x` by cubic Hermite interpolation of the stored solution.
    pub fn radius_at(&self, x: f64) -> f64 {
        let k = match self.x3.partition_point(|&t| t <= x) {
            0 => 0,
            k if k >= self.x3.len() => self.x3.len() - 2,
            k => k - 1,
        };
        let (x0, x1) = (self.x3[k], self.x3[k + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (y0, y1, m0, m1) = (self.r[k], self.r[k + 1], self.dr_dx3[k], self.dr_dx3[k + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * m1
    }

    /// Open curve sampled at `n` cell-centred heights in `[0, x_end]`.
    pub fn to_curve(&self, n: usize, x_end: f64) -> Result<InterfaceCurve, StefanError> {
        let x3: Vec<f64> = (0..n)
            .map(|i| (i as f64 + 0.5) / n as f64 * x_end)
            .collect();
        let r = x3.iter().map(|&x| self.radius_at(x)).collect();
        InterfaceCurve::new(r, x3, Topology::OpenPore)
    }
}

/// Integrates the static balance `sgn·κ₀(r) + N₀ + βΘ₀(x₃) = 0` upwards from
/// `r(0) = r0`, `r′(0) = 0`, with `N₀` chosen so that `r″(0) = 0`.
///
/// `Θ₀ = a₀ − b₀x₃`, so positive `b0` is colder upwards. The graph equation
/// `r″ = [1 + p² − 2 sgn r (1 + p²)^{3/2} ξ] / r`, `p = r′`, is integrated in
/// arc length with tangent angle `ψ = atan p`, which stays regular where the
/// graph turns vertical.
pub fn equilibrium_pore(
    r0: f64,
    a0: f64,
    b0: f64,
    x3_max: f64,
    params: &ModelParams,
) -> Result<PoreProfile, StefanError> {
    if !(r0 > 0.0) {
        return Err(StefanError::Invalid(format!(
            "r0 must be positive, got {r0}"
        )));
    }
    if !(x3_max > 0.0) {
        return Err(StefanError::Invalid(format!(
            "x3_max must be positive, got {x3_max}"
        )));
    }
    let sign = params.curvature_drive.kappa_sign();
    let ts = params.theta_star_celsius();
    let beta = params.beta;
    let thermal = ThermalProfile { a0, b0 };
    // κ₀(0) = −1/(2r0) = −sgn·ξ(0)
    let n0 = sign / (2.0 * r0) - beta * (a0 - ts);
    // arc-length form: x′ = cos ψ, r′ = sin ψ, ψ′ = (cos ψ − 2 sgn r ξ)/r
    let rhs = move |_s: f64, y: &[f64; 3]| -> [f64; 3] {
        let (r, x, psi) = (y[0], y[1], y[2]);
        let xi = n0 + beta * (thermal.temperature(x) - ts);
        [psi.sin(), psi.cos(), (psi.cos() - 2.0 * sign * r * xi) / r]
    };
    let r_stop = params.r_pinch;
    let collapse = move |_s: f64, y: &[f64; 3]| y[0] - r_stop;
    let vertical = 1.0 / (1.0 + TURNING_SLOPE * TURNING_SLOPE).sqrt();
    let turning = move |_s: f64, y: &[f64; 3]| y[2].cos() - vertical;
    let top = move |_s: f64, y: &[f64; 3]| x3_max - y[1];
    let events: [&dyn Fn(f64, &[f64; 3]) -> f64; 3] = [&top, &collapse, &turning];
    let opts = OdeOptions {
        rtol: 1e-9,
        atol: 1e-12,
        h_init: 1e-3,
        h_max: x3_max / 200.0,
        max_steps: 2_000_000,
    };
    let sol = integrate(rhs, 0.0, [r0, 0.0, 0.0], 1e3 * x3_max, &events, &opts)?;
    let termination = match sol.termination {
        Termination::Event(0) => PoreTermination::ReachedEnd,
        Termination::Event(1) => PoreTermination::RadiusCollapse,
        Termination::Event(_) => PoreTermination::TurningPoint,
        Termination::End => {
            return Err(StefanError::Invalid(
                "pore profile never reached x3_max".into(),
            ))
        }
    };
    let mut x3: Vec<f64> = sol.y.iter().map(|y| y[1]).collect();
    if termination == PoreTermination::ReachedEnd {
        *x3.last_mut().unwrap() = x3_max;
    }
    Ok(PoreProfile {
        x3,
        r: sol.y.iter().map(|y| y[0]).collect(),
        dr_dx3: sol.y.iter().map(|y| y[2].tan()).collect(),
        n0,
        thermal,
        termination,
    })
}

/// Regime of a pore profile.
///
/// `PinchOff` when the radius collapses or the graph turns vertical while
/// narrowing. Otherwise `Oscillatory` when at least two sign changes of `r′`
/// belong to a rise of at least `OSCILLATION_RISE_FRACTION·r(0)` from a
/// minimum to the following maximum, else `Tapered`.
pub fn classify_pore_regime(profile: &PoreProfile) -> PoreRegime {
    match profile.termination {
        PoreTermination::RadiusCollapse => return PoreRegime::PinchOff,
        PoreTermination::TurningPoint if *profile.dr_dx3.last().unwrap() < 0.0 => {
            return PoreRegime::PinchOff
        }
        _ => {}
    }
    let threshold = OSCILLATION_RISE_FRACTION * profile.r[0];
    let mut last_min: Option<f64> = None;
    let mut counted = 0;
    for k in 1..profile.dr_dx3.len() {
        let (a, b) = (profile.dr_dx3[k - 1], profile.dr_dx3[k]);
        if a < 0.0 && b >= 0.0 {
            last_min = Some(profile.r[k]);
        } else if a > 0.0 && b <= 0.0 {
            if let Some(m) = last_min.take() {
                if profile.r[k] - m >= threshold {
                    counted += 2;
                }
            }
        }
    }
    if counted >= 2 {
        PoreRegime::Oscillatory
    } else {
        PoreRegime::Tapered
    }
}
