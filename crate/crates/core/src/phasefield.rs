//! One-dimensional diffuse-interface solver with zero-flux boundaries.
//!
//! Unknowns are the phase `φ`, the absolute temperature `θ` (°K) and the
//! relative salt density `ρ`. The conserved variables advanced in time are
//! `φ`, the internal energy `u = θ − b(θ)W₁(φ)` and the salt `N = w̃ρ` with
//! `w̃ = max(φe^{−W₁(φ)}, ε_m)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    front_profile, internal_energy_density, internal_energy_dtheta, latent_big_b, liquid_weight,
    w0, w0_prime, w1, w1_prime, ModelError, ModelParams,
};

/// Temperature bracket for recovering `θ` from `u`, °K.
pub const THETA_BRACKET: (f64, f64) = (150.0, 400.0);
pub const THETA_NEWTON_MAX_ITER: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseFieldError {
    #[error("integration failure in cell {cell}: {detail}")]
    Integration { cell: usize, detail: String },
    #[error("time step {dt:e} exceeds the stability bound {limit:e}")]
    Stability { dt: f64, limit: f64 },
    #[error("temperature recovery in cell {cell} did not converge after {iterations} iterations")]
    Newton { cell: usize, iterations: usize },
    #[error("front detection: {0}")]
    Front(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub n_cells: usize,
    pub domain_length: f64,
    pub dx: f64,
}

impl Grid1D {
    pub fn new(n_cells: usize, domain_length: f64) -> Result<Self, PhaseFieldError> {
        if n_cells < 8 {
            return Err(PhaseFieldError::Invalid(format!(
                "n_cells {n_cells} below 8"
            )));
        }
        if !(domain_length > 0.0 && domain_length.is_finite()) {
            return Err(PhaseFieldError::Invalid(format!(
                "domain_length must be positive, got {domain_length}"
            )));
        }
        Ok(Self {
            n_cells,
            domain_length,
            dx: domain_length / n_cells as f64,
        })
    }

    /// Cell centre `x_i = (i + ½)dx`.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.x(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field1D {
    pub grid: Grid1D,
    pub phi: Vec<f64>,
    /// Absolute temperature, °K.
    pub theta: Vec<f64>,
    pub rho: Vec<f64>,
    pub time: f64,
}

impl Field1D {
    pub fn new(
        grid: Grid1D,
        phi: Vec<f64>,
        theta: Vec<f64>,
        rho: Vec<f64>,
        time: f64,
    ) -> Result<Self, PhaseFieldError> {
        let n = grid.n_cells;
        if phi.len() != n || theta.len() != n || rho.len() != n {
            return Err(PhaseFieldError::Invalid(format!(
                "field lengths {}/{}/{} differ from n_cells {n}",
                phi.len(),
                theta.len(),
                rho.len()
            )));
        }
        let state = Self {
            grid,
            phi,
            theta,
            rho,
            time,
        };
        state.check()?;
        Ok(state)
    }

    /// Front `φ = Φ(H(x − x0))` with liquid on the left and uniform `θ`, `ρ`.
    pub fn front(
        grid: Grid1D,
        x0: f64,
        theta: f64,
        rho: f64,
        params: &ModelParams,
    ) -> Result<Self, PhaseFieldError> {
        let phi = grid
            .nodes()
            .iter()
            .map(|&x| front_profile(params.h * (x - x0)))
            .collect();
        let n = grid.n_cells;
        Self::new(grid, phi, vec![theta; n], vec![rho; n], 0.0)
    }

    fn check(&self) -> Result<(), PhaseFieldError> {
        for i in 0..self.grid.n_cells {
            let (p, t, r) = (self.phi[i], self.theta[i], self.rho[i]);
            if !(p.is_finite() && t.is_finite() && r.is_finite()) {
                return Err(PhaseFieldError::Integration {
                    cell: i,
                    detail: format!("non-finite value (phi {p}, theta {t}, rho {r})"),
                });
            }
            if t <= 0.0 {
                return Err(PhaseFieldError::Integration {
                    cell: i,
                    detail: format!("nonpositive temperature {t}"),
                });
            }
            if r < 0.0 {
                return Err(PhaseFieldError::Integration {
                    cell: i,
                    detail: format!("negative salt density {r}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics1D {
    pub total_internal_energy: f64,
    pub total_salt: f64,
    pub total_entropy: f64,
    pub entropy_production_rate: f64,
}

/// Semi-discrete time derivatives of `φ`, `u` and `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub dphi_dt: Vec<f64>,
    pub d_lhs_theta_dt: Vec<f64>,
    pub d_lhs_rho_dt: Vec<f64>,
}

/// Floored liquid weight `max(φe^{−W₁}, ε_m)`.
pub fn floored_weight(phi: f64, params: &ModelParams) -> f64 {
    liquid_weight(phi).max(params.mobility_floor)
}

fn log_mean(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    let d = b - a;
    if d.abs() <= 1e-8 * a {
        // series of (b − a)/ln(b/a) about a = b
        let m = 0.5 * (a + b);
        return m - d * d / (12.0 * m);
    }
    d / (b / a).ln()
}

fn laplacian(v: &[f64], dx: f64) -> Vec<f64> {
    let n = v.len();
    let inv = 1.0 / (dx * dx);
    (0..n)
        .map(|i| {
            let l = if i == 0 { v[0] } else { v[i - 1] };
            let r = if i + 1 == n { v[n - 1] } else { v[i + 1] };
            (l - 2.0 * v[i] + r) * inv
        })
        .collect()
}

/// Salt fluxes on the `n − 1` interior faces.
fn salt_fluxes(state: &Field1D, weights: &[f64], params: &ModelParams) -> Vec<f64> {
    let dx = state.grid.dx;
    (0..state.grid.n_cells - 1)
        .map(|i| {
            let (a, b) = (state.rho[i], state.rho[i + 1]);
            let m = weights[i].min(weights[i + 1]);
            let gravity = if params.delta_g == 0.0 {
                0.0
            } else {
                params.delta_g * log_mean(a, b)
            };
            params.sigma_n * m * ((b - a) / dx + gravity)
        })
        .collect()
}

fn divergence(face: &[f64], n: usize, dx: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let right = if i + 1 < n { face[i] } else { 0.0 };
            let left = if i > 0 { face[i - 1] } else { 0.0 };
            (right - left) / dx
        })
        .collect()
}

fn integration_error(cell: usize, what: &str) -> PhaseFieldError {
    PhaseFieldError::Integration {
        cell,
        detail: format!("non-finite {what} rate"),
    }
}

/// Right-hand side of the phase, energy and salt equations.
///
/// `∂tφ = Δφ/H − HW₀′(φ) − ∂φV₁`, `∂t u = σ_θΔθ`,
/// `∂t N = σ_N ∂x(w̃(∂xρ + δ_g ρ))`, with reflecting ghost cells and face
/// mobility `min(w̃_i, w̃_{i+1})`.
pub fn rhs(state: &Field1D, params: &ModelParams) -> Result<Rates, PhaseFieldError> {
    rates_and_weights(state, params).map(|(rates, _)| rates)
}

fn rates_and_weights(
    state: &Field1D,
    params: &ModelParams,
) -> Result<(Rates, Vec<f64>), PhaseFieldError> {
    let n = state.grid.n_cells;
    let dx = state.grid.dx;
    let h = params.h;
    let lap_phi = laplacian(&state.phi, dx);
    let lap_theta = laplacian(&state.theta, dx);
    let mut dphi = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let (p, t, r) = (state.phi[i], state.theta[i], state.rho[i]);
        let ew = (-w1(p)).exp();
        weights.push((p * ew).max(params.mobility_floor));
        // ∂φV₁ with the exponential shared with the weight
        let w1p = w1_prime(p);
        let dv1 = latent_big_b(t, params)? * w1p - r * ew * (1.0 - p * w1p);
        let v = lap_phi[i] / h - h * w0_prime(p) - dv1;
        if !v.is_finite() {
            return Err(integration_error(i, "phase"));
        }
        dphi.push(v);
    }
    let du: Vec<f64> = lap_theta.iter().map(|l| params.sigma_theta * l).collect();
    if let Some(i) = du.iter().position(|v| !v.is_finite()) {
        return Err(integration_error(i, "energy"));
    }
    let dn = divergence(&salt_fluxes(state, &weights, params), n, dx);
    if let Some(i) = dn.iter().position(|v| !v.is_finite()) {
        return Err(integration_error(i, "salt"));
    }
    let rates = Rates {
        dphi_dt: dphi,
        d_lhs_theta_dt: du,
        d_lhs_rho_dt: dn,
    };
    Ok((rates, weights))
}

/// Largest admissible explicit step `C·min(H dx², dx²/σ_θ, dx²/σ_N, 1/(36H))`.
pub fn stable_dt(grid: &Grid1D, params: &ModelParams) -> f64 {
    let dx2 = grid.dx * grid.dx;
    let h = params.h;
    params.stability_factor
        * (h * dx2)
            .min(dx2 / params.sigma_theta)
            .min(dx2 / params.sigma_n)
            .min(1.0 / (36.0 * h))
}

/// Solves `θ − b(θ)W₁(φ) = u` by Newton's method safeguarded by bisection.
pub fn theta_from_energy(
    u: f64,
    phi: f64,
    guess: f64,
    params: &ModelParams,
) -> Result<f64, ModelError> {
    let f = |t: f64| internal_energy_density(t, phi, params) - u;
    // u is increasing in θ wherever W₁ ≤ 0, so the sign of f updates the bracket
    let (mut lo, mut hi) = THETA_BRACKET;
    let mut t = if guess > lo && guess < hi {
        guess
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..THETA_NEWTON_MAX_ITER {
        let ft = f(t);
        if ft == 0.0 {
            return Ok(t);
        }
        if ft < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let d = internal_energy_dtheta(t, phi, params);
        let mut next = t - ft / d;
        if !(d > 0.0) || !(next >= lo && next <= hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-12 * t {
            if f(next).abs() <= 1e-9 * (1.0 + u.abs()) {
                return Ok(next);
            }
            break;
        }
        t = next;
    }
    let (a, b) = THETA_BRACKET;
    if f(a) > 0.0 || f(b) < 0.0 {
        return Err(ModelError::Domain {
            function: "theta_from_energy",
            detail: format!("energy {u} at phase {phi} has no temperature in [{a}, {b}] K"),
        });
    }
    Err(ModelError::Domain {
        function: "theta_from_energy",
        detail: format!("no convergence after {THETA_NEWTON_MAX_ITER} iterations"),
    })
}

/// One forward-Euler step.
pub fn step(state: &Field1D, dt: f64, params: &ModelParams) -> Result<Field1D, PhaseFieldError> {
    let limit = stable_dt(&state.grid, params);
    if !(dt > 0.0) || dt > limit {
        return Err(PhaseFieldError::Stability { dt, limit });
    }
    let (rates, weights) = rates_and_weights(state, params)?;
    let n = state.grid.n_cells;
    let mut phi = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    let mut rho = Vec::with_capacity(n);
    for i in 0..n {
        let (p, t, r) = (state.phi[i], state.theta[i], state.rho[i]);
        let p_new = p + dt * rates.dphi_dt[i];
        let u_new = internal_energy_density(t, p, params) + dt * rates.d_lhs_theta_dt[i];
        let t_new = if rates.d_lhs_theta_dt[i] == 0.0 && p_new == p {
            t
        } else {
            theta_from_energy(u_new, p_new, t, params).map_err(|e| match e {
                ModelError::Domain { ref detail, .. } if detail.starts_with("no convergence") => {
                    PhaseFieldError::Newton {
                        cell: i,
                        iterations: THETA_NEWTON_MAX_ITER,
                    }
                }
                other => PhaseFieldError::Integration {
                    cell: i,
                    detail: other.to_string(),
                },
            })?
        };
        let n_new = weights[i] * r + dt * rates.d_lhs_rho_dt[i];
        phi.push(p_new);
        theta.push(t_new);
        rho.push(n_new / floored_weight(p_new, params));
    }
    let next = Field1D {
        grid: state.grid,
        phi,
        theta,
        rho,
        time: state.time + dt,
    };
    next.check()?;
    Ok(next)
}

/// Advances `n_steps` steps of size `dt`, keeping the initial state and every
/// `save_every`-th state.
pub fn integrate(
    state: &Field1D,
    dt: f64,
    n_steps: usize,
    save_every: usize,
    params: &ModelParams,
) -> Result<Vec<Field1D>, PhaseFieldError> {
    if save_every == 0 {
        return Err(PhaseFieldError::Invalid(
            "save_every must be positive".into(),
        ));
    }
    let mut frames = vec![state.clone()];
    let mut cur = state.clone();
    for k in 1..=n_steps {
        cur = step(&cur, dt, params)?;
        if k % save_every == 0 {
            frames.push(cur.clone());
        }
    }
    Ok(frames)
}

/// Cell part of the entropy density, with `R − W₁N = N(1 − ln ρ)`.
fn cell_entropy(phi: f64, theta: f64, rho: f64, x: f64, params: &ModelParams) -> f64 {
    let n = floored_weight(phi, params) * rho;
    let mix = if rho > 0.0 { n * (1.0 - rho.ln()) } else { 0.0 };
    theta.ln() + mix
        - params.delta_g * n * x
        - params.h * w0(phi)
        - w1(phi) * params.beta * (theta - params.theta_star)
}

fn gradient_energy(phi: &[f64], dx: f64, h: f64) -> Vec<f64> {
    phi.windows(2)
        .map(|w| (w[1] - w[0]) * (w[1] - w[0]) / (2.0 * h * dx))
        .collect()
}

/// Variational derivative of the discrete entropy in `φ` at fixed `u`, `N`,
/// exact in cells whose liquid weight is above the floor.
pub fn entropy_phase_derivative(
    state: &Field1D,
    params: &ModelParams,
) -> Result<Vec<f64>, PhaseFieldError> {
    let h = params.h;
    let lap = laplacian(&state.phi, state.grid.dx);
    let mut out = Vec::with_capacity(state.grid.n_cells);
    for i in 0..state.grid.n_cells {
        let (p, t, r) = (state.phi[i], state.theta[i], state.rho[i]);
        let w1p = w1_prime(p);
        let salt = r * (-w1(p)).exp() * (1.0 - p * w1p);
        let thermal = w1p * (latent_big_b(t, params)? - params.beta * (t - params.theta_star));
        out.push(lap[i] / h - h * w0_prime(p) + salt + thermal);
    }
    Ok(out)
}

pub fn diagnostics(
    state: &Field1D,
    params: &ModelParams,
) -> Result<Diagnostics1D, PhaseFieldError> {
    let g = state.grid;
    let dx = g.dx;
    let n = g.n_cells;
    let mut energy = 0.0;
    let mut salt = 0.0;
    let mut entropy = 0.0;
    for i in 0..n {
        let (p, t, r) = (state.phi[i], state.theta[i], state.rho[i]);
        if !(t > 0.0) {
            return Err(ModelError::Domain {
                function: "diagnostics",
                detail: format!("nonpositive temperature {t} in cell {i}"),
            }
            .into());
        }
        energy += internal_energy_density(t, p, params) * dx;
        salt += floored_weight(p, params) * r * dx;
        entropy += cell_entropy(p, t, r, g.x(i), params) * dx;
    }
    entropy -= gradient_energy(&state.phi, dx, params.h)
        .iter()
        .sum::<f64>();

    let mu_phi = entropy_phase_derivative(state, params)?;
    let mut production: f64 = mu_phi.iter().map(|m| m * m * dx).sum();
    for i in 0..n - 1 {
        let (ta, tb) = (state.theta[i], state.theta[i + 1]);
        production += params.sigma_theta * (tb - ta) * (tb - ta) / (ta * tb * dx);
    }
    let weights: Vec<f64> = state
        .phi
        .iter()
        .map(|&p| floored_weight(p, params))
        .collect();
    let flux = salt_fluxes(state, &weights, params);
    for i in 0..n - 1 {
        let (a, b) = (state.rho[i], state.rho[i + 1]);
        if flux[i] == 0.0 {
            continue;
        }
        // F · Δ(ln ρ + δ_g x)
        let dmu = if a > 0.0 && b > 0.0 {
            (b / a).ln() + params.delta_g * dx
        } else {
            f64::INFINITY
        };
        production += flux[i] * dmu;
    }
    let d = Diagnostics1D {
        total_internal_energy: energy,
        total_salt: salt,
        total_entropy: entropy,
        entropy_production_rate: production,
    };
    if [
        d.total_internal_energy,
        d.total_salt,
        d.total_entropy,
        d.entropy_production_rate,
    ]
    .iter()
    .any(|v| !v.is_finite())
    {
        return Err(ModelError::Domain {
            function: "diagnostics",
            detail: "non-finite diagnostic".into(),
        }
        .into());
    }
    Ok(d)
}

/// `Ŝ(next) − Ŝ(prev)` accumulated cell by cell.
pub fn entropy_increment(
    prev: &Field1D,
    next: &Field1D,
    params: &ModelParams,
) -> Result<f64, PhaseFieldError> {
    if prev.grid != next.grid {
        return Err(PhaseFieldError::Invalid(
            "states live on different grids".into(),
        ));
    }
    let g = prev.grid;
    let mut acc = 0.0;
    for i in 0..g.n_cells {
        if !(next.theta[i] > 0.0 && prev.theta[i] > 0.0) {
            return Err(PhaseFieldError::Integration {
                cell: i,
                detail: "nonpositive temperature".into(),
            });
        }
        let x = g.x(i);
        let a = cell_entropy(prev.phi[i], prev.theta[i], prev.rho[i], x, params);
        let b = cell_entropy(next.phi[i], next.theta[i], next.rho[i], x, params);
        acc += (b - a) * g.dx;
    }
    let ga = gradient_energy(&prev.phi, g.dx, params.h);
    let gb = gradient_energy(&next.phi, g.dx, params.h);
    acc -= ga.iter().zip(&gb).map(|(a, b)| b - a).sum::<f64>();
    Ok(acc)
}

/// Location of the single `φ = ½` crossing, by linear interpolation.
pub fn front_position(state: &Field1D) -> Result<f64, PhaseFieldError> {
    let mut found = None;
    let mut count = 0;
    for i in 0..state.grid.n_cells - 1 {
        let (a, b) = (state.phi[i] - 0.5, state.phi[i + 1] - 0.5);
        if a == 0.0 || (a < 0.0) != (b < 0.0) {
            count += 1;
            let frac = if a == b { 0.0 } else { a / (a - b) };
            found = Some(state.grid.x(i) + frac * state.grid.dx);
        }
    }
    match (count, found) {
        (1, Some(x)) => Ok(x),
        (0, _) => Err(PhaseFieldError::Front("phi never crosses 1/2".into())),
        (k, _) => Err(PhaseFieldError::Front(format!("phi crosses 1/2 {k} times"))),
    }
}

/// Least-squares slope of the front position against time.
pub fn measure_front_velocity(trajectory: &[Field1D]) -> Result<f64, PhaseFieldError> {
    if trajectory.len() < 2 {
        return Err(PhaseFieldError::Front("need at least two frames".into()));
    }
    let pts: Vec<(f64, f64)> = trajectory
        .iter()
        .map(|s| front_position(s).map(|x| (s.time, x)))
        .collect::<Result<_, _>>()?;
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let xm = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm) * (p.0 - tm)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - xm)).sum();
    if sxx == 0.0 {
        return Err(PhaseFieldError::Front("frames share a single time".into()));
    }
    Ok(sxy / sxx)
}

/// Drive `B(θ) + N₀` at the front, with `N₀ = eρ` the liquid salt that
/// matches the interpolated relative density.
pub fn front_drive(state: &Field1D, params: &ModelParams) -> Result<f64, PhaseFieldError> {
    let xf = front_position(state)?;
    let g = state.grid;
    let s = ((xf / g.dx - 0.5).floor().max(0.0) as usize).min(g.n_cells - 2);
    let frac = (xf - g.x(s)) / g.dx;
    let lerp = |v: &[f64]| v[s] + frac * (v[s + 1] - v[s]);
    let theta = lerp(&state.theta);
    let rho = lerp(&state.rho);
    Ok(latent_big_b(theta, params)? + rho * (-w1(1.0)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{entropy_density, latent_b, salt_from_rho};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn desk(h: f64) -> ModelParams {
        ModelParams {
            h,
            sigma_theta: 1.0 / h,
            sigma_n: 1.0 / h,
            delta_g: 0.0,
            ..ModelParams::defaults()
        }
    }

    fn rest(n: usize) -> Field1D {
        let g = Grid1D::new(n, 1.0).unwrap();
        Field1D::new(g, vec![0.0; n], vec![273.0; n], vec![0.0; n], 0.0).unwrap()
    }

    /// Front with a wavy temperature, salt and phase perturbation.
    fn perturbed(h: f64, ppz: f64, p: &ModelParams) -> Field1D {
        let len = 24.0 / h;
        let g = Grid1D::new((24.0 * ppz) as usize, len).unwrap();
        let xs = g.nodes();
        let pi = std::f64::consts::PI;
        let phi = xs
            .iter()
            .map(|&x| {
                let z = h * (x - 0.5 * len);
                front_profile(z) + 0.04 * (-z * z).exp()
            })
            .collect();
        let theta = xs
            .iter()
            .map(|&x| 272.9 + 0.05 * (pi * x / len).cos())
            .collect();
        let rho = xs
            .iter()
            .map(|&x| 0.4 * (1.0 + 0.3 * (2.0 * pi * x / len).sin()))
            .collect();
        let _ = p;
        Field1D::new(g, phi, theta, rho, 0.0).unwrap()
    }

    #[test]
    fn grid_layout() {
        let g = Grid1D::new(10, 2.0).unwrap();
        assert_relative_eq!(g.dx, 0.2);
        assert_relative_eq!(g.x(0), 0.1);
        assert_relative_eq!(g.x(9), 1.9);
        assert!(Grid1D::new(7, 1.0).is_err());
        assert!(Grid1D::new(8, 0.0).is_err());
    }

    #[test]
    fn rejects_invalid_fields() {
        let g = Grid1D::new(8, 1.0).unwrap();
        assert!(Field1D::new(g, vec![0.0; 8], vec![273.0; 8], vec![-1e-3; 8], 0.0).is_err());
        assert!(Field1D::new(g, vec![0.0; 8], vec![0.0; 8], vec![0.0; 8], 0.0).is_err());
        assert!(Field1D::new(g, vec![0.0; 7], vec![273.0; 8], vec![0.0; 8], 0.0).is_err());
    }

    #[test]
    fn rest_state_is_stationary() {
        let p = desk(25.0);
        let s = rest(16);
        let r = rhs(&s, &p).unwrap();
        for v in r
            .dphi_dt
            .iter()
            .chain(&r.d_lhs_theta_dt)
            .chain(&r.d_lhs_rho_dt)
        {
            assert_eq!(*v, 0.0);
        }
        let dt = stable_dt(&s.grid, &p);
        let next = step(&s, dt, &p).unwrap();
        assert_eq!(next.phi, s.phi);
        assert_eq!(next.theta, s.theta);
        assert_eq!(next.rho, s.rho);
        let d = diagnostics(&s, &p).unwrap();
        assert_eq!(d.entropy_production_rate, 0.0);
    }

    #[test]
    fn uniform_liquid_rates() {
        let p = desk(25.0);
        let g = Grid1D::new(12, 1.0).unwrap();
        let rho0 = 0.7;
        let s = Field1D::new(g, vec![1.0; 12], vec![273.0; 12], vec![rho0; 12], 0.0).unwrap();
        let r = rhs(&s, &p).unwrap();
        let e = std::f64::consts::E;
        for i in 0..12 {
            assert_relative_eq!(r.dphi_dt[i], rho0 * e, max_relative = 1e-14);
            assert_eq!(r.d_lhs_theta_dt[i], 0.0);
            assert_eq!(r.d_lhs_rho_dt[i], 0.0);
        }
    }

    #[test]
    fn theta_recovery_matches_quadratic_root() {
        let p = ModelParams::defaults();
        for &(theta, phi) in &[
            (273.0, 0.0),
            (272.0, 1.0),
            (268.5, 0.5),
            (280.0, 0.9),
            (273.2, 0.02),
        ] {
            let u = internal_energy_density(theta, phi, &p);
            // −(β/2)W₁θ² + θ + (β/2)W₁θ*² − u = 0
            let a = -0.5 * p.beta * w1(phi);
            let c = 0.5 * p.beta * w1(phi) * p.theta_star * p.theta_star - u;
            let oracle = if a == 0.0 {
                -c
            } else {
                (-1.0 + (1.0 - 4.0 * a * c).sqrt()) / (2.0 * a)
            };
            let t = theta_from_energy(u, phi, 260.0, &p).unwrap();
            assert_relative_eq!(t, oracle, max_relative = 1e-12);
            assert_relative_eq!(t, theta, max_relative = 1e-12);
        }
        let u_hot = internal_energy_density(500.0, 0.0, &p);
        assert!(theta_from_energy(u_hot, 0.0, 273.0, &p).is_err());
    }

    #[test]
    fn cell_entropy_matches_model_density() {
        let p = desk(50.0);
        for &(phi, theta, rho) in &[(0.3, 272.5, 0.4), (0.9, 273.4, 1.2), (0.05, 271.0, 0.01)] {
            let n = salt_from_rho(rho, phi);
            let oracle = entropy_density(0.0, phi, theta, n, 0.37, &p).unwrap();
            assert_relative_eq!(
                cell_entropy(phi, theta, rho, 0.37, &p),
                oracle,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn total_salt_is_weighted_density() {
        let p = desk(25.0);
        let s = perturbed(25.0, 8.0, &p);
        let d = diagnostics(&s, &p).unwrap();
        let direct: f64 = (0..s.grid.n_cells)
            .map(|i| salt_from_rho(s.rho[i], s.phi[i]).max(p.mobility_floor * s.rho[i]))
            .sum::<f64>()
            * s.grid.dx;
        assert_relative_eq!(d.total_salt, direct, max_relative = 1e-14);
    }

    #[test]
    fn phase_derivative_matches_finite_difference() {
        // perturb φ_k at fixed u and N and difference the discrete entropy
        let p = desk(25.0);
        let s = perturbed(25.0, 4.0, &p);
        let mu = entropy_phase_derivative(&s, &p).unwrap();
        for k in [10, 40, 48, 52] {
            let eps = 1e-6;
            let shifted = |d: f64| {
                let mut t = s.clone();
                let u = internal_energy_density(s.theta[k], s.phi[k], &p);
                let nk = floored_weight(s.phi[k], &p) * s.rho[k];
                t.phi[k] += d;
                t.theta[k] = theta_from_energy(u, t.phi[k], s.theta[k], &p).unwrap();
                t.rho[k] = nk / floored_weight(t.phi[k], &p);
                diagnostics(&t, &p).unwrap().total_entropy
            };
            let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps * s.grid.dx);
            assert!(
                (fd - mu[k]).abs() < 1e-5 * (1.0 + mu[k].abs()),
                "k {k}: {fd} vs {}",
                mu[k]
            );
        }
    }

    #[test]
    fn stability_bound_enforced() {
        let p = desk(25.0);
        let s = rest(16);
        let dt = stable_dt(&s.grid, &p);
        assert!(matches!(
            step(&s, 1.01 * dt, &p),
            Err(PhaseFieldError::Stability { .. })
        ));
        assert!(step(&s, 0.0, &p).is_err());
    }

    #[test]
    fn conservation_over_a_thousand_steps() {
        let p = ModelParams {
            h: 25.0,
            ..ModelParams::defaults()
        };
        let s0 = perturbed(25.0, 8.0, &p);
        let dt = stable_dt(&s0.grid, &p);
        let d0 = diagnostics(&s0, &p).unwrap();
        let mut s = s0.clone();
        for _ in 0..1000 {
            s = step(&s, dt, &p).unwrap();
        }
        let d1 = diagnostics(&s, &p).unwrap();
        let de = (d1.total_internal_energy - d0.total_internal_energy).abs();
        let dn = (d1.total_salt - d0.total_salt).abs();
        assert!(de < 1e-10 * d0.total_internal_energy.abs(), "{de:e}");
        assert!(dn < 1e-10 * d0.total_salt, "{dn:e}");
    }

    #[test]
    fn entropy_nondecreasing_on_perturbed_front() {
        let p = ModelParams {
            h: 25.0,
            ..ModelParams::defaults()
        };
        let mut s = perturbed(25.0, 8.0, &p);
        let dt = stable_dt(&s.grid, &p);
        for _ in 0..500 {
            let next = step(&s, dt, &p).unwrap();
            let ds = entropy_increment(&s, &next, &p).unwrap();
            assert!(
                ds >= -10.0 * dt * dt,
                "entropy dropped by {ds:e} at t = {}",
                s.time
            );
            s = next;
        }
    }

    #[test]
    fn standing_front_does_not_drift() {
        let h = 25.0;
        let p = desk(h);
        let g = Grid1D::new(24 * 16, 24.0 / h).unwrap();
        let s0 = Field1D::front(g, 12.0 / h, 273.0, 0.0, &p).unwrap();
        let dt = stable_dt(&g, &p);
        let steps = (1.0 / dt).ceil() as usize;
        let frames = integrate(&s0, dt, steps, steps, &p).unwrap();
        let drift = front_position(frames.last().unwrap()).unwrap() - front_position(&s0).unwrap();
        assert!(drift.abs() < 1.0 / (h * h), "drift {drift:e}");
    }

    #[test]
    fn front_detection_errors() {
        let g = Grid1D::new(8, 1.0).unwrap();
        let flat = Field1D::new(g, vec![1.0; 8], vec![273.0; 8], vec![0.0; 8], 0.0).unwrap();
        assert!(front_position(&flat).is_err());
        let mut bumpy = flat.clone();
        bumpy.phi = vec![1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        assert!(matches!(
            front_position(&bumpy),
            Err(PhaseFieldError::Front(_))
        ));
        assert!(measure_front_velocity(&[flat]).is_err());
    }

    #[test]
    fn front_velocity_from_linear_motion() {
        let p = desk(25.0);
        let g = Grid1D::new(1024, 1.0).unwrap();
        let frames: Vec<Field1D> = (0..5)
            .map(|k| {
                let mut f = Field1D::front(g, 0.4 + 0.01 * k as f64, 273.0, 0.0, &p).unwrap();
                f.time = 0.5 * k as f64;
                f
            })
            .collect();
        assert_relative_eq!(
            measure_front_velocity(&frames).unwrap(),
            0.02,
            max_relative = 1e-3
        );
    }

    #[test]
    fn latent_heat_vanishes_at_melting_point() {
        assert_eq!(latent_b(273.0, &ModelParams::defaults()), 0.0);
    }

    proptest! {
        #[test]
        fn salt_flux_telescopes(
            phi in proptest::collection::vec(0.0f64..1.0, 20),
            theta in proptest::collection::vec(265.0f64..280.0, 20),
            rho in proptest::collection::vec(0.0f64..2.0, 20),
        ) {
            let p = ModelParams { delta_g: 0.3, ..desk(40.0) };
            let g = Grid1D::new(20, 0.5).unwrap();
            let s = Field1D::new(g, phi, theta, rho, 0.0).unwrap();
            let r = rhs(&s, &p).unwrap();
            let total: f64 = r.d_lhs_rho_dt.iter().sum::<f64>() * g.dx;
            let scale: f64 = r.d_lhs_rho_dt.iter().map(|v| v.abs()).sum::<f64>() * g.dx;
            prop_assert!(total.abs() <= 1e-13 * (1.0 + scale));
            let heat: f64 = r.d_lhs_theta_dt.iter().sum::<f64>() * g.dx;
            let hscale: f64 = r.d_lhs_theta_dt.iter().map(|v| v.abs()).sum::<f64>() * g.dx;
            prop_assert!(heat.abs() <= 1e-13 * (1.0 + hscale));
        }

        #[test]
        fn theta_recovery_round_trips(theta in 200.0f64..350.0, phi in 0.0f64..1.0) {
            let p = ModelParams::defaults();
            let u = internal_energy_density(theta, phi, &p);
            let t = theta_from_energy(u, phi, 273.0, &p).unwrap();
            prop_assert!((t - theta).abs() < 1e-10 * theta);
        }
    }
}
