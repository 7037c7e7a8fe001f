//! Backward-Euler/Newton evolution of a closed inclusion.
//!
//! Unknowns are interleaved `[r₀, x₀, r₁, x₁, …]`. Row `2i` is the normal
//! equation `(Xᵢⁿ⁺¹ − Xᵢⁿ)·nᵢⁿ⁺¹ = dτ Ṽᵢⁿ⁺¹`; row `2i+1` equates consecutive
//! chords `c_{i+1} − c_i = 0`, where the pole chords `c₀ = 2r₀` and
//! `c_n = 2r_{n−1}` join each end node to its mirror image. Equal chords
//! fix the tangential motion and keep the nodes uniform in arc length.

use std::f64::consts::PI;

use super::banded::{solve_rank_one, BandedLu};
use super::geometry::{closed_taps, local, trapezoid_weight, weighted_volume, Local};
use super::pinch::{detect_pinch, min_interior_radius};
use super::{BrineState, InterfaceCurve, PinchEvent, StefanError, ThermalProfile, Topology};
use crate::model::ModelParams;

const KL: usize = 3;
const KU: usize = 3;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: BrineState,
    pub pinch: Option<PinchEvent>,
    /// Accepted sub-steps (more than one after step-size reduction).
    pub substeps: usize,
    pub newton_iterations: usize,
}

struct Problem<'a> {
    old: &'a InterfaceCurve,
    total_salt: f64,
    thermal: &'a ThermalProfile,
    dtau: f64,
    params: &'a ModelParams,
}

/// Partial derivatives of `κ₀` with respect to `(r, r′, r″, x′, x″)`.
fn kappa_partials(l: &Local) -> (f64, [f64; 5]) {
    let j2 = l.xp * l.xp + l.rp * l.rp;
    let j = j2.sqrt();
    let p = l.xp * j2 - l.r * l.rpp * l.xp + l.r * l.rp * l.xpp;
    let q = 2.0 * l.r * j2 * j;
    let dp = [
        -l.rpp * l.xp + l.rp * l.xpp,
        2.0 * l.rp * l.xp + l.r * l.xpp,
        -l.r * l.xp,
        j2 + 2.0 * l.xp * l.xp - l.r * l.rpp,
        l.r * l.rp,
    ];
    let dq = [
        2.0 * j2 * j,
        6.0 * l.r * j * l.rp,
        0.0,
        6.0 * l.r * j * l.xp,
        0.0,
    ];
    let mut d = [0.0; 5];
    for k in 0..5 {
        d[k] = -dp[k] / q + p * dq[k] / (q * q);
    }
    (-p / q, d)
}

fn curve_from(u: &[f64], template: &InterfaceCurve) -> InterfaceCurve {
    let n = template.len();
    let mut c = template.clone();
    for i in 0..n {
        c.r[i] = u[2 * i];
        c.x3[i] = u[2 * i + 1];
    }
    c
}

fn pack(curve: &InterfaceCurve) -> Vec<f64> {
    let mut u = Vec::with_capacity(2 * curve.len());
    for i in 0..curve.len() {
        u.push(curve.r[i]);
        u.push(curve.x3[i]);
    }
    u
}

/// Chord `c_k` between node `k−1` and node `k` (mirror images at the poles)
/// with its gradient with respect to the two end points `(r, x)`.
fn chord(curve: &InterfaceCurve, k: usize) -> (f64, [(usize, f64, f64); 2]) {
    let n = curve.len();
    if k == 0 {
        let r = curve.r[0];
        return (2.0 * r, [(0, 2.0, 0.0), (0, 0.0, 0.0)]);
    }
    if k == n {
        let r = curve.r[n - 1];
        return (2.0 * r, [(n - 1, 2.0, 0.0), (n - 1, 0.0, 0.0)]);
    }
    let dr = curve.r[k] - curve.r[k - 1];
    let dx = curve.x3[k] - curve.x3[k - 1];
    let c = (dr * dr + dx * dx).sqrt();
    (c, [(k, dr / c, dx / c), (k - 1, -dr / c, -dx / c)])
}

impl Problem<'_> {
    fn residual(&self, curve: &InterfaceCurve) -> Result<Vec<f64>, StefanError> {
        let n = curve.len();
        let p = self.params;
        let d = weighted_volume(curve, p.delta_g);
        if !(d > 0.0) {
            return Err(StefanError::Geometry(format!(
                "non-positive enclosed volume {d}"
            )));
        }
        let sign = p.curvature_drive.kappa_sign();
        let ts = p.theta_star_celsius();
        let mut res = vec![0.0; 2 * n];
        for i in 0..n {
            let l = local(curve, i);
            let j2 = l.xp * l.xp + l.rp * l.rp;
            if !(l.r > 0.0) || j2 < 1e-14 {
                return Err(StefanError::Geometry(format!("degenerate node {i}")));
            }
            let j = j2.sqrt();
            let (kappa, _) = kappa_partials(&l);
            let x = curve.x3[i];
            let n0 = self.total_salt * (-p.delta_g * x).exp() / d;
            let v = sign * kappa + n0 + p.beta * (self.thermal.temperature(x) - ts);
            res[2 * i] = (curve.r[i] - self.old.r[i]) * l.xp / j
                - (x - self.old.x3[i]) * l.rp / j
                - self.dtau * v;
            res[2 * i + 1] = chord(curve, i + 1).0 - chord(curve, i).0;
        }
        Ok(res)
    }

    /// Band part, rank-one column `a` and row `g` of the Jacobian.
    fn jacobian(&self, curve: &InterfaceCurve) -> (BandedLu, Vec<f64>, Vec<f64>) {
        let n = curve.len();
        let ds = curve.ds();
        let p = self.params;
        let sign = p.curvature_drive.kappa_sign();
        let d = weighted_volume(curve, p.delta_g);
        let mut band = BandedLu::zeros(2 * n, KL, KU);
        let mut a = vec![0.0; 2 * n];
        let mut g = vec![0.0; 2 * n];
        for i in 0..n {
            let taps = closed_taps(i, n);
            let l = local(curve, i);
            let j2 = l.xp * l.xp + l.rp * l.rp;
            let j = j2.sqrt();
            let j3 = j2 * j;
            let (_, dk) = kappa_partials(&l);
            let dr = curve.r[i] - self.old.r[i];
            let dx = curve.x3[i] - self.old.x3[i];
            let x = curve.x3[i];
            let e = (-p.delta_g * x).exp();
            let n0 = self.total_salt * e / d;
            // ∂F/∂(r, r′, r″, x′, x″) excluding the direct displacement terms
            let f_r = -self.dtau * sign * dk[0];
            let f_rp =
                dr * (-l.xp * l.rp / j3) + dx * (-l.xp * l.xp / j3) - self.dtau * sign * dk[1];
            let f_rpp = -self.dtau * sign * dk[2];
            let f_xp = dr * (l.rp * l.rp / j3) + dx * (l.rp * l.xp / j3) - self.dtau * sign * dk[3];
            let f_xpp = -self.dtau * sign * dk[4];
            let row = 2 * i;
            band.add(row, 2 * i, l.xp / j + f_r);
            band.add(
                row,
                2 * i + 1,
                -l.rp / j + self.dtau * p.delta_g * n0 + self.dtau * p.beta * self.thermal.b0,
            );
            let first = [-1.0 / (2.0 * ds), 0.0, 1.0 / (2.0 * ds)];
            let second = [1.0 / (ds * ds), -2.0 / (ds * ds), 1.0 / (ds * ds)];
            for (k, t) in taps.iter().enumerate() {
                band.add(
                    row,
                    2 * t.node,
                    t.sr * (f_rp * first[k] + f_rpp * second[k]),
                );
                band.add(
                    row,
                    2 * t.node + 1,
                    t.sx * (f_xp * first[k] + f_xpp * second[k]),
                );
            }
            a[row] = self.dtau * n0 / d;
            // volume integrand wᵢ π rᵢ² eᵢ x′ᵢ ds
            let w = trapezoid_weight(i, n) * PI * ds;
            g[2 * i] += w * 2.0 * curve.r[i] * e * l.xp;
            g[2 * i + 1] += w * curve.r[i] * curve.r[i] * (-p.delta_g * e) * l.xp;
            for (k, t) in taps.iter().enumerate() {
                g[2 * t.node + 1] += w * curve.r[i] * curve.r[i] * e * t.sx * first[k];
            }
            let crow = 2 * i + 1;
            for (k, s) in [(i + 1, 1.0), (i, -1.0)] {
                let (_, grads) = chord(curve, k);
                for (node, gr, gx) in grads {
                    if gr != 0.0 {
                        band.add(crow, 2 * node, s * gr);
                    }
                    if gx != 0.0 {
                        band.add(crow, 2 * node + 1, s * gx);
                    }
                }
            }
        }
        (band, a, g)
    }
}

/// Residual of the implicit step for trial curve `new`.
pub fn residual(
    new: &InterfaceCurve,
    old: &InterfaceCurve,
    total_salt: f64,
    thermal: &ThermalProfile,
    dtau: f64,
    params: &ModelParams,
) -> Result<Vec<f64>, StefanError> {
    Problem {
        old,
        total_salt,
        thermal,
        dtau,
        params,
    }
    .residual(new)
}

/// Dense Jacobian (band plus rank-one term) of [`residual`].
pub fn residual_jacobian(
    new: &InterfaceCurve,
    old: &InterfaceCurve,
    total_salt: f64,
    thermal: &ThermalProfile,
    dtau: f64,
    params: &ModelParams,
) -> Vec<Vec<f64>> {
    let prob = Problem {
        old,
        total_salt,
        thermal,
        dtau,
        params,
    };
    let (band, a, g) = prob.jacobian(new);
    let m = 2 * new.len();
    (0..m)
        .map(|i| (0..m).map(|j| band.get(i, j) + a[i] * g[j]).collect())
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn newton(
    state: &BrineState,
    thermal: &ThermalProfile,
    dtau: f64,
    params: &ModelParams,
) -> Result<(InterfaceCurve, NewtonReport), StefanError> {
    let prob = Problem {
        old: &state.curve,
        total_salt: state.total_salt,
        thermal,
        dtau,
        params,
    };
    let mut curve = state.curve.clone();
    let mut u = pack(&curve);
    let mut res = prob.residual(&curve)?;
    let mut norm = max_abs(&res);
    let size = curve
        .x3
        .iter()
        .chain(curve.r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-3);
    for it in 0..=params.newton_max_iter {
        if norm < params.newton_tol {
            return Ok((
                curve,
                NewtonReport {
                    iterations: it,
                    residual: norm,
                },
            ));
        }
        if it == params.newton_max_iter {
            break;
        }
        let (mut band, a, g) = prob.jacobian(&curve);
        band.factor()?;
        let mut delta: Vec<f64> = res.iter().map(|v| -v).collect();
        solve_rank_one(&band, &a, &g, &mut delta)?;
        if max_abs(&delta) > 0.5 * size || delta.iter().any(|v| !v.is_finite()) {
            break;
        }
        for (ui, di) in u.iter_mut().zip(&delta) {
            *ui += di;
        }
        curve = curve_from(&u, &curve);
        if curve.r.iter().any(|&r| !(r > 0.0)) {
            break;
        }
        res = match prob.residual(&curve) {
            Ok(r) => r,
            Err(_) => break,
        };
        norm = max_abs(&res);
    }
    Err(StefanError::NewtonDivergence {
        iterations: params.newton_max_iter,
        residual: norm,
        tau: state.tau,
    })
}

/// Advances the state by `dtau` with backward Euler.
///
/// When Newton fails the step is split by halving; the evolution stops early
/// and reports a [`PinchEvent`] once the interior radius falls below
/// `params.r_pinch`, with the event time interpolated linearly in `r_min²`.
pub fn step_backward_euler(
    state: &BrineState,
    thermal: &ThermalProfile,
    dtau: f64,
    params: &ModelParams,
) -> Result<StepOutcome, StefanError> {
    if !(dtau > 0.0) || !dtau.is_finite() {
        return Err(StefanError::Invalid(format!(
            "time step must be positive, got {dtau}"
        )));
    }
    if state.curve.topology != Topology::ClosedInclusion {
        return Err(StefanError::Invalid(
            "evolution requires a closed inclusion".into(),
        ));
    }
    let end = state.tau + dtau;
    let mut cur = state.clone();
    let mut h = dtau;
    let mut halvings = 0;
    let mut substeps = 0;
    let mut iterations = 0;
    let mut last_err = None;
    while cur.tau < end {
        let h_try = h.min(end - cur.tau);
        match newton(&cur, thermal, h_try, params) {
            Ok((curve, rep)) => {
                let prev_rmin = min_interior_radius(&cur.curve);
                let tau = if end - (cur.tau + h_try) <= 1e-12 * dtau {
                    end
                } else {
                    cur.tau + h_try
                };
                let prev_tau = cur.tau;
                cur = BrineState {
                    curve,
                    total_salt: cur.total_salt,
                    tau,
                };
                substeps += 1;
                iterations += rep.iterations;
                if let Some(mut ev) = detect_pinch(&cur, params) {
                    let rp2 = params.r_pinch * params.r_pinch;
                    let r1 = prev_rmin * prev_rmin;
                    let r2 = min_interior_radius(&cur.curve).powi(2);
                    if r1 > rp2 && r1 > r2 {
                        ev.tau = prev_tau + (cur.tau - prev_tau) * (r1 - rp2) / (r1 - r2);
                    }
                    return Ok(StepOutcome {
                        state: cur,
                        pinch: Some(ev),
                        substeps,
                        newton_iterations: iterations,
                    });
                }
                if halvings > 0 && rep.iterations <= 4 {
                    h *= 2.0;
                    halvings -= 1;
                }
            }
            Err(e) => {
                if halvings >= MAX_HALVINGS {
                    return Err(last_err.unwrap_or(e));
                }
                last_err = Some(e);
                h *= 0.5;
                halvings += 1;
            }
        }
    }
    Ok(StepOutcome {
        state: cur,
        pinch: None,
        substeps,
        newton_iterations: iterations,
    })
}

/// Largest relative deviation of the chords from their mean.
pub fn arc_length_spread(curve: &InterfaceCurve) -> f64 {
    let n = curve.len();
    let chords: Vec<f64> = (0..=n).map(|k| chord(curve, k).0).collect();
    let mean = chords.iter().sum::<f64>() / chords.len() as f64;
    chords
        .iter()
        .map(|c| (c / mean - 1.0).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CurvatureDrive;
    use crate::stefan::{capsule, enclosed_volume, salt_density, sphere};

    fn contracting() -> ModelParams {
        let mut p = ModelParams::defaults();
        p.curvature_drive = CurvatureDrive::Contracting;
        p
    }

    fn fd_check(
        new: &InterfaceCurve,
        old: &InterfaceCurve,
        nt: f64,
        th: &ThermalProfile,
        p: &ModelParams,
    ) {
        let dt = 0.01;
        let jac = residual_jacobian(new, old, nt, th, dt, p);
        let u0 = pack(new);
        let m = u0.len();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for j in 0..m {
            let mut up = u0.clone();
            let mut um = u0.clone();
            up[j] += h;
            um[j] -= h;
            let rp = residual(&curve_from(&up, new), old, nt, th, dt, p).unwrap();
            let rm = residual(&curve_from(&um, new), old, nt, th, dt, p).unwrap();
            for i in 0..m {
                let fd = (rp[i] - rm[i]) / (2.0 * h);
                let err = (fd - jac[i][j]).abs() / (1.0 + fd.abs());
                worst = worst.max(err);
            }
        }
        assert!(worst < 1e-6, "worst Jacobian mismatch {worst}");
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let old = capsule(24, 2.0, 0.6).unwrap();
        let mut new = old.clone();
        for i in 0..new.len() {
            new.r[i] *= 1.0 + 0.05 * (i as f64).sin();
            new.x3[i] += 0.03 * (0.7 * i as f64).cos();
        }
        let th = ThermalProfile { a0: -3.0, b0: 0.4 };
        let mut p = contracting();
        p.delta_g = 0.05;
        fd_check(&new, &old, 20.0, &th, &p);
        let mut q = ModelParams::defaults();
        q.delta_g = 0.0;
        fd_check(&new, &old, 20.0, &th, &q);
    }

    #[test]
    fn equilibrium_sphere_fixed_point() {
        let c = sphere(64, 0.5, 0.0).unwrap();
        let p = ModelParams::defaults();
        let v = enclosed_volume(&c).unwrap();
        let k = crate::stefan::curvature(&c).unwrap();
        // salt that cancels the discrete curvature mean exactly on the grid
        let n0 = -(-k.iter().sum::<f64>() / k.len() as f64) + 1.85 * 4.0;
        let st = BrineState {
            curve: c.clone(),
            total_salt: n0 * v,
            tau: 0.0,
        };
        let th = ThermalProfile { a0: -4.0, b0: 0.0 };
        let mut pz = p;
        pz.delta_g = 0.0;
        let out = step_backward_euler(&st, &th, 1e-3, &pz).unwrap();
        let dev = out
            .state
            .curve
            .r
            .iter()
            .zip(&c.r)
            .chain(out.state.curve.x3.iter().zip(&c.x3))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-10, "{dev}");
        assert_eq!(out.newton_iterations, 0);
    }

    #[test]
    fn volume_salt_identity_after_step() {
        let c = capsule(48, 2.0, 0.5).unwrap();
        let mut p = contracting();
        p.delta_g = 0.0;
        let th = ThermalProfile { a0: -2.0, b0: 0.0 };
        let nt = crate::stefan::mean_velocity_salt(&c, &th, &p).unwrap();
        let st = BrineState {
            curve: c,
            total_salt: nt,
            tau: 0.0,
        };
        let out = step_backward_euler(&st, &th, 1e-2, &p).unwrap();
        let n0 = salt_density(&out.state, &p).unwrap();
        let v = enclosed_volume(&out.state.curve).unwrap();
        assert!((n0[0] * v - nt).abs() < 1e-12 * nt);
        assert!(arc_length_spread(&out.state.curve) < 1e-8);
        assert!((out.state.tau - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_step() {
        let c = sphere(32, 1.0, 0.0).unwrap();
        let st = BrineState {
            curve: c,
            total_salt: 1.0,
            tau: 0.0,
        };
        let th = ThermalProfile { a0: 0.0, b0: 0.0 };
        assert!(step_backward_euler(&st, &th, 0.0, &ModelParams::defaults()).is_err());
    }
}
