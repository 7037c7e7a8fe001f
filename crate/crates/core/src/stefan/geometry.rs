use std::f64::consts::PI;

use super::{BrineState, InterfaceCurve, StefanError, ThermalProfile, Topology};
use crate::model::ModelParams;

/// Stencil entry: node index and the parity signs applied to `r` and `x₃`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Tap {
    pub node: usize,
    pub sr: f64,
    pub sx: f64,
}

/// Neighbours `(i−1, i, i+1)` of node `i` on a closed curve with pole ghosts
/// (`r` odd, `x₃` even across each pole).
pub(crate) fn closed_taps(i: usize, n: usize) -> [Tap; 3] {
    let centre = Tap {
        node: i,
        sr: 1.0,
        sx: 1.0,
    };
    let left = if i == 0 {
        Tap {
            node: 0,
            sr: -1.0,
            sx: 1.0,
        }
    } else {
        Tap {
            node: i - 1,
            sr: 1.0,
            sx: 1.0,
        }
    };
    let right = if i + 1 == n {
        Tap {
            node: n - 1,
            sr: -1.0,
            sx: 1.0,
        }
    } else {
        Tap {
            node: i + 1,
            sr: 1.0,
            sx: 1.0,
        }
    };
    [left, centre, right]
}

/// Node values and first/second derivatives in `s`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Local {
    pub r: f64,
    pub rp: f64,
    pub rpp: f64,
    pub xp: f64,
    pub xpp: f64,
}

pub(crate) fn local(curve: &InterfaceCurve, i: usize) -> Local {
    let n = curve.len();
    let ds = curve.ds();
    match curve.topology {
        Topology::ClosedInclusion => {
            let [a, b, c] = closed_taps(i, n);
            let (rm, rc, rq) = (
                a.sr * curve.r[a.node],
                curve.r[b.node],
                c.sr * curve.r[c.node],
            );
            let (xm, xc, xq) = (
                a.sx * curve.x3[a.node],
                curve.x3[b.node],
                c.sx * curve.x3[c.node],
            );
            Local {
                r: rc,
                rp: (rq - rm) / (2.0 * ds),
                rpp: (rq - 2.0 * rc + rm) / (ds * ds),
                xp: (xq - xm) / (2.0 * ds),
                xpp: (xq - 2.0 * xc + xm) / (ds * ds),
            }
        }
        Topology::OpenPore => {
            let d = |f: &[f64]| -> (f64, f64) {
                if i == 0 {
                    (
                        (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * ds),
                        (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (ds * ds),
                    )
                } else if i + 1 == n {
                    let k = n - 1;
                    (
                        (3.0 * f[k] - 4.0 * f[k - 1] + f[k - 2]) / (2.0 * ds),
                        (2.0 * f[k] - 5.0 * f[k - 1] + 4.0 * f[k - 2] - f[k - 3]) / (ds * ds),
                    )
                } else {
                    (
                        (f[i + 1] - f[i - 1]) / (2.0 * ds),
                        (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (ds * ds),
                    )
                }
            };
            let (rp, rpp) = d(&curve.r);
            let (xp, xpp) = d(&curve.x3);
            Local {
                r: curve.r[i],
                rp,
                rpp,
                xp,
                xpp,
            }
        }
    }
}

/// `κ₀ = −[x′³ + r′²x′ − r r″ x′ + r r′ x″] / (2 r J³)`, `J² = x′² + r′²`.
pub(crate) fn kappa_from_local(l: &Local) -> f64 {
    let j2 = l.xp * l.xp + l.rp * l.rp;
    let p = l.xp * j2 - l.r * l.rpp * l.xp + l.r * l.rp * l.xpp;
    -p / (2.0 * l.r * j2 * j2.sqrt())
}

const DEGENERATE_TANGENT: f64 = 1e-14;

/// Curvature `κ₀` per node (−1/R on a sphere, −1/(2r) on a cylinder).
pub fn curvature(curve: &InterfaceCurve) -> Result<Vec<f64>, StefanError> {
    (0..curve.len())
        .map(|i| {
            let l = local(curve, i);
            if l.xp * l.xp + l.rp * l.rp < DEGENERATE_TANGENT {
                return Err(StefanError::Geometry(format!(
                    "degenerate tangent at node {i}"
                )));
            }
            if !(l.r > 0.0) {
                return Err(StefanError::Geometry(format!(
                    "non-positive radius {} at node {i}",
                    l.r
                )));
            }
            Ok(kappa_from_local(&l))
        })
        .collect()
}

/// Trapezoid weight of node `i` on the closed cell-centred grid, the pole
/// end points contributing zero.
pub(crate) fn trapezoid_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i + 1 == n {
        0.75
    } else {
        1.0
    }
}

/// `∫ π r² e^{−δ_g x₃} x₃′ ds` by the trapezoidal rule.
pub(crate) fn weighted_volume(curve: &InterfaceCurve, delta_g: f64) -> f64 {
    let n = curve.len();
    let ds = curve.ds();
    (0..n)
        .map(|i| {
            let l = local(curve, i);
            trapezoid_weight(i, n) * PI * l.r * l.r * (-delta_g * curve.x3[i]).exp() * l.xp * ds
        })
        .sum()
}

/// Enclosed volume, mm³.
pub fn enclosed_volume(curve: &InterfaceCurve) -> Result<f64, StefanError> {
    require_closed(curve)?;
    Ok(weighted_volume(curve, 0.0))
}

/// Surface area `∫ 2π r J ds`, mm².
pub fn surface_area(curve: &InterfaceCurve) -> f64 {
    let n = curve.len();
    let ds = curve.ds();
    (0..n)
        .map(|i| {
            let l = local(curve, i);
            trapezoid_weight(i, n) * 2.0 * PI * l.r * (l.xp * l.xp + l.rp * l.rp).sqrt() * ds
        })
        .sum()
}

fn require_closed(curve: &InterfaceCurve) -> Result<(), StefanError> {
    if curve.topology != Topology::ClosedInclusion {
        return Err(StefanError::Geometry(
            "enclosed volume requires a closed inclusion".into(),
        ));
    }
    Ok(())
}

/// Quasi-steady salt `N₀(x₃) = N_T e^{−δ_g x₃} / ∫ π r² e^{−δ_g x₃} x₃′ ds`.
pub fn salt_density(state: &BrineState, params: &ModelParams) -> Result<Vec<f64>, StefanError> {
    let curve = &state.curve;
    require_closed(curve)?;
    let d = weighted_volume(curve, params.delta_g);
    if !(d > 0.0) {
        return Err(StefanError::Geometry(format!(
            "non-positive enclosed volume {d}"
        )));
    }
    Ok(curve
        .x3
        .iter()
        .map(|&x| state.total_salt * (-params.delta_g * x).exp() / d)
        .collect())
}

/// `Ṽ_n = ∓κ₀ + N₀ + β(Θ₀ − θ*)` for a given salt field.
pub fn normal_velocity_with_salt(
    curve: &InterfaceCurve,
    n0: &[f64],
    thermal: &ThermalProfile,
    params: &ModelParams,
) -> Result<Vec<f64>, StefanError> {
    let kappa = curvature(curve)?;
    let sign = params.curvature_drive.kappa_sign();
    let ts = params.theta_star_celsius();
    Ok(kappa
        .iter()
        .zip(n0)
        .zip(&curve.x3)
        .map(|((&k, &n), &x)| sign * k + n + params.beta * (thermal.temperature(x) - ts))
        .collect())
}

/// Normal velocity with the volume-normalised salt of a closed inclusion.
pub fn normal_velocity(
    state: &BrineState,
    thermal: &ThermalProfile,
    params: &ModelParams,
) -> Result<Vec<f64>, StefanError> {
    let n0 = salt_density(state, params)?;
    normal_velocity_with_salt(&state.curve, &n0, thermal, params)
}

/// Total salt for which the area-weighted mean of `Ṽ_n` vanishes.
pub fn mean_velocity_salt(
    curve: &InterfaceCurve,
    thermal: &ThermalProfile,
    params: &ModelParams,
) -> Result<f64, StefanError> {
    require_closed(curve)?;
    let n = curve.len();
    let ds = curve.ds();
    let kappa = curvature(curve)?;
    let sign = params.curvature_drive.kappa_sign();
    let ts = params.theta_star_celsius();
    let mut drive = 0.0;
    let mut weight = 0.0;
    for i in 0..n {
        let l = local(curve, i);
        let da = trapezoid_weight(i, n) * 2.0 * PI * l.r * (l.xp * l.xp + l.rp * l.rp).sqrt() * ds;
        let x = curve.x3[i];
        drive += da * (sign * kappa[i] + params.beta * (thermal.temperature(x) - ts));
        weight += da * (-params.delta_g * x).exp();
    }
    let amplitude = -drive / weight;
    Ok(amplitude * weighted_volume(curve, params.delta_g))
}

/// Sphere of radius `radius` centred at height `centre`.
pub fn sphere(n: usize, radius: f64, centre: f64) -> Result<InterfaceCurve, StefanError> {
    let (r, x3) = (0..n)
        .map(|i| {
            let s = (i as f64 + 0.5) / n as f64;
            (radius * (PI * s).sin(), centre - radius * (PI * s).cos())
        })
        .unzip();
    InterfaceCurve::new(r, x3, Topology::ClosedInclusion)
}

/// Open cylinder `r ≡ radius`, `x₃ = s·length`.
pub fn cylinder(n: usize, radius: f64, length: f64) -> Result<InterfaceCurve, StefanError> {
    let r = vec![radius; n];
    let x3 = (0..n)
        .map(|i| (i as f64 + 0.5) / n as f64 * length)
        .collect();
    InterfaceCurve::new(r, x3, Topology::OpenPore)
}

/// Capsule centred at `x₃ = 0`: a cylinder of `length` and `radius` capped by
/// hemispheres, sampled uniformly in arc length and smoothed at the joins.
pub fn capsule(n: usize, length: f64, radius: f64) -> Result<InterfaceCurve, StefanError> {
    if !(length >= 0.0 && radius > 0.0) {
        return Err(StefanError::Invalid(format!(
            "capsule needs length ≥ 0 and radius > 0, got {length}, {radius}"
        )));
    }
    let cap = 0.5 * PI * radius;
    let total = 2.0 * cap + length;
    let half = 0.5 * length;
    let point = |a: f64| -> (f64, f64) {
        if a < cap {
            let t = a / radius;
            (radius * t.sin(), -half - radius * t.cos())
        } else if a <= cap + length {
            (radius, -half + (a - cap))
        } else {
            let t = (total - a) / radius;
            (radius * t.sin(), half + radius * t.cos())
        }
    };
    let (mut r, mut x3): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|i| point((i as f64 + 0.5) / n as f64 * total))
        .unzip();
    let ds_arc = total / n as f64;
    let joins = [cap, cap + length];
    for _ in 0..3 {
        let (r0, x0) = (r.clone(), x3.clone());
        for i in 0..n {
            let a = (i as f64 + 0.5) * ds_arc;
            if joins.iter().all(|j| (a - j).abs() > 3.0 * ds_arc) {
                continue;
            }
            let [p, c, q] = closed_taps(i, n);
            r[i] = 0.25 * (p.sr * r0[p.node] + 2.0 * r0[c.node] + q.sr * r0[q.node]);
            x3[i] = 0.25 * (x0[p.node] + 2.0 * x0[c.node] + x0[q.node]);
        }
    }
    InterfaceCurve::new(r, x3, Topology::ClosedInclusion)
}
