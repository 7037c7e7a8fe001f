use std::f64::consts::PI;

use super::geometry::{local, trapezoid_weight};
use super::{BrineState, InterfaceCurve, StefanError};

/// Volume-weighted mean height `∫ π r² x₃ x₃′ ds / ∫ π r² x₃′ ds`.
pub fn centroid_x3(curve: &InterfaceCurve) -> f64 {
    let n = curve.len();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        let l = local(curve, i);
        let w = trapezoid_weight(i, n) * PI * l.r * l.r * l.xp;
        num += w * curve.x3[i];
        den += w;
    }
    num / den
}

/// Least-squares slope of the centroid height against `τ`.
pub fn drift_velocity(trajectory: &[BrineState]) -> Result<f64, StefanError> {
    if trajectory.len() < 3 {
        return Err(StefanError::Invalid(format!(
            "drift needs at least 3 frames, got {}",
            trajectory.len()
        )));
    }
    let pts: Vec<(f64, f64)> = trajectory
        .iter()
        .map(|s| (s.tau, centroid_x3(&s.curve)))
        .collect();
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let zm = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - zm)).sum();
    if sxx == 0.0 {
        return Err(StefanError::Invalid("frames share a single time".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stefan::sphere;

    #[test]
    fn centroid_of_shifted_sphere() {
        let c = sphere(64, 0.8, 1.25).unwrap();
        assert!((centroid_x3(&c) - 1.25).abs() < 1e-12);
    }

    #[test]
    fn rigid_translation_slope() {
        let frames: Vec<BrineState> = (0..5)
            .map(|k| BrineState {
                curve: sphere(32, 0.5, -0.01 * k as f64).unwrap(),
                total_salt: 1.0,
                tau: 0.5 * k as f64,
            })
            .collect();
        assert!((drift_velocity(&frames).unwrap() + 0.02).abs() < 1e-12);
        assert!(drift_velocity(&frames[..2]).is_err());
    }
}
