use super::{BrineState, InterfaceCurve, PinchEvent};
use crate::model::ModelParams;

/// Smallest radius over interior local minima of `r`.
pub(crate) fn min_interior_radius(curve: &InterfaceCurve) -> f64 {
    let n = curve.len();
    (1..n - 1)
        .filter(|&i| curve.r[i] <= curve.r[i - 1] && curve.r[i] <= curve.r[i + 1])
        .map(|i| curve.r[i])
        .fold(f64::INFINITY, f64::min)
}

/// Reports a pinch once an interior neck (a local minimum of `r`) drops below
/// `params.r_pinch`.
///
/// The minimum is located by a parabola through the smallest node and its
/// two neighbours.
pub fn detect_pinch(state: &BrineState, params: &ModelParams) -> Option<PinchEvent> {
    let c = &state.curve;
    let n = c.len();
    let (k, rmin) = (1..n - 1)
        .filter(|&i| c.r[i] <= c.r[i - 1] && c.r[i] <= c.r[i + 1])
        .map(|i| (i, c.r[i]))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    if !(rmin < params.r_pinch) {
        return None;
    }
    let ds = c.ds();
    let (rm, r0, rp) = (c.r[k - 1], c.r[k], c.r[k + 1]);
    let curv = rm - 2.0 * r0 + rp;
    let offset = if curv > 0.0 {
        (-(rp - rm) / (2.0 * curv)).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let (xm, x0, xp) = (c.x3[k - 1], c.x3[k], c.x3[k + 1]);
    let x3 = x0 + 0.5 * (xp - xm) * offset + 0.5 * (xp - 2.0 * x0 + xm) * offset * offset;
    Some(PinchEvent {
        tau: state.tau,
        s_location: c.s_nodes[k] + offset * ds,
        x3_location: x3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stefan::{capsule, sphere, InterfaceCurve, Topology};

    fn state(curve: InterfaceCurve) -> BrineState {
        BrineState {
            curve,
            total_salt: 1.0,
            tau: 0.5,
        }
    }

    #[test]
    fn no_pinch_on_convex_shapes() {
        let p = ModelParams::defaults();
        assert!(detect_pinch(&state(sphere(64, 1.0, 0.0).unwrap()), &p).is_none());
        assert!(detect_pinch(&state(capsule(64, 3.0, 1.0).unwrap()), &p).is_none());
        let open = InterfaceCurve::new(
            vec![1.0; 32],
            (0..32).map(|i| i as f64).collect(),
            Topology::OpenPore,
        )
        .unwrap();
        assert!(detect_pinch(&state(open), &p).is_none());
    }

    #[test]
    fn dip_located() {
        let n = 65;
        let ds = 1.0 / n as f64;
        let r: Vec<f64> = (0..n)
            .map(|i| {
                let s = (i as f64 + 0.5) * ds;
                5e-4 + 4.0 * (s - 0.5).powi(2)
            })
            .collect();
        let x3: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let c = InterfaceCurve::new(r, x3, Topology::ClosedInclusion).unwrap();
        let ev = detect_pinch(&state(c), &ModelParams::defaults()).unwrap();
        assert!((ev.s_location - 0.5).abs() < 1e-9);
        assert!((ev.x3_location - 32.0).abs() < 1e-9);
        assert_eq!(ev.tau, 0.5);
    }
}
