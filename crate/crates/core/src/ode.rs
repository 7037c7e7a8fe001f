//! Dormand–Prince 5(4) integrator with dense output and terminal events.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_init: 1e-3,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// Reached the end of the interval.
    End,
    /// Event `index` crossed zero.
    Event(usize),
}

#[derive(Debug, Clone)]
pub struct OdeSolution<const D: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; D]>,
    pub termination: Termination,
}

impl<const D: usize> OdeSolution<D> {
    pub fn last(&self) -> (f64, [f64; D]) {
        (*self.t.last().unwrap(), *self.y.last().unwrap())
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for i in 0..D {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

struct Dense<const D: usize> {
    t0: f64,
    h: f64,
    r: [[f64; D]; 5],
}

impl<const D: usize> Dense<D> {
    fn eval(&self, t: f64) -> [f64; D] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let mut out = [0.0; D];
        for i in 0..D {
            out[i] = self.r[0][i]
                + s * (self.r[1][i] + s1 * (self.r[2][i] + s * (self.r[3][i] + s1 * self.r[4][i])));
        }
        out
    }
}

/// Integrates `y′ = f(t, y)` from `t0` towards `t_end`.
///
/// Each event function is terminal: integration stops at the first zero
/// crossing, located by bisection on the dense output.
pub fn integrate<const D: usize, F, G>(
    f: F,
    t0: f64,
    y0: [f64; D],
    t_end: f64,
    events: &[G],
    opts: &OdeOptions,
) -> Result<OdeSolution<D>, OdeError>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
    G: Fn(f64, &[f64; D]) -> f64,
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut sol = OdeSolution {
        t: vec![t],
        y: vec![y],
        termination: Termination::End,
    };
    let mut g_prev: Vec<f64> = events.iter().map(|g| g(t, &y)).collect();
    let mut h = opts.h_init.min(opts.h_max).min((t_end - t0).abs()) * dir;
    let mut steps = 0usize;
    while (t_end - t) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(OdeError::TooManySteps {
                t,
                max_steps: opts.max_steps,
            });
        }
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        if h.abs() < 4.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(OdeError::StepUnderflow { t });
        }
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(t + h, &y_new);
        let mut err = 0.0;
        let mut finite = true;
        for i in 0..D {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
            finite &= y_new[i].is_finite() && k7[i].is_finite();
        }
        err = (err / D as f64).sqrt();
        if !finite || !err.is_finite() {
            h *= 0.25;
            continue;
        }
        if err <= 1.0 {
            let mut r = [[0.0; D]; 5];
            for i in 0..D {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                r[0][i] = y[i];
                r[1][i] = ydiff;
                r[2][i] = bspl;
                r[3][i] = ydiff - h * k7[i] - bspl;
                r[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let dense = Dense { t0: t, h, r };
            let t_new = t + h;
            let mut hit: Option<(usize, f64)> = None;
            for (j, g) in events.iter().enumerate() {
                let g_new = g(t_new, &y_new);
                if g_prev[j] == 0.0 || g_prev[j].signum() == g_new.signum() {
                    g_prev[j] = g_new;
                    continue;
                }
                let (mut a, mut b) = (t, t_new);
                let ga = g_prev[j];
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m == a || m == b {
                        break;
                    }
                    let gm = g(m, &dense.eval(m));
                    if gm.signum() == ga.signum() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                let tc = b;
                if hit.map_or(true, |(_, th)| (tc - th) * dir < 0.0) {
                    hit = Some((j, tc));
                }
                g_prev[j] = g_new;
            }
            if let Some((j, tc)) = hit {
                sol.t.push(tc);
                sol.y.push(dense.eval(tc));
                sol.termination = Termination::Event(j);
                return Ok(sol);
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            sol.t.push(t);
            sol.y.push(y);
            let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 10.0);
            h = (h * fac).abs().min(opts.h_max) * dir;
        } else {
            let fac = (0.9 * err.powf(-0.2)).max(0.2);
            h *= fac;
        }
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    type Ev = fn(f64, &[f64; 2]) -> f64;

    #[test]
    fn harmonic_oscillator_accuracy() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let sol = integrate(
            f,
            0.0,
            [0.0, 1.0],
            10.0,
            &[] as &[Ev],
            &OdeOptions::default(),
        )
        .unwrap();
        let (t, y) = sol.last();
        assert_eq!(t, 10.0);
        assert!((y[0] - 10f64.sin()).abs() < 1e-8);
        assert!((y[1] - 10f64.cos()).abs() < 1e-8);
        assert_eq!(sol.termination, Termination::End);
    }

    #[test]
    fn event_located_on_dense_output() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let ev = |_t: f64, y: &[f64; 2]| y[0] - 0.5;
        let sol = integrate(f, 0.0, [0.0, 1.0], 10.0, &[ev], &OdeOptions::default()).unwrap();
        let (t, y) = sol.last();
        assert_eq!(sol.termination, Termination::Event(0));
        assert!((t - 0.5f64.asin()).abs() < 1e-9, "t={t}");
        assert!((y[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn backward_direction() {
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let sol = integrate(
            f,
            1.0,
            [1.0],
            0.0,
            &[] as &[fn(f64, &[f64; 1]) -> f64],
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((sol.last().1[0] - (-1f64).exp()).abs() < 1e-9);
    }
}
