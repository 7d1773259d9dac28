//! Gauss–Newton polish of a simplex minimum.
//!
//! A function-value method can only place a minimum to roughly the square
//! root of machine precision, so two fits of data that differ in the last bit
//! can stop visibly apart. A few Gauss–Newton steps on the full seven-parameter
//! residual drive the gradient itself to zero. Linear parameters are re-solved
//! exactly after each step, a step is only taken if the sse does not grow
//! beyond rounding noise, and the caller keeps the lower of the two sse values.

use nalgebra::{DMatrix, DVector};

use crate::model::{subordinate, FitWindow, LinearizedParams};
use crate::series::DAYS_PER_YEAR;

const MAX_STEPS: usize = 50;
const MAX_HALVINGS: usize = 30;
const RCOND: f64 = 1e-13;
/// Relative sse increase treated as rounding noise. Near the minimum the sse
/// is flat to the last few bits over a visible parameter range, so a strict
/// decrease test would stop on noise rather than on a zero gradient.
const SSE_SLACK: f64 = 1e-13;
/// Relative step size at which the polish stops.
const STEP_TOL: f64 = 1e-12;

/// `x` is `(tc offset in days past end_time, m, omega)`.
pub(crate) fn polish(
    x: [f64; 3],
    start: (LinearizedParams, f64),
    w: &FitWindow,
    lo: [f64; 3],
    hi: [f64; 3],
) -> ([f64; 3], LinearizedParams, f64) {
    let end = w.end_time();
    let eval = |x: &[f64; 3]| subordinate(end + x[0] / DAYS_PER_YEAR, x[1], x[2], w).ok();
    let (mut x, (mut lin, mut sse)) = (x, start);

    for _ in 0..MAX_STEPS {
        let Some(delta) = gauss_newton_step(&lin, w) else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial = [0, 1, 2].map(|i| (x[i] + t * delta[i]).clamp(lo[i], hi[i]));
            if trial == x {
                break;
            }
            if let Some((l, s)) = eval(&trial) {
                if s <= sse * (1.0 + SSE_SLACK) {
                    x = trial;
                    lin = l;
                    sse = s;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        let tiny = (0..3).all(|i| (t * delta[i]).abs() <= STEP_TOL * (1.0 + x[i].abs()));
        if !accepted || tiny {
            break;
        }
    }
    (x, lin, sse)
}

/// Step in `(offset days, m, omega)` from the linearized full residual.
fn gauss_newton_step(p: &LinearizedParams, w: &FitWindow) -> Option<[f64; 3]> {
    let n = w.len();
    let mut jac = DMatrix::<f64>::zeros(n, 7);
    let mut r = DVector::<f64>::zeros(n);
    for (i, (&t, &y)) in w.times().iter().zip(w.logp()).enumerate() {
        let tau = p.tc - t;
        let ln_tau = tau.ln();
        let f = tau.powf(p.m);
        let (sin, cos) = (p.omega * ln_tau).sin_cos();
        let amp = p.b + p.c1 * cos + p.c2 * sin;
        let turn = -p.c1 * sin + p.c2 * cos;
        r[i] = y - (p.a + f * amp);
        jac[(i, 0)] = f * (p.m * amp + p.omega * turn) / tau / DAYS_PER_YEAR;
        jac[(i, 1)] = f * ln_tau * amp;
        jac[(i, 2)] = f * ln_tau * turn;
        jac[(i, 3)] = 1.0;
        jac[(i, 4)] = f;
        jac[(i, 5)] = f * cos;
        jac[(i, 6)] = f * sin;
    }
    let scale: Vec<f64> = jac
        .column_iter()
        .map(|c| {
            let norm = c.norm();
            if norm > 0.0 && norm.is_finite() {
                1.0 / norm
            } else {
                0.0
            }
        })
        .collect();
    for (j, s) in scale.iter().enumerate() {
        jac.column_mut(j).scale_mut(*s);
    }
    if !jac.iter().chain(r.iter()).all(|v| v.is_finite()) {
        return None;
    }
    let svd = jac.svd(true, true);
    let eps = svd.singular_values.max() * RCOND;
    let z = svd.solve(&r, eps).ok()?;
    let step = [z[0] * scale[0], z[1] * scale[1], z[2] * scale[2]];
    step.iter().all(|v| v.is_finite()).then_some(step)
}
