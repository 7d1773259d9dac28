//! Nelder-Mead simplex descent with trial points projected onto a box.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Largest coordinate distance of any vertex from the best one.
    pub xtol: f64,
    /// Largest objective gap between worst and best vertex.
    pub ftol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOutcome<const N: usize> {
    pub x: [f64; N],
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn clamp<const N: usize>(x: [f64; N], lo: &[f64; N], hi: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| x[i].clamp(lo[i], hi[i]))
}

/// `a + s * (b - a)`, projected onto the box.
fn along<const N: usize>(
    a: &[f64; N],
    b: &[f64; N],
    s: f64,
    lo: &[f64; N],
    hi: &[f64; N],
) -> [f64; N] {
    clamp(std::array::from_fn(|i| a[i] + s * (b[i] - a[i])), lo, hi)
}

/// Minimizes `f` over the box `[lo, hi]` from `start`.
///
/// The initial simplex steps `step[i]` along each axis, flipping direction when
/// the step would leave the box. Non-finite objective values rank as `+inf`.
/// The returned point is never worse than `start`.
pub fn minimize<const N: usize, F>(
    f: F,
    start: [f64; N],
    step: [f64; N],
    lo: [f64; N],
    hi: [f64; N],
    opts: &SimplexOptions,
) -> SimplexOutcome<N>
where
    F: Fn(&[f64; N]) -> f64,
{
    let eval = |x: &[f64; N]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let x0 = clamp(start, &lo, &hi);
    let mut vertices = Vec::with_capacity(N + 1);
    vertices.push(x0);
    for i in 0..N {
        let mut v = x0;
        v[i] = if x0[i] + step[i] <= hi[i] {
            x0[i] + step[i]
        } else {
            (x0[i] - step[i]).max(lo[i])
        };
        vertices.push(v);
    }
    let mut values: Vec<f64> = vertices.iter().map(eval).collect();

    let mut iterations = 0;
    let mut converged = false;
    loop {
        // Stable sort keeps the older vertex first on ties.
        let mut order: Vec<usize> = (0..=N).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        vertices = order.iter().map(|&i| vertices[i]).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread_x = vertices[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&vertices[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread_f = values[N] - values[0];
        if spread_x <= opts.xtol && spread_f <= opts.ftol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let centroid: [f64; N] =
            std::array::from_fn(|i| vertices[..N].iter().map(|v| v[i]).sum::<f64>() / N as f64);
        let worst = vertices[N];

        let xr = along(&centroid, &worst, -REFLECT, &lo, &hi);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(&centroid, &worst, -REFLECT * EXPAND, &lo, &hi);
            let fe = eval(&xe);
            if fe < fr {
                vertices[N] = xe;
                values[N] = fe;
            } else {
                vertices[N] = xr;
                values[N] = fr;
            }
            continue;
        }
        if fr < values[N - 1] {
            vertices[N] = xr;
            values[N] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < values[N] {
            let xc = along(&centroid, &xr, CONTRACT, &lo, &hi);
            let fc = eval(&xc);
            (xc, fc, fc <= fr)
        } else {
            let xc = along(&centroid, &worst, CONTRACT, &lo, &hi);
            let fc = eval(&xc);
            (xc, fc, fc < values[N])
        };
        if accept {
            vertices[N] = xc;
            values[N] = fc;
            continue;
        }
        let best = vertices[0];
        for k in 1..=N {
            vertices[k] = along(&best, &vertices[k], SHRINK, &lo, &hi);
            values[k] = eval(&vertices[k]);
        }
    }

    SimplexOutcome {
        x: vertices[0],
        value: values[0],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OPTS: SimplexOptions = SimplexOptions {
        max_iterations: 2000,
        xtol: 1e-10,
        ftol: 1e-14,
    };

    fn rosenbrock(x: &[f64; 2]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn finds_rosenbrock_minimum() {
        let out = minimize(
            rosenbrock,
            [-1.2, 1.0],
            [0.1, 0.1],
            [-5.0; 2],
            [5.0; 2],
            &OPTS,
        );
        assert!(out.converged);
        assert!(
            (out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            out.x
        );
    }

    #[test]
    fn respects_bounds() {
        // Unconstrained minimum at (3, -3); box forces (1, -1).
        let f = |x: &[f64; 2]| (x[0] - 3.0).powi(2) + (x[1] + 3.0).powi(2);
        let out = minimize(f, [0.0, 0.0], [0.5, 0.5], [-1.0; 2], [1.0; 2], &OPTS);
        assert!(out.converged);
        assert!(
            (out.x[0] - 1.0).abs() < 1e-9 && (out.x[1] + 1.0).abs() < 1e-9,
            "{:?}",
            out.x
        );
    }

    #[test]
    fn start_on_upper_bound_steps_inward() {
        let f = |x: &[f64; 1]| (x[0] - 0.5).powi(2);
        let out = minimize(f, [1.0], [0.25], [0.0], [1.0], &OPTS);
        assert!((out.x[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn never_worse_than_start_and_reports_non_convergence() {
        let opts = SimplexOptions {
            max_iterations: 3,
            ..OPTS
        };
        let start = [-1.2, 1.0];
        let out = minimize(rosenbrock, start, [0.1, 0.1], [-5.0; 2], [5.0; 2], &opts);
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
        assert!(out.value <= rosenbrock(&start));
    }

    #[test]
    fn nan_objective_is_treated_as_infinite() {
        let f = |x: &[f64; 1]| {
            if x[0] < 0.0 {
                f64::NAN
            } else {
                (x[0] - 1.0).powi(2)
            }
        };
        let out = minimize(f, [0.05], [0.1], [-1.0], [3.0], &OPTS);
        assert!((out.x[0] - 1.0).abs() < 1e-8);
    }
}
