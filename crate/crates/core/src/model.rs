//! The log-periodic power law on log-prices and its linear subproblem.
//!
//! The model log-price is
//!
//! ```text
//! ln p(t) = A + B (tc - t)^m + C (tc - t)^m cos(omega ln(tc - t) - phi)
//! ```
//!
//! For fixed `(tc, m, omega)` it is linear in `A`, `B`, `C1 = C cos phi` and
//! `C2 = C sin phi`, so those four are solved in closed form ("subordinated")
//! and the nonlinear search only runs over three dimensions.

use std::f64::consts::TAU;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{PriceSeries, TimeAxis};

/// Above this condition estimate of the scaled normal matrix the solve falls
/// back to an SVD of the design matrix.
pub const NORMAL_EQUATIONS_MAX_CONDITION: f64 = 1e12;

/// Relative singular-value floor below which the basis counts as rank-deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Minimum number of observations the linear subproblem can determine.
pub const MIN_WINDOW_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpplParams {
    /// Critical time, decimal years on the window's time axis.
    pub tc: f64,
    pub m: f64,
    pub omega: f64,
    /// Phase in `[0, 2pi)`.
    pub phi: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Same model with the oscillation split into cosine and sine amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizedParams {
    pub tc: f64,
    pub m: f64,
    pub omega: f64,
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Basis `[1, tau^m, tau^m cos(omega ln tau), tau^m sin(omega ln tau)]`.
#[inline]
fn basis(tau: f64, m: f64, omega: f64) -> [f64; 4] {
    let f = tau.powf(m);
    let (s, c) = (omega * tau.ln()).sin_cos();
    [1.0, f, f * c, f * s]
}

#[inline]
fn combine(coef: &[f64; 4], row: &[f64; 4]) -> f64 {
    coef[0] * row[0] + coef[1] * row[1] + coef[2] * row[2] + coef[3] * row[3]
}

fn check_domain(t: f64, tc: f64) -> Result<f64> {
    let tau = tc - t;
    if tau > 0.0 {
        Ok(tau)
    } else {
        Err(Error::Domain { t, tc })
    }
}

impl LpplParams {
    pub fn linearized(&self) -> LinearizedParams {
        LinearizedParams {
            tc: self.tc,
            m: self.m,
            omega: self.omega,
            a: self.a,
            b: self.b,
            c1: self.c * self.phi.cos(),
            c2: self.c * self.phi.sin(),
        }
    }

    /// Same parameters with tc moved by `dt` years.
    pub fn shifted(&self, dt: f64) -> Self {
        Self {
            tc: self.tc + dt,
            ..*self
        }
    }
}

impl LinearizedParams {
    fn coefficients(&self) -> [f64; 4] {
        [self.a, self.b, self.c1, self.c2]
    }

    /// Polar form with `C >= 0` and `phi` normalized to `[0, 2pi)`.
    pub fn to_params(&self) -> LpplParams {
        LpplParams {
            tc: self.tc,
            m: self.m,
            omega: self.omega,
            phi: normalize_phase(self.c2.atan2(self.c1)),
            a: self.a,
            b: self.b,
            c: self.c1.hypot(self.c2),
        }
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        let tau = check_domain(t, self.tc)?;
        Ok(combine(
            &self.coefficients(),
            &basis(tau, self.m, self.omega),
        ))
    }
}

fn normalize_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Model log-price at `t`.
pub fn lppl_value(p: &LpplParams, t: f64) -> Result<f64> {
    let tau = check_domain(t, p.tc)?;
    let f = tau.powf(p.m);
    Ok(p.a + p.b * f + p.c * f * (p.omega * tau.ln() - p.phi).cos())
}

/// One analysis window on a shared time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FitWindow {
    times: Vec<f64>,
    logp: Vec<f64>,
    start_date: NaiveDate,
    end_date: NaiveDate,
    axis: TimeAxis,
}

impl FitWindow {
    pub fn new(
        times: Vec<f64>,
        logp: Vec<f64>,
        start_date: NaiveDate,
        end_date: NaiveDate,
        axis: TimeAxis,
    ) -> Result<Self> {
        if times.len() != logp.len() {
            return Err(Error::InvalidWindow(format!(
                "{} times but {} log-prices",
                times.len(),
                logp.len()
            )));
        }
        if times.len() < MIN_WINDOW_LEN {
            return Err(Error::InvalidWindow(format!(
                "{} observations, at least {MIN_WINDOW_LEN} required",
                times.len()
            )));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidWindow("times not strictly increasing".into()));
        }
        if !logp.iter().chain(&times).all(|v| v.is_finite()) {
            return Err(Error::InvalidWindow("non-finite value".into()));
        }
        if start_date > end_date {
            return Err(Error::InvalidRange {
                start: start_date,
                end: end_date,
            });
        }
        Ok(Self {
            times,
            logp,
            start_date,
            end_date,
            axis,
        })
    }

    /// Window over `start..=end` of `series`, timed on `axis`.
    pub fn from_series(
        series: &PriceSeries,
        axis: TimeAxis,
        start: NaiveDate,
        end: NaiveDate,
        min_observations: usize,
    ) -> Result<Self> {
        let slice = series.slice(start, end, min_observations.max(MIN_WINDOW_LEN))?;
        let (times, logp) = slice
            .observations()
            .iter()
            .map(|o| (axis.to_time(o.date), o.price.ln()))
            .unzip();
        Self::new(times, logp, start, end, axis)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn logp(&self) -> &[f64] {
        &self.logp
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn end_date(&self) -> NaiveDate {
        self.end_date
    }

    pub fn axis(&self) -> TimeAxis {
        self.axis
    }

    /// Time of the window's end date (not earlier than its last observation).
    pub fn end_time(&self) -> f64 {
        self.axis.to_time(self.end_date)
    }

    pub fn last_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Copy with every log-price moved by `dy` (prices scaled by `exp(dy)`).
    pub fn with_logp_offset(&self, dy: f64) -> Self {
        Self {
            logp: self.logp.iter().map(|y| y + dy).collect(),
            ..self.clone()
        }
    }
}

pub fn residuals(p: &LpplParams, w: &FitWindow) -> Result<Vec<f64>> {
    w.times
        .iter()
        .zip(&w.logp)
        .map(|(&t, &y)| Ok(y - lppl_value(p, t)?))
        .collect()
}

pub fn sse(p: &LpplParams, w: &FitWindow) -> Result<f64> {
    Ok(residuals(p, w)?.iter().map(|r| r * r).sum())
}

/// Sum of squared residuals of the linearized form.
pub fn linearized_sse(p: &LinearizedParams, w: &FitWindow) -> Result<f64> {
    let coef = p.coefficients();
    let mut total = 0.0;
    for (&t, &y) in w.times.iter().zip(&w.logp) {
        let r = y - combine(&coef, &basis(check_domain(t, p.tc)?, p.m, p.omega));
        total += r * r;
    }
    Ok(total)
}

/// Least-squares optimal `(A, B, C1, C2)` for fixed `(tc, m, omega)`, with the
/// resulting sum of squared residuals.
///
/// Solves the Jacobi-scaled normal equations by Cholesky with one step of
/// iterative refinement. When the scaled normal matrix has condition above
/// [`NORMAL_EQUATIONS_MAX_CONDITION`] the design matrix is solved by SVD
/// instead, and a relative singular value under [`RANK_TOLERANCE`] is reported
/// as [`Error::DegenerateBasis`].
pub fn subordinate(tc: f64, m: f64, omega: f64, w: &FitWindow) -> Result<(LinearizedParams, f64)> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::InvalidParams(format!("m = {m} outside (0, 1)")));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "omega = {omega} must be positive"
        )));
    }
    check_domain(w.last_time(), tc)?;

    let rows: Vec<[f64; 4]> = w.times.iter().map(|&t| basis(tc - t, m, omega)).collect();
    let degenerate = || Error::DegenerateBasis { tc, m, omega };

    let mut gram = Matrix4::<f64>::zeros();
    let mut rhs = Vector4::<f64>::zeros();
    for (row, &y) in rows.iter().zip(&w.logp) {
        for i in 0..4 {
            rhs[i] += row[i] * y;
            for j in i..4 {
                gram[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..4 {
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)];
        }
    }
    let diag = gram.diagonal();
    if diag.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(degenerate());
    }
    let scale = diag.map(|d| 1.0 / d.sqrt());
    let scaled = Matrix4::from_fn(|i, j| gram[(i, j)] * scale[i] * scale[j]);

    let eig = SymmetricEigen::new(scaled).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };

    let coef = match scaled.cholesky() {
        Some(chol) if condition <= NORMAL_EQUATIONS_MAX_CONDITION => {
            let mut beta = chol.solve(&rhs.component_mul(&scale)).component_mul(&scale);
            // One refinement step on the residual recovers most of the
            // accuracy the squared condition number costs.
            let coef = [beta[0], beta[1], beta[2], beta[3]];
            let mut correction = Vector4::<f64>::zeros();
            for (row, &y) in rows.iter().zip(&w.logp) {
                let r = y - combine(&coef, row);
                for i in 0..4 {
                    correction[i] += row[i] * r;
                }
            }
            beta += chol
                .solve(&correction.component_mul(&scale))
                .component_mul(&scale);
            [beta[0], beta[1], beta[2], beta[3]]
        }
        _ => {
            let x = DMatrix::from_fn(rows.len(), 4, |i, j| rows[i][j] * scale[j]);
            let svd = x.svd(true, true);
            let sv = &svd.singular_values;
            if sv.min().is_nan() || sv.min() <= sv.max() * RANK_TOLERANCE {
                return Err(degenerate());
            }
            let y = DVector::from_column_slice(&w.logp);
            let z = svd.solve(&y, 0.0).map_err(|_| degenerate())?;
            [
                z[0] * scale[0],
                z[1] * scale[1],
                z[2] * scale[2],
                z[3] * scale[3],
            ]
        }
    };
    if coef.iter().any(|c| !c.is_finite()) {
        return Err(degenerate());
    }

    let mut total = 0.0;
    for (row, &y) in rows.iter().zip(&w.logp) {
        let r = y - combine(&coef, row);
        total += r * r;
    }
    let params = LinearizedParams {
        tc,
        m,
        omega,
        a: coef[0],
        b: coef[1],
        c1: coef[2],
        c2: coef[3],
    };
    Ok((params, total))
}

/// Faster-than-exponential growth checks on a fitted parameter set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BubbleDiagnostic {
    /// `B < 0`: log-price accelerates upward toward tc.
    pub b_negative: bool,
    /// `0 < m < 1`.
    pub m_in_unit_interval: bool,
    pub tc_after_window_end: bool,
    /// Whether a bounded fit stayed below the upper bounds of m and tc.
    /// `None` when the parameters did not come from a bounded search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior: Option<bool>,
    pub bubble_like: bool,
    pub reasons: Vec<String>,
}

impl BubbleDiagnostic {
    fn finish(mut self) -> Self {
        let mut reasons = Vec::new();
        if !self.b_negative {
            reasons.push("B sign".to_owned());
        }
        if !self.m_in_unit_interval {
            reasons.push("exponent out of (0,1)".to_owned());
        }
        if !self.tc_after_window_end {
            reasons.push("tc not after window end".to_owned());
        }
        if self.interior == Some(false) {
            reasons.push("pinned to m or tc upper bound".to_owned());
        }
        self.bubble_like = reasons.is_empty();
        self.reasons = reasons;
        self
    }

    /// Adds the search-box check. A fit pinned to the upper bound of m or tc has
    /// its unbounded optimum at an exponent of one or more, or at no finite tc:
    /// exponential growth at best.
    pub fn with_interior(self, interior: bool) -> Self {
        Self {
            interior: Some(interior),
            ..self
        }
        .finish()
    }
}

pub fn is_bubble_like(p: &LpplParams, w: &FitWindow) -> BubbleDiagnostic {
    BubbleDiagnostic {
        b_negative: p.b < 0.0,
        m_in_unit_interval: p.m > 0.0 && p.m < 1.0,
        tc_after_window_end: p.tc > w.end_time(),
        interior: None,
        bubble_like: false,
        reasons: Vec::new(),
    }
    .finish()
}
