//! Fixtures and oracles shared by the integration tests.
#![allow(dead_code)]

use std::io::Write;

use chrono::{Duration, NaiveDate};
use lppl::series::DAYS_PER_YEAR;
use lppl::{generate, LpplParams, PriceSeries, SynthSpec, TimeAxis};

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// Writes straight to the process stdout so the line survives test capture.
pub fn verdict(criterion: u32, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let line = format!("acceptance criterion {criterion}: {tag} - {detail}\n");
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

pub fn note(criterion: u32, detail: &str) {
    let line = format!("acceptance criterion {criterion}: NOTE - {detail}\n");
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
}

/// Truth with `tc` placed `tc_days_after_end` past `end`, on the `start` epoch.
pub fn truth_after(
    start: NaiveDate,
    end: NaiveDate,
    tc_days_after_end: f64,
    shape: LpplParams,
) -> LpplParams {
    LpplParams {
        tc: TimeAxis::new(start).to_time(end) + tc_days_after_end / DAYS_PER_YEAR,
        ..shape
    }
}

pub fn synth(
    start: NaiveDate,
    end: NaiveDate,
    truth: LpplParams,
    weekdays: bool,
    sigma: f64,
    seed: u64,
) -> (PriceSeries, LpplParams) {
    generate(&SynthSpec {
        truth,
        start_date: start,
        end_date: end,
        weekdays_only: weekdays,
        noise_sigma: sigma,
        seed,
    })
    .unwrap()
}

/// Daily `exp(a + rate * t)` with `t` in years since `start`.
pub fn exponential(start: NaiveDate, days: i64, a: f64, rate: f64) -> PriceSeries {
    let obs = (0..days)
        .map(|k| lppl::Observation {
            date: start + Duration::days(k),
            price: (a + rate * k as f64 / DAYS_PER_YEAR).exp(),
        })
        .collect();
    PriceSeries::new(obs).unwrap()
}

/// Rows `[1, tau^m, tau^m cos(w ln tau), tau^m sin(w ln tau)]`.
pub fn design(times: &[f64], tc: f64, m: f64, omega: f64) -> Vec<[f64; 4]> {
    times
        .iter()
        .map(|&t| {
            let tau = tc - t;
            let f = tau.powf(m);
            let g = omega * tau.ln();
            [1.0, f, f * g.cos(), f * g.sin()]
        })
        .collect()
}

/// Dense least squares by Householder QR on the unscaled design matrix.
#[allow(clippy::needless_range_loop)]
pub fn householder_lstsq(x: &[[f64; 4]], y: &[f64]) -> [f64; 4] {
    let n = x.len();
    let mut a: Vec<[f64; 4]> = x.to_vec();
    let mut b = y.to_vec();
    for k in 0..4 {
        let norm = (k..n).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..n).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|e| e * e).sum();
        if vv == 0.0 {
            continue;
        }
        for j in k..4 {
            let s: f64 = (k..n).map(|i| v[i - k] * a[i][j]).sum::<f64>() * 2.0 / vv;
            for i in k..n {
                a[i][j] -= s * v[i - k];
            }
        }
        let s: f64 = (k..n).map(|i| v[i - k] * b[i]).sum::<f64>() * 2.0 / vv;
        for i in k..n {
            b[i] -= s * v[i - k];
        }
    }
    let mut beta = [0.0; 4];
    for k in (0..4).rev() {
        let tail: f64 = (k + 1..4).map(|j| a[k][j] * beta[j]).sum();
        beta[k] = (b[k] - tail) / a[k][k];
    }
    beta
}

pub fn sse_of(x: &[[f64; 4]], y: &[f64], beta: &[f64; 4]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(row, yi)| {
            let r = yi - row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
            r * r
        })
        .sum()
}

/// Linear-interpolation quantile of integers at `p * (n - 1)`, rounded half up.
pub fn brute_quantile_day(days: &[i64], p: f64) -> i64 {
    let mut s = days.to_vec();
    s.sort_unstable();
    let pos = p * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    let frac = pos - lo as f64;
    let v = (1.0 - frac) * s[lo] as f64 + frac * s[hi] as f64;
    (v + 0.5).floor() as i64
}
