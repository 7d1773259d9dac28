//! Start-date scan: fit a family of windows sharing one end date, then turn the
//! fitted critical times into crash windows.

use chrono::{Duration, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitter::{fit, FitConfig, FitResult};
use crate::model::{lppl_value, FitWindow};
use crate::series::{PriceSeries, TimeAxis, DAYS_PER_YEAR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub step_days: u32,
    pub n_windows: usize,
    pub end_date: NaiveDate,
    pub first_start_date: NaiveDate,
    pub quantile_lo: f64,
    pub quantile_hi: f64,
    pub extrapolation_days: u32,
    pub samples_per_day: u32,
    pub fit: FitConfig,
}

impl ScanConfig {
    /// Defaults: 10 windows 15 days apart, 20%/80% quantiles, 100-day
    /// extrapolation at one sample per day.
    pub fn new(first_start_date: NaiveDate, end_date: NaiveDate) -> Self {
        Self {
            step_days: 15,
            n_windows: 10,
            end_date,
            first_start_date,
            quantile_lo: 0.20,
            quantile_hi: 0.80,
            extrapolation_days: 100,
            samples_per_day: 1,
            fit: FitConfig::default(),
        }
    }

    pub fn window_start(&self, index: usize) -> NaiveDate {
        self.first_start_date + Duration::days(index as i64 * i64::from(self.step_days))
    }

    pub fn validate(&self) -> Result<()> {
        self.fit.validate()?;
        if self.step_days == 0 || self.n_windows == 0 || self.samples_per_day == 0 {
            return Err(Error::InvalidConfig(
                "step_days, n_windows and samples_per_day must be positive".into(),
            ));
        }
        check_quantiles(self.quantile_lo, self.quantile_hi)?;
        let last = self.window_start(self.n_windows - 1);
        if last >= self.end_date {
            return Err(Error::InvalidRange {
                start: last,
                end: self.end_date,
            });
        }
        Ok(())
    }
}

fn check_quantiles(lo: f64, hi: f64) -> Result<()> {
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "quantiles need 0 <= lo < hi <= 1, got {lo} and {hi}"
        )));
    }
    Ok(())
}

/// Which part of the critical-time distribution a crash window spans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coverage {
    Quantiles { lo: f64, hi: f64 },
    Range,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrashWindow {
    pub lo: NaiveDate,
    pub hi: NaiveDate,
    pub coverage: Coverage,
}

impl CrashWindow {
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.lo <= date && date <= self.hi
    }

    pub fn is_within(&self, other: &CrashWindow) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn width_days(&self) -> i64 {
        (self.hi - self.lo).num_days()
    }
}

/// Linear interpolation between order statistics at zero-based position
/// `p * (n - 1)`. `sorted` must be ascending and non-empty.
pub fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = (pos.floor() as usize).min(sorted.len() - 1);
    let frac = pos - i as f64;
    if i + 1 < sorted.len() && frac > 0.0 {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Quantile window of unrounded critical times; only the endpoints are rounded.
pub fn quantile_window_from_times(
    axis: &TimeAxis,
    tcs: &[f64],
    lo: f64,
    hi: f64,
) -> Result<CrashWindow> {
    check_quantiles(lo, hi)?;
    if tcs.is_empty() {
        return Err(Error::EmptyDates);
    }
    let s = sorted(tcs);
    Ok(CrashWindow {
        lo: axis.from_time(interpolated_quantile(&s, lo))?,
        hi: axis.from_time(interpolated_quantile(&s, hi))?,
        coverage: Coverage::Quantiles { lo, hi },
    })
}

pub fn range_from_times(axis: &TimeAxis, tcs: &[f64]) -> Result<CrashWindow> {
    if tcs.is_empty() {
        return Err(Error::EmptyDates);
    }
    let s = sorted(tcs);
    Ok(CrashWindow {
        lo: axis.from_time(s[0])?,
        hi: axis.from_time(s[s.len() - 1])?,
        coverage: Coverage::Range,
    })
}

/// Quantile window of calendar dates, rounded to the nearest day.
pub fn quantile_dates(tc_dates: &[NaiveDate], lo: f64, hi: f64) -> Result<CrashWindow> {
    check_quantiles(lo, hi)?;
    let base = *tc_dates.iter().min().ok_or(Error::EmptyDates)?;
    // Whole days from the earliest date; the same quantiles as on a
    // decimal-year axis, without the extra division.
    let days = sorted(
        &tc_dates
            .iter()
            .map(|d| (*d - base).num_days() as f64)
            .collect::<Vec<_>>(),
    );
    let at = |p: f64| base + Duration::days(interpolated_quantile(&days, p).round() as i64);
    Ok(CrashWindow {
        lo: at(lo),
        hi: at(hi),
        coverage: Coverage::Quantiles { lo, hi },
    })
}

pub fn full_range(tc_dates: &[NaiveDate]) -> Result<CrashWindow> {
    let lo = *tc_dates.iter().min().ok_or(Error::EmptyDates)?;
    let hi = *tc_dates.iter().max().ok_or(Error::EmptyDates)?;
    Ok(CrashWindow {
        lo,
        hi,
        coverage: Coverage::Range,
    })
}

/// Windows `k = 0..n_windows` spanning `[first_start + k * step, end]`, all on
/// the series' own time axis.
pub fn make_windows(series: &PriceSeries, cfg: &ScanConfig) -> Result<Vec<FitWindow>> {
    cfg.validate()?;
    let axis = series.time_axis();
    (0..cfg.n_windows)
        .map(|index| {
            let start = cfg.window_start(index);
            FitWindow::from_series(series, axis, start, cfg.end_date, cfg.fit.min_observations)
                .map_err(|e| match e {
                    Error::WindowTooShort {
                        start,
                        end,
                        found,
                        required,
                    } => Error::WindowUnderrun {
                        index,
                        start,
                        end,
                        found,
                        required,
                    },
                    other => other,
                })
        })
        .collect()
}

/// A window whose fit is excluded from the crash windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowFailure {
    pub index: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub reason: String,
    /// The unconverged fit, when there was one.
    pub fit: Option<FitResult>,
}

/// A successful fit and the index of its window in the scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowFit {
    pub index: usize,
    #[serde(flatten)]
    pub result: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub epoch: NaiveDate,
    /// Successful fits ordered by start date.
    pub fits: Vec<WindowFit>,
    pub failures: Vec<WindowFailure>,
    pub tc_dates: Vec<NaiveDate>,
    pub quantile_window: CrashWindow,
    pub full_range: CrashWindow,
    pub n_bubble_like: usize,
}

/// Fits every window and aggregates the successful fits.
///
/// Failed or unconverged fits are reported in `failures`. At least two
/// successful fits are required, or one when only one window was requested.
pub fn run_scan(series: &PriceSeries, cfg: &ScanConfig) -> Result<ScanResult> {
    let windows = make_windows(series, cfg)?;
    let outcomes: Vec<Result<FitResult>> = windows.par_iter().map(|w| fit(w, &cfg.fit)).collect();

    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for (index, (w, outcome)) in windows.iter().zip(outcomes).enumerate() {
        let failure = |reason: String, fit: Option<FitResult>| WindowFailure {
            index,
            start_date: w.start_date(),
            end_date: w.end_date(),
            reason,
            fit,
        };
        match outcome {
            Ok(r) if r.converged => fits.push(WindowFit { index, result: r }),
            Ok(r) => failures.push(failure(
                format!("simplex did not converge in {} iterations", r.iterations),
                Some(r),
            )),
            Err(e) => failures.push(failure(e.to_string(), None)),
        }
    }

    let required = cfg.n_windows.min(2);
    if fits.len() < required {
        return Err(Error::TooFewFits {
            successful: fits.len(),
            required,
        });
    }
    let axis = series.time_axis();
    let tcs: Vec<f64> = fits.iter().map(|f| f.result.params.tc).collect();
    Ok(ScanResult {
        epoch: axis.epoch,
        tc_dates: fits.iter().map(|f| f.result.tc_date).collect(),
        quantile_window: quantile_window_from_times(&axis, &tcs, cfg.quantile_lo, cfg.quantile_hi)?,
        full_range: range_from_times(&axis, &tcs)?,
        n_bubble_like: fits
            .iter()
            .filter(|f| f.result.diagnostic.bubble_like)
            .count(),
        fits,
        failures,
    })
}

/// A model point on a fitted or extrapolated curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub date: NaiveDate,
    pub log_price: f64,
}

/// Model log-prices from just after the window end, `samples_per_day` per day,
/// up to `horizon_days` later or one sample step before tc, whichever is first.
pub fn extrapolate(fit: &FitResult, horizon_days: u32, samples_per_day: u32) -> Vec<CurvePoint> {
    let axis = fit.axis();
    let end_t = fit.end_time();
    let step = 1.0 / f64::from(samples_per_day.max(1));
    let until_tc = (fit.params.tc - end_t) * DAYS_PER_YEAR - step;
    let limit = f64::from(horizon_days).min(until_tc);
    (1..)
        .map(|k| k as f64 * step)
        .take_while(|s| *s <= limit)
        .filter_map(|s| {
            let t = end_t + s / DAYS_PER_YEAR;
            Some(CurvePoint {
                t,
                date: axis.from_time(t).ok()?,
                log_price: lppl_value(&fit.params, t).ok()?,
            })
        })
        .collect()
}

/// Model log-price on every calendar day of the fit window.
pub fn fitted_curve(fit: &FitResult) -> Vec<CurvePoint> {
    let axis = fit.axis();
    fit.start_date
        .iter_days()
        .take_while(|d| *d <= fit.end_date)
        .filter_map(|date| {
            let t = axis.to_time(date);
            Some(CurvePoint {
                t,
                date,
                log_price: lppl_value(&fit.params, t).ok()?,
            })
        })
        .collect()
}
