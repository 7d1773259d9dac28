//! JSON reports and plot-data bundles.
//!
//! A report is one JSON document with a `schema_version`. Plot data is written
//! as plain CSV per curve plus `annotations.json`:
//!
//! | file            | columns                                  |
//! |-----------------|------------------------------------------|
//! | `observed.csv`  | `date,price`                             |
//! | `fit_<k>.csv`   | `date,t,model_price`                     |
//! | `extrap_<k>.csv`| `date,t,model_price,extrapolated`        |
//!
//! `<k>` is the scan window index. Model prices are `exp` of the model
//! log-price so a log-scaled price axis shows the fitted geometry directly.
//! Reals are written in shortest round-trip form.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitter::{FitConfig, FitResult};
use crate::scan::{
    extrapolate, fitted_curve, quantile_window_from_times, range_from_times, CrashWindow,
    ScanConfig, ScanResult, WindowFailure, WindowFit,
};
use crate::series::{Observation, PriceSeries, TimeAxis};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub file: String,
    pub rows: usize,
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
}

impl InputDigest {
    pub fn new(file: impl Into<String>, series: &PriceSeries) -> Self {
        Self {
            file: file.into(),
            rows: series.len(),
            first_date: series.first_date(),
            last_date: series.last_date(),
        }
    }
}

/// Fully resolved configuration of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ConfigEcho {
    Fit {
        start_date: NaiveDate,
        end_date: NaiveDate,
        fit: FitConfig,
    },
    Scan(ScanConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub quantile_window: CrashWindow,
    pub full_range: CrashWindow,
    pub n_bubble_like: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub input: InputDigest,
    pub config: ConfigEcho,
    /// Epoch of the time axis every `tc` is measured on.
    pub epoch: NaiveDate,
    pub windows: Vec<WindowFit>,
    pub failures: Vec<WindowFailure>,
    /// Present for scans only.
    pub aggregates: Option<Aggregates>,
    /// Highest observed price in the analysis span.
    pub peak: Observation,
}

impl Report {
    pub fn for_fit(
        input: InputDigest,
        fit: FitResult,
        fit_config: FitConfig,
        span: &PriceSeries,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            input,
            config: ConfigEcho::Fit {
                start_date: fit.start_date,
                end_date: fit.end_date,
                fit: fit_config,
            },
            epoch: fit.epoch,
            windows: vec![WindowFit {
                index: 0,
                result: fit,
            }],
            failures: Vec::new(),
            aggregates: None,
            peak: span.peak(),
        }
    }

    pub fn for_scan(
        input: InputDigest,
        scan: &ScanResult,
        cfg: &ScanConfig,
        span: &PriceSeries,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            input,
            config: ConfigEcho::Scan(*cfg),
            epoch: scan.epoch,
            windows: scan.fits.clone(),
            failures: scan.failures.clone(),
            aggregates: Some(Aggregates {
                quantile_window: scan.quantile_window,
                full_range: scan.full_range,
                n_bubble_like: scan.n_bubble_like,
            }),
            peak: span.peak(),
        }
    }

    /// Aggregates rebuilt from the per-window records alone.
    pub fn recompute_aggregates(&self) -> Result<Option<Aggregates>> {
        let ConfigEcho::Scan(cfg) = &self.config else {
            return Ok(None);
        };
        let axis = TimeAxis::new(self.epoch);
        let tcs: Vec<f64> = self.windows.iter().map(|w| w.result.params.tc).collect();
        Ok(Some(Aggregates {
            quantile_window: quantile_window_from_times(
                &axis,
                &tcs,
                cfg.quantile_lo,
                cfg.quantile_hi,
            )?,
            full_range: range_from_times(&axis, &tcs)?,
            n_bubble_like: self
                .windows
                .iter()
                .filter(|w| w.result.diagnostic.bubble_like)
                .count(),
        }))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowAnnotation {
    pub index: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub tc_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotations {
    pub schema_version: u32,
    pub quantile_window: CrashWindow,
    pub full_range: CrashWindow,
    pub peak: Observation,
    pub windows: Vec<WindowAnnotation>,
}

fn csv_bytes<I>(header: &str, rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = String>,
{
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out.into_bytes()
}

/// Writes the observed series, every fitted and extrapolated curve, and the
/// crash-window annotations into `dir`, creating it if needed.
pub fn emit_plot_bundle(
    scan: &ScanResult,
    series: &PriceSeries,
    dir: &Path,
    extrapolation_days: u32,
    samples_per_day: u32,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(name);
        write_atomic(&path, &bytes)?;
        written.push(path);
        Ok(())
    };

    put(
        "observed.csv".into(),
        csv_bytes(
            "date,price",
            series
                .observations()
                .iter()
                .map(|o| format!("{},{}", o.date, o.price)),
        ),
    )?;
    for wf in &scan.fits {
        let fit = &wf.result;
        put(
            format!("fit_{}.csv", wf.index),
            csv_bytes(
                "date,t,model_price",
                fitted_curve(fit)
                    .into_iter()
                    .map(|p| format!("{},{},{}", p.date, p.t, p.log_price.exp())),
            ),
        )?;
        put(
            format!("extrap_{}.csv", wf.index),
            csv_bytes(
                "date,t,model_price,extrapolated",
                extrapolate(fit, extrapolation_days, samples_per_day)
                    .into_iter()
                    .map(|p| format!("{},{},{},true", p.date, p.t, p.log_price.exp())),
            ),
        )?;
    }
    let annotations = Annotations {
        schema_version: SCHEMA_VERSION,
        quantile_window: scan.quantile_window,
        full_range: scan.full_range,
        peak: series.peak(),
        windows: scan
            .fits
            .iter()
            .map(|wf| WindowAnnotation {
                index: wf.index,
                start_date: wf.result.start_date,
                end_date: wf.result.end_date,
                tc_date: wf.result.tc_date,
            })
            .collect(),
    };
    let mut json = serde_json::to_string_pretty(&annotations)?;
    json.push('\n');
    put("annotations.json".into(), json.into_bytes())?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lppl_value, LpplParams};
    use crate::scan::run_scan;
    use crate::series::DAYS_PER_YEAR;
    use crate::synth::{generate, SynthSpec};

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn scan_fixture() -> (PriceSeries, ScanConfig, ScanResult) {
        let start = date(2009, 1, 1);
        let end = date(2009, 6, 29);
        let spec = SynthSpec {
            truth: LpplParams {
                tc: TimeAxis::new(start).to_time(end) + 30.0 / DAYS_PER_YEAR,
                m: 0.5,
                omega: 9.0,
                phi: 1.0,
                a: 8.0,
                b: -1.0,
                c: 0.05,
            },
            start_date: start,
            end_date: end,
            weekdays_only: false,
            noise_sigma: 0.0,
            seed: 1,
        };
        let (series, _) = generate(&spec).unwrap();
        let mut cfg = ScanConfig::new(start, end);
        cfg.n_windows = 3;
        cfg.step_days = 20;
        let scan = run_scan(&series, &cfg).unwrap();
        (series, cfg, scan)
    }

    #[test]
    fn report_round_trip_reproduces_aggregates() {
        let (series, cfg, scan) = scan_fixture();
        let report = Report::for_scan(
            InputDigest::new("synthetic.csv", &series),
            &scan,
            &cfg,
            &series,
        );
        let parsed = Report::from_json(&report.to_json().unwrap()).unwrap();
        assert_eq!(parsed, report);
        assert_eq!(parsed.recompute_aggregates().unwrap(), report.aggregates);
        assert_eq!(parsed.schema_version, SCHEMA_VERSION);
    }

    #[test]
    fn plot_bundle_files_and_values() {
        let (series, _, scan) = scan_fixture();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_plot_bundle(&scan, &series, dir.path(), 100, 1).unwrap();
        assert_eq!(files.len(), 1 + 3 + 3 + 1);

        let fit = &scan.fits[1].result;
        let text = std::fs::read_to_string(dir.path().join("fit_1.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("date,t,model_price"));
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            let d = NaiveDate::parse_from_str(cols[0], "%Y-%m-%d").unwrap();
            assert!(fit.start_date <= d && d <= fit.end_date);
            let t: f64 = cols[1].parse().unwrap();
            let price: f64 = cols[2].parse().unwrap();
            let want = lppl_value(&fit.params, t).unwrap().exp();
            assert!(((price - want) / want).abs() < 1e-9);
        }

        let text = std::fs::read_to_string(dir.path().join("extrap_1.csv")).unwrap();
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let d = NaiveDate::parse_from_str(cols[0], "%Y-%m-%d").unwrap();
            assert!(d > fit.end_date && d < fit.tc_date);
            assert_eq!(cols[3], "true");
        }

        let ann: Annotations = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("annotations.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(ann.quantile_window, scan.quantile_window);
        assert_eq!(ann.full_range, scan.full_range);
        assert_eq!(ann.peak, series.peak());
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let (series, _, scan) = scan_fixture();
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("not-a-dir");
        std::fs::write(&file, b"x").unwrap();
        let err = emit_plot_bundle(&scan, &series, &file, 100, 1).unwrap_err();
        assert_eq!(err.kind(), crate::ErrorKind::Io);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
