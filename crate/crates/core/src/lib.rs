//! Log-periodic power law (LPPL) bubble detection.
//!
//! Fits the LPPL model to log-prices over a family of windows that share an end
//! date but start progressively later, then aggregates the fitted critical
//! times into quantile and full-range crash windows.
//!
//! * [`series`] reads and slices daily price series and maps dates to time.
//! * [`model`] evaluates the model and solves its linear subproblem.
//! * [`fitter`] finds the least-squares fit of one window.
//! * [`scan`] runs the start-date scan and builds crash windows.
//! * [`synth`] generates seeded synthetic LPPL series.
//! * [`report`] serializes results and writes plot data.

pub mod error;
pub mod fitter;
pub mod model;
pub mod report;
pub mod scan;
pub mod series;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use fitter::{fit, grid_search, refine, FitConfig, FitResult, GridNode};
pub use model::{
    is_bubble_like, lppl_value, subordinate, BubbleDiagnostic, FitWindow, LinearizedParams,
    LpplParams,
};
pub use report::{emit_plot_bundle, Report};
pub use scan::{
    extrapolate, full_range, make_windows, quantile_dates, run_scan, CrashWindow, ScanConfig,
    ScanResult, WindowFit,
};
pub use series::{parse_csv, CsvColumns, Observation, PriceSeries, TimeAxis};
pub use synth::{generate, SynthSpec};
