//! Flat key-value run configuration.
//!
//! A config file is TOML with top-level keys only. Every key is optional and
//! overrides the built-in default; command-line flags override the file.
//!
//! ```toml
//! # columns
//! date_col = "date"
//! price_col = "close"
//! # scan
//! step_days = 15
//! windows = 10
//! q_lo = 0.2
//! q_hi = 0.8
//! extrapolate_days = 100
//! samples_per_day = 1
//! # fit grid (tc in days past the window end)
//! tc_grid_lo_days = 5.0
//! tc_grid_hi_days = 180.0
//! tc_grid_step_days = 5.0
//! m_grid_lo = 0.1
//! m_grid_hi = 0.9
//! m_grid_step = 0.1
//! omega_grid_lo = 4.0
//! omega_grid_hi = 25.0
//! omega_grid_step = 2.0
//! refine_top_k = 5
//! # simplex
//! max_iterations = 2000
//! xtol = 1e-8
//! ftol = 1e-12
//! min_observations = 30
//! # refinement bounds
//! tc_bound_lo_days = 1.0
//! tc_bound_hi_days = 180.0
//! m_bound_lo = 0.1
//! m_bound_hi = 0.9
//! omega_bound_lo = 4.0
//! omega_bound_hi = 25.0
//! ```

use std::path::Path;

use lppl::FitConfig;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub date_col: Option<String>,
    pub price_col: Option<String>,

    pub step_days: Option<u32>,
    pub windows: Option<usize>,
    pub q_lo: Option<f64>,
    pub q_hi: Option<f64>,
    pub extrapolate_days: Option<u32>,
    pub samples_per_day: Option<u32>,

    pub tc_grid_lo_days: Option<f64>,
    pub tc_grid_hi_days: Option<f64>,
    pub tc_grid_step_days: Option<f64>,
    pub m_grid_lo: Option<f64>,
    pub m_grid_hi: Option<f64>,
    pub m_grid_step: Option<f64>,
    pub omega_grid_lo: Option<f64>,
    pub omega_grid_hi: Option<f64>,
    pub omega_grid_step: Option<f64>,
    pub refine_top_k: Option<usize>,
    pub max_iterations: Option<usize>,
    pub xtol: Option<f64>,
    pub ftol: Option<f64>,
    pub min_observations: Option<usize>,
    pub tc_bound_lo_days: Option<f64>,
    pub tc_bound_hi_days: Option<f64>,
    pub m_bound_lo: Option<f64>,
    pub m_bound_hi: Option<f64>,
    pub omega_bound_lo: Option<f64>,
    pub omega_bound_hi: Option<f64>,
}

fn set<T: Copy>(target: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *target = v;
    }
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }

    /// Defaults overridden by this file.
    pub fn fit_config(&self) -> FitConfig {
        let mut c = FitConfig::default();
        set(&mut c.tc_grid.lo, self.tc_grid_lo_days);
        set(&mut c.tc_grid.hi, self.tc_grid_hi_days);
        set(&mut c.tc_grid.step, self.tc_grid_step_days);
        set(&mut c.m_grid.lo, self.m_grid_lo);
        set(&mut c.m_grid.hi, self.m_grid_hi);
        set(&mut c.m_grid.step, self.m_grid_step);
        set(&mut c.omega_grid.lo, self.omega_grid_lo);
        set(&mut c.omega_grid.hi, self.omega_grid_hi);
        set(&mut c.omega_grid.step, self.omega_grid_step);
        set(&mut c.refine_top_k, self.refine_top_k);
        set(&mut c.simplex.max_iterations, self.max_iterations);
        set(&mut c.simplex.xtol, self.xtol);
        set(&mut c.simplex.ftol, self.ftol);
        set(&mut c.min_observations, self.min_observations);
        set(&mut c.bounds.tc_lo_days, self.tc_bound_lo_days);
        set(&mut c.bounds.tc_hi_days, self.tc_bound_hi_days);
        set(&mut c.bounds.m_lo, self.m_bound_lo);
        set(&mut c.bounds.m_hi, self.m_bound_hi);
        set(&mut c.bounds.omega_lo, self.omega_bound_lo);
        set(&mut c.bounds.omega_hi, self.omega_bound_hi);
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(
            FileConfig::parse("").unwrap().fit_config(),
            FitConfig::default()
        );
    }

    #[test]
    fn keys_override_defaults() {
        let f = FileConfig::parse("m_grid_step = 0.05\nrefine_top_k = 3\nq_lo = 0.1\n").unwrap();
        let c = f.fit_config();
        assert_eq!(c.m_grid.step, 0.05);
        assert_eq!(c.refine_top_k, 3);
        assert_eq!(c.omega_grid, FitConfig::default().omega_grid);
        assert_eq!(f.q_lo, Some(0.1));
    }

    #[test]
    fn unknown_keys_and_nesting_are_rejected() {
        assert!(FileConfig::parse("mgrid_step = 0.05").is_err());
        assert!(FileConfig::parse("[fit]\nm_grid_step = 0.05").is_err());
    }
}
