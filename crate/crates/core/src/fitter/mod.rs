//! Global least-squares LPPL fit of one window.
//!
//! A coarse grid over `(tc, m, omega)` ranks nodes by their subordinated sse;
//! the best `refine_top_k` nodes are then refined by a bounded simplex descent,
//! finished with a few Gauss–Newton steps, and the lowest-sse result wins. Everything is deterministic: grid nodes and
//! refinements run in parallel but are ranked by a total order.

mod polish;
pub mod simplex;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    is_bubble_like, subordinate, BubbleDiagnostic, FitWindow, LinearizedParams, LpplParams,
};
use crate::series::DAYS_PER_YEAR;

use self::simplex::{minimize, SimplexOptions};

/// Evenly spaced values `lo, lo + step, ...` up to and including `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridAxis {
    pub const fn new(lo: f64, hi: f64, step: f64) -> Self {
        Self { lo, hi, step }
    }

    pub fn values(&self) -> Vec<f64> {
        let slack = 1e-9 * self.step;
        (0..)
            .map(|k| self.lo + k as f64 * self.step)
            .take_while(|v| *v <= self.hi + slack)
            .collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi && self.step > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "{name} grid needs finite lo < hi and step > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Box for the refinement. tc is measured in days past the window end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub tc_lo_days: f64,
    pub tc_hi_days: f64,
    pub m_lo: f64,
    pub m_hi: f64,
    pub omega_lo: f64,
    pub omega_hi: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            tc_lo_days: 1.0,
            tc_hi_days: 180.0,
            m_lo: 0.1,
            m_hi: 0.9,
            omega_lo: 4.0,
            omega_hi: 25.0,
        }
    }
}

impl Bounds {
    fn lo(&self) -> [f64; 3] {
        [self.tc_lo_days, self.m_lo, self.omega_lo]
    }

    fn hi(&self) -> [f64; 3] {
        [self.tc_hi_days, self.m_hi, self.omega_hi]
    }

    fn contains(&self, x: &[f64; 3]) -> bool {
        let (lo, hi) = (self.lo(), self.hi());
        (0..3).all(|i| lo[i] <= x[i] && x[i] <= hi[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexConfig {
    pub max_iterations: usize,
    pub xtol: f64,
    pub ftol: f64,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            xtol: 1e-8,
            ftol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Critical-time grid in days past the window end.
    pub tc_grid: GridAxis,
    pub m_grid: GridAxis,
    pub omega_grid: GridAxis,
    pub refine_top_k: usize,
    pub simplex: SimplexConfig,
    pub min_observations: usize,
    pub bounds: Bounds,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            tc_grid: GridAxis::new(5.0, 180.0, 5.0),
            m_grid: GridAxis::new(0.1, 0.9, 0.1),
            omega_grid: GridAxis::new(4.0, 25.0, 2.0),
            refine_top_k: 5,
            simplex: SimplexConfig::default(),
            min_observations: 30,
            bounds: Bounds::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.tc_grid.validate("tc")?;
        self.m_grid.validate("m")?;
        self.omega_grid.validate("omega")?;
        let b = &self.bounds;
        let ok = 0.0 < b.tc_lo_days
            && b.tc_lo_days < b.tc_hi_days
            && 0.0 < b.m_lo
            && b.m_lo < b.m_hi
            && b.m_hi < 1.0
            && 0.0 < b.omega_lo
            && b.omega_lo < b.omega_hi
            && [b.tc_hi_days, b.omega_hi].iter().all(|v| v.is_finite());
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "bounds need 0 < tc_lo < tc_hi, 0 < m_lo < m_hi < 1, 0 < omega_lo < omega_hi; got {b:?}"
            )));
        }
        if self.refine_top_k == 0 {
            return Err(Error::InvalidConfig(
                "refine_top_k must be at least 1".into(),
            ));
        }
        if self.min_observations < crate::model::MIN_WINDOW_LEN {
            return Err(Error::InvalidConfig(format!(
                "min_observations must be at least {}",
                crate::model::MIN_WINDOW_LEN
            )));
        }
        let s = &self.simplex;
        if !(s.xtol > 0.0 && s.ftol > 0.0) {
            return Err(Error::InvalidConfig(
                "simplex tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One evaluated grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridNode {
    /// Critical time in days past the window end.
    pub tc_offset_days: f64,
    pub tc: f64,
    pub m: f64,
    pub omega: f64,
    pub linear: LinearizedParams,
    pub sse: f64,
}

impl GridNode {
    fn point(&self) -> [f64; 3] {
        [self.tc_offset_days, self.m, self.omega]
    }
}

/// Best fit of one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: LpplParams,
    pub sse: f64,
    pub rmse: f64,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Epoch of the time axis `params.tc` is measured on.
    pub epoch: NaiveDate,
    pub n_observations: usize,
    pub converged: bool,
    pub iterations: usize,
    pub diagnostic: BubbleDiagnostic,
    pub tc_date: NaiveDate,
}

impl FitResult {
    pub fn axis(&self) -> crate::series::TimeAxis {
        crate::series::TimeAxis::new(self.epoch)
    }

    pub fn end_time(&self) -> f64 {
        self.axis().to_time(self.end_date)
    }
}

fn tc_from_offset(w: &FitWindow, offset_days: f64) -> f64 {
    w.end_time() + offset_days / DAYS_PER_YEAR
}

fn check_length(w: &FitWindow, cfg: &FitConfig) -> Result<()> {
    if w.len() < cfg.min_observations {
        return Err(Error::WindowTooShort {
            start: w.start_date(),
            end: w.end_date(),
            found: w.len(),
            required: cfg.min_observations,
        });
    }
    Ok(())
}

/// Subordinated sse at every grid node whose tc is inside the bounds, sorted
/// by sse then `(tc, m, omega)`. Degenerate nodes are dropped.
pub fn grid_search(w: &FitWindow, cfg: &FitConfig) -> Result<Vec<GridNode>> {
    cfg.validate()?;
    check_length(w, cfg)?;
    let offsets: Vec<f64> = cfg
        .tc_grid
        .values()
        .into_iter()
        .filter(|d| cfg.bounds.tc_lo_days <= *d && *d <= cfg.bounds.tc_hi_days)
        .collect();
    let ms = cfg.m_grid.values();
    let omegas = cfg.omega_grid.values();

    let mut points = Vec::with_capacity(offsets.len() * ms.len() * omegas.len());
    for &d in &offsets {
        for &m in &ms {
            for &omega in &omegas {
                points.push((d, m, omega));
            }
        }
    }

    let mut nodes: Vec<GridNode> = points
        .into_par_iter()
        .filter_map(|(d, m, omega)| {
            let tc = tc_from_offset(w, d);
            let (linear, sse) = subordinate(tc, m, omega, w).ok()?;
            sse.is_finite().then_some(GridNode {
                tc_offset_days: d,
                tc,
                m,
                omega,
                linear,
                sse,
            })
        })
        .collect();
    if nodes.is_empty() {
        return Err(Error::AllNodesDegenerate);
    }
    nodes.sort_by(|a, b| {
        a.sse
            .total_cmp(&b.sse)
            .then(a.tc.total_cmp(&b.tc))
            .then(a.m.total_cmp(&b.m))
            .then(a.omega.total_cmp(&b.omega))
    });
    Ok(nodes)
}

/// Simplex refinement of one grid node on `(tc, m, omega)` within the bounds,
/// followed by a Gauss–Newton polish.
///
/// The result's sse never exceeds the seed's. `converged` is set when both
/// simplex tolerances were met within the iteration budget.
pub fn refine(seed: &GridNode, w: &FitWindow, cfg: &FitConfig) -> Result<FitResult> {
    if !cfg.bounds.contains(&seed.point()) {
        return Err(Error::InvalidParams(format!(
            "seed ({}, {}, {}) outside bounds",
            seed.tc_offset_days, seed.m, seed.omega
        )));
    }
    let objective = |x: &[f64; 3]| match subordinate(tc_from_offset(w, x[0]), x[1], x[2], w) {
        Ok((_, sse)) => sse,
        Err(_) => f64::INFINITY,
    };
    let step = [
        0.5 * cfg.tc_grid.step,
        0.5 * cfg.m_grid.step,
        0.5 * cfg.omega_grid.step,
    ];
    let opts = SimplexOptions {
        max_iterations: cfg.simplex.max_iterations,
        xtol: cfg.simplex.xtol,
        ftol: cfg.simplex.ftol,
    };
    let (lo, hi) = (cfg.bounds.lo(), cfg.bounds.hi());
    let out = minimize(objective, seed.point(), step, lo, hi, &opts);

    let (x, start) = if out.value < seed.sse {
        (
            out.x,
            subordinate(tc_from_offset(w, out.x[0]), out.x[1], out.x[2], w)?,
        )
    } else {
        (seed.point(), (seed.linear, seed.sse))
    };
    let (_, mut linear, mut sse) = polish::polish(x, start, w, lo, hi);
    if sse > seed.sse {
        (linear, sse) = (seed.linear, seed.sse);
    }
    let params = linear.to_params();
    let offset = (params.tc - w.end_time()) * DAYS_PER_YEAR;
    let below_upper = params.m < hi[1] - cfg.simplex.xtol && offset < hi[0] - cfg.simplex.xtol;
    let diagnostic = is_bubble_like(&params, w).with_interior(below_upper);
    Ok(FitResult {
        params,
        sse,
        rmse: (sse / w.len() as f64).sqrt(),
        start_date: w.start_date(),
        end_date: w.end_date(),
        epoch: w.axis().epoch,
        n_observations: w.len(),
        converged: out.converged,
        iterations: out.iterations,
        diagnostic,
        tc_date: w.axis().from_time(params.tc)?,
    })
}

/// Grid search followed by refinement of the best `refine_top_k` nodes.
pub fn fit(w: &FitWindow, cfg: &FitConfig) -> Result<FitResult> {
    let nodes = grid_search(w, cfg)?;
    let top = &nodes[..cfg.refine_top_k.min(nodes.len())];
    let refined: Vec<FitResult> = top
        .par_iter()
        .map(|seed| refine(seed, w, cfg))
        .collect::<Result<_>>()?;
    // First minimum in grid-rank order.
    let best = refined
        .into_iter()
        .reduce(|best, r| if r.sse < best.sse { r } else { best })
        .expect("at least one grid node");
    Ok(best)
}
