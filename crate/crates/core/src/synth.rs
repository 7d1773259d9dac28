//! Seeded synthetic LPPL price series with known ground truth.
//!
//! Noise is additive Gaussian on log-price. The generator is fixed so that
//! series are reproducible across platforms and releases:
//!
//! 1. `Xoshiro256++` seeded from the 64-bit seed through `SplitMix64`
//!    (`rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64`).
//! 2. Uniforms `u = (x >> 11) * 2^-53` from successive 64-bit outputs `x`.
//! 3. Basic Box-Muller on pairs `(u1, u2)`: `r = sqrt(-2 ln(1 - u1))`,
//!    `z1 = r cos(2 pi u2)`, `z2 = r sin(2 pi u2)`, consumed in that order.
//! 4. One normal per observation in date order, scaled by `noise_sigma`.

use std::f64::consts::TAU;

use chrono::{Datelike, NaiveDate, Weekday};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{lppl_value, LpplParams};
use crate::series::{Observation, PriceSeries, TimeAxis};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// Ground truth; `tc` is in decimal years since `start_date`.
    pub truth: LpplParams,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Skip Saturdays and Sundays.
    pub weekdays_only: bool,
    /// Standard deviation of the additive log-price noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Standard normal stream described in the module docs.
#[derive(Debug, Clone)]
pub struct GaussianNoise {
    rng: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl GaussianNoise {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
            spare: None,
        }
    }

    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (u1, u2) = (self.uniform(), self.uniform());
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

fn is_weekday(d: NaiveDate) -> bool {
    !matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

/// Generates the series and returns the truth re-expressed on the series' own
/// time axis (epoch at its first observation).
pub fn generate(spec: &SynthSpec) -> Result<(PriceSeries, LpplParams)> {
    if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "noise_sigma = {} must be finite and non-negative",
            spec.noise_sigma
        )));
    }
    if spec.start_date >= spec.end_date {
        return Err(Error::InvalidRange {
            start: spec.start_date,
            end: spec.end_date,
        });
    }
    let spec_axis = TimeAxis::new(spec.start_date);
    let end_time = spec_axis.to_time(spec.end_date);
    if spec.truth.tc.is_nan() || spec.truth.tc <= end_time {
        return Err(Error::InvalidParams(format!(
            "critical time {} is not after the end date {}",
            spec_axis
                .from_time(spec.truth.tc)
                .map_or_else(|_| spec.truth.tc.to_string(), |d| d.to_string()),
            spec.end_date
        )));
    }

    let dates: Vec<NaiveDate> = spec
        .start_date
        .iter_days()
        .take_while(|d| *d <= spec.end_date)
        .filter(|d| !spec.weekdays_only || is_weekday(*d))
        .collect();
    let Some(&first) = dates.first() else {
        return Err(Error::TooFewRows(0));
    };
    let axis = TimeAxis::new(first);
    let truth = spec.truth.shifted(-spec_axis.to_time(first));

    let mut noise = GaussianNoise::new(spec.seed);
    let observations = dates
        .into_iter()
        .map(|date| {
            let eps = noise.next_normal() * spec.noise_sigma;
            let logp = lppl_value(&truth, axis.to_time(date))? + eps;
            Ok(Observation {
                date,
                price: logp.exp(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((PriceSeries::new(observations)?, truth))
}
