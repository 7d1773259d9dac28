//! Daily price series: CSV ingestion, window slicing and the calendar time axis.

use std::io::Read;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Days per decimal year on the model time axis.
pub const DAYS_PER_YEAR: f64 = 365.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub date: NaiveDate,
    pub price: f64,
}

/// Ordered daily observations with strictly increasing dates and positive prices.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    observations: Vec<Observation>,
}

impl PriceSeries {
    /// Builds a series from observations in any order.
    pub fn new(mut observations: Vec<Observation>) -> Result<Self> {
        for (row, o) in observations.iter().enumerate() {
            if !o.price.is_finite() {
                return Err(Error::MalformedRecord {
                    row: row + 1,
                    message: format!("price {} is not finite", o.price),
                });
            }
            if o.price <= 0.0 {
                return Err(Error::NonPositivePrice {
                    row: row + 1,
                    date: o.date,
                    price: o.price,
                });
            }
        }
        observations.sort_by_key(|o| o.date);
        if let Some(dup) = observations.windows(2).position(|w| w[0].date == w[1].date) {
            return Err(Error::DuplicateDate {
                row: dup + 2,
                date: observations[dup].date,
            });
        }
        if observations.len() < 2 {
            return Err(Error::TooFewRows(observations.len()));
        }
        Ok(Self { observations })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.observations[0].date
    }

    pub fn last_date(&self) -> NaiveDate {
        self.observations[self.observations.len() - 1].date
    }

    /// Axis whose epoch is the first observation.
    pub fn time_axis(&self) -> TimeAxis {
        TimeAxis::new(self.first_date())
    }

    /// Observation with the highest price; the earliest one on ties.
    pub fn peak(&self) -> Observation {
        let mut best = self.observations[0];
        for o in &self.observations[1..] {
            if o.price > best.price {
                best = *o;
            }
        }
        best
    }

    /// Observations with `start <= date <= end`, requiring at least
    /// `min_observations` of them.
    pub fn slice(&self, start: NaiveDate, end: NaiveDate, min_observations: usize) -> Result<Self> {
        if start >= end {
            return Err(Error::InvalidRange { start, end });
        }
        let lo = self.observations.partition_point(|o| o.date < start);
        let hi = self.observations.partition_point(|o| o.date <= end);
        let observations = self.observations[lo..hi].to_vec();
        let required = min_observations.max(2);
        if observations.len() < required {
            return Err(Error::WindowTooShort {
                start,
                end,
                found: observations.len(),
                required,
            });
        }
        Ok(Self { observations })
    }
}

/// Names of the date and price columns in an input CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvColumns {
    pub date: String,
    pub price: String,
}

impl Default for CsvColumns {
    fn default() -> Self {
        Self {
            date: "date".to_owned(),
            price: "close".to_owned(),
        }
    }
}

/// Parses a headed CSV of ISO-8601 dates and decimal prices.
///
/// Rows are numbered from 1 for the first data record. The result is sorted by
/// date regardless of input order.
pub fn parse_csv<R: Read>(reader: R, columns: &CsvColumns) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::MalformedRecord {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    };
    let date_idx = find(&columns.date)?;
    let price_idx = find(&columns.price)?;

    let mut observations = Vec::new();
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::MalformedRecord {
            row,
            message: e.to_string(),
        })?;
        let field = |idx: usize, what: &str| {
            record.get(idx).ok_or_else(|| Error::MalformedRecord {
                row,
                message: format!("missing {what} field"),
            })
        };
        let date_text = field(date_idx, "date")?;
        let price_text = field(price_idx, "price")?;
        let date = NaiveDate::parse_from_str(date_text, "%Y-%m-%d").map_err(|e| {
            Error::MalformedRecord {
                row,
                message: format!("bad date {date_text:?}: {e}"),
            }
        })?;
        let price: f64 = price_text.parse().map_err(|_| Error::MalformedRecord {
            row,
            message: format!("bad price {price_text:?}"),
        })?;
        if !price.is_finite() {
            return Err(Error::MalformedRecord {
                row,
                message: format!("price {price_text:?} is not finite"),
            });
        }
        if price <= 0.0 {
            return Err(Error::NonPositivePrice { row, date, price });
        }
        observations.push(Observation { date, price });
        rows.push(row);
    }

    // Report duplicates against input row numbers, not sorted positions.
    let mut order: Vec<usize> = (0..observations.len()).collect();
    order.sort_by_key(|&i| (observations[i].date, i));
    for pair in order.windows(2) {
        if observations[pair[0]].date == observations[pair[1]].date {
            return Err(Error::DuplicateDate {
                row: rows[pair[1]],
                date: observations[pair[1]].date,
            });
        }
    }
    PriceSeries::new(observations)
}

/// Writes a series in the same `date,<price>` format that [`parse_csv`] reads.
pub fn write_csv<W: std::io::Write>(
    series: &PriceSeries,
    columns: &CsvColumns,
    out: W,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    wtr.write_record([columns.date.as_str(), columns.price.as_str()])
        .map_err(io)?;
    for o in series.observations() {
        wtr.write_record([o.date.to_string(), o.price.to_string()])
            .map_err(io)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Maps calendar dates to decimal years since an epoch date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeAxis {
    pub epoch: NaiveDate,
}

impl TimeAxis {
    pub fn new(epoch: NaiveDate) -> Self {
        Self { epoch }
    }

    /// Calendar days since the epoch divided by 365.25. Negative before the epoch.
    pub fn to_time(&self, date: NaiveDate) -> f64 {
        (date - self.epoch).num_days() as f64 / DAYS_PER_YEAR
    }

    /// Nearest calendar date to `t` (half-day ties round away from the epoch).
    pub fn from_time(&self, t: f64) -> Result<NaiveDate> {
        let days = (t * DAYS_PER_YEAR).round();
        // chrono's range is about +-262,000 years; anything past i32 days is out.
        if !days.is_finite() || days.abs() > i32::MAX as f64 {
            return Err(Error::TimeOutOfRange(t));
        }
        self.epoch
            .checked_add_signed(Duration::days(days as i64))
            .ok_or(Error::TimeOutOfRange(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn parse(text: &str) -> Result<PriceSeries> {
        parse_csv(text.as_bytes(), &CsvColumns::default())
    }

    fn daily(start: &str, end: &str) -> PriceSeries {
        let (start, end) = (date(start), date(end));
        let obs = start
            .iter_days()
            .take_while(|d| *d <= end)
            .enumerate()
            .map(|(i, d)| Observation {
                date: d,
                price: 100.0 + i as f64,
            })
            .collect();
        PriceSeries::new(obs).unwrap()
    }

    #[test]
    fn parses_minimal_input() {
        let s = parse("date,close\n2008-10-15,1994.67\n2008-10-16,1909.94").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.first_date(), date("2008-10-15"));
        assert_eq!(s.observations()[1].price, 1909.94);
    }

    #[test]
    fn reversed_rows_give_identical_series() {
        let a = parse("date,close\n2008-10-15,1994.67\n2008-10-16,1909.94").unwrap();
        let b = parse("date,close\n2008-10-16,1909.94\n2008-10-15,1994.67").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_non_positive_price_with_row() {
        let mut text = String::from("date,close\n");
        let start = date("2009-01-01");
        for i in 0..30 {
            let d = start + Duration::days(i);
            let price = if d == date("2009-01-05") {
                -3.0
            } else {
                2000.0 + i as f64
            };
            text.push_str(&format!("{d},{price}\n"));
        }
        match parse(&text) {
            Err(Error::NonPositivePrice {
                row,
                date: d,
                price,
            }) => {
                assert_eq!(row, 5);
                assert_eq!(d, date("2009-01-05"));
                assert_eq!(price, -3.0);
            }
            other => panic!("expected non-positive price error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_duplicate_and_short_inputs() {
        assert!(matches!(
            parse("date,close\n2008-10-15,abc\n2008-10-16,1.0"),
            Err(Error::MalformedRecord { row: 1, .. })
        ));
        assert!(matches!(
            parse("date,close\n2008-10-15,1.0\n15/10/2008,1.0"),
            Err(Error::MalformedRecord { row: 2, .. })
        ));
        assert!(matches!(
            parse("date,close\n2008-10-15,1.0\n2008-10-16,2.0\n2008-10-15,3.0"),
            Err(Error::DuplicateDate { row: 3, .. })
        ));
        assert!(matches!(
            parse("date,close\n2008-10-15,1.0"),
            Err(Error::TooFewRows(1))
        ));
        assert!(matches!(
            parse("day,close\n2008-10-15,1.0"),
            Err(Error::MissingColumn(_))
        ));
    }

    #[test]
    fn custom_columns() {
        let cols = CsvColumns {
            date: "Date".into(),
            price: "Adj Close".into(),
        };
        let s = parse_csv(
            "Date,Open,Adj Close\n2009-07-06,1,3088.38\n2009-07-07,1,3060.82\n".as_bytes(),
            &cols,
        )
        .unwrap();
        assert_eq!(s.peak().date, date("2009-07-06"));
    }

    #[test]
    fn identity_slice() {
        let s = daily("2008-10-15", "2009-07-09");
        assert_eq!(s.slice(s.first_date(), s.last_date(), 30).unwrap(), s);
    }

    #[test]
    fn slice_drops_exactly_the_earlier_dates() {
        let s = daily("2008-10-15", "2009-07-09");
        let cut = date("2008-10-30");
        let expected: Vec<_> = s
            .observations()
            .iter()
            .filter(|o| o.date >= cut)
            .copied()
            .collect();
        let sliced = s.slice(cut, s.last_date(), 30).unwrap();
        assert_eq!(sliced.observations(), &expected[..]);
        assert_eq!(s.len() - sliced.len(), 15);
    }

    #[test]
    fn slice_past_end_is_too_short() {
        let s = daily("2008-10-15", "2009-07-09");
        assert!(matches!(
            s.slice(date("2009-08-01"), date("2009-09-01"), 30),
            Err(Error::WindowTooShort { found: 0, .. })
        ));
        assert!(matches!(
            s.slice(date("2009-08-01"), date("2009-08-01"), 30),
            Err(Error::InvalidRange { .. })
        ));
    }

    #[test]
    fn time_axis_examples() {
        let axis = TimeAxis::new(date("2009-01-01"));
        assert_eq!(axis.to_time(axis.epoch), 0.0);
        let one_year = axis.to_time(axis.epoch + Duration::days(365));
        assert!((one_year - 1.0).abs() < 1.0 / 365.25);
        assert_eq!(
            axis.to_time(axis.epoch + Duration::days(100)),
            100.0 / 365.25
        );
        assert!((axis.to_time(axis.epoch + Duration::days(100)) - 0.27379).abs() < 1e-5);
        assert!(axis.to_time(date("2008-12-31")) < 0.0);

        assert_eq!(axis.from_time(0.0).unwrap(), axis.epoch);
        // 0.5 * 365.25 = 182.625 days, rounds to 183.
        assert_eq!(axis.from_time(0.5).unwrap(), date("2009-07-03"));
        assert!(axis.from_time(f64::NAN).is_err());
        assert!(axis.from_time(1e12).is_err());
    }

    proptest! {
        #[test]
        fn time_round_trip(epoch_off in -20_000i64..20_000, off in 0i64..40_000) {
            let epoch = date("2000-01-01") + Duration::days(epoch_off);
            let d = date("1990-01-01") + Duration::days(off);
            prop_assume!(d <= date("2100-12-31"));
            let axis = TimeAxis::new(epoch);
            prop_assert_eq!(axis.from_time(axis.to_time(d)).unwrap(), d);
        }

        #[test]
        fn time_is_monotone(a in 0i64..40_000, b in 0i64..40_000) {
            let axis = TimeAxis::new(date("2008-10-15"));
            let base = date("1990-01-01");
            let (ta, tb) = (axis.to_time(base + Duration::days(a)), axis.to_time(base + Duration::days(b)));
            prop_assert_eq!(a.cmp(&b), ta.partial_cmp(&tb).unwrap());
        }

        #[test]
        fn slice_is_idempotent(a in 0i64..200, len in 1i64..200) {
            let s = daily("2008-10-15", "2009-07-09");
            let start = s.first_date() + Duration::days(a);
            let end = start + Duration::days(len);
            if let Ok(once) = s.slice(start, end, 2) {
                prop_assert_eq!(once.slice(start, end, 2).unwrap(), once);
            }
        }

        #[test]
        fn parse_is_permutation_invariant(seed in any::<u64>()) {
            let s = daily("2009-01-01", "2009-02-15");
            let mut rows: Vec<String> = s
                .observations()
                .iter()
                .map(|o| format!("{},{}", o.date, o.price))
                .collect();
            // Fisher-Yates with a tiny LCG driven by the proptest seed.
            let mut state = seed | 1;
            for i in (1..rows.len()).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                rows.swap(i, (state >> 33) as usize % (i + 1));
            }
            let text = format!("date,close\n{}\n", rows.join("\n"));
            prop_assert_eq!(parse(&text).unwrap(), s);
        }
    }
}
