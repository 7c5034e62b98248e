//! Monthly market metrics from daily prices: realized volatility of a world
//! index and the equal-weighted average pairwise correlation across market
//! indices.
//!
//! Returns are simple returns (`p_t / p_prev - 1`) by default. Market
//! holidays differ across countries, so gaps are handled per series:
//!
//! - consecutive present prices always form a return;
//! - in bridge mode (the default) a run of one or two absent cells is spanned
//!   by a single return, provided both endpoints fall in the same calendar
//!   month; longer runs break the chain and the next present price starts a
//!   fresh one;
//! - strict mode forms returns only across exactly consecutive rows.
//!
//! A return is dated by its later price, which also decides the calendar
//! month it contributes to. Monthly volatility is the sample (n-1) standard
//! deviation of a single designated series' returns within the month, not
//! annualized. The monthly correlation is the mean Pearson coefficient over
//! all series pairs with enough overlapping return dates.

use chrono::NaiveDate;

use crate::calendar::Month;
use crate::ingest::DailyPricePanel;
use crate::numfmt;

/// Minimum within-month return count for a volatility estimate.
pub const MIN_VOLATILITY_OBS: usize = 5;
/// Default minimum overlapping return dates for a pair to enter the monthly
/// correlation average.
pub const DEFAULT_MIN_OVERLAP: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("{series} has {observed} returns in {month}, need at least {required}")]
    InsufficientObservations {
        series: String,
        month: Month,
        observed: usize,
        required: usize,
    },
    #[error("no pair has enough overlapping returns in {month}")]
    NoValidPairs { month: Month },
    #[error("unknown series id `{id}`")]
    UnknownSeries { id: String },
}

/// How a price pair is turned into a return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnKind {
    Simple,
    Log,
}

/// Gap handling between present prices of one series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapPolicy {
    Bridge,
    Strict,
}

/// Daily returns per series; a cell is present only where the gap policy
/// admits a return ending on that date.
#[derive(Debug, Clone)]
pub struct ReturnPanel {
    dates: Vec<NaiveDate>,
    series: Vec<String>,
    cells: Vec<Option<f64>>,
    pub kind: ReturnKind,
    pub gap_policy: GapPolicy,
}

impl ReturnPanel {
    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn series(&self) -> &[String] {
        &self.series
    }

    pub fn series_index(&self, id: &str) -> Option<usize> {
        self.series.iter().position(|s| s == id)
    }

    pub fn value(&self, date_idx: usize, series_idx: usize) -> Option<f64> {
        self.cells[date_idx * self.series.len() + series_idx]
    }

    /// Present returns of one series, in date order.
    pub fn series_returns(&self, series_idx: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.dates.len()).filter_map(move |d| self.value(d, series_idx).map(|r| (d, r)))
    }

    /// Date-index range of one calendar month (half-open).
    fn month_range(&self, month: Month) -> std::ops::Range<usize> {
        let lo = self
            .dates
            .partition_point(|d| Month::containing(*d) < month);
        let hi = self
            .dates
            .partition_point(|d| Month::containing(*d) <= month);
        lo..hi
    }

    /// Months touched by the panel, in order.
    pub fn months(&self) -> Vec<Month> {
        match (self.dates.first(), self.dates.last()) {
            (Some(first), Some(last)) => Month::containing(*first)
                .range_to(Month::containing(*last))
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Compute daily returns with the default conventions (simple returns,
/// bridge-mode gap handling).
pub fn daily_returns(prices: &DailyPricePanel) -> ReturnPanel {
    daily_returns_with(prices, ReturnKind::Simple, GapPolicy::Bridge)
}

/// Compute daily returns with explicit conventions.
pub fn daily_returns_with(
    prices: &DailyPricePanel,
    kind: ReturnKind,
    gap_policy: GapPolicy,
) -> ReturnPanel {
    let dates = prices.dates().to_vec();
    let series = prices.series().to_vec();
    let mut cells: Vec<Option<f64>> = vec![None; dates.len() * series.len()];

    for j in 0..series.len() {
        let mut prev: Option<(usize, f64)> = None;
        for d in 0..dates.len() {
            let Some(price) = prices.price(d, j) else {
                continue;
            };
            if let Some((prev_idx, prev_price)) = prev {
                let absent_run = d - prev_idx - 1;
                let admissible = match gap_policy {
                    GapPolicy::Strict => absent_run == 0,
                    GapPolicy::Bridge => {
                        absent_run == 0
                            || (absent_run <= 2
                                && Month::containing(dates[prev_idx])
                                    == Month::containing(dates[d]))
                    }
                };
                if admissible {
                    let r = match kind {
                        ReturnKind::Simple => price / prev_price - 1.0,
                        ReturnKind::Log => (price / prev_price).ln(),
                    };
                    cells[d * series.len() + j] = Some(r);
                }
            }
            prev = Some((d, price));
        }
    }

    ReturnPanel {
        dates,
        series,
        cells,
        kind,
        gap_policy,
    }
}

/// Sample standard deviation of one series' returns within a calendar month.
pub fn monthly_volatility(
    returns: &ReturnPanel,
    series_id: &str,
    month: Month,
) -> Result<f64, MetricsError> {
    monthly_volatility_with(returns, series_id, month, MIN_VOLATILITY_OBS)
}

/// As `monthly_volatility` but with an explicit observation threshold.
pub fn monthly_volatility_with(
    returns: &ReturnPanel,
    series_id: &str,
    month: Month,
    min_obs: usize,
) -> Result<f64, MetricsError> {
    let j = returns
        .series_index(series_id)
        .ok_or_else(|| MetricsError::UnknownSeries {
            id: series_id.to_string(),
        })?;
    let values: Vec<f64> = returns
        .month_range(month)
        .filter_map(|d| returns.value(d, j))
        .collect();
    if values.len() < min_obs.max(2) {
        return Err(MetricsError::InsufficientObservations {
            series: series_id.to_string(),
            month,
            observed: values.len(),
            required: min_obs.max(2),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0);
    Ok(var.sqrt())
}

/// Result of a monthly average-pairwise-correlation computation.
#[derive(Debug, Clone, Copy)]
pub struct PairAverage {
    pub value: f64,
    pub included_pairs: u32,
    pub excluded_pairs: u32,
}

/// Equal-weighted mean Pearson correlation over all unordered series pairs
/// in the month.
///
/// A pair enters the average only when the two series share at least
/// `min_overlap` return dates and neither within-month subseries is constant.
pub fn monthly_avg_pairwise_correlation(
    returns: &ReturnPanel,
    month: Month,
    min_overlap: usize,
) -> Result<PairAverage, MetricsError> {
    let range = returns.month_range(month);
    let n_series = returns.series().len();

    let mut included = 0u32;
    let mut excluded = 0u32;
    let mut sum = 0.0;
    for i in 0..n_series {
        for j in (i + 1)..n_series {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for d in range.clone() {
                if let (Some(x), Some(y)) = (returns.value(d, i), returns.value(d, j)) {
                    a.push(x);
                    b.push(y);
                }
            }
            match pair_correlation(&a, &b, min_overlap) {
                Some(r) => {
                    sum += r;
                    included += 1;
                }
                None => excluded += 1,
            }
        }
    }
    if included == 0 {
        return Err(MetricsError::NoValidPairs { month });
    }
    Ok(PairAverage {
        value: sum / included as f64,
        included_pairs: included,
        excluded_pairs: excluded,
    })
}

fn pair_correlation(a: &[f64], b: &[f64], min_overlap: usize) -> Option<f64> {
    if a.len() < min_overlap.max(2) {
        return None;
    }
    let constant = |v: &[f64]| {
        let (min, max) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        min == max
    };
    if constant(a) || constant(b) {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    let r = cov / (va.sqrt() * vb.sqrt());
    r.is_finite().then_some(r)
}

// ---------------------------------------------------------------------------
// Monthly series
// ---------------------------------------------------------------------------

/// What a monthly series measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Volatility,
    AvgCorrelation,
}

impl SeriesKind {
    pub fn label(&self) -> &'static str {
        match self {
            SeriesKind::Volatility => "volatility",
            SeriesKind::AvgCorrelation => "avg_correlation",
        }
    }
}

/// Monthly values with their observation support. Months are strictly
/// increasing but may have holes where a month failed its preconditions.
#[derive(Debug, Clone)]
pub struct MonthlySeries {
    pub kind: SeriesKind,
    months: Vec<Month>,
    values: Vec<f64>,
    support: Vec<u32>,
}

impl MonthlySeries {
    pub fn new(kind: SeriesKind, months: Vec<Month>, values: Vec<f64>, support: Vec<u32>) -> Self {
        assert_eq!(months.len(), values.len());
        assert_eq!(months.len(), support.len());
        assert!(
            months.windows(2).all(|w| w[0] < w[1]),
            "months must be strictly increasing"
        );
        Self {
            kind,
            months,
            values,
            support,
        }
    }

    pub fn months(&self) -> &[Month] {
        &self.months
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    pub fn value_at(&self, month: Month) -> Option<f64> {
        self.months
            .binary_search(&month)
            .ok()
            .map(|idx| self.values[idx])
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), std::io::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["month", "value", "support"])?;
        for k in 0..self.months.len() {
            w.write_record([
                self.months[k].to_string(),
                numfmt::full(self.values[k]),
                self.support[k].to_string(),
            ])?;
        }
        w.flush()
    }
}

/// Monthly volatility of one series over every month with enough returns.
///
/// Months below the observation threshold are skipped and reported as
/// warnings rather than failing the whole range.
pub fn volatility_series(
    returns: &ReturnPanel,
    series_id: &str,
) -> Result<(MonthlySeries, Vec<String>), MetricsError> {
    if returns.series_index(series_id).is_none() {
        return Err(MetricsError::UnknownSeries {
            id: series_id.to_string(),
        });
    }
    let mut months = Vec::new();
    let mut values = Vec::new();
    let mut support = Vec::new();
    let mut warnings = Vec::new();
    for month in returns.months() {
        let j = returns.series_index(series_id).expect("checked above");
        let count = returns
            .month_range(month)
            .filter(|&d| returns.value(d, j).is_some())
            .count();
        match monthly_volatility(returns, series_id, month) {
            Ok(v) => {
                months.push(month);
                values.push(v);
                support.push(count as u32);
            }
            Err(MetricsError::InsufficientObservations {
                observed, required, ..
            }) => {
                warnings.push(format!(
                    "volatility: skipped {month} ({observed} returns, need {required})"
                ));
            }
            Err(other) => return Err(other),
        }
    }
    Ok((
        MonthlySeries::new(SeriesKind::Volatility, months, values, support),
        warnings,
    ))
}

/// Average pairwise correlation over every month with at least one valid
/// pair. Skipped months and excluded pairs are reported as warnings.
pub fn avg_correlation_series(
    returns: &ReturnPanel,
    min_overlap: usize,
) -> (MonthlySeries, Vec<String>) {
    let mut months = Vec::new();
    let mut values = Vec::new();
    let mut support = Vec::new();
    let mut warnings = Vec::new();
    for month in returns.months() {
        match monthly_avg_pairwise_correlation(returns, month, min_overlap) {
            Ok(avg) => {
                months.push(month);
                values.push(avg.value);
                support.push(avg.included_pairs);
                if avg.excluded_pairs > 0 {
                    warnings.push(format!(
                        "correlation: {month} excluded {} of {} pairs",
                        avg.excluded_pairs,
                        avg.included_pairs + avg.excluded_pairs
                    ));
                }
            }
            Err(MetricsError::NoValidPairs { .. }) => {
                warnings.push(format!("correlation: skipped {month} (no valid pairs)"));
            }
            Err(_) => unreachable!("pair correlation only raises NoValidPairs"),
        }
    }
    (
        MonthlySeries::new(SeriesKind::AvgCorrelation, months, values, support),
        warnings,
    )
}
