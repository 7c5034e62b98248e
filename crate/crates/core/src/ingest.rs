//! Loading and validation of the three input datasets.
//!
//! All inputs are UTF-8 CSV with a mandatory header row and `.` as the
//! decimal separator:
//!
//! - `epu_panel.csv` — header `month,AU,BR,...`; one row per calendar month,
//!   every cell present and positive. Months must be consecutive; gaps and
//!   blank cells are hard errors, never imputed.
//! - `daily_prices.csv` — header `date,<id1>,<id2>,...`; blank cells mark
//!   market holidays and are kept as absent (no forward filling).
//! - `gdp.csv` — header `year,economy,gdp_value`; per-year weights are the
//!   values normalized to sum to one over the economies listed for that year.
//!
//! Loaders report the exact location of the first violation (row/column in
//! file coordinates, 1-based, header = row 1).

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use ndarray::{Array2, ArrayView1};

use crate::calendar::Month;
use crate::numfmt;

/// Errors raised while loading or slicing input datasets.
#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at row {row}, column {col}: {message}")]
    Parse {
        row: usize,
        col: usize,
        message: String,
    },
    #[error("month sequence gap: {missing} is missing")]
    Gap { missing: Month },
    #[error("missing value for {economy} in {month}")]
    MissingValue { month: Month, economy: String },
    #[error("schema mismatch: expected economies [{expected}], file has [{found}]")]
    Schema { expected: String, found: String },
    #[error("non-positive price {value} for {series} on {date}")]
    NonPositivePrice {
        date: NaiveDate,
        series: String,
        value: f64,
    },
    #[error("dates out of order: {next} follows {prev}")]
    UnorderedDates { prev: NaiveDate, next: NaiveDate },
    #[error("invalid month range: {first}..{last} (panel covers {panel_first}..{panel_last})")]
    Range {
        first: Month,
        last: Month,
        panel_first: Month,
        panel_last: Month,
    },
    #[error("gdp values for year {year} sum to zero")]
    EmptyYear { year: i32 },
}

fn io_err(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(row: usize, col: usize, message: impl Into<String>) -> IngestError {
    IngestError::Parse {
        row,
        col,
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// EPU panel
// ---------------------------------------------------------------------------

/// Monthly EPU levels for a fixed set of economies over a gapless month range.
#[derive(Debug, Clone, PartialEq)]
pub struct EpuPanel {
    months: Vec<Month>,
    economies: Vec<String>,
    /// `months.len() x economies.len()`, all finite and positive.
    values: Array2<f64>,
}

impl EpuPanel {
    /// Validating constructor; enforces the panel invariants (consecutive
    /// months, matching dimensions, finite positive cells).
    pub fn new(
        months: Vec<Month>,
        economies: Vec<String>,
        values: Array2<f64>,
    ) -> Result<Self, IngestError> {
        if values.nrows() != months.len() || values.ncols() != economies.len() {
            return Err(parse_err(
                0,
                0,
                format!(
                    "value table is {}x{} but panel declares {} months x {} economies",
                    values.nrows(),
                    values.ncols(),
                    months.len(),
                    economies.len()
                ),
            ));
        }
        for pair in months.windows(2) {
            if pair[1] != pair[0].next() {
                return Err(IngestError::Gap {
                    missing: pair[0].next(),
                });
            }
        }
        for (r, month) in months.iter().enumerate() {
            for (c, economy) in economies.iter().enumerate() {
                let v = values[(r, c)];
                if !v.is_finite() {
                    return Err(IngestError::MissingValue {
                        month: *month,
                        economy: economy.clone(),
                    });
                }
                if v <= 0.0 {
                    return Err(parse_err(
                        r + 2,
                        c + 2,
                        format!("non-positive EPU value {v} for {economy} in {month}"),
                    ));
                }
            }
        }
        Ok(Self {
            months,
            economies,
            values,
        })
    }

    pub fn months(&self) -> &[Month] {
        &self.months
    }

    pub fn economies(&self) -> &[String] {
        &self.economies
    }

    pub fn n_months(&self) -> usize {
        self.months.len()
    }

    pub fn n_economies(&self) -> usize {
        self.economies.len()
    }

    pub fn first_month(&self) -> Month {
        self.months[0]
    }

    pub fn last_month(&self) -> Month {
        *self.months.last().expect("panel is never empty")
    }

    /// Row index of `month`, if the panel covers it.
    pub fn month_index(&self, month: Month) -> Option<usize> {
        let offset = month.months_since(self.first_month());
        if offset < 0 || offset as usize >= self.months.len() {
            None
        } else {
            Some(offset as usize)
        }
    }

    pub fn value(&self, month_idx: usize, economy_idx: usize) -> f64 {
        self.values[(month_idx, economy_idx)]
    }

    /// All economies' levels in one month (panel row).
    pub fn month_row(&self, month_idx: usize) -> ArrayView1<'_, f64> {
        self.values.row(month_idx)
    }

    /// One economy's series over all months (panel column).
    pub fn economy_column(&self, economy_idx: usize) -> ArrayView1<'_, f64> {
        self.values.column(economy_idx)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Write the canonical `month,<codes...>` CSV. Values are serialized at
    /// full precision so a write/load cycle reproduces the panel exactly.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), std::io::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["month".to_string()];
        header.extend(self.economies.iter().cloned());
        w.write_record(&header)?;
        for (r, month) in self.months.iter().enumerate() {
            let mut record = vec![month.to_string()];
            record.extend((0..self.economies.len()).map(|c| numfmt::full(self.values[(r, c)])));
            w.write_record(&record)?;
        }
        w.flush()
    }
}

/// Load and validate an EPU panel.
///
/// The first header cell must be `month`; the remaining headers are taken as
/// economy codes in file order. When `expected_economies` is given the file's
/// codes must match it exactly (same order).
pub fn load_epu_panel(
    path: &Path,
    expected_economies: Option<&[&str]>,
) -> Result<EpuPanel, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, 1, e.to_string()))?
        .clone();
    if headers.is_empty() || headers.get(0) != Some("month") {
        return Err(parse_err(
            1,
            1,
            format!(
                "first header must be `month`, found `{}`",
                headers.get(0).unwrap_or("")
            ),
        ));
    }
    let economies: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if economies.is_empty() {
        return Err(parse_err(1, 2, "no economy columns"));
    }
    if let Some(expected) = expected_economies {
        if economies != expected {
            return Err(IngestError::Schema {
                expected: expected.join(","),
                found: economies.join(","),
            });
        }
    }

    let mut months: Vec<Month> = Vec::new();
    let mut flat: Vec<f64> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after the header
        let record = record.map_err(|e| parse_err(row, 1, e.to_string()))?;
        if record.len() != economies.len() + 1 {
            return Err(parse_err(
                row,
                record.len() + 1,
                format!(
                    "expected {} cells, found {}",
                    economies.len() + 1,
                    record.len()
                ),
            ));
        }
        let month: Month = record[0]
            .trim()
            .parse()
            .map_err(|e: crate::calendar::ParseMonthError| parse_err(row, 1, e.to_string()))?;
        if let Some(&prev) = months.last() {
            if month != prev.next() {
                return Err(IngestError::Gap {
                    missing: prev.next(),
                });
            }
        }
        for (c, cell) in record.iter().skip(1).enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                return Err(IngestError::MissingValue {
                    month,
                    economy: economies[c].clone(),
                });
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(row, c + 2, format!("not a number: `{cell}`")))?;
            flat.push(v);
        }
        months.push(month);
    }
    if months.is_empty() {
        return Err(parse_err(2, 1, "no data rows"));
    }

    let values = Array2::from_shape_vec((months.len(), economies.len()), flat)
        .expect("row-major shape matches by construction");
    EpuPanel::new(months, economies, values)
}

/// Sub-panel covering `[first, last]` with the same economies.
pub fn restrict_months(
    panel: &EpuPanel,
    first: Month,
    last: Month,
) -> Result<EpuPanel, IngestError> {
    let range_err = || IngestError::Range {
        first,
        last,
        panel_first: panel.first_month(),
        panel_last: panel.last_month(),
    };
    if last < first {
        return Err(range_err());
    }
    let lo = panel.month_index(first).ok_or_else(range_err)?;
    let hi = panel.month_index(last).ok_or_else(range_err)?;
    let months = panel.months[lo..=hi].to_vec();
    let values = panel.values.slice(ndarray::s![lo..=hi, ..]).to_owned();
    EpuPanel::new(months, panel.economies.clone(), values)
}

// ---------------------------------------------------------------------------
// Daily prices
// ---------------------------------------------------------------------------

/// Daily closing prices for a set of market series; cells may be absent
/// (market holidays).
#[derive(Debug, Clone, PartialEq)]
pub struct DailyPricePanel {
    dates: Vec<NaiveDate>,
    series: Vec<String>,
    /// Row-major `dates.len() x series.len()`; `None` = absent.
    cells: Vec<Option<f64>>,
}

impl DailyPricePanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        series: Vec<String>,
        cells: Vec<Option<f64>>,
    ) -> Result<Self, IngestError> {
        assert_eq!(cells.len(), dates.len() * series.len());
        for pair in dates.windows(2) {
            if pair[1] <= pair[0] {
                return Err(IngestError::UnorderedDates {
                    prev: pair[0],
                    next: pair[1],
                });
            }
        }
        let panel = Self {
            dates,
            series,
            cells,
        };
        for d in 0..panel.dates.len() {
            for s in 0..panel.series.len() {
                if let Some(p) = panel.price(d, s) {
                    if !p.is_finite() || p <= 0.0 {
                        return Err(IngestError::NonPositivePrice {
                            date: panel.dates[d],
                            series: panel.series[s].clone(),
                            value: p,
                        });
                    }
                }
            }
        }
        Ok(panel)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn series(&self) -> &[String] {
        &self.series
    }

    pub fn series_index(&self, id: &str) -> Option<usize> {
        self.series.iter().position(|s| s == id)
    }

    pub fn price(&self, date_idx: usize, series_idx: usize) -> Option<f64> {
        self.cells[date_idx * self.series.len() + series_idx]
    }

    /// Number of absent cells across the whole panel.
    pub fn n_absent(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }
}

/// Load a daily price panel; blank cells become absent observations.
pub fn load_daily_prices(path: &Path) -> Result<DailyPricePanel, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    load_daily_prices_from(file)
}

fn load_daily_prices_from<R: Read>(input: R) -> Result<DailyPricePanel, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);

    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, 1, e.to_string()))?
        .clone();
    if headers.get(0) != Some("date") {
        return Err(parse_err(
            1,
            1,
            format!(
                "first header must be `date`, found `{}`",
                headers.get(0).unwrap_or("")
            ),
        ));
    }
    let series: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if series.is_empty() {
        return Err(parse_err(1, 2, "no series columns"));
    }

    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut cells: Vec<Option<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| parse_err(row, 1, e.to_string()))?;
        let date = NaiveDate::parse_from_str(record[0].trim(), "%Y-%m-%d")
            .map_err(|_| parse_err(row, 1, format!("not a date: `{}`", &record[0])))?;
        if let Some(&prev) = dates.last() {
            if date <= prev {
                return Err(IngestError::UnorderedDates { prev, next: date });
            }
        }
        for (c, cell) in record.iter().skip(1).enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                cells.push(None);
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(row, c + 2, format!("not a number: `{cell}`")))?;
            if !v.is_finite() || v <= 0.0 {
                return Err(IngestError::NonPositivePrice {
                    date,
                    series: series[c].clone(),
                    value: v,
                });
            }
            cells.push(Some(v));
        }
        dates.push(date);
    }
    DailyPricePanel::new(dates, series, cells)
}

// ---------------------------------------------------------------------------
// GDP weights
// ---------------------------------------------------------------------------

/// Per-year economy weights, normalized to sum to one within each year.
#[derive(Debug, Clone, PartialEq)]
pub struct GdpWeightTable {
    weights: BTreeMap<i32, BTreeMap<String, f64>>,
}

impl GdpWeightTable {
    /// Build from raw `(year, economy, gdp_value)` rows; values are divided
    /// by the year's total.
    pub fn from_values(rows: &[(i32, String, f64)]) -> Result<Self, IngestError> {
        let mut by_year: BTreeMap<i32, BTreeMap<String, f64>> = BTreeMap::new();
        for (i, (year, economy, value)) in rows.iter().enumerate() {
            if !value.is_finite() || *value < 0.0 {
                return Err(parse_err(
                    i + 2,
                    3,
                    format!("gdp_value must be finite and >= 0, found {value}"),
                ));
            }
            let slot = by_year.entry(*year).or_default();
            if slot.insert(economy.clone(), *value).is_some() {
                return Err(parse_err(
                    i + 2,
                    2,
                    format!("duplicate entry for ({year}, {economy})"),
                ));
            }
        }
        let mut weights = BTreeMap::new();
        for (year, values) in by_year {
            let total: f64 = values.values().sum();
            if total <= 0.0 {
                return Err(IngestError::EmptyYear { year });
            }
            let normalized = values
                .into_iter()
                .map(|(econ, v)| (econ, v / total))
                .collect();
            weights.insert(year, normalized);
        }
        Ok(Self { weights })
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        self.weights.keys().copied()
    }

    pub fn has_year(&self, year: i32) -> bool {
        self.weights.contains_key(&year)
    }

    pub fn weight(&self, year: i32, economy: &str) -> Option<f64> {
        self.weights.get(&year)?.get(economy).copied()
    }

    pub fn year_weights(&self, year: i32) -> Option<&BTreeMap<String, f64>> {
        self.weights.get(&year)
    }
}

/// Load `year,economy,gdp_value` rows and normalize per year.
pub fn load_gdp_weights(path: &Path) -> Result<GdpWeightTable, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);

    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, 1, e.to_string()))?
        .clone();
    let expected = ["year", "economy", "gdp_value"];
    let found: Vec<&str> = headers.iter().collect();
    if found != expected {
        return Err(parse_err(
            1,
            1,
            format!(
                "expected header `year,economy,gdp_value`, found `{}`",
                found.join(",")
            ),
        ));
    }

    let mut rows: Vec<(i32, String, f64)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| parse_err(row, 1, e.to_string()))?;
        let year: i32 = record[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(row, 1, format!("not a year: `{}`", &record[0])))?;
        let economy = record[1].trim().to_string();
        if economy.is_empty() {
            return Err(parse_err(row, 2, "empty economy code"));
        }
        let value: f64 = record[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(row, 3, format!("not a number: `{}`", &record[2])))?;
        if !value.is_finite() || value < 0.0 {
            return Err(parse_err(
                row,
                3,
                format!("gdp_value must be finite and >= 0, found {value}"),
            ));
        }
        rows.push((year, economy, value));
    }
    GdpWeightTable::from_values(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn month(s: &str) -> Month {
        s.parse().unwrap()
    }

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn panel_csv(n_months: usize, n_economies: usize) -> String {
        let codes: Vec<String> = (0..n_economies).map(|i| format!("E{i:02}")).collect();
        let mut out = format!("month,{}\n", codes.join(","));
        let mut m = month("2003-01");
        for r in 0..n_months {
            let cells: Vec<String> = (0..n_economies)
                .map(|c| format!("{}", 90.0 + r as f64 + c as f64 * 0.5))
                .collect();
            out.push_str(&format!("{m},{}\n", cells.join(",")));
            m = m.next();
        }
        out
    }

    #[test]
    fn loads_paper_scale_panel() {
        let f = write_temp(&panel_csv(192, 20));
        let panel = load_epu_panel(f.path(), None).unwrap();
        assert_eq!(panel.n_months(), 192);
        assert_eq!(panel.n_economies(), 20);
        assert_eq!(panel.first_month(), month("2003-01"));
        assert_eq!(panel.last_month(), month("2018-12"));
    }

    #[test]
    fn loads_single_row_panel() {
        let f = write_temp("month,AU,US\n2003-01,100.0,110.0\n");
        let panel = load_epu_panel(f.path(), None).unwrap();
        assert_eq!(panel.n_months(), 1);
        assert_eq!(panel.economies(), ["AU", "US"]);
    }

    #[test]
    fn gap_is_detected_and_named() {
        let f = write_temp("month,AU\n2003-01,100.0\n2003-03,101.0\n");
        match load_epu_panel(f.path(), None) {
            Err(IngestError::Gap { missing }) => assert_eq!(missing, month("2003-02")),
            other => panic!("expected GapError, got {other:?}"),
        }
    }

    #[test]
    fn missing_cell_is_an_error() {
        let f = write_temp("month,AU,US\n2003-01,100.0,\n");
        match load_epu_panel(f.path(), None) {
            Err(IngestError::MissingValue { month: m, economy }) => {
                assert_eq!(m, month("2003-01"));
                assert_eq!(economy, "US");
            }
            other => panic!("expected MissingValueError, got {other:?}"),
        }
    }

    #[test]
    fn schema_mismatch_reported() {
        let f = write_temp("month,AU,US\n2003-01,100.0,110.0\n");
        let err = load_epu_panel(f.path(), Some(&["AU", "UK", "US"])).unwrap_err();
        assert!(matches!(err, IngestError::Schema { .. }));
    }

    #[test]
    fn nonpositive_epu_value_with_location() {
        let f = write_temp("month,AU\n2003-01,100.0\n2003-02,-4.0\n");
        match load_epu_panel(f.path(), None) {
            Err(IngestError::Parse { row, col, .. }) => {
                assert_eq!((row, col), (3, 2));
            }
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn restrict_to_prefix_and_identity() {
        let f = write_temp(&panel_csv(192, 3));
        let panel = load_epu_panel(f.path(), None).unwrap();

        let sub = restrict_months(&panel, month("2003-01"), month("2004-12")).unwrap();
        assert_eq!(sub.n_months(), 24);
        assert_eq!(sub.last_month(), month("2004-12"));

        let same = restrict_months(&panel, panel.first_month(), panel.last_month()).unwrap();
        assert_eq!(same, panel);

        let err = restrict_months(&panel, month("2004-01"), month("2003-06")).unwrap_err();
        assert!(matches!(err, IngestError::Range { .. }));
    }

    #[test]
    fn restrict_is_idempotent() {
        let f = write_temp(&panel_csv(36, 4));
        let panel = load_epu_panel(f.path(), None).unwrap();
        let once = restrict_months(&panel, month("2003-06"), month("2005-01")).unwrap();
        let twice = restrict_months(&once, month("2003-06"), month("2005-01")).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn daily_prices_full_and_absent_cells() {
        let f = write_temp(
            "date,A,B\n2003-01-02,100.0,50.0\n2003-01-03,101.0,51.0\n2003-01-06,102.0,52.0\n2003-01-07,103.0,53.0\n2003-01-08,104.0,54.0\n",
        );
        let panel = load_daily_prices(f.path()).unwrap();
        assert_eq!(panel.dates().len(), 5);
        assert_eq!(panel.n_absent(), 0);

        let f = write_temp("date,A,B\n2003-01-02,100.0,50.0\n2003-01-03,,51.0\n");
        let panel = load_daily_prices(f.path()).unwrap();
        assert_eq!(panel.n_absent(), 1);
        assert_eq!(panel.price(1, 0), None);
        assert_eq!(panel.price(1, 1), Some(51.0));
    }

    #[test]
    fn negative_price_rejected_with_location() {
        let f = write_temp("date,A\n2003-01-02,100.0\n2003-01-03,-3.2\n");
        match load_daily_prices(f.path()) {
            Err(IngestError::NonPositivePrice {
                date,
                series,
                value,
            }) => {
                assert_eq!(date, NaiveDate::from_ymd_opt(2003, 1, 3).unwrap());
                assert_eq!(series, "A");
                assert_eq!(value, -3.2);
            }
            other => panic!("expected NonPositivePriceError, got {other:?}"),
        }
    }

    #[test]
    fn unordered_dates_rejected() {
        let f = write_temp("date,A\n2003-01-03,100.0\n2003-01-02,99.0\n");
        assert!(matches!(
            load_daily_prices(f.path()),
            Err(IngestError::UnorderedDates { .. })
        ));
    }

    #[test]
    fn gdp_weights_normalize() {
        let f = write_temp("year,economy,gdp_value\n2010,US,60\n2010,CN,40\n2011,US,10\n");
        let table = load_gdp_weights(f.path()).unwrap();
        assert!((table.weight(2010, "US").unwrap() - 0.6).abs() < 1e-15);
        assert!((table.weight(2010, "CN").unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(table.weight(2011, "US"), Some(1.0));
        assert_eq!(table.weight(2012, "US"), None);
    }

    #[test]
    fn gdp_all_zero_year_rejected() {
        let f = write_temp("year,economy,gdp_value\n2010,US,0\n2010,CN,0\n");
        match load_gdp_weights(f.path()) {
            Err(IngestError::EmptyYear { year }) => assert_eq!(year, 2010),
            other => panic!("expected EmptyYearError, got {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let f = write_temp(&panel_csv(30, 5));
        let panel = load_epu_panel(f.path(), None).unwrap();

        let mut buf: Vec<u8> = Vec::new();
        panel.write_csv(&mut buf).unwrap();
        let mut f2 = tempfile::NamedTempFile::new().unwrap();
        f2.write_all(&buf).unwrap();
        let reloaded = load_epu_panel(f2.path(), None).unwrap();
        assert_eq!(panel, reloaded);
    }
}
