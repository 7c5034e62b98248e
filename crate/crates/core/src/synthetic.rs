//! Seeded synthetic datasets for tests, benchmarks, and demo runs.
//!
//! Everything here is generated from a `ChaCha8` stream keyed by an explicit
//! seed, so a given seed always produces the same dataset.

use chrono::{Datelike, NaiveDate};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::calendar::Month;
use crate::ingest::{DailyPricePanel, EpuPanel, GdpWeightTable};

/// The twenty economy codes used by the panel-scale generators.
pub const PANEL_ECONOMIES: [&str; 20] = [
    "AU", "BR", "CA", "CL", "CN", "FR", "DE", "GR", "IN", "IE", "IT", "JP", "MX", "NL", "RU", "KR",
    "ES", "SE", "UK", "US",
];

/// Persistent positive factor series: an AR(1) in logs around a base level.
fn factor_series(rng: &mut ChaCha8Rng, n_months: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let base = 120.0f64.ln();
    let persistence = 0.95;
    let shock_sd = 0.10;
    let mut log_level = base;
    (0..n_months)
        .map(|_| {
            log_level = (1.0 - persistence) * base
                + persistence * log_level
                + shock_sd * normal.sample(rng);
            log_level.exp()
        })
        .collect()
}

/// Panel driven by a single common factor:
/// `value_i(t) = a_i F(t) + b_i + noise`, noise sd = `noise_frac * a_i * sd(F)`.
///
/// Returns the panel and the factor path (aligned with the panel months).
pub fn one_factor_panel(
    seed: u64,
    start: Month,
    n_months: usize,
    n_economies: usize,
    noise_frac: f64,
) -> (EpuPanel, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factor = factor_series(&mut rng, n_months);
    let factor_mean = factor.iter().sum::<f64>() / n_months as f64;
    let factor_sd = (factor
        .iter()
        .map(|f| (f - factor_mean) * (f - factor_mean))
        .sum::<f64>()
        / n_months as f64)
        .sqrt();

    let loadings: Vec<f64> = (0..n_economies)
        .map(|_| rng.random_range(0.4..1.6))
        .collect();
    let intercepts: Vec<f64> = (0..n_economies)
        .map(|_| rng.random_range(5.0..50.0))
        .collect();

    let normal = Normal::new(0.0, 1.0).unwrap();
    let values = Array2::from_shape_fn((n_months, n_economies), |(t, i)| {
        let noise = noise_frac * loadings[i] * factor_sd * normal.sample(&mut rng);
        loadings[i] * factor[t] + intercepts[i] + noise
    });

    let months: Vec<Month> = (0..n_months).map(|k| start.add_months(k as i32)).collect();
    let economies: Vec<String> = if n_economies <= PANEL_ECONOMIES.len() {
        PANEL_ECONOMIES[..n_economies]
            .iter()
            .map(|s| s.to_string())
            .collect()
    } else {
        (0..n_economies).map(|i| format!("E{i:02}")).collect()
    };
    let panel = EpuPanel::new(months, economies, values)
        .expect("one-factor construction keeps values positive");
    (panel, factor)
}

/// A full three-file dataset: EPU panel, daily market prices, and raw GDP
/// values.
#[derive(Debug, Clone)]
pub struct SampleDataset {
    pub epu: EpuPanel,
    pub prices: DailyPricePanel,
    /// Raw `(year, economy, gdp_value)` rows; normalize with
    /// [`GdpWeightTable::from_values`].
    pub gdp_rows: Vec<(i32, String, f64)>,
    pub world_index_id: String,
}

impl SampleDataset {
    pub fn gdp_table(&self) -> GdpWeightTable {
        GdpWeightTable::from_values(&self.gdp_rows).expect("generated values are positive")
    }
}

/// Panel-scale dataset mirroring the study layout: 20 economies of monthly
/// data over 2003-01..2018-12 plus daily prices from December 2002 for a
/// world index and eight national market indices.
///
/// Market behavior is tied to the panel's common factor: months with a high
/// factor level get larger daily return dispersion and a heavier common
/// component across national indices, so realized volatility and average
/// pairwise correlation both co-move with the uncertainty level.
pub fn sample_dataset(seed: u64) -> SampleDataset {
    let start: Month = "2003-01".parse().unwrap();
    let n_months = 192;
    let (epu, factor) = one_factor_panel(seed, start, n_months, PANEL_ECONOMIES.len(), 0.10);

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let normal = Normal::new(0.0, 1.0).unwrap();

    // Normalized factor level in [0, 1], by month offset from the panel
    // start. December 2002 borrows the first month's level.
    let f_min = factor.iter().cloned().fold(f64::INFINITY, f64::min);
    let f_max = factor.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let intensity = |month: Month| -> f64 {
        let offset = month.months_since(start).clamp(0, n_months as i32 - 1);
        (factor[offset as usize] - f_min) / (f_max - f_min)
    };

    let national_ids = ["SPX", "UKX", "DAX", "CAC", "NKY", "HSI", "IBOV", "KOSPI"];
    let world_id = "ACWI";
    let mut series: Vec<String> = vec![world_id.to_string()];
    series.extend(national_ids.iter().map(|s| s.to_string()));
    let n_series = series.len();

    // Trading calendar: weekdays from 2002-12-02 through 2018-12-31.
    let mut dates = Vec::new();
    let mut day = NaiveDate::from_ymd_opt(2002, 12, 2).unwrap();
    let last_day = NaiveDate::from_ymd_opt(2018, 12, 31).unwrap();
    while day <= last_day {
        if day.weekday().number_from_monday() <= 5 {
            dates.push(day);
        }
        day = day.succ_opt().unwrap();
    }

    let mut levels: Vec<f64> = (0..n_series)
        .map(|j| 100.0 * (1.0 + j as f64 / 10.0))
        .collect();
    let mut cells: Vec<Option<f64>> = Vec::with_capacity(dates.len() * n_series);
    let drift = 0.0002;
    for &date in &dates {
        let u = intensity(Month::containing(date));
        let daily_sd = 0.004 + 0.016 * u;
        let common_weight = 0.2 + 0.6 * u;
        let common = normal.sample(&mut rng);
        for (j, level) in levels.iter_mut().enumerate() {
            let idio = normal.sample(&mut rng);
            let (w_common, w_idio) = if j == 0 {
                // World index: mostly common component.
                (0.9f64.sqrt(), 0.1f64.sqrt())
            } else {
                (common_weight.sqrt(), (1.0 - common_weight).sqrt())
            };
            let r = drift + daily_sd * (w_common * common + w_idio * idio);
            *level *= 1.0 + r;
            // National markets have occasional local holidays; the world
            // index is always observed. Hiding the cell leaves the underlying
            // path intact, like a real unobserved trading day.
            let holiday = j > 0 && rng.random_range(0.0..1.0) < 0.012;
            cells.push(if holiday { None } else { Some(*level) });
        }
    }
    let prices = DailyPricePanel::new(dates, series, cells).expect("generated prices are positive");

    // GDP values: per-economy base size with a mild per-economy growth path.
    let mut gdp_rows = Vec::new();
    let bases: Vec<f64> = (0..PANEL_ECONOMIES.len())
        .map(|_| rng.random_range(0.5..20.0))
        .collect();
    let growth: Vec<f64> = (0..PANEL_ECONOMIES.len())
        .map(|_| rng.random_range(0.98..1.06))
        .collect();
    for year in 2002..=2018 {
        for (i, code) in PANEL_ECONOMIES.iter().enumerate() {
            let value = bases[i] * growth[i].powi(year - 2002);
            gdp_rows.push((year, code.to_string(), value));
        }
    }

    SampleDataset {
        epu,
        prices,
        gdp_rows,
        world_index_id: world_id.to_string(),
    }
}

/// Write the dataset as the three canonical input files (`epu_panel.csv`,
/// `daily_prices.csv`, `gdp.csv`) into `dir`, values rounded the way
/// published data usually is.
pub fn write_sample_csvs(data: &SampleDataset, dir: &std::path::Path) -> std::io::Result<()> {
    use std::fmt::Write as _;
    std::fs::create_dir_all(dir)?;

    let mut epu = String::new();
    writeln!(epu, "month,{}", data.epu.economies().join(",")).unwrap();
    for (r, month) in data.epu.months().iter().enumerate() {
        let cells: Vec<String> = (0..data.epu.n_economies())
            .map(|c| format!("{:.4}", data.epu.value(r, c)))
            .collect();
        writeln!(epu, "{month},{}", cells.join(",")).unwrap();
    }
    std::fs::write(dir.join("epu_panel.csv"), epu)?;

    let mut prices = String::new();
    writeln!(prices, "date,{}", data.prices.series().join(",")).unwrap();
    for (d, date) in data.prices.dates().iter().enumerate() {
        let cells: Vec<String> = (0..data.prices.series().len())
            .map(|s| {
                data.prices
                    .price(d, s)
                    .map(|p| format!("{p:.6}"))
                    .unwrap_or_default()
            })
            .collect();
        writeln!(prices, "{date},{}", cells.join(",")).unwrap();
    }
    std::fs::write(dir.join("daily_prices.csv"), prices)?;

    let mut gdp = String::from("year,economy,gdp_value\n");
    for (year, economy, value) in &data.gdp_rows {
        writeln!(gdp, "{year},{economy},{value:.4}").unwrap();
    }
    std::fs::write(dir.join("gdp.csv"), gdp)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_factor_panel_is_deterministic() {
        let start: Month = "2003-01".parse().unwrap();
        let (p1, f1) = one_factor_panel(11, start, 48, 6, 0.05);
        let (p2, f2) = one_factor_panel(11, start, 48, 6, 0.05);
        assert_eq!(p1, p2);
        assert_eq!(f1, f2);

        let (p3, _) = one_factor_panel(12, start, 48, 6, 0.05);
        assert_ne!(p1, p3);
    }

    #[test]
    fn sample_dataset_shape() {
        let data = sample_dataset(1);
        assert_eq!(data.epu.n_months(), 192);
        assert_eq!(data.epu.n_economies(), 20);
        assert_eq!(data.prices.series().len(), 9);
        assert_eq!(data.prices.series()[0], "ACWI");
        assert!(data.prices.n_absent() > 0);
        assert_eq!(data.gdp_rows.len(), 17 * 20);
        data.gdp_table();
    }
}
