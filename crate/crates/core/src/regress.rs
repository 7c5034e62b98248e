//! Regression specifications linking the uncertainty index to market
//! behavior, plus the correlation and rescaling helpers the summary tables
//! and figure data need.
//!
//! Four specifications:
//!
//! ```text
//! Vol(t)  = b0 + b1 GEPU(t) + e(t)
//! Vol(t)  = b0 + b1 GEPU(t) + b2 Vol(t-1)  + e(t)
//! Corr(t) = b0 + b1 GEPU(t) + e(t)
//! Corr(t) = b0 + b1 GEPU(t) + b2 Corr(t-1) + e(t)
//! ```
//!
//! The lagged dependent value comes from the dependent series' own earlier
//! support, so when that series starts before the index the lagged sample
//! keeps the same observation count as the simple one. Coefficients come
//! from a QR least-squares solve; standard errors are classical homoskedastic
//! by default with a Newey-West (Bartlett kernel) option, bandwidth
//! `floor(4 (n/100)^(2/9))`. The GEPU regressor enters in index levels unless
//! standardization is requested.

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::calendar::Month;
use crate::linalg::{self, LinalgError};
use crate::metrics::{MonthlySeries, SeriesKind};
use crate::pca::GepuSeries;

/// Condition-number threshold above which a fit is flagged.
pub const CONDITION_WARNING: f64 = 1e10;

#[derive(Debug, thiserror::Error)]
pub enum RegressError {
    #[error("only {available} overlapping months, need at least {required}")]
    InsufficientOverlap { available: usize, required: usize },
    #[error("design matrix is rank deficient: {detail}")]
    RankDeficiency { detail: String },
    #[error("dependent variable is constant; t-statistics are undefined")]
    ZeroVarianceDependent,
    #[error("{which} is constant")]
    ZeroVariance { which: &'static str },
    #[error("in table cell (panel {panel}, {proxy}, T={window_size}, {spec}): {source}")]
    AtCell {
        panel: char,
        proxy: &'static str,
        window_size: usize,
        spec: &'static str,
        #[source]
        source: Box<RegressError>,
    },
}

impl From<LinalgError> for RegressError {
    fn from(err: LinalgError) -> Self {
        RegressError::RankDeficiency {
            detail: err.to_string(),
        }
    }
}

// ---------------------------------------------------------------------------
// Alignment
// ---------------------------------------------------------------------------

/// Index and dependent series joined on their common months.
#[derive(Debug, Clone)]
pub struct AlignedSample {
    pub months: Vec<Month>,
    pub y: Vec<f64>,
    pub gepu: Vec<f64>,
    /// Previous-month dependent values, present for lagged specifications.
    pub lagged_dep: Option<Vec<f64>>,
    pub dep_kind: SeriesKind,
}

impl AlignedSample {
    pub fn n_obs(&self) -> usize {
        self.months.len()
    }

    fn n_coefficients(&self) -> usize {
        if self.lagged_dep.is_some() {
            3
        } else {
            2
        }
    }
}

/// Intersect the index and dependent months; with `with_lag` a month also
/// requires the dependent's previous-month value to exist.
pub fn align(
    gepu: &GepuSeries,
    dep: &MonthlySeries,
    with_lag: bool,
) -> Result<AlignedSample, RegressError> {
    let mut months = Vec::new();
    let mut y = Vec::new();
    let mut g = Vec::new();
    let mut lagged = Vec::new();
    for (k, month) in gepu.months().enumerate() {
        let Some(dep_value) = dep.value_at(month) else {
            continue;
        };
        if with_lag {
            let Some(lag_value) = dep.value_at(month.prev()) else {
                continue;
            };
            lagged.push(lag_value);
        }
        months.push(month);
        y.push(dep_value);
        g.push(gepu.values()[k]);
    }

    let required = if with_lag { 5 } else { 4 };
    if months.len() < required {
        return Err(RegressError::InsufficientOverlap {
            available: months.len(),
            required,
        });
    }
    Ok(AlignedSample {
        months,
        y,
        gepu: g,
        lagged_dep: with_lag.then_some(lagged),
        dep_kind: dep.kind,
    })
}

// ---------------------------------------------------------------------------
// OLS
// ---------------------------------------------------------------------------

/// Which of the four regression equations a result estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressionSpec {
    VolSimple,
    VolLagged,
    CorrSimple,
    CorrLagged,
}

impl RegressionSpec {
    fn from_sample(kind: SeriesKind, lagged: bool) -> Self {
        match (kind, lagged) {
            (SeriesKind::Volatility, false) => RegressionSpec::VolSimple,
            (SeriesKind::Volatility, true) => RegressionSpec::VolLagged,
            (SeriesKind::AvgCorrelation, false) => RegressionSpec::CorrSimple,
            (SeriesKind::AvgCorrelation, true) => RegressionSpec::CorrLagged,
        }
    }

    pub fn is_lagged(&self) -> bool {
        matches!(self, RegressionSpec::VolLagged | RegressionSpec::CorrLagged)
    }

    pub fn label(&self) -> &'static str {
        if self.is_lagged() {
            "lagged"
        } else {
            "simple"
        }
    }
}

/// Standard-error estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeMode {
    #[default]
    Classical,
    NeweyWest,
}

impl SeMode {
    pub fn label(&self) -> &'static str {
        match self {
            SeMode::Classical => "classical",
            SeMode::NeweyWest => "hac",
        }
    }
}

/// Estimation options.
#[derive(Debug, Clone, Copy, Default)]
pub struct OlsOptions {
    pub se_mode: SeMode,
    /// Standardize the GEPU regressor to zero mean / unit sample variance
    /// before fitting (coefficients then read per standard deviation).
    pub standardize_gepu: bool,
}

/// One estimated regression.
#[derive(Debug, Clone)]
pub struct RegressionResult {
    pub spec: RegressionSpec,
    /// `[b0, b1]` or `[b0, b1, b2]`.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub residuals: Vec<f64>,
    pub n_obs: usize,
    pub r_squared: f64,
    /// Durbin-Watson statistic of the residual sequence.
    pub dw_stat: f64,
    pub se_mode: SeMode,
    /// Set when the design matrix condition number exceeds 1e10.
    pub condition_warning: bool,
}

impl RegressionResult {
    pub fn beta1(&self) -> f64 {
        self.coefficients[1]
    }

    pub fn t_beta1(&self) -> f64 {
        self.t_stats[1]
    }

    pub fn beta2(&self) -> Option<f64> {
        self.coefficients.get(2).copied()
    }

    pub fn t_beta2(&self) -> Option<f64> {
        self.t_stats.get(2).copied()
    }
}

/// Ordinary least squares with intercept.
pub fn ols(sample: &AlignedSample, options: &OlsOptions) -> Result<RegressionResult, RegressError> {
    let n = sample.n_obs();
    let k = sample.n_coefficients();
    if n < k + 2 {
        return Err(RegressError::InsufficientOverlap {
            available: n,
            required: k + 2,
        });
    }
    if is_constant(&sample.y) {
        return Err(RegressError::ZeroVarianceDependent);
    }

    let gepu_column: Vec<f64> = if options.standardize_gepu {
        standardize(&sample.gepu)?
    } else {
        sample.gepu.clone()
    };

    let mut x = Array2::<f64>::zeros((n, k));
    for t in 0..n {
        x[(t, 0)] = 1.0;
        x[(t, 1)] = gepu_column[t];
        if let Some(lagged) = &sample.lagged_dep {
            x[(t, 2)] = lagged[t];
        }
    }
    let y = Array1::from_vec(sample.y.clone());

    let fit = linalg::lstsq(&x, &y, 1e-12)?;
    let condition_warning = fit.condition > CONDITION_WARNING;
    if condition_warning {
        log::warn!(
            "ill-conditioned design matrix (condition {:.3e})",
            fit.condition
        );
    }

    let fitted = x.dot(&fit.coefficients);
    let residuals: Vec<f64> = (0..n).map(|t| y[t] - fitted[t]).collect();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let y_mean = sample.y.iter().sum::<f64>() / n as f64;
    let sst: f64 = sample.y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum();
    let r_squared = 1.0 - ssr / sst;

    let covariance = match options.se_mode {
        SeMode::Classical => {
            let sigma2 = ssr / (n - k) as f64;
            fit.xtx_inv.mapv(|v| v * sigma2)
        }
        SeMode::NeweyWest => newey_west_covariance(&x, &residuals, &fit.xtx_inv),
    };
    let std_errors: Vec<f64> = (0..k).map(|i| covariance[(i, i)].sqrt()).collect();
    let t_stats: Vec<f64> = (0..k)
        .map(|i| fit.coefficients[i] / std_errors[i])
        .collect();

    let dw_stat = durbin_watson(&residuals);

    Ok(RegressionResult {
        spec: RegressionSpec::from_sample(sample.dep_kind, sample.lagged_dep.is_some()),
        coefficients: fit.coefficients.to_vec(),
        std_errors,
        t_stats,
        residuals,
        n_obs: n,
        r_squared,
        dw_stat,
        se_mode: options.se_mode,
        condition_warning,
    })
}

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

fn standardize(values: &[f64]) -> Result<Vec<f64>, RegressError> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 {
        return Err(RegressError::ZeroVariance { which: "regressor" });
    }
    let sd = var.sqrt();
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}

/// Newey-West bandwidth rule, `floor(4 (n/100)^(2/9))`.
pub fn newey_west_lags(n_obs: usize) -> usize {
    (4.0 * (n_obs as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

fn newey_west_covariance(x: &Array2<f64>, residuals: &[f64], xtx_inv: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let k = x.ncols();
    let max_lag = newey_west_lags(n).min(n.saturating_sub(1));

    // Meat: sum_t e_t^2 x_t x_t' plus Bartlett-weighted lagged cross terms.
    let mut meat = Array2::<f64>::zeros((k, k));
    for t in 0..n {
        let e2 = residuals[t] * residuals[t];
        for i in 0..k {
            for j in 0..k {
                meat[(i, j)] += e2 * x[(t, i)] * x[(t, j)];
            }
        }
    }
    for lag in 1..=max_lag {
        let weight = 1.0 - lag as f64 / (max_lag as f64 + 1.0);
        for t in lag..n {
            let scale = residuals[t] * residuals[t - lag];
            for i in 0..k {
                for j in 0..k {
                    let cross = x[(t, i)] * x[(t - lag, j)] + x[(t - lag, i)] * x[(t, j)];
                    meat[(i, j)] += weight * scale * cross;
                }
            }
        }
    }
    xtx_inv.dot(&meat).dot(xtx_inv)
}

fn durbin_watson(residuals: &[f64]) -> f64 {
    let denom: f64 = residuals.iter().map(|e| e * e).sum();
    if denom == 0.0 {
        return f64::NAN;
    }
    let numer: f64 = residuals
        .windows(2)
        .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
        .sum();
    numer / denom
}

// ---------------------------------------------------------------------------
// Table 2 sweep
// ---------------------------------------------------------------------------

/// One cell of the regression table: a proxy, a window size, a dependent,
/// and a specification.
#[derive(Debug, Clone)]
pub struct Table2Cell {
    /// `A` for volatility regressions, `B` for correlation regressions.
    pub panel: char,
    /// `pca` or `gdp`.
    pub proxy: &'static str,
    pub window_size: usize,
    pub result: RegressionResult,
}

/// Run the full proxy x dependent x specification sweep.
///
/// For each PCA window size the GDP baseline is truncated to that series'
/// support, so paired cells share their observation count. Cells are
/// independent and evaluated in parallel; output order is fixed: panel A
/// then B, window sizes in input order, proxy `pca` then `gdp`, simple then
/// lagged.
pub fn run_table2(
    gepu_pca: &[GepuSeries],
    gepu_gdp: &GepuSeries,
    vol: &MonthlySeries,
    corr: &MonthlySeries,
    options: &OlsOptions,
) -> Result<Vec<Table2Cell>, RegressError> {
    struct CellPlan<'a> {
        panel: char,
        proxy: &'static str,
        window_size: usize,
        index: &'a GepuSeries,
        dep: &'a MonthlySeries,
        with_lag: bool,
    }

    let truncated_gdp: Vec<GepuSeries> = gepu_pca
        .iter()
        .map(|pca| gepu_gdp.restrict(pca.start_month(), pca.last_month()))
        .collect();

    let mut plans: Vec<CellPlan> = Vec::new();
    for (panel, dep) in [('A', vol), ('B', corr)] {
        for (t_idx, pca) in gepu_pca.iter().enumerate() {
            let window_size = match pca.method {
                crate::pca::GepuMethod::Pca { window_size } => window_size,
                crate::pca::GepuMethod::Gdp => 0,
            };
            for (proxy, index) in [("pca", pca), ("gdp", &truncated_gdp[t_idx])] {
                for with_lag in [false, true] {
                    plans.push(CellPlan {
                        panel,
                        proxy,
                        window_size,
                        index,
                        dep,
                        with_lag,
                    });
                }
            }
        }
    }

    let cells: Vec<Result<Table2Cell, RegressError>> = plans
        .par_iter()
        .map(|plan| {
            let tag_err = |source: RegressError| RegressError::AtCell {
                panel: plan.panel,
                proxy: plan.proxy,
                window_size: plan.window_size,
                spec: if plan.with_lag { "lagged" } else { "simple" },
                source: Box::new(source),
            };
            let sample = align(plan.index, plan.dep, plan.with_lag).map_err(tag_err)?;
            let result = ols(&sample, options).map_err(tag_err)?;
            Ok(Table2Cell {
                panel: plan.panel,
                proxy: plan.proxy,
                window_size: plan.window_size,
                result,
            })
        })
        .collect();

    cells.into_iter().collect()
}

// ---------------------------------------------------------------------------
// Correlation and rescaling
// ---------------------------------------------------------------------------

/// Standard Pearson correlation coefficient.
pub fn pearson_correlation(a: &[f64], b: &[f64]) -> Result<f64, RegressError> {
    assert_eq!(a.len(), b.len(), "sequences must have equal length");
    assert!(a.len() >= 2, "need at least two observations");
    if is_constant(a) {
        return Err(RegressError::ZeroVariance {
            which: "first sequence",
        });
    }
    if is_constant(b) {
        return Err(RegressError::ZeroVariance {
            which: "second sequence",
        });
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
    Ok(cov / (va.sqrt() * vb.sqrt()))
}

/// Affine transform of `series` matching the sample mean and variance of
/// `target`. The scale factor is positive, so the output correlates with the
/// input at exactly +1.
pub fn rescale_to_match(series: &[f64], target: &[f64]) -> Result<Vec<f64>, RegressError> {
    assert_eq!(
        series.len(),
        target.len(),
        "sequences must have equal length"
    );
    if is_constant(series) {
        return Err(RegressError::ZeroVariance { which: "series" });
    }
    if is_constant(target) {
        return Err(RegressError::ZeroVariance { which: "target" });
    }
    let n = series.len() as f64;
    let sample_moments = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, var)
    };
    let (mean_s, var_s) = sample_moments(series);
    let (mean_t, var_t) = sample_moments(target);
    let scale = (var_t / var_s).sqrt();
    let shift = mean_t - scale * mean_s;
    Ok(series.iter().map(|v| scale * v + shift).collect())
}
