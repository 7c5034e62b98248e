//! Rolling-window PCA index construction and the GDP-weighted baseline.
//!
//! For each window `[t - T + 1, t]` of a monthly panel:
//!
//! ```text
//! x_i(s) = (EPU_i(s) - <EPU_i>) / sigma_i          per-economy normalization
//! C      = (1/T) X X'                              N x N cross-correlation
//! C u1   = lambda1 u1                              leading eigenpair
//! GEPU(t) = u1 . EPU(t) / sum_i u1_i               eigenportfolio index
//! ```
//!
//! `sigma_i` is the population standard deviation (divide by `T`), which makes
//! `diag(C) = 1` exact under the `X X' / T` form. The eigenvector sign is
//! fixed so its components sum to a positive number; with that convention the
//! eigenportfolio weights `u1_i / sum u1` sum to one and `GEPU(t)` is a
//! weighted average of the month's levels.
//!
//! Windows are right-aligned: the index value at month `t` uses data through
//! `t` only. The GDP-weighted baseline is a plain within-month weighted
//! average with annual weights.

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;

use crate::calendar::Month;
use crate::ingest::{EpuPanel, GdpWeightTable};
use crate::linalg::{self, LinalgError};
use crate::numfmt;

/// Eigenvalue convergence tolerance for successive power-iteration estimates.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-12;
/// Power-iteration budget.
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Spectral gap below which the leading eigenpair is flagged as degenerate.
pub const DEGENERATE_GAP: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum PcaError {
    #[error("window ending {window_end} with T={window_size} is not covered by the panel")]
    InsufficientHistory {
        window_end: Month,
        window_size: usize,
    },
    #[error("economy {economy} is constant over the window (zero variance)")]
    ZeroVariance { economy: String },
    #[error(
        "eigensolver did not converge within {iterations} iterations (residual {residual:.3e})"
    )]
    Convergence { iterations: usize, residual: f64 },
    #[error(
        "power iteration stalled on a non-leading eigenvector \
         (reached {got:.6}, leading eigenvalue is {leading:.6})"
    )]
    NotLeading { got: f64, leading: f64 },
    #[error(
        "eigenvector components sum to {weight_sum:.3e}; eigenportfolio weights are undefined"
    )]
    DegenerateWeights { weight_sum: f64 },
    #[error("no GDP weights for year {year}")]
    MissingWeightYear { year: i32 },
    #[error("not a correlation matrix: {detail}")]
    InvalidCorrelation { detail: String },
    #[error("in window ending {month}: {source}")]
    AtWindow {
        month: Month,
        #[source]
        source: Box<PcaError>,
    },
}

impl From<LinalgError> for PcaError {
    fn from(err: LinalgError) -> Self {
        match err {
            LinalgError::Convergence {
                iterations,
                residual,
            } => PcaError::Convergence {
                iterations,
                residual,
            },
            LinalgError::RankDeficient { col, pivot } => PcaError::InvalidCorrelation {
                detail: format!("rank-deficient at column {col} (pivot {pivot:.3e})"),
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Normalized window
// ---------------------------------------------------------------------------

/// One window of the panel, normalized per economy to zero mean and unit
/// population variance.
#[derive(Debug, Clone)]
pub struct NormalizedWindow {
    pub window_end: Month,
    pub window_size: usize,
    pub economies: Vec<String>,
    /// `N x T`, row `i` is economy `i` over the window.
    pub x: Array2<f64>,
    pub sigmas: Array1<f64>,
    pub means: Array1<f64>,
}

impl NormalizedWindow {
    /// Validate the row invariants: mean 0 and population variance 1, both
    /// within 1e-10, and strictly positive sigmas.
    pub fn validate(&self) -> Result<(), PcaError> {
        let t = self.window_size as f64;
        for (i, row) in self.x.rows().into_iter().enumerate() {
            let mean = row.sum() / t;
            let var = row.iter().map(|v| v * v).sum::<f64>() / t;
            if mean.abs() > 1e-10 || (var - 1.0).abs() > 1e-10 {
                return Err(PcaError::InvalidCorrelation {
                    detail: format!("normalized row {i} has mean {mean:.3e}, variance {var}",),
                });
            }
            if self.sigmas[i] <= 0.0 {
                return Err(PcaError::ZeroVariance {
                    economy: self.economies[i].clone(),
                });
            }
        }
        Ok(())
    }
}

/// Normalize the panel over the window `[window_end - T + 1, window_end]`.
pub fn normalize_window(
    panel: &EpuPanel,
    window_end: Month,
    window_size: usize,
) -> Result<NormalizedWindow, PcaError> {
    let insufficient = || PcaError::InsufficientHistory {
        window_end,
        window_size,
    };
    if window_size < 2 {
        return Err(insufficient());
    }
    let end_idx = panel.month_index(window_end).ok_or_else(insufficient)?;
    let first = window_end.add_months(-(window_size as i32 - 1));
    let start_idx = panel.month_index(first).ok_or_else(insufficient)?;

    let n = panel.n_economies();
    let t = window_size as f64;
    let mut x = Array2::<f64>::zeros((n, window_size));
    let mut sigmas = Array1::<f64>::zeros(n);
    let mut means = Array1::<f64>::zeros(n);

    for i in 0..n {
        let series: Vec<f64> = (start_idx..=end_idx).map(|r| panel.value(r, i)).collect();
        let mean = series.iter().sum::<f64>() / t;
        let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t;
        let sigma = var.sqrt();
        // A constant series has zero variance; near-constant series whose
        // spread is pure rounding noise are treated the same way.
        let scale = series.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if sigma <= scale * 1e-13 {
            return Err(PcaError::ZeroVariance {
                economy: panel.economies()[i].clone(),
            });
        }
        for (s, v) in series.iter().enumerate() {
            x[(i, s)] = (v - mean) / sigma;
        }
        sigmas[i] = sigma;
        means[i] = mean;
    }

    Ok(NormalizedWindow {
        window_end,
        window_size,
        economies: panel.economies().to_vec(),
        x,
        sigmas,
        means,
    })
}

// ---------------------------------------------------------------------------
// Correlation matrix
// ---------------------------------------------------------------------------

/// Symmetric cross-correlation matrix with unit diagonal.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    entries: Array2<f64>,
}

impl CorrelationMatrix {
    /// Validating constructor: symmetry within 1e-12, unit diagonal within
    /// 1e-10, entries within `[-1, 1]` up to 1e-10.
    pub fn new(entries: Array2<f64>) -> Result<Self, PcaError> {
        let n = entries.nrows();
        if entries.ncols() != n || n == 0 {
            return Err(PcaError::InvalidCorrelation {
                detail: format!("shape {}x{}", entries.nrows(), entries.ncols()),
            });
        }
        for i in 0..n {
            if (entries[(i, i)] - 1.0).abs() > 1e-10 {
                return Err(PcaError::InvalidCorrelation {
                    detail: format!("diagonal entry {i} is {}", entries[(i, i)]),
                });
            }
            for j in 0..n {
                let c = entries[(i, j)];
                if (c - entries[(j, i)]).abs() > 1e-12 {
                    return Err(PcaError::InvalidCorrelation {
                        detail: format!("asymmetric at ({i},{j})"),
                    });
                }
                if !(-1.0 - 1e-10..=1.0 + 1e-10).contains(&c) {
                    return Err(PcaError::InvalidCorrelation {
                        detail: format!("entry ({i},{j}) = {c} outside [-1, 1]"),
                    });
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }
}

/// `C_ij = <x_i(s) x_j(s)>` over the window; exactly symmetric by mirroring
/// the computed upper triangle.
pub fn correlation_matrix(nw: &NormalizedWindow) -> CorrelationMatrix {
    let n = nw.x.nrows();
    let t = nw.window_size as f64;
    let mut entries = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for s in 0..nw.window_size {
                acc += nw.x[(i, s)] * nw.x[(j, s)];
            }
            let c = acc / t;
            entries[(i, j)] = c;
            entries[(j, i)] = c;
        }
    }
    CorrelationMatrix::new(entries)
        .expect("a normalized window always produces a valid correlation matrix")
}

// ---------------------------------------------------------------------------
// Leading eigenpair
// ---------------------------------------------------------------------------

/// Leading eigenvalue and eigenvector of a correlation matrix.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub eigenvalue: f64,
    /// Unit-norm eigenvector, sign-fixed so its components sum > 0.
    pub eigenvector: Array1<f64>,
    /// Power-iteration count.
    pub iterations: usize,
    /// `max_i |C u - lambda u|_i` at convergence.
    pub residual: f64,
    /// Gap between the two largest eigenvalues (infinite for 1x1 matrices).
    pub spectral_gap: f64,
}

impl EigenPair {
    /// True when the two largest eigenvalues are too close for the leading
    /// eigenvector to be well determined.
    pub fn is_degenerate(&self) -> bool {
        self.spectral_gap < DEGENERATE_GAP
    }

    /// Share of total variance carried by the leading component,
    /// `lambda1 / N`.
    pub fn explained_share(&self) -> f64 {
        self.eigenvalue / self.eigenvector.len() as f64
    }
}

/// Power iteration for the leading eigenpair, plus a full Jacobi solve for
/// the spectral-gap diagnostic.
///
/// Deterministic for a given matrix. The primary start vector is
/// `(1,...,1)/sqrt(N)`; when that start is (numerically) trapped in a
/// non-leading eigenspace — possible for mutually negatively correlated
/// inputs — the iteration is rerun once, seeded by the leading column of the
/// Jacobi diagnostic that is computed for the gap check anyway. Either way
/// the returned pair is certified against the full spectrum and its residual
/// bound.
pub fn leading_eigenpair(
    c: &CorrelationMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<EigenPair, PcaError> {
    let n = c.dim();
    if n == 1 {
        return Ok(EigenPair {
            eigenvalue: c.get(0, 0),
            eigenvector: Array1::from_elem(1, 1.0),
            iterations: 0,
            residual: 0.0,
            spectral_gap: f64::INFINITY,
        });
    }

    let (eigs, vecs) = linalg::jacobi_eigen(c.entries())?;
    let spectral_gap = eigs[0] - eigs[1];
    let slack = 1e-8 * eigs[0].abs().max(1.0);

    let primary = linalg::power_iteration(c.entries(), tol, max_iter);
    let (eigenvalue, mut eigenvector, iterations, residual) = match primary {
        Ok(result) if result.0 >= eigs[0] - slack => result,
        _ => {
            let seed = vecs.column(0).to_owned();
            let retried = linalg::power_iteration_from(c.entries(), seed, tol, max_iter)?;
            if retried.0 < eigs[0] - slack {
                return Err(PcaError::NotLeading {
                    got: retried.0,
                    leading: eigs[0],
                });
            }
            retried
        }
    };

    // Sign convention: sum of components > 0. An exactly zero sum cannot be
    // fixed either way and surfaces later as DegenerateWeights.
    if eigenvector.sum() < 0.0 {
        eigenvector.mapv_inplace(|x| -x);
    }

    debug_assert!(
        eigenvalue >= -1e-8 && eigenvalue <= n as f64 + 1e-8,
        "leading eigenvalue {eigenvalue} outside [0, N]"
    );

    Ok(EigenPair {
        eigenvalue,
        eigenvector,
        iterations,
        residual,
        spectral_gap,
    })
}

/// Eigenportfolio aggregation: `GEPU(t) = u1 . EPU(t) / sum_i u1_i`.
///
/// Equivalent to a weighted average with weights `u1_i / sum u1` that sum to
/// one; individual weights may be negative.
pub fn eigenportfolio_index(
    eig: &EigenPair,
    epu_at_t: ArrayView1<'_, f64>,
) -> Result<f64, PcaError> {
    assert_eq!(eig.eigenvector.len(), epu_at_t.len());
    let weight_sum: f64 = eig.eigenvector.sum();
    if weight_sum.abs() < 1e-10 {
        return Err(PcaError::DegenerateWeights { weight_sum });
    }
    Ok(eig.eigenvector.dot(&epu_at_t) / weight_sum)
}

// ---------------------------------------------------------------------------
// Index series
// ---------------------------------------------------------------------------

/// How a GEPU series was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GepuMethod {
    Pca { window_size: usize },
    Gdp,
}

impl GepuMethod {
    pub fn label(&self) -> &'static str {
        match self {
            GepuMethod::Pca { .. } => "pca",
            GepuMethod::Gdp => "gdp",
        }
    }
}

/// A monthly index series over consecutive months, with the per-window
/// eigen diagnostics when PCA-built.
#[derive(Debug, Clone)]
pub struct GepuSeries {
    pub method: GepuMethod,
    pub economies: Vec<String>,
    start_month: Month,
    values: Vec<f64>,
    /// Per-month eigenpairs (PCA only; empty for GDP).
    pub eigen_history: Vec<EigenPair>,
    /// Per-month `lambda1 / N` (PCA only; empty for GDP).
    pub explained_share: Vec<f64>,
}

impl GepuSeries {
    /// Build a series directly from consecutive monthly values. Used for
    /// baseline-style series and tests; eigen diagnostics stay empty.
    pub fn from_monthly_values(method: GepuMethod, start_month: Month, values: Vec<f64>) -> Self {
        GepuSeries {
            method,
            economies: Vec::new(),
            start_month,
            values,
            eigen_history: Vec::new(),
            explained_share: Vec::new(),
        }
    }

    pub fn start_month(&self) -> Month {
        self.start_month
    }

    pub fn last_month(&self) -> Month {
        self.start_month.add_months(self.values.len() as i32 - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn months(&self) -> impl Iterator<Item = Month> + '_ {
        let start = self.start_month;
        (0..self.values.len()).map(move |k| start.add_months(k as i32))
    }

    pub fn value_at(&self, month: Month) -> Option<f64> {
        let offset = month.months_since(self.start_month);
        if offset < 0 || offset as usize >= self.values.len() {
            None
        } else {
            Some(self.values[offset as usize])
        }
    }

    /// Sub-series over `[first, last]` (intersected with the support).
    pub fn restrict(&self, first: Month, last: Month) -> GepuSeries {
        let lo = first.months_since(self.start_month).max(0) as usize;
        let hi_offset = last.months_since(self.start_month);
        let hi = if hi_offset < 0 {
            0
        } else {
            ((hi_offset + 1) as usize).min(self.values.len())
        };
        let (lo, hi) = (lo.min(self.values.len()), hi.max(lo.min(self.values.len())));
        GepuSeries {
            method: self.method,
            economies: self.economies.clone(),
            start_month: self.start_month.add_months(lo as i32),
            values: self.values[lo..hi].to_vec(),
            eigen_history: if self.eigen_history.is_empty() {
                Vec::new()
            } else {
                self.eigen_history[lo..hi].to_vec()
            },
            explained_share: if self.explained_share.is_empty() {
                Vec::new()
            } else {
                self.explained_share[lo..hi].to_vec()
            },
        }
    }

    /// Serialize at full precision. PCA series carry the explained share and
    /// eigenvector columns; GDP series are `month,gepu`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), std::io::Error> {
        let mut w = csv::Writer::from_writer(out);
        match self.method {
            GepuMethod::Pca { .. } => {
                let mut header = vec![
                    "month".to_string(),
                    "gepu".to_string(),
                    "lambda1_over_n".to_string(),
                ];
                header.extend(self.economies.iter().map(|e| format!("u_{e}")));
                w.write_record(&header)?;
                for (k, month) in self.months().enumerate() {
                    let mut record = vec![
                        month.to_string(),
                        numfmt::full(self.values[k]),
                        numfmt::full(self.explained_share[k]),
                    ];
                    record.extend(
                        self.eigen_history[k]
                            .eigenvector
                            .iter()
                            .map(|&u| numfmt::full(u)),
                    );
                    w.write_record(&record)?;
                }
            }
            GepuMethod::Gdp => {
                w.write_record(["month", "gepu"])?;
                for (k, month) in self.months().enumerate() {
                    w.write_record([month.to_string(), numfmt::full(self.values[k])])?;
                }
            }
        }
        w.flush()
    }
}

/// Rolling PCA index over every window of size `T` the panel can host.
///
/// Windows are independent and evaluated in parallel; the assembled series is
/// identical to a sequential evaluation. The first value lands on the `T`-th
/// panel month, giving `months - T + 1` observations.
pub fn compute_gepu_pca(panel: &EpuPanel, window_size: usize) -> Result<GepuSeries, PcaError> {
    if window_size < 2 || panel.n_months() < window_size {
        return Err(PcaError::InsufficientHistory {
            window_end: panel.last_month(),
            window_size,
        });
    }
    let start_idx = window_size - 1;
    let months: Vec<Month> = panel.months()[start_idx..].to_vec();

    let windows: Vec<Result<(f64, EigenPair), PcaError>> = (start_idx..panel.n_months())
        .into_par_iter()
        .map(|end_idx| {
            let window_end = panel.months()[end_idx];
            let nw = normalize_window(panel, window_end, window_size)?;
            let c = correlation_matrix(&nw);
            let eig = leading_eigenpair(&c, DEFAULT_EIGEN_TOL, DEFAULT_MAX_ITER)?;
            let gepu = eigenportfolio_index(&eig, panel.month_row(end_idx))?;
            Ok((gepu, eig))
        })
        .collect();

    let mut values = Vec::with_capacity(windows.len());
    let mut eigen_history = Vec::with_capacity(windows.len());
    let mut explained_share = Vec::with_capacity(windows.len());
    for (k, window) in windows.into_iter().enumerate() {
        match window {
            Ok((gepu, eig)) => {
                values.push(gepu);
                explained_share.push(eig.explained_share());
                eigen_history.push(eig);
            }
            Err(err) => {
                return Err(PcaError::AtWindow {
                    month: months[k],
                    source: Box::new(err),
                })
            }
        }
    }

    Ok(GepuSeries {
        method: GepuMethod::Pca { window_size },
        economies: panel.economies().to_vec(),
        start_month: months[0],
        values,
        eigen_history,
        explained_share,
    })
}

/// Options for the GDP-weighted baseline.
#[derive(Debug, Clone, Copy, Default)]
pub struct GdpIndexOptions {
    /// When set, each economy's series is divided by its sample standard
    /// deviation over this base period before weighting (unit-variance
    /// pre-normalization). Off by default: the baseline is a plain weighted
    /// average of published levels.
    pub unit_sd_base: Option<(Month, Month)>,
}

/// GDP-weighted baseline: `GEPU_GDP(t) = sum_i w_i(year(t)) EPU_i(t)`.
///
/// Each month uses its calendar year's weights. Weights are renormalized over
/// the economies actually present in the panel, so economies listed in the
/// GDP table but absent from the panel do not silently shrink the index.
pub fn compute_gepu_gdp(
    panel: &EpuPanel,
    weights: &GdpWeightTable,
) -> Result<GepuSeries, PcaError> {
    compute_gepu_gdp_with(panel, weights, GdpIndexOptions::default())
}

pub fn compute_gepu_gdp_with(
    panel: &EpuPanel,
    weights: &GdpWeightTable,
    options: GdpIndexOptions,
) -> Result<GepuSeries, PcaError> {
    let n = panel.n_economies();

    // Optional unit-variance pre-step over a fixed base period.
    let scale: Vec<f64> = match options.unit_sd_base {
        None => vec![1.0; n],
        Some((first, last)) => {
            let lo = panel
                .month_index(first)
                .ok_or(PcaError::InsufficientHistory {
                    window_end: first,
                    window_size: 0,
                })?;
            let hi = panel
                .month_index(last)
                .ok_or(PcaError::InsufficientHistory {
                    window_end: last,
                    window_size: 0,
                })?;
            let len = (hi + 1 - lo) as f64;
            (0..n)
                .map(|i| {
                    let slice: Vec<f64> = (lo..=hi).map(|r| panel.value(r, i)).collect();
                    let mean = slice.iter().sum::<f64>() / len;
                    let var = slice.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                        / (len - 1.0).max(1.0);
                    let sd = var.sqrt();
                    if sd <= 0.0 {
                        Err(PcaError::ZeroVariance {
                            economy: panel.economies()[i].clone(),
                        })
                    } else {
                        Ok(1.0 / sd)
                    }
                })
                .collect::<Result<Vec<f64>, PcaError>>()?
        }
    };

    let mut values = Vec::with_capacity(panel.n_months());
    for (r, month) in panel.months().iter().enumerate() {
        let year = month.year();
        let year_weights = weights
            .year_weights(year)
            .ok_or(PcaError::MissingWeightYear { year })?;
        let mut total_weight = 0.0;
        let mut acc = 0.0;
        for (i, economy) in panel.economies().iter().enumerate() {
            let w = year_weights.get(economy).copied().unwrap_or(0.0);
            total_weight += w;
            acc += w * panel.value(r, i) * scale[i];
        }
        if total_weight <= 0.0 {
            return Err(PcaError::MissingWeightYear { year });
        }
        values.push(acc / total_weight);
    }

    Ok(GepuSeries {
        method: GepuMethod::Gdp,
        economies: panel.economies().to_vec(),
        start_month: panel.first_month(),
        values,
        eigen_history: Vec::new(),
        explained_share: Vec::new(),
    })
}
