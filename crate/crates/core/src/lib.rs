//! Construction of a global economic-policy-uncertainty index from national
//! monthly panels, with the market-metric and regression tooling around it.
//!
//! The crate is organized along the pipeline:
//!
//! - [`ingest`] — load and validate the monthly EPU panel, daily market
//!   prices, and annual GDP weights from CSV.
//! - [`pca`] — rolling-window normalization, cross-correlation matrices,
//!   leading eigenpairs, and the eigenportfolio index plus its GDP-weighted
//!   baseline.
//! - [`metrics`] — monthly realized volatility and average pairwise
//!   correlation from daily returns.
//! - [`regress`] — the regression specifications relating the index to
//!   market behavior, correlation summaries, and moment-matching rescaling.
//! - [`pipeline`] — configuration, validation, and the end-to-end run that
//!   emits every table and series file.
//! - [`synthetic`] — seeded generators for tests, benchmarks, and demos.

pub mod calendar;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod pca;
pub mod pipeline;
pub mod regress;
pub mod synthetic;

pub(crate) mod numfmt;

pub use calendar::Month;
pub use ingest::{DailyPricePanel, EpuPanel, GdpWeightTable, IngestError};
pub use metrics::{MetricsError, MonthlySeries, ReturnPanel, SeriesKind};
pub use pca::{CorrelationMatrix, EigenPair, GepuMethod, GepuSeries, NormalizedWindow, PcaError};
pub use pipeline::{PipelineError, RunConfig, RunReport, StageSelection};
pub use regress::{AlignedSample, RegressError, RegressionResult, RegressionSpec, SeMode};
