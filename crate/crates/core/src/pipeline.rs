//! End-to-end orchestration: from the three input files to the emitted
//! index series, monthly metrics, summary tables, and overlay data.
//!
//! A full run emits, into the configured output directory:
//!
//! - `gepu_pca_T<T>.csv` per window size, and `gepu_gdp.csv`
//! - `volatility.csv` and `avg_correlation.csv`
//! - `table1.csv` (window bookkeeping and PCA/GDP correlations)
//! - `table2.csv` (the proxy x dependent x specification regression sweep)
//! - `fig3_volatility.csv` and `fig3_correlation.csv` (index rescaled onto
//!   each dependent for overlay plotting)
//! - `run_report.json` (config echo, stage timings, warnings, and a manifest
//!   with a SHA-256 checksum per data file)
//!
//! Identical inputs and config produce byte-identical data files; the report
//! is the only artifact containing run-varying content (timings).

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::calendar::Month;
use crate::ingest::{
    load_daily_prices, load_epu_panel, load_gdp_weights, restrict_months, DailyPricePanel,
    EpuPanel, GdpWeightTable, IngestError,
};
use crate::metrics::{
    avg_correlation_series, daily_returns_with, volatility_series, GapPolicy, MetricsError,
    MonthlySeries, ReturnKind,
};
use crate::numfmt;
use crate::pca::{compute_gepu_gdp, compute_gepu_pca, GepuSeries, PcaError};
use crate::regress::{
    pearson_correlation, rescale_to_match, run_table2, OlsOptions, RegressError, SeMode, Table2Cell,
};

/// Window sizes used when the config does not override them.
pub const DEFAULT_WINDOW_SIZES: [usize; 5] = [24, 30, 36, 42, 48];

/// Everything a run needs, resolved to concrete values.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub epu_path: PathBuf,
    pub prices_path: PathBuf,
    pub gdp_path: PathBuf,
    /// Column of the price file treated as the world index.
    pub world_index_id: String,
    pub window_sizes: Vec<usize>,
    /// Optional `[first, last]` restriction of the EPU panel.
    pub month_range: Option<(Month, Month)>,
    /// Minimum overlapping return dates for a pair to enter the monthly
    /// correlation average.
    pub min_overlap: usize,
    pub se_mode: SeMode,
    pub return_mode: ReturnKind,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn new(
        epu_path: impl Into<PathBuf>,
        prices_path: impl Into<PathBuf>,
        gdp_path: impl Into<PathBuf>,
        output_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            epu_path: epu_path.into(),
            prices_path: prices_path.into(),
            gdp_path: gdp_path.into(),
            world_index_id: "ACWI".to_string(),
            window_sizes: DEFAULT_WINDOW_SIZES.to_vec(),
            month_range: None,
            min_overlap: crate::metrics::DEFAULT_MIN_OVERLAP,
            se_mode: SeMode::Classical,
            return_mode: ReturnKind::Simple,
            output_dir: output_dir.into(),
        }
    }
}

/// Check every config constraint; an empty list means the config is valid.
/// Validation itself never fails.
pub fn validate_config(config: &RunConfig) -> Vec<String> {
    let mut violations = Vec::new();
    if config.window_sizes.is_empty() {
        violations.push("window_sizes must not be empty".to_string());
    }
    for &t in &config.window_sizes {
        if t < 2 {
            violations.push(format!("window_sizes entries must be >= 2 (found {t})"));
        }
    }
    if let Some((first, last)) = config.month_range {
        if last < first {
            violations.push(format!("month_range [{first}, {last}] is reversed"));
        }
    }
    if config.min_overlap < 2 {
        violations.push(format!(
            "min_overlap must be >= 2 (found {})",
            config.min_overlap
        ));
    }
    if config.world_index_id.is_empty() {
        violations.push("world_index_id must not be empty".to_string());
    }
    for (name, path) in [
        ("epu_path", &config.epu_path),
        ("prices_path", &config.prices_path),
        ("gdp_path", &config.gdp_path),
    ] {
        if !path.is_file() {
            violations.push(format!("{name} does not exist: {}", path.display()));
        }
    }
    violations
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Pipeline failure, classified for exit-code mapping and reported with the
/// module and operation that produced it.
#[derive(Debug)]
pub enum PipelineError {
    Config {
        violations: Vec<String>,
    },
    Data {
        module: &'static str,
        operation: &'static str,
        detail: String,
    },
    Numerical {
        module: &'static str,
        operation: &'static str,
        detail: String,
    },
}

impl PipelineError {
    /// Process exit code: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config { .. } => 2,
            PipelineError::Data { .. } => 3,
            PipelineError::Numerical { .. } => 4,
        }
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Config { violations } => {
                writeln!(f, "invalid configuration:")?;
                for v in violations {
                    writeln!(f, "  - {v}")?;
                }
                Ok(())
            }
            PipelineError::Data {
                module,
                operation,
                detail,
            } => write!(f, "data error in {module}/{operation}: {detail}"),
            PipelineError::Numerical {
                module,
                operation,
                detail,
            } => write!(f, "numerical error in {module}/{operation}: {detail}"),
        }
    }
}

impl std::error::Error for PipelineError {}

fn ingest_err(operation: &'static str, err: IngestError) -> PipelineError {
    PipelineError::Data {
        module: "ingest",
        operation,
        detail: err.to_string(),
    }
}

fn pca_err(operation: &'static str, err: PcaError) -> PipelineError {
    let module = "pca_index";
    match err {
        PcaError::MissingWeightYear { .. } => PipelineError::Data {
            module,
            operation,
            detail: err.to_string(),
        },
        other => PipelineError::Numerical {
            module,
            operation,
            detail: other.to_string(),
        },
    }
}

fn metrics_err(operation: &'static str, err: MetricsError) -> PipelineError {
    PipelineError::Data {
        module: "market_metrics",
        operation,
        detail: err.to_string(),
    }
}

fn regress_err(operation: &'static str, err: RegressError) -> PipelineError {
    let module = "econometrics";
    match err {
        RegressError::InsufficientOverlap { .. } => PipelineError::Data {
            module,
            operation,
            detail: err.to_string(),
        },
        other => PipelineError::Numerical {
            module,
            operation,
            detail: other.to_string(),
        },
    }
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub epu_path: String,
    pub prices_path: String,
    pub gdp_path: String,
    pub world_index_id: String,
    pub window_sizes: Vec<usize>,
    pub month_range: Option<String>,
    pub min_overlap: usize,
    pub se_mode: String,
    pub return_mode: String,
    pub output_dir: String,
}

impl ConfigEcho {
    fn from_config(config: &RunConfig) -> Self {
        Self {
            epu_path: config.epu_path.display().to_string(),
            prices_path: config.prices_path.display().to_string(),
            gdp_path: config.gdp_path.display().to_string(),
            world_index_id: config.world_index_id.clone(),
            window_sizes: config.window_sizes.clone(),
            month_range: config
                .month_range
                .map(|(first, last)| format!("{first}..{last}")),
            min_overlap: config.min_overlap,
            se_mode: config.se_mode.label().to_string(),
            return_mode: match config.return_mode {
                ReturnKind::Simple => "simple".to_string(),
                ReturnKind::Log => "log".to_string(),
            },
            output_dir: config.output_dir.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
}

/// Run summary: config echo, timings, warnings, and the emitted-file
/// manifest with content checksums.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub stage_timings: Vec<StageTiming>,
    pub warnings: Vec<String>,
    pub manifest: Vec<ManifestEntry>,
}

// ---------------------------------------------------------------------------
// Stage selection and the run driver
// ---------------------------------------------------------------------------

/// Which output groups to emit. Later stages recompute what they need from
/// the raw inputs, so any selection is self-contained and deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSelection {
    pub index: bool,
    pub metrics: bool,
    pub regress: bool,
}

impl StageSelection {
    pub fn all() -> Self {
        Self {
            index: true,
            metrics: true,
            regress: true,
        }
    }

    pub fn index_only() -> Self {
        Self {
            index: true,
            metrics: false,
            regress: false,
        }
    }

    pub fn metrics_only() -> Self {
        Self {
            index: false,
            metrics: true,
            regress: false,
        }
    }

    pub fn regress_only() -> Self {
        Self {
            index: false,
            metrics: false,
            regress: true,
        }
    }
}

struct Emitter {
    output_dir: PathBuf,
    manifest: Vec<ManifestEntry>,
}

impl Emitter {
    fn emit(&mut self, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.output_dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| PipelineError::Data {
            module: "cli_report",
            operation: "emit",
            detail: format!("cannot write {}: {e}", path.display()),
        })?;
        self.manifest.push(ManifestEntry {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }
}

/// Run the full pipeline (all stages).
pub fn run_pipeline(config: &RunConfig) -> Result<RunReport, PipelineError> {
    run_stages(config, StageSelection::all())
}

/// Run the pipeline, emitting only the selected output groups.
pub fn run_stages(config: &RunConfig, stages: StageSelection) -> Result<RunReport, PipelineError> {
    let violations = validate_config(config);
    if !violations.is_empty() {
        return Err(PipelineError::Config { violations });
    }
    std::fs::create_dir_all(&config.output_dir).map_err(|e| PipelineError::Data {
        module: "cli_report",
        operation: "emit",
        detail: format!("cannot create {}: {e}", config.output_dir.display()),
    })?;

    let mut timings = Vec::new();
    let mut warnings = Vec::new();
    let mut emitter = Emitter {
        output_dir: config.output_dir.clone(),
        manifest: Vec::new(),
    };

    // Load ------------------------------------------------------------------
    let t0 = Instant::now();
    let inputs = load_inputs(config)?;
    push_timing(&mut timings, "load", t0);

    // Index -----------------------------------------------------------------
    let need_index = stages.index || stages.regress;
    let mut pca_series: Vec<GepuSeries> = Vec::new();
    let mut gdp_series: Option<GepuSeries> = None;
    if need_index {
        let t0 = Instant::now();
        for &window_size in &config.window_sizes {
            let series = compute_gepu_pca(&inputs.epu, window_size)
                .map_err(|e| pca_err("compute_gepu_pca", e))?;
            for (month, eig) in series.months().zip(&series.eigen_history) {
                if eig.is_degenerate() {
                    warnings.push(format!(
                        "index: degenerate spectrum at {month} (T={window_size}, gap {:.3e})",
                        eig.spectral_gap
                    ));
                }
            }
            pca_series.push(series);
        }
        let gdp = compute_gepu_gdp(&inputs.epu, &inputs.gdp)
            .map_err(|e| pca_err("compute_gepu_gdp", e))?;
        gdp_series = Some(gdp);
        push_timing(&mut timings, "index", t0);

        if stages.index {
            let t0 = Instant::now();
            for series in &pca_series {
                let window_size = match series.method {
                    crate::pca::GepuMethod::Pca { window_size } => window_size,
                    crate::pca::GepuMethod::Gdp => unreachable!(),
                };
                let mut bytes = Vec::new();
                series.write_csv(&mut bytes).expect("writing to memory");
                emitter.emit(&format!("gepu_pca_T{window_size}.csv"), &bytes)?;
            }
            let mut bytes = Vec::new();
            gdp_series
                .as_ref()
                .expect("computed above")
                .write_csv(&mut bytes)
                .expect("writing to memory");
            emitter.emit("gepu_gdp.csv", &bytes)?;
            push_timing(&mut timings, "emit_index", t0);
        }
    }

    // Metrics ---------------------------------------------------------------
    let need_metrics = stages.metrics || stages.regress;
    let mut vol_series: Option<MonthlySeries> = None;
    let mut corr_series: Option<MonthlySeries> = None;
    if need_metrics {
        let t0 = Instant::now();
        let returns = daily_returns_with(&inputs.prices, config.return_mode, GapPolicy::Bridge);
        let (vol, vol_warnings) = volatility_series(&returns, &config.world_index_id)
            .map_err(|e| metrics_err("volatility_series", e))?;
        warnings.extend(vol_warnings);
        let (corr, corr_warnings) = avg_correlation_series(&returns, config.min_overlap);
        warnings.extend(corr_warnings);
        push_timing(&mut timings, "metrics", t0);

        if stages.metrics {
            let t0 = Instant::now();
            let mut bytes = Vec::new();
            vol.write_csv(&mut bytes).expect("writing to memory");
            emitter.emit("volatility.csv", &bytes)?;
            bytes = Vec::new();
            corr.write_csv(&mut bytes).expect("writing to memory");
            emitter.emit("avg_correlation.csv", &bytes)?;
            push_timing(&mut timings, "emit_metrics", t0);
        }
        vol_series = Some(vol);
        corr_series = Some(corr);
    }

    // Regressions, tables, and overlays --------------------------------------
    if stages.regress {
        let t0 = Instant::now();
        let gdp = gdp_series.as_ref().expect("index stage ran");
        let vol = vol_series.as_ref().expect("metrics stage ran");
        let corr = corr_series.as_ref().expect("metrics stage ran");

        let table1 = build_table1(&pca_series, gdp)?;
        emitter.emit("table1.csv", table1.as_bytes())?;

        let options = OlsOptions {
            se_mode: config.se_mode,
            standardize_gepu: false,
        };
        let cells = run_table2(&pca_series, gdp, vol, corr, &options)
            .map_err(|e| regress_err("run_table2", e))?;
        for cell in &cells {
            if cell.result.condition_warning {
                warnings.push(format!(
                    "regress: ill-conditioned design (panel {}, {}, T={}, {})",
                    cell.panel,
                    cell.proxy,
                    cell.window_size,
                    cell.result.spec.label()
                ));
            }
        }
        emitter.emit("table2.csv", render_table2(&cells).as_bytes())?;

        let overlay_index = &pca_series[0];
        let vol_overlay = build_overlay(overlay_index, vol)?;
        emitter.emit("fig3_volatility.csv", vol_overlay.as_bytes())?;
        let corr_overlay = build_overlay(overlay_index, corr)?;
        emitter.emit("fig3_correlation.csv", corr_overlay.as_bytes())?;
        push_timing(&mut timings, "regress", t0);
    }

    // Report ------------------------------------------------------------------
    let report = RunReport {
        config: ConfigEcho::from_config(config),
        stage_timings: timings,
        warnings,
        manifest: emitter.manifest,
    };
    let report_json = serde_json::to_vec_pretty(&report).expect("report serialization cannot fail");
    let report_path = config.output_dir.join("run_report.json");
    std::fs::write(&report_path, report_json).map_err(|e| PipelineError::Data {
        module: "cli_report",
        operation: "emit",
        detail: format!("cannot write {}: {e}", report_path.display()),
    })?;

    Ok(report)
}

struct Inputs {
    epu: EpuPanel,
    prices: DailyPricePanel,
    gdp: GdpWeightTable,
}

fn load_inputs(config: &RunConfig) -> Result<Inputs, PipelineError> {
    let mut epu =
        load_epu_panel(&config.epu_path, None).map_err(|e| ingest_err("load_epu_panel", e))?;
    if let Some((first, last)) = config.month_range {
        epu = restrict_months(&epu, first, last).map_err(|e| ingest_err("restrict_months", e))?;
    }
    let prices =
        load_daily_prices(&config.prices_path).map_err(|e| ingest_err("load_daily_prices", e))?;
    let gdp = load_gdp_weights(&config.gdp_path).map_err(|e| ingest_err("load_gdp_weights", e))?;
    Ok(Inputs { epu, prices, gdp })
}

fn push_timing(timings: &mut Vec<StageTiming>, stage: &str, start: Instant) {
    timings.push(StageTiming {
        stage: stage.to_string(),
        millis: start.elapsed().as_secs_f64() * 1e3,
    });
}

/// `T,t0,obs,correlation` rows, one per window size.
fn build_table1(pca_series: &[GepuSeries], gdp: &GepuSeries) -> Result<String, PipelineError> {
    let mut out = String::from("T,t0,obs,correlation\n");
    for series in pca_series {
        let window_size = match series.method {
            crate::pca::GepuMethod::Pca { window_size } => window_size,
            crate::pca::GepuMethod::Gdp => unreachable!(),
        };
        let paired: Vec<(f64, f64)> = series
            .months()
            .zip(series.values())
            .filter_map(|(month, &v)| gdp.value_at(month).map(|g| (v, g)))
            .collect();
        let (pca_values, gdp_values): (Vec<f64>, Vec<f64>) = paired.into_iter().unzip();
        if pca_values.len() < 2 {
            return Err(PipelineError::Data {
                module: "econometrics",
                operation: "pearson_correlation",
                detail: format!(
                    "T={window_size}: only {} months shared between PCA and GDP series",
                    pca_values.len()
                ),
            });
        }
        let correlation = pearson_correlation(&pca_values, &gdp_values)
            .map_err(|e| regress_err("pearson_correlation", e))?;
        out.push_str(&format!(
            "{},{},{},{}\n",
            window_size,
            series.start_month(),
            pca_values.len(),
            numfmt::sig6(correlation)
        ));
    }
    Ok(out)
}

/// `panel,proxy,T,spec,obs,beta1,t_beta1,beta2,t_beta2,r2` rows.
fn render_table2(cells: &[Table2Cell]) -> String {
    let mut out = String::from("panel,proxy,T,spec,obs,beta1,t_beta1,beta2,t_beta2,r2\n");
    for cell in cells {
        let beta2 = cell.result.beta2().map(numfmt::sig6).unwrap_or_default();
        let t_beta2 = cell.result.t_beta2().map(numfmt::sig6).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            cell.panel,
            cell.proxy,
            cell.window_size,
            cell.result.spec.label(),
            cell.result.n_obs,
            numfmt::sig6(cell.result.beta1()),
            numfmt::sig6(cell.result.t_beta1()),
            beta2,
            t_beta2,
            numfmt::sig6(cell.result.r_squared),
        ));
    }
    out
}

/// `month,value,gepu_scaled`: the dependent on the common months, alongside
/// the index affinely rescaled to the dependent's sample moments.
fn build_overlay(index: &GepuSeries, dep: &MonthlySeries) -> Result<String, PipelineError> {
    let mut months = Vec::new();
    let mut index_values = Vec::new();
    let mut dep_values = Vec::new();
    for (month, &v) in index.months().zip(index.values()) {
        if let Some(d) = dep.value_at(month) {
            months.push(month);
            index_values.push(v);
            dep_values.push(d);
        }
    }
    if months.len() < 2 {
        return Err(PipelineError::Data {
            module: "econometrics",
            operation: "rescale_to_match",
            detail: format!(
                "only {} months shared between the index and the {} series",
                months.len(),
                dep.kind.label()
            ),
        });
    }
    let rescaled = rescale_to_match(&index_values, &dep_values)
        .map_err(|e| regress_err("rescale_to_match", e))?;

    let mut out = String::from("month,value,gepu_scaled\n");
    for k in 0..months.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            months[k],
            numfmt::full(dep_values[k]),
            numfmt::full(rescaled[k])
        ));
    }
    Ok(out)
}

/// Load and validate all inputs, returning a human-readable summary without
/// emitting anything.
pub fn ingest_check(config: &RunConfig) -> Result<String, PipelineError> {
    let violations = validate_config(config);
    if !violations.is_empty() {
        return Err(PipelineError::Config { violations });
    }
    let inputs = load_inputs(config)?;
    let mut out = String::new();
    out.push_str(&format!(
        "epu panel: {} months ({}..{}), {} economies [{}]\n",
        inputs.epu.n_months(),
        inputs.epu.first_month(),
        inputs.epu.last_month(),
        inputs.epu.n_economies(),
        inputs.epu.economies().join(","),
    ));
    out.push_str(&format!(
        "daily prices: {} dates ({}..{}), {} series, {} absent cells\n",
        inputs.prices.dates().len(),
        inputs
            .prices
            .dates()
            .first()
            .map(|d| d.to_string())
            .unwrap_or_default(),
        inputs
            .prices
            .dates()
            .last()
            .map(|d| d.to_string())
            .unwrap_or_default(),
        inputs.prices.series().len(),
        inputs.prices.n_absent(),
    ));
    let years: Vec<String> = inputs.gdp.years().map(|y| y.to_string()).collect();
    out.push_str(&format!("gdp weights: years {}\n", years.join(",")));
    if inputs.prices.series_index(&config.world_index_id).is_none() {
        return Err(PipelineError::Data {
            module: "market_metrics",
            operation: "volatility_series",
            detail: format!(
                "world_index_id `{}` is not a column of the price file",
                config.world_index_id
            ),
        });
    }
    let panel_years: Vec<i32> = {
        let mut years: Vec<i32> = inputs.epu.months().iter().map(|m| m.year()).collect();
        years.dedup();
        years
    };
    let missing: Vec<String> = panel_years
        .iter()
        .filter(|y| !inputs.gdp.has_year(**y))
        .map(|y| y.to_string())
        .collect();
    if missing.is_empty() {
        out.push_str("gdp coverage: every panel year has weights\n");
    } else {
        out.push_str(&format!(
            "gdp coverage: MISSING years {}\n",
            missing.join(",")
        ));
    }
    Ok(out)
}
