//! Run configuration: a TOML file plus command-line overrides, flags winning.

use std::path::PathBuf;

use gepu_core::metrics::ReturnKind;
use gepu_core::pipeline::{RunConfig, DEFAULT_WINDOW_SIZES};
use gepu_core::regress::SeMode;
use gepu_core::Month;
use serde::Deserialize;

use crate::CommonArgs;

/// On-disk config schema; every key optional so partial files compose with
/// flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub epu_path: Option<PathBuf>,
    pub prices_path: Option<PathBuf>,
    pub gdp_path: Option<PathBuf>,
    pub world_index_id: Option<String>,
    pub window_sizes: Option<Vec<usize>>,
    /// `["YYYY-MM", "YYYY-MM"]`, inclusive.
    pub month_range: Option<[String; 2]>,
    pub min_overlap: Option<usize>,
    /// `classical` or `hac`.
    pub se_mode: Option<String>,
    /// `simple` or `log`.
    pub return_mode: Option<String>,
    pub output_dir: Option<PathBuf>,
}

fn parse_month(label: &str, s: &str) -> Result<Month, String> {
    s.parse().map_err(|e| format!("{label}: {e}"))
}

fn parse_se_mode(s: &str) -> Result<SeMode, String> {
    match s {
        "classical" => Ok(SeMode::Classical),
        "hac" => Ok(SeMode::NeweyWest),
        other => Err(format!(
            "se_mode must be `classical` or `hac`, found `{other}`"
        )),
    }
}

fn parse_return_mode(s: &str) -> Result<ReturnKind, String> {
    match s {
        "simple" => Ok(ReturnKind::Simple),
        "log" => Ok(ReturnKind::Log),
        other => Err(format!(
            "return_mode must be `simple` or `log`, found `{other}`"
        )),
    }
}

/// Build the effective `RunConfig`: defaults, then the config file, then the
/// command-line flags.
pub fn resolve(args: &CommonArgs) -> Result<RunConfig, String> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))?
        }
        None => FileConfig::default(),
    };

    let mut config = RunConfig::new(
        args.epu.clone().or(file.epu_path).unwrap_or_default(),
        args.prices.clone().or(file.prices_path).unwrap_or_default(),
        args.gdp.clone().or(file.gdp_path).unwrap_or_default(),
        args.out
            .clone()
            .or(file.output_dir)
            .unwrap_or_else(|| PathBuf::from("gepu_out")),
    );

    if let Some(id) = args.world_index.clone().or(file.world_index_id) {
        config.world_index_id = id;
    }
    config.window_sizes = args
        .window_sizes
        .clone()
        .or(file.window_sizes)
        .unwrap_or_else(|| DEFAULT_WINDOW_SIZES.to_vec());

    config.month_range = match (&args.months, &file.month_range) {
        (Some(flag), _) => {
            let (first, last) = flag
                .split_once(':')
                .ok_or_else(|| "--months expects FIRST:LAST (e.g. 2003-01:2018-12)".to_string())?;
            Some((
                parse_month("--months first", first.trim())?,
                parse_month("--months last", last.trim())?,
            ))
        }
        (None, Some([first, last])) => Some((
            parse_month("month_range first", first)?,
            parse_month("month_range last", last)?,
        )),
        (None, None) => None,
    };

    if let Some(v) = args.min_overlap.or(file.min_overlap) {
        config.min_overlap = v;
    }
    if let Some(s) = args.se_mode.as_deref().or(file.se_mode.as_deref()) {
        config.se_mode = parse_se_mode(s)?;
    }
    if let Some(s) = args.return_mode.as_deref().or(file.return_mode.as_deref()) {
        config.return_mode = parse_return_mode(s)?;
    }
    Ok(config)
}
