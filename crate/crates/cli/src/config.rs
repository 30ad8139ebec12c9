//! Run configuration: a small key-value TOML file plus command-line
//! overrides, resolved into a validated [`RunSpec`].
//!
//! Documented keys (all optional unless noted):
//!
//! ```text
//! omega_m = 0.5          # required*: mechanical frequency / lambda1, > 0
//! g = 2.0                # required*: optomechanical coupling / lambda1
//! lambda2 = 1.0          # secondary atom-field coupling / lambda1
//! t = 0.8                # stage-1 handoff time (lambda1*t)
//! t_max = 20.0           # stage-1 grid end
//! grid_points = 2001     # points of the stage-1 and tau grids
//! tau_max = 20.0         # stage-2 grid end
//! format = "csv"         # csv | json
//! out = "trace.csv"      # output path (directory for sweep/figure)
//! sweep_parameter = "omega_m"   # omega_m | g | t
//! sweep_values = [0.5, 1.0, 1.5]
//!
//! [bare]                 # bare frequencies, used by `verify`
//! atomic = [5.5, 6.5, 0.0]
//! optical = [5.0, 6.0]
//! mechanical = [0.5, 0.5]
//!
//! [checks]               # verification toggles, all default true
//! effective = true
//! interaction_picture = true
//! s_matrix = true
//! symmetries = true
//! completeness = true
//! ```
//!
//! (*) required unless supplied via `--omega-m` / `--g`.
//!
//! Unknown keys are rejected with the offending name.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use omcrep_core::{BareFrequencies, ProtocolParameters, SweepParameter};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("config field `{field}`: {message}")]
    Field {
        field: &'static str,
        message: String,
    },
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    omega_m: Option<f64>,
    g: Option<f64>,
    lambda2: Option<f64>,
    t: Option<f64>,
    t_max: Option<f64>,
    grid_points: Option<usize>,
    tau_max: Option<f64>,
    format: Option<String>,
    out: Option<PathBuf>,
    sweep_parameter: Option<String>,
    sweep_values: Option<Vec<f64>>,
    bare: Option<BareSection>,
    checks: Option<CheckSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BareSection {
    atomic: [f64; 3],
    optical: [f64; 2],
    mechanical: [f64; 2],
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckSection {
    effective: Option<bool>,
    interaction_picture: Option<bool>,
    s_matrix: Option<bool>,
    symmetries: Option<bool>,
    completeness: Option<bool>,
}

/// Which verification checks `verify` runs.
#[derive(Debug, Clone, Copy)]
pub struct CheckToggles {
    pub effective: bool,
    pub interaction_picture: bool,
    pub s_matrix: bool,
    pub symmetries: bool,
    pub completeness: bool,
}

impl Default for CheckToggles {
    fn default() -> Self {
        Self {
            effective: true,
            interaction_picture: true,
            s_matrix: true,
            symmetries: true,
            completeness: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub omega_m: Option<f64>,
    pub g: Option<f64>,
    pub t: Option<f64>,
    pub grid_points: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

/// A fully resolved, validated run description with all defaults applied.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub params: ProtocolParameters,
    /// Bare frequencies for verification runs (not attached to `params`;
    /// stage propagation never needs them).
    pub bare: Option<BareFrequencies>,
    pub t: f64,
    pub t_max: f64,
    pub grid_points: usize,
    pub tau_max: f64,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub sweep: Option<(SweepParameter, Vec<f64>)>,
    pub checks: CheckToggles,
}

pub const DEFAULT_T: f64 = 0.8;
pub const DEFAULT_T_MAX: f64 = 20.0;
pub const DEFAULT_GRID_POINTS: usize = 2001;

fn field(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field,
        message: message.into(),
    }
}

fn parse_format(s: &str) -> Result<OutputFormat> {
    match s.to_ascii_lowercase().as_str() {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(field(
            "format",
            format!("expected csv or json, got `{other}`"),
        )),
    }
}

fn parse_sweep_parameter(s: &str) -> Result<SweepParameter> {
    match s.to_ascii_lowercase().replace('-', "_").as_str() {
        "omega_m" | "omegam" => Ok(SweepParameter::OmegaM),
        "g" => Ok(SweepParameter::G),
        "t" => Ok(SweepParameter::HandoffTime),
        other => Err(field(
            "sweep_parameter",
            format!("expected omega_m, g or t, got `{other}`"),
        )),
    }
}

/// Parse the config file (when given), apply overrides and defaults, and
/// validate everything.
pub fn resolve(config_path: Option<&Path>, overrides: &Overrides) -> Result<RunSpec> {
    resolve_inner(config_path, overrides, true)
}

/// Like [`resolve`], but `omega_m`/`g` may be absent (used by `figure`,
/// which carries its own embedded parameter sets).
pub fn resolve_without_params(
    config_path: Option<&Path>,
    overrides: &Overrides,
) -> Result<RunSpec> {
    resolve_inner(config_path, overrides, false)
}

fn resolve_inner(
    config_path: Option<&Path>,
    overrides: &Overrides,
    require_params: bool,
) -> Result<RunSpec> {
    let file: ConfigFile = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                path: path.to_path_buf(),
                source,
            })?;
            toml::from_str(&text).map_err(|e| ConfigError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?
        }
        None => ConfigFile::default(),
    };

    let omega_m = match (overrides.omega_m.or(file.omega_m), require_params) {
        (Some(v), _) => v,
        (None, false) => 1.0,
        (None, true) => return Err(field("omega_m", "required (config key or --omega-m)")),
    };
    if !omega_m.is_finite() || omega_m <= 0.0 {
        return Err(field("omega_m", format!("must be > 0, got {omega_m}")));
    }
    let g = match (overrides.g.or(file.g), require_params) {
        (Some(v), _) => v,
        (None, false) => 1.0,
        (None, true) => return Err(field("g", "required (config key or --g)")),
    };
    if !g.is_finite() {
        return Err(field("g", "must be finite"));
    }

    let mut params =
        ProtocolParameters::protocol(omega_m, g).map_err(|e| field("omega_m", e.to_string()))?;
    if let Some(lambda2) = file.lambda2 {
        if !lambda2.is_finite() {
            return Err(field("lambda2", "must be finite"));
        }
        params = params.with_lambda2(lambda2);
    }

    let bare = file.bare.map(|b| BareFrequencies {
        atomic: b.atomic,
        optical: b.optical,
        mechanical: b.mechanical,
    });

    let t = overrides.t.or(file.t).unwrap_or(DEFAULT_T);
    if !t.is_finite() || t < 0.0 {
        return Err(field("t", format!("must be >= 0, got {t}")));
    }
    let t_max = file.t_max.unwrap_or(DEFAULT_T_MAX);
    if !t_max.is_finite() || t_max <= 0.0 {
        return Err(field("t_max", format!("must be > 0, got {t_max}")));
    }
    let tau_max = file.tau_max.unwrap_or(DEFAULT_T_MAX);
    if !tau_max.is_finite() || tau_max <= 0.0 {
        return Err(field("tau_max", format!("must be > 0, got {tau_max}")));
    }
    let grid_points = overrides
        .grid_points
        .or(file.grid_points)
        .unwrap_or(DEFAULT_GRID_POINTS);
    if grid_points < 2 {
        return Err(field("grid_points", "need at least 2 points"));
    }

    let format = match (&overrides.format, &file.format) {
        (Some(f), _) => *f,
        (None, Some(s)) => parse_format(s)?,
        (None, None) => OutputFormat::Csv,
    };

    let sweep = match (file.sweep_parameter, file.sweep_values) {
        (Some(name), Some(values)) => {
            if values.is_empty() {
                return Err(field("sweep_values", "must not be empty"));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(field("sweep_values", "must be finite"));
            }
            Some((parse_sweep_parameter(&name)?, values))
        }
        (Some(_), None) => return Err(field("sweep_values", "required with sweep_parameter")),
        (None, Some(_)) => return Err(field("sweep_parameter", "required with sweep_values")),
        (None, None) => None,
    };

    let checks = match file.checks {
        Some(c) => CheckToggles {
            effective: c.effective.unwrap_or(true),
            interaction_picture: c.interaction_picture.unwrap_or(true),
            s_matrix: c.s_matrix.unwrap_or(true),
            symmetries: c.symmetries.unwrap_or(true),
            completeness: c.completeness.unwrap_or(true),
        },
        None => CheckToggles::default(),
    };

    Ok(RunSpec {
        params,
        bare,
        t,
        t_max,
        grid_points,
        tau_max,
        format,
        out: overrides.out.clone().or(file.out),
        sweep,
        checks,
    })
}
