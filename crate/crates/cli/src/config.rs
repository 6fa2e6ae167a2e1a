//! Run configuration: a TOML document (or JSON) with the model parameters at
//! the top level and one optional section per command.

use std::path::Path;

use levyx_core::harness::HydroOptions;
use levyx_core::sim::SnapshotMode;
use levyx_core::testfn::Bump;
use levyx_core::{InitialProfile, ModelParams, StationaryMode};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("unknown key `{key}` in {section}{hint}")]
    UnknownKey {
        key: String,
        section: String,
        hint: String,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    pub fn detect(text: &str) -> Self {
        if text.trim_start().starts_with('{') {
            Format::Json
        } else {
            Format::Toml
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equation {
    /// `dirichlet` for `θ = 0`, `reaction-exact` for `θ < 0`.
    #[default]
    Auto,
    Dirichlet,
    /// Diffusive time rescaled by `1/κ̂`.
    Rescaled,
    /// Implicit Euler for the reaction equation.
    Reaction,
    /// Closed-form reaction solution evaluated on the time grid.
    ReactionExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    #[default]
    Stationary,
    Evolution,
    Energy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    #[serde(rename = "T")]
    pub t_end: f64,
    /// Snapshot times; empty means just `T`.
    pub observe: Vec<f64>,
    pub snapshots: SnapshotMode,
    pub bins: usize,
    pub reservoirs: bool,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            t_end: 0.1,
            observe: Vec::new(),
            snapshots: SnapshotMode::Auto,
            bins: 256,
            reservoirs: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeSection {
    #[serde(rename = "N_grid")]
    pub n_grid: usize,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub record_every: usize,
    /// Defaults to `kappa`.
    pub kappa_hat: Option<f64>,
    pub equation: Equation,
}

impl Default for PdeSection {
    fn default() -> Self {
        PdeSection {
            n_grid: 256,
            dt: 1e-3,
            t_end: 0.1,
            record_every: 1,
            kappa_hat: None,
            equation: Equation::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationarySection {
    #[serde(rename = "N_grid")]
    pub n_grid: usize,
    pub kappa_hat: Option<f64>,
    pub mode: StationaryMode,
}

impl Default for StationarySection {
    fn default() -> Self {
        StationarySection {
            n_grid: 256,
            kappa_hat: None,
            mode: StationaryMode::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HydroSection {
    pub checkpoints: Vec<f64>,
    pub bin_width: f64,
    pub tolerance: f64,
    pub pde_dt: f64,
}

impl Default for HydroSection {
    fn default() -> Self {
        let o = HydroOptions::default();
        HydroSection {
            checkpoints: vec![0.05, 0.1],
            bin_width: 1.0 / 64.0,
            tolerance: o.tolerance,
            pde_dt: o.pde_dt,
        }
    }
}

impl HydroSection {
    pub fn options(&self) -> HydroOptions {
        HydroOptions {
            tolerance: self.tolerance,
            pde_dt: self.pde_dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub kind: SweepKind,
    pub kappas: Vec<f64>,
    #[serde(rename = "N_grid")]
    pub n_grid: usize,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    /// Sub-intervals for the energy envelopes.
    pub subintervals: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            kind: SweepKind::Stationary,
            kappas: vec![1e-3, 1e-2, 1e-1, 10.0, 100.0, 1000.0],
            n_grid: 256,
            dt: 1e-3,
            t_end: 0.1,
            subintervals: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorSection {
    pub gammas: Vec<f64>,
    #[serde(rename = "Ns")]
    pub ns: Vec<usize>,
    pub a: f64,
    pub tol: f64,
    pub bumps: Vec<Bump>,
    /// Also write the regional matrix for the first `γ` and `N`.
    pub export: bool,
}

impl Default for OperatorSection {
    fn default() -> Self {
        OperatorSection {
            gammas: vec![1.2, 1.5, 1.8],
            ns: vec![128, 256, 512, 1024],
            a: 0.2,
            tol: 1e-8,
            bumps: vec![Bump::new(0.5, 0.3), Bump::new(0.45, 0.2)],
            export: false,
        }
    }
}

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub initial: InitialProfile,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub pde: PdeSection,
    #[serde(default)]
    pub stationary: StationarySection,
    #[serde(default)]
    pub hydro: HydroSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub operator: OperatorSection,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_replicas() -> usize {
    1
}

const TOP: &[&str] = &[
    "gamma",
    "alpha",
    "beta",
    "kappa",
    "theta",
    "N",
    "seed",
    "replicas",
    "initial",
    "simulate",
    "pde",
    "stationary",
    "hydro",
    "sweep",
    "operator",
];
const INITIAL: &[&str] = &[
    "kind",
    "value",
    "left",
    "right",
    "at",
    "mean",
    "amplitude",
    "modes",
];
const SIMULATE: &[&str] = &["T", "observe", "snapshots", "bins", "reservoirs"];
const PDE: &[&str] = &["N_grid", "dt", "T", "record_every", "kappa_hat", "equation"];
const STATIONARY: &[&str] = &["N_grid", "kappa_hat", "mode"];
const HYDRO: &[&str] = &["checkpoints", "bin_width", "tolerance", "pde_dt"];
const SWEEP: &[&str] = &["kind", "kappas", "N_grid", "dt", "T", "subintervals"];
const OPERATOR: &[&str] = &["gammas", "Ns", "a", "tol", "bumps", "export"];
const BUMP: &[&str] = &["center", "width"];

fn nearest<'a>(key: &str, valid: &[&'a str]) -> Option<&'a str> {
    valid
        .iter()
        .map(|v| {
            (
                strsim::jaro_winkler(&key.to_lowercase(), &v.to_lowercase()),
                *v,
            )
        })
        .filter(|(s, _)| *s > 0.7)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, v)| v)
}

fn check_keys(
    map: &serde_json::Map<String, Value>,
    valid: &[&str],
    section: &str,
) -> Result<(), ConfigError> {
    for key in map.keys() {
        if !valid.contains(&key.as_str()) {
            let hint = match nearest(key, valid) {
                Some(v) => format!("; did you mean `{v}`?"),
                None => format!("; valid keys: {}", valid.join(", ")),
            };
            return Err(ConfigError::UnknownKey {
                key: key.clone(),
                section: section.to_string(),
                hint,
            });
        }
    }
    Ok(())
}

fn check_all_keys(doc: &Value) -> Result<(), ConfigError> {
    let top = doc
        .as_object()
        .ok_or_else(|| ConfigError::Syntax("top level must be a table".into()))?;
    check_keys(top, TOP, "the top level")?;
    let sections: [(&str, &[&str]); 7] = [
        ("initial", INITIAL),
        ("simulate", SIMULATE),
        ("pde", PDE),
        ("stationary", STATIONARY),
        ("hydro", HYDRO),
        ("sweep", SWEEP),
        ("operator", OPERATOR),
    ];
    for (name, valid) in sections {
        match top.get(name) {
            None => {}
            Some(Value::Object(m)) => check_keys(m, valid, &format!("[{name}]"))?,
            Some(_) => return Err(ConfigError::Syntax(format!("`{name}` must be a section"))),
        }
    }
    if let Some(Value::Array(bumps)) = top.get("operator").and_then(|o| o.get("bumps")) {
        for b in bumps {
            if let Value::Object(m) = b {
                check_keys(m, BUMP, "[operator.bumps]")?;
            }
        }
    }
    Ok(())
}

fn invalid(e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid(e.to_string())
}

impl Config {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            gamma: self.gamma,
            alpha: self.alpha,
            beta: self.beta,
            kappa: self.kappa,
            theta: self.theta,
            n: self.n,
        }
    }

    /// Fills the defaults that depend on other fields.
    fn resolve(mut self) -> Self {
        self.pde.kappa_hat.get_or_insert(self.kappa);
        self.stationary.kappa_hat.get_or_insert(self.kappa);
        if self.simulate.observe.is_empty() {
            self.simulate.observe.push(self.simulate.t_end);
        }
        self
    }

    /// Range checks shared by every command; `θ > 0` is accepted here and
    /// rejected by the commands that need `θ <= 0`.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params().validate_ranges().map_err(invalid)?;
        self.initial.validate().map_err(invalid)?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("simulate.T", self.simulate.t_end)?;
        positive("pde.dt", self.pde.dt)?;
        positive("pde.T", self.pde.t_end)?;
        positive("sweep.dt", self.sweep.dt)?;
        positive("sweep.T", self.sweep.t_end)?;
        positive("hydro.tolerance", self.hydro.tolerance)?;
        positive("hydro.pde_dt", self.hydro.pde_dt)?;
        positive("operator.tol", self.operator.tol)?;
        for (name, k) in [
            ("pde.kappa_hat", self.pde.kappa_hat),
            ("stationary.kappa_hat", self.stationary.kappa_hat),
        ] {
            if let Some(k) = k {
                if !(k >= 0.0 && k.is_finite()) {
                    return Err(ConfigError::Invalid(format!(
                        "{name} must be >= 0, got {k}"
                    )));
                }
            }
        }
        for (name, n) in [
            ("pde.N_grid", self.pde.n_grid),
            ("stationary.N_grid", self.stationary.n_grid),
            ("sweep.N_grid", self.sweep.n_grid),
        ] {
            if n < 4 {
                return Err(ConfigError::Invalid(format!(
                    "{name} must be >= 4, got {n}"
                )));
            }
        }
        if self.pde.record_every == 0 {
            return Err(ConfigError::Invalid("pde.record_every must be >= 1".into()));
        }
        if self.simulate.bins == 0 {
            return Err(ConfigError::Invalid("simulate.bins must be >= 1".into()));
        }
        if self
            .simulate
            .observe
            .iter()
            .any(|t| !(*t >= 0.0 && *t <= self.simulate.t_end))
        {
            return Err(ConfigError::Invalid(
                "simulate.observe times must lie in [0, simulate.T]".into(),
            ));
        }
        if self.simulate.observe.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::Invalid(
                "simulate.observe must be strictly increasing".into(),
            ));
        }
        if self
            .sweep
            .kappas
            .iter()
            .any(|k| !(*k > 0.0 && k.is_finite()))
        {
            return Err(ConfigError::Invalid("sweep.kappas must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }
}

/// Parses and validates a config document, applying defaults.
pub fn parse_config_str(text: &str, format: Format) -> Result<Config, ConfigError> {
    let doc: Value = match format {
        Format::Json => {
            serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?
        }
        Format::Toml => toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?,
    };
    check_all_keys(&doc)?;
    let cfg: Config =
        serde_json::from_value(doc).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let cfg = cfg.resolve();
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a config file; `.json` files are parsed as JSON, anything else by content.
pub fn parse_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        Some("toml") => Format::Toml,
        _ => Format::detect(&text),
    };
    parse_config_str(&text, format)
}
