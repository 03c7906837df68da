//! Experiment configuration: a flat `key = value` format or the equivalent
//! JSON object.
//!
//! ```text
//! # headline sweep
//! algo = nsgd
//! distribution = mean_estimation
//! n = 250, 500, 1000, 2000
//! d = 10
//! epsilon = 1
//! delta = 1e-6
//! trials = 50
//! seed = 7
//! out = nsgd.csv
//! ```
//!
//! The JSON form uses the same keys with typed values, e.g.
//! `{"algo": "nsgd", "n": [250, 500], "d": 10, "delta": 1e-6}`.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use dpsco::{AlgorithmSpec, DistributionKind, PrivacyBudget, ProxMode};
use serde::{Deserialize, Serialize};

/// A config problem, pointing at the offending line when there is one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: Option<usize>, message: impl Into<String>) -> Self {
        ConfigError { line, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Unvalidated settings; every field may still be overridden from the command line.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub algo: Option<String>,
    pub distribution: Option<String>,
    pub location_norm: Option<f64>,
    pub data_radius: Option<f64>,
    pub radius: Option<f64>,
    pub n: Option<Vec<usize>>,
    pub d: Option<usize>,
    #[serde(alias = "eps")]
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub noise_off: Option<bool>,
    pub prox_mode: Option<String>,
    pub objpert_tol: Option<f64>,
    pub sensitivity_audit: Option<bool>,
    pub record_runtime: Option<bool>,
    /// Line of each key in the source file; empty for JSON.
    #[serde(skip)]
    pub lines: HashMap<String, usize>,
}

const KEYS: &[&str] = &[
    "algo",
    "distribution",
    "location_norm",
    "data_radius",
    "radius",
    "n",
    "d",
    "epsilon",
    "delta",
    "trials",
    "seed",
    "out",
    "noise_off",
    "prox_mode",
    "objpert_tol",
    "sensitivity_audit",
    "record_runtime",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::at(Some(line), format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::at(Some(line), format!("invalid value `{value}` for `{key}`; expected true or false"))),
    }
}

impl RawConfig {
    /// Parses either format; text starting with `{` is JSON.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| ConfigError::at(Some(e.line()), format!("invalid JSON config: {e}")))
        } else {
            Self::parse_key_value(text)
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::at(None, format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn parse_key_value(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RawConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::at(Some(line), format!("expected `key = value`, found `{content}`")))?;
            let key = match key.trim() {
                "eps" => "epsilon",
                k => k,
            };
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::at(Some(line), format!("unknown key `{key}`")));
            }
            if let Some(first) = cfg.lines.insert(key.to_string(), line) {
                return Err(ConfigError::at(Some(line), format!("duplicate key `{key}` (first set on line {first})")));
            }
            match key {
                "algo" => cfg.algo = Some(value.to_string()),
                "distribution" => cfg.distribution = Some(value.to_string()),
                "location_norm" => cfg.location_norm = Some(parse_value(key, value, line)?),
                "data_radius" => cfg.data_radius = Some(parse_value(key, value, line)?),
                "radius" => cfg.radius = Some(parse_value(key, value, line)?),
                "n" => {
                    let list = value.trim_start_matches('[').trim_end_matches(']');
                    let ns = list
                        .split(',')
                        .map(|s| parse_value::<usize>(key, s.trim(), line))
                        .collect::<Result<Vec<_>, _>>()?;
                    cfg.n = Some(ns);
                }
                "d" => cfg.d = Some(parse_value(key, value, line)?),
                "epsilon" => cfg.epsilon = Some(parse_value(key, value, line)?),
                "delta" => cfg.delta = Some(parse_value(key, value, line)?),
                "trials" => cfg.trials = Some(parse_value(key, value, line)?),
                "seed" => cfg.seed = Some(parse_value(key, value, line)?),
                "out" => cfg.out = Some(PathBuf::from(value)),
                "noise_off" => cfg.noise_off = Some(parse_bool(key, value, line)?),
                "prox_mode" => cfg.prox_mode = Some(value.to_string()),
                "objpert_tol" => cfg.objpert_tol = Some(parse_value(key, value, line)?),
                "sensitivity_audit" => cfg.sensitivity_audit = Some(parse_bool(key, value, line)?),
                "record_runtime" => cfg.record_runtime = Some(parse_bool(key, value, line)?),
                _ => unreachable!("key list checked above"),
            }
        }
        Ok(cfg)
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.lines.get(key).copied()
    }

    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        let message = message.into();
        match self.line(key) {
            Some(line) => ConfigError::at(Some(line), message),
            None => ConfigError::at(None, format!("`{key}`: {message}")),
        }
    }

    /// Checks every field and fills in defaults.
    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        let algo_name = self.algo.as_deref().ok_or_else(|| self.err("algo", "missing required key `algo`"))?;
        let algorithm: AlgorithmSpec = algo_name.parse().map_err(|e| self.err("algo", format!("{e}")))?;
        let distribution = match &self.distribution {
            Some(name) => name.parse().map_err(|e| self.err("distribution", format!("{e}")))?,
            None => default_distribution(&algorithm),
        };
        let ns = self.n.clone().ok_or_else(|| self.err("n", "missing required key `n`"))?;
        if ns.is_empty() || ns.contains(&0) {
            return Err(self.err("n", "sample sizes must be positive"));
        }
        let d = self.d.unwrap_or(10);
        if d == 0 {
            return Err(self.err("d", "dimension must be positive"));
        }
        let trials = self.trials.unwrap_or(1);
        if trials == 0 {
            return Err(self.err("trials", "trials must be at least 1"));
        }
        let epsilon = self.epsilon.unwrap_or(1.0);
        let delta = self.delta.unwrap_or(1e-6);
        let budget = PrivacyBudget::new(epsilon, delta).map_err(|e| {
            let key = if epsilon > 0.0 && epsilon <= 1.0 { "delta" } else { "epsilon" };
            self.err(key, e.to_string())
        })?;
        for &n in &ns {
            budget.validate_for(n).map_err(|e| self.err("delta", e.to_string()))?;
        }
        let radius = self.radius.unwrap_or(1.0);
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(self.err("radius", "domain radius must be positive"));
        }
        let data_radius = self.data_radius.unwrap_or(radius);
        if !(data_radius > 0.0 && data_radius.is_finite()) {
            return Err(self.err("data_radius", "data radius must be positive"));
        }
        let location_norm = self.location_norm.unwrap_or(0.5);
        if !(location_norm >= 0.0 && location_norm.is_finite()) {
            return Err(self.err("location_norm", "location norm must be nonnegative"));
        }
        let prox_mode = match &self.prox_mode {
            Some(s) => s.parse().map_err(|e| self.err("prox_mode", format!("{e}")))?,
            None => ProxMode::default(),
        };
        if let Some(tol) = self.objpert_tol {
            if !(tol > 0.0) {
                return Err(self.err("objpert_tol", "tolerance must be positive"));
            }
        }
        Ok(ExperimentConfig {
            algorithm,
            distribution,
            location_norm,
            data_radius,
            radius,
            ns,
            d,
            budget,
            trials,
            seed: self.seed.unwrap_or(0),
            out: self.out.clone().unwrap_or_else(|| PathBuf::from("results.csv")),
            noise_off: self.noise_off.unwrap_or(false),
            prox_mode,
            objpert_tol: self.objpert_tol,
            sensitivity_audit: self.sensitivity_audit.unwrap_or(false),
            record_runtime: self.record_runtime.unwrap_or(true),
        })
    }
}

/// The benchmark each algorithm is designed for.
pub fn default_distribution(algorithm: &AlgorithmSpec) -> DistributionKind {
    match algorithm {
        AlgorithmSpec::Nsgd => DistributionKind::BallUniformMeanEstimation,
        AlgorithmSpec::ProxGd => DistributionKind::SpherePointsNormLoss,
        AlgorithmSpec::ObjPert | AlgorithmSpec::ObjPertApp => DistributionKind::LogisticPairs,
        AlgorithmSpec::ErmReduction(inner) => default_distribution(inner),
    }
}

/// A validated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: AlgorithmSpec,
    pub distribution: DistributionKind,
    /// `‖μ‖` (or `‖w*‖` for logistic data), placed along the first axis.
    pub location_norm: f64,
    pub data_radius: f64,
    /// Radius `M` of the feasible ball.
    pub radius: f64,
    pub ns: Vec<usize>,
    pub d: usize,
    pub budget: PrivacyBudget,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub noise_off: bool,
    pub prox_mode: ProxMode,
    pub objpert_tol: Option<f64>,
    pub sensitivity_audit: bool,
    /// When false the `runtime_ms` column is written as 0, making whole files
    /// reproducible.
    pub record_runtime: bool,
}
