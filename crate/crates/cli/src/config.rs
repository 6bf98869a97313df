//! Run configuration: a single JSON file, every block optional.
//!
//! Precedence, lowest first: built-in defaults, the config file, a `--model`
//! preset (replaces the whole model block), individual command-line flags.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use parisian_core::{Jumps, Mixture, Model, Tolerances};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub numeric: NumericConfig,
    pub query: QueryConfig,
    pub sim: SimBlock,
    pub output: OutputConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valuation: Option<ValuationConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::preset("cl-default").unwrap(),
            numeric: NumericConfig::default(),
            query: QueryConfig::default(),
            sim: SimBlock::default(),
            output: OutputConfig::default(),
            valuation: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    CramerLundberg { premium: f64, rate: f64, alpha: f64 },
    Brownian { drift: f64, sigma: f64 },
    General { drift: f64, sigma: f64, jumps: JumpConfig },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case", deny_unknown_fields)]
pub enum JumpConfig {
    None,
    Exponential { rate: f64, alpha: f64 },
    Erlang { rate: f64, shape: u32, alpha: f64 },
    Deterministic { rate: f64, size: f64 },
}

pub const PRESETS: [&str; 2] = ["cl-default", "bm-default"];

impl ModelConfig {
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "cl-default" => Some(ModelConfig::CramerLundberg {
                premium: 1.5,
                rate: 1.0,
                alpha: 1.0,
            }),
            "bm-default" => Some(ModelConfig::Brownian { drift: 1.0, sigma: 1.0 }),
            _ => None,
        }
    }

    pub fn build(&self) -> parisian_core::Result<Model> {
        match *self {
            ModelConfig::CramerLundberg { premium, rate, alpha } => Model::cramer_lundberg(premium, rate, alpha),
            ModelConfig::Brownian { drift, sigma } => Model::brownian(drift, sigma),
            ModelConfig::General { drift, sigma, jumps } => {
                let jumps = match jumps {
                    JumpConfig::None => Jumps::None,
                    JumpConfig::Exponential { rate, alpha } => Jumps::Exponential { rate, alpha },
                    JumpConfig::Erlang { rate, shape, alpha } => Jumps::Erlang { rate, shape, alpha },
                    JumpConfig::Deterministic { rate, size } => Jumps::Deterministic { rate, size },
                };
                Model::new(drift, sigma, jumps)
            }
        }
    }
}

impl fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelConfig::CramerLundberg { premium, rate, alpha } => {
                write!(f, "cramer-lundberg(premium={premium},rate={rate},alpha={alpha})")
            }
            ModelConfig::Brownian { drift, sigma } => write!(f, "brownian(drift={drift},sigma={sigma})"),
            ModelConfig::General { drift, sigma, jumps } => {
                write!(f, "general(drift={drift},sigma={sigma},jumps=")?;
                match jumps {
                    JumpConfig::None => write!(f, "none)"),
                    JumpConfig::Exponential { rate, alpha } => write!(f, "exponential(rate={rate},alpha={alpha}))"),
                    JumpConfig::Erlang { rate, shape, alpha } => {
                        write!(f, "erlang(rate={rate},shape={shape},alpha={alpha}))")
                    }
                    JumpConfig::Deterministic { rate, size } => write!(f, "deterministic(rate={rate},size={size}))"),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericConfig {
    pub root_tol: f64,
    pub density_tol: f64,
    pub series_tol: f64,
    pub lambda_tol: f64,
    pub zmax: f64,
    pub talbot_nodes: usize,
    pub euler_a: f64,
    /// Diffusive simulation step; `r / 100` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl Default for NumericConfig {
    fn default() -> Self {
        let t = Tolerances::default();
        NumericConfig {
            root_tol: t.root,
            density_tol: t.density,
            series_tol: t.series,
            lambda_tol: t.lambda,
            zmax: t.zmax_cap,
            talbot_nodes: t.inversion.talbot_nodes,
            euler_a: t.inversion.euler_a,
            dt: None,
        }
    }
}

impl NumericConfig {
    pub fn tolerances(&self) -> Tolerances {
        let mut t = Tolerances {
            root: self.root_tol,
            density: self.density_tol,
            series: self.series_tol,
            lambda: self.lambda_tol,
            zmax_cap: self.zmax,
            ..Tolerances::default()
        };
        t.inversion.talbot_nodes = self.talbot_nodes;
        t.inversion.euler_a = self.euler_a;
        t
    }
}

/// A grid value that may be symbolic: `inf` for barriers, `phi` for the
/// exponent `Phi(q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Value(f64),
    Infinity,
    Phi,
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(Param::Infinity),
            "phi" => Ok(Param::Phi),
            t => t.parse::<f64>().map(Param::Value).map_err(|_| format!("not a number, `inf` or `phi`: {s}")),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Value(v) => write!(f, "{v}"),
            Param::Infinity => write!(f, "inf"),
            Param::Phi => write!(f, "phi"),
        }
    }
}

impl Serialize for Param {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Param::Value(v) => s.serialize_f64(*v),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Param {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Param::Value(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QueryConfig {
    pub x: Vec<f64>,
    pub b: Vec<Param>,
    pub q: Vec<f64>,
    pub lam: Vec<Param>,
    pub r: Vec<f64>,
    /// Density evaluation points.
    pub y: Vec<f64>,
}

impl Default for QueryConfig {
    fn default() -> Self {
        QueryConfig {
            x: vec![1.0],
            b: vec![Param::Infinity],
            q: vec![0.1],
            lam: vec![Param::Value(0.0)],
            r: vec![1.0],
            y: vec![0.5],
        }
    }
}

impl QueryConfig {
    /// Grid shared by the acceptance comparisons.
    pub fn standard() -> Self {
        QueryConfig {
            x: vec![0.5, 1.0, 2.0],
            b: vec![Param::Value(3.0), Param::Infinity],
            q: vec![0.0, 0.05, 0.1],
            lam: vec![Param::Value(0.0), Param::Value(0.5), Param::Phi],
            r: vec![0.5, 1.0, 2.0],
            y: vec![0.5, 1.5, 2.5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimBlock {
    pub n_paths: u64,
    pub seed: u64,
    pub horizon: f64,
}

impl Default for SimBlock {
    fn default() -> Self {
        SimBlock {
            n_paths: 100_000,
            seed: 42,
            horizon: 400.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

/// Payoffs as lists of `[weight, exponent]` pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValuationConfig {
    pub g: Vec<(f64, f64)>,
    pub f_below: Vec<(f64, f64)>,
    pub f_at_b: f64,
}

pub fn mixture(terms: &[(f64, f64)]) -> parisian_core::Result<Mixture> {
    if terms.is_empty() {
        Ok(Mixture::zero())
    } else {
        Mixture::new(terms.to_vec())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("bad config: {0}")]
    Parse(#[from] serde_json::Error),
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Canonical JSON with every default spelled out.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Normal form of a config text: parse, then print.
pub fn normalize(text: &str) -> Result<String, ConfigError> {
    Ok(RunConfig::parse(text)?.to_json())
}
