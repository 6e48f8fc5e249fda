//! TOML scenarios: parsing with field paths in errors, defaults, hashing.

use std::path::Path;

use lane_emden::greens::{Ball, DomainKind, DomainSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("cannot read scenario {0}: {1}")]
    Io(String, std::io::Error),
}

impl ConfigError {
    fn field(path: &str, message: impl Into<String>) -> Self {
        ConfigError::Field { path: path.into(), message: message.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsConfig {
    pub n: usize,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenConfig {
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default = "default_solver_tol")]
    pub tol: f64,
    #[serde(default = "default_table_nodes")]
    pub table_nodes: usize,
    #[serde(default = "default_table_reach")]
    pub table_reach: f64,
}

impl Default for GreenConfig {
    fn default() -> Self {
        GreenConfig { nx: default_nx(), tol: default_solver_tol(), table_nodes: default_table_nodes(), table_reach: default_table_reach() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceConfig {
    #[serde(default = "default_reduce_eps")]
    pub epsilons: Vec<f64>,
    #[serde(default = "one")]
    pub k: usize,
    /// Defaults to 0.1.
    pub delta1: Option<f64>,
    /// Defaults to 0.1 times the domain diameter.
    pub delta2: Option<f64>,
    /// Jittered copies of every lobe seed, drawn from `seed`.
    #[serde(default)]
    pub jitter_starts: usize,
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_xtol")]
    pub xtol: f64,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        ReduceConfig {
            epsilons: default_reduce_eps(),
            k: 1,
            delta1: None,
            delta2: None,
            jitter_starts: 0,
            jitter: default_jitter(),
            seed: 0,
            xtol: default_xtol(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    /// Explicit ε list; otherwise a geometric list from the fields below.
    pub epsilons: Option<Vec<f64>>,
    #[serde(default = "default_eps_start")]
    pub eps_start: f64,
    #[serde(default = "default_eps_ratio")]
    pub eps_ratio: f64,
    #[serde(default = "default_eps_count")]
    pub eps_count: usize,
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default = "default_newton_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            epsilons: None,
            eps_start: default_eps_start(),
            eps_ratio: default_eps_ratio(),
            eps_count: default_eps_count(),
            cells: default_cells(),
            tol: default_newton_tol(),
            max_iter: default_max_iter(),
        }
    }
}

impl SolveConfig {
    pub fn epsilon_list(&self) -> Vec<f64> {
        match &self.epsilons {
            Some(v) => v.clone(),
            None => (0..self.eps_count).map(|i| self.eps_start * self.eps_ratio.powi(i as i32)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub exponents: ExponentsConfig,
    /// Unit ball when absent.
    #[serde(default)]
    pub domain: Option<DomainKind>,
    #[serde(default)]
    pub green: GreenConfig,
    #[serde(default)]
    pub reduce: ReduceConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    /// Output directory, overridden by --out.
    #[serde(default)]
    pub output: Option<String>,
}

fn default_nx() -> usize {
    128
}
fn default_solver_tol() -> f64 {
    1e-10
}
fn default_table_nodes() -> usize {
    36
}
fn default_table_reach() -> f64 {
    0.8
}
fn default_reduce_eps() -> Vec<f64> {
    vec![1e-3, 1e-4, 1e-5]
}
fn one() -> usize {
    1
}
fn default_jitter() -> f64 {
    0.05
}
fn default_xtol() -> f64 {
    1e-8
}
fn default_eps_start() -> f64 {
    0.05
}
fn default_eps_ratio() -> f64 {
    0.75
}
fn default_eps_count() -> usize {
    30
}
fn default_cells() -> usize {
    4096
}
fn default_newton_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    400
}

/// Splits "missing field `p`" style messages so the path names the field.
fn located(path: String, message: String) -> ConfigError {
    let field = message
        .strip_prefix("missing field `")
        .and_then(|r| r.split('`').next())
        .map(str::to_owned);
    let path = match (field, path.as_str()) {
        (Some(f), "." | "") => f,
        (Some(f), p) => format!("{p}.{f}"),
        (None, p) => p.to_owned(),
    };
    let message = message.lines().next().unwrap_or_default().to_owned();
    ConfigError::Field { path, message }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, ConfigError> {
        let de = toml::Deserializer::new(text);
        let sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            located(path, e.into_inner().message().to_owned())
        })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Scenario, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.display().to_string(), e))?;
        Scenario::parse(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let e = &self.exponents;
        if !(e.p.is_finite() && e.p > 0.0) {
            return Err(ConfigError::field("exponents.p", "must be a positive number"));
        }
        let positive = |v: &[f64]| v.iter().all(|&x| x > 0.0 && x.is_finite());
        if !positive(&self.reduce.epsilons) {
            return Err(ConfigError::field("reduce.epsilons", "entries must be positive"));
        }
        if self.reduce.k == 0 {
            return Err(ConfigError::field("reduce.k", "must be at least 1"));
        }
        if let Some(d) = self.reduce.delta1 {
            if !(d > 0.0 && d < 1.0) {
                return Err(ConfigError::field("reduce.delta1", "must lie in (0, 1)"));
            }
        }
        if let Some(d) = self.reduce.delta2 {
            if !(d > 0.0) {
                return Err(ConfigError::field("reduce.delta2", "must be positive"));
            }
        }
        let s = &self.solve;
        if let Some(v) = &s.epsilons {
            if !positive(v) {
                return Err(ConfigError::field("solve.epsilons", "entries must be positive"));
            }
            if v.windows(2).any(|w| w[1] >= w[0]) {
                return Err(ConfigError::field("solve.epsilons", "must be strictly decreasing"));
            }
        }
        if !(s.eps_ratio > 0.0 && s.eps_ratio < 1.0) {
            return Err(ConfigError::field("solve.eps_ratio", "must lie in (0, 1)"));
        }
        if s.cells < 64 {
            return Err(ConfigError::field("solve.cells", "must be at least 64"));
        }
        if self.green.nx < 16 {
            return Err(ConfigError::field("green.nx", "must be at least 16"));
        }
        let d = self.domain_spec();
        d.validate().map_err(|err| ConfigError::field("domain", err.to_string()))
    }

    pub fn domain_spec(&self) -> DomainSpec {
        let kind = self.domain.clone().unwrap_or(DomainKind::Ball(Ball::new(0.0, 1.0)));
        DomainSpec { n: self.exponents.n, kind }
    }

    /// SHA-256 of the canonical JSON of the scenario with defaults filled in.
    /// The output directory is not part of the identity.
    pub fn hash(&self) -> String {
        let mut s = self.clone();
        s.output = None;
        digest(&s)
    }
}

/// Hex SHA-256 of a value's JSON serialization.
pub fn digest<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    hex::encode(Sha256::digest(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_p_names_the_field() {
        let err = Scenario::parse("[exponents]\nn = 6\n").unwrap_err();
        match err {
            ConfigError::Field { path, .. } => assert_eq!(path, "exponents.p"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn nested_type_errors_keep_their_path() {
        let err = Scenario::parse("[exponents]\nn = 6\np = 1.2\n[solve]\ncells = \"many\"\n").unwrap_err();
        assert!(err.to_string().starts_with("solve.cells"), "{err}");
    }

    #[test]
    fn defaults_fill_in_and_hash_is_stable() {
        let a = Scenario::parse("[exponents]\nn = 6\np = 1.2\n").unwrap();
        let b = Scenario::parse("output = \"x\"\n[exponents]\np = 1.2\nn = 6\n[green]\nnx = 128\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.solve.epsilon_list().len(), 30);
    }
}
