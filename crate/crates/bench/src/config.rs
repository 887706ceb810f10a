//! Experiment configuration: target and method specs, the key-value config
//! file format, and the merge with command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ars_core::{BuiltinTarget, Gamma, Gaussian, InitialRule, Method};

use crate::error::{BenchError, Result};

/// A built-in target with its parameters, e.g. `gaussian:0.5` or `gamma:2,2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetSpec {
    Gaussian { sigma2: f64 },
    Gamma { shape: f64, scale: f64 },
}

impl TargetSpec {
    pub fn build(&self) -> Result<BuiltinTarget> {
        Ok(match *self {
            TargetSpec::Gaussian { sigma2 } => Gaussian::new(sigma2)?.into(),
            TargetSpec::Gamma { shape, scale } => Gamma::new(shape, scale)?.into(),
        })
    }

    /// Initial-node rule used in the reference experiments for this target.
    pub fn default_rule(&self) -> InitialRule {
        match self {
            TargetSpec::Gaussian { .. } => InitialRule::UniformWindow { lo: -2.0, hi: 2.0 },
            TargetSpec::Gamma { .. } => InitialRule::FixedEndpoints { lo: 0.01, hi: 4.0 },
        }
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSpec::Gaussian { sigma2 } => write!(f, "gaussian:{sigma2}"),
            TargetSpec::Gamma { shape, scale } => write!(f, "gamma:{shape},{scale}"),
        }
    }
}

fn parse_floats(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| BenchError::Config(format!("bad number '{t}' in {what}")))
        })
        .collect()
}

impl FromStr for TargetSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p)),
            None => (s.trim(), None),
        };
        match (name.to_ascii_lowercase().as_str(), params) {
            ("gaussian", None) => Ok(TargetSpec::Gaussian { sigma2: 0.5 }),
            ("gaussian", Some(p)) => match parse_floats(p, "target")?.as_slice() {
                &[sigma2] => Ok(TargetSpec::Gaussian { sigma2 }),
                _ => Err(BenchError::Config(format!(
                    "gaussian takes one parameter: '{s}'"
                ))),
            },
            ("gamma", None) => Ok(TargetSpec::Gamma {
                shape: 2.0,
                scale: 2.0,
            }),
            ("gamma", Some(p)) => match parse_floats(p, "target")?.as_slice() {
                &[shape, scale] => Ok(TargetSpec::Gamma { shape, scale }),
                _ => Err(BenchError::Config(format!(
                    "gamma takes shape,scale: '{s}'"
                ))),
            },
            _ => Err(BenchError::Config(format!("unknown target '{s}'"))),
        }
    }
}

/// `uniform:lo,hi` or `fixed:lo,hi`.
pub fn parse_rule(s: &str) -> Result<InitialRule> {
    let (kind, params) = s
        .split_once(':')
        .ok_or_else(|| BenchError::Config(format!("initial rule needs kind:lo,hi, got '{s}'")))?;
    let &[lo, hi] = parse_floats(params, "initial rule")?.as_slice() else {
        return Err(BenchError::Config(format!(
            "initial rule needs two bounds: '{s}'"
        )));
    };
    match kind.trim().to_ascii_lowercase().as_str() {
        "uniform" => Ok(InitialRule::UniformWindow { lo, hi }),
        "fixed" => Ok(InitialRule::FixedEndpoints { lo, hi }),
        _ => Err(BenchError::Config(format!("unknown initial rule '{kind}'"))),
    }
}

pub fn format_rule(rule: &InitialRule) -> String {
    match rule {
        InitialRule::UniformWindow { lo, hi } => format!("uniform:{lo},{hi}"),
        InitialRule::FixedEndpoints { lo, hi } => format!("fixed:{lo},{hi}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodSel {
    Ars,
    Cars,
    Both,
}

impl MethodSel {
    pub fn methods(&self) -> Vec<Method> {
        match self {
            MethodSel::Ars => vec![Method::Ars],
            MethodSel::Cars => vec![Method::Cars],
            MethodSel::Both => vec![Method::Ars, Method::Cars],
        }
    }
}

impl FromStr for MethodSel {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ars" => Ok(MethodSel::Ars),
            "cars" => Ok(MethodSel::Cars),
            "both" => Ok(MethodSel::Both),
            _ => Err(BenchError::Config(format!("unknown method '{s}'"))),
        }
    }
}

/// Identifies one (method, N, node count) cell, written `ars:5000:3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellKey {
    pub method: Method,
    pub n_samples: usize,
    pub nodes: usize,
}

impl FromStr for CellKey {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let bad = || BenchError::Config(format!("baseline cell must be method:N:nodes, got '{s}'"));
        let [m, n, k] = parts.as_slice() else {
            return Err(bad());
        };
        Ok(CellKey {
            method: m.parse().map_err(|_| bad())?,
            n_samples: n.parse().map_err(|_| bad())?,
            nodes: k.parse().map_err(|_| bad())?,
        })
    }
}

pub fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    let items: Vec<T> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|_| BenchError::Config(format!("bad value '{t}' in {what}")))
        })
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(BenchError::Config(format!("{what} must not be empty")));
    }
    Ok(items)
}

/// A replicated ARS / CARS experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub target: TargetSpec,
    pub method: MethodSel,
    pub n_samples_list: Vec<usize>,
    pub node_counts: Vec<usize>,
    pub replicas: usize,
    /// Replica `k` is seeded with `seed + k`.
    pub seed: u64,
    pub initial_rule: InitialRule,
    /// Cell whose mean time normalizes the others; defaults to the first cell.
    pub baseline: Option<CellKey>,
    /// Worker threads for replica parallelism; `None` uses all cores.
    pub jobs: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let target = TargetSpec::Gaussian { sigma2: 0.5 };
        ExperimentConfig {
            target,
            method: MethodSel::Both,
            n_samples_list: vec![5000, 10_000, 50_000],
            node_counts: vec![3, 5, 10],
            replicas: 100,
            seed: 0,
            initial_rule: target.default_rule(),
            baseline: None,
            jobs: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples_list.is_empty() || self.node_counts.is_empty() {
            return Err(BenchError::Config(
                "N and node lists must be nonempty".into(),
            ));
        }
        if self.n_samples_list.contains(&0) {
            return Err(BenchError::Config("N must be positive".into()));
        }
        if self.node_counts.iter().any(|&m| m < 2) {
            return Err(BenchError::Config("node counts must be at least 2".into()));
        }
        if self.replicas == 0 {
            return Err(BenchError::Config("replicas must be at least 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(BenchError::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Parses the flat `key = value` config format. Blank lines and lines
/// starting with `#` are ignored; later keys override earlier ones.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| BenchError::Config(format!("line {}: expected key = value", i + 1)))?;
        out.insert(
            k.trim().to_ascii_lowercase().replace('_', "-"),
            v.trim().to_string(),
        );
    }
    Ok(out)
}

pub fn read_key_values(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_key_values(&text)
}

/// Recognized keys, shared with the command-line flag names.
pub const KNOWN_KEYS: &[&str] = &[
    "target",
    "method",
    "n",
    "nodes",
    "replicas",
    "seed",
    "out",
    "baseline-cell",
    "trace-at",
    "jobs",
    "init",
    "initial-nodes",
];

/// Applies `settings` on top of `base`. Keys that do not shape the
/// experiment grid (`out`, `trace-at`, `initial-nodes`) are ignored here.
pub fn apply_settings(
    base: &mut ExperimentConfig,
    settings: &BTreeMap<String, String>,
) -> Result<()> {
    let mut rule_set = false;
    for (k, v) in settings {
        match k.as_str() {
            "target" => base.target = v.parse()?,
            "method" => base.method = v.parse()?,
            "n" => base.n_samples_list = parse_list(v, "n")?,
            "nodes" => base.node_counts = parse_list(v, "nodes")?,
            "replicas" => {
                base.replicas = v
                    .parse()
                    .map_err(|_| BenchError::Config(format!("bad replicas '{v}'")))?
            }
            "seed" => {
                base.seed = v
                    .parse()
                    .map_err(|_| BenchError::Config(format!("bad seed '{v}'")))?
            }
            "baseline-cell" => base.baseline = Some(v.parse()?),
            "jobs" => {
                base.jobs = Some(
                    v.parse()
                        .map_err(|_| BenchError::Config(format!("bad jobs '{v}'")))?,
                )
            }
            "init" => {
                base.initial_rule = parse_rule(v)?;
                rule_set = true;
            }
            "out" | "trace-at" | "initial-nodes" => {}
            other => return Err(BenchError::Config(format!("unknown config key '{other}'"))),
        }
    }
    if settings.contains_key("target") && !rule_set {
        base.initial_rule = base.target.default_rule();
    }
    Ok(())
}
