//! Flat `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment, lists are comma-separated.
//! Keys are the field names of the detector and experiment settings.

use std::fmt;

use discloc::detector::InitialPoints;
use discloc::harness::{ExperimentSpec, TestRegion};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn at(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError { line: Some(line), message: message.into() }
}

pub const KEYS: &[&str] = &[
    "model",
    "initial",
    "max_edges",
    "delta",
    "tol",
    "delta_t",
    "epsilon",
    "n_add",
    "itermax",
    "time_budget",
    "max_evals",
    "seed",
    "sigmas",
    "cs",
    "folds",
    "cv_every",
    "kkt_tol",
    "cv_max_iter",
    "jump_threshold",
    "orders",
    "n_test",
    "region",
    "n_runs",
    "targets",
    "threads",
];

/// Split `text` into `(line number, key, value)` triples.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| at(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(at(line, format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(at(line, format!("missing value for `{key}`")));
        }
        if let Some((prev, ..)) = out.iter().find(|(_, k, _)| k == key) {
            return Err(at(line, format!("`{key}` already set on line {prev}")));
        }
        out.push((line, key.to_string(), value.to_string()));
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| at(line, format!("`{key}`: cannot parse `{v}`")))
}

fn list<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>, ConfigError> {
    v.split(',').map(|s| num(line, key, s.trim())).collect()
}

/// `none`, `inf` or a number.
fn optional<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<Option<T>, ConfigError> {
    match v {
        "none" | "inf" => Ok(None),
        _ => num(line, key, v).map(Some),
    }
}

fn initial(line: usize, v: &str) -> Result<InitialPoints, ConfigError> {
    match v {
        "center" => Ok(InitialPoints::Center),
        "origin" => Ok(InitialPoints::Origin),
        _ => {
            if let Some(n) = v.strip_prefix("uniform:") {
                return Ok(InitialPoints::Uniform(num(line, "initial", n.trim())?));
            }
            if let Some(pts) = v.strip_prefix("points:") {
                let pts = pts.split(';').map(|p| list(line, "initial", p)).collect::<Result<Vec<Vec<f64>>, _>>()?;
                return Ok(InitialPoints::Points(pts));
            }
            Err(at(line, format!("`initial` must be center, origin, uniform:N or points:x,y;x,y, got `{v}`")))
        }
    }
}

fn region(line: usize, v: &str) -> Result<TestRegion, ConfigError> {
    if v == "box" {
        return Ok(TestRegion::Box);
    }
    match v.strip_prefix("near_surface:") {
        Some(b) => Ok(TestRegion::NearSurface(num(line, "region", b.trim())?)),
        None => Err(at(line, format!("`region` must be box or near_surface:BAND, got `{v}`"))),
    }
}

/// Build an experiment from config text, starting from the defaults.
pub fn from_text(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let mut spec = ExperimentSpec::default();
    let d = &mut spec.detector;
    for (line, key, v) in parse_pairs(text)? {
        let (l, k, v) = (line, key.as_str(), v.as_str());
        match k {
            "model" => spec.model = v.to_string(),
            "initial" => d.initial = initial(l, v)?,
            "max_edges" => d.max_edges = optional(l, k, v)?,
            "delta" => d.delta = num(l, k, v)?,
            "tol" => d.tol = num(l, k, v)?,
            "delta_t" => d.delta_t = num(l, k, v)?,
            "epsilon" => d.epsilon = num(l, k, v)?,
            "n_add" => d.n_add = num(l, k, v)?,
            "itermax" => d.itermax = num(l, k, v)?,
            "time_budget" => d.time_budget = optional(l, k, v)?,
            "max_evals" => d.max_evals = optional(l, k, v)?,
            "seed" => d.seed = num(l, k, v)?,
            "sigmas" => d.svm.sigmas = if v == "auto" { None } else { Some(list(l, k, v)?) },
            "cs" => d.svm.cs = if v == "auto" { None } else { Some(list(l, k, v)?) },
            "folds" => d.svm.folds = num(l, k, v)?,
            "cv_every" => d.svm.cv_every = num(l, k, v)?,
            "kkt_tol" => d.svm.kkt_tol = num(l, k, v)?,
            "cv_max_iter" => d.svm.cv_max_iter = num(l, k, v)?,
            "jump_threshold" => d.jump_threshold = if v == "auto" { None } else { Some(num(l, k, v)?) },
            "orders" => d.orders = list(l, k, v)?,
            "n_test" => spec.n_test = num(l, k, v)?,
            "region" => spec.region = region(l, v)?,
            "n_runs" => spec.n_runs = num(l, k, v)?,
            "targets" => spec.targets = if v == "none" { Vec::new() } else { list(l, k, v)? },
            "threads" => spec.threads = num(l, k, v)?,
            _ => unreachable!("parse_pairs only yields schema keys"),
        }
    }
    Ok(spec)
}
