//! Configuration resolution: per-experiment defaults, then the JSON file, then
//! `key=value` overrides.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use hbcd_core::harness::{Experiment, ExperimentConfig};
use serde_json::{Map, Value};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Offending key path, when known.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { key, .. } => Some(key),
            ConfigError::Io { .. } => None,
        }
    }
}

/// Parses radians written as a number or with a `pi` token: `pi/4`, `3pi/4`, `0.7*pi`, `-pi/2`.
pub fn parse_angle(text: &str) -> Option<f64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
    let (negative, t) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.as_str()),
    };
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a, Some(b)),
        None => (t, None),
    };
    let numerator = if let Some(coef) = num.strip_suffix("pi") {
        let coef = coef.strip_suffix('*').unwrap_or(coef);
        if coef.is_empty() {
            PI
        } else {
            coef.parse::<f64>().ok()? * PI
        }
    } else if let Some(coef) = num.strip_prefix("pi*") {
        coef.parse::<f64>().ok()? * PI
    } else {
        num.parse::<f64>().ok()?
    };
    let value = match den {
        Some(d) => numerator / d.parse::<f64>().ok()?,
        None => numerator,
    };
    value.is_finite().then_some(if negative { -value } else { value })
}

fn angle_value(text: &str) -> Option<Value> {
    if !text.to_ascii_lowercase().contains("pi") {
        return None;
    }
    parse_angle(text).and_then(serde_json::Number::from_f64).map(Value::Number)
}

/// Replaces `pi` expressions inside string values by numbers.
fn resolve_tokens(v: &mut Value) {
    match v {
        Value::String(s) => {
            if let Some(n) = angle_value(s) {
                *v = n;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(resolve_tokens),
        Value::Object(map) => map.values_mut().for_each(resolve_tokens),
        _ => {}
    }
}

/// Objects merge key by key; everything else is replaced.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn override_value(raw: &str, current: &Value) -> Value {
    let scalar = |s: &str| {
        serde_json::from_str::<Value>(s)
            .ok()
            .or_else(|| angle_value(s))
            .unwrap_or_else(|| Value::String(s.to_string()))
    };
    let mut v = match serde_json::from_str::<Value>(raw) {
        Ok(v) => v,
        Err(_) if current.is_array() => Value::Array(raw.split(',').map(|s| scalar(s.trim())).collect()),
        Err(_) => scalar(raw),
    };
    if current.is_array() && !v.is_array() {
        v = Value::Array(vec![v]);
    }
    resolve_tokens(&mut v);
    v
}

fn apply_override(root: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::invalid(assignment, "override must look like key=value"))?;
    let key = key.trim();
    let mut slot = root;
    for part in key.split('.') {
        slot = slot
            .as_object_mut()
            .and_then(|m| m.get_mut(part))
            .ok_or_else(|| ConfigError::invalid(key, "unknown key"))?;
    }
    *slot = override_value(raw.trim(), slot);
    Ok(())
}

fn read_file(path: &Path) -> Result<Value, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if text.trim().is_empty() {
        return Ok(Value::Object(Map::new()));
    }
    let mut v: Value = serde_json::from_str(&text)
        .map_err(|e| ConfigError::invalid("<root>", format!("malformed JSON: {e}")))?;
    if !v.is_object() {
        return Err(ConfigError::invalid("<root>", "config must be a JSON object"));
    }
    resolve_tokens(&mut v);
    Ok(v)
}

/// Resolved configuration for `experiment`.
///
/// Precedence, lowest first: experiment defaults, `env_seed`, the file at `path`,
/// then `overrides` in order. The `experiment` field always follows the argument.
pub fn parse_config(
    experiment: Experiment,
    path: Option<&Path>,
    overrides: &[String],
    env_seed: Option<u64>,
) -> Result<ExperimentConfig, ConfigError> {
    let mut defaults = ExperimentConfig::for_experiment(experiment);
    if let Some(seed) = env_seed {
        defaults.seed = seed;
    }
    let mut root = serde_json::to_value(&defaults).expect("config serializes");
    if let Some(p) = path {
        merge(&mut root, read_file(p)?);
    }
    for o in overrides {
        apply_override(&mut root, o)?;
    }
    root["experiment"] = serde_json::to_value(experiment).expect("enum serializes");

    let cfg: ExperimentConfig = serde_path_to_error::deserialize(root).map_err(|e| {
        let key = e.path().to_string();
        ConfigError::invalid(if key == "." { "<root>".into() } else { key }, e.inner().to_string())
    })?;
    cfg.validate().map_err(|e| {
        let msg = match e {
            hbcd_core::Error::InvalidInput(m) => m,
            other => other.to_string(),
        };
        match msg.split_once(": ") {
            Some((key, rest)) if !key.contains(' ') || key.contains(',') => ConfigError::invalid(key, rest),
            _ => ConfigError::invalid("<root>", msg),
        }
    })?;
    Ok(cfg)
}
