//! `key = value` configuration files. Keys are the long flag names; values
//! given on the command line take precedence.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Keys accepted in a configuration file.
pub const KEYS: &[&str] = &[
    "alpha",
    "beta",
    "pairs",
    "order",
    "orders",
    "flux",
    "fluxes",
    "lambda-tilde",
    "penalty-law",
    "eta",
    "outer",
    "case",
    "gen-mesh",
    "mesh",
    "mesh-kind",
    "jitter",
    "seed",
    "levels",
    "output",
    "jobs",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Parsed configuration file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    values: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    /// Parses `key = value` lines; `#` starts a comment, blank lines are
    /// ignored, keys must be known and appear once.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or_else(|| ConfigError { line, message: format!("expected 'key = value', found '{body}'") })?;
            let key = k.trim().to_string();
            let value = v.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError { line, message: format!("unknown key '{key}'") });
            }
            if value.is_empty() {
                return Err(ConfigError { line, message: format!("empty value for '{key}'") });
            }
            if values.insert(key.clone(), (line, value)).is_some() {
                return Err(ConfigError { line, message: format!("duplicate key '{key}'") });
            }
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(_, v)| v.as_str())
    }

    /// The value of `key` parsed as `T`, if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|e| ConfigError { line: *line, message: format!("{key}: {e}") }),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Comma-separated list of `T`.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|e| format!("'{t}': {e}")))
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| if v.is_empty() { Err("empty list".to_string()) } else { Ok(v) })
}

/// `a:b,c:d` parameter pairs.
pub fn parse_pairs(s: &str) -> Result<Vec<(f64, f64)>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (a, b) = t.split_once(':').ok_or_else(|| format!("'{t}' is not alpha:beta"))?;
            let a = a.trim().parse::<f64>().map_err(|e| format!("'{a}': {e}"))?;
            let b = b.trim().parse::<f64>().map_err(|e| format!("'{b}': {e}"))?;
            Ok((a, b))
        })
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| if v.is_empty() { Err("empty pair list".to_string()) } else { Ok(v) })
}
