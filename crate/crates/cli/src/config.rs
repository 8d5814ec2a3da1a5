//! Flat `key = value` configuration files and flag/file/default layering.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Every key any subcommand reads. Unknown keys in a file are rejected.
pub const KNOWN_KEYS: &[&str] = &[
    "adaptive",
    "adaptive-diff",
    "alphas",
    "base",
    "batch",
    "batch-mode",
    "beta",
    "cutoff-k",
    "d",
    "data-only",
    "estimator",
    "fixed-theta",
    "grid-m",
    "guard",
    "ks-threshold",
    "n",
    "normalizer",
    "out",
    "plot",
    "seed",
    "sigma",
    "smoothness",
    "theta",
    "theta-box",
    "trials",
    "truncation",
    "x",
    "x-file",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    path: Option<PathBuf>,
    entries: BTreeMap<String, (usize, String)>,
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, Some(path.to_path_buf()))
    }

    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str, path: Option<PathBuf>) -> CliResult<Self> {
        let shown = path.clone().unwrap_or_else(|| PathBuf::from("<config>"));
        let err = |line: usize, message: String| CliError::Parse {
            path: shown.clone(),
            line,
            message,
        };
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(err(i + 1, format!("expected `key = value`, got `{line}`")));
            };
            let key = normalize_key(k);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(err(i + 1, format!("unknown key `{key}`")));
            }
            if entries
                .insert(key.clone(), (i + 1, v.trim().to_string()))
                .is_some()
            {
                return Err(err(i + 1, format!("duplicate key `{key}`")));
            }
        }
        Ok(Self { path, entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn parse_value<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        let Some((line, v)) = self.entries.get(key) else {
            return Ok(None);
        };
        v.parse().map(Some).map_err(|e: T::Err| CliError::Parse {
            path: self
                .path
                .clone()
                .unwrap_or_else(|| PathBuf::from("<config>")),
            line: *line,
            message: format!("{key}: {e}"),
        })
    }
}

/// Resolves settings with precedence flag > file > default and records the
/// resolved value of every key it was asked about.
#[derive(Debug)]
pub struct Resolver<'a> {
    file: &'a ConfigFile,
    resolved: BTreeMap<String, String>,
}

impl<'a> Resolver<'a> {
    pub fn new(file: &'a ConfigFile) -> Self {
        Self {
            file,
            resolved: BTreeMap::new(),
        }
    }

    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> CliResult<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => v,
            None => self.file.parse_value(key)?.unwrap_or(default),
        };
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    /// A setting without a default; recorded as empty when absent.
    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> CliResult<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => self.file.parse_value(key)?,
        };
        self.resolved.insert(
            key.to_string(),
            v.as_ref().map(ToString::to_string).unwrap_or_default(),
        );
        Ok(v)
    }

    /// Boolean switches: a flag on the command line can only turn a setting on.
    pub fn switch(&mut self, key: &str, flag: bool) -> CliResult<bool> {
        self.value(key, flag.then_some(true), false)
    }

    pub fn into_resolved(self) -> BTreeMap<String, String> {
        self.resolved
    }
}

/// Comma-separated list of reals, e.g. `0.5,0.6,0.7`.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

impl FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Result<Vec<f64>, _> = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
            .collect();
        let parts = parts?;
        if parts.is_empty() {
            return Err("empty list".into());
        }
        if parts.iter().any(|v| !v.is_finite()) {
            return Err("list entries must be finite".into());
        }
        Ok(Self(parts))
    }
}

impl Display for FloatList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
