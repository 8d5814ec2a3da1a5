//! Typed values accepted on the command line and in config files.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use fourier_debias::experiments::{BatchMode, NormalizerPolicy};
use fourier_debias::BaseFunction;

use crate::error::CliResult;
use crate::files;

/// `h1`, `h2`, `cos`, `sin`, `identity` or `grid:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseChoice {
    H1,
    H2,
    Cos,
    Sin,
    Identity,
    Grid(PathBuf),
}

impl BaseChoice {
    pub fn load(&self) -> CliResult<BaseFunction> {
        Ok(match self {
            Self::H1 => BaseFunction::Power { exponent: 2.75 },
            Self::H2 => BaseFunction::Power { exponent: 3.75 },
            Self::Cos => BaseFunction::Cosine,
            Self::Sin => BaseFunction::Sine,
            Self::Identity => BaseFunction::Linear,
            Self::Grid(p) => BaseFunction::sampled(&files::load_grid(p)?)?,
        })
    }

    /// Nominal smoothness used for reference lines.
    pub fn default_smoothness(&self) -> f64 {
        match self {
            Self::H1 => 2.75,
            Self::H2 => 3.75,
            _ => 2.0,
        }
    }
}

impl FromStr for BaseChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "h1" => Ok(Self::H1),
            "h2" => Ok(Self::H2),
            "cos" => Ok(Self::Cos),
            "sin" => Ok(Self::Sin),
            "identity" | "linear" => Ok(Self::Identity),
            other => match other.strip_prefix("grid:") {
                Some(p) if !p.is_empty() => Ok(Self::Grid(PathBuf::from(p))),
                _ => Err(format!(
                    "unknown base `{other}` (expected h1, h2, cos, sin, identity or grid:<path>)"
                )),
            },
        }
    }
}

impl fmt::Display for BaseChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::H1 => f.write_str("h1"),
            Self::H2 => f.write_str("h2"),
            Self::Cos => f.write_str("cos"),
            Self::Sin => f.write_str("sin"),
            Self::Identity => f.write_str("identity"),
            Self::Grid(p) => write!(f, "grid:{}", p.display()),
        }
    }
}

/// `full` or `sufficient`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchModeArg(pub BatchMode);

impl FromStr for BatchModeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "full" => Ok(Self(BatchMode::Full)),
            "sufficient" => Ok(Self(BatchMode::SufficientStatistics)),
            other => Err(format!(
                "unknown batch mode `{other}` (expected full or sufficient)"
            )),
        }
    }
}

impl fmt::Display for BatchModeArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            BatchMode::Full => "full",
            BatchMode::SufficientStatistics => "sufficient",
        })
    }
}

/// `pinned:<c>` or `mean`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizerArg(pub NormalizerPolicy);

impl FromStr for NormalizerArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "mean" {
            return Ok(Self(NormalizerPolicy::MeanUnderThetaLaw));
        }
        let c = s
            .strip_prefix("pinned:")
            .ok_or_else(|| format!("unknown normalizer `{s}` (expected pinned:<c> or mean)"))?;
        let c: f64 = c.parse().map_err(|e| format!("pinned value `{c}`: {e}"))?;
        if !(c > 0.0 && c.is_finite()) {
            return Err("pinned value must be positive".into());
        }
        Ok(Self(NormalizerPolicy::Pinned(c)))
    }
}

impl fmt::Display for NormalizerArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            NormalizerPolicy::Pinned(c) => write!(f, "pinned:{c}"),
            NormalizerPolicy::MeanUnderThetaLaw => f.write_str("mean"),
        }
    }
}

/// `hard` (index cutoff K) or `dyadic` (smooth cutoff at level N).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationArg {
    Hard,
    Dyadic,
}

impl FromStr for TruncationArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "hard" => Ok(Self::Hard),
            "dyadic" => Ok(Self::Dyadic),
            other => Err(format!(
                "unknown truncation `{other}` (expected hard or dyadic)"
            )),
        }
    }
}

impl fmt::Display for TruncationArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Hard => "hard",
            Self::Dyadic => "dyadic",
        })
    }
}

/// Estimator examined by `normal-check`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorArg {
    Tf,
    Plugin,
}

impl FromStr for EstimatorArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "tf" => Ok(Self::Tf),
            "plugin" => Ok(Self::Plugin),
            other => Err(format!(
                "unknown estimator `{other}` (expected tf or plugin)"
            )),
        }
    }
}

impl fmt::Display for EstimatorArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tf => "tf",
            Self::Plugin => "plugin",
        })
    }
}

/// A path setting; `Display` is needed for the manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathArg(pub PathBuf);

impl FromStr for PathArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().is_empty() {
            return Err("empty path".into());
        }
        Ok(Self(PathBuf::from(s.trim())))
    }
}

impl fmt::Display for PathArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.display())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for s in ["h1", "h2", "cos", "sin", "identity", "grid:/tmp/a b.txt"] {
            assert_eq!(s.parse::<BaseChoice>().unwrap().to_string(), s);
        }
        assert_eq!(
            "linear".parse::<BaseChoice>().unwrap(),
            BaseChoice::Identity
        );
        assert!("grid:".parse::<BaseChoice>().is_err());
        assert!("h3".parse::<BaseChoice>().is_err());
        for s in ["full", "sufficient"] {
            assert_eq!(s.parse::<BatchModeArg>().unwrap().to_string(), s);
        }
        for s in ["pinned:0.1", "mean"] {
            assert_eq!(s.parse::<NormalizerArg>().unwrap().to_string(), s);
        }
        assert!("pinned:-1".parse::<NormalizerArg>().is_err());
        assert_eq!(
            "dyadic".parse::<TruncationArg>().unwrap(),
            TruncationArg::Dyadic
        );
        assert_eq!(
            "plugin".parse::<EstimatorArg>().unwrap(),
            EstimatorArg::Plugin
        );
    }
}
