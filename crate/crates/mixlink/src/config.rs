//! Numeric defaults shared by every verdict and tracer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Grid points per real search dimension.
    pub grid: usize,
    /// Samples of the loop parameter `t ∈ [0, 2π]`.
    pub samples: usize,
    /// Residual tolerance for witnesses.
    pub tol: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config { grid: 256, samples: 1024, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid value {value:?} for {var}")]
pub struct ConfigError {
    pub var: String,
    pub value: String,
}

impl Config {
    /// Defaults overridden by `MXL_GRID`, `MXL_SAMPLES` and `MXL_TOL`.
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup<L: Fn(&str) -> Option<String>>(lookup: L) -> Result<Self, ConfigError> {
        let mut c = Config::default();
        let bad = |var: &str, value: String| ConfigError { var: var.to_string(), value };
        if let Some(v) = lookup("MXL_GRID") {
            c.grid = v.trim().parse().ok().filter(|&g: &usize| g >= 8).ok_or_else(|| bad("MXL_GRID", v))?;
        }
        if let Some(v) = lookup("MXL_SAMPLES") {
            c.samples = v.trim().parse().ok().filter(|&s: &usize| s >= 16).ok_or_else(|| bad("MXL_SAMPLES", v))?;
        }
        if let Some(v) = lookup("MXL_TOL") {
            c.tol = v.trim().parse().ok().filter(|&t: &f64| t > 0.0 && t < 1.0).ok_or_else(|| bad("MXL_TOL", v))?;
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_overrides() {
        let c = Config::from_lookup(|k| (k == "MXL_GRID").then(|| "64".to_string())).unwrap();
        assert_eq!(c, Config { grid: 64, ..Config::default() });
        assert!(Config::from_lookup(|k| (k == "MXL_TOL").then(|| "-1".to_string())).is_err());
        assert_eq!(Config::from_lookup(|_| None).unwrap(), Config::default());
    }
}
