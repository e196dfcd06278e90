use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Sa,
    Remote,
}

impl Backend {
    pub fn label(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Sa => "sa",
            Backend::Remote => "remote",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Backend::Exact),
            "sa" => Ok(Backend::Sa),
            "remote" => Ok(Backend::Remote),
            other => Err(Error::invalid(format!(
                "unknown backend {other:?} (expected exact, sa or remote)"
            ))),
        }
    }
}

/// Minimizer settings shared by all backends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub backend: Backend,
    /// Independent annealing runs per solve; the best sample wins.
    pub num_reads: usize,
    /// Metropolis sweeps per read.
    pub sweeps: usize,
    /// Initial and final inverse temperature of the geometric schedule.
    pub beta_range: (f64, f64),
    pub seed: u64,
    /// Stop starting new reads once this much time has passed. Makes the
    /// read count, and therefore the result, timing dependent.
    pub time_limit: Option<Duration>,
    pub remote_endpoint: Option<String>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Sa,
            num_reads: 100,
            sweeps: 1000,
            beta_range: (0.1, 10.0),
            seed: 0,
            time_limit: None,
            remote_endpoint: None,
        }
    }
}

impl SolverConfig {
    pub fn exact() -> Self {
        Self {
            backend: Backend::Exact,
            ..Self::default()
        }
    }

    pub fn sa() -> Self {
        Self::default()
    }

    pub fn remote(endpoint: impl Into<String>) -> Self {
        Self {
            backend: Backend::Remote,
            remote_endpoint: Some(endpoint.into()),
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_reads(mut self, num_reads: usize) -> Self {
        self.num_reads = num_reads;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_reads == 0 {
            return Err(Error::invalid("num_reads must be at least 1"));
        }
        if self.sweeps == 0 {
            return Err(Error::invalid("sweeps must be at least 1"));
        }
        let (b0, b1) = self.beta_range;
        if !(b0 > 0.0 && b0 < b1 && b1.is_finite()) {
            return Err(Error::invalid(format!(
                "beta range ({b0}, {b1}) must satisfy 0 < initial < final"
            )));
        }
        if self.backend == Backend::Remote && self.remote_endpoint.is_none() {
            return Err(Error::invalid("remote backend needs an endpoint"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = SolverConfig::default();
        assert_eq!(cfg.num_reads, 100);
        assert_eq!(cfg.sweeps, 1000);
        assert_eq!(cfg.beta_range, (0.1, 10.0));
        cfg.validate().unwrap();
    }

    #[test]
    fn invalid_configs() {
        let base = SolverConfig::default();
        for cfg in [
            SolverConfig { num_reads: 0, ..base.clone() },
            SolverConfig { sweeps: 0, ..base.clone() },
            SolverConfig { beta_range: (1.0, 1.0), ..base.clone() },
            SolverConfig { beta_range: (0.0, 1.0), ..base.clone() },
            SolverConfig { backend: Backend::Remote, ..base.clone() },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn backend_parsing() {
        assert_eq!("SA".parse::<Backend>().unwrap(), Backend::Sa);
        assert!("tabu".parse::<Backend>().is_err());
    }
}
