//! Minimizers for column objectives.
//!
//! The exact backend enumerates the polynomial directly. Annealing backends
//! (local or remote) work on the quadratized model; either way the reported
//! energy is re-evaluated against the original polynomial.

mod config;
mod exact;
pub mod remote;
mod sa;
pub mod server;

use std::time::{Duration, Instant};

pub use config::{Backend, SolverConfig};
pub use exact::{solve_exact, EXACT_VAR_LIMIT};
pub use remote::solve_remote;
pub use sa::{sample_sa, solve_sa, Sample};
pub use server::{ServerConfig, SolverServer};

use crate::error::Result;
use log::debug;

use crate::hubo::{default_strength, hubo_to_qubo, is_sound_reduction, Assignment, HuboPoly};

/// Quadratized models up to this many variables are checked for soundness
/// before annealing.
pub const SOUNDNESS_CHECK_VARS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Best assignment of the original variables.
    pub best: Assignment,
    pub energy: f64,
    pub wall_time: Duration,
    pub reads_used: usize,
    pub backend: Backend,
}

/// Minimizes one column polynomial with the configured backend.
///
/// Annealing backends quadratize with [`default_strength`]. That strength
/// is not always large enough; when the reduced model is small enough to
/// check and turns out unsound, the polynomial is solved by enumeration
/// instead and the report says so.
pub fn minimize_column(p: &HuboPoly, cfg: &SolverConfig) -> Result<SolveReport> {
    let start = Instant::now();
    let mut report = match cfg.backend {
        Backend::Exact => solve_exact(p)?,
        Backend::Sa | Backend::Remote => {
            let q = hubo_to_qubo(p, default_strength(p))?;
            if is_sound_reduction(p, &q, SOUNDNESS_CHECK_VARS) == Some(false) {
                debug!("unsound quadratization with {} variables; enumerating", q.num_vars());
                solve_exact(p)?
            } else if cfg.backend == Backend::Sa {
                solve_sa(&q, cfg)?
            } else {
                solve_remote(&q, cfg)?
            }
        }
    };
    report.energy = p.eval(&report.best)?;
    report.wall_time = start.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sa_finds_small_optimum() {
        let p = HuboPoly::from_terms(2, [(vec![], 1.0), (vec![1], 1.0), (vec![0, 1], -1.0)]).unwrap();
        let cfg = SolverConfig::sa().with_reads(50);
        let r = minimize_column(&p, &cfg).unwrap();
        assert_eq!(r.energy, 1.0);
        assert_eq!(r.energy, p.eval(&r.best).unwrap());
        assert_eq!(r.backend, Backend::Sa);
    }

    #[test]
    fn exact_delegation() {
        let p = HuboPoly::from_terms(3, [(vec![0, 1, 2], -2.0), (vec![0], 1.0)]).unwrap();
        let r = minimize_column(&p, &SolverConfig::exact()).unwrap();
        assert_eq!(r.energy, -1.0);
        assert_eq!(r.best.to_u8(), vec![1, 1, 1]);
    }
}
