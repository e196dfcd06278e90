//! Alternating Boolean matrix factorization `X ≈ A·B`.
//!
//! With `A` fixed, column `i` of `B` only affects column `i` of `A·B`, so
//! the `B` update splits into independent column problems. The `A` update
//! is the same routine applied to the transposed problem.

use std::time::Duration;

use log::debug;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bool_core::{BitMatrix, BitVector};
use crate::error::{Error, Result};
use crate::hubo::{build_column_hubo_capped, DEFAULT_EXPANSION_CAP};
use crate::seed;
use crate::solvers::{minimize_column, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Independent Bernoulli entries with the given density.
    RandomBernoulli(f64),
    /// Distinct nonzero columns of `X` in random order, padded with random
    /// columns.
    ColumnSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmfConfig {
    pub rank: usize,
    pub max_iters: usize,
    pub solver: SolverConfig,
    pub init: Init,
    pub seed: u64,
    /// Stop after this many iterations without a new best distance.
    pub stall_patience: usize,
    pub expansion_cap: usize,
}

impl Default for BmfConfig {
    fn default() -> Self {
        Self {
            rank: 2,
            max_iters: 30,
            solver: SolverConfig::default(),
            init: Init::ColumnSample,
            seed: 0,
            stall_patience: 3,
            expansion_cap: DEFAULT_EXPANSION_CAP,
        }
    }
}

impl BmfConfig {
    pub fn with_rank(rank: usize, solver: SolverConfig) -> Self {
        Self {
            rank,
            solver,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::invalid("factorization rank must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if let Init::RandomBernoulli(p) = self.init {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("init density {p} outside [0, 1]")));
            }
        }
        self.solver.validate()
    }
}

/// Totals over the column solves of one or more factor updates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveStats {
    pub solves: usize,
    pub reads: usize,
    pub solver_time: Duration,
}

impl SolveStats {
    pub fn merge(&mut self, other: SolveStats) {
        self.solves += other.solves;
        self.reads += other.reads;
        self.solver_time += other.solver_time;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BmfResult {
    pub a: BitMatrix,
    pub b: BitMatrix,
    pub distance: usize,
    pub iters: usize,
    pub solver_time_total: Duration,
    pub reads_total: usize,
    /// Distance after each full iteration (raw iterates, not best-so-far).
    pub history: Vec<usize>,
}

/// Recomputes `B` column by column for fixed `A`.
pub fn update_factor(x: &BitMatrix, a: &BitMatrix, cfg: &BmfConfig) -> Result<BitMatrix> {
    update_factor_tagged(x, a, cfg, &[0, 0]).map(|(b, _)| b)
}

/// [`update_factor`] with an explicit seed tag; column `i` is solved with
/// seed `derive(cfg.seed, tag ++ [i])`, so scheduling does not matter.
pub fn update_factor_tagged(
    x: &BitMatrix,
    a: &BitMatrix,
    cfg: &BmfConfig,
    tag: &[u64],
) -> Result<(BitMatrix, SolveStats)> {
    if a.rows() != x.rows() {
        return Err(Error::shape(format!(
            "factor has {} rows, data has {}",
            a.rows(),
            x.rows()
        )));
    }
    let reports = (0..x.cols())
        .into_par_iter()
        .map(|i| {
            let col = x.column(i);
            let p = build_column_hubo_capped(a, &col, cfg.expansion_cap)?;
            let mut tags = tag.to_vec();
            tags.push(i as u64);
            let solver = SolverConfig {
                seed: seed::derive(cfg.seed, &tags),
                ..cfg.solver.clone()
            };
            minimize_column(&p, &solver)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut stats = SolveStats::default();
    let columns: Vec<BitVector> = reports
        .into_iter()
        .map(|r| {
            stats.merge(SolveStats {
                solves: 1,
                reads: r.reads_used,
                solver_time: r.wall_time,
            });
            r.best
        })
        .collect();
    Ok((BitMatrix::from_columns(a.cols(), &columns)?, stats))
}

fn initial_factor(x: &BitMatrix, cfg: &BmfConfig) -> BitMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, &[u64::MAX]));
    match cfg.init {
        Init::RandomBernoulli(p) => {
            BitMatrix::from_fn(x.rows(), cfg.rank, |_, _| rng.random_bool(p))
        }
        Init::ColumnSample => {
            let mut distinct: Vec<BitVector> = Vec::new();
            for j in 0..x.cols() {
                let c = x.column(j);
                if !c.all_zeros() && !distinct.contains(&c) {
                    distinct.push(c);
                }
            }
            distinct.shuffle(&mut rng);
            let mut a = BitMatrix::zeros(x.rows(), cfg.rank);
            for k in 0..cfg.rank {
                match distinct.get(k) {
                    Some(col) => a.set_column(k, col),
                    None => {
                        for i in 0..x.rows() {
                            a.set(i, k, rng.random_bool(0.5));
                        }
                    }
                }
            }
            a
        }
    }
}

/// Alternates `B <- argmin d(X, A·B)` and `A <- argmin d(X, A·B)` until the
/// distance reaches zero, stalls for `stall_patience` iterations, or
/// `max_iters` is hit. Returns the best pair seen.
pub fn factorize(x: &BitMatrix, cfg: &BmfConfig) -> Result<BmfResult> {
    cfg.validate()?;
    let mut a = initial_factor(x, cfg);
    let mut best: Option<(BitMatrix, BitMatrix, usize)> = None;
    let mut history = Vec::new();
    let mut stats = SolveStats::default();
    let mut stalled = 0;
    let xt = x.transpose();

    for iter in 0..cfg.max_iters {
        let (b, s) = update_factor_tagged(x, &a, cfg, &[iter as u64, 0])?;
        stats.merge(s);
        let (at, s) = update_factor_tagged(&xt, &b.transpose(), cfg, &[iter as u64, 1])?;
        stats.merge(s);
        a = at.transpose();

        let distance = x.hamming(&a.matmul(&b)?)?;
        history.push(distance);
        debug!("bmf {}x{} rank {} iter {iter}: distance {distance}", x.rows(), x.cols(), cfg.rank);

        match &best {
            Some((_, _, d)) if distance >= *d => stalled += 1,
            _ => {
                best = Some((a.clone(), b, distance));
                stalled = 0;
            }
        }
        if distance == 0 || stalled >= cfg.stall_patience {
            break;
        }
    }

    let (a, b, distance) = best.expect("max_iters >= 1");
    Ok(BmfResult {
        a,
        b,
        distance,
        iters: history.len(),
        solver_time_total: stats.solver_time,
        reads_total: stats.reads,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_cfg(rank: usize) -> BmfConfig {
        BmfConfig::with_rank(rank, SolverConfig::exact())
    }

    #[test]
    fn identity_factor_reproduces_x() {
        let x = BitMatrix::from_rows(&[[1, 0, 1, 1], [0, 1, 1, 0], [1, 1, 0, 0]]);
        let b = update_factor(&x, &BitMatrix::identity(3), &exact_cfg(3)).unwrap();
        assert_eq!(b, x);
    }

    #[test]
    fn known_factorization_is_recovered_per_column() {
        let a = BitMatrix::from_rows(&[[1, 0], [1, 1], [0, 1], [1, 0]]);
        let b_star = BitMatrix::from_rows(&[[1, 0, 1, 0, 1], [0, 1, 1, 0, 0]]);
        let x = a.matmul(&b_star).unwrap();
        let b = update_factor(&x, &a, &exact_cfg(2)).unwrap();
        assert_eq!(x.hamming(&a.matmul(&b).unwrap()).unwrap(), 0);
    }

    #[test]
    fn zero_data_gives_zero_factor() {
        let x = BitMatrix::zeros(3, 4);
        let a = BitMatrix::from_rows(&[[1, 0], [0, 1], [1, 1]]);
        let b = update_factor(&x, &a, &exact_cfg(2)).unwrap();
        assert_eq!(b, BitMatrix::zeros(2, 4));
    }

    #[test]
    fn full_rank_column_sample_converges_immediately() {
        let x = BitMatrix::from_rows(&[[1, 0, 1, 1], [0, 1, 1, 0], [1, 1, 0, 0]]);
        let cfg = BmfConfig {
            init: Init::ColumnSample,
            ..exact_cfg(4)
        };
        let r = factorize(&x, &cfg).unwrap();
        assert_eq!(r.distance, 0);
        assert_eq!(r.iters, 1);
    }

    #[test]
    fn result_is_consistent() {
        let x = BitMatrix::from_fn(6, 5, |i, j| (i * 3 + j * 5) % 4 < 2);
        let r = factorize(&x, &exact_cfg(2)).unwrap();
        assert_eq!(r.distance, x.hamming(&r.a.matmul(&r.b).unwrap()).unwrap());
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.distance, *r.history.iter().min().unwrap());
    }

    #[test]
    fn config_validation() {
        assert!(factorize(&BitMatrix::zeros(2, 2), &exact_cfg(0)).is_err());
        let cfg = BmfConfig { max_iters: 0, ..exact_cfg(1) };
        assert!(cfg.validate().is_err());
        let cfg = BmfConfig { init: Init::RandomBernoulli(1.5), ..exact_cfg(1) };
        assert!(cfg.validate().is_err());
        let bad = update_factor(&BitMatrix::zeros(3, 2), &BitMatrix::zeros(2, 2), &exact_cfg(2));
        assert!(bad.is_err());
    }
}
