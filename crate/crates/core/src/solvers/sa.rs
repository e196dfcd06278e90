use std::cmp::Ordering;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Backend, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::hubo::{Assignment, QuboModel};
use crate::seed;

/// One distinct final state of an annealing run.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub bits: Assignment,
    pub energy: f64,
    pub count: usize,
}

/// Compares assignments as binary numbers with entry 0 least significant.
pub(crate) fn binary_cmp(a: &Assignment, b: &Assignment) -> Ordering {
    let (wa, wb) = (a.words(), b.words());
    wa.len()
        .cmp(&wb.len())
        .then_with(|| wa.iter().rev().cmp(wb.iter().rev()))
}

fn sample_order(a: &Sample, b: &Sample) -> Ordering {
    a.energy
        .total_cmp(&b.energy)
        .then_with(|| binary_cmp(&a.bits, &b.bits))
}

/// Lowest energy, then lowest binary value.
pub(crate) fn select_best(samples: &[Sample]) -> Option<&Sample> {
    samples.iter().min_by(|a, b| sample_order(a, b))
}

fn schedule(sweeps: usize, (b0, b1): (f64, f64)) -> Vec<f64> {
    if sweeps == 1 {
        return vec![b1];
    }
    let ratio = (b1 / b0).ln();
    (0..sweeps)
        .map(|k| b0 * (ratio * k as f64 / (sweeps - 1) as f64).exp())
        .collect()
}

/// Runs `num_reads` independent single-flip Metropolis chains and returns
/// their final states, merged by identical bits and sorted by energy then
/// binary value. Read `k` draws from its own stream seeded by
/// `(cfg.seed, k)`, so output depends only on the model and config unless
/// a time limit cuts the run short.
pub fn sample_sa(q: &QuboModel, cfg: &SolverConfig) -> Result<(Vec<Sample>, usize)> {
    cfg.validate()?;
    let n = q.num_vars();
    let start = Instant::now();
    let betas = schedule(cfg.sweeps, cfg.beta_range);
    let adj = q.adjacency();
    let linear = q.linear();

    let mut finals: Vec<Assignment> = Vec::with_capacity(cfg.num_reads);
    let mut state = vec![false; n];
    let mut field = vec![0.0f64; n];
    for read in 0..cfg.num_reads {
        if let Some(limit) = cfg.time_limit {
            if read > 0 && start.elapsed() >= limit {
                break;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, &[read as u64]));
        for s in state.iter_mut() {
            *s = rng.random::<bool>();
        }
        for i in 0..n {
            field[i] = linear[i]
                + adj[i]
                    .iter()
                    .filter(|&&(j, _)| state[j])
                    .map(|&(_, c)| c)
                    .sum::<f64>();
        }
        for &beta in &betas {
            for i in 0..n {
                let delta = if state[i] { -field[i] } else { field[i] };
                let accept = delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp();
                if accept {
                    state[i] = !state[i];
                    let sign = if state[i] { 1.0 } else { -1.0 };
                    for &(j, c) in &adj[i] {
                        field[j] += sign * c;
                    }
                }
            }
        }
        finals.push(Assignment::from_bools(&state));
    }
    let reads_used = finals.len();

    finals.sort_by(binary_cmp);
    let mut samples: Vec<Sample> = Vec::new();
    for bits in finals {
        match samples.last_mut() {
            Some(last) if last.bits == bits => last.count += 1,
            _ => {
                let energy = q.eval(&bits)?;
                samples.push(Sample {
                    bits,
                    energy,
                    count: 1,
                });
            }
        }
    }
    samples.sort_by(sample_order);
    Ok((samples, reads_used))
}

/// Turns the best sample into a report over the original variables.
/// Auxiliaries are re-derived from the originals, so the reported energy
/// carries no penalty.
pub(crate) fn report_from_samples(
    q: &QuboModel,
    samples: &[Sample],
    reads_used: usize,
    backend: Backend,
    start: Instant,
) -> Result<SolveReport> {
    let best = select_best(samples).ok_or_else(|| Error::Protocol("no samples".into()))?;
    let original = q.project(&best.bits);
    let energy = q.eval(&q.complete(&original)?)?;
    Ok(SolveReport {
        best: original,
        energy,
        wall_time: start.elapsed(),
        reads_used,
        backend,
    })
}

/// Simulated annealing over a QUBO; the best final state across reads wins.
pub fn solve_sa(q: &QuboModel, cfg: &SolverConfig) -> Result<SolveReport> {
    let start = Instant::now();
    let (samples, reads_used) = sample_sa(q, cfg)?;
    report_from_samples(q, &samples, reads_used, Backend::Sa, start)
}
