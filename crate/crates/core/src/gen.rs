//! Synthetic Boolean tensors with a known exact tree representation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bool_core::{BitMatrix, BitTensor, BitVector};
use crate::error::{Error, Result};
use crate::htn::{plan, reconstruct, EdgeRank, HtnNode, HtnTree, Plan};
use crate::seed;

pub const MAX_ATTEMPTS: usize = 1000;

/// Densities a generated problem draws from when none is given.
pub const DENSITY_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub order: usize,
    pub size: usize,
    pub rank: usize,
    /// Bernoulli density of every factor entry; drawn from [`DENSITY_GRID`]
    /// when absent.
    pub p: Option<f64>,
    pub noise_prob: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(order: usize, size: usize, rank: usize, seed: u64) -> Self {
        Self {
            order,
            size,
            rank,
            p: None,
            noise_prob: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 2 || self.size < 2 || self.rank < 1 {
            return Err(Error::invalid(format!(
                "need order >= 2, size >= 2, rank >= 1 (got {}, {}, {})",
                self.order, self.size, self.rank
            )));
        }
        if !(0.0..1.0).contains(&self.noise_prob) {
            return Err(Error::invalid(format!(
                "noise probability {} outside [0, 1)",
                self.noise_prob
            )));
        }
        if let Some(p) = self.p {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("density {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.size; self.order]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub tensor: BitTensor,
    pub ground_truth: HtnTree,
    /// Density actually used.
    pub p: f64,
    pub attempts: usize,
}

fn fill(plan: &Plan, shape: &[usize], p: f64, rng: &mut ChaCha8Rng, q: usize) -> HtnNode {
    match plan {
        Plan::Leaf { mode } => HtnNode::Leaf {
            leaf: BitMatrix::from_fn(shape[*mode], q, |_, _| rng.random_bool(p)),
        },
        Plan::Internal {
            r1, r2, left, right, ..
        } => {
            let n = q * r1 * r2;
            let bits: Vec<bool> = (0..n).map(|_| rng.random_bool(p)).collect();
            let core = BitTensor::from_bits(&[q, *r1, *r2], BitVector::from_bools(&bits))
                .expect("core size matches");
            let left = fill(left, shape, p, rng, *r1);
            let right = fill(right, shape, p, rng, *r2);
            HtnNode::Internal {
                core,
                left: Box::new(left),
                right: Box::new(right),
            }
        }
    }
}

/// Draws a random tree with the layout `decompose` would use for this
/// order, size and rank, and multiplies it out.
///
/// Draws that multiply out to a constant tensor are rejected and redrawn
/// with a fresh sub-seed (and, when `spec.p` is unset, a fresh density).
pub fn generate(spec: &GenSpec) -> Result<Generated> {
    spec.validate()?;
    let shape = spec.shape();
    let layout = plan(&shape, 0, shape.len(), 1, &|_, _| spec.rank);
    let mut ranks = Vec::new();
    layout.edge_ranks(&mut ranks);
    ranks.sort();

    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.seed, &[attempt as u64]));
        let p = match spec.p {
            Some(p) => p,
            None => DENSITY_GRID[rng.random_range(0..DENSITY_GRID.len())],
        };
        let root = fill(&layout, &shape, p, &mut rng, 1);
        let tree = HtnTree {
            shape: shape.clone(),
            ranks: ranks.clone(),
            root,
        };
        let tensor = reconstruct(&tree)?;
        if !tensor.is_constant() {
            return Ok(Generated {
                tensor,
                ground_truth: tree,
                p,
                attempts: attempt + 1,
            });
        }
    }
    Err(Error::Exhausted(MAX_ATTEMPTS))
}

/// Flips each entry independently with probability `prob`, redrawing when
/// the result is constant. `prob = 0` returns the input unchanged.
pub fn add_noise(t: &BitTensor, prob: f64, seed: u64) -> Result<BitTensor> {
    if !(0.0..1.0).contains(&prob) {
        return Err(Error::invalid(format!("noise probability {prob} outside [0, 1)")));
    }
    if prob == 0.0 {
        return Ok(t.clone());
    }
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &[attempt as u64]));
        let mut out = t.clone();
        for i in 0..out.len() {
            if rng.random_bool(prob) {
                out.set_linear(i, !out.get_linear(i));
            }
        }
        if !out.is_constant() {
            return Ok(out);
        }
    }
    Err(Error::Exhausted(MAX_ATTEMPTS))
}

/// Edge ranks of the generated layout, as recorded in the ground truth.
pub fn layout_ranks(spec: &GenSpec) -> Vec<EdgeRank> {
    let shape = spec.shape();
    let layout = plan(&shape, 0, shape.len(), 1, &|_, _| spec.rank);
    let mut ranks = Vec::new();
    layout.edge_ranks(&mut ranks);
    ranks.sort();
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_truth_reconstructs_exactly() {
        for seed in 0..10 {
            let g = generate(&GenSpec::new(4, 3, 2, seed)).unwrap();
            assert_eq!(reconstruct(&g.ground_truth).unwrap(), g.tensor);
            assert!(!g.tensor.is_constant());
            g.ground_truth.validate().unwrap();
            assert!(DENSITY_GRID.contains(&g.p));
        }
    }

    #[test]
    fn largest_tensor_size() {
        let g = generate(&GenSpec::new(8, 4, 4, 1)).unwrap();
        assert_eq!(g.tensor.len(), 65536);
    }

    #[test]
    fn dense_draws_are_resampled() {
        let spec = GenSpec {
            p: Some(0.9),
            ..GenSpec::new(4, 4, 4, 3)
        };
        match generate(&spec) {
            Ok(g) => assert!(!g.tensor.is_constant()),
            Err(Error::Exhausted(n)) => assert_eq!(n, MAX_ATTEMPTS),
            Err(e) => panic!("{e}"),
        }
        let always_zero = GenSpec {
            p: Some(0.0),
            ..GenSpec::new(2, 2, 1, 0)
        };
        assert!(matches!(generate(&always_zero), Err(Error::Exhausted(_))));
    }

    #[test]
    fn deterministic() {
        let spec = GenSpec::new(5, 3, 3, 11);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }

    #[test]
    fn noise_examples() {
        let g = generate(&GenSpec::new(4, 4, 2, 5)).unwrap();
        assert_eq!(add_noise(&g.tensor, 0.0, 1).unwrap(), g.tensor);
        let a = add_noise(&g.tensor, 0.1, 2).unwrap();
        assert_eq!(a, add_noise(&g.tensor, 0.1, 2).unwrap());
        assert!(add_noise(&g.tensor, 1.0, 2).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(GenSpec::new(1, 4, 2, 0).validate().is_err());
        assert!(GenSpec::new(2, 1, 2, 0).validate().is_err());
        assert!(GenSpec::new(2, 2, 0, 0).validate().is_err());
        let noisy = GenSpec { noise_prob: 1.0, ..GenSpec::new(2, 2, 1, 0) };
        assert!(noisy.validate().is_err());
    }
}
