//! Recursive Boolean hierarchical Tucker decomposition.
//!
//! A tensor `T(n_1..n_s, q)` is unfolded at `k = ceil(s/2)` and factorized
//! as `M' · M''`. `M''` has its connecting mode `q` moved into the rows and
//! is factorized again into an order-3 core `(q, r1, r2)` and a right
//! factor. `M'` and the transposed right factor are treated as tensors
//! with the new rank as their connecting mode and decomposed the same way
//! until a single data mode remains, which becomes a leaf matrix.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::bmf::{factorize, BmfConfig, BmfResult};
use crate::bool_core::{matricize_split, move_q_to_rows, tensor_contract, BitMatrix, BitTensor};
use crate::error::{Error, Result};
use crate::seed;

/// A node of the decomposition tree. Serializes as `{"leaf": <matrix>}` or
/// `{"core": <tensor>, "left": …, "right": …}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HtnNode {
    Leaf {
        leaf: BitMatrix,
    },
    Internal {
        core: BitTensor,
        left: Box<HtnNode>,
        right: Box<HtnNode>,
    },
}

/// Rank of the edge above the subtree covering modes `modes[0]..modes[1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeRank {
    pub modes: [usize; 2],
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HtnTree {
    pub shape: Vec<usize>,
    pub ranks: Vec<EdgeRank>,
    pub root: HtnNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HtnConfig {
    /// Uniform edge rank.
    pub rank: usize,
    /// Per-edge overrides keyed by the child's mode range `(lo, hi)`.
    #[serde(default)]
    pub rank_overrides: BTreeMap<(usize, usize), usize>,
    /// Template for every factorization; rank and seed are set per split.
    pub bmf: BmfConfig,
    pub seed: u64,
}

impl HtnConfig {
    pub fn new(rank: usize, bmf: BmfConfig, seed: u64) -> Self {
        Self {
            rank,
            rank_overrides: BTreeMap::new(),
            bmf,
            seed,
        }
    }

    fn requested(&self, lo: usize, hi: usize) -> usize {
        self.rank_overrides.get(&(lo, hi)).copied().unwrap_or(self.rank)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 || self.rank_overrides.values().any(|&r| r == 0) {
            return Err(Error::invalid("edge ranks must be at least 1"));
        }
        self.bmf.solver.validate()
    }
}

/// Shape of a decomposition tree with clamped edge ranks.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Plan {
    Leaf {
        mode: usize,
    },
    Internal {
        lo: usize,
        mid: usize,
        hi: usize,
        q: usize,
        r1: usize,
        r2: usize,
        left: Box<Plan>,
        right: Box<Plan>,
    },
}

/// Builds the plan for modes `lo..hi` of `shape` with connecting rank `q`.
/// Each requested rank is clamped to the smaller side of the matrix it
/// factorizes.
pub(crate) fn plan(
    shape: &[usize],
    lo: usize,
    hi: usize,
    q: usize,
    requested: &dyn Fn(usize, usize) -> usize,
) -> Plan {
    if hi - lo == 1 {
        return Plan::Leaf { mode: lo };
    }
    let mid = lo + (hi - lo).div_ceil(2);
    let rows: usize = shape[lo..mid].iter().product();
    let right: usize = shape[mid..hi].iter().product();
    let want1 = requested(lo, mid);
    let r1 = want1.min(rows).min(right * q);
    let want2 = requested(mid, hi);
    let r2 = want2.min(q * r1).min(right);
    if r1 < want1 {
        warn!("rank {want1} for modes {lo}..{mid} clamped to {r1}");
    }
    if r2 < want2 {
        warn!("rank {want2} for modes {mid}..{hi} clamped to {r2}");
    }
    Plan::Internal {
        lo,
        mid,
        hi,
        q,
        r1,
        r2,
        left: Box::new(plan(shape, lo, mid, r1, requested)),
        right: Box::new(plan(shape, mid, hi, r2, requested)),
    }
}

impl Plan {
    pub(crate) fn for_shape(shape: &[usize], cfg: &HtnConfig) -> Result<Plan> {
        if shape.len() < 2 {
            return Err(Error::invalid(format!(
                "decomposition needs order >= 2, got shape {shape:?}"
            )));
        }
        if shape.contains(&0) {
            return Err(Error::shape("dimension sizes must be positive"));
        }
        cfg.validate()?;
        Ok(plan(shape, 0, shape.len(), 1, &|lo, hi| cfg.requested(lo, hi)))
    }

    pub(crate) fn edge_ranks(&self, out: &mut Vec<EdgeRank>) {
        if let Plan::Internal {
            lo, mid, hi, r1, r2, left, right, ..
        } = self
        {
            out.push(EdgeRank { modes: [*lo, *mid], rank: *r1 });
            out.push(EdgeRank { modes: [*mid, *hi], rank: *r2 });
            left.edge_ranks(out);
            right.edge_ranks(out);
        }
    }
}

fn sorted_ranks(plan: &Plan) -> Vec<EdgeRank> {
    let mut ranks = Vec::new();
    plan.edge_ranks(&mut ranks);
    ranks.sort();
    ranks
}

/// Aggregate numbers for one decomposition run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub error_rate: f64,
    pub mismatches: usize,
    pub elements: usize,
    pub factorizations: usize,
    pub iters: usize,
    pub reads: usize,
    /// Sum of per-column solver wall times.
    #[serde(with = "millis")]
    pub solver_time: Duration,
    #[serde(with = "millis")]
    pub total_time: Duration,
}

impl DecomposeReport {
    /// The report with timing fields zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> DecomposeReport {
        DecomposeReport {
            solver_time: Duration::ZERO,
            total_time: Duration::ZERO,
            ..self.clone()
        }
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64() * 1e3)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let ms = f64::deserialize(d)?;
        Ok(Duration::from_secs_f64(ms.max(0.0) / 1e3))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub tree: HtnTree,
    pub report: DecomposeReport,
}

#[derive(Default)]
struct Tally {
    factorizations: usize,
    iters: usize,
    reads: usize,
    solver_time: Duration,
}

impl Tally {
    fn add(&mut self, r: &BmfResult) {
        self.factorizations += 1;
        self.iters += r.iters;
        self.reads += r.reads_total;
        self.solver_time += r.solver_time_total;
    }

    fn merge(&mut self, o: Tally) {
        self.factorizations += o.factorizations;
        self.iters += o.iters;
        self.reads += o.reads;
        self.solver_time += o.solver_time;
    }
}

fn split(t: &BitTensor, plan: &Plan, cfg: &HtnConfig) -> Result<(HtnNode, Tally)> {
    match plan {
        Plan::Leaf { .. } => {
            let [n, q] = t.shape() else {
                return Err(Error::Tree(format!("leaf expects order 2, got {:?}", t.shape())));
            };
            let leaf = BitMatrix::from_row_major(*n, *q, t.bits())?;
            Ok((HtnNode::Leaf { leaf }, Tally::default()))
        }
        Plan::Internal {
            lo,
            mid,
            hi,
            q,
            r1,
            r2,
            left,
            right,
        } => {
            let s = t.order() - 1;
            let k = mid - lo;
            let mut tally = Tally::default();
            let bmf = |rank: usize, step: u64| BmfConfig {
                rank,
                seed: seed::derive(cfg.seed, &[*lo as u64, *hi as u64, step]),
                ..cfg.bmf.clone()
            };

            let m = matricize_split(t, k)?;
            let outer = factorize(&m, &bmf(*r1, 0))?;
            tally.add(&outer);

            let right_dims = &t.shape()[k..s];
            let stacked = move_q_to_rows(&outer.b, right_dims, *q, *r1)?;
            let inner = factorize(&stacked, &bmf(*r2, 1))?;
            tally.add(&inner);

            let core = BitTensor::from_matrix(&inner.a, &[*q, *r1, *r2])?;
            let mut left_shape = t.shape()[..k].to_vec();
            left_shape.push(*r1);
            let left_t = BitTensor::from_matrix(&outer.a, &left_shape)?;
            let mut right_shape = right_dims.to_vec();
            right_shape.push(*r2);
            let right_t = BitTensor::from_matrix(&inner.b.transpose(), &right_shape)?;

            let (l, r) = rayon::join(
                || split(&left_t, left, cfg),
                || split(&right_t, right, cfg),
            );
            let (l, lt) = l?;
            let (r, rt) = r?;
            tally.merge(lt);
            tally.merge(rt);
            Ok((
                HtnNode::Internal {
                    core,
                    left: Box::new(l),
                    right: Box::new(r),
                },
                tally,
            ))
        }
    }
}

/// Decomposes `t` into a Boolean hierarchical Tucker tree.
pub fn decompose(t: &BitTensor, cfg: &HtnConfig) -> Result<Decomposition> {
    let start = Instant::now();
    let plan = Plan::for_shape(t.shape(), cfg)?;
    let mut with_q = t.shape().to_vec();
    with_q.push(1);
    let (root, tally) = split(&t.reshape(&with_q)?, &plan, cfg)?;
    let tree = HtnTree {
        shape: t.shape().to_vec(),
        ranks: sorted_ranks(&plan),
        root,
    };
    let approx = reconstruct(&tree)?;
    let mismatches = t.hamming(&approx)?;
    let report = DecomposeReport {
        error_rate: mismatches as f64 / t.len() as f64,
        mismatches,
        elements: t.len(),
        factorizations: tally.factorizations,
        iters: tally.iters,
        reads: tally.reads,
        solver_time: tally.solver_time,
        total_time: start.elapsed(),
    };
    Ok(Decomposition { tree, report })
}

impl HtnNode {
    pub fn leaf_count(&self) -> usize {
        match self {
            HtnNode::Leaf { .. } => 1,
            HtnNode::Internal { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    pub fn core_count(&self) -> usize {
        match self {
            HtnNode::Leaf { .. } => 0,
            HtnNode::Internal { left, right, .. } => 1 + left.core_count() + right.core_count(),
        }
    }

    /// Leaf row counts in left-to-right order.
    pub fn leaf_dims(&self) -> Vec<usize> {
        match self {
            HtnNode::Leaf { leaf } => vec![leaf.rows()],
            HtnNode::Internal { left, right, .. } => {
                let mut d = left.leaf_dims();
                d.extend(right.leaf_dims());
                d
            }
        }
    }

    /// Contracts the subtree into a tensor `(dims..., q)`, checking that
    /// `q` matches the expected parent edge rank.
    fn contract(&self, q: usize) -> Result<BitTensor> {
        match self {
            HtnNode::Leaf { leaf } => {
                if leaf.cols() != q {
                    return Err(Error::Tree(format!(
                        "leaf has {} columns but its edge has rank {q}",
                        leaf.cols()
                    )));
                }
                BitTensor::from_matrix(leaf, &[leaf.rows(), q])
            }
            HtnNode::Internal { core, left, right } => {
                let [cq, r1, r2] = core.shape() else {
                    return Err(Error::Tree(format!("core has shape {:?}", core.shape())));
                };
                if *cq != q {
                    return Err(Error::Tree(format!("core connects rank {cq}, parent edge has {q}")));
                }
                let l = left.contract(*r1)?;
                let r = right.contract(*r2)?;
                tensor_contract(core, &l, &r)
            }
        }
    }
}

impl HtnTree {
    /// Checks leaf count and order, edge ranks and core dimensions.
    pub fn validate(&self) -> Result<()> {
        if self.root.leaf_dims() != self.shape {
            return Err(Error::Tree(format!(
                "leaves have dims {:?}, tree shape is {:?}",
                self.root.leaf_dims(),
                self.shape
            )));
        }
        let mut found = Vec::new();
        collect_ranks(&self.root, 0, &mut found)?;
        found.sort();
        if found != self.ranks {
            return Err(Error::Tree("edge rank annotations do not match the nodes".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let tree: HtnTree = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        tree.validate()?;
        Ok(tree)
    }
}

fn collect_ranks(node: &HtnNode, lo: usize, out: &mut Vec<EdgeRank>) -> Result<usize> {
    match node {
        HtnNode::Leaf { .. } => Ok(lo + 1),
        HtnNode::Internal { core, left, right } => {
            let [_, r1, r2] = core.shape() else {
                return Err(Error::Tree(format!("core has shape {:?}", core.shape())));
            };
            let mid = collect_ranks(left, lo, out)?;
            let hi = collect_ranks(right, mid, out)?;
            out.push(EdgeRank { modes: [lo, mid], rank: *r1 });
            out.push(EdgeRank { modes: [mid, hi], rank: *r2 });
            Ok(hi)
        }
    }
}

/// Multiplies the tree back into a tensor of shape `ht.shape`.
pub fn reconstruct(ht: &HtnTree) -> Result<BitTensor> {
    let full = ht.root.contract(1)?;
    let expected: usize = ht.shape.iter().product();
    if full.len() != expected {
        return Err(Error::Tree(format!(
            "tree contracts to {} entries, shape {:?} needs {expected}",
            full.len(),
            ht.shape
        )));
    }
    full.reshape(&ht.shape)
}

/// Fraction of entries on which the two tensors differ.
pub fn error_rate(t: &BitTensor, t_hat: &BitTensor) -> Result<f64> {
    Ok(t.hamming(t_hat)? as f64 / t.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::SolverConfig;

    fn exact(rank: usize, seed: u64) -> HtnConfig {
        HtnConfig::new(rank, BmfConfig::with_rank(rank, SolverConfig::exact()), seed)
    }

    #[test]
    fn order_two_tree_shape() {
        let t = BitTensor::from_fn(&[3, 4], |i| (i[0] + i[1]) % 3 == 0).unwrap();
        let d = decompose(&t, &exact(2, 1)).unwrap();
        let HtnNode::Internal { core, left, right } = &d.tree.root else {
            panic!("root must be a core");
        };
        assert_eq!(core.shape(), &[1, 2, 2]);
        assert!(matches!(**left, HtnNode::Leaf { .. }));
        assert!(matches!(**right, HtnNode::Leaf { .. }));
        let approx = reconstruct(&d.tree).unwrap();
        assert_eq!(d.report.mismatches, t.hamming(&approx).unwrap());
    }

    #[test]
    fn all_ones_rank_one() {
        let t = BitTensor::ones(&[2, 2, 2, 2]).unwrap();
        let d = decompose(&t, &exact(1, 0)).unwrap();
        assert_eq!(d.report.mismatches, 0);
        assert_eq!(d.tree.root.leaf_count(), 4);
        assert_eq!(d.tree.root.core_count(), 3);
    }

    #[test]
    fn odd_order_splits_left_heavy() {
        let t = BitTensor::from_fn(&[2, 3, 2, 2, 3], |i| i.iter().sum::<usize>() % 3 == 1).unwrap();
        let d = decompose(&t, &exact(2, 4)).unwrap();
        d.tree.validate().unwrap();
        assert_eq!(d.tree.root.leaf_dims(), vec![2, 3, 2, 2, 3]);
        assert!(d.tree.ranks.contains(&EdgeRank { modes: [0, 3], rank: 2 }));
        assert!(d.tree.ranks.contains(&EdgeRank { modes: [3, 5], rank: 2 }));
    }

    #[test]
    fn ranks_are_clamped() {
        let t = BitTensor::from_fn(&[2, 2], |i| i[0] == i[1]).unwrap();
        let d = decompose(&t, &exact(5, 0)).unwrap();
        assert!(d.tree.ranks.iter().all(|e| e.rank == 2));
        assert_eq!(d.report.mismatches, 0);
    }

    #[test]
    fn identity_leaves_reproduce_core() {
        let core = BitTensor::from_fn(&[1, 2, 3], |i| (i[1] + i[2]) % 2 == 0).unwrap();
        let tree = HtnTree {
            shape: vec![2, 3],
            ranks: vec![
                EdgeRank { modes: [0, 1], rank: 2 },
                EdgeRank { modes: [1, 2], rank: 3 },
            ],
            root: HtnNode::Internal {
                core: core.clone(),
                left: Box::new(HtnNode::Leaf { leaf: BitMatrix::identity(2) }),
                right: Box::new(HtnNode::Leaf { leaf: BitMatrix::identity(3) }),
            },
        };
        tree.validate().unwrap();
        assert_eq!(reconstruct(&tree).unwrap(), core.reshape(&[2, 3]).unwrap());
    }

    #[test]
    fn broken_trees_are_rejected() {
        let tree = HtnTree {
            shape: vec![2, 3],
            ranks: vec![],
            root: HtnNode::Internal {
                core: BitTensor::zeros(&[1, 2, 2]).unwrap(),
                left: Box::new(HtnNode::Leaf { leaf: BitMatrix::identity(2) }),
                right: Box::new(HtnNode::Leaf { leaf: BitMatrix::identity(3) }),
            },
        };
        assert!(tree.validate().is_err());
        assert!(matches!(reconstruct(&tree), Err(Error::Tree(_))));
    }

    #[test]
    fn error_rate_examples() {
        let t = BitTensor::zeros(&[4, 4]).unwrap();
        assert_eq!(error_rate(&t, &t).unwrap(), 0.0);
        assert_eq!(error_rate(&t, &BitTensor::ones(&[4, 4]).unwrap()).unwrap(), 1.0);
        let mut one = t.clone();
        one.set(&[2, 1], true);
        assert_eq!(error_rate(&t, &one).unwrap(), 0.0625);
        assert!(error_rate(&t, &BitTensor::zeros(&[16]).unwrap()).is_err());
    }

    #[test]
    fn rejects_order_one_and_zero_rank() {
        let t = BitTensor::ones(&[4]).unwrap();
        assert!(decompose(&t, &exact(1, 0)).is_err());
        let t = BitTensor::ones(&[2, 2]).unwrap();
        assert!(decompose(&t, &exact(0, 0)).is_err());
    }

    #[test]
    fn json_round_trip_keeps_structure() {
        let t = BitTensor::from_fn(&[2, 2, 3], |i| i[2] != 1).unwrap();
        let d = decompose(&t, &exact(2, 3)).unwrap();
        let json = serde_json::to_string(&d.tree).unwrap();
        assert!(json.contains("\"core\"") && json.contains("\"leaf\""));
        assert_eq!(HtnTree::from_json(&json).unwrap(), d.tree);
    }
}
