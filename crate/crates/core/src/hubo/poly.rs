use std::collections::{BTreeMap, HashMap};

use crate::bool_core::{BitMatrix, BitVector};
use crate::error::{Error, Result};

/// Default cap on the number of set bits in a factor row whose OR-term is
/// expanded by inclusion-exclusion.
pub const DEFAULT_EXPANSION_CAP: usize = 20;

/// Assignment of 0/1 values to polynomial or model variables.
pub type Assignment = BitVector;

/// A multilinear pseudo-Boolean polynomial.
///
/// Terms are keyed by sorted, deduplicated variable lists; the empty list
/// is the constant term. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct HuboPoly {
    num_vars: usize,
    terms: BTreeMap<Vec<usize>, f64>,
}

impl HuboPoly {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms<I, V>(num_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (V, f64)>,
        V: AsRef<[usize]>,
    {
        let mut p = Self::new(num_vars);
        for (vars, coef) in terms {
            p.add_term(vars.as_ref(), coef)?;
        }
        Ok(p)
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Adds `coef * prod(vars)`; repeated variables collapse since `y*y = y`.
    pub fn add_term(&mut self, vars: &[usize], coef: f64) -> Result<()> {
        if let Some(&v) = vars.iter().find(|&&v| v >= self.num_vars) {
            return Err(Error::invalid(format!(
                "variable {v} out of range for {} variables",
                self.num_vars
            )));
        }
        let mut key = vars.to_vec();
        key.sort_unstable();
        key.dedup();
        add_coef(&mut self.terms, key, coef);
        Ok(())
    }

    pub fn coefficient(&self, vars: &[usize]) -> f64 {
        let mut key = vars.to_vec();
        key.sort_unstable();
        key.dedup();
        self.terms.get(&key).copied().unwrap_or(0.0)
    }

    pub fn constant(&self) -> f64 {
        self.coefficient(&[])
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.terms.iter().map(|(k, &c)| (k.as_slice(), c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn eval(&self, y: &Assignment) -> Result<f64> {
        if y.len() != self.num_vars {
            return Err(Error::shape(format!(
                "assignment has {} entries, polynomial has {} variables",
                y.len(),
                self.num_vars
            )));
        }
        Ok(self
            .terms
            .iter()
            .filter(|(vars, _)| vars.iter().all(|&v| y.get(v)))
            .map(|(_, c)| c)
            .sum())
    }

    pub(crate) fn term_map(&self) -> &BTreeMap<Vec<usize>, f64> {
        &self.terms
    }
}

pub(crate) fn add_coef(terms: &mut BTreeMap<Vec<usize>, f64>, key: Vec<usize>, coef: f64) {
    if coef == 0.0 {
        return;
    }
    let entry = terms.entry(key);
    match entry {
        std::collections::btree_map::Entry::Occupied(mut e) => {
            *e.get_mut() += coef;
            if *e.get() == 0.0 {
                e.remove();
            }
        }
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(coef);
        }
    }
}

pub fn eval_hubo(p: &HuboPoly, y: &Assignment) -> Result<f64> {
    p.eval(y)
}

/// Builds the polynomial in `y` whose value is `hamming(x_col, a*y)`.
pub fn build_column_hubo(a: &BitMatrix, x_col: &BitVector) -> Result<HuboPoly> {
    build_column_hubo_capped(a, x_col, DEFAULT_EXPANSION_CAP)
}

/// Like [`build_column_hubo`], with an explicit cap on expanded row weight.
///
/// Output entry `j` of `a*y` is `f(y_l : a[j][l] = 1)` with
/// `f = 1 - prod(1 - y_l)`. The distance is
/// `popcount(x) - sum_{x_j = 1} f_j + sum_{x_j = 0} f_j`, and each `f_j`
/// expands to `sum_{U nonempty} (-1)^{|U|+1} prod_{l in U} y_l`.
pub fn build_column_hubo_capped(a: &BitMatrix, x_col: &BitVector, cap: usize) -> Result<HuboPoly> {
    if a.rows() != x_col.len() {
        return Err(Error::shape(format!(
            "factor has {} rows but the column has {} entries",
            a.rows(),
            x_col.len()
        )));
    }
    // Rows with the same support share one expansion; net sign +1 per
    // false row, -1 per true row.
    let mut supports: HashMap<Vec<usize>, i64> = HashMap::new();
    for j in 0..a.rows() {
        let weight = a.row_weight(j);
        if weight == 0 {
            continue;
        }
        if weight > cap {
            return Err(Error::ExpansionCap { row: j, weight, cap });
        }
        let sign = if x_col.get(j) { -1 } else { 1 };
        *supports.entry(a.row_ones(j).collect()).or_insert(0) += sign;
    }

    let mut acc: HashMap<Vec<usize>, i64> = HashMap::new();
    let constant = x_col.count_ones() as i64;
    if constant != 0 {
        acc.insert(Vec::new(), constant);
    }
    for (support, net) in supports {
        if net == 0 {
            continue;
        }
        let k = support.len();
        for subset in 1u32..(1u32 << k) {
            let key: Vec<usize> = (0..k)
                .filter(|&b| subset >> b & 1 == 1)
                .map(|b| support[b])
                .collect();
            let sign = if subset.count_ones() % 2 == 1 { 1 } else { -1 };
            *acc.entry(key).or_insert(0) += sign * net;
        }
    }

    let terms = acc
        .into_iter()
        .filter(|&(_, c)| c != 0)
        .map(|(k, c)| (k, c as f64))
        .collect();
    Ok(HuboPoly {
        num_vars: a.cols(),
        terms,
    })
}

/// Penalty scale for quadratization: the largest absolute coefficient,
/// constant included, or 1 for an empty polynomial.
pub fn default_strength(p: &HuboPoly) -> f64 {
    p.terms
        .values()
        .map(|c| c.abs())
        .fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.max(c))))
        .unwrap_or(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_assignments(n: usize) -> impl Iterator<Item = BitVector> {
        (0..1u64 << n).map(move |v| BitVector::from_int(v, n))
    }

    #[test]
    fn two_by_two_example() {
        let a = BitMatrix::from_rows(&[[1, 0], [1, 1]]);
        let x = BitVector::from_u8(&[1, 0]);
        let p = build_column_hubo(&a, &x).unwrap();
        let expected = HuboPoly::from_terms(2, [(vec![], 1.0), (vec![1], 1.0), (vec![0, 1], -1.0)]).unwrap();
        assert_eq!(p, expected);
        // y = 00, 10, 01, 11 (y_0 is the low bit)
        let values: Vec<f64> = all_assignments(2).map(|y| p.eval(&y).unwrap()).collect();
        assert_eq!(values, vec![1.0, 1.0, 2.0, 1.0]);
        for y in all_assignments(2) {
            let d = x.hamming(&a.matvec(&y).unwrap()).unwrap();
            assert_eq!(p.eval(&y).unwrap(), d as f64);
        }
    }

    #[test]
    fn representable_column_has_zero_minimum() {
        let a = BitMatrix::from_rows(&[[1, 0, 1], [0, 1, 0], [1, 1, 0], [0, 0, 1]]);
        let y_star = BitVector::from_u8(&[0, 1, 1]);
        let x = a.matvec(&y_star).unwrap();
        let p = build_column_hubo(&a, &x).unwrap();
        assert_eq!(p.eval(&y_star).unwrap(), 0.0);
    }

    #[test]
    fn zero_row_contributes_nothing() {
        let a = BitMatrix::from_rows(&[[0, 0], [1, 1]]);
        let x = BitVector::from_u8(&[0, 1]);
        let p = build_column_hubo(&a, &x).unwrap();
        let without = build_column_hubo(
            &BitMatrix::from_rows(&[[1, 1]]),
            &BitVector::from_u8(&[1]),
        )
        .unwrap();
        assert_eq!(p, without);
    }

    #[test]
    fn expansion_cap_is_enforced() {
        let a = BitMatrix::ones(2, 5);
        let x = BitVector::from_u8(&[1, 0]);
        assert!(build_column_hubo_capped(&a, &x, 5).is_ok());
        match build_column_hubo_capped(&a, &x, 4) {
            Err(Error::ExpansionCap { row: 0, weight: 5, cap: 4 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(build_column_hubo(&a, &BitVector::zeros(3)).is_err());
    }

    #[test]
    fn eval_examples() {
        let c = HuboPoly::from_terms(3, [(vec![], 4.5)]).unwrap();
        assert_eq!(c.eval(&BitVector::from_u8(&[1, 0, 1])).unwrap(), 4.5);
        let p = HuboPoly::from_terms(2, [(vec![], 2.0), (vec![0], 3.0), (vec![0, 1], -1.0)]).unwrap();
        assert_eq!(p.eval(&BitVector::zeros(2)).unwrap(), 2.0);
        assert!(p.eval(&BitVector::zeros(3)).is_err());
    }

    #[test]
    fn strength_examples() {
        let p = HuboPoly::from_terms(2, [(vec![], 1.0), (vec![1], 1.0), (vec![0, 1], -1.0)]).unwrap();
        assert_eq!(default_strength(&p), 1.0);
        let p = HuboPoly::from_terms(3, [(vec![0, 1, 2], 5.0)]).unwrap();
        assert_eq!(default_strength(&p), 5.0);
        assert_eq!(default_strength(&HuboPoly::new(4)), 1.0);
    }

    #[test]
    fn terms_are_normalized() {
        let mut p = HuboPoly::new(3);
        p.add_term(&[2, 0, 2], 1.5).unwrap();
        p.add_term(&[0, 2], -1.5).unwrap();
        assert!(p.is_empty());
        assert!(p.add_term(&[3], 1.0).is_err());
    }
}
