use std::collections::{BTreeMap, HashMap};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::poly::{add_coef, Assignment, HuboPoly};
use crate::error::{Error, Result};

/// A quadratic pseudo-Boolean model
/// `offset + sum_i linear[i] x_i + sum_{i<j} quadratic[(i,j)] x_i x_j`.
///
/// Variables `0..num_original` come from the source polynomial; variable
/// `num_original + k` is an auxiliary standing for the product of the pair
/// `aux_map[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel {
    num_vars: usize,
    num_original: usize,
    linear: Vec<f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    offset: f64,
    aux_map: Vec<(usize, usize)>,
}

impl QuboModel {
    /// A model with no auxiliary variables.
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            num_original: num_vars,
            linear: vec![0.0; num_vars],
            quadratic: BTreeMap::new(),
            offset: 0.0,
            aux_map: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_original(&self) -> usize {
        self.num_original
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.quadratic
    }

    pub fn aux_map(&self) -> &[(usize, usize)] {
        &self.aux_map
    }

    pub fn set_offset(&mut self, offset: f64) {
        self.offset = offset;
    }

    pub fn add_linear(&mut self, i: usize, coef: f64) -> Result<()> {
        if i >= self.num_vars {
            return Err(Error::invalid(format!("variable {i} out of range")));
        }
        self.linear[i] += coef;
        Ok(())
    }

    pub fn add_quadratic(&mut self, i: usize, j: usize, coef: f64) -> Result<()> {
        if i == j {
            return self.add_linear(i, coef);
        }
        let (i, j) = (i.min(j), i.max(j));
        if j >= self.num_vars {
            return Err(Error::invalid(format!("variable {j} out of range")));
        }
        let e = self.quadratic.entry((i, j)).or_insert(0.0);
        *e += coef;
        if *e == 0.0 {
            self.quadratic.remove(&(i, j));
        }
        Ok(())
    }

    pub fn eval(&self, x: &Assignment) -> Result<f64> {
        if x.len() != self.num_vars {
            return Err(Error::shape(format!(
                "assignment has {} entries, model has {} variables",
                x.len(),
                self.num_vars
            )));
        }
        let lin: f64 = x.iter_ones().map(|i| self.linear[i]).sum();
        let quad: f64 = self
            .quadratic
            .iter()
            .filter(|(&(i, j), _)| x.get(i) && x.get(j))
            .map(|(_, c)| c)
            .sum();
        Ok(self.offset + lin + quad)
    }

    /// Extends an assignment of the original variables with auxiliaries set
    /// to the products they stand for.
    pub fn complete(&self, original: &Assignment) -> Result<Assignment> {
        if original.len() != self.num_original {
            return Err(Error::shape(format!(
                "expected {} original variables, got {}",
                self.num_original,
                original.len()
            )));
        }
        let mut full = Assignment::zeros(self.num_vars);
        for i in original.iter_ones() {
            full.set(i, true);
        }
        for (k, &(i, j)) in self.aux_map.iter().enumerate() {
            full.set(self.num_original + k, full.get(i) && full.get(j));
        }
        Ok(full)
    }

    /// Restricts a full assignment to the original variables.
    pub fn project(&self, full: &Assignment) -> Assignment {
        let mut out = Assignment::zeros(self.num_original);
        for i in full.iter_ones().take_while(|&i| i < self.num_original) {
            out.set(i, true);
        }
        out
    }

    /// Local-field form used by samplers: per-variable neighbour lists.
    pub(crate) fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.num_vars];
        for (&(i, j), &c) in &self.quadratic {
            adj[i].push((j, c));
            adj[j].push((i, c));
        }
        adj
    }
}

pub fn eval_qubo(q: &QuboModel, x: &Assignment) -> Result<f64> {
    q.eval(x)
}

/// Reduces a polynomial to degree two.
///
/// While a term of degree three or more remains, the variable pair shared by
/// the most such terms (lowest pair on ties) is replaced by a fresh
/// auxiliary `z` in all of them, and `strength * (x_i x_j - 2 z x_i - 2 z x_j + 3 z)`
/// is added. That penalty is zero when `z = x_i x_j` and at least `strength`
/// otherwise.
pub fn hubo_to_qubo(p: &HuboPoly, strength: f64) -> Result<QuboModel> {
    if !strength.is_finite() || strength <= 0.0 {
        return Err(Error::invalid(format!(
            "quadratization strength must be positive and finite, got {strength}"
        )));
    }
    let num_original = p.num_vars();
    let mut terms = p.term_map().clone();
    let mut aux_map = Vec::new();
    let mut next_var = num_original;

    loop {
        let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
        for vars in terms.keys().filter(|k| k.len() >= 3) {
            for (a, &i) in vars.iter().enumerate() {
                for &j in &vars[a + 1..] {
                    *counts.entry((i, j)).or_insert(0) += 1;
                }
            }
        }
        let Some((&(i, j), _)) = counts
            .iter()
            .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then_with(|| pb.cmp(pa)))
        else {
            break;
        };

        let z = next_var;
        next_var += 1;
        aux_map.push((i, j));

        let affected: Vec<Vec<usize>> = terms
            .keys()
            .filter(|k| k.len() >= 3 && k.binary_search(&i).is_ok() && k.binary_search(&j).is_ok())
            .cloned()
            .collect();
        for key in affected {
            let coef = terms.remove(&key).expect("key collected from map");
            let mut reduced: Vec<usize> = key.into_iter().filter(|&v| v != i && v != j).collect();
            reduced.push(z);
            add_coef(&mut terms, reduced, coef);
        }
        add_coef(&mut terms, vec![i, j], strength);
        add_coef(&mut terms, vec![i, z], -2.0 * strength);
        add_coef(&mut terms, vec![j, z], -2.0 * strength);
        add_coef(&mut terms, vec![z], 3.0 * strength);
    }

    let mut q = QuboModel {
        num_vars: next_var,
        num_original,
        linear: vec![0.0; next_var],
        quadratic: BTreeMap::new(),
        offset: 0.0,
        aux_map,
    };
    for (vars, coef) in terms {
        match vars[..] {
            [] => q.offset += coef,
            [i] => q.linear[i] += coef,
            [i, j] => q.add_quadratic(i, j, coef)?,
            _ => unreachable!("degree reduced to two"),
        }
    }
    Ok(q)
}

/// Values of every assignment of `n` variables given subset coefficients.
fn tabulate(n: usize, coefs: impl IntoIterator<Item = (usize, f64)>) -> Vec<f64> {
    let mut table = vec![0.0f64; 1usize << n];
    for (mask, c) in coefs {
        table[mask] += c;
    }
    for bit in 0..n {
        let step = 1usize << bit;
        for v in 0..table.len() {
            if v & step != 0 {
                table[v] += table[v ^ step];
            }
        }
    }
    table
}

/// Exhaustively checks that minimizing `q` over its auxiliaries reproduces
/// `p` for every assignment of the original variables. Returns `None` when
/// `q` has more than `max_vars` variables.
pub fn is_sound_reduction(p: &HuboPoly, q: &QuboModel, max_vars: usize) -> Option<bool> {
    let n = q.num_vars();
    let r = q.num_original();
    if n > max_vars || n >= usize::BITS as usize || r != p.num_vars() {
        return None;
    }
    let hubo = tabulate(
        r,
        p.terms()
            .map(|(vars, c)| (vars.iter().fold(0, |m, &v| m | 1 << v), c)),
    );
    let qubo = tabulate(
        n,
        std::iter::once((0, q.offset))
            .chain(q.linear.iter().enumerate().map(|(i, &c)| (1 << i, c)))
            .chain(q.quadratic.iter().map(|(&(i, j), &c)| (1 << i | 1 << j, c))),
    );
    let low = (1usize << r) - 1;
    let mut best = vec![f64::INFINITY; 1 << r];
    for (v, &val) in qubo.iter().enumerate() {
        let o = v & low;
        best[o] = best[o].min(val);
    }
    Some(best.iter().zip(&hubo).all(|(a, b)| a == b))
}

// Wire form: {"n":…, "offset":…, "linear":{"i":coef}, "quadratic":{"i,j":coef}}.
#[derive(Serialize, Deserialize)]
struct WireQubo {
    n: usize,
    offset: f64,
    linear: BTreeMap<String, f64>,
    quadratic: BTreeMap<String, f64>,
}

impl Serialize for QuboModel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        // Keys sort as strings; readers must not depend on order.
        let linear = self
            .linear
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(i, &c)| (i.to_string(), c))
            .collect();
        let quadratic = self
            .quadratic
            .iter()
            .map(|(&(i, j), &c)| (format!("{i},{j}"), c))
            .collect();
        WireQubo {
            n: self.num_vars,
            offset: self.offset,
            linear,
            quadratic,
        }
        .serialize(s)
    }
}

fn parse_index(s: &str, n: usize) -> std::result::Result<usize, String> {
    let i: usize = s
        .trim()
        .parse()
        .map_err(|_| format!("bad variable index {s:?}"))?;
    if i >= n {
        return Err(format!("variable index {i} out of range for n = {n}"));
    }
    Ok(i)
}

impl<'de> Deserialize<'de> for QuboModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = WireQubo::deserialize(d)?;
        let mut q = QuboModel::new(w.n);
        q.offset = w.offset;
        for (k, c) in w.linear {
            let i = parse_index(&k, w.n).map_err(D::Error::custom)?;
            q.linear[i] += c;
        }
        for (k, c) in w.quadratic {
            let (a, b) = k
                .split_once(',')
                .ok_or_else(|| D::Error::custom(format!("bad quadratic key {k:?}")))?;
            let i = parse_index(a, w.n).map_err(D::Error::custom)?;
            let j = parse_index(b, w.n).map_err(D::Error::custom)?;
            if i >= j {
                return Err(D::Error::custom(format!("quadratic key {k:?} must have i < j")));
            }
            q.add_quadratic(i, j, c).map_err(D::Error::custom)?;
        }
        Ok(q)
    }
}
