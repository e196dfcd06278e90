use std::time::Instant;

use super::{Backend, SolveReport};
use crate::error::{Error, Result};
use crate::hubo::{Assignment, HuboPoly};

/// Largest polynomial handled by full enumeration.
pub const EXACT_VAR_LIMIT: usize = 20;

/// Global minimum by enumerating all `2^n` assignments.
///
/// Values are tabulated with a subset-sum (zeta) transform over the
/// coefficient table, so the cost is `O(n 2^n)` independent of the number
/// of terms. Ties go to the assignment with the lowest binary value
/// (`y_0` as the least significant bit).
pub fn solve_exact(p: &HuboPoly) -> Result<SolveReport> {
    let start = Instant::now();
    let n = p.num_vars();
    if n > EXACT_VAR_LIMIT {
        return Err(Error::TooManyVariables {
            vars: n,
            limit: EXACT_VAR_LIMIT,
        });
    }
    let mut table = vec![0.0f64; 1usize << n];
    for (vars, coef) in p.terms() {
        let mask = vars.iter().fold(0usize, |m, &v| m | 1 << v);
        table[mask] += coef;
    }
    for bit in 0..n {
        let step = 1usize << bit;
        for v in 0..table.len() {
            if v & step != 0 {
                table[v] += table[v ^ step];
            }
        }
    }
    let (best, _) = table
        .iter()
        .enumerate()
        .fold((0usize, f64::INFINITY), |(bi, bv), (i, &v)| {
            if v < bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    let best = Assignment::from_int(best as u64, n);
    let energy = p.eval(&best)?;
    Ok(SolveReport {
        best,
        energy,
        wall_time: start.elapsed(),
        reads_used: 1,
        backend: Backend::Exact,
    })
}
