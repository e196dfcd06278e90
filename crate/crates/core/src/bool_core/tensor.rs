use super::matrix::BitMatrix;
use super::vector::BitVector;
use crate::error::{Error, Result};

/// Dense Boolean multiway array, row-major (first index slowest).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitTensor {
    shape: Vec<usize>,
    bits: BitVector,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::shape("tensor shape must have at least one dimension"));
    }
    if let Some(pos) = shape.iter().position(|&n| n == 0) {
        return Err(Error::shape(format!("dimension {pos} has size 0")));
    }
    shape
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::shape("tensor size overflows usize"))
}

impl BitTensor {
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let len = check_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            bits: BitVector::zeros(len),
        })
    }

    pub fn ones(shape: &[usize]) -> Result<Self> {
        let len = check_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            bits: BitVector::ones(len),
        })
    }

    pub fn from_bits(shape: &[usize], bits: BitVector) -> Result<Self> {
        let len = check_shape(shape)?;
        if bits.len() != len {
            return Err(Error::shape(format!(
                "{} bits do not fill shape {shape:?} ({len} entries)",
                bits.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            bits,
        })
    }

    /// Calls `f` with each multi-index in row-major order.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> bool) -> Result<Self> {
        let mut t = Self::zeros(shape)?;
        let mut idx = vec![0usize; shape.len()];
        for lin in 0..t.len() {
            if f(&idx) {
                t.bits.set(lin, true);
            }
            for d in (0..shape.len()).rev() {
                idx[d] += 1;
                if idx[d] < shape[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(t)
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.shape.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &BitVector {
        &self.bits
    }

    pub fn into_bits(self) -> BitVector {
        self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones()
    }

    /// True when every entry has the same value.
    pub fn is_constant(&self) -> bool {
        self.bits.all_zeros() || self.bits.all_ones()
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.shape.len(), "index order mismatch");
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| {
            assert!(i < n, "index {i} out of range for dimension of size {n}");
            acc * n + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> bool {
        self.bits.get(self.linear_index(idx))
    }

    pub fn set(&mut self, idx: &[usize], value: bool) {
        let lin = self.linear_index(idx);
        self.bits.set(lin, value);
    }

    pub fn get_linear(&self, lin: usize) -> bool {
        self.bits.get(lin)
    }

    pub fn set_linear(&mut self, lin: usize, value: bool) {
        self.bits.set(lin, value);
    }

    pub fn reshape(&self, new_shape: &[usize]) -> Result<BitTensor> {
        let len = check_shape(new_shape)?;
        if len != self.len() {
            return Err(Error::shape(format!(
                "cannot reshape {:?} ({} entries) to {new_shape:?} ({len} entries)",
                self.shape,
                self.len()
            )));
        }
        Ok(Self {
            shape: new_shape.to_vec(),
            bits: self.bits.clone(),
        })
    }

    /// Groups the first `split` modes into rows and the rest into columns.
    pub fn unfold(&self, split: usize) -> Result<BitMatrix> {
        if split == 0 || split >= self.order() {
            return Err(Error::invalid(format!(
                "split point {split} outside 1..{} for shape {:?}",
                self.order(),
                self.shape
            )));
        }
        let rows: usize = self.shape[..split].iter().product();
        let cols: usize = self.shape[split..].iter().product();
        BitMatrix::from_row_major(rows, cols, &self.bits)
    }

    pub fn from_matrix(m: &BitMatrix, shape: &[usize]) -> Result<BitTensor> {
        Self::from_bits(shape, m.to_row_major())
    }

    pub fn hamming(&self, other: &BitTensor) -> Result<usize> {
        if self.shape != other.shape {
            return Err(Error::shape(format!(
                "hamming distance of tensors with shapes {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        self.bits.hamming(&other.bits)
    }
}

impl std::fmt::Debug for BitTensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitTensor{:?} {:?}", self.shape, self.bits)
    }
}

pub fn reshape(t: &BitTensor, new_shape: &[usize]) -> Result<BitTensor> {
    t.reshape(new_shape)
}

/// Unfolds a tensor of shape `(n_1, ..., n_s, q)` into a matrix with rows
/// over `(n_1..n_split)` and columns over `(n_{split+1}, ..., n_s, q)`.
///
/// The trailing mode is the connecting dimension, so `split` must leave at
/// least one data mode on the column side: `1 <= split < s`.
pub fn matricize_split(t: &BitTensor, split: usize) -> Result<BitMatrix> {
    let s = t.order().saturating_sub(1);
    if split == 0 || split >= s {
        return Err(Error::invalid(format!(
            "split point {split} invalid for tensor with {s} data modes plus a connecting mode"
        )));
    }
    t.unfold(split)
}

fn check_q_layout(m: &BitMatrix, col_dims: &[usize], q: usize, r: usize, q_in_rows: bool) -> Result<usize> {
    if q == 0 || r == 0 {
        return Err(Error::invalid("q and r must be positive"));
    }
    let inner: usize = col_dims.iter().product();
    let (want_rows, want_cols) = if q_in_rows {
        (q * r, inner)
    } else {
        (r, inner * q)
    };
    if m.rows() != want_rows || m.cols() != want_cols {
        return Err(Error::shape(format!(
            "matrix is {}x{} but dims {col_dims:?}, q={q}, r={r} require {want_rows}x{want_cols}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(inner)
}

/// Views `m` as a tensor `(r, col_dims..., q)`, permutes it to
/// `(q, r, col_dims...)` and returns the `(q*r) x prod(col_dims)` unfolding.
/// Row index of the result is `i_q * r + i_r`.
pub fn move_q_to_rows(m: &BitMatrix, col_dims: &[usize], q: usize, r: usize) -> Result<BitMatrix> {
    let inner = check_q_layout(m, col_dims, q, r, false)?;
    if q == 1 {
        return Ok(m.clone());
    }
    let mut out = BitMatrix::zeros(q * r, inner);
    for a in 0..r {
        for col in m.row_ones(a) {
            let (j, c) = (col / q, col % q);
            out.set(c * r + a, j, true);
        }
    }
    Ok(out)
}

/// Inverse of [`move_q_to_rows`].
pub fn move_q_to_cols(m: &BitMatrix, col_dims: &[usize], q: usize, r: usize) -> Result<BitMatrix> {
    let inner = check_q_layout(m, col_dims, q, r, true)?;
    if q == 1 {
        return Ok(m.clone());
    }
    let mut out = BitMatrix::zeros(r, inner * q);
    for row in 0..q * r {
        let (c, a) = (row / r, row % r);
        for j in m.row_ones(row) {
            out.set(a, j * q + c, true);
        }
    }
    Ok(out)
}

/// Boolean contraction of an order-3 core `(q, r1, r2)` with a left tensor
/// `(..., r1)` and a right tensor `(..., r2)`, giving `(left..., right..., q)`:
///
/// `out[i, j, c] = OR_{a,b} left[i, a] AND core[c, a, b] AND right[j, b]`.
pub fn tensor_contract(core: &BitTensor, left: &BitTensor, right: &BitTensor) -> Result<BitTensor> {
    let [q, r1, r2] = core.shape() else {
        return Err(Error::shape(format!(
            "core must be order 3, got shape {:?}",
            core.shape()
        )));
    };
    let (q, r1, r2) = (*q, *r1, *r2);
    let (&left_rank, left_dims) = left
        .shape()
        .split_last()
        .ok_or_else(|| Error::shape("empty left tensor"))?;
    let (&right_rank, right_dims) = right
        .shape()
        .split_last()
        .ok_or_else(|| Error::shape("empty right tensor"))?;
    if left_rank != r1 || right_rank != r2 {
        return Err(Error::shape(format!(
            "core ranks ({r1}, {r2}) do not match left/right trailing dims ({left_rank}, {right_rank})"
        )));
    }
    let left_size: usize = left_dims.iter().product();
    let right_size: usize = right_dims.iter().product();

    let left_m = BitMatrix::from_row_major(left_size, r1, left.bits())?;
    let right_m = BitMatrix::from_row_major(right_size, r2, right.bits())?;
    let core_m = BitMatrix::from_row_major(q * r1, r2, core.bits())?;

    // (q*r1 x r2)(r2 x right) -> rows (c, a), then regroup to r1 x (right, q).
    let stacked = core_m.matmul(&right_m.transpose())?;
    let upper = move_q_to_cols(&stacked, right_dims, q, r1)?;
    let out = left_m.matmul(&upper)?;

    let mut shape: Vec<usize> = left_dims.iter().chain(right_dims).copied().collect();
    shape.push(q);
    BitTensor::from_matrix(&out, &shape)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reshape_keeps_linear_order() {
        let t = BitTensor::from_fn(&[2, 3], |i| (i[0] + i[1]) % 2 == 0).unwrap();
        let flat = t.reshape(&[6]).unwrap();
        assert_eq!(flat.bits(), t.bits());
        assert_eq!(flat.reshape(&[2, 3]).unwrap(), t);
    }

    #[test]
    fn reshape_index_arithmetic() {
        let mut t = BitTensor::zeros(&[2, 2, 2]).unwrap();
        t.set(&[1, 0, 1], true);
        let m = t.reshape(&[2, 4]).unwrap();
        assert!(m.get(&[1, 1]));
        assert_eq!(m.count_ones(), 1);
    }

    #[test]
    fn reshape_rejects_size_change() {
        let t = BitTensor::zeros(&[2, 3]).unwrap();
        assert!(matches!(t.reshape(&[5]), Err(Error::Shape(_))));
        assert!(BitTensor::zeros(&[2, 0]).is_err());
    }

    #[test]
    fn matricize_with_dummy_mode() {
        let t = BitTensor::from_fn(&[2, 2, 1], |i| i[0] == 1 || i[1] == 0).unwrap();
        let m = matricize_split(&t, 1).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 2));
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(m.get(i, j), t.get(&[i, j, 0]));
            }
        }
    }

    #[test]
    fn matricize_column_index() {
        let t = BitTensor::from_fn(&[2, 2, 3], |i| (i[0] * 7 + i[1] * 3 + i[2]) % 4 == 1).unwrap();
        let m = matricize_split(&t, 1).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 6));
        for i in 0..2 {
            for j in 0..2 {
                for c in 0..3 {
                    assert_eq!(m.get(i, j * 3 + c), t.get(&[i, j, c]));
                }
            }
        }
        assert_eq!(BitTensor::from_matrix(&m, t.shape()).unwrap(), t);
    }

    #[test]
    fn matricize_rejects_bad_split() {
        let t = BitTensor::zeros(&[2, 2, 1]).unwrap();
        assert!(matricize_split(&t, 0).is_err());
        assert!(matricize_split(&t, 2).is_err());
    }

    #[test]
    fn move_q_identity_for_dummy() {
        let m = BitMatrix::from_rows(&[[1, 0, 1], [0, 1, 1]]);
        assert_eq!(move_q_to_rows(&m, &[3], 1, 2).unwrap(), m);
    }

    #[test]
    fn move_q_hand_permutation() {
        // columns ordered (n, q): (0,0) (0,1) (1,0) (1,1) carry a b c d
        let m = BitMatrix::from_rows(&[[1, 0, 0, 1]]); // a=1 b=0 c=0 d=1
        let out = move_q_to_rows(&m, &[2], 2, 1).unwrap();
        // expected [[a, c], [b, d]]
        assert_eq!(out, BitMatrix::from_rows(&[[1, 0], [0, 1]]));
        let m = BitMatrix::from_rows(&[[0, 1, 1, 0]]);
        let out = move_q_to_rows(&m, &[2], 2, 1).unwrap();
        assert_eq!(out, BitMatrix::from_rows(&[[0, 1], [1, 0]]));
        assert_eq!(move_q_to_cols(&out, &[2], 2, 1).unwrap(), m);
    }

    #[test]
    fn move_q_rejects_bad_bookkeeping() {
        let m = BitMatrix::zeros(2, 6);
        assert!(move_q_to_rows(&m, &[2], 2, 2).is_err());
        assert!(move_q_to_rows(&m, &[3], 2, 2).is_ok());
    }

    #[test]
    fn contract_rank_one_is_outer_and() {
        let core = BitTensor::ones(&[1, 1, 1]).unwrap();
        let left = BitTensor::from_fn(&[3, 1], |i| i[0] != 1).unwrap();
        let right = BitTensor::from_fn(&[2, 1], |i| i[0] == 1).unwrap();
        let out = tensor_contract(&core, &left, &right).unwrap();
        assert_eq!(out.shape(), &[3, 2, 1]);
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(out.get(&[i, j, 0]), i != 1 && j == 1);
            }
        }
    }

    #[test]
    fn contract_zero_core() {
        let core = BitTensor::zeros(&[2, 2, 2]).unwrap();
        let left = BitTensor::ones(&[3, 2]).unwrap();
        let right = BitTensor::ones(&[2, 2, 2]).unwrap();
        let out = tensor_contract(&core, &left, &right).unwrap();
        assert_eq!(out.shape(), &[3, 2, 2, 2]);
        assert_eq!(out.count_ones(), 0);
    }

    #[test]
    fn contract_rejects_rank_mismatch() {
        let core = BitTensor::zeros(&[1, 2, 2]).unwrap();
        let left = BitTensor::ones(&[3, 3]).unwrap();
        let right = BitTensor::ones(&[2, 2]).unwrap();
        assert!(tensor_contract(&core, &left, &right).is_err());
    }
}
