use super::vector::{words_for, BitVector, WORD};
use crate::error::{Error, Result};

/// A Boolean matrix over the OR-AND semiring.
///
/// Rows are stored packed, each padded to a whole number of words, so a
/// product row is an OR of selected rows of the right operand.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            words: vec![0; rows * stride],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| true)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| i == j)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                if f(i, j) {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    /// Builds a matrix from nested 0/1 rows.
    ///
    /// # Panics
    ///
    /// Panics if the rows are ragged.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        assert!(
            rows.iter().all(|r| r.as_ref().len() == cols),
            "ragged rows"
        );
        Self::from_fn(rows.len(), cols, |i, j| rows[i].as_ref()[j] != 0)
    }

    /// Interprets `bits` as a row-major `rows x cols` matrix.
    pub fn from_row_major(rows: usize, cols: usize, bits: &BitVector) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} bits cannot fill a {rows}x{cols} matrix",
                bits.len()
            )));
        }
        let mut m = Self::zeros(rows, cols);
        for idx in bits.iter_ones() {
            m.set(idx / cols, idx % cols, true);
        }
        Ok(m)
    }

    /// Row-major linearization of the entries.
    pub fn to_row_major(&self) -> BitVector {
        let mut v = BitVector::zeros(self.rows * self.cols);
        for i in 0..self.rows {
            for j in self.row_ones(i) {
                v.set(i * self.cols + j, true);
            }
        }
        v
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of range");
        (self.words[i * self.stride + j / WORD] >> (j % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of range");
        let w = &mut self.words[i * self.stride + j / WORD];
        let mask = 1u64 << (j % WORD);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub(crate) fn row_words(&self, i: usize) -> &[u64] {
        &self.words[i * self.stride..(i + 1) * self.stride]
    }

    pub fn row(&self, i: usize) -> BitVector {
        BitVector::from_words(self.cols, self.row_words(i).to_vec())
    }

    pub fn row_ones(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row_words(i).iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * WORD + tz)
            })
        })
    }

    pub fn row_weight(&self, i: usize) -> usize {
        self.row_words(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn column(&self, j: usize) -> BitVector {
        let mut v = BitVector::zeros(self.rows);
        for i in 0..self.rows {
            if self.get(i, j) {
                v.set(i, true);
            }
        }
        v
    }

    pub fn set_column(&mut self, j: usize, col: &BitVector) {
        assert_eq!(col.len(), self.rows, "column length mismatch");
        for i in 0..self.rows {
            self.set(i, j, col.get(i));
        }
    }

    /// Assembles a `rows x columns.len()` matrix from column vectors.
    pub fn from_columns(rows: usize, columns: &[BitVector]) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::shape(format!(
                    "column {j} has length {}, expected {rows}",
                    col.len()
                )));
            }
            for i in col.iter_ones() {
                m.set(i, j, true);
            }
        }
        Ok(m)
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in self.row_ones(i) {
                t.set(j, i, true);
            }
        }
        t
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Boolean product: `out[i][j] = OR_l (self[i][l] AND other[l][j])`.
    pub fn matmul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.rows {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        let stride = out.stride;
        for i in 0..self.rows {
            let dst = &mut out.words[i * stride..(i + 1) * stride];
            for l in self.row_ones(i) {
                for (d, s) in dst.iter_mut().zip(other.row_words(l)) {
                    *d |= s;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, y: &BitVector) -> Result<BitVector> {
        if self.cols != y.len() {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} matrix by vector of length {}",
                self.rows,
                self.cols,
                y.len()
            )));
        }
        let mut out = BitVector::zeros(self.rows);
        for i in 0..self.rows {
            let hit = self
                .row_words(i)
                .iter()
                .zip(y.words())
                .any(|(a, b)| a & b != 0);
            if hit {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    pub fn hamming(&self, other: &BitMatrix) -> Result<usize> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(format!(
                "hamming distance of {}x{} and {}x{} matrices",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{}", u8::from(self.get(i, j)))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Boolean matrix product; see [`BitMatrix::matmul`].
pub fn bool_matmul(a: &BitMatrix, b: &BitMatrix) -> Result<BitMatrix> {
    a.matmul(b)
}

/// Boolean matrix-vector product.
pub fn bool_matvec(a: &BitMatrix, y: &BitVector) -> Result<BitVector> {
    a.matvec(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_neutral() {
        let b = BitMatrix::from_rows(&[[1, 0, 1], [0, 1, 1]]);
        assert_eq!(bool_matmul(&BitMatrix::identity(2), &b).unwrap(), b);
    }

    #[test]
    fn hand_evaluated_product() {
        let a = BitMatrix::from_rows(&[[1, 1], [0, 1]]);
        let b = BitMatrix::identity(2);
        assert_eq!(
            bool_matmul(&a, &b).unwrap(),
            BitMatrix::from_rows(&[[1, 1], [0, 1]])
        );
    }

    #[test]
    fn zero_annihilates() {
        let out = bool_matmul(&BitMatrix::ones(3, 2), &BitMatrix::zeros(2, 3)).unwrap();
        assert_eq!(out, BitMatrix::zeros(3, 3));
    }

    #[test]
    fn matmul_rejects_mismatch() {
        assert!(matches!(
            bool_matmul(&BitMatrix::zeros(2, 3), &BitMatrix::zeros(2, 3)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn matvec_examples() {
        let id = BitMatrix::identity(3);
        let y = BitVector::from_u8(&[1, 0, 1]);
        assert_eq!(bool_matvec(&id, &y).unwrap(), y);

        let a = BitMatrix::from_rows(&[[1, 0], [1, 1]]);
        assert_eq!(
            bool_matvec(&a, &BitVector::from_u8(&[1, 0])).unwrap(),
            BitVector::from_u8(&[1, 1])
        );
        assert_eq!(
            bool_matvec(&a, &BitVector::from_u8(&[0, 0])).unwrap(),
            BitVector::from_u8(&[0, 0])
        );
        assert!(bool_matvec(&a, &BitVector::zeros(3)).is_err());
    }

    #[test]
    fn complement_distance() {
        let d = BitMatrix::ones(2, 2).hamming(&BitMatrix::zeros(2, 2)).unwrap();
        assert_eq!(d, 4);
    }

    #[test]
    fn wide_rows_cross_word_boundaries() {
        let a = BitMatrix::from_fn(3, 130, |i, j| (i + j) % 7 == 0);
        let t = a.transpose().transpose();
        assert_eq!(a, t);
        let rm = a.to_row_major();
        assert_eq!(BitMatrix::from_row_major(3, 130, &rm).unwrap(), a);
    }
}
