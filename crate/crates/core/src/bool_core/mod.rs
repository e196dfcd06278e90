//! Boolean (OR-AND semiring) vectors, matrices and tensors.
//!
//! All multiway data is linearized row-major with the first index slowest,
//! so reshaping never moves bits.

mod io;
mod matrix;
mod tensor;
mod vector;

pub use io::{parse_tensor, read_matrix, read_tensor, tensor_from_text, tensor_to_text};
pub use matrix::{bool_matmul, bool_matvec, BitMatrix};
pub use tensor::{
    matricize_split, move_q_to_cols, move_q_to_rows, reshape, tensor_contract, BitTensor,
};
pub use vector::BitVector;
