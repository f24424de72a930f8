//! JSON helpers. Complex numbers are always `[re, im]` pairs; matrices are
//! flat row-major arrays of pairs.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

pub type Pair = [f64; 2];

pub fn pair(z: Complex64) -> Pair {
    [z.re, z.im]
}

pub fn complex(p: Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

pub fn vector_pairs(v: &CVector) -> Vec<Pair> {
    v.iter().copied().map(pair).collect()
}

pub fn vector_from_pairs(p: &[Pair]) -> CVector {
    CVector::from_iterator(p.len(), p.iter().copied().map(complex))
}

pub fn matrix_pairs(m: &CMatrix) -> Vec<Pair> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(pair(m[(i, j)]));
        }
    }
    out
}

pub fn matrix_from_pairs(rows: usize, cols: usize, p: &[Pair], what: &'static str) -> Result<CMatrix> {
    if p.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            what,
            expected: rows * cols,
            found: p.len(),
        });
    }
    Ok(CMatrix::from_row_iterator(rows, cols, p.iter().copied().map(complex)))
}
