//! Dense complex linear algebra used by the reconstruction solvers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Pivots below this fraction of the largest entry are treated as zero.
pub const PIVOT_TOL: f64 = 1e-12;
/// Condition estimates above this raise the ill-conditioned warning flag.
pub const COND_WARN: f64 = 1e8;

pub const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Output of [`solve_linear`].
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub solution: CMatrix,
    /// Frobenius norm of `M x - rhs`.
    pub residual_norm: f64,
    /// 2-norm condition number, sigma_max / sigma_min.
    pub condition: f64,
    pub ill_conditioned: bool,
}

/// Solves `M x = rhs` for every column of `rhs`.
///
/// Square systems use LU with partial pivoting; tall systems return the
/// least-squares minimizer via SVD.
pub fn solve_linear(m: &CMatrix, rhs: &CMatrix) -> Result<LinearSolution> {
    let (rows, cols) = m.shape();
    if rows < cols {
        return Err(Error::DimensionMismatch {
            what: "system rows (need rows >= cols)",
            expected: cols,
            found: rows,
        });
    }
    if rhs.nrows() != rows {
        return Err(Error::DimensionMismatch {
            what: "right-hand side rows",
            expected: rows,
            found: rhs.nrows(),
        });
    }
    if !all_finite(m) || !all_finite(rhs) {
        return Err(Error::NonFinite("linear system"));
    }
    let max_entry = max_abs(m);
    let threshold = PIVOT_TOL * max_entry;
    let sv = m.clone().singular_values();
    let s_max = sv.max();
    let s_min = sv.min();
    let condition = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };

    let solution = if rows == cols {
        let lu = m.clone().lu();
        let u = lu.u();
        let pivot = (0..cols).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        if max_entry == 0.0 || pivot < threshold {
            return Err(Error::Singular { pivot, threshold });
        }
        lu.solve(rhs).ok_or(Error::Singular { pivot, threshold })?
    } else {
        if max_entry == 0.0 || s_min < threshold {
            return Err(Error::Singular { pivot: s_min, threshold });
        }
        let svd = m.clone().svd(true, true);
        svd.solve(rhs, 0.0).map_err(|_| Error::Singular { pivot: s_min, threshold })?
    };
    let residual_norm = (m * &solution - rhs).norm();
    Ok(LinearSolution {
        solution,
        residual_norm,
        condition,
        ill_conditioned: condition > COND_WARN,
    })
}

/// Product of singular values: `|det M|` for square matrices, the
/// parallelotope volume `sqrt(det(M^H M))` for tall ones.
pub fn volume(m: &CMatrix) -> f64 {
    m.clone().singular_values().iter().product()
}

/// [`volume`] divided by the product of column norms (Hadamard's bound), so
/// the value lies in `[0, 1]` regardless of probe amplitude scale.
pub fn relative_volume(m: &CMatrix) -> f64 {
    let scale: f64 = m.column_iter().map(|col| col.norm()).product();
    if scale == 0.0 {
        0.0
    } else {
        volume(m) / scale
    }
}

pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.clone().singular_values();
    let s_min = sv.min();
    if s_min > 0.0 {
        sv.max() / s_min
    } else {
        f64::INFINITY
    }
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entry of `|M - M^T|` relative to `max(1, |M|_max)`.
pub fn symmetric_defect(m: &CMatrix) -> f64 {
    (m - m.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max) / max_abs(m).max(1.0)
}

/// Largest entry of `|M - M^H|` relative to `max(1, |M|_max)`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max) / max_abs(m).max(1.0)
}

pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.transpose()).map(|z| z * 0.5)
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// `(H)^(-1/2)` for a Hermitian positive-definite matrix.
pub fn hermitian_inv_sqrt(h: &CMatrix) -> Option<CMatrix> {
    let eig = nalgebra::SymmetricEigen::new(hermitize(h));
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return None;
    }
    let d = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| c(l.sqrt().recip(), 0.0)));
    Some(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}
