use num_complex::Complex64;

use super::{FockOperator, KrausChannel, OperatorKind, TRUNCATION_BUDGET};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{c, CMatrix, CVector};

/// Unnormalized `sum_k |kk>` on `dim` levels.
pub fn maximally_entangled(dim: usize) -> CVector {
    let mut v = CVector::zeros(dim * dim);
    for k in 0..dim {
        v[k * dim + k] = c(1.0, 0.0);
    }
    v
}

/// `sum_k r_k |kk>`.
pub fn schmidt_vector(r: &[f64]) -> CVector {
    let dim = r.len();
    let mut v = CVector::zeros(dim * dim);
    for (k, &rk) in r.iter().enumerate() {
        v[k * dim + k] = c(rk, 0.0);
    }
    v
}

/// `(I (x) E)(|Phi+><Phi+|)` with unnormalized `|Phi+>`.
pub fn choi_from_channel(ch: &KrausChannel, exec: Exec) -> Result<FockOperator> {
    let out = ch.one_sided_apply_pure(&maximally_entangled(ch.dim()), exec)?;
    Ok(out.with_kind(OperatorKind::Choi))
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::DomainError("squeezing parameter q (need 0 < q < 1)"));
    }
    Ok(())
}

/// `T(q) = diag(c_q q^k)`, `k = 0..=cutoff`.
pub fn t_operator(q: f64, cutoff: usize) -> Result<FockOperator> {
    check_q(q)?;
    let cq = (1.0 - q * q).sqrt();
    let r: Vec<f64> = (0..=cutoff).map(|k| cq * q.powi(k as i32)).collect();
    t_operator_finite(&r)
}

/// `T({r_k}) = diag(r_k)`. All weights must be non-zero so the inverse exists.
pub fn t_operator_finite(r: &[f64]) -> Result<FockOperator> {
    check_weights(r)?;
    let d = CVector::from_iterator(r.len(), r.iter().map(|&x| c(x, 0.0)));
    FockOperator::new(r.len(), 1, OperatorKind::DiagonalMap, CMatrix::from_diagonal(&d))
}

fn check_weights(r: &[f64]) -> Result<()> {
    if r.is_empty() {
        return Err(Error::DimensionMismatch {
            what: "Schmidt weights",
            expected: 1,
            found: 0,
        });
    }
    if let Some(k) = r.iter().position(|&x| x == 0.0) {
        return Err(Error::ZeroWeight(k));
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("Schmidt weights"));
    }
    Ok(())
}

/// Largest entry of `T^-1(q)` on levels `0..=cutoff`: `(c_q q^cutoff)^-1`.
pub fn amplification(q: f64, cutoff: usize) -> f64 {
    1.0 / ((1.0 - q * q).sqrt() * q.powi(cutoff as i32))
}

/// `(T^-1 (x) I) Omega (T^-1 (x) I)` for diagonal weights `r`.
fn unfilter(omega: &FockOperator, r: &[f64]) -> Result<FockOperator> {
    omega.require_two_mode()?;
    let d = omega.dim();
    if r.len() != d {
        return Err(Error::DimensionMismatch {
            what: "Schmidt weights",
            expected: d,
            found: r.len(),
        });
    }
    check_weights(r)?;
    let m = omega.matrix();
    let out = CMatrix::from_fn(d * d, d * d, |i, j| m[(i, j)] / (r[i / d] * r[j / d]));
    FockOperator::new(d, 2, OperatorKind::Choi, out)
}

/// Recovers the channel operator from `Omega_q = (I (x) E)(|chi(q)><chi(q)|)`.
///
/// Truncated states are accurate to [`TRUNCATION_BUDGET`]; the inverse
/// filter multiplies that by up to [`amplification`]. If the product
/// exceeds `tol` the reconstruction is refused.
pub fn tmss_reconstruct(omega: &FockOperator, q: f64, tol: f64) -> Result<FockOperator> {
    check_q(q)?;
    let cutoff = omega.dim() - 1;
    let amp = amplification(q, cutoff);
    let bound = amp * TRUNCATION_BUDGET;
    if !(bound <= tol) {
        return Err(Error::AmplificationOverflow {
            amplification: amp,
            bound,
            tolerance: tol,
        });
    }
    let cq = (1.0 - q * q).sqrt();
    let r: Vec<f64> = (0..=cutoff).map(|k| cq * q.powi(k as i32)).collect();
    unfilter(omega, &r)
}

/// Exact inverse of the finite-dimensional filter.
pub fn qudit_reconstruct(omega: &FockOperator, r: &[f64]) -> Result<FockOperator> {
    unfilter(omega, r)
}

/// `rho_out = tr_a[(|psi'><psi'| (x) I) Omega]` with `psi'_k = c_k* / r_k`.
pub fn qudit_predict(omega: &FockOperator, r: &[f64], coeffs: &[Complex64]) -> Result<FockOperator> {
    check_weights(r)?;
    check_input(coeffs, omega.dim())?;
    let psi: Vec<Complex64> = coeffs.iter().zip(r).map(|(ck, rk)| ck / *rk).collect();
    partial_element(omega, &psi)
}

/// `rho_out = <psi*| rho_E |psi*>_a` for a normalized input with Fock
/// coefficients `coeffs`.
pub fn predict_from_choi(choi: &FockOperator, coeffs: &[Complex64]) -> Result<FockOperator> {
    check_input(coeffs, choi.dim())?;
    partial_element(choi, coeffs)
}

/// Mixed-input version: `rho_out = tr_a[(rho_in^T (x) I) rho_E]`.
pub fn predict_from_choi_density(choi: &FockOperator, rho_in: &FockOperator) -> Result<FockOperator> {
    choi.require_two_mode()?;
    let d = choi.dim();
    if rho_in.dim() != d || rho_in.modes() != 1 {
        return Err(Error::DimensionMismatch {
            what: "input state dimension",
            expected: d,
            found: rho_in.matrix().nrows(),
        });
    }
    let m = choi.matrix();
    let rin = rho_in.matrix();
    let mut out = CMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            let w = rin[(j, k)];
            if w.norm() == 0.0 {
                continue;
            }
            out += m.view((j * d, k * d), (d, d)) * w;
        }
    }
    FockOperator::new(d, 1, OperatorKind::Density, out)
}

fn check_input(coeffs: &[Complex64], dim: usize) -> Result<()> {
    if coeffs.len() != dim {
        return Err(Error::DimensionMismatch {
            what: "input state dimension",
            expected: dim,
            found: coeffs.len(),
        });
    }
    let n: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::DomainError("input state must be normalized"));
    }
    Ok(())
}

/// `out[m, n] = sum_jk v_j Omega[(j,m),(k,n)] v_k*`.
fn partial_element(omega: &FockOperator, v: &[Complex64]) -> Result<FockOperator> {
    omega.require_two_mode()?;
    let d = omega.dim();
    if v.len() != d {
        return Err(Error::DimensionMismatch {
            what: "input state dimension",
            expected: d,
            found: v.len(),
        });
    }
    let m = omega.matrix();
    let mut out = CMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            let w = v[j] * v[k].conj();
            if w.norm() == 0.0 {
                continue;
            }
            out += m.view((j * d, k * d), (d, d)) * w;
        }
    }
    FockOperator::new(d, 1, OperatorKind::Density, out)
}
