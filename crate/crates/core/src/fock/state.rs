use num_complex::Complex64;

use super::{ln_factorial, FockOperator, OperatorKind, TAIL_TOL};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector};

/// Coherent amplitude `e^{-|a|^2/2} a^n / sqrt(n!)`.
fn coherent_component(alpha: Complex64, n: usize) -> Complex64 {
    if n == 0 {
        return c((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    }
    if alpha.norm() == 0.0 {
        return c(0.0, 0.0);
    }
    let ln_mag = -0.5 * alpha.norm_sqr() + n as f64 * alpha.norm().ln() - 0.5 * ln_factorial(n);
    Complex64::from_polar(ln_mag.exp(), n as f64 * alpha.arg())
}

/// Norm of the coherent-state components above `cutoff`.
pub fn coherent_tail(alpha: Complex64, cutoff: usize) -> f64 {
    let r2 = alpha.norm_sqr();
    let stop = cutoff + 200 + (10.0 * r2) as usize;
    let mut tail = 0.0;
    for n in cutoff + 1..stop {
        let t = coherent_component(alpha, n).norm_sqr();
        tail += t;
        if n as f64 > r2 && t < 1e-40 * tail.max(1e-300) {
            break;
        }
    }
    tail.sqrt()
}

/// `|alpha>` on levels `0..=cutoff`. Recurrence up to level 30, log-space
/// above it.
pub fn coherent_vector(alpha: Complex64, cutoff: usize) -> Result<CVector> {
    coherent_vector_with_tol(alpha, cutoff, TAIL_TOL)
}

/// [`coherent_vector`] with an explicit bound on the discarded amplitude norm.
pub fn coherent_vector_with_tol(alpha: Complex64, cutoff: usize, tol: f64) -> Result<CVector> {
    let tail = coherent_tail(alpha, cutoff);
    if !(tail <= tol) {
        return Err(Error::CutoffTooSmall { cutoff, tail });
    }
    let mut v = CVector::zeros(cutoff + 1);
    v[0] = coherent_component(alpha, 0);
    for n in 1..=cutoff {
        v[n] = if n <= 30 {
            v[n - 1] * alpha / (n as f64).sqrt()
        } else {
            coherent_component(alpha, n)
        };
    }
    Ok(v)
}

/// Normalized state from Fock coefficients.
pub fn fock_vector(coeffs: &[Complex64]) -> Result<CVector> {
    let v = CVector::from_column_slice(coeffs);
    let n = v.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::DomainError("Fock coefficient vector norm"));
    }
    Ok(v / c(n, 0.0))
}

/// `c_q sum_k q^k |kk>` truncated at `cutoff`, in a-major ordering.
pub fn tmss_vector(q: f64, cutoff: usize) -> Result<CVector> {
    tmss_vector_with_tol(q, cutoff, TAIL_TOL)
}

/// [`tmss_vector`] with an explicit bound on the discarded amplitude norm.
pub fn tmss_vector_with_tol(q: f64, cutoff: usize, tol: f64) -> Result<CVector> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::DomainError("squeezing parameter q (need 0 < q < 1)"));
    }
    // discarded norm: sqrt(sum_{k>N} (1-q^2) q^{2k}) = q^{N+1}
    let tail = q.powi(cutoff as i32 + 1);
    if !(tail <= tol) {
        return Err(Error::CutoffTooSmall { cutoff, tail });
    }
    let dim = cutoff + 1;
    let cq = (1.0 - q * q).sqrt();
    let mut v = CVector::zeros(dim * dim);
    for k in 0..dim {
        v[k * dim + k] = c(cq * q.powi(k as i32), 0.0);
    }
    Ok(v)
}

/// Matrix of the displacement operator `D(alpha)` restricted to the first
/// `dim` levels. Entries are those of the infinite operator, from
/// `D = e^{-|a|^2/2} e^{alpha a^dag} e^{-alpha* a}`.
pub fn displacement(alpha: Complex64, dim: usize) -> CMatrix {
    let pref = (-0.5 * alpha.norm_sqr()).exp();
    let lf: Vec<f64> = (0..dim).map(ln_factorial).collect();
    CMatrix::from_fn(dim, dim, |m, n| {
        let mut s = c(0.0, 0.0);
        for j in 0..=m.min(n) {
            let mag = 0.5 * (lf[m] + lf[n]) - lf[j] - lf[m - j] - lf[n - j];
            s += alpha.powu((m - j) as u32) * (-alpha.conj()).powu((n - j) as u32) * mag.exp();
        }
        s * pref
    })
}

/// `exp(-r/2 a^dag^2 + r/2 a^2)` computed by matrix exponential on
/// `work_dim` levels. Only the top-left block well inside `work_dim` is
/// accurate.
pub fn squeeze_operator(r: f64, work_dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(work_dim, work_dim);
    for n in 1..work_dim {
        a[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
    }
    let a2 = &a * &a;
    let gen = (&a2 - a2.transpose()).map(|z| z * (0.5 * r));
    gen.exp()
}

/// `S(r) D(z)|0>` truncated at `cutoff`, built by brute force on a larger
/// working space (squeeze operator by matrix exponential, displacement by
/// the coherent vector). Squeezed tails decay only like `tanh(r)^n`, so the
/// accepted discarded norm `tol` is explicit.
pub fn displaced_squeezed_vector(r: f64, z: Complex64, cutoff: usize, tol: f64) -> Result<CVector> {
    let work = 3 * (cutoff + 1) + 40;
    let s = squeeze_operator(r, work);
    let full = s * coherent_vector(z, work - 1)?;
    let tail = full.rows(cutoff + 1, work - cutoff - 1).norm();
    if !(tail <= tol) {
        return Err(Error::CutoffTooSmall { cutoff, tail });
    }
    Ok(full.rows(0, cutoff + 1).into_owned())
}

/// Thermal state `sum_n nbar^n/(nbar+1)^{n+1} |n><n|` on `0..=cutoff`.
/// The discarded trace must stay below [`TAIL_TOL`].
pub fn thermal_density(nbar: f64, cutoff: usize) -> Result<FockOperator> {
    if !(nbar >= 0.0) {
        return Err(Error::DomainError("mean photon number"));
    }
    let ratio = nbar / (nbar + 1.0);
    let tail = ratio.powi(cutoff as i32 + 1);
    if tail > TAIL_TOL {
        return Err(Error::CutoffTooSmall { cutoff, tail });
    }
    let d = CVector::from_fn(cutoff + 1, |n, _| c(ratio.powi(n as i32) / (nbar + 1.0), 0.0));
    FockOperator::new(cutoff + 1, 1, OperatorKind::Density, CMatrix::from_diagonal(&d))
}

/// `<Z|rho|Z>` with tensor-product coherent vectors.
pub fn q_eval(rho: &FockOperator, z: &[Complex64]) -> Result<f64> {
    if z.len() != rho.modes() {
        return Err(Error::DimensionMismatch {
            what: "Q argument modes",
            expected: rho.modes(),
            found: z.len(),
        });
    }
    let cutoff = rho.dim() - 1;
    let mut v = CVector::from_element(1, c(1.0, 0.0));
    for &zi in z {
        let ci = coherent_vector(zi, cutoff)?;
        v = v.kronecker(&ci);
    }
    Ok(v.dotc(&(rho.matrix() * &v)).re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_vector() {
        let v = coherent_vector(c(0.0, 0.0), 10).unwrap();
        assert_eq!(v[0], c(1.0, 0.0));
        assert!(v.iter().skip(1).all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn coherent_normalized() {
        let v = coherent_vector(c(1.0, 0.0), 30).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        let w = coherent_vector(c(1.2, -0.9), 40).unwrap();
        assert!((w.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_overlap_closed_form() {
        // <a|b> = exp(-(|a|^2 + |b|^2)/2 + a* b)
        let (a, b) = (c(1.0, 0.0), c(0.0, 1.0));
        let va = coherent_vector(a, 40).unwrap();
        let vb = coherent_vector(b, 40).unwrap();
        let expect = (c(-1.0, 0.0) + a.conj() * b).exp();
        assert!((va.dotc(&vb) - expect).norm() < 1e-14);
    }

    #[test]
    fn coherent_cutoff_too_small() {
        assert!(matches!(coherent_vector(c(3.0, 0.0), 10), Err(Error::CutoffTooSmall { .. })));
    }

    #[test]
    fn log_space_branch_is_continuous() {
        let a = c(2.0, 0.5);
        let v = coherent_vector(a, 60).unwrap();
        let rec = v[30] * a / 31f64.sqrt();
        assert!((rec - v[31]).norm() < 1e-14 * v[30].norm().max(1e-300) + 1e-300);
    }

    #[test]
    fn tmss_components() {
        let v = tmss_vector(0.5, 40).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!((v[0] - c(0.75f64.sqrt(), 0.0)).norm() < 1e-15);
        let d = 41;
        for k in 0..5 {
            let ratio = v[(k + 1) * d + k + 1].re / v[k * d + k].re;
            assert!((ratio - 0.5).abs() < 1e-15);
        }
        assert!(tmss_vector(1.0, 40).is_err());
        assert!(tmss_vector(0.9, 20).is_err());
        assert!(tmss_vector(0.5, 30).is_err());
        assert!(tmss_vector_with_tol(0.5, 30, 1e-9).is_ok());
    }

    #[test]
    fn tmss_at_q04_cutoff30_is_adequate() {
        assert!(tmss_vector(0.4, 30).is_ok());
    }

    #[test]
    fn displacement_of_vacuum_is_coherent() {
        let a = c(0.7, -0.4);
        let d = displacement(a, 41);
        let mut vac = CVector::zeros(41);
        vac[0] = c(1.0, 0.0);
        let v = d * vac;
        let w = coherent_vector(a, 40).unwrap();
        assert!((v - w).norm() < 1e-13);
    }

    #[test]
    fn displacement_is_unitary_on_interior() {
        let d = displacement(c(0.5, 0.5), 60);
        let p = d.adjoint() * &d;
        for i in 0..20 {
            for j in 0..20 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p[(i, j)] - c(e, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn squeezed_vacuum_has_even_support() {
        let v = displaced_squeezed_vector(0.5, c(0.0, 0.0), 40, 1e-7).unwrap();
        assert!(displaced_squeezed_vector(0.5, c(0.0, 0.0), 40, 1e-12).is_err());
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!(v.iter().skip(1).step_by(2).all(|z| z.norm() < 1e-14));
        // <0|S(r)|0> = 1/sqrt(cosh r)
        assert!((v[0].re - 1.0 / 0.5f64.cosh().sqrt()).abs() < 1e-12);
        // <2|S(r)|0> = -tanh(r) / (sqrt(2) sqrt(cosh r)) for this sign convention
        let expect = -0.5f64.tanh() / (2f64.sqrt() * 0.5f64.cosh().sqrt());
        assert!((v[2].re - expect).abs() < 1e-12);
    }

    #[test]
    fn q_of_simple_states() {
        let mut vac = CVector::zeros(31);
        vac[0] = c(1.0, 0.0);
        let rho = FockOperator::pure(&vac, 31, 1).unwrap();
        assert!((q_eval(&rho, &[c(0.0, 0.0)]).unwrap() - 1.0).abs() < 1e-15);

        let coh = FockOperator::pure(&coherent_vector(c(1.0, 0.0), 30).unwrap(), 31, 1).unwrap();
        assert!((q_eval(&coh, &[c(1.0, 0.0)]).unwrap() - 1.0).abs() < 1e-12);

        // Q(0) = 1/(nbar+1) from the geometric series
        let th = thermal_density(1.0, 40).unwrap();
        assert!((q_eval(&th, &[c(0.0, 0.0)]).unwrap() - 0.5).abs() < 1e-15);
    }
}
