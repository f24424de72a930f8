//! Quadratic polynomials `c + l.w + 1/2 w^T M w` over complex symbols `w`,
//! where a symbol and its conjugate are independent slots (the holomorphic
//! split used when evaluating normally ordered symbols between different
//! coherent states).
//!
//! The only non-trivial operation is [`Quadratic::integrate_leading`], the
//! closed-form Gaussian integral over real variables with a complex
//! symmetric kernel.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

#[derive(Debug, Clone)]
pub struct Quadratic {
    pub constant: Complex64,
    pub linear: CVector,
    /// Symmetric.
    pub quad: CMatrix,
}

impl Quadratic {
    pub fn zeros(n: usize) -> Self {
        Quadratic {
            constant: Complex64::new(0.0, 0.0),
            linear: CVector::zeros(n),
            quad: CMatrix::zeros(n, n),
        }
    }

    pub fn len(&self) -> usize {
        self.linear.len()
    }

    pub fn is_empty(&self) -> bool {
        self.linear.is_empty()
    }

    /// Adds `coef * w_i * w_j`.
    pub fn add_product(&mut self, i: usize, j: usize, coef: Complex64) {
        if i == j {
            self.quad[(i, i)] += coef * 2.0;
        } else {
            self.quad[(i, j)] += coef;
            self.quad[(j, i)] += coef;
        }
    }

    pub fn add_linear(&mut self, i: usize, coef: Complex64) {
        self.linear[i] += coef;
    }

    pub fn eval(&self, w: &CVector) -> Complex64 {
        self.constant + self.linear.dot(w) + (w.transpose() * &self.quad * w)[(0, 0)] * 0.5
    }

    /// Re-expresses the polynomial in new variables `w = T w'`.
    pub fn substitute(&self, t: &CMatrix) -> Quadratic {
        Quadratic {
            constant: self.constant,
            linear: t.transpose() * &self.linear,
            quad: t.transpose() * &self.quad * t,
        }
    }

    /// Integrates `exp(self)` over the first `n` variables, taken as real
    /// coordinates on all of `R^n`. Returns the polynomial in the remaining
    /// variables whose exponential equals the integral, prefactor included.
    ///
    /// Requires the real part of the kernel `A = -M[..n, ..n]` to be positive
    /// definite; then `det(A)^(1/2)` is the product of principal square roots
    /// of its eigenvalues, all of which lie in the right half plane.
    pub fn integrate_leading(&self, n: usize) -> Result<Quadratic> {
        let total = self.len();
        let rest = total - n;
        let a = -self.quad.view((0, 0), (n, n)).into_owned();
        let re_a = a.map(|z| z.re);
        let re_eig = SymmetricEigen::new(re_a.clone()).eigenvalues;
        let min_eig = re_eig.min();
        if !(min_eig > 1e-12) {
            return Err(Error::NotIntegrable { max_eigenvalue: -min_eig });
        }
        let eig = a.clone().eigenvalues().ok_or(Error::NotIntegrable { max_eigenvalue: -min_eig })?;
        let log_det: Complex64 = eig.iter().map(|l| l.ln()).sum();
        let a_inv = a.clone().try_inverse().ok_or(Error::NotIntegrable { max_eigenvalue: -min_eig })?;

        let b = self.linear.rows(0, n).into_owned();
        let b_cross = self.quad.view((0, n), (n, rest)).into_owned();
        let a_inv_b = &a_inv * &b;
        let constant = self.constant + (b.transpose() * &a_inv_b)[(0, 0)] * 0.5 + Complex64::new(0.5 * n as f64 * (2.0 * PI).ln(), 0.0) - log_det * 0.5;
        let linear = self.linear.rows(n, rest).into_owned() + b_cross.transpose() * &a_inv_b;
        let quad = self.quad.view((n, n), (rest, rest)).into_owned() + b_cross.transpose() * &a_inv * &b_cross;
        Ok(Quadratic {
            constant,
            linear,
            quad: crate::linalg::symmetrize(&quad),
        })
    }
}
