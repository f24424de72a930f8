//! Gaussian Q-functions.
//!
//! A [`GaussianQForm`] over `n` complex variables `Z` stores the exponent
//!
//! ```text
//! c0 + L + L* + S + S* + S0,   L = gamma . Z,  S = 1/2 Z^T X Z,  S0 = Z^H Y Z
//! ```
//!
//! with `X = X^T` and `Y = Y^H`. The Q-function is `Q(Z) = <Z|rho|Z>` with no
//! `1/pi^n` prefactor; that factor lives in [`GaussianQForm::gaussian_integral`].
//!
//! Real coordinates: `Z_j = x_j + i y_j`, `d^2 Z = dx dy`, and the real vector
//! is ordered `v = (x_1..x_n, y_1..y_n)`. Every integral in the crate goes
//! through [`GaussianQForm::real_quadratic`].

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::wire::{self, Pair};

/// Inputs whose asymmetry exceeds this (relative) are rejected.
pub const STRUCTURE_TOL: f64 = 1e-12;
/// Negative-definiteness threshold for the real quadratic form.
pub const VALIDITY_TOL: f64 = 1e-12;
/// Imaginary part of the exponent above which a form is declared corrupted.
pub const NON_REAL_TOL: f64 = 1e-9;

/// Which modes belong to the input-reference side (`a`) and the output
/// side (`b`) of a Choi form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

impl Partition {
    /// `a = 0..k`, `b = k..2k`.
    pub fn contiguous(k: usize) -> Self {
        Partition {
            a: (0..k).collect(),
            b: (k..2 * k).collect(),
        }
    }

    fn check(&self, n_modes: usize) -> Result<()> {
        let mut seen = vec![false; n_modes];
        for &i in self.a.iter().chain(&self.b) {
            if i >= n_modes || seen[i] {
                return Err(Error::BadPartition { n_modes });
            }
            seen[i] = true;
        }
        if seen.iter().all(|&s| s) && self.a.len() == self.b.len() {
            Ok(())
        } else {
            Err(Error::BadPartition { n_modes })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QFormWire", into = "QFormWire")]
pub struct GaussianQForm {
    c0: f64,
    gamma: CVector,
    x: CMatrix,
    y: CMatrix,
    partition: Option<Partition>,
}

/// The nine parameter blocks of a Choi form over `k + k` modes.
/// `X_ba = X_ab^T` and `Y_ba = Y_ab^H` are implied.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiBlocks {
    pub c0: f64,
    pub gamma_a: CVector,
    pub gamma_b: CVector,
    pub x_aa: CMatrix,
    pub x_ab: CMatrix,
    pub x_bb: CMatrix,
    pub y_aa: CMatrix,
    pub y_ab: CMatrix,
    pub y_bb: CMatrix,
}

impl ChoiBlocks {
    pub fn zeros(k: usize) -> Self {
        ChoiBlocks {
            c0: 0.0,
            gamma_a: CVector::zeros(k),
            gamma_b: CVector::zeros(k),
            x_aa: CMatrix::zeros(k, k),
            x_ab: CMatrix::zeros(k, k),
            x_bb: CMatrix::zeros(k, k),
            y_aa: CMatrix::zeros(k, k),
            y_ab: CMatrix::zeros(k, k),
            y_bb: CMatrix::zeros(k, k),
        }
    }

    pub fn k(&self) -> usize {
        self.gamma_a.len()
    }

    /// Largest absolute entry-wise difference over all blocks.
    pub fn max_deviation(&self, other: &ChoiBlocks) -> f64 {
        let m = |a: &CMatrix, b: &CMatrix| linalg::max_abs(&(a - b));
        let v = |a: &CVector, b: &CVector| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max);
        [
            (self.c0 - other.c0).abs(),
            v(&self.gamma_a, &other.gamma_a),
            v(&self.gamma_b, &other.gamma_b),
            m(&self.x_aa, &other.x_aa),
            m(&self.x_ab, &other.x_ab),
            m(&self.x_bb, &other.x_bb),
            m(&self.y_aa, &other.y_aa),
            m(&self.y_ab, &other.y_ab),
            m(&self.y_bb, &other.y_bb),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Named view, for reports and error messages.
    pub fn named(&self) -> Vec<(&'static str, CMatrix)> {
        let col = |v: &CVector| CMatrix::from_column_slice(v.len(), 1, v.as_slice());
        vec![
            ("c0", CMatrix::from_element(1, 1, c(self.c0, 0.0))),
            ("gamma_a", col(&self.gamma_a)),
            ("gamma_b", col(&self.gamma_b)),
            ("x_aa", self.x_aa.clone()),
            ("x_ab", self.x_ab.clone()),
            ("x_bb", self.x_bb.clone()),
            ("y_aa", self.y_aa.clone()),
            ("y_ab", self.y_ab.clone()),
            ("y_bb", self.y_bb.clone()),
        ]
    }
}

fn check_finite(m: &CMatrix, what: &'static str) -> Result<()> {
    if linalg::all_finite(m) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

impl GaussianQForm {
    /// Builds a form, rejecting asymmetric `X` / non-Hermitian `Y` beyond
    /// [`STRUCTURE_TOL`] and storing exactly symmetrized copies.
    pub fn new(c0: f64, gamma: CVector, x: CMatrix, y: CMatrix) -> Result<Self> {
        let n = gamma.len();
        for (what, m) in [("X", &x), ("Y", &y)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: n,
                    found: if m.nrows() != n { m.nrows() } else { m.ncols() },
                });
            }
        }
        if !c0.is_finite() {
            return Err(Error::NonFinite("c0"));
        }
        check_finite(&CMatrix::from_column_slice(n, 1, gamma.as_slice()), "gamma")?;
        check_finite(&x, "X")?;
        check_finite(&y, "Y")?;
        let xd = linalg::symmetric_defect(&x);
        if xd > STRUCTURE_TOL {
            return Err(Error::Asymmetric {
                what: "X",
                structure: "symmetric",
                asymmetry: xd,
            });
        }
        let yd = linalg::hermitian_defect(&y);
        if yd > STRUCTURE_TOL {
            return Err(Error::Asymmetric {
                what: "Y",
                structure: "Hermitian",
                asymmetry: yd,
            });
        }
        Ok(GaussianQForm {
            c0,
            gamma,
            x: linalg::symmetrize(&x),
            y: linalg::hermitize(&y),
            partition: None,
        })
    }

    pub fn with_partition(mut self, partition: Partition) -> Result<Self> {
        partition.check(self.n_modes())?;
        self.partition = Some(partition);
        Ok(self)
    }

    /// Assembles a Choi form with `a = 0..k`, `b = k..2k`.
    pub fn from_blocks(b: &ChoiBlocks) -> Result<Self> {
        let k = b.k();
        let mut gamma = CVector::zeros(2 * k);
        gamma.rows_mut(0, k).copy_from(&b.gamma_a);
        gamma.rows_mut(k, k).copy_from(&b.gamma_b);
        let mut x = CMatrix::zeros(2 * k, 2 * k);
        let mut y = CMatrix::zeros(2 * k, 2 * k);
        x.view_mut((0, 0), (k, k)).copy_from(&b.x_aa);
        x.view_mut((0, k), (k, k)).copy_from(&b.x_ab);
        x.view_mut((k, 0), (k, k)).copy_from(&b.x_ab.transpose());
        x.view_mut((k, k), (k, k)).copy_from(&b.x_bb);
        y.view_mut((0, 0), (k, k)).copy_from(&b.y_aa);
        y.view_mut((0, k), (k, k)).copy_from(&b.y_ab);
        y.view_mut((k, 0), (k, k)).copy_from(&b.y_ab.adjoint());
        y.view_mut((k, k), (k, k)).copy_from(&b.y_bb);
        GaussianQForm::new(b.c0, gamma, x, y)?.with_partition(Partition::contiguous(k))
    }

    /// Extracts the nine blocks; `None` without a partition.
    pub fn blocks(&self) -> Option<ChoiBlocks> {
        let p = self.partition.as_ref()?;
        let sub = |m: &CMatrix, r: &[usize], cidx: &[usize]| CMatrix::from_fn(r.len(), cidx.len(), |i, j| m[(r[i], cidx[j])]);
        let subv = |idx: &[usize]| CVector::from_iterator(idx.len(), idx.iter().map(|&i| self.gamma[i]));
        Some(ChoiBlocks {
            c0: self.c0,
            gamma_a: subv(&p.a),
            gamma_b: subv(&p.b),
            x_aa: sub(&self.x, &p.a, &p.a),
            x_ab: sub(&self.x, &p.a, &p.b),
            x_bb: sub(&self.x, &p.b, &p.b),
            y_aa: sub(&self.y, &p.a, &p.a),
            y_ab: sub(&self.y, &p.a, &p.b),
            y_bb: sub(&self.y, &p.b, &p.b),
        })
    }

    /// `|alpha_1 .. alpha_n>`: `Q(Z) = exp(-|Z - alpha|^2)`.
    pub fn coherent(alpha: &[Complex64]) -> Self {
        let n = alpha.len();
        GaussianQForm {
            c0: -alpha.iter().map(|a| a.norm_sqr()).sum::<f64>(),
            gamma: CVector::from_iterator(n, alpha.iter().map(|a| a.conj())),
            x: CMatrix::zeros(n, n),
            y: -CMatrix::identity(n, n),
            partition: None,
        }
    }

    pub fn vacuum(n: usize) -> Self {
        Self::coherent(&vec![c(0.0, 0.0); n])
    }

    /// Single-mode thermal state, `Q(Z) = exp(-|Z|^2/(nbar+1)) / (nbar+1)`.
    pub fn thermal(nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0) {
            return Err(Error::DomainError("mean photon number"));
        }
        let s = 1.0 / (nbar + 1.0);
        GaussianQForm::new(
            -(nbar + 1.0).ln(),
            CVector::zeros(1),
            CMatrix::zeros(1, 1),
            CMatrix::from_element(1, 1, c(-s, 0.0)),
        )
    }

    /// Normalized Q-form of `exp(-r/2 b^dag^2 + r/2 b^2) exp(z b^dag - z* b)|0>`
    /// for real `r`: `Q(W) ~ exp(-|W|^2 - tanh r Re(W^2) + 2 Re(z W*) / cosh r)`.
    pub fn displaced_squeezed(r: f64, z: Complex64) -> Result<Self> {
        let t = r.tanh();
        GaussianQForm::new(
            0.0,
            CVector::from_element(1, z.conj() / r.cosh()),
            CMatrix::from_element(1, 1, c(-t, 0.0)),
            CMatrix::from_element(1, 1, c(-1.0, 0.0)),
        )?
        .normalize()
    }

    pub fn n_modes(&self) -> usize {
        self.gamma.len()
    }
    pub fn c0(&self) -> f64 {
        self.c0
    }
    pub fn gamma(&self) -> &CVector {
        &self.gamma
    }
    pub fn x(&self) -> &CMatrix {
        &self.x
    }
    pub fn y(&self) -> &CMatrix {
        &self.y
    }
    pub fn partition(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }

    /// Copy with `c0` replaced.
    pub fn with_c0(&self, c0: f64) -> Self {
        GaussianQForm { c0, ..self.clone() }
    }

    fn check_len(&self, z: &[Complex64]) -> Result<()> {
        if z.len() != self.n_modes() {
            return Err(Error::DimensionMismatch {
                what: "Q-form argument",
                expected: self.n_modes(),
                found: z.len(),
            });
        }
        Ok(())
    }

    /// The exponent `c0 + L + L* + S + S* + S0` as a complex number, each term
    /// computed literally.
    pub fn exponent_complex(&self, z: &[Complex64]) -> Result<Complex64> {
        self.check_len(z)?;
        let zv = CVector::from_column_slice(z);
        let l = self.gamma.dot(&zv);
        let s = (zv.transpose() * &self.x * &zv)[(0, 0)] * 0.5;
        let s0 = zv.dotc(&(&self.y * &zv));
        Ok(c(self.c0, 0.0) + l + l.conj() + s + s.conj() + s0)
    }

    pub fn log_q(&self, z: &[Complex64]) -> Result<f64> {
        let e = self.exponent_complex(z)?;
        if e.im.abs() > NON_REAL_TOL {
            return Err(Error::NonRealExponent(e.im));
        }
        Ok(e.re)
    }

    /// `Q(Z)`.
    pub fn evaluate(&self, z: &[Complex64]) -> Result<f64> {
        Ok(self.log_q(z)?.exp())
    }

    /// The exponent in real coordinates, `c0 + b.v + v^T Q v`.
    pub fn real_quadratic(&self) -> (DMatrix<f64>, DVector<f64>, f64) {
        let n = self.n_modes();
        let (xr, xi) = (self.x.map(|z| z.re), self.x.map(|z| z.im));
        let (yr, yi) = (self.y.map(|z| z.re), self.y.map(|z| z.im));
        let mut q = DMatrix::zeros(2 * n, 2 * n);
        q.view_mut((0, 0), (n, n)).copy_from(&(&yr + &xr));
        q.view_mut((0, n), (n, n)).copy_from(&-(&yi + &xi));
        q.view_mut((n, 0), (n, n)).copy_from(&(&yi - &xi));
        q.view_mut((n, n), (n, n)).copy_from(&(&yr - &xr));
        let q = (&q + q.transpose()) * 0.5;
        let mut b = DVector::zeros(2 * n);
        for j in 0..n {
            b[j] = 2.0 * self.gamma[j].re;
            b[n + j] = -2.0 * self.gamma[j].im;
        }
        (q, b, self.c0)
    }

    /// Largest eigenvalue of the real quadratic form.
    pub fn max_real_eigenvalue(&self) -> f64 {
        let (q, _, _) = self.real_quadratic();
        SymmetricEigen::new(q).eigenvalues.max()
    }

    /// Negative definite, hence integrable.
    pub fn is_valid(&self) -> bool {
        self.max_real_eigenvalue() < -VALIDITY_TOL
    }

    /// `ln[(1/pi^n) * integral of Q(Z) d^2Z]`.
    pub fn log_integral(&self) -> Result<f64> {
        let max_eigenvalue = self.max_real_eigenvalue();
        if !(max_eigenvalue < -VALIDITY_TOL) {
            return Err(Error::NotIntegrable { max_eigenvalue });
        }
        let (q, b, c0) = self.real_quadratic();
        // (1/pi^n) * int exp(-v^T A v + b.v) dv = exp(b^T A^-1 b / 4) / sqrt(det A)
        let chol = Cholesky::new(-q).ok_or(Error::NotIntegrable { max_eigenvalue })?;
        let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let a_inv_b = chol.solve(&b);
        Ok(c0 + 0.25 * b.dot(&a_inv_b) - 0.5 * log_det)
    }

    /// Trace of the represented operator.
    pub fn gaussian_integral(&self) -> Result<f64> {
        Ok(self.log_integral()?.exp())
    }

    /// Copy with `c0` shifted so the integral is one.
    pub fn normalize(&self) -> Result<Self> {
        let shift = self.log_integral()?;
        Ok(self.with_c0(self.c0 - shift))
    }

    /// The Q-form seen by a single mode when every other argument is held at
    /// the given values (`None` marks the free modes). Used for plotting
    /// multi-mode outputs along a slice.
    pub fn slice(&self, fixed: &[Option<Complex64>]) -> Result<GaussianQForm> {
        self.check_len(&vec![c(0.0, 0.0); fixed.len()])?;
        let free: Vec<usize> = (0..fixed.len()).filter(|&i| fixed[i].is_none()).collect();
        let mut zfix = CVector::zeros(fixed.len());
        for (i, f) in fixed.iter().enumerate() {
            if let Some(v) = f {
                zfix[i] = *v;
            }
        }
        let c0 = self.exponent_complex(zfix.as_slice())?.re;
        let m = free.len();
        let xz = &self.x * &zfix;
        let yhz = self.y.adjoint() * &zfix;
        // coefficient of W in gamma.W + W^T X zf + zf^H Y W
        let gamma = CVector::from_iterator(m, free.iter().map(|&i| self.gamma[i] + xz[i] + yhz[i].conj()));
        let x = CMatrix::from_fn(m, m, |i, j| self.x[(free[i], free[j])]);
        let y = CMatrix::from_fn(m, m, |i, j| self.y[(free[i], free[j])]);
        GaussianQForm::new(c0, gamma, x, y)
    }
}

#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
struct QFormWire {
    n_modes: usize,
    partition: Option<Partition>,
    c0: f64,
    gamma: Vec<Pair>,
    X: Vec<Pair>,
    Y: Vec<Pair>,
}

impl TryFrom<QFormWire> for GaussianQForm {
    type Error = Error;

    fn try_from(w: QFormWire) -> Result<Self> {
        let n = w.n_modes;
        if w.gamma.len() != n {
            return Err(Error::DimensionMismatch {
                what: "gamma",
                expected: n,
                found: w.gamma.len(),
            });
        }
        let form = GaussianQForm::new(
            w.c0,
            wire::vector_from_pairs(&w.gamma),
            wire::matrix_from_pairs(n, n, &w.X, "X")?,
            wire::matrix_from_pairs(n, n, &w.Y, "Y")?,
        )?;
        match w.partition {
            Some(p) => form.with_partition(p),
            None => Ok(form),
        }
    }
}

impl From<GaussianQForm> for QFormWire {
    fn from(f: GaussianQForm) -> Self {
        QFormWire {
            n_modes: f.n_modes(),
            c0: f.c0,
            gamma: wire::vector_pairs(&f.gamma),
            X: wire::matrix_pairs(&f.x),
            Y: wire::matrix_pairs(&f.y),
            partition: f.partition,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{LN_2, PI};

    fn identity_choi() -> GaussianQForm {
        let mut b = ChoiBlocks::zeros(1);
        b.x_ab[(0, 0)] = c(1.0, 0.0);
        b.y_aa[(0, 0)] = c(-1.0, 0.0);
        b.y_bb[(0, 0)] = c(-1.0, 0.0);
        GaussianQForm::from_blocks(&b).unwrap()
    }

    #[test]
    fn identity_choi_at_origin_is_one() {
        let q = identity_choi().evaluate(&[c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(q, 1.0);
    }

    #[test]
    fn coherent_form_peak_and_origin() {
        let f = GaussianQForm::coherent(&[c(1.0, 0.0)]);
        assert_eq!(f.gamma()[0], c(1.0, 0.0));
        assert_eq!(f.c0(), -1.0);
        assert!((f.evaluate(&[c(1.0, 0.0)]).unwrap() - 1.0).abs() < 1e-15);
        assert!((f.evaluate(&[c(0.0, 0.0)]).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_on_evaluate() {
        let f = GaussianQForm::coherent(&[c(1.0, 0.0)]);
        assert!(matches!(f.evaluate(&[]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn coherent_integral_is_one() {
        for a in [c(0.0, 0.0), c(1.3, -0.4), c(-2.0, 2.5)] {
            let i = GaussianQForm::coherent(&[a]).gaussian_integral().unwrap();
            assert!((i - 1.0).abs() < 1e-13, "{a}: {i}");
        }
    }

    #[test]
    fn thermal_integral_and_normalization() {
        // (1/pi) int exp(-|Z|^2/2) = 2, times e^{-ln 2}
        let th = GaussianQForm::thermal(1.0).unwrap();
        assert!((th.gaussian_integral().unwrap() - 1.0).abs() < 1e-14);
        let raw = th.with_c0(0.0);
        assert!((raw.gaussian_integral().unwrap() - 2.0).abs() < 1e-14);
        let n = raw.normalize().unwrap();
        assert!((n.c0() + LN_2).abs() < 1e-14);
        let doubled = th.with_c0(th.c0() + LN_2);
        assert!((doubled.gaussian_integral().unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn thermal_integral_by_quadrature() {
        // independent check of the real-coordinate mapping: polar quadrature
        let th = GaussianQForm::thermal(1.0).unwrap().with_c0(0.0);
        let (nr, nphi, rmax) = (20000, 8, 14.0);
        let mut s = 0.0;
        for i in 0..nr {
            let r = (i as f64 + 0.5) * rmax / nr as f64;
            for j in 0..nphi {
                let phi = 2.0 * PI * j as f64 / nphi as f64;
                let z = Complex64::from_polar(r, phi);
                s += th.evaluate(&[z]).unwrap() * r * (rmax / nr as f64) * (2.0 * PI / nphi as f64);
            }
        }
        assert!((s / PI - 2.0).abs() < 1e-6);
    }

    #[test]
    fn normalize_is_idempotent() {
        let f = GaussianQForm::displaced_squeezed(0.5, c(1.0, 0.3)).unwrap();
        let g = f.normalize().unwrap();
        assert!((f.c0() - g.c0()).abs() < 1e-12);
    }

    #[test]
    fn positive_definite_is_not_integrable() {
        let f = GaussianQForm::new(0.0, CVector::zeros(1), CMatrix::zeros(1, 1), CMatrix::from_element(1, 1, c(1.0, 0.0))).unwrap();
        assert!(!f.is_valid());
        assert!(matches!(f.normalize(), Err(Error::NotIntegrable { .. })));
    }

    #[test]
    fn identity_choi_is_not_integrable() {
        assert!(!identity_choi().is_valid());
    }

    #[test]
    fn asymmetric_input_rejected() {
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        let r = GaussianQForm::new(0.0, CVector::zeros(2), x, -CMatrix::identity(2, 2));
        assert!(matches!(r, Err(Error::Asymmetric { what: "X", .. })));
        let y = CMatrix::from_row_slice(2, 2, &[c(-1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(-1.0, 0.0)]);
        let r = GaussianQForm::new(0.0, CVector::zeros(2), CMatrix::zeros(2, 2), y);
        assert!(matches!(r, Err(Error::Asymmetric { what: "Y", .. })));
    }

    #[test]
    fn tiny_asymmetry_is_symmetrized_exactly() {
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0 + 1e-14, 0.0), c(0.0, 0.0)]);
        let f = GaussianQForm::new(0.0, CVector::zeros(2), x, -CMatrix::identity(2, 2)).unwrap();
        assert_eq!(f.x(), &f.x().transpose());
    }

    #[test]
    fn blocks_round_trip() {
        let f = identity_choi();
        let b = f.blocks().unwrap();
        assert_eq!(GaussianQForm::from_blocks(&b).unwrap(), f);
    }

    #[test]
    fn bad_partition_rejected() {
        let f = GaussianQForm::vacuum(2);
        let p = Partition { a: vec![0], b: vec![0] };
        assert!(f.with_partition(p).is_err());
    }

    #[test]
    fn json_uses_pairs() {
        let f = identity_choi();
        let s = serde_json::to_value(&f).unwrap();
        assert_eq!(s["n_modes"], 2);
        assert_eq!(s["X"][1], serde_json::json!([1.0, 0.0]));
        assert_eq!(s["partition"]["b"], serde_json::json!([1]));
        let back: GaussianQForm = serde_json::from_value(s).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn json_rejects_asymmetric_y() {
        let v = serde_json::json!({
            "n_modes": 1, "partition": null, "c0": 0.0, "gamma": [[0.0, 0.0]],
            "X": [[0.0, 0.0]], "Y": [[-1.0, 0.5]]
        });
        assert!(serde_json::from_value::<GaussianQForm>(v).is_err());
    }

    #[test]
    fn slice_matches_full_evaluation() {
        let mut b = ChoiBlocks::zeros(1);
        b.x_ab[(0, 0)] = c(0.3, 0.2);
        b.y_ab[(0, 0)] = c(0.1, -0.4);
        b.x_aa[(0, 0)] = c(0.05, 0.1);
        b.y_aa[(0, 0)] = c(-0.7, 0.0);
        b.y_bb[(0, 0)] = c(-1.1, 0.0);
        b.gamma_a[0] = c(0.2, 0.1);
        b.gamma_b[0] = c(-0.3, 0.5);
        b.c0 = 0.4;
        let f = GaussianQForm::from_blocks(&b).unwrap();
        let za = c(0.4, -0.9);
        let s = f.slice(&[Some(za), None]).unwrap();
        for zb in [c(0.0, 0.0), c(1.0, -0.5), c(-0.3, 0.8)] {
            let full = f.log_q(&[za, zb]).unwrap();
            assert!((s.log_q(&[zb]).unwrap() - full).abs() < 1e-13);
        }
    }

    fn arb_form() -> impl Strategy<Value = GaussianQForm> {
        (prop::collection::vec(-1.0f64..1.0, 16), -2.0f64..2.0).prop_map(|(v, c0)| {
            let n = 2;
            let m = |o: usize| CMatrix::from_fn(n, n, |i, j| c(v[o + 2 * i + j], v[o + 4 + 2 * i + j]));
            let x = linalg::symmetrize(&m(0).map(|z| z * 0.3));
            let a = m(8);
            let y = -(a.adjoint() * &a) - CMatrix::identity(n, n);
            let gamma = CVector::from_iterator(n, (0..n).map(|i| c(v[i], v[i + 2])));
            GaussianQForm::new(c0, gamma, x, y).unwrap()
        })
    }

    proptest! {
        #[test]
        fn exponent_is_real(f in arb_form(), zs in prop::collection::vec(-3.0f64..3.0, 4)) {
            let z = [c(zs[0], zs[1]), c(zs[2], zs[3])];
            let e = f.exponent_complex(&z).unwrap();
            prop_assert!(e.im.abs() < 1e-12);
            prop_assert!(f.evaluate(&z).unwrap() > 0.0);
        }

        #[test]
        fn normalized_integrates_to_one(f in arb_form()) {
            prop_assume!(f.is_valid());
            let n = f.normalize().unwrap();
            prop_assert!((n.gaussian_integral().unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
