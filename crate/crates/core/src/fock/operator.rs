use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_defect, CMatrix, CVector};
use crate::wire::{matrix_from_pairs, matrix_pairs, Pair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    Density,
    /// Unnormalized bipartite channel operator (trace = dim for TP maps).
    Choi,
    Kraus,
    DiagonalMap,
}

/// Matrix on `modes` copies of a `dim`-level space. Ordering of the
/// composite basis is row-major in the mode index (mode 0 most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    dim: usize,
    modes: usize,
    kind: OperatorKind,
    matrix: CMatrix,
}

#[derive(Serialize, Deserialize)]
struct FockOperatorWire {
    kind: OperatorKind,
    dim: usize,
    modes: usize,
    matrix: Vec<Pair>,
}

impl Serialize for FockOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FockOperatorWire {
            kind: self.kind,
            dim: self.dim,
            modes: self.modes,
            matrix: matrix_pairs(&self.matrix),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FockOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = FockOperatorWire::deserialize(d)?;
        let total = w
            .dim
            .checked_pow(w.modes as u32)
            .ok_or_else(|| serde::de::Error::custom("dimension overflow"))?;
        let m = matrix_from_pairs(total, total, &w.matrix, "operator matrix").map_err(serde::de::Error::custom)?;
        FockOperator::new(w.dim, w.modes, w.kind, m).map_err(serde::de::Error::custom)
    }
}

impl FockOperator {
    pub fn new(dim: usize, modes: usize, kind: OperatorKind, matrix: CMatrix) -> Result<Self> {
        let total = dim.pow(modes as u32);
        if matrix.nrows() != total || matrix.ncols() != total {
            return Err(Error::DimensionMismatch {
                what: "operator matrix",
                expected: total,
                found: matrix.nrows(),
            });
        }
        if !crate::linalg::all_finite(&matrix) {
            return Err(Error::NonFinite("operator matrix"));
        }
        Ok(FockOperator { dim, modes, kind, matrix })
    }

    /// `|v><v|`.
    pub fn pure(v: &CVector, dim: usize, modes: usize) -> Result<Self> {
        FockOperator::new(dim, modes, OperatorKind::Density, v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn with_kind(mut self, kind: OperatorKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = crate::linalg::hermitize(&self.matrix);
        SymmetricEigen::new(h).eigenvalues.iter().copied().collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Traces out mode `a` of a two-mode operator.
    pub fn trace_a(&self) -> Result<FockOperator> {
        self.require_two_mode()?;
        let d = self.dim;
        let m = CMatrix::from_fn(d, d, |m, n| (0..d).map(|j| self.matrix[(j * d + m, j * d + n)]).sum());
        FockOperator::new(d, 1, OperatorKind::Density, m)
    }

    /// Traces out mode `b` of a two-mode operator.
    pub fn trace_b(&self) -> Result<FockOperator> {
        self.require_two_mode()?;
        let d = self.dim;
        let m = CMatrix::from_fn(d, d, |j, k| (0..d).map(|m| self.matrix[(j * d + m, k * d + m)]).sum());
        FockOperator::new(d, 1, OperatorKind::Density, m)
    }

    pub(crate) fn require_two_mode(&self) -> Result<()> {
        if self.modes != 2 {
            return Err(Error::DimensionMismatch {
                what: "two-mode operator",
                expected: 2,
                found: self.modes,
            });
        }
        Ok(())
    }

    /// Uhlmann fidelity `(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
    pub fn fidelity(&self, other: &FockOperator) -> Result<f64> {
        self.require_same_shape(other)?;
        let s = psd_sqrt(&self.matrix);
        let inner = &s * &other.matrix * &s;
        let t: f64 = clipped(SymmetricEigen::new(crate::linalg::hermitize(&inner)).eigenvalues.as_slice())
            .map(f64::sqrt)
            .sum();
        Ok(t * t)
    }

    /// `1/2 ||rho - sigma||_1`.
    pub fn trace_distance(&self, other: &FockOperator) -> Result<f64> {
        self.require_same_shape(other)?;
        let diff = crate::linalg::hermitize(&(&self.matrix - &other.matrix));
        Ok(0.5 * SymmetricEigen::new(diff).eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &FockOperator) -> Result<f64> {
        self.require_same_shape(other)?;
        Ok(crate::linalg::max_abs(&(&self.matrix - &other.matrix)))
    }

    fn require_same_shape(&self, other: &FockOperator) -> Result<()> {
        if self.dim != other.dim || self.modes != other.modes {
            return Err(Error::DimensionMismatch {
                what: "operator shape",
                expected: self.matrix.nrows(),
                found: other.matrix.nrows(),
            });
        }
        Ok(())
    }
}

/// Eigenvalues with round-off noise below `1e-13 * max` set to zero.
fn clipped(eig: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let top = eig.iter().fold(0.0f64, |a, &l| a.max(l));
    eig.iter().map(move |&l| if l > 1e-13 * top { l } else { 0.0 })
}

fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let e = SymmetricEigen::new(crate::linalg::hermitize(m));
    let d = CVector::from_iterator(e.eigenvalues.len(), clipped(e.eigenvalues.as_slice()).map(|l| c(l.sqrt(), 0.0)));
    &e.eigenvectors * CMatrix::from_diagonal(&d) * e.eigenvectors.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_vector, thermal_density, tmss_vector};

    #[test]
    fn fidelity_of_pure_states_is_overlap() {
        let a = coherent_vector(c(0.5, 0.0), 30).unwrap();
        let b = coherent_vector(c(0.0, 0.5), 30).unwrap();
        let ra = FockOperator::pure(&a, 31, 1).unwrap();
        let rb = FockOperator::pure(&b, 31, 1).unwrap();
        let f = ra.fidelity(&rb).unwrap();
        assert!((f - a.dotc(&b).norm_sqr()).abs() < 1e-10);
        assert!((ra.fidelity(&ra).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn trace_distance_bounds() {
        let th = thermal_density(0.5, 60).unwrap();
        assert!(th.trace_distance(&th).unwrap() < 1e-14);
        let mut vac = CVector::zeros(61);
        vac[0] = c(1.0, 0.0);
        let v = FockOperator::pure(&vac, 61, 1).unwrap();
        let d = th.trace_distance(&v).unwrap();
        assert!(d > 0.0 && d <= 1.0);
        // orthogonal-support computation: 1 - p0 where p0 = 1/(1+nbar)
        assert!((d - (1.0 - 1.0 / 1.5)).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_of_tmss_is_thermal() {
        let q: f64 = 0.5;
        let v = tmss_vector(q, 50).unwrap();
        let rho = FockOperator::pure(&v, 51, 2).unwrap();
        let nbar = q * q / (1.0 - q * q);
        let th = thermal_density(nbar, 50).unwrap();
        assert!(rho.trace_a().unwrap().max_abs_diff(&th).unwrap() < 1e-14);
        assert!(rho.trace_b().unwrap().max_abs_diff(&th).unwrap() < 1e-14);
    }

    #[test]
    fn json_roundtrip() {
        let th = thermal_density(0.3, 30).unwrap();
        let s = serde_json::to_string(&th).unwrap();
        let back: FockOperator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, th);
    }

    #[test]
    fn json_rejects_wrong_size() {
        let s = r#"{"kind":"density","dim":2,"modes":1,"matrix":[[1,0],[0,0],[0,0]]}"#;
        assert!(serde_json::from_str::<FockOperator>(s).is_err());
    }
}
