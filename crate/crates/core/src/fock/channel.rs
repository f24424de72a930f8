use rand::Rng;
use rand_distr::StandardNormal;

use super::{ln_binomial, FockOperator, OperatorKind};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{c, hermitian_inv_sqrt, CMatrix, CVector};

/// Single-mode channel in Kraus form on a `dim`-level space.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(dim: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::DimensionMismatch {
                what: "Kraus operator count",
                expected: 1,
                found: 0,
            });
        }
        for k in &kraus {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    what: "Kraus operator",
                    expected: dim,
                    found: k.nrows(),
                });
            }
        }
        Ok(KrausChannel { dim, kraus })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn identity(dim: usize) -> Self {
        KrausChannel {
            dim,
            kraus: vec![CMatrix::identity(dim, dim)],
        }
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        KrausChannel::new(u.nrows(), vec![u])
    }

    /// `|n> -> e^{i phi n}|n>`, which sends `|alpha>` to `|e^{i phi} alpha>`.
    pub fn phase(phi: f64, dim: usize) -> Self {
        let d = CVector::from_fn(dim, |n, _| c(0.0, phi * n as f64).exp());
        KrausChannel {
            dim,
            kraus: vec![CMatrix::from_diagonal(&d)],
        }
    }

    /// Beam splitter of angle `theta` against vacuum, environment traced out:
    /// `|alpha> -> |alpha cos theta>`.
    pub fn beam_splitter(theta: f64, dim: usize) -> Self {
        let (cs, sn) = (theta.cos(), theta.sin());
        let kraus = (0..dim)
            .map(|l| {
                let mut k = CMatrix::zeros(dim, dim);
                for n in l..dim {
                    let amp = (0.5 * ln_binomial(n, l)).exp() * cs.powi((n - l) as i32) * (-sn).powi(l as i32);
                    k[(n - l, n)] = c(amp, 0.0);
                }
                k
            })
            .collect();
        KrausChannel { dim, kraus }
    }

    /// Pure loss with transmissivity `eta`.
    pub fn loss(eta: f64, dim: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::DomainError("transmissivity"));
        }
        Ok(KrausChannel::beam_splitter(eta.sqrt().acos(), dim))
    }

    /// Quantum-limited amplifier of gain `g >= 1`, truncated to `dim` levels.
    /// Only trace preserving on levels well below `dim`.
    pub fn amplifier(g: f64, dim: usize) -> Result<Self> {
        if !(g >= 1.0) {
            return Err(Error::DomainError("amplifier gain"));
        }
        let ln_g = g.ln();
        let ln_ratio = if g > 1.0 { ((g - 1.0) / g).ln() } else { f64::NEG_INFINITY };
        let kraus = (0..dim)
            .map(|l| {
                let mut k = CMatrix::zeros(dim, dim);
                for n in 0..dim - l {
                    let ln_w = ln_binomial(n + l, n) - ln_g - n as f64 * ln_g + if l == 0 { 0.0 } else { l as f64 * ln_ratio };
                    k[(n + l, n)] = c((0.5 * ln_w).exp(), 0.0);
                }
                k
            })
            .collect();
        Ok(KrausChannel { dim, kraus })
    }

    /// Additive thermal noise of mean photon number `nbar`: loss at
    /// `1/(nbar+1)` followed by amplification by `nbar+1`. Coherent inputs
    /// come out as displaced thermal states with the same mean amplitude.
    pub fn thermal_noise(nbar: f64, dim: usize) -> Result<Self> {
        if !(nbar >= 0.0) {
            return Err(Error::DomainError("mean photon number"));
        }
        let loss = KrausChannel::loss(1.0 / (nbar + 1.0), dim)?;
        let amp = KrausChannel::amplifier(nbar + 1.0, dim)?;
        Ok(loss.then(&amp))
    }

    /// `self` followed by `after`.
    pub fn then(&self, after: &KrausChannel) -> KrausChannel {
        let mut kraus = Vec::with_capacity(self.kraus.len() * after.kraus.len());
        for a in &after.kraus {
            for k in &self.kraus {
                let p = a * k;
                if p.iter().any(|z| z.norm() > 0.0) {
                    kraus.push(p);
                }
            }
        }
        KrausChannel { dim: self.dim, kraus }
    }

    /// Random CPTP map: Gaussian operators `G_i`, then
    /// `K_i = G_i S^{-1/2}` with `S = sum G_i^dag G_i`.
    pub fn random<R: Rng + ?Sized>(dim: usize, n_kraus: usize, rng: &mut R) -> Result<Self> {
        let g: Vec<CMatrix> = (0..n_kraus.max(1))
            .map(|_| CMatrix::from_fn(dim, dim, |_, _| c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))))
            .collect();
        let s = g.iter().fold(CMatrix::zeros(dim, dim), |acc, gi| acc + gi.adjoint() * gi);
        let s_inv_half = hermitian_inv_sqrt(&s).ok_or(Error::DomainError("random Kraus normalization"))?;
        KrausChannel::new(dim, g.iter().map(|gi| gi * &s_inv_half).collect())
    }

    /// `max |sum K^dag K - I|` over the leading `levels x levels` block.
    pub fn completeness_defect(&self, levels: usize) -> f64 {
        let s = self.kraus.iter().fold(CMatrix::zeros(self.dim, self.dim), |acc, k| acc + k.adjoint() * k);
        let mut worst: f64 = 0.0;
        for i in 0..levels.min(self.dim) {
            for j in 0..levels.min(self.dim) {
                let e = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s[(i, j)] - c(e, 0.0)).norm());
            }
        }
        worst
    }

    fn check_state(&self, rho: &FockOperator, modes: usize) -> Result<()> {
        if rho.dim() != self.dim || rho.modes() != modes {
            return Err(Error::DimensionMismatch {
                what: "state dimension for channel",
                expected: self.dim.pow(modes as u32),
                found: rho.matrix().nrows(),
            });
        }
        Ok(())
    }

    /// `sum K rho K^dag`. Terms are computed independently and summed in
    /// Kraus order, so the result is identical for both strategies.
    pub fn apply(&self, rho: &FockOperator, exec: Exec) -> Result<FockOperator> {
        self.check_state(rho, 1)?;
        let terms = exec.map(self.kraus.len(), |i| {
            let k = &self.kraus[i];
            k * rho.matrix() * k.adjoint()
        });
        let out = terms.into_iter().fold(CMatrix::zeros(self.dim, self.dim), |acc, t| acc + t);
        FockOperator::new(self.dim, 1, OperatorKind::Density, out)
    }

    /// `(I (x) E)` on a two-mode operator, acting on mode `b`.
    pub fn one_sided_apply(&self, rho: &FockOperator, exec: Exec) -> Result<FockOperator> {
        self.check_state(rho, 2)?;
        let d = self.dim;
        let blocks = exec.map(d * d, |idx| {
            let (j, k) = (idx / d, idx % d);
            let blk = rho.matrix().view((j * d, k * d), (d, d));
            self.kraus.iter().fold(CMatrix::zeros(d, d), |acc, kr| acc + kr * blk * kr.adjoint())
        });
        let mut out = CMatrix::zeros(d * d, d * d);
        for (idx, b) in blocks.into_iter().enumerate() {
            let (j, k) = (idx / d, idx % d);
            out.view_mut((j * d, k * d), (d, d)).copy_from(&b);
        }
        FockOperator::new(d, 2, rho.kind(), out)
    }

    /// `(I (x) E)(|psi><psi|)` for a two-mode vector, without forming the
    /// input density matrix.
    pub fn one_sided_apply_pure(&self, psi: &CVector, exec: Exec) -> Result<FockOperator> {
        let d = self.dim;
        if psi.len() != d * d {
            return Err(Error::DimensionMismatch {
                what: "two-mode state vector",
                expected: d * d,
                found: psi.len(),
            });
        }
        let w: Vec<CVector> = exec.map(self.kraus.len(), |i| {
            let kr = &self.kraus[i];
            let mut v = CVector::zeros(d * d);
            for j in 0..d {
                let seg = kr * psi.rows(j * d, d);
                v.rows_mut(j * d, d).copy_from(&seg);
            }
            v
        });
        let n = d * d;
        let rows = exec.map(n, |r| {
            let mut row = CVector::zeros(n);
            for wk in &w {
                let a = wk[r];
                if a.norm() == 0.0 {
                    continue;
                }
                for (s, z) in row.iter_mut().zip(wk.iter()) {
                    *s += a * z.conj();
                }
            }
            row
        });
        let mut out = CMatrix::zeros(n, n);
        for (r, row) in rows.into_iter().enumerate() {
            out.row_mut(r).copy_from(&row.transpose());
        }
        FockOperator::new(d, 2, OperatorKind::Density, out)
    }
}
