//! Gaussian channels represented directly by their Choi Q-forms, coherent
//! probe simulation, and analytic output prediction.
//!
//! For a Choi form with blocks `(c0, G_a, G_b, X_**, Y_**)` and a coherent
//! input `|alpha>`, the output Q-function is obtained by substituting
//! `Z_a* -> alpha`, `Z_a -> alpha*`:
//!
//! ```text
//! d(alpha) = G_b + X_ab^T alpha* + Y_ab^T alpha
//! c(alpha) = c0 + 2 Re(G_a . alpha*) + Re(alpha*^T X_aa alpha*) + alpha^T Y_aa alpha*
//! ```
//!
//! with `X_bb`, `Y_bb` unchanged.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fock::KrausChannel;
use crate::linalg::{self, c, CMatrix, CVector};
use crate::qform::{ChoiBlocks, GaussianQForm, Partition};
use crate::quadratic::Quadratic;
use crate::wire::{self, Pair};

/// A Gaussian channel on `k` modes, stored as its Choi Q-form over `2k`
/// modes with an explicit `(a, b)` partition.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannelSpec {
    k: usize,
    choi: GaussianQForm,
    label: String,
}

impl GaussianChannelSpec {
    pub fn new(choi: GaussianQForm, label: impl Into<String>) -> Result<Self> {
        let p = choi.partition().ok_or(Error::BadPartition { n_modes: choi.n_modes() })?;
        let k = p.a.len();
        if k == 0 || 2 * k != choi.n_modes() {
            return Err(Error::BadPartition { n_modes: choi.n_modes() });
        }
        Ok(GaussianChannelSpec { k, choi, label: label.into() })
    }

    pub fn from_blocks(blocks: &ChoiBlocks, label: impl Into<String>) -> Result<Self> {
        GaussianChannelSpec::new(GaussianQForm::from_blocks(blocks)?, label)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn choi(&self) -> &GaussianQForm {
        &self.choi
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn blocks(&self) -> ChoiBlocks {
        self.choi.blocks().expect("partition checked at construction")
    }

    fn check_alpha(&self, alpha: &[Complex64]) -> Result<()> {
        if alpha.len() != self.k {
            return Err(Error::DimensionMismatch {
                what: "probe amplitude",
                expected: self.k,
                found: alpha.len(),
            });
        }
        if alpha.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("probe amplitude"));
        }
        Ok(())
    }
}

fn spec(b: ChoiBlocks, label: String) -> GaussianChannelSpec {
    GaussianChannelSpec::from_blocks(&b, label).expect("constructor blocks are well formed")
}

/// `X_ab = I`, `Y_aa = Y_bb = -I`.
pub fn identity_channel(k: usize) -> Result<GaussianChannelSpec> {
    if k == 0 {
        return Err(Error::DomainError("mode count must be positive"));
    }
    let mut b = ChoiBlocks::zeros(k);
    b.x_ab = CMatrix::identity(k, k);
    b.y_aa = -CMatrix::identity(k, k);
    b.y_bb = -CMatrix::identity(k, k);
    Ok(spec(b, format!("identity(k={k})")))
}

/// Beam splitter against vacuum with the reflected mode discarded.
pub fn bs_channel(theta: f64) -> GaussianChannelSpec {
    let cs = theta.cos();
    let mut b = ChoiBlocks::zeros(1);
    b.x_ab[(0, 0)] = c(cs, 0.0);
    b.y_aa[(0, 0)] = c(-cs * cs, 0.0);
    b.y_bb[(0, 0)] = c(-1.0, 0.0);
    spec(b, format!("bs(theta={theta})"))
}

/// Additive thermal noise: `|alpha>` goes to a displaced thermal state of
/// mean photon number `nbar` centred on `alpha`.
pub fn thermal_noise_channel(nbar: f64) -> Result<GaussianChannelSpec> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::DomainError("mean photon number"));
    }
    let s = 1.0 / (nbar + 1.0);
    let mut b = ChoiBlocks::zeros(1);
    b.c0 = -(nbar + 1.0).ln();
    b.x_ab[(0, 0)] = c(s, 0.0);
    b.y_aa[(0, 0)] = c(-s, 0.0);
    b.y_bb[(0, 0)] = c(-s, 0.0);
    Ok(spec(b, format!("thermal(nbar={nbar})")))
}

/// Phase rotation `|alpha> -> |e^{i phi} alpha>`.
pub fn phase_channel(phi: f64) -> GaussianChannelSpec {
    let mut b = ChoiBlocks::zeros(1);
    b.x_ab[(0, 0)] = c(0.0, -phi).exp();
    b.y_aa[(0, 0)] = c(-1.0, 0.0);
    b.y_bb[(0, 0)] = c(-1.0, 0.0);
    spec(b, format!("phase(phi={phi})"))
}

/// Multi-mode linear map `|alpha> -> |T alpha + beta>`. Completely positive
/// and trace preserving when `||T|| <= 1`.
pub fn linear_channel(t: &CMatrix, beta: &CVector, label: impl Into<String>) -> Result<GaussianChannelSpec> {
    let k = beta.len();
    if t.nrows() != k || t.ncols() != k {
        return Err(Error::DimensionMismatch {
            what: "linear channel matrix",
            expected: k,
            found: t.nrows(),
        });
    }
    let mut b = ChoiBlocks::zeros(k);
    b.c0 = -beta.norm_squared();
    b.gamma_b = beta.map(|z| z.conj());
    b.gamma_a = -(t.adjoint() * beta);
    b.x_ab = t.adjoint();
    b.y_aa = -(t.transpose() * t.map(|z| z.conj()));
    b.y_bb = -CMatrix::identity(k, k);
    GaussianChannelSpec::from_blocks(&b, label)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Complex64 {
    c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * scale
}

/// Random Choi form with every block populated and an integrable output
/// quadratic part (`X_bb`, `Y_bb`), so every coherent-probe output is a
/// normalizable Gaussian. Not necessarily completely positive.
pub fn random_choi<R: Rng + ?Sized>(k: usize, rng: &mut R) -> GaussianChannelSpec {
    let sym = |rng: &mut R, s: f64| {
        let m = CMatrix::from_fn(k, k, |_, _| gaussian(rng, s));
        linalg::symmetrize(&m)
    };
    let herm = |rng: &mut R, s: f64| {
        let m = CMatrix::from_fn(k, k, |_, _| gaussian(rng, s));
        linalg::hermitize(&m)
    };
    loop {
        let mut b = ChoiBlocks::zeros(k);
        b.c0 = rng.sample::<f64, _>(StandardNormal) * 0.3;
        b.gamma_a = CVector::from_fn(k, |_, _| gaussian(rng, 0.3));
        b.gamma_b = CVector::from_fn(k, |_, _| gaussian(rng, 0.3));
        b.x_aa = sym(rng, 0.2);
        b.x_ab = CMatrix::from_fn(k, k, |_, _| gaussian(rng, 0.4));
        b.x_bb = sym(rng, 0.2);
        b.y_aa = herm(rng, 0.2) - CMatrix::identity(k, k) * c(0.5, 0.0);
        b.y_ab = CMatrix::from_fn(k, k, |_, _| gaussian(rng, 0.3));
        b.y_bb = herm(rng, 0.2) - CMatrix::identity(k, k);
        let out = GaussianQForm::new(0.0, CVector::zeros(k), b.x_bb.clone(), b.y_bb.clone());
        if out.map(|f| f.is_valid()).unwrap_or(false) {
            return spec(b, format!("random(k={k})"));
        }
    }
}

/// Data extracted from the output Q-function of one coherent probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub alpha: CVector,
    pub d: CVector,
    pub c: f64,
    pub x_bb: CMatrix,
    pub y_bb: CMatrix,
}

impl ProbeRecord {
    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    /// Checks shapes, finiteness and the symmetry of the quadratic blocks.
    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if self.d.len() != k {
            return Err(Error::DimensionMismatch {
                what: "record d",
                expected: k,
                found: self.d.len(),
            });
        }
        // the form constructor performs the remaining checks
        GaussianQForm::new(self.c, self.d.clone(), self.x_bb.clone(), self.y_bb.clone())?;
        let alpha = CMatrix::from_column_slice(k, 1, self.alpha.as_slice());
        if !linalg::all_finite(&alpha) {
            return Err(Error::NonFinite("record alpha"));
        }
        Ok(())
    }

    /// The raw output Q-form this record describes.
    pub fn output_form(&self) -> Result<GaussianQForm> {
        GaussianQForm::new(self.c, self.d.clone(), self.x_bb.clone(), self.y_bb.clone())
    }
}

#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
struct ProbeRecordWire {
    alpha: Vec<Pair>,
    d: Vec<Pair>,
    c: f64,
    Xbb: Vec<Pair>,
    Ybb: Vec<Pair>,
}

impl Serialize for ProbeRecord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProbeRecordWire {
            alpha: wire::vector_pairs(&self.alpha),
            d: wire::vector_pairs(&self.d),
            c: self.c,
            Xbb: wire::matrix_pairs(&self.x_bb),
            Ybb: wire::matrix_pairs(&self.y_bb),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProbeRecord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = ProbeRecordWire::deserialize(d)?;
        let k = w.alpha.len();
        let err = serde::de::Error::custom;
        let rec = ProbeRecord {
            alpha: wire::vector_from_pairs(&w.alpha),
            d: wire::vector_from_pairs(&w.d),
            c: w.c,
            x_bb: wire::matrix_from_pairs(k, k, &w.Xbb, "Xbb").map_err(err)?,
            y_bb: wire::matrix_from_pairs(k, k, &w.Ybb, "Ybb").map_err(err)?,
        };
        rec.validate().map_err(err)?;
        Ok(rec)
    }
}

/// Unnormalized output Q-form for coherent input `|alpha>`; its `c0` is the
/// tomography datum `c(alpha)`.
pub fn output_form(spec: &GaussianChannelSpec, alpha: &[Complex64]) -> Result<GaussianQForm> {
    spec.check_alpha(alpha)?;
    let b = spec.blocks();
    let a = CVector::from_column_slice(alpha);
    let ac = a.map(|z| z.conj());
    let d = &b.gamma_b + b.x_ab.transpose() * &ac + b.y_ab.transpose() * &a;
    let cval = c(b.c0, 0.0) + b.gamma_a.dot(&ac) * 2.0 + (ac.transpose() * &b.x_aa * &ac)[(0, 0)] + (a.transpose() * &b.y_aa * &ac)[(0, 0)];
    // the conjugate terms of the full exponent contribute the imaginary parts' negatives
    let cval = cval.re;
    GaussianQForm::new(cval, d, b.x_bb, b.y_bb)
}

/// Output form plus the record an ideal heterodyne fit would return.
pub fn simulate_probe(spec: &GaussianChannelSpec, alpha: &[Complex64]) -> Result<(GaussianQForm, ProbeRecord)> {
    let form = output_form(spec, alpha)?;
    let rec = ProbeRecord {
        alpha: CVector::from_column_slice(alpha),
        d: form.gamma().clone(),
        c: form.c0(),
        x_bb: form.x().clone(),
        y_bb: form.y().clone(),
    };
    Ok((form, rec))
}

/// Records for a batch of probes, in input order.
pub fn simulate_probes(spec: &GaussianChannelSpec, alphas: &[CVector], exec: Exec) -> Result<Vec<ProbeRecord>> {
    exec.try_map(alphas.len(), |i| simulate_probe(spec, alphas[i].as_slice()).map(|(_, r)| r))
}

/// Normalized output state for coherent input `|alpha>`.
pub fn predict_coherent(spec: &GaussianChannelSpec, alpha: &[Complex64]) -> Result<GaussianQForm> {
    output_form(spec, alpha)?.normalize()
}

/// Adds a form's exponent to `p`, mapping mode `m` to symbol slots
/// `zs[m]` (for `Z_m`) and `zbs[m]` (for `Z_m*`).
fn add_form(p: &mut Quadratic, f: &GaussianQForm, zs: &[usize], zbs: &[usize]) {
    let n = f.n_modes();
    p.constant += c(f.c0(), 0.0);
    for m in 0..n {
        p.add_linear(zs[m], f.gamma()[m]);
        p.add_linear(zbs[m], f.gamma()[m].conj());
        for q in 0..n {
            p.add_product(zs[m], zs[q], f.x()[(m, q)] * 0.5);
            p.add_product(zbs[m], zbs[q], f.x()[(m, q)].conj() * 0.5);
            p.add_product(zbs[m], zs[q], f.y()[(m, q)]);
        }
    }
}

/// Unnormalized output Q-form for an input state given by its Gaussian
/// Q-form, `rho_out = tr_a[(rho_in^T (x) I) rho_E]`.
///
/// Both operators are written through their normally ordered symbols and
/// the trace over mode `a` becomes a Gaussian integral over two complex
/// variables `beta`, `gamma` per input mode:
///
/// ```text
/// Q_out(Z_b) = int d^2beta d^2gamma / pi^2  exp(-|gamma|^2 - |beta|^2 + gamma* beta + gamma beta*)
///              Q_E(Z_a* -> gamma*, Z_a -> beta, Z_b) Q_in(Z* -> gamma, Z -> beta*)
/// ```
pub fn predict_gaussian_raw(spec: &GaussianChannelSpec, input: &GaussianQForm) -> Result<GaussianQForm> {
    let k = spec.k;
    if input.n_modes() != k {
        return Err(Error::DimensionMismatch {
            what: "input state modes",
            expected: k,
            found: input.n_modes(),
        });
    }
    // symbol slots: beta, beta*, gamma, gamma*, zb, zb*
    let (beta, betab, gamma, gammab, zb, zbb) = (0, k, 2 * k, 3 * k, 4 * k, 5 * k);
    let mut p = Quadratic::zeros(6 * k);
    for m in 0..k {
        p.add_product(gamma + m, gammab + m, c(-1.0, 0.0));
        p.add_product(beta + m, betab + m, c(-1.0, 0.0));
        p.add_product(gammab + m, beta + m, c(1.0, 0.0));
        p.add_product(gamma + m, betab + m, c(1.0, 0.0));
    }
    let part = spec.choi.partition().expect("partition checked at construction");
    let mut zs = vec![0; 2 * k];
    let mut zbs = vec![0; 2 * k];
    for (i, (&ia, &ib)) in part.a.iter().zip(&part.b).enumerate() {
        zs[ia] = beta + i;
        zbs[ia] = gammab + i;
        zs[ib] = zb + i;
        zbs[ib] = zbb + i;
    }
    add_form(&mut p, &spec.choi, &zs, &zbs);
    let in_zs: Vec<usize> = (0..k).map(|m| betab + m).collect();
    let in_zbs: Vec<usize> = (0..k).map(|m| gamma + m).collect();
    add_form(&mut p, input, &in_zs, &in_zbs);

    // real coordinates (x, y, s, t) per input mode, then (zb, zb*) unchanged
    let mut t = CMatrix::zeros(6 * k, 6 * k);
    for m in 0..k {
        let (x, y, s, tt) = (m, k + m, 2 * k + m, 3 * k + m);
        t[(beta + m, x)] = c(1.0, 0.0);
        t[(beta + m, y)] = c(0.0, 1.0);
        t[(betab + m, x)] = c(1.0, 0.0);
        t[(betab + m, y)] = c(0.0, -1.0);
        t[(gamma + m, s)] = c(1.0, 0.0);
        t[(gamma + m, tt)] = c(0.0, 1.0);
        t[(gammab + m, s)] = c(1.0, 0.0);
        t[(gammab + m, tt)] = c(0.0, -1.0);
    }
    for j in 0..2 * k {
        t[(4 * k + j, 4 * k + j)] = c(1.0, 0.0);
    }
    let reduced = p.substitute(&t).integrate_leading(4 * k)?;
    let c0 = reduced.constant.re - 2.0 * k as f64 * PI.ln();
    let gamma_out = reduced.linear.rows(0, k).into_owned();
    let x_out = reduced.quad.view((0, 0), (k, k)).into_owned();
    let y_out = reduced.quad.view((k, 0), (k, k)).into_owned();
    GaussianQForm::new(c0, gamma_out, x_out, y_out)
}

/// Normalized output state for a Gaussian input state.
pub fn predict_gaussian(spec: &GaussianChannelSpec, input: &GaussianQForm) -> Result<GaussianQForm> {
    predict_gaussian_raw(spec, input)?.normalize()
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::DomainError("squeezing parameter q (need 0 < q < 1)"));
    }
    Ok(())
}

/// Q-form of `Omega_q = (T(q) (x) I) rho_E (T(q) (x) I)`, using
/// `T(q)|Z> = c_q exp(-|Z|^2 (1 - q^2)/2) |qZ>`.
pub fn tmss_output_form(spec: &GaussianChannelSpec, q: f64) -> Result<GaussianQForm> {
    check_q(q)?;
    let k = spec.k;
    let mut b = spec.blocks();
    let qc = c(q, 0.0);
    b.c0 += k as f64 * (1.0 - q * q).ln();
    b.gamma_a *= qc;
    b.x_aa *= qc * qc;
    b.x_ab *= qc;
    b.y_aa = &b.y_aa * (qc * qc) - CMatrix::identity(k, k) * c(1.0 - q * q, 0.0);
    b.y_ab *= qc;
    let form = GaussianQForm::from_blocks(&b)?;
    // keep the caller's mode layout
    let part = spec.choi.partition().expect("partition checked at construction").clone();
    if part == Partition::contiguous(k) {
        return Ok(form);
    }
    let mut perm = vec![0; 2 * k];
    for i in 0..k {
        perm[part.a[i]] = i;
        perm[part.b[i]] = k + i;
    }
    let g = CVector::from_fn(2 * k, |i, _| form.gamma()[perm[i]]);
    let x = CMatrix::from_fn(2 * k, 2 * k, |i, j| form.x()[(perm[i], perm[j])]);
    let y = CMatrix::from_fn(2 * k, 2 * k, |i, j| form.y()[(perm[i], perm[j])]);
    GaussianQForm::new(form.c0(), g, x, y)?.with_partition(part)
}

/// `N_q(alpha) = exp(-|alpha|^2 (1 - 1/q^2)/2) / c_q^k`, the factor relating
/// `<alpha*/q| Omega_q |alpha*/q>` to the coherent-input output.
pub fn nq_factor(alpha: &[Complex64], q: f64) -> Result<f64> {
    check_q(q)?;
    let n2: f64 = alpha.iter().map(|a| a.norm_sqr()).sum();
    let cq = (1.0 - q * q).sqrt();
    Ok((-0.5 * n2 * (1.0 - 1.0 / (q * q))).exp() / cq.powi(alpha.len() as i32))
}

/// Channel file contents: either a full Choi form or a named constructor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelSpec {
    Gaussian {
        k: usize,
        #[serde(default)]
        label: String,
        choi: GaussianQForm,
    },
    Bs {
        theta: f64,
    },
    Thermal {
        nbar: f64,
    },
    Phase {
        phi: f64,
    },
    Identity {
        k: usize,
    },
}

impl ChannelSpec {
    pub fn to_gaussian(&self) -> Result<GaussianChannelSpec> {
        match self {
            ChannelSpec::Gaussian { k, label, choi } => {
                let s = GaussianChannelSpec::new(choi.clone(), label.clone())?;
                if s.k() != *k {
                    return Err(Error::DimensionMismatch {
                        what: "channel k",
                        expected: s.k(),
                        found: *k,
                    });
                }
                Ok(s)
            }
            ChannelSpec::Bs { theta } => Ok(bs_channel(*theta)),
            ChannelSpec::Thermal { nbar } => thermal_noise_channel(*nbar),
            ChannelSpec::Phase { phi } => Ok(phase_channel(*phi)),
            ChannelSpec::Identity { k } => identity_channel(*k),
        }
    }

    /// Independent Kraus model on `dim` Fock levels, for the named
    /// single-mode constructors.
    pub fn fock_model(&self, dim: usize) -> Result<KrausChannel> {
        match self {
            ChannelSpec::Bs { theta } => Ok(KrausChannel::beam_splitter(*theta, dim)),
            ChannelSpec::Thermal { nbar } => KrausChannel::thermal_noise(*nbar, dim),
            ChannelSpec::Phase { phi } => Ok(KrausChannel::phase(*phi, dim)),
            ChannelSpec::Identity { k: 1 } => Ok(KrausChannel::identity(dim)),
            ChannelSpec::Identity { .. } => Err(Error::NoOracle("multi-mode identity".into())),
            ChannelSpec::Gaussian { label, .. } => Err(Error::NoOracle(format!("gaussian channel '{label}'"))),
        }
    }
}
