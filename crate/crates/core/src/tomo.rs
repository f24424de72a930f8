//! Choi-form reconstruction from coherent-probe records.
//!
//! The linear output coefficients give `K (G_b, X_ab, Y_ab) = d` and the
//! output constants give `J (c0, G_a, G_a*, X_aa, X_aa*, Y_aa) = c`. Row
//! layouts for `k` modes:
//!
//! ```text
//! K: [1, alpha* (k), alpha (k)]                                  2k+1 columns
//! J: [1, alpha* (k), alpha (k), 1/2 alpha*_m alpha*_n (m<=n),
//!     1/2 alpha_m alpha_n (m<=n), alpha_m alpha*_n (all m, n)]   (k+1)(2k+1) columns
//! ```
//!
//! With the `1/2` applied to every symmetric product, the unknown paired
//! with `(m, n)` is `X_mm` on the diagonal and `2 X_mn` off it.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, solve_linear, CMatrix, CVector, COND_WARN};
use crate::process::{GaussianChannelSpec, ProbeRecord};
use crate::qform::{ChoiBlocks, GaussianQForm};
use crate::wire::{self, Pair};

/// Records whose `X_bb`, `Y_bb` differ by more than this are rejected.
pub const QUADRATIC_TOL: f64 = 1e-6;
/// Largest accepted disagreement between an unknown and its conjugate partner.
pub const CONJUGATE_TOL: f64 = 1e-6;
/// Relative determinant below which a probe set is inadmissible.
pub const ADMISSIBLE_TOL: f64 = 1e-8;
/// Two probes closer than this count as the same probe.
pub const DUPLICATE_TOL: f64 = 1e-12;

/// `2k + 1`.
pub fn k_columns(k: usize) -> usize {
    2 * k + 1
}

/// `(k + 1)(2k + 1)`.
pub fn j_columns(k: usize) -> usize {
    (k + 1) * (2 * k + 1)
}

/// Probe amplitudes for one tomography run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    k: usize,
    alphas: Vec<CVector>,
    trace_preserving: bool,
}

#[derive(Serialize, Deserialize)]
struct ProbeSetWire {
    k: usize,
    alphas: Vec<Vec<Pair>>,
    #[serde(default)]
    trace_preserving: bool,
}

impl Serialize for ProbeSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProbeSetWire {
            k: self.k,
            alphas: self.alphas.iter().map(wire::vector_pairs).collect(),
            trace_preserving: self.trace_preserving,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProbeSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = ProbeSetWire::deserialize(d)?;
        let alphas = w.alphas.iter().map(|a| wire::vector_from_pairs(a)).collect();
        ProbeSet::new(w.k, alphas, w.trace_preserving).map_err(serde::de::Error::custom)
    }
}

impl ProbeSet {
    pub fn new(k: usize, alphas: Vec<CVector>, trace_preserving: bool) -> Result<Self> {
        if k == 0 {
            return Err(Error::DomainError("mode count must be positive"));
        }
        check_alphas(k, &alphas)?;
        let needed = if trace_preserving { k_columns(k) } else { j_columns(k) };
        if alphas.len() < needed {
            return Err(Error::InsufficientProbes { needed, got: alphas.len() });
        }
        Ok(ProbeSet { k, alphas, trace_preserving })
    }

    /// The default set: `{0, 1, i, -1, -i, 1+i}` for one mode, in that
    /// order. For `k` modes: the origin, `{1, i, -1, -i, 1+i}` along each
    /// mode axis, then `(u, v)` in `{(1,1), (1,i), (i,1), (1+i,1+i)}` on each
    /// pair of modes `m < n`. Exactly `(k+1)(2k+1)` probes.
    pub fn default_general(k: usize) -> Self {
        let one = c(1.0, 0.0);
        let i = c(0.0, 1.0);
        let mut alphas = vec![CVector::zeros(k)];
        for m in 0..k {
            for v in [one, i, -one, -i, one + i] {
                let mut a = CVector::zeros(k);
                a[m] = v;
                alphas.push(a);
            }
        }
        for m in 0..k {
            for n in m + 1..k {
                for (u, v) in [(one, one), (one, i), (i, one), (one + i, one + i)] {
                    let mut a = CVector::zeros(k);
                    a[m] = u;
                    a[n] = v;
                    alphas.push(a);
                }
            }
        }
        ProbeSet {
            k,
            alphas,
            trace_preserving: false,
        }
    }

    /// The origin and `{1, i}` along each mode axis: `2k + 1` probes.
    pub fn default_tp(k: usize) -> Self {
        let mut alphas = vec![CVector::zeros(k)];
        for m in 0..k {
            for v in [c(1.0, 0.0), c(0.0, 1.0)] {
                let mut a = CVector::zeros(k);
                a[m] = v;
                alphas.push(a);
            }
        }
        ProbeSet {
            k,
            alphas,
            trace_preserving: true,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alphas(&self) -> &[CVector] {
        &self.alphas
    }

    pub fn trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    /// Every amplitude multiplied by `s`.
    pub fn scaled(&self, s: Complex64) -> Self {
        ProbeSet {
            alphas: self.alphas.iter().map(|a| a * s).collect(),
            ..self.clone()
        }
    }
}

fn check_alphas(k: usize, alphas: &[CVector]) -> Result<()> {
    for a in alphas {
        if a.len() != k {
            return Err(Error::DimensionMismatch {
                what: "probe amplitude",
                expected: k,
                found: a.len(),
            });
        }
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("probe amplitude"));
        }
    }
    for i in 0..alphas.len() {
        for j in i + 1..alphas.len() {
            if (&alphas[i] - &alphas[j]).norm() <= DUPLICATE_TOL {
                return Err(Error::DuplicateProbe(i, j));
            }
        }
    }
    Ok(())
}

fn common_k(alphas: &[CVector]) -> Result<usize> {
    let k = alphas.first().map(|a| a.len()).ok_or(Error::InsufficientProbes { needed: 1, got: 0 })?;
    for a in alphas {
        if a.len() != k {
            return Err(Error::DimensionMismatch {
                what: "probe amplitude",
                expected: k,
                found: a.len(),
            });
        }
    }
    if k == 0 {
        return Err(Error::DomainError("mode count must be positive"));
    }
    Ok(k)
}

/// One `K` row per probe.
pub fn build_k(alphas: &[CVector]) -> Result<CMatrix> {
    let k = common_k(alphas)?;
    Ok(CMatrix::from_fn(alphas.len(), k_columns(k), |i, j| {
        let a = &alphas[i];
        match j {
            0 => c(1.0, 0.0),
            j if j <= k => a[j - 1].conj(),
            j => a[j - 1 - k],
        }
    }))
}

/// Upper-triangle index pairs `(m, n)`, `m <= n`, row-major.
fn upper_pairs(k: usize) -> Vec<(usize, usize)> {
    (0..k).flat_map(|m| (m..k).map(move |n| (m, n))).collect()
}

/// One `J` row per probe.
pub fn build_j(alphas: &[CVector]) -> Result<CMatrix> {
    let k = common_k(alphas)?;
    let pairs = upper_pairs(k);
    let mut j = CMatrix::zeros(alphas.len(), j_columns(k));
    for (i, a) in alphas.iter().enumerate() {
        let mut col = 0;
        let mut put = |v: Complex64| {
            j[(i, col)] = v;
            col += 1;
        };
        put(c(1.0, 0.0));
        a.iter().for_each(|z| put(z.conj()));
        a.iter().for_each(|z| put(*z));
        pairs.iter().for_each(|&(m, n)| put(a[m].conj() * a[n].conj() * 0.5));
        pairs.iter().for_each(|&(m, n)| put(a[m] * a[n] * 0.5));
        for m in 0..k {
            for n in 0..k {
                put(a[m] * a[n].conj());
            }
        }
    }
    Ok(j)
}

/// Reconstructed channel plus solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiReconstruction {
    pub choi: GaussianQForm,
    #[serde(rename = "residual_K")]
    pub residual_k: f64,
    #[serde(rename = "residual_J")]
    pub residual_j: f64,
    #[serde(rename = "cond_K")]
    pub cond_k: f64,
    #[serde(rename = "cond_J")]
    pub cond_j: f64,
    /// Largest deviation of any record's `X_bb`, `Y_bb` from their mean.
    pub quadratic_consistency: f64,
    /// The a-side blocks were inferred from trace preservation rather than
    /// from measured constants.
    pub tp_assumed: bool,
    /// Largest conjugate-partner disagreement seen in the `J` solution.
    pub conjugate_deviation: f64,
}

impl ChoiReconstruction {
    pub fn blocks(&self) -> ChoiBlocks {
        self.choi.blocks().expect("reconstructions are partitioned")
    }

    pub fn to_spec(&self) -> Result<GaussianChannelSpec> {
        GaussianChannelSpec::new(self.choi.clone(), "reconstruction")
    }
}

/// Mean `X_bb`, `Y_bb` across records and the largest deviation from it.
fn shared_quadratic(records: &[ProbeRecord]) -> Result<(CMatrix, CMatrix, f64)> {
    let k = records[0].k();
    for r in records {
        r.validate()?;
        if r.k() != k {
            return Err(Error::DimensionMismatch {
                what: "record mode count",
                expected: k,
                found: r.k(),
            });
        }
    }
    let n = c(records.len() as f64, 0.0);
    let x = records.iter().fold(CMatrix::zeros(k, k), |acc, r| acc + &r.x_bb) / n;
    let y = records.iter().fold(CMatrix::zeros(k, k), |acc, r| acc + &r.y_bb) / n;
    let dev = records
        .iter()
        .map(|r| linalg::max_abs(&(&r.x_bb - &x)).max(linalg::max_abs(&(&r.y_bb - &y))))
        .fold(0.0, f64::max);
    if dev > QUADRATIC_TOL {
        return Err(Error::QuadraticInconsistency { deviation: dev });
    }
    Ok((linalg::symmetrize(&x), linalg::hermitize(&y), dev))
}

fn solve_checked(m: &CMatrix, rhs: &CMatrix, what: &'static str) -> Result<linalg::LinearSolution> {
    let rel = linalg::relative_volume(m);
    let ill = |condition: f64| Error::IllConditioned {
        what,
        condition,
        relative_det: rel,
    };
    let sol = solve_linear(m, rhs).map_err(|e| match e {
        Error::Singular { .. } => ill(linalg::condition_number(m)),
        other => other,
    })?;
    if sol.condition > COND_WARN || rel < ADMISSIBLE_TOL {
        return Err(ill(sol.condition));
    }
    Ok(sol)
}

/// Output-side linear blocks from the `K` system.
fn solve_k(alphas: &[CVector], d: &CMatrix) -> Result<(CVector, CMatrix, CMatrix, f64, f64)> {
    let k = d.ncols();
    let sol = solve_checked(&build_k(alphas)?, d, "K")?;
    let s = &sol.solution;
    let gamma_b = s.row(0).transpose();
    let x_ab = s.rows(1, k).into_owned();
    let y_ab = s.rows(1 + k, k).into_owned();
    Ok((gamma_b, x_ab, y_ab, sol.residual_norm, sol.condition))
}

struct InputSide {
    c0: f64,
    gamma_a: CVector,
    x_aa: CMatrix,
    y_aa: CMatrix,
    residual: f64,
    condition: f64,
    conjugate_deviation: f64,
}

/// Input-side blocks from the `J` system, with conjugate-partner checks.
///
/// Measured constants are real, and for real data a unique (least-squares)
/// solution is automatically conjugate-consistent; the checks catch
/// corrupted complex input and numerical breakdown.
fn solve_j(alphas: &[CVector], cvals: &[Complex64], k: usize) -> Result<InputSide> {
    let rhs = CMatrix::from_column_slice(cvals.len(), 1, cvals);
    let sol = solve_checked(&build_j(alphas)?, &rhs, "J")?;
    let u = sol.solution.column(0);
    let pairs = upper_pairs(k);
    let np = pairs.len();

    let gamma = CVector::from_fn(k, |m, _| u[1 + m]);
    let gamma_conj = CVector::from_fn(k, |m, _| u[1 + k + m]);
    let xs = CVector::from_fn(np, |p, _| u[1 + 2 * k + p]);
    let xs_conj = CVector::from_fn(np, |p, _| u[1 + 2 * k + np + p]);
    let y_off = 1 + 2 * k + 2 * np;
    let y = CMatrix::from_fn(k, k, |m, n| u[y_off + m * k + n]);

    let vdev = |a: &CVector, b: &CVector| (a - b.map(|z| z.conj())).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let dev_g = vdev(&gamma, &gamma_conj);
    if dev_g > CONJUGATE_TOL {
        return Err(Error::ConjugateMismatch {
            what: "Gamma_a",
            deviation: dev_g,
        });
    }
    let dev_x = vdev(&xs, &xs_conj);
    if dev_x > CONJUGATE_TOL {
        return Err(Error::ConjugateMismatch {
            what: "X_aa",
            deviation: dev_x,
        });
    }
    let dev_y = linalg::max_abs(&(&y - y.adjoint()));
    if dev_y > CONJUGATE_TOL {
        return Err(Error::ConjugateMismatch {
            what: "Y_aa",
            deviation: dev_y,
        });
    }
    let dev_c = u[0].im.abs();
    if dev_c > CONJUGATE_TOL {
        return Err(Error::ConjugateMismatch { what: "c0", deviation: dev_c });
    }

    let gamma_a = (&gamma + gamma_conj.map(|z| z.conj())) * c(0.5, 0.0);
    let xs = (&xs + xs_conj.map(|z| z.conj())) * c(0.5, 0.0);
    let mut x_aa = CMatrix::zeros(k, k);
    for (p, &(m, n)) in pairs.iter().enumerate() {
        if m == n {
            x_aa[(m, m)] = xs[p];
        } else {
            x_aa[(m, n)] = xs[p] * 0.5;
            x_aa[(n, m)] = xs[p] * 0.5;
        }
    }
    Ok(InputSide {
        c0: u[0].re,
        gamma_a,
        x_aa,
        y_aa: linalg::hermitize(&y),
        residual: sol.residual_norm,
        condition: sol.condition,
        conjugate_deviation: dev_g.max(dev_x).max(dev_y).max(dev_c),
    })
}

/// Full Choi reconstruction.
///
/// With `trace_preserving`, only the `K` system is solved from data. The
/// constants are then fixed by normalization: for a trace-preserving map
/// `c(alpha) = -ln(integral of the output with c0 = 0)`, which is evaluated
/// on the default general probe set and fed to the `J` solve.
pub fn reconstruct(records: &[ProbeRecord], trace_preserving: bool) -> Result<ChoiReconstruction> {
    if records.is_empty() {
        return Err(Error::InsufficientProbes { needed: 1, got: 0 });
    }
    let alphas: Vec<CVector> = records.iter().map(|r| r.alpha.clone()).collect();
    let k = common_k(&alphas)?;
    ProbeSet::new(k, alphas.clone(), trace_preserving)?;
    let (x_bb, y_bb, quad_dev) = shared_quadratic(records)?;

    let d = CMatrix::from_fn(records.len(), k, |i, j| records[i].d[j]);
    let (gamma_b, x_ab, y_ab, residual_k, cond_k) = solve_k(&alphas, &d)?;

    let (j_alphas, cvals) = if trace_preserving {
        let probes = ProbeSet::default_general(k).alphas;
        let mut cvals = Vec::with_capacity(probes.len());
        for a in &probes {
            let dv = &gamma_b + x_ab.transpose() * a.map(|z| z.conj()) + y_ab.transpose() * a;
            let out = GaussianQForm::new(0.0, dv, x_bb.clone(), y_bb.clone())?;
            cvals.push(c(-out.log_integral()?, 0.0));
        }
        (probes, cvals)
    } else {
        (alphas, records.iter().map(|r| c(r.c, 0.0)).collect())
    };
    let side = solve_j(&j_alphas, &cvals, k)?;

    let blocks = ChoiBlocks {
        c0: side.c0,
        gamma_a: side.gamma_a,
        gamma_b,
        x_aa: side.x_aa,
        x_ab,
        x_bb,
        y_aa: side.y_aa,
        y_ab,
        y_bb,
    };
    Ok(ChoiReconstruction {
        choi: GaussianQForm::from_blocks(&blocks)?,
        residual_k,
        residual_j: side.residual,
        cond_k,
        cond_j: side.condition,
        quadratic_consistency: quad_dev,
        tp_assumed: trace_preserving,
        conjugate_deviation: side.conjugate_deviation,
    })
}

/// Explicit solution for the six single-mode default probes
/// `{0, 1, i, -1, -i, 1+i}`, in that order.
pub fn closed_form_default(records: &[ProbeRecord]) -> Result<ChoiReconstruction> {
    let default = ProbeSet::default_general(1);
    if records.len() != 6 {
        return Err(Error::InsufficientProbes { needed: 6, got: records.len() });
    }
    let mut deviation: f64 = 0.0;
    for (r, a) in records.iter().zip(default.alphas()) {
        if r.k() != 1 {
            return Err(Error::DimensionMismatch {
                what: "record mode count",
                expected: 1,
                found: r.k(),
            });
        }
        deviation = deviation.max((r.alpha[0] - a[0]).norm());
    }
    if deviation > DUPLICATE_TOL {
        return Err(Error::WrongProbeSet { deviation });
    }
    let (x_bb, y_bb, quad_dev) = shared_quadratic(records)?;
    let d: Vec<Complex64> = records.iter().map(|r| r.d[0]).collect();
    let cv: Vec<Complex64> = records.iter().map(|r| c(r.c, 0.0)).collect();
    let i = c(0.0, 1.0);
    let one = c(1.0, 0.0);

    let gamma_b = d[0];
    let x_ab = (-(one + i) * d[0] + d[1] + i * d[2]) * 0.5;
    let y_ab = (-(one - i) * d[0] + d[1] - i * d[2]) * 0.5;
    let c0 = cv[0];
    let gamma_a = (cv[1] + i * cv[2] - cv[3] - i * cv[4]) * 0.25;
    let x_aa = (c(0.0, 2.0) * cv[0] + c(1.0, -2.0) * cv[1] - c(1.0, 2.0) * cv[2] + cv[3] - cv[4] + c(0.0, 2.0) * cv[5]) * 0.25;
    let y_aa = -cv[0] + (cv[1] + cv[2] + cv[3] + cv[4]) * 0.25;

    let m1 = |z: Complex64| CMatrix::from_element(1, 1, z);
    let blocks = ChoiBlocks {
        c0: c0.re,
        gamma_a: CVector::from_element(1, gamma_a),
        gamma_b: CVector::from_element(1, gamma_b),
        x_aa: m1(x_aa),
        x_ab: m1(x_ab),
        x_bb,
        y_aa: m1(c(y_aa.re, 0.0)),
        y_ab: m1(y_ab),
        y_bb,
    };

    // diagnostics from the equivalent linear systems
    let kmat = build_k(default.alphas())?;
    let jmat = build_j(default.alphas())?;
    let kx = CVector::from_column_slice(&[gamma_b, x_ab, y_ab]);
    let dv = CVector::from_column_slice(&d);
    let jx = CVector::from_column_slice(&[c0, gamma_a, gamma_a.conj(), x_aa, x_aa.conj(), c(y_aa.re, 0.0)]);
    let cvec = CVector::from_column_slice(&cv);
    Ok(ChoiReconstruction {
        choi: GaussianQForm::from_blocks(&blocks)?,
        residual_k: (&kmat * kx - dv).norm(),
        residual_j: (&jmat * jx - cvec).norm(),
        cond_k: linalg::condition_number(&kmat),
        cond_j: linalg::condition_number(&jmat),
        quadratic_consistency: quad_dev,
        tp_assumed: false,
        conjugate_deviation: 0.0,
    })
}

/// One ranked entry of a probe-design report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignEntry {
    /// Position of the set in the candidate list.
    pub index: usize,
    pub k: usize,
    pub probes: usize,
    pub trace_preserving: bool,
    #[serde(rename = "columns_K")]
    pub columns_k: usize,
    #[serde(rename = "columns_J")]
    pub columns_j: usize,
    /// `|det K|` (product of singular values for tall systems).
    #[serde(rename = "det_K")]
    pub det_k: f64,
    #[serde(rename = "det_J")]
    pub det_j: Option<f64>,
    /// Determinants relative to Hadamard's bound, the scale-free measure
    /// used for admissibility.
    #[serde(rename = "relative_det_K")]
    pub relative_det_k: f64,
    #[serde(rename = "relative_det_J")]
    pub relative_det_j: Option<f64>,
    #[serde(rename = "cond_K")]
    pub cond_k: f64,
    #[serde(rename = "cond_J")]
    pub cond_j: Option<f64>,
    pub admissible: bool,
}

impl DesignEntry {
    fn rank_key(&self) -> f64 {
        self.cond_k.max(self.cond_j.unwrap_or(0.0))
    }
}

/// Ranks candidate probe sets by `max(cond K, cond J)`, best first. The `J`
/// system is skipped for trace-preserving sets.
pub fn probe_design(candidates: &[ProbeSet]) -> Result<Vec<DesignEntry>> {
    let mut out = Vec::with_capacity(candidates.len());
    for (index, set) in candidates.iter().enumerate() {
        let kmat = build_k(set.alphas())?;
        let (det_j, relative_det_j, cond_j) = if set.trace_preserving {
            (None, None, None)
        } else {
            let jmat = build_j(set.alphas())?;
            (
                Some(linalg::volume(&jmat)),
                Some(linalg::relative_volume(&jmat)),
                Some(linalg::condition_number(&jmat)),
            )
        };
        let relative_det_k = linalg::relative_volume(&kmat);
        let admissible = relative_det_k > ADMISSIBLE_TOL && relative_det_j.is_none_or(|v| v > ADMISSIBLE_TOL);
        out.push(DesignEntry {
            index,
            k: set.k(),
            probes: set.alphas().len(),
            trace_preserving: set.trace_preserving,
            columns_k: k_columns(set.k()),
            columns_j: j_columns(set.k()),
            det_k: linalg::volume(&kmat),
            det_j,
            relative_det_k,
            relative_det_j,
            cond_k: linalg::condition_number(&kmat),
            cond_j,
            admissible,
        });
    }
    out.sort_by(|a, b| a.rank_key().total_cmp(&b.rank_key()).then(a.index.cmp(&b.index)));
    Ok(out)
}

/// Adds independent `N(0, sigma^2)` noise to `Re d`, `Im d` and `c` of every
/// record, in record order. Deterministic for a given seed.
pub fn add_noise(records: &[ProbeRecord], sigma: f64, seed: u64) -> Result<Vec<ProbeRecord>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::DomainError("noise level sigma"));
    }
    if sigma == 0.0 {
        return Ok(records.to_vec());
    }
    let normal = Normal::new(0.0, sigma).map_err(|_| Error::DomainError("noise level sigma"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            for z in r.d.iter_mut() {
                let re = normal.sample(&mut rng);
                let im = normal.sample(&mut rng);
                *z += c(re, im);
            }
            r.c += normal.sample(&mut rng);
            r
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::process::{bs_channel, identity_channel, random_choi, simulate_probes};
    use std::f64::consts::FRAC_PI_3;

    fn records(spec: &GaussianChannelSpec, set: &ProbeSet) -> Vec<ProbeRecord> {
        simulate_probes(spec, set.alphas(), Exec::default()).unwrap()
    }

    fn scalar_alphas(v: &[Complex64]) -> Vec<CVector> {
        v.iter().map(|&z| CVector::from_element(1, z)).collect()
    }

    #[test]
    fn k_matrix_examples() {
        let k = build_k(&scalar_alphas(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)])).unwrap();
        let expect = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(1., 0.),
                c(0., 0.),
                c(0., 0.),
                c(1., 0.),
                c(1., 0.),
                c(1., 0.),
                c(1., 0.),
                c(0., -1.),
                c(0., 1.),
            ],
        );
        assert_eq!(k, expect);
        assert!((k.determinant() - c(0.0, 2.0)).norm() < 1e-15);

        let real = build_k(&scalar_alphas(&[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)])).unwrap();
        assert!(solve_linear(&real, &CMatrix::zeros(3, 1)).is_err());

        let k2 = build_k(ProbeSet::default_tp(2).alphas()).unwrap();
        assert_eq!(k2.shape(), (5, 5));
    }

    #[test]
    fn j_matrix_examples() {
        let j = build_j(ProbeSet::default_general(1).alphas()).unwrap();
        assert_eq!(j.shape(), (6, 6));
        let row = j.row(5);
        let expect = [c(1., 0.), c(1., -1.), c(1., 1.), c(0., -1.), c(0., 1.), c(2., 0.)];
        for (a, b) in row.iter().zip(expect) {
            assert!((a - b).norm() < 1e-15);
        }
        assert!((j.determinant().norm() - 16.0).abs() < 1e-12);
        assert_eq!(build_j(ProbeSet::default_general(2).alphas()).unwrap().ncols(), 15);
    }

    #[test]
    fn default_sets_have_formula_sizes() {
        for k in 1..=4 {
            assert_eq!(ProbeSet::default_general(k).alphas().len(), j_columns(k));
            assert_eq!(ProbeSet::default_tp(k).alphas().len(), k_columns(k));
        }
    }

    #[test]
    fn bs_reconstruction() {
        let recs = records(&bs_channel(FRAC_PI_3), &ProbeSet::default_general(1));
        let r = reconstruct(&recs, false).unwrap();
        let b = r.blocks();
        let mut expect = ChoiBlocks::zeros(1);
        expect.y_bb[(0, 0)] = c(-1.0, 0.0);
        expect.x_ab[(0, 0)] = c(0.5, 0.0);
        expect.y_aa[(0, 0)] = c(-0.25, 0.0);
        assert!(b.max_deviation(&expect) < 1e-14);
        assert!(r.residual_k < 1e-12 && r.residual_j < 1e-12);
    }

    #[test]
    fn closed_form_bs_records() {
        let recs = records(&bs_channel(FRAC_PI_3), &ProbeSet::default_general(1));
        let expect_d = [c(0., 0.), c(0.5, 0.), c(0., -0.5), c(-0.5, 0.), c(0., 0.5), c(0.5, -0.5)];
        let expect_c = [0.0, -0.25, -0.25, -0.25, -0.25, -0.5];
        for (r, (d, cv)) in recs.iter().zip(expect_d.iter().zip(expect_c)) {
            assert!((r.d[0] - d).norm() < 1e-15);
            assert!((r.c - cv).abs() < 1e-15);
        }
        let cf = closed_form_default(&recs).unwrap();
        let gen = reconstruct(&recs, false).unwrap();
        assert!(cf.blocks().max_deviation(&gen.blocks()) < 1e-12);
        assert!(cf.residual_k < 1e-14 && cf.residual_j < 1e-14);
    }

    #[test]
    fn closed_form_identity() {
        let recs = records(&identity_channel(1).unwrap(), &ProbeSet::default_general(1));
        let b = closed_form_default(&recs).unwrap().blocks();
        assert!(b.max_deviation(&identity_channel(1).unwrap().blocks()) < 1e-15);
    }

    #[test]
    fn closed_form_requires_default_order() {
        let mut recs = records(&bs_channel(0.4), &ProbeSet::default_general(1));
        recs.swap(1, 2);
        assert!(matches!(closed_form_default(&recs), Err(Error::WrongProbeSet { .. })));
        // the generic solver does not care
        assert!(reconstruct(&recs, false).is_ok());
    }

    #[test]
    fn real_probes_are_ill_conditioned() {
        let alphas = scalar_alphas(&(0..6).map(|i| c(i as f64, 0.0)).collect::<Vec<_>>());
        let recs = simulate_probes(&bs_channel(0.3), &alphas, Exec::default()).unwrap();
        assert!(matches!(reconstruct(&recs, false), Err(Error::IllConditioned { what: "K", .. })));
    }

    #[test]
    fn too_few_probes() {
        let set = ProbeSet::default_tp(1);
        let recs = records(&bs_channel(0.3), &set);
        assert!(matches!(reconstruct(&recs, false), Err(Error::InsufficientProbes { needed: 6, got: 3 })));
        assert!(reconstruct(&recs, true).is_ok());
    }

    #[test]
    fn duplicate_probes_rejected() {
        let alphas = scalar_alphas(&[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(ProbeSet::new(1, alphas, true), Err(Error::DuplicateProbe(1, 2))));
    }

    #[test]
    fn corrupted_quadratic_block_detected() {
        let mut recs = records(&bs_channel(0.3), &ProbeSet::default_general(1));
        recs[3].y_bb[(0, 0)] += c(1e-3, 0.0);
        assert!(matches!(reconstruct(&recs, false), Err(Error::QuadraticInconsistency { .. })));
    }

    #[test]
    fn complex_constants_fail_conjugate_check() {
        let recs = records(&bs_channel(0.3), &ProbeSet::default_general(1));
        let alphas: Vec<CVector> = recs.iter().map(|r| r.alpha.clone()).collect();
        let mut cv: Vec<Complex64> = recs.iter().map(|r| c(r.c, 0.0)).collect();
        assert!(solve_j(&alphas, &cv, 1).is_ok());
        cv[1].im = 0.1;
        assert!(matches!(solve_j(&alphas, &cv, 1), Err(Error::ConjugateMismatch { .. })));
    }

    #[test]
    fn permutation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_choi(1, &mut rng);
        let mut recs = records(&s, &ProbeSet::default_general(1));
        let a = reconstruct(&recs, false).unwrap();
        recs.reverse();
        recs.swap(0, 3);
        let b = reconstruct(&recs, false).unwrap();
        assert!(a.blocks().max_deviation(&b.blocks()) < 1e-12);
    }

    #[test]
    fn closed_form_matches_solver_on_random_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let s = random_choi(1, &mut rng);
            let recs = records(&s, &ProbeSet::default_general(1));
            let cf = closed_form_default(&recs).unwrap();
            let gen = reconstruct(&recs, false).unwrap();
            assert!(cf.blocks().max_deviation(&gen.blocks()) < 1e-12);
        }
    }

    #[test]
    fn noisy_overdetermined_bs() {
        let s = bs_channel(FRAC_PI_3);
        let mut alphas = Vec::new();
        for i in 0..24 {
            let t = i as f64 * 0.7;
            let r = 0.3 + 0.1 * (i % 7) as f64;
            alphas.push(CVector::from_element(1, c(r * t.cos(), r * t.sin())));
        }
        let clean = simulate_probes(&s, &alphas, Exec::default()).unwrap();
        for seed in 0..10 {
            let noisy = add_noise(&clean, 1e-6, seed).unwrap();
            let r = reconstruct(&noisy, false).unwrap();
            assert!(r.residual_k > 0.0);
            assert!(r.blocks().max_deviation(&s.blocks()) < 1e-4, "seed {seed}");
        }
    }

    #[test]
    fn random_round_trip_multi_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for k in 1..=3 {
            let s = random_choi(k, &mut rng);
            let recs = records(&s, &ProbeSet::default_general(k));
            let r = reconstruct(&recs, false).unwrap();
            assert!(r.blocks().max_deviation(&s.blocks()) < 1e-10, "k={k}");
        }
    }

    #[test]
    fn tp_path_recovers_a_side() {
        let s = bs_channel(FRAC_PI_3);
        let r = reconstruct(&records(&s, &ProbeSet::default_tp(1)), true).unwrap();
        assert!(r.tp_assumed);
        assert!(r.blocks().max_deviation(&s.blocks()) < 1e-12);
    }

    #[test]
    fn overdetermined_matches_exact() {
        let s = bs_channel(0.8);
        let six = reconstruct(&records(&s, &ProbeSet::default_general(1)), false).unwrap();
        let mut alphas = ProbeSet::default_general(1).alphas().to_vec();
        for z in [c(0.5, 0.2), c(-0.7, 0.9), c(1.3, -0.4), c(0.1, -1.1), c(-1.2, -0.6), c(0.9, 0.9)] {
            alphas.push(CVector::from_element(1, z));
        }
        let twelve = ProbeSet::new(1, alphas, false).unwrap();
        let r = reconstruct(&records(&s, &twelve), false).unwrap();
        assert!(r.blocks().max_deviation(&six.blocks()) < 1e-10);
    }

    #[test]
    fn noise_is_deterministic() {
        let recs = records(&bs_channel(0.3), &ProbeSet::default_general(1));
        assert_eq!(add_noise(&recs, 0.0, 1).unwrap(), recs);
        let a = add_noise(&recs, 1e-3, 42).unwrap();
        let b = add_noise(&recs, 1e-3, 42).unwrap();
        let other = add_noise(&recs, 1e-3, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, other);
        assert_ne!(a, recs);
        assert!(add_noise(&recs, -1.0, 1).is_err());
    }

    #[test]
    fn design_ranking() {
        let default = ProbeSet::default_general(1);
        let real = ProbeSet::new(1, scalar_alphas(&(0..6).map(|i| c(i as f64, 0.0)).collect::<Vec<_>>()), false).unwrap();
        let scaled = default.scaled(c(2.0, 0.0));
        let report = probe_design(&[real, default, scaled]).unwrap();
        assert_eq!(report[0].index, 1);
        assert!(report[0].admissible);
        let real_entry = report.iter().find(|e| e.index == 0).unwrap();
        assert!(!real_entry.admissible);
        let scaled_entry = report.iter().find(|e| e.index == 2).unwrap();
        assert!(scaled_entry.admissible);
        // det K gains 2 * 2 from the two linear columns, det J 2 * 2 * 4 * 4 * 4
        assert!((scaled_entry.det_k / report[0].det_k - 4.0).abs() < 1e-10);
        assert!((scaled_entry.det_j.unwrap() / report[0].det_j.unwrap() - 256.0).abs() < 1e-8);
        assert!((scaled_entry.cond_k - report[0].cond_k).abs() > 1e-6);
    }

    #[test]
    fn probe_set_json() {
        let set = ProbeSet::default_general(2);
        let text = serde_json::to_string(&set).unwrap();
        let back: ProbeSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, set);
        let short = r#"{"k":1,"alphas":[[[0,0]],[[1,0]]]}"#;
        assert!(serde_json::from_str::<ProbeSet>(short).is_err());
    }

    #[test]
    fn reconstruction_json() {
        let recs = records(&bs_channel(0.3), &ProbeSet::default_general(1));
        let r = reconstruct(&recs, false).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"residual_K\"") && text.contains("\"cond_J\""));
        let back: ChoiReconstruction = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
