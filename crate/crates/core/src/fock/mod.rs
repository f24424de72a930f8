//! Truncated Fock-space oracle.
//!
//! Everything here is brute-force matrix algebra on `cutoff + 1` levels per
//! mode. It exists to check the analytic Gaussian paths independently, and
//! it also carries the finite-dimensional (qudit) tomography, where
//! truncation is not an approximation at all.
//!
//! Bipartite basis ordering is fixed: index `j * dim + m` for `|j>_a |m>_b`
//! (a-mode major). Every partial trace and one-sided map uses it.

mod channel;
mod choi;
mod operator;
mod state;

pub use channel::KrausChannel;
pub use choi::{
    amplification, choi_from_channel, maximally_entangled, predict_from_choi, predict_from_choi_density, qudit_predict, qudit_reconstruct, schmidt_vector,
    t_operator, t_operator_finite, tmss_reconstruct,
};
pub use operator::{FockOperator, OperatorKind};
pub use state::{
    coherent_tail, coherent_vector, coherent_vector_with_tol, displaced_squeezed_vector, displacement, fock_vector, q_eval, squeeze_operator, thermal_density,
    tmss_vector, tmss_vector_with_tol,
};

/// Largest discarded amplitude norm accepted when building a truncated state.
pub const TAIL_TOL: f64 = 1e-12;

/// Absolute accuracy budget of truncated states: the squared amplitude tail
/// that [`TAIL_TOL`] permits. [`tmss_reconstruct`] multiplies it by the
/// `T^-1(q)` amplification to decide whether a reconstruction is meaningful.
pub const TRUNCATION_BUDGET: f64 = TAIL_TOL * TAIL_TOL;

/// `ln n!`, exact products up to 30 and a running log-sum beyond.
pub fn ln_factorial(n: usize) -> f64 {
    if n <= 30 {
        (1..=n).map(|k| k as f64).product::<f64>().ln()
    } else {
        ln_factorial(30) + (31..=n).map(|k| (k as f64).ln()).sum::<f64>()
    }
}

/// `C(n, k)` through logs.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}
