//! Numeric plumbing shared by every other module: a seeded RNG, a dense
//! matrix of finite reals, the Adam optimizer, and a finite-difference
//! gradient checker. Deliberately not a tensor library; everything here is
//! sized for tabular data on one machine.

mod adam;
mod gradcheck;
mod linalg;
mod matrix;
mod rng;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{finite_diff_check, finite_diff_check_with_floor, GradCheckOutcome, FD_STEP};
pub use linalg::{cholesky, jacobi_eigh};
pub use matrix::RealMatrix;
pub use rng::SeededRng;

/// ln(2*pi), used by every Gaussian log-density in the crate.
pub const LN_2PI: f64 = 1.8378770664093453;

/// Standard normal log-density at z.
#[inline]
pub fn log_std_normal(z: f64) -> f64 {
    -0.5 * z * z - 0.5 * LN_2PI
}

/// Numerically stable log(sum(exp(xs))). Returns -inf on an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        // All -inf (or empty): the sum is exp(m) exactly. +inf propagates.
        return m;
    }
    let s: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + s.ln()
}

/// Stable log(exp(a) + exp(b)).
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if !hi.is_finite() {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Logistic function, stable on both tails.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + exp(x)) without overflow; note ln(sigmoid(x)) = -softplus(-x).
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}
