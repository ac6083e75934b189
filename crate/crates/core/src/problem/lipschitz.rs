//! Largest-eigenvalue estimation for symmetric PSD matrices.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Seed for the power-iteration start vector used by [`estimate_lipschitz`].
pub const DEFAULT_POWER_SEED: u64 = 0x5eed_ba11;

/// Default relative inflation applied to power-iteration estimates.
pub const DEFAULT_LIPSCHITZ_TOL: f64 = 1e-6;

const MAX_POWER_ITERS: usize = 200_000;

/// Estimates `lambda_max(q)` for a symmetric PSD matrix by power iteration and
/// inflates the Rayleigh quotient by `(1 + tol)`, so that the result `l`
/// satisfies `lambda_max <= l <= (1 + tol) * lambda_max` once the iteration
/// has converged to relative accuracy well below `tol`.
///
/// The gradient Lipschitz constant of `x -> x'Qx/2` is exactly `lambda_max(Q)`;
/// overestimating keeps the quadratic upper model valid.
pub fn estimate_lipschitz(q: &DMatrix<f64>, tol: f64) -> Result<f64> {
    estimate_lipschitz_seeded(q, tol, DEFAULT_POWER_SEED)
}

pub fn estimate_lipschitz_seeded(q: &DMatrix<f64>, tol: f64, seed: u64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    if !q.is_square() {
        return Err(Error::dims("power iteration (square matrix)", q.nrows(), q.ncols()));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix passed to power iteration".into()));
    }
    let n = q.nrows();
    if n == 0 || q.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    v.normalize_mut();
    let mut w = DVector::zeros(n);

    // The Rayleigh quotient of a PSD matrix increases monotonically toward
    // lambda_max under power iteration; stop once the relative increment has
    // stayed negligible against tol for a few consecutive sweeps.
    let settle = tol * 1e-3;
    let mut rho = 0.0_f64;
    let mut calm = 0;
    for _ in 0..MAX_POWER_ITERS {
        w.gemv(1.0, q, &v, 0.0);
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            // start vector landed in the null space; restart along a basis vector
            v = DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 });
            rho = 0.0;
            continue;
        }
        let change = (next - rho).abs();
        rho = next;
        if change <= settle * rho.abs() {
            calm += 1;
            if calm >= 5 {
                break;
            }
        } else {
            calm = 0;
        }
        v.copy_from(&w);
        v /= norm;
    }
    Ok(rho.max(0.0) * (1.0 + tol))
}
