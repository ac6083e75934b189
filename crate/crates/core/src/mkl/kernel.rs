use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRID_LOWER: f64 = 1e-4;
pub const GRID_UPPER: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `a'b`.
    Linear,
    /// `(1 + a'b)^degree`.
    Polynomial { degree: f64 },
    /// `exp(-||a - b||^2 / (2 sigma_sq))`.
    Gaussian { sigma_sq: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Polynomial { degree } if degree > 0.0 && degree.is_finite() => Ok(()),
            KernelSpec::Gaussian { sigma_sq } if sigma_sq > 0.0 && sigma_sq.is_finite() => Ok(()),
            other => Err(Error::InvalidParameter(format!(
                "kernel parameter must be positive: {other:?}"
            ))),
        }
    }

    /// Kernel value from the inner product and squared distance of a pair.
    fn eval_parts(&self, inner: f64, dist_sq: f64) -> f64 {
        match *self {
            KernelSpec::Linear => inner,
            KernelSpec::Polynomial { degree } => (1.0 + inner).powf(degree),
            KernelSpec::Gaussian { sigma_sq } => (-dist_sq / (2.0 * sigma_sq)).exp(),
        }
    }

    pub fn sigma_sq(&self) -> Option<f64> {
        match *self {
            KernelSpec::Gaussian { sigma_sq } => Some(sigma_sq),
            _ => None,
        }
    }
}

pub(crate) fn eval_unchecked(spec: &KernelSpec, a: &[f64], b: &[f64]) -> f64 {
    let mut inner = 0.0;
    let mut dist_sq = 0.0;
    for (u, v) in a.iter().zip(b) {
        inner += u * v;
        dist_sq += (u - v) * (u - v);
    }
    spec.eval_parts(inner, dist_sq)
}

pub fn kernel_value(spec: &KernelSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dims("kernel argument", a.len(), b.len()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kernel argument".into()));
    }
    spec.validate()?;
    Ok(eval_unchecked(spec, a, b))
}

/// `count` Gaussian kernels with `sigma^2` log-spaced over `[1e-4, 1e4]`; a
/// single kernel gets `sigma^2 = 1`.
pub fn gaussian_grid(count: usize) -> Vec<KernelSpec> {
    match count {
        0 => Vec::new(),
        1 => vec![KernelSpec::Gaussian { sigma_sq: 1.0 }],
        _ => {
            let (lo, hi) = (GRID_LOWER.log10(), GRID_UPPER.log10());
            (0..count)
                .map(|i| {
                    let t = i as f64 / (count - 1) as f64;
                    KernelSpec::Gaussian {
                        sigma_sq: 10f64.powf(lo + t * (hi - lo)),
                    }
                })
                .collect()
        }
    }
}

/// Gram matrices of every kernel over the rows of `points`, computed in
/// parallel over kernels.
pub fn gram_matrices(points: &DMatrix<f64>, kernels: &[KernelSpec]) -> Result<Vec<DMatrix<f64>>> {
    for k in kernels {
        k.validate()?;
    }
    let inner = points * points.transpose();
    let n = points.nrows();
    let dist_sq = DMatrix::from_fn(n, n, |i, j| {
        (inner[(i, i)] + inner[(j, j)] - 2.0 * inner[(i, j)]).max(0.0)
    });
    Ok(kernels
        .par_iter()
        .map(|spec| {
            let mut k = DMatrix::from_fn(n, n, |i, j| spec.eval_parts(inner[(i, j)], dist_sq[(i, j)]));
            // exact symmetry
            for i in 0..n {
                for j in 0..i {
                    k[(i, j)] = k[(j, i)];
                }
            }
            k
        })
        .collect())
}
