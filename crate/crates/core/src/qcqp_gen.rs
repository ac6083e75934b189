//! Random convex QCQP instances with orthogonally rotated diagonal Hessians.
//!
//! Every Hessian is `Y^T D Y` with `Y` a random orthogonal matrix and `D` a
//! diagonal with a prescribed number of zeros and the remaining entries
//! uniform in `(0, 1)`. The feasible set is taken over the nonnegative
//! orthant.

use nalgebra::{DMatrix, DVector};
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{QcqpInstance, QuadraticConstraint, SimpleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub enum ObjectiveRegime {
    /// Objective Hessian with the same zero pattern as the constraints.
    Convex,
    /// Objective Hessian with every diagonal entry nonzero.
    StronglyConvex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub enum RhsScheme {
    /// Right-hand sides chosen so a random `x0` is feasible with margin 0.1.
    FeasibleX0,
    /// Right-hand sides uniform in `(0, 1)`, with an infeasible start.
    RandomB,
}

pub const DEFAULT_ZERO_FRACTION: f64 = 0.1;
const FEASIBILITY_MARGIN: f64 = 0.1;
const MAX_START_DOUBLINGS: usize = 20;

fn default_zero_fraction() -> f64 {
    DEFAULT_ZERO_FRACTION
}

fn default_linear_range() -> [f64; 2] {
    [0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct GenSpec {
    pub n: usize,
    pub m: usize,
    pub objective_regime: ObjectiveRegime,
    pub b_scheme: RhsScheme,
    pub seed: u64,
    #[serde(default = "default_zero_fraction")]
    pub zero_fraction: f64,
    /// Interval the entries of the linear terms are drawn from.
    #[serde(default = "default_linear_range")]
    pub linear_range: [f64; 2],
}

impl GenSpec {
    pub fn new(n: usize, m: usize, objective_regime: ObjectiveRegime, b_scheme: RhsScheme, seed: u64) -> Self {
        Self {
            n,
            m,
            objective_regime,
            b_scheme,
            seed,
            zero_fraction: DEFAULT_ZERO_FRACTION,
            linear_range: default_linear_range(),
        }
    }

    pub fn with_linear_range(mut self, lower: f64, upper: f64) -> Self {
        self.linear_range = [lower, upper];
        self
    }

    /// Number of zero diagonal entries in each constraint Hessian.
    pub fn zero_count(&self) -> usize {
        (self.n as f64 * self.zero_fraction).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if !(self.zero_fraction > 0.0 && self.zero_fraction < 1.0) {
            return Err(Error::Config(format!(
                "zero_fraction must lie in (0, 1), got {}",
                self.zero_fraction
            )));
        }
        let [lo, hi] = self.linear_range;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::Config(format!(
                "linear_range [{lo}, {hi}] must be a finite, nonempty interval"
            )));
        }
        if self.zero_count() == 0 {
            return Err(Error::Config(format!(
                "n = {} with zero_fraction = {} gives no zero diagonal entries; need n * zero_fraction >= 1",
                self.n, self.zero_fraction
            )));
        }
        Ok(())
    }
}

/// A random orthogonal matrix from the QR factorization of a Gaussian matrix,
/// with column signs chosen so the triangular factor has a nonnegative
/// diagonal.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let r_diag = qr.r().diagonal();
    let mut q = qr.q();
    for (j, &r) in r_diag.iter().enumerate() {
        if r < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Symmetric PSD matrix `Y^T D Y` of rank `n - zero_count`.
pub fn gen_psd<R: Rng + ?Sized>(n: usize, zero_count: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if zero_count > n {
        return Err(Error::InvalidParameter(format!(
            "zero_count {zero_count} exceeds n = {n}"
        )));
    }
    let y = random_orthogonal(n, rng);
    let mut diag = vec![0.0; n];
    let zeros = rand::seq::index::sample(rng, n, zero_count);
    let mut is_zero = vec![false; n];
    for i in zeros.iter() {
        is_zero[i] = true;
    }
    for (d, &z) in diag.iter_mut().zip(&is_zero) {
        if !z {
            *d = rng.sample(Open01);
        }
    }
    // D Y: scale row i of Y by d_i
    let mut dy = y.clone();
    for (i, &d) in diag.iter().enumerate() {
        dy.row_mut(i).scale_mut(d);
    }
    let a = y.transpose() * dy;
    Ok((&a + a.transpose()) * 0.5)
}

fn uniform_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(Open01))
}

fn uniform_in<R: Rng + ?Sized>(n: usize, [lo, hi]: [f64; 2], rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| lo + (hi - lo) * rng.sample::<f64, _>(Open01))
}

/// A generated instance together with its starting point.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub instance: QcqpInstance,
    pub x0: DVector<f64>,
    pub x0_feasible: bool,
}

/// Sidecar file written next to a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSidecar {
    pub x0: Vec<f64>,
    pub x0_feasible: bool,
    pub spec: GenSpec,
}

impl GeneratedInstance {
    pub fn sidecar(&self, spec: &GenSpec) -> GenSidecar {
        GenSidecar {
            x0: self.x0.as_slice().to_vec(),
            x0_feasible: self.x0_feasible,
            spec: spec.clone(),
        }
    }
}

fn constraint_value(c: &QuadraticConstraint, x: &DVector<f64>) -> f64 {
    0.5 * x.dot(&(&c.hessian * x)) + c.linear.dot(x) - c.rhs
}

pub fn gen_instance(spec: &GenSpec) -> Result<GeneratedInstance> {
    spec.validate()?;
    let n = spec.n;
    let zero_count = spec.zero_count();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let objective_zeros = match spec.objective_regime {
        ObjectiveRegime::Convex => zero_count,
        ObjectiveRegime::StronglyConvex => 0,
    };
    let objective_hessian = gen_psd(n, objective_zeros, &mut rng)?;
    let objective_linear = uniform_in(n, spec.linear_range, &mut rng);

    let mut constraints = Vec::with_capacity(spec.m);
    for _ in 0..spec.m {
        let hessian = gen_psd(n, zero_count, &mut rng)?;
        let linear = uniform_in(n, spec.linear_range, &mut rng);
        constraints.push(QuadraticConstraint {
            hessian,
            linear,
            rhs: 0.0,
        });
    }

    let (x0, x0_feasible) = match spec.b_scheme {
        RhsScheme::FeasibleX0 => {
            let x0 = uniform_vector(n, &mut rng);
            for c in &mut constraints {
                c.rhs = 0.5 * x0.dot(&(&c.hessian * &x0)) + c.linear.dot(&x0) + FEASIBILITY_MARGIN;
            }
            (x0, true)
        }
        RhsScheme::RandomB => {
            for c in &mut constraints {
                c.rhs = rng.sample(Open01);
            }
            let mut x0 = uniform_vector(n, &mut rng).add_scalar(1.0);
            let violated = |x: &DVector<f64>| constraints.iter().any(|c| constraint_value(c, x) > 0.0);
            let mut doublings = 0;
            while !violated(&x0) && doublings < MAX_START_DOUBLINGS {
                x0 *= 2.0;
                doublings += 1;
            }
            let feasible = !violated(&x0);
            (x0, feasible)
        }
    };

    let instance = QcqpInstance {
        objective_hessian,
        objective_linear,
        constraints,
        simple_set: SimpleSet::NonnegativeOrthant,
    };
    Ok(GeneratedInstance {
        instance,
        x0,
        x0_feasible,
    })
}
