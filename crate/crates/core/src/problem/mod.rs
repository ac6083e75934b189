//! Oracle interfaces and concrete problem types consumed by the solvers.
//!
//! A [`ConstrainedProblem`] is `min f(x)` subject to `h(x, i) <= 0` for every
//! constraint index `i` in `0..m` and `x` in a simple set `Y`. The objective
//! is (strongly) convex with modulus `mu >= 0`, and each constraint is convex
//! with an `L_i`-Lipschitz gradient.

mod lipschitz;
mod quadratic;
mod simple_set;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use lipschitz::{estimate_lipschitz, estimate_lipschitz_seeded, DEFAULT_LIPSCHITZ_TOL, DEFAULT_POWER_SEED};
pub use quadratic::{
    qcqp_as_problem, smallest_eigenvalue, QcqpInstance, QuadraticConstraint, QuadraticConstraints, QuadraticFunction,
    QuadraticObjective, STRONG_CONVEXITY_THRESHOLD,
};
pub use simple_set::{project_signed_hyperplane, SetBlock, SimpleSet};

use crate::error::{Error, Result};

/// First-order oracle for a (strongly) convex objective.
pub trait ObjectiveOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn subgradient(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Strong convexity modulus `mu`; zero for merely convex objectives.
    fn strong_convexity(&self) -> f64;
    /// Gradient Lipschitz constant, when known.
    fn lipschitz_grad(&self) -> Option<f64> {
        None
    }
}

/// A finite family of smooth convex constraints `h(., i) <= 0`.
pub trait ConstraintFamily: Send + Sync {
    fn dim(&self) -> usize;
    fn count(&self) -> usize;
    fn value(&self, index: usize, x: &DVector<f64>) -> f64;
    fn gradient(&self, index: usize, x: &DVector<f64>) -> DVector<f64>;
    /// Gradient Lipschitz constant `L_i > 0` of constraint `index`.
    fn lipschitz(&self, index: usize) -> f64;

    fn value_and_gradient(&self, index: usize, x: &DVector<f64>) -> (f64, DVector<f64>) {
        (self.value(index, x), self.gradient(index, x))
    }

    /// Writes `h(x, i)` for every `i` into `out`.
    fn values_into(&self, x: &DVector<f64>, out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.count()).map(|i| self.value(i, x)));
    }

    /// `||max(0, h(x, .))||^2` summed over the whole family.
    fn violation_sq(&self, x: &DVector<f64>) -> f64 {
        let mut values = Vec::with_capacity(self.count());
        self.values_into(x, &mut values);
        values.iter().map(|&h| h.max(0.0).powi(2)).sum()
    }
}

/// Where a reference optimum came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub enum Provenance {
    #[serde(rename = "analytic")]
    Analytic,
    #[serde(rename = "long-run baseline")]
    LongRunBaseline,
    #[serde(rename = "external")]
    External,
}

/// Known optimal value (and optionally minimizer) used by stopping rules and
/// rate checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct ReferenceOptimum {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    pub provenance: Provenance,
}

/// `min f(x)  s.t.  h(x, i) <= 0 for all i,  x in Y`.
pub struct ConstrainedProblem {
    pub objective: Box<dyn ObjectiveOracle>,
    pub constraints: Box<dyn ConstraintFamily>,
    pub simple_set: SimpleSet,
    pub reference: Option<ReferenceOptimum>,
}

impl ConstrainedProblem {
    pub fn new(
        objective: Box<dyn ObjectiveOracle>,
        constraints: Box<dyn ConstraintFamily>,
        simple_set: SimpleSet,
    ) -> Result<Self> {
        let n = objective.dim();
        if constraints.dim() != n {
            return Err(Error::dims("constraint family", n, constraints.dim()));
        }
        simple_set.validate(n)?;
        Ok(Self {
            objective,
            constraints,
            simple_set,
            reference: None,
        })
    }

    pub fn with_reference(mut self, reference: ReferenceOptimum) -> Result<Self> {
        if let Some(p) = &reference.point {
            if p.len() != self.dim() {
                return Err(Error::dims("reference point", self.dim(), p.len()));
            }
        }
        self.reference = Some(reference);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn reference_value(&self) -> Option<f64> {
        self.reference.as_ref().map(|r| r.value)
    }

    pub fn reference_point(&self) -> Option<DVector<f64>> {
        self.reference
            .as_ref()
            .and_then(|r| r.point.as_ref())
            .map(|p| DVector::from_column_slice(p))
    }
}

impl std::fmt::Debug for ConstrainedProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConstrainedProblem")
            .field("dim", &self.dim())
            .field("constraints", &self.constraints.count())
            .field("simple_set", &self.simple_set)
            .field("reference", &self.reference)
            .finish()
    }
}
