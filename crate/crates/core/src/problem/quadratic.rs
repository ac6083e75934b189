//! Dense quadratic objectives and constraints, and the QCQP container.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::lipschitz::{estimate_lipschitz, DEFAULT_LIPSCHITZ_TOL};
use super::{ConstrainedProblem, ConstraintFamily, ObjectiveOracle, SimpleSet};
use crate::error::{Error, Result};

/// Smallest eigenvalue below which a quadratic objective is treated as merely
/// convex (`mu = 0`).
pub const STRONG_CONVEXITY_THRESHOLD: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// `x -> x'Hx/2 + l'x + c` with symmetric `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFunction {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
}

impl QuadraticFunction {
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>, constant: f64) -> Result<Self> {
        if !hessian.is_square() {
            return Err(Error::dims(
                "quadratic hessian (square)",
                hessian.nrows(),
                hessian.ncols(),
            ));
        }
        if hessian.nrows() != linear.len() {
            return Err(Error::dims("quadratic linear term", hessian.nrows(), linear.len()));
        }
        Ok(Self {
            hessian,
            linear,
            constant,
        })
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    /// Returns `(value, gradient)` sharing one matrix-vector product.
    pub fn eval(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let mut grad = self.linear.clone();
        grad.gemv(1.0, &self.hessian, x, 1.0);
        // x'Hx/2 + l'x = x'(Hx + l)/2 + l'x/2
        let value = 0.5 * (x.dot(&grad) + self.linear.dot(x)) + self.constant;
        (value, grad)
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let hx = &self.hessian * x;
        0.5 * x.dot(&hx) + self.linear.dot(x) + self.constant
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut grad = self.linear.clone();
        grad.gemv(1.0, &self.hessian, x, 1.0);
        grad
    }
}

/// Quadratic objective with its curvature constants precomputed.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    pub function: QuadraticFunction,
    mu: f64,
    lipschitz: f64,
}

impl QuadraticObjective {
    /// Computes `mu` from the smallest eigenvalue (zeroed below
    /// [`STRONG_CONVEXITY_THRESHOLD`]) and `L_f` by power iteration.
    pub fn new(function: QuadraticFunction) -> Result<Self> {
        let lambda_min = smallest_eigenvalue(&function.hessian);
        let mu = if lambda_min > STRONG_CONVEXITY_THRESHOLD {
            lambda_min
        } else {
            0.0
        };
        let lipschitz = estimate_lipschitz(&function.hessian, DEFAULT_LIPSCHITZ_TOL)?;
        Ok(Self {
            function,
            mu,
            lipschitz,
        })
    }
}

impl ObjectiveOracle for QuadraticObjective {
    fn dim(&self) -> usize {
        self.function.dim()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.function.value(x)
    }

    fn subgradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.function.gradient(x)
    }

    fn strong_convexity(&self) -> f64 {
        self.mu
    }

    fn lipschitz_grad(&self) -> Option<f64> {
        Some(self.lipschitz)
    }
}

/// Family of dense quadratic constraints `x'Q_i x/2 + q_i'x - b_i <= 0`.
#[derive(Debug, Clone)]
pub struct QuadraticConstraints {
    dim: usize,
    parts: Vec<QuadraticFunction>,
    lipschitz: Vec<f64>,
    // per constraint, rows of the upper triangle with the diagonal halved
    packed: Vec<f64>,
}

impl QuadraticConstraints {
    /// Estimates each `L_i = lambda_max(Q_i)` by power iteration.
    pub fn new(dim: usize, parts: Vec<QuadraticFunction>) -> Result<Self> {
        let lipschitz = parts
            .iter()
            .map(|p| estimate_lipschitz(&p.hessian, DEFAULT_LIPSCHITZ_TOL))
            .collect::<Result<Vec<_>>>()?;
        Self::with_lipschitz(dim, parts, lipschitz)
    }

    pub fn with_lipschitz(dim: usize, parts: Vec<QuadraticFunction>, lipschitz: Vec<f64>) -> Result<Self> {
        if lipschitz.len() != parts.len() {
            return Err(Error::dims("lipschitz constants", parts.len(), lipschitz.len()));
        }
        for (i, p) in parts.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::dims(format!("constraint {i}"), dim, p.dim()));
            }
        }
        let stride = dim * (dim + 1) / 2;
        let mut packed = Vec::with_capacity(stride * parts.len());
        for p in &parts {
            for i in 0..dim {
                packed.push(0.5 * p.hessian[(i, i)]);
                packed.extend((i + 1..dim).map(|j| p.hessian[(i, j)]));
            }
        }
        Ok(Self {
            dim,
            parts,
            lipschitz,
            packed,
        })
    }

    pub fn parts(&self) -> &[QuadraticFunction] {
        &self.parts
    }

    fn packed_value(&self, index: usize, x: &[f64]) -> f64 {
        let n = self.dim;
        let stride = n * (n + 1) / 2;
        let block = &self.packed[index * stride..(index + 1) * stride];
        let mut quad = 0.0;
        let mut offset = 0;
        for i in 0..n {
            let len = n - i;
            quad += x[i] * dot(&block[offset..offset + len], &x[i..]);
            offset += len;
        }
        let p = &self.parts[index];
        quad + dot(p.linear.as_slice(), x) + p.constant
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(u, v)| u * v).sum();
    for (u, v) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += u[k] * v[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl ConstraintFamily for QuadraticConstraints {
    fn dim(&self) -> usize {
        self.dim
    }

    fn count(&self) -> usize {
        self.parts.len()
    }

    fn value(&self, index: usize, x: &DVector<f64>) -> f64 {
        self.packed_value(index, x.as_slice())
    }

    fn gradient(&self, index: usize, x: &DVector<f64>) -> DVector<f64> {
        self.parts[index].gradient(x)
    }

    fn lipschitz(&self, index: usize) -> f64 {
        self.lipschitz[index]
    }

    fn value_and_gradient(&self, index: usize, x: &DVector<f64>) -> (f64, DVector<f64>) {
        self.parts[index].eval(x)
    }

    fn values_into(&self, x: &DVector<f64>, out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.parts.len()).map(|i| self.packed_value(i, x.as_slice())));
    }
}

/// Smallest eigenvalue of a symmetric matrix (full eigendecomposition).
pub fn smallest_eigenvalue(q: &DMatrix<f64>) -> f64 {
    if q.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(q.clone()).eigenvalues.min()
}

/// One quadratic constraint `x'Qx/2 + q'x <= b` of a QCQP.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticConstraint {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub rhs: f64,
}

/// Dense QCQP: `min x'Q_f x/2 + q_f'x  s.t.  x'Q_i x/2 + q_i'x <= b_i,  x in Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "QcqpFile", try_from = "QcqpFile")]
pub struct QcqpInstance {
    pub objective_hessian: DMatrix<f64>,
    pub objective_linear: DVector<f64>,
    pub constraints: Vec<QuadraticConstraint>,
    pub simple_set: SimpleSet,
}

impl QcqpInstance {
    pub fn dim(&self) -> usize {
        self.objective_linear.len()
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    /// Cheap structural checks: dimensions, finiteness, symmetry.
    pub fn check_structure(&self) -> Result<()> {
        let n = self.dim();
        check_square_symmetric("Q_f", &self.objective_hessian, n)?;
        check_finite("q_f", self.objective_linear.as_slice())?;
        for (i, c) in self.constraints.iter().enumerate() {
            check_square_symmetric(&format!("Q_{i}"), &c.hessian, n)?;
            if c.linear.len() != n {
                return Err(Error::dims(format!("q_{i}"), n, c.linear.len()));
            }
            check_finite(&format!("q_{i}"), c.linear.as_slice())?;
            if !c.rhs.is_finite() {
                return Err(Error::NonFinite(format!("b_{i}")));
            }
        }
        self.simple_set.validate(n)
    }

    /// Full invariant check, including positive semidefiniteness of every
    /// matrix (smallest eigenvalue `>= -1e-10`).
    pub fn validate(&self) -> Result<()> {
        self.check_structure()?;
        let mats = std::iter::once(("Q_f".to_string(), &self.objective_hessian)).chain(
            self.constraints
                .iter()
                .enumerate()
                .map(|(i, c)| (format!("Q_{i}"), &c.hessian)),
        );
        for (name, q) in mats {
            let lmin = smallest_eigenvalue(q);
            if lmin < -PSD_TOL {
                return Err(Error::InvalidParameter(format!(
                    "{name} is not positive semidefinite (smallest eigenvalue {lmin:e})"
                )));
            }
        }
        Ok(())
    }

    pub fn objective_function(&self) -> QuadraticFunction {
        QuadraticFunction {
            hessian: self.objective_hessian.clone(),
            linear: self.objective_linear.clone(),
            constant: 0.0,
        }
    }

    pub fn constraint_function(&self, index: usize) -> QuadraticFunction {
        let c = &self.constraints[index];
        QuadraticFunction {
            hessian: c.hessian.clone(),
            linear: c.linear.clone(),
            constant: -c.rhs,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn check_finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(name.to_string()))
    }
}

fn check_square_symmetric(name: &str, q: &DMatrix<f64>, n: usize) -> Result<()> {
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::dims(format!("{name} rows/cols"), n, q.nrows().max(q.ncols())));
    }
    check_finite(name, q.as_slice())?;
    let scale = q.amax().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (q[(i, j)] - q[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::InvalidParameter(format!(
                    "{name} is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Builds the oracle view of a QCQP: `f(x) = x'Q_f x/2 + q_f'x`,
/// `h_i(x) = x'Q_i x/2 + q_i'x - b_i`, `L_i = lambda_max(Q_i)` (power
/// iteration), and `mu = lambda_min(Q_f)` when it exceeds `1e-10`.
pub fn qcqp_as_problem(instance: &QcqpInstance) -> Result<ConstrainedProblem> {
    instance.check_structure()?;
    let n = instance.dim();
    let objective = QuadraticObjective::new(instance.objective_function())?;
    let parts = (0..instance.constraint_count())
        .map(|i| instance.constraint_function(i))
        .collect();
    let constraints = QuadraticConstraints::new(n, parts)?;
    ConstrainedProblem::new(Box::new(objective), Box::new(constraints), instance.simple_set.clone())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QcqpFile {
    n: usize,
    m: usize,
    #[serde(rename = "Q_f")]
    objective_hessian: Vec<f64>,
    q_f: Vec<f64>,
    constraints: Vec<ConstraintFile>,
    simple_set: SimpleSet,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintFile {
    #[serde(rename = "Q")]
    hessian: Vec<f64>,
    q: Vec<f64>,
    b: f64,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn from_row_major(name: &str, n: usize, data: Vec<f64>) -> Result<DMatrix<f64>> {
    if data.len() != n * n {
        return Err(Error::dims(format!("{name} entries"), n * n, data.len()));
    }
    Ok(DMatrix::from_row_slice(n, n, &data))
}

impl From<QcqpInstance> for QcqpFile {
    fn from(inst: QcqpInstance) -> Self {
        QcqpFile {
            n: inst.dim(),
            m: inst.constraint_count(),
            objective_hessian: row_major(&inst.objective_hessian),
            q_f: inst.objective_linear.as_slice().to_vec(),
            constraints: inst
                .constraints
                .iter()
                .map(|c| ConstraintFile {
                    hessian: row_major(&c.hessian),
                    q: c.linear.as_slice().to_vec(),
                    b: c.rhs,
                })
                .collect(),
            simple_set: inst.simple_set,
        }
    }
}

impl TryFrom<QcqpFile> for QcqpInstance {
    type Error = Error;

    fn try_from(file: QcqpFile) -> Result<Self> {
        let n = file.n;
        if file.constraints.len() != file.m {
            return Err(Error::dims("constraint list", file.m, file.constraints.len()));
        }
        if file.q_f.len() != n {
            return Err(Error::dims("q_f", n, file.q_f.len()));
        }
        let objective_hessian = from_row_major("Q_f", n, file.objective_hessian)?;
        let constraints = file
            .constraints
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                if c.q.len() != n {
                    return Err(Error::dims(format!("q_{i}"), n, c.q.len()));
                }
                Ok(QuadraticConstraint {
                    hessian: from_row_major(&format!("Q_{i}"), n, c.hessian)?,
                    linear: DVector::from_vec(c.q),
                    rhs: c.b,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(QcqpInstance {
            objective_hessian,
            objective_linear: DVector::from_vec(file.q_f),
            constraints,
            simple_set: file.simple_set,
        })
    }
}
