//! Multiple-kernel SVM training posed as a convex QCQP.
//!
//! Over `x = [alpha; d]` the problem is
//!
//! ```text
//! min  |alpha|^2 / (2C) - e'alpha + R d
//! s.t. alpha' G_i alpha / 2 - R_i d <= 0      for every kernel i
//!      alpha >= 0,  sum_j y_j alpha_j = 0
//! ```
//!
//! where `G_i` is the label-signed, trace-normalized Gram matrix of kernel
//! `i` on the training rows, `R_i = 1` and `R = m`.

mod data;
mod kernel;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use data::{load_csv_dataset, two_blobs, write_csv_dataset, Dataset, LabelColumn, DEFAULT_SPLIT_FRACTION};
pub use kernel::{gaussian_grid, gram_matrices, kernel_value, KernelSpec, GRID_LOWER, GRID_UPPER};

use crate::error::{Error, Result};
use crate::problem::{
    project_signed_hyperplane, qcqp_as_problem, ConstrainedProblem, QcqpInstance, QuadraticConstraint,
    QuadraticConstraints, QuadraticFunction, QuadraticObjective, SetBlock, SimpleSet,
};
use crate::solver::{run, Averaging, RunTrace, SolverConfig, StepsizeSchedule, StoppingRule};

/// Coordinates with `alpha_j` above this count as free in dual recovery.
pub const FREE_ALPHA_TOL: f64 = 1e-8;
/// Default soft-margin parameter.
pub const DEFAULT_C: f64 = 0.1;

fn check_labels(labels: &[f64]) -> Result<()> {
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::Data("labels must be -1 or +1".into()));
    }
    Ok(())
}

/// Projection onto `{a >= 0, sum_j y_j a_j = 0}`.
pub fn project_simplex_like(alpha: &[f64], labels: &[f64]) -> Result<Vec<f64>> {
    if alpha.len() != labels.len() {
        return Err(Error::dims("labels", alpha.len(), labels.len()));
    }
    check_labels(labels)?;
    Ok(project_signed_hyperplane(alpha, labels, None))
}

/// Projection onto `{0 <= a <= upper, sum_j y_j a_j = 0}`.
pub fn project_box_hyperplane(alpha: &[f64], labels: &[f64], upper: f64) -> Result<Vec<f64>> {
    if alpha.len() != labels.len() {
        return Err(Error::dims("labels", alpha.len(), labels.len()));
    }
    check_labels(labels)?;
    if !(upper > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "box upper bound must be positive, got {upper}"
        )));
    }
    Ok(project_signed_hyperplane(alpha, labels, Some(upper)))
}

/// `G_{jk} = y_j y_k K_{jk}`.
fn label_gram(gram: &DMatrix<f64>, labels: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(gram.nrows(), gram.ncols(), |j, k| labels[j] * labels[k] * gram[(j, k)])
}

fn require_both_classes(labels: &[f64]) -> Result<()> {
    let pos = labels.iter().any(|&y| y > 0.0);
    let neg = labels.iter().any(|&y| y < 0.0);
    if pos && neg {
        Ok(())
    } else {
        Err(Error::Data("training labels contain a single class".into()))
    }
}

/// The assembled QCQP together with the data needed to build a classifier.
#[derive(Debug, Clone)]
pub struct MklProblem {
    pub kernels: Vec<KernelSpec>,
    /// Trace of each kernel matrix over all data points before scaling.
    pub normalization: Vec<f64>,
    pub c: f64,
    pub r: f64,
    pub r_i: Vec<f64>,
    pub train_features: DMatrix<f64>,
    pub train_labels: Vec<f64>,
    pub instance: QcqpInstance,
}

impl MklProblem {
    pub fn train_size(&self) -> usize {
        self.train_labels.len()
    }

    /// Label-signed normalized Gram matrix of kernel `i`.
    pub fn label_gram(&self, i: usize) -> DMatrix<f64> {
        let nt = self.train_size();
        self.instance.constraints[i]
            .hessian
            .view((0, 0), (nt, nt))
            .clone_owned()
    }

    pub fn to_problem(&self) -> Result<ConstrainedProblem> {
        qcqp_as_problem(&self.instance)
    }

    /// `alpha = C e` projected onto the feasible set, `d = 0`; infeasible for
    /// every kernel with a nonzero Gram block.
    pub fn initial_point(&self) -> DVector<f64> {
        let nt = self.train_size();
        let alpha = project_signed_hyperplane(&vec![self.c; nt], &self.train_labels, None);
        let mut x = DVector::zeros(nt + 1);
        x.rows_mut(0, nt).copy_from_slice(&alpha);
        x
    }
}

/// Builds the QCQP for `kernels` on the training split of `dataset`.
pub fn assemble_mkl_qcqp(dataset: &Dataset, kernels: &[KernelSpec], c: f64) -> Result<MklProblem> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C must be positive, got {c}")));
    }
    if kernels.is_empty() {
        return Err(Error::InvalidParameter("at least one kernel is required".into()));
    }
    let labels = dataset.train_labels();
    require_both_classes(&labels)?;
    let nt = labels.len();
    let n = nt + 1;

    // train rows first, so the leading block of every Gram matrix is the
    // training block
    let order: Vec<usize> = dataset.train.iter().chain(&dataset.test).copied().collect();
    let all_points = dataset.rows(&order);
    let grams = gram_matrices(&all_points, kernels)?;

    let mut normalization = Vec::with_capacity(kernels.len());
    let mut constraints = Vec::with_capacity(kernels.len());
    let r_i = vec![1.0; kernels.len()];
    for (i, k) in grams.iter().enumerate() {
        let trace = k.trace();
        if !(trace > 0.0) {
            return Err(Error::Data(format!("kernel {i} has a non-positive trace {trace}")));
        }
        normalization.push(trace);
        let train_block = k.view((0, 0), (nt, nt)) / trace;
        let g = label_gram(&train_block, &labels);
        let mut hessian = DMatrix::zeros(n, n);
        hessian.view_mut((0, 0), (nt, nt)).copy_from(&g);
        let mut linear = DVector::zeros(n);
        linear[nt] = -r_i[i];
        constraints.push(QuadraticConstraint {
            hessian,
            linear,
            rhs: 0.0,
        });
    }

    let mut objective_hessian = DMatrix::zeros(n, n);
    for j in 0..nt {
        objective_hessian[(j, j)] = 1.0 / c;
    }
    let mut objective_linear = DVector::from_element(n, -1.0);
    let r = r_i.iter().sum::<f64>();
    objective_linear[nt] = r;

    let simple_set = SimpleSet::Product {
        blocks: vec![
            SetBlock {
                dim: nt,
                set: SimpleSet::SignedHyperplane {
                    labels: labels.clone(),
                    upper: None,
                },
            },
            SetBlock {
                dim: 1,
                set: SimpleSet::Whole,
            },
        ],
    };
    let instance = QcqpInstance {
        objective_hessian,
        objective_linear,
        constraints,
        simple_set,
    };
    instance.check_structure()?;
    Ok(MklProblem {
        kernels: kernels.to_vec(),
        normalization,
        c,
        r,
        r_i,
        train_features: dataset.rows(&dataset.train),
        train_labels: labels,
        instance,
    })
}

/// Nonnegative `lambda` minimizing `min_nu |g_f + lambda g_h + nu normal|`.
///
/// Returns `(lambda, degenerate)`; `degenerate` is set when `g_h` vanishes
/// after removing the `normal` direction, in which case `lambda = 0`.
pub fn stationarity_multiplier(g_f: &DVector<f64>, g_h: &DVector<f64>, normal: &DVector<f64>) -> (f64, bool) {
    let nn = normal.norm_squared();
    let reduce = |g: &DVector<f64>| {
        if nn > 0.0 {
            g - normal * (g.dot(normal) / nn)
        } else {
            g.clone()
        }
    };
    let (pf, ph) = (reduce(g_f), reduce(g_h));
    let hh = ph.norm_squared();
    if hh <= f64::EPSILON * g_h.norm_squared().max(f64::MIN_POSITIVE) || hh == 0.0 {
        return (0.0, true);
    }
    ((-pf.dot(&ph) / hh).max(0.0), false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualRecovery {
    /// Constraint with the largest value at the solution.
    pub active_index: usize,
    pub lambda: f64,
    pub degenerate: bool,
    /// Value of the active constraint at the solution.
    pub constraint_value: f64,
}

/// Free coordinates of `x = [alpha; d]`: `alpha_j > 1e-8` and `d`.
pub fn free_coordinates(problem: &MklProblem, x: &DVector<f64>) -> Vec<usize> {
    let nt = problem.train_size();
    let mut free: Vec<usize> = (0..nt).filter(|&j| x[j] > FREE_ALPHA_TOL).collect();
    free.push(nt);
    free
}

/// Picks the most violated kernel constraint at `x_star` and fits its
/// multiplier from the stationarity condition on the free coordinates.
pub fn recover_dual(problem: &MklProblem, x_star: &DVector<f64>) -> Result<DualRecovery> {
    let nt = problem.train_size();
    if x_star.len() != nt + 1 {
        return Err(Error::dims("MKL solution", nt + 1, x_star.len()));
    }
    let objective = problem.instance.objective_function();
    let mut best: Option<(usize, f64)> = None;
    for i in 0..problem.instance.constraint_count() {
        let h = problem.instance.constraint_function(i).value(x_star);
        if best.is_none_or(|(_, b)| h > b) {
            best = Some((i, h));
        }
    }
    let (active_index, constraint_value) = best.ok_or_else(|| Error::Data("no kernel constraints".into()))?;
    let g_f = objective.gradient(x_star);
    let g_h = problem.instance.constraint_function(active_index).gradient(x_star);

    let free = free_coordinates(problem, x_star);
    let pick = |g: &DVector<f64>| DVector::from_iterator(free.len(), free.iter().map(|&j| g[j]));
    let normal = DVector::from_iterator(
        free.len(),
        free.iter().map(|&j| if j < nt { problem.train_labels[j] } else { 0.0 }),
    );
    let (lambda, degenerate) = stationarity_multiplier(&pick(&g_f), &pick(&g_h), &normal);
    Ok(DualRecovery {
        active_index,
        lambda,
        degenerate,
        constraint_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaEntry {
    pub index: usize,
    pub value: f64,
}

/// Kernel classifier `sign(sum_j y_j alpha_j sum_i lambda_i k_i(a_j, a) + d)`
/// over the unnormalized kernels. `normalization` records the trace each
/// Gram matrix was divided by during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainedClassifier {
    pub alpha: Vec<f64>,
    pub d: f64,
    pub lambda: Vec<LambdaEntry>,
    pub kernel_grid: Vec<KernelSpec>,
    pub normalization: Vec<f64>,
    pub support_features: Vec<Vec<f64>>,
    pub support_labels: Vec<f64>,
}

impl TrainedClassifier {
    pub fn validate(&self) -> Result<()> {
        let nt = self.alpha.len();
        if self.support_features.len() != nt || self.support_labels.len() != nt {
            return Err(Error::Data("classifier support data does not match alpha".into()));
        }
        if self.normalization.len() != self.kernel_grid.len() {
            return Err(Error::Data("one normalization constant per kernel is required".into()));
        }
        for e in &self.lambda {
            if e.index >= self.kernel_grid.len() || !(e.value >= 0.0) {
                return Err(Error::Data(format!("invalid multiplier entry {e:?}")));
            }
        }
        Ok(())
    }

    pub fn decision(&self, a: &[f64]) -> f64 {
        let mut total = self.d;
        for (j, sv) in self.support_features.iter().enumerate() {
            let coef = self.support_labels[j] * self.alpha[j];
            if coef == 0.0 {
                continue;
            }
            let mixed: f64 = self
                .lambda
                .iter()
                .map(|e| e.value * kernel::eval_unchecked(&self.kernel_grid[e.index], sv, a))
                .sum();
            total += coef * mixed;
        }
        total
    }

    /// `+1` or `-1`; a zero decision value maps to `+1`.
    pub fn predict(&self, a: &[f64]) -> f64 {
        if self.decision(a) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Fraction of the rows `indices` of `dataset` labeled correctly.
    pub fn accuracy(&self, dataset: &Dataset, indices: &[usize]) -> Result<f64> {
        if indices.is_empty() {
            return Err(Error::Data("no rows to evaluate".into()));
        }
        let dim = self.support_features.first().map_or(dataset.dim(), |r| r.len());
        if dim != dataset.dim() {
            return Err(Error::dims("feature count", dim, dataset.dim()));
        }
        let correct = indices
            .iter()
            .filter(|&&i| {
                let row: Vec<f64> = dataset.features.row(i).iter().copied().collect();
                self.predict(&row) == dataset.labels[i]
            })
            .count();
        Ok(correct as f64 / indices.len() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }
}

/// Test-set accuracy.
pub fn predict_tsa(classifier: &TrainedClassifier, dataset: &Dataset) -> Result<f64> {
    if dataset.test.is_empty() {
        return Err(Error::Data("test split is empty".into()));
    }
    classifier.accuracy(dataset, &dataset.test)
}

fn rows_as_vecs(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Classifier from a solution of the kernel QCQP and its recovered
/// multiplier.
pub fn mkl_classifier(problem: &MklProblem, x_star: &DVector<f64>, dual: &DualRecovery) -> TrainedClassifier {
    let nt = problem.train_size();
    let lambda = if dual.lambda > 0.0 {
        vec![LambdaEntry {
            index: dual.active_index,
            value: dual.lambda,
        }]
    } else {
        Vec::new()
    };
    TrainedClassifier {
        alpha: x_star.rows(0, nt).iter().copied().collect(),
        d: x_star[nt],
        lambda,
        kernel_grid: problem.kernels.clone(),
        normalization: problem.normalization.clone(),
        support_features: rows_as_vecs(&problem.train_features),
        support_labels: problem.train_labels.clone(),
    }
}

/// Solver settings used for kernel training: the `1/(L_f sqrt(k+2) ln(k+2))`
/// schedule, `beta = 0.96` and the default stopping rule.
pub fn default_training_config(problem: &ConstrainedProblem, max_iters: usize, seed: u64) -> SolverConfig {
    let lf = problem.objective.lipschitz_grad().unwrap_or(1.0).max(f64::MIN_POSITIVE);
    SolverConfig {
        beta: 0.96,
        schedule: StepsizeSchedule::SqrtLog { alpha0: 1.0 / lf },
        seed,
        max_iters,
        stopping: Some(StoppingRule::default()),
        averaging: Averaging::ConvexWeights,
        record_metrics: false,
        ..SolverConfig::default()
    }
}

#[derive(Debug, Clone)]
pub struct MklTraining {
    pub problem: MklProblem,
    pub classifier: TrainedClassifier,
    pub dual: DualRecovery,
    pub trace: RunTrace,
}

/// Assembles, solves and extracts the classifier. The last iterate is used
/// as the solution.
pub fn train_mkl(dataset: &Dataset, kernels: &[KernelSpec], c: f64, config: &SolverConfig) -> Result<MklTraining> {
    let problem = assemble_mkl_qcqp(dataset, kernels, c)?;
    let qcqp = problem.to_problem()?;
    let trace = run(&qcqp, config, &problem.initial_point())?;
    let dual = recover_dual(&problem, &trace.x_final)?;
    let classifier = mkl_classifier(&problem, &trace.x_final, &dual);
    Ok(MklTraining {
        problem,
        classifier,
        dual,
        trace,
    })
}

/// Single-kernel dual SVM `min a'Ga/2 - e'a` over
/// `{0 <= a <= C, sum_j y_j a_j = 0}`, as a problem without functional
/// constraints.
#[derive(Debug)]
pub struct SingleKernelProblem {
    pub kernel: KernelSpec,
    pub c: f64,
    pub problem: ConstrainedProblem,
    pub train_features: DMatrix<f64>,
    pub train_labels: Vec<f64>,
    pub gram: DMatrix<f64>,
}

pub fn single_kernel_qp(dataset: &Dataset, sigma_sq: f64, c: f64) -> Result<SingleKernelProblem> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C must be positive, got {c}")));
    }
    let kernel = KernelSpec::Gaussian { sigma_sq };
    let labels = dataset.train_labels();
    require_both_classes(&labels)?;
    let nt = labels.len();
    let features = dataset.rows(&dataset.train);
    let gram = gram_matrices(&features, &[kernel])?.pop().expect("one kernel");
    let g = label_gram(&gram, &labels);
    let objective = QuadraticObjective::new(QuadraticFunction::new(g, DVector::from_element(nt, -1.0), 0.0)?)?;
    let constraints = QuadraticConstraints::with_lipschitz(nt, Vec::new(), Vec::new())?;
    let set = SimpleSet::SignedHyperplane {
        labels: labels.clone(),
        upper: Some(c),
    };
    let problem = ConstrainedProblem::new(Box::new(objective), Box::new(constraints), set)?;
    Ok(SingleKernelProblem {
        kernel,
        c,
        problem,
        train_features: features,
        train_labels: labels,
        gram,
    })
}

impl SingleKernelProblem {
    /// Offset of the decision function: averaged over margin support vectors
    /// (`0 < a_j < C`), or the midpoint between the classes when there are
    /// none.
    pub fn bias(&self, alpha: &DVector<f64>) -> f64 {
        let tol = FREE_ALPHA_TOL;
        let ya = DVector::from_iterator(alpha.len(), alpha.iter().zip(&self.train_labels).map(|(a, y)| a * y));
        let scores = &self.gram * ya;
        let free: Vec<usize> = (0..alpha.len())
            .filter(|&j| alpha[j] > tol && alpha[j] < self.c - tol)
            .collect();
        if !free.is_empty() {
            return free.iter().map(|&j| self.train_labels[j] - scores[j]).sum::<f64>() / free.len() as f64;
        }
        let mut max_neg = f64::NEG_INFINITY;
        let mut min_pos = f64::INFINITY;
        for (j, &y) in self.train_labels.iter().enumerate() {
            if y > 0.0 {
                min_pos = min_pos.min(scores[j]);
            } else {
                max_neg = max_neg.max(scores[j]);
            }
        }
        -(max_neg + min_pos) / 2.0
    }

    pub fn classifier(&self, alpha: &DVector<f64>) -> TrainedClassifier {
        TrainedClassifier {
            alpha: alpha.iter().copied().collect(),
            d: self.bias(alpha),
            lambda: vec![LambdaEntry { index: 0, value: 1.0 }],
            kernel_grid: vec![self.kernel],
            normalization: vec![1.0],
            support_features: rows_as_vecs(&self.train_features),
            support_labels: self.train_labels.clone(),
        }
    }
}

/// Solves the single-kernel problem from `alpha = 0`.
pub fn train_single_kernel(
    dataset: &Dataset,
    sigma_sq: f64,
    c: f64,
    config: &SolverConfig,
) -> Result<(TrainedClassifier, RunTrace)> {
    let sk = single_kernel_qp(dataset, sigma_sq, c)?;
    let x0 = DVector::zeros(sk.train_labels.len());
    let trace = run(&sk.problem, config, &x0)?;
    Ok((sk.classifier(&trace.x_final), trace))
}
