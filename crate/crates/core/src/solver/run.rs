use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::average::AverageAccumulator;
use super::config::{Method, SolverConfig};
use super::trace::{AverageMetrics, CaseCounts, IterRecord, RunTrace, StopReason};
use crate::ball::{build_ball, feasibility_step, FeasibilityCase};
use crate::error::{Error, Result};
use crate::problem::ConstrainedProblem;

/// Outcome of a single iteration.
#[derive(Debug, Clone)]
pub struct Step {
    pub x_next: DVector<f64>,
    /// Projected objective step `v_k`.
    pub v: DVector<f64>,
    pub alpha: f64,
    pub case: FeasibilityCase,
    pub constraint: Option<usize>,
    /// Center of the ball used by the feasibility step.
    pub center: Option<DVector<f64>>,
}

fn objective_step(x: &DVector<f64>, alpha: f64, problem: &ConstrainedProblem) -> DVector<f64> {
    let g = problem.objective.subgradient(x);
    let mut v = x.clone();
    v.axpy(-alpha, &g, 1.0);
    problem.simple_set.project_in_place(v.as_mut_slice());
    v
}

fn feasibility_update(
    v: DVector<f64>,
    index: usize,
    alpha: f64,
    problem: &ConstrainedProblem,
    beta: f64,
) -> Result<Step> {
    let (h, grad) = problem.constraints.value_and_gradient(index, &v);
    let lipschitz = problem.constraints.lipschitz(index);
    let ball = build_ball(&v, h, &grad, lipschitz).map_err(|e| e.with_constraint(index))?;
    let (mut z, case) = feasibility_step(&v, &ball, &grad, beta).map_err(|e| e.with_constraint(index))?;
    problem.simple_set.project_in_place(z.as_mut_slice());
    Ok(Step {
        x_next: z,
        v,
        alpha,
        case,
        constraint: Some(index),
        center: Some(ball.center),
    })
}

/// One stochastic iteration from `x` with stepsize index `k`.
pub fn smba_iterate<R: Rng + ?Sized>(
    x: &DVector<f64>,
    k: usize,
    problem: &ConstrainedProblem,
    config: &SolverConfig,
    rng: &mut R,
) -> Result<Step> {
    let alpha = config.schedule.value(k);
    let v = objective_step(x, alpha, problem);
    let count = problem.constraints.count();
    if count == 0 {
        return Ok(unconstrained_step(v, alpha));
    }
    let index = config.sampling.sample(rng, count);
    feasibility_update(v, index, alpha, problem, config.beta)
}

fn unconstrained_step(v: DVector<f64>, alpha: f64) -> Step {
    Step {
        x_next: v.clone(),
        v,
        alpha,
        case: FeasibilityCase::AlreadyFeasible,
        constraint: None,
        center: None,
    }
}

/// Same as [`smba_iterate`] but uses the most violated constraint at `v_k`
/// (lowest index on ties) and skips the feasibility step when none is
/// violated.
pub fn deterministic_max_violation_step(
    x: &DVector<f64>,
    k: usize,
    problem: &ConstrainedProblem,
    config: &SolverConfig,
) -> Result<Step> {
    let alpha = config.schedule.value(k);
    let v = objective_step(x, alpha, problem);
    let mut values = Vec::with_capacity(problem.constraints.count());
    problem.constraints.values_into(&v, &mut values);
    let mut best: Option<(usize, f64)> = None;
    for (i, &h) in values.iter().enumerate() {
        if !h.is_finite() {
            return Err(Error::NonFinite(format!("constraint {i} value")));
        }
        if best.is_none_or(|(_, b)| h > b) {
            best = Some((i, h));
        }
    }
    match best {
        Some((index, h)) if h > 0.0 => feasibility_update(v, index, alpha, problem, config.beta),
        _ => Ok(unconstrained_step(v, alpha)),
    }
}

fn violation_sq(problem: &ConstrainedProblem, x: &DVector<f64>, scratch: &mut Vec<f64>) -> f64 {
    problem.constraints.values_into(x, scratch);
    scratch.iter().map(|&h| h.max(0.0).powi(2)).sum()
}

/// Runs the solver and keeps every record in the returned trace.
pub fn run(problem: &ConstrainedProblem, config: &SolverConfig, x0: &DVector<f64>) -> Result<RunTrace> {
    let mut records = Vec::with_capacity(config.max_iters.min(1 << 20));
    let mut trace = run_observed(problem, config, x0, &mut |rec: &IterRecord| {
        records.push(rec.clone());
        Ok(())
    })?;
    trace.records = records;
    Ok(trace)
}

/// Runs the solver, handing each record to `observer` instead of storing it.
/// The returned trace has no records.
pub fn run_observed(
    problem: &ConstrainedProblem,
    config: &SolverConfig,
    x0: &DVector<f64>,
    observer: &mut dyn FnMut(&IterRecord) -> Result<()>,
) -> Result<RunTrace> {
    let n = problem.dim();
    let m = problem.constraints.count();
    config.validate(m)?;
    if x0.len() != n {
        return Err(Error::dims("initial point", n, x0.len()));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial point".into()));
    }

    let start = Instant::now();
    let mut x = problem.simple_set.project(x0);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut acc = AverageAccumulator::new(config.averaging, n);
    let f_star = problem.reference_value();
    let x_star = problem.reference_point();
    let need_metrics = config.record_metrics || (config.stopping.is_some() && f_star.is_some());
    let window_len = config.stopping.map_or(0, |s| s.movement_window);
    let mut window: VecDeque<f64> = VecDeque::with_capacity(window_len);
    let mut iterates = Vec::new();
    if config.keep_iterates {
        iterates.push(x.clone());
    }
    let mut case_counts = CaseCounts::default();
    let mut stop_reason = StopReason::MaxIterations;
    let mut iterations = 0;
    let mut scratch = Vec::with_capacity(m);

    for k in 0..config.max_iters {
        let step = match config.method {
            Method::Smba => smba_iterate(&x, k, problem, config, &mut rng)?,
            Method::MaxViolation => deterministic_max_violation_step(&x, k, problem, config)?,
        };
        acc.push(step.alpha, &x);
        let step_sq = (&step.x_next - &x).norm_squared();
        x = step.x_next;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("iterate {}", k + 1)));
        }
        iterations = k + 1;
        case_counts.add(step.case);

        let (f, feas_sq) = if need_metrics {
            (problem.objective.value(&x), violation_sq(problem, &x, &mut scratch))
        } else {
            (f64::NAN, f64::NAN)
        };
        let average = if config.average_metrics.is_due(iterations) {
            acc.average().map(|xa| AverageMetrics {
                f: problem.objective.value(&xa),
                feas_sq: violation_sq(problem, &xa, &mut scratch),
                dist_sq: x_star.as_ref().map(|s| (&xa - s).norm_squared()),
            })
        } else {
            None
        };
        observer(&IterRecord {
            k: iterations,
            alpha: step.alpha,
            f,
            feas_sq,
            step_sq,
            case: step.case,
            constraint: step.constraint,
            average,
        })?;
        if config.keep_iterates {
            iterates.push(x.clone());
        }

        if let Some(rule) = &config.stopping {
            if let Some(fs) = f_star {
                if feas_sq <= rule.feas_tol && (f - fs).abs() <= rule.opt_tol {
                    stop_reason = StopReason::FeasibleOptimal;
                    break;
                }
            }
            if window.len() == window_len {
                window.pop_front();
            }
            window.push_back(step_sq);
            if window.len() == window_len && window.iter().all(|&s| s <= rule.movement_tol) {
                stop_reason = StopReason::Movement;
                break;
            }
        }
    }

    Ok(RunTrace {
        records: Vec::new(),
        iterates,
        x_final: x,
        x_average: acc.average(),
        iterations,
        stop_reason,
        case_counts,
        wall_time_secs: start.elapsed().as_secs_f64(),
        seed: config.seed,
    })
}

/// Mean and sample standard deviation; the deviation is zero for one value.
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatSummary {
    pub repetitions: usize,
    pub base_seed: u64,
    pub mean_time: f64,
    pub std_time: f64,
    pub mean_iters: f64,
    pub std_iters: f64,
    pub iterations: Vec<usize>,
    pub stop_reasons: Vec<StopReason>,
}

#[derive(Debug, Clone)]
pub struct RepeatedRuns {
    pub traces: Vec<RunTrace>,
    pub summary: RepeatSummary,
}

/// Runs with seeds `seed, seed + 1, ...`, possibly in parallel on the current
/// rayon pool. Traces come back in seed order.
pub fn run_repeated(
    problem: &ConstrainedProblem,
    config: &SolverConfig,
    x0: &DVector<f64>,
    repetitions: usize,
) -> Result<RepeatedRuns> {
    run_repeated_with(problem, config, repetitions, |_, cfg| run(problem, cfg, x0))
}

/// Like [`run_repeated`], but each repetition is executed by `run_one`, which
/// receives the repetition index and the reseeded config. Lets callers stream
/// records instead of keeping them.
pub fn run_repeated_with<F>(
    problem: &ConstrainedProblem,
    config: &SolverConfig,
    repetitions: usize,
    run_one: F,
) -> Result<RepeatedRuns>
where
    F: Fn(usize, &SolverConfig) -> Result<RunTrace> + Sync,
{
    if repetitions == 0 {
        return Err(Error::InvalidParameter("repetitions must be at least 1".into()));
    }
    config.validate(problem.constraints.count())?;
    let traces = (0..repetitions)
        .into_par_iter()
        .map(|r| run_one(r, &config.with_seed(config.seed.wrapping_add(r as u64))))
        .collect::<Result<Vec<_>>>()?;
    let times: Vec<f64> = traces.iter().map(|t| t.wall_time_secs).collect();
    let iters: Vec<f64> = traces.iter().map(|t| t.iterations as f64).collect();
    let (mean_time, std_time) = mean_and_std(&times);
    let (mean_iters, std_iters) = mean_and_std(&iters);
    let summary = RepeatSummary {
        repetitions,
        base_seed: config.seed,
        mean_time,
        std_time,
        mean_iters,
        std_iters,
        iterations: traces.iter().map(|t| t.iterations).collect(),
        stop_reasons: traces.iter().map(|t| t.stop_reason).collect(),
    };
    Ok(RepeatedRuns { traces, summary })
}
