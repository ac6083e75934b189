use rand::Rng;
use serde::{Deserialize, Serialize};

use super::schedule::StepsizeSchedule;
use crate::error::{Error, Result};

/// How the constraint index is drawn each iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub enum Sampling {
    #[default]
    Uniform,
    Weighted {
        probabilities: Vec<f64>,
    },
}

impl Sampling {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> usize {
        match self {
            Sampling::Uniform => rng.random_range(0..count),
            Sampling::Weighted { probabilities } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, &p) in probabilities.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return i;
                    }
                }
                // rounding left u above the final partial sum
                probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(count - 1)
            }
        }
    }
}

/// Constraint selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub enum Method {
    /// One randomly sampled constraint per iteration.
    #[default]
    Smba,
    /// Deterministic baseline: the most violated constraint at `v_k`.
    MaxViolation,
}

/// Weighting of the averaged iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub enum Averaging {
    /// Weights `alpha_t`.
    #[default]
    ConvexWeights,
    /// Weights `(t + 1)^2`.
    StronglyConvexWeights,
    None,
}

/// When to evaluate objective/feasibility/distance at the averaged iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub enum MetricSchedule {
    #[default]
    Never,
    Every,
    /// Roughly `per_decade` evaluations per decade of iterations.
    LogSpaced {
        per_decade: usize,
    },
}

impl MetricSchedule {
    /// Whether metrics are due after `k >= 1` completed iterations.
    pub fn is_due(&self, k: usize) -> bool {
        match *self {
            MetricSchedule::Never => false,
            MetricSchedule::Every => true,
            MetricSchedule::LogSpaced { per_decade } => {
                if k <= 1 {
                    return k == 1;
                }
                let pd = per_decade as f64;
                let here = (pd * (k as f64).log10()).floor();
                let before = (pd * ((k - 1) as f64).log10()).floor();
                here != before
            }
        }
    }
}

/// Termination rules. The feasibility-and-optimality test is active only when
/// the problem carries a reference optimal value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct StoppingRule {
    /// Threshold on `||max(0, h(x))||^2`.
    pub feas_tol: f64,
    /// Threshold on `|f(x) - f*|`.
    pub opt_tol: f64,
    /// Number of consecutive steps in the movement window.
    pub movement_window: usize,
    /// Threshold on the largest squared step in the window.
    pub movement_tol: f64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            feas_tol: 1e-2,
            opt_tol: 1e-2,
            movement_window: 10,
            movement_tol: 1e-3,
        }
    }
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("feas_tol", self.feas_tol),
            ("opt_tol", self.opt_tol),
            ("movement_tol", self.movement_tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.movement_window == 0 {
            return Err(Error::Config("movement_window must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct SolverConfig {
    /// Feasibility relaxation, in `(0, 2)`.
    pub beta: f64,
    pub schedule: StepsizeSchedule,
    pub sampling: Sampling,
    pub method: Method,
    pub seed: u64,
    pub max_iters: usize,
    /// `None` runs exactly `max_iters` iterations.
    pub stopping: Option<StoppingRule>,
    pub averaging: Averaging,
    pub average_metrics: MetricSchedule,
    /// Evaluate `f` and the feasibility violation at every iterate. When off,
    /// they are computed only if a stopping rule needs them and are otherwise
    /// reported as NaN.
    pub record_metrics: bool,
    /// Keep every iterate `x_0, ..., x_K` in the trace.
    pub keep_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 0.96,
            schedule: StepsizeSchedule::SqrtLog { alpha0: 1.0 },
            sampling: Sampling::Uniform,
            method: Method::Smba,
            seed: 0,
            max_iters: 10_000,
            stopping: Some(StoppingRule::default()),
            averaging: Averaging::ConvexWeights,
            average_metrics: MetricSchedule::Never,
            record_metrics: true,
            keep_iterates: false,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    /// Rejects inconsistent settings for a problem with `constraint_count`
    /// constraints.
    pub fn validate(&self, constraint_count: usize) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 2.0) {
            return Err(Error::Config(format!("beta must lie in (0, 2), got {}", self.beta)));
        }
        self.schedule.validate()?;
        if let Some(stop) = &self.stopping {
            stop.validate()?;
        }
        if self.averaging == Averaging::StronglyConvexWeights
            && !matches!(self.schedule, StepsizeSchedule::StronglyConvex { .. })
        {
            return Err(Error::Config(
                "strongly convex averaging requires the strongly convex stepsize schedule".into(),
            ));
        }
        if let MetricSchedule::LogSpaced { per_decade: 0 } = self.average_metrics {
            return Err(Error::Config("per_decade must be at least 1".into()));
        }
        if let Sampling::Weighted { probabilities } = &self.sampling {
            if probabilities.len() != constraint_count {
                return Err(Error::Config(format!(
                    "sampling probabilities have length {}, expected {constraint_count}",
                    probabilities.len()
                )));
            }
            if probabilities.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::Config("sampling probabilities must be nonnegative".into()));
            }
            let total: f64 = probabilities.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "sampling probabilities must sum to 1, got {total}"
                )));
            }
        }
        Ok(())
    }
}
