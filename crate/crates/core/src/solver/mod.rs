//! The stochastic moving-ball iteration, its stepsize and averaging rules,
//! stopping criteria and a deterministic max-violation baseline.
//!
//! Each iteration takes a projected (sub)gradient step on the objective,
//! `v = P_Y(x - alpha_k grad f(x))`, samples one constraint, and moves `v`
//! toward the ball inner approximation of that constraint before projecting
//! back onto `Y`.

mod average;
mod config;
mod rates;
mod run;
mod schedule;
mod trace;

pub use average::AverageAccumulator;
pub use config::{Averaging, Method, MetricSchedule, Sampling, SolverConfig, StoppingRule};
pub use rates::{fit_rate_slope, loglog_slope, rate_series, RateMetric, LOG_FLOOR, MIN_FIT_POINTS};
pub use run::{
    deterministic_max_violation_step, mean_and_std, run, run_observed, run_repeated, run_repeated_with, smba_iterate,
    RepeatSummary, RepeatedRuns, Step,
};
pub use schedule::StepsizeSchedule;
pub use trace::{
    AverageMetrics, CaseCounts, CsvAverageWriter, CsvTraceWriter, IterRecord, RunSummary, RunTrace, StopReason,
};
