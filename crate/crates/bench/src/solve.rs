//! `smba solve`: run the solver from a config file and write traces.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use log::warn;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use smba::problem::{qcqp_as_problem, ConstrainedProblem, QcqpInstance, ReferenceOptimum};
use smba::qcqp_gen::{gen_instance, GenSidecar};
use smba::solver::{
    fit_rate_slope, run_observed, run_repeated_with, Averaging, CaseCounts, CsvAverageWriter, CsvTraceWriter,
    IterRecord, MetricSchedule, RateMetric, RunTrace, StopReason,
};

use crate::config::{resolve, InstanceSource, RateSettings, ReferenceSource, RunConfigFile};
use crate::rates::{band_for, load_reference, median, metric_name, RateCheck};
use crate::{thread_pool, write_json};

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Run configuration (see `smba schema`).
    #[arg(long)]
    pub config: PathBuf,
}

/// Contents of `summary.json`. Wall-clock times live in `timing.json` so
/// that this file is reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub repetitions: usize,
    pub base_seed: u64,
    pub mean_iters: f64,
    pub std_iters: f64,
    pub iterations: Vec<usize>,
    pub stop_reasons: Vec<StopReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceOptimum>,
    pub runs: Vec<RunReport>,
    /// Median slopes over repetitions.
    pub rates: Vec<RateCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub case_counts: CaseCounts,
    pub final_f: f64,
    pub final_feas_sq: f64,
    pub x_final: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_average: Option<Vec<f64>>,
    pub rates: Vec<RateCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub mean_time: f64,
    pub std_time: f64,
    pub wall_times: Vec<f64>,
    pub threads: usize,
}

/// A loaded instance with its default starting point.
pub struct LoadedInstance {
    pub instance: QcqpInstance,
    pub x0: Option<Vec<f64>>,
}

pub fn load_instance(source: &InstanceSource, base: &Path) -> anyhow::Result<LoadedInstance> {
    match source {
        InstanceSource::Path(p) => {
            let path = resolve(base, p);
            let text = fs::read_to_string(&path).with_context(|| format!("reading instance {}", path.display()))?;
            let instance =
                QcqpInstance::from_json(&text).with_context(|| format!("instance {} is invalid", path.display()))?;
            let sidecar_path = path.with_extension("sidecar.json");
            let x0 = if sidecar_path.exists() {
                let text = fs::read_to_string(&sidecar_path)?;
                let sidecar: GenSidecar = serde_json::from_str(&text)
                    .with_context(|| format!("sidecar {} is invalid", sidecar_path.display()))?;
                Some(sidecar.x0)
            } else {
                None
            };
            Ok(LoadedInstance { instance, x0 })
        }
        InstanceSource::Generate(spec) => {
            let g = gen_instance(spec)?;
            Ok(LoadedInstance {
                instance: g.instance,
                x0: Some(g.x0.as_slice().to_vec()),
            })
        }
    }
}

fn load_reference_source(source: &ReferenceSource, base: &Path) -> anyhow::Result<ReferenceOptimum> {
    match source {
        ReferenceSource::Inline(r) => Ok(r.clone()),
        ReferenceSource::Path(p) => load_reference(&resolve(base, p)),
    }
}

/// Metrics fitted for a run, given what is known about the optimum.
pub fn selected_metrics(
    settings: &RateSettings,
    averaging: Averaging,
    reference: Option<&ReferenceOptimum>,
) -> Vec<RateMetric> {
    if !settings.metrics.is_empty() {
        return settings.metrics.clone();
    }
    let has_point = reference.is_some_and(|r| r.point.is_some());
    match averaging {
        Averaging::StronglyConvexWeights if has_point => vec![RateMetric::DistSq],
        Averaging::StronglyConvexWeights => Vec::new(),
        _ if reference.is_some() => vec![RateMetric::OptGap, RateMetric::FeasSq],
        _ => vec![RateMetric::FeasSq],
    }
}

fn fit_checks(
    trace: &RunTrace,
    metrics: &[RateMetric],
    settings: &RateSettings,
    f_star: Option<f64>,
) -> Vec<RateCheck> {
    let mut checks = Vec::new();
    for &m in metrics {
        match fit_rate_slope(trace, m, f_star, settings.window) {
            Ok(slope) => checks.push(RateCheck::new(m, slope, band_for(&settings.bands, m))),
            Err(e) => warn!("seed {}: no {} fit: {e}", trace.seed, metric_name(m)),
        }
    }
    checks
}

pub fn cmd_solve(args: &SolveArgs) -> anyhow::Result<SolveSummary> {
    let (config, base) = RunConfigFile::load(&args.config)?;
    let loaded = load_instance(&config.instance, &base)?;
    let reference = config
        .reference
        .as_ref()
        .map(|r| load_reference_source(r, &base))
        .transpose()?;
    let mut problem: ConstrainedProblem = qcqp_as_problem(&loaded.instance)?;
    if let Some(r) = &reference {
        problem = problem.with_reference(r.clone())?;
    }
    let n = problem.dim();
    let x0 = DVector::from_vec(config.x0.clone().or(loaded.x0).unwrap_or_else(|| vec![0.0; n]));

    let out_dir = resolve(&base, &config.output);
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let write_averages = config.solver.average_metrics != MetricSchedule::Never;

    let pool = thread_pool()?;
    let repeated = pool.install(|| {
        run_repeated_with(&problem, &config.solver, config.repetitions, |r, cfg| {
            let trace_file = File::create(out_dir.join(format!("trace_{r:03}.csv")))?;
            let mut traces = CsvTraceWriter::new(BufWriter::new(trace_file))?;
            let mut averages = if write_averages {
                let f = File::create(out_dir.join(format!("average_{r:03}.csv")))?;
                Some(CsvAverageWriter::new(BufWriter::new(f))?)
            } else {
                None
            };
            let mut averaged: Vec<IterRecord> = Vec::new();
            let mut trace = run_observed(&problem, cfg, &x0, &mut |rec: &IterRecord| {
                traces.write(rec)?;
                if rec.average.is_some() {
                    if let Some(w) = averages.as_mut() {
                        w.write(rec)?;
                    }
                    averaged.push(rec.clone());
                }
                Ok(())
            })?;
            traces.finish()?;
            if let Some(w) = averages {
                w.finish()?;
            }
            trace.records = averaged;
            Ok(trace)
        })
    })?;

    let f_star = problem.reference_value();
    let metrics = selected_metrics(&config.rates, config.solver.averaging, reference.as_ref());
    let runs: Vec<RunReport> = repeated
        .traces
        .iter()
        .map(|t| RunReport {
            seed: t.seed,
            iterations: t.iterations,
            stop_reason: t.stop_reason,
            case_counts: t.case_counts,
            final_f: problem.objective.value(&t.x_final),
            final_feas_sq: problem.constraints.violation_sq(&t.x_final),
            x_final: t.x_final.as_slice().to_vec(),
            x_average: t.x_average.as_ref().map(|x| x.as_slice().to_vec()),
            rates: if write_averages {
                fit_checks(t, &metrics, &config.rates, f_star)
            } else {
                Vec::new()
            },
        })
        .collect();
    let mut rates = Vec::new();
    for &m in &metrics {
        let slopes: Vec<f64> = runs
            .iter()
            .filter_map(|r| r.rates.iter().find(|c| c.metric == m).map(|c| c.slope))
            .collect();
        if slopes.len() == runs.len() && !slopes.is_empty() {
            rates.push(RateCheck::new(m, median(&slopes), band_for(&config.rates.bands, m)));
        }
    }

    let s = &repeated.summary;
    let summary = SolveSummary {
        repetitions: s.repetitions,
        base_seed: s.base_seed,
        mean_iters: s.mean_iters,
        std_iters: s.std_iters,
        iterations: s.iterations.clone(),
        stop_reasons: s.stop_reasons.clone(),
        reference,
        runs,
        rates,
    };
    let wall_times: Vec<f64> = repeated.traces.iter().map(|t| t.wall_time_secs).collect();
    let timing = Timing {
        mean_time: s.mean_time,
        std_time: s.std_time,
        wall_times,
        threads: pool.current_num_threads(),
    };
    write_json(&out_dir.join("summary.json"), &summary)?;
    write_json(&out_dir.join("timing.json"), &timing)?;

    for (r, run) in summary.runs.iter().enumerate() {
        println!(
            "run {r}: seed {} iterations {} stop {} f {:.6e} feas_sq {:.3e}",
            run.seed,
            run.iterations,
            run.stop_reason.tag(),
            run.final_f,
            run.final_feas_sq
        );
    }
    println!("mean_iters = {:.1} (std {:.1})", summary.mean_iters, summary.std_iters);
    println!("mean_time = {:.3}s (std {:.3}s)", timing.mean_time, timing.std_time);
    for c in &summary.rates {
        println!(
            "{:<8} median slope = {:+.4}  band = {}  {}",
            metric_name(c.metric),
            c.slope,
            c.band,
            c.verdict()
        );
    }
    println!("output = {}", out_dir.display());
    Ok(summary)
}
