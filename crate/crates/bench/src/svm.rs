//! `smba svm`: train and evaluate the multiple-kernel classifier.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::Args;
use serde::{Deserialize, Serialize};
use smba::mkl::{
    assemble_mkl_qcqp, default_training_config, gaussian_grid, load_csv_dataset, mkl_classifier, predict_tsa,
    recover_dual, single_kernel_qp, two_blobs, Dataset, LabelColumn, LambdaEntry,
};
use smba::solver::{run, StopReason};

use crate::write_json;

#[derive(Debug, Args)]
pub struct SvmArgs {
    /// Labeled CSV with a header row.
    #[arg(long, conflicts_with = "blobs", required_unless_present = "blobs")]
    pub data: Option<PathBuf>,
    /// Use this many points of two separable Gaussian blobs instead of a file.
    #[arg(long)]
    pub blobs: Option<usize>,
    /// Label column: index, header name or `last`.
    #[arg(long, default_value = "last")]
    pub label: LabelColumn,
    /// Number of Gaussian kernels in the grid.
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    #[arg(long = "C", default_value_t = 0.1)]
    pub c: f64,
    /// Fraction of rows used for training.
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0.96)]
    pub beta: f64,
    /// Also train the single Gaussian-kernel SVM baseline.
    #[arg(long)]
    pub single_kernel: bool,
    /// Kernel width of the baseline.
    #[arg(long, default_value_t = 1.0)]
    pub sigma_sq: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmReport {
    pub train_size: usize,
    pub test_size: usize,
    pub kernels: usize,
    pub c: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub active_index: usize,
    /// Width of the active kernel.
    pub sigma_sq: Option<f64>,
    pub lambda: Vec<LambdaEntry>,
    pub degenerate: bool,
    pub constraint_value: f64,
    pub tsa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub single_kernel: Option<BaselineReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub sigma_sq: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub tsa2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmTiming {
    pub train_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub single_kernel_time: Option<f64>,
}

/// The dataset named by the flags, split and standardized.
pub fn load_dataset(args: &SvmArgs) -> anyhow::Result<Dataset> {
    if let Some(path) = &args.data {
        return load_csv_dataset(path, &args.label, args.split, args.seed)
            .with_context(|| format!("loading {}", path.display()));
    }
    let Some(points) = args.blobs else {
        bail!("either --data or --blobs is required");
    };
    let (features, labels) = two_blobs(points, 3.0, 0.5, args.seed);
    let mut data = Dataset::with_random_split(features, labels, args.split, args.seed)?;
    data.standardize()?;
    Ok(data)
}

pub fn cmd_svm(args: &SvmArgs) -> anyhow::Result<SvmReport> {
    let data = load_dataset(args)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let start = Instant::now();
    let mkl = assemble_mkl_qcqp(&data, &gaussian_grid(args.m), args.c)?;
    let problem = mkl.to_problem()?;
    let mut config = default_training_config(&problem, args.max_iters, args.seed);
    config.beta = args.beta;
    let trace = run(&problem, &config, &mkl.initial_point())?;
    let dual = recover_dual(&mkl, &trace.x_final)?;
    let classifier = mkl_classifier(&mkl, &trace.x_final, &dual);
    let train_time = start.elapsed().as_secs_f64();
    let tsa = predict_tsa(&classifier, &data)?;
    let mut text = classifier.to_json()?;
    text.push('\n');
    let classifier_path = args.out.join("classifier.json");
    fs::write(&classifier_path, text).with_context(|| format!("writing {}", classifier_path.display()))?;

    let mut single_kernel_time = None;
    let single_kernel = if args.single_kernel {
        let start = Instant::now();
        let sk = single_kernel_qp(&data, args.sigma_sq, args.c)?;
        let mut config = default_training_config(&sk.problem, args.max_iters, args.seed);
        config.beta = args.beta;
        let x0 = nalgebra::DVector::zeros(sk.train_labels.len());
        let trace = run(&sk.problem, &config, &x0)?;
        let baseline = sk.classifier(&trace.x_final);
        single_kernel_time = Some(start.elapsed().as_secs_f64());
        Some(BaselineReport {
            sigma_sq: args.sigma_sq,
            iterations: trace.iterations,
            stop_reason: trace.stop_reason,
            tsa2: predict_tsa(&baseline, &data)?,
        })
    } else {
        None
    };

    let report = SvmReport {
        train_size: data.train.len(),
        test_size: data.test.len(),
        kernels: args.m,
        c: args.c,
        iterations: trace.iterations,
        stop_reason: trace.stop_reason,
        active_index: dual.active_index,
        sigma_sq: classifier.kernel_grid[dual.active_index].sigma_sq(),
        lambda: classifier.lambda.clone(),
        degenerate: dual.degenerate,
        constraint_value: dual.constraint_value,
        tsa,
        single_kernel,
    };
    write_json(&args.out.join("report.json"), &report)?;
    write_json(
        &args.out.join("timing.json"),
        &SvmTiming {
            train_time,
            single_kernel_time,
        },
    )?;

    println!("train/test = {}/{}", report.train_size, report.test_size);
    println!("iterations = {} ({})", report.iterations, report.stop_reason.tag());
    println!("train_time = {train_time:.3}s");
    for e in &report.lambda {
        println!("lambda[{}] = {:.6}", e.index, e.value);
    }
    if let Some(s) = report.sigma_sq {
        println!("active sigma_sq = {s:.6e}");
    }
    println!("TSA = {:.2}%", 100.0 * report.tsa);
    if let Some(b) = &report.single_kernel {
        println!("TSA2 = {:.2}% (sigma_sq = {})", 100.0 * b.tsa2, b.sigma_sq);
    }
    println!("classifier = {}", classifier_path.display());
    Ok(report)
}
