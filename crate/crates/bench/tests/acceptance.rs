//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smba::ball::{adaptive_p, build_ball, feasibility_step, feasibility_step_via_projection, FeasibilityCase};
use smba::mkl::*;
use smba::problem::{
    qcqp_as_problem, ConstrainedProblem, Provenance, QuadraticConstraints, QuadraticFunction, QuadraticObjective,
    ReferenceOptimum, SimpleSet,
};
use smba::qcqp_gen::{gen_instance, GenSpec, GeneratedInstance, ObjectiveRegime, RhsScheme};
use smba::solver::*;
use smba_bench::rates::median;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(limit: Duration, elapsed: Duration) -> Outcome {
    ensure!(
        elapsed <= limit,
        "took {:.2}s, limit {:.0}s",
        elapsed.as_secs_f64(),
        limit.as_secs_f64()
    );
    Ok(format!("{:.2}s", elapsed.as_secs_f64()))
}

// ---- ball geometry -------------------------------------------------------

struct Sample {
    v: DVector<f64>,
    h: f64,
    grad: DVector<f64>,
    lipschitz: f64,
}

/// Random PSD quadratic of dimension 2..=20 evaluated at a random point;
/// `target` fixes the branch through the constant term.
fn sample(seed: u64, target: FeasibilityCase) -> Sample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=20);
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let q = a.transpose() * &a;
    let lin = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let v = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
    let grad = &q * &v + &lin;
    let lipschitz = SymmetricEigen::new(q).eigenvalues.max() * rng.random_range(1.0..3.0);
    let edge = grad.norm_squared() / (2.0 * lipschitz);
    let h = match target {
        FeasibilityCase::AlreadyFeasible => -rng.random_range(0.0..2.0),
        FeasibilityCase::NonemptyBall => edge * rng.random_range(1e-9..0.999),
        FeasibilityCase::EmptyBall => edge * rng.random_range(1.001..5.0) + rng.random_range(0.0..1.0),
    };
    Sample { v, h, grad, lipschitz }
}

const CASES: [FeasibilityCase; 3] = [
    FeasibilityCase::AlreadyFeasible,
    FeasibilityCase::NonemptyBall,
    FeasibilityCase::EmptyBall,
];

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let per_case = 1000;
    for (c, &target) in CASES.iter().enumerate() {
        for i in 0..per_case {
            let s = sample(1_000_000 * c as u64 + i, target);
            let ball = build_ball(&s.v, s.h, &s.grad, s.lipschitz).map_err(|e| e.to_string())?;
            let p = adaptive_p(&ball, &s.v).map_err(|e| e.to_string())?;
            let g2 = s.grad.norm_squared();
            let hl = s.h.max(0.0) * s.lipschitz;
            ensure!(hl <= p * (1.0 + 1e-12), "(h)+ L = {hl} > p = {p}");
            match ball.case() {
                FeasibilityCase::AlreadyFeasible => ensure!(p == 0.0, "p = {p} at h = {}", s.h),
                FeasibilityCase::NonemptyBall => {
                    ensure!(
                        0.5 * g2 <= p * (1.0 + 1e-12) && p <= g2 * (1.0 + 1e-12),
                        "p = {p}, |g|^2 = {g2}"
                    )
                }
                FeasibilityCase::EmptyBall => ensure!((p - hl).abs() <= 1e-12 * hl, "p = {p}, hL = {hl}"),
            }
            ensure!(ball.case() == target, "sample {i} landed in {:?}", ball.case());
        }
    }
    let time = within(Duration::from_secs(5), start.elapsed())?;
    Ok(format!("{} samples, {time}", 3 * per_case))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let count = 1000;
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..count {
        let s = sample(7_000_000 + i, FeasibilityCase::NonemptyBall);
        let beta = rng.random_range(0.01..1.99);
        let ball = build_ball(&s.v, s.h, &s.grad, s.lipschitz).map_err(|e| e.to_string())?;
        let (z, _) = feasibility_step(&s.v, &ball, &s.grad, beta).map_err(|e| e.to_string())?;
        let z_proj = feasibility_step_via_projection(&s.v, &ball, beta).map_err(|e| e.to_string())?;
        for (a, b) in z.iter().zip(z_proj.iter()) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure!(worst <= 1e-10, "max coordinate difference {worst:e}");
    let time = within(Duration::from_secs(5), start.elapsed())?;
    Ok(format!("{count} samples, max difference {worst:.1e}, {time}"))
}

// ---- solver --------------------------------------------------------------

fn scalar_fn(q: f64, lin: f64, constant: f64) -> QuadraticFunction {
    QuadraticFunction::new(DMatrix::from_element(1, 1, q), DVector::from_element(1, lin), constant).unwrap()
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    // f(x) = (x - 2)^2, h(x) = (x^2 - 1)/2
    let objective = QuadraticObjective::new(scalar_fn(2.0, -4.0, 4.0)).unwrap();
    let constraints = QuadraticConstraints::new(1, vec![scalar_fn(1.0, 0.0, -0.5)]).unwrap();
    let problem = ConstrainedProblem::new(Box::new(objective), Box::new(constraints), SimpleSet::Whole).unwrap();
    let mut errors = Vec::new();
    for x0 in [0.0, 3.0] {
        let config = SolverConfig {
            beta: 0.96,
            schedule: StepsizeSchedule::StronglyConvex { mu: 2.0 },
            averaging: Averaging::StronglyConvexWeights,
            max_iters: 10_000,
            stopping: None,
            record_metrics: false,
            ..SolverConfig::default()
        };
        let trace = run(&problem, &config, &DVector::from_element(1, x0)).map_err(|e| e.to_string())?;
        let err = (trace.x_average.unwrap()[0] - 1.0).abs();
        ensure!(err <= 1e-2, "x0 = {x0}: |x_avg - 1| = {err:e}");
        errors.push(format!("x0 = {x0}: {err:.1e}"));
    }
    let time = within(Duration::from_secs(1), start.elapsed())?;
    Ok(format!("{}, {time}", errors.join(", ")))
}

/// Generated `n = 50, m = 100` instance with linear terms in [-1, 1].
fn rate_instance(regime: ObjectiveRegime) -> GeneratedInstance {
    gen_instance(&GenSpec::new(50, 100, regime, RhsScheme::FeasibleX0, 1).with_linear_range(-1.0, 1.0)).unwrap()
}

/// Last iterate of a long deterministic max-violation run.
fn long_run_reference(
    problem: &ConstrainedProblem,
    x0: &DVector<f64>,
    schedule: StepsizeSchedule,
    averaging: Averaging,
    iterations: usize,
) -> ReferenceOptimum {
    let config = SolverConfig {
        beta: 0.96,
        schedule,
        method: Method::MaxViolation,
        max_iters: iterations,
        stopping: None,
        averaging,
        record_metrics: false,
        ..SolverConfig::default()
    };
    let trace = run(problem, &config, x0).unwrap();
    ReferenceOptimum {
        value: problem.objective.value(&trace.x_final),
        point: Some(trace.x_final.as_slice().to_vec()),
        provenance: Provenance::LongRunBaseline,
    }
}

fn rate_runs(
    problem: &ConstrainedProblem,
    x0: &DVector<f64>,
    schedule: StepsizeSchedule,
    averaging: Averaging,
) -> Vec<RunTrace> {
    let config = SolverConfig {
        beta: 0.96,
        schedule,
        max_iters: 100_000,
        stopping: None,
        averaging,
        average_metrics: MetricSchedule::LogSpaced { per_decade: 20 },
        record_metrics: false,
        ..SolverConfig::default()
    };
    run_repeated(problem, &config, x0, 5).unwrap().traces
}

fn median_slope(traces: &[RunTrace], metric: RateMetric, f_star: Option<f64>) -> Result<f64, String> {
    let slopes = traces
        .iter()
        .map(|t| fit_rate_slope(t, metric, f_star, 0.8))
        .collect::<smba::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    Ok(median(&slopes))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let g = rate_instance(ObjectiveRegime::Convex);
    let problem = qcqp_as_problem(&g.instance).unwrap();
    let lf = problem.objective.lipschitz_grad().unwrap();
    let schedule = StepsizeSchedule::SqrtLog { alpha0: 0.1 / lf };
    let reference = long_run_reference(&problem, &g.x0, schedule, Averaging::ConvexWeights, 1_000_000);
    let f_star = reference.value;
    let problem = problem.with_reference(reference).unwrap();
    let traces = rate_runs(&problem, &g.x0, schedule, Averaging::ConvexWeights);
    let gap = median_slope(&traces, RateMetric::OptGap, Some(f_star))?;
    let feas = median_slope(&traces, RateMetric::FeasSq, None)?;
    let detail = format!("gap slope {gap:+.3}, feasibility slope {feas:+.3}");
    ensure!((-0.75..=-0.30).contains(&gap), "{detail}: gap outside [-0.75, -0.30]");
    ensure!(feas <= -0.30, "{detail}: feasibility above -0.30");
    let time = within(Duration::from_secs(120), start.elapsed())?;
    Ok(format!("{detail}, {time}"))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let g = rate_instance(ObjectiveRegime::StronglyConvex);
    let problem = qcqp_as_problem(&g.instance).unwrap();
    let mu = problem.objective.strong_convexity();
    ensure!(mu > 0.0, "objective is not strongly convex");
    let schedule = StepsizeSchedule::StronglyConvex { mu };
    let averaging = Averaging::StronglyConvexWeights;
    let reference = long_run_reference(&problem, &g.x0, schedule, averaging, 1_000_000);
    let problem = problem.with_reference(reference).unwrap();
    let traces = rate_runs(&problem, &g.x0, schedule, averaging);
    let dist = median_slope(&traces, RateMetric::DistSq, None)?;
    let detail = format!("distance slope {dist:+.3}");
    ensure!((-1.6..=-0.7).contains(&dist), "{detail}: outside [-1.6, -0.7]");
    let time = within(Duration::from_secs(120), start.elapsed())?;
    Ok(format!("{detail}, {time}"))
}

/// Index of the first record at which either stopping rule holds.
fn first_firing(records: &[IterRecord], f_star: f64, rule: &StoppingRule) -> Option<(usize, StopReason)> {
    let w = rule.movement_window;
    (0..records.len()).find_map(|j| {
        let r = &records[j];
        if r.feas_sq <= rule.feas_tol && (r.f - f_star).abs() <= rule.opt_tol {
            Some((j, StopReason::FeasibleOptimal))
        } else if j + 1 >= w && records[j + 1 - w..=j].iter().all(|r| r.step_sq <= rule.movement_tol) {
            Some((j, StopReason::Movement))
        } else {
            None
        }
    })
}

fn criterion_6() -> Outcome {
    let rule = StoppingRule::default();
    ensure!(
        rule.feas_tol == 1e-2 && rule.opt_tol == 1e-2 && rule.movement_window == 10 && rule.movement_tol == 1e-3,
        "default thresholds changed: {rule:?}"
    );
    let mut fired = [0usize; 2];
    for seed in 0..6u64 {
        let range = if seed % 2 == 0 { [0.0, 1.0] } else { [-1.0, 1.0] };
        let spec = GenSpec::new(20, 30, ObjectiveRegime::Convex, RhsScheme::FeasibleX0, 100 + seed)
            .with_linear_range(range[0], range[1]);
        let g = gen_instance(&spec).unwrap();
        let problem = qcqp_as_problem(&g.instance).unwrap();
        let lf = problem.objective.lipschitz_grad().unwrap();
        let schedule = StepsizeSchedule::SqrtLog { alpha0: 1.0 / lf };
        let reference = long_run_reference(&problem, &g.x0, schedule, Averaging::ConvexWeights, 200_000);
        let f_star = reference.value;
        let problem = problem.with_reference(reference).unwrap();
        let config = SolverConfig {
            beta: 0.96,
            schedule,
            seed,
            max_iters: 100_000,
            stopping: Some(rule),
            ..SolverConfig::default()
        };
        let trace = run(&problem, &config, &g.x0).map_err(|e| e.to_string())?;
        ensure!(
            trace.stop_reason != StopReason::MaxIterations,
            "instance {seed} hit the iteration cap"
        );
        let expected = first_firing(&trace.records, f_star, &rule);
        ensure!(
            expected == Some((trace.records.len() - 1, trace.stop_reason)),
            "instance {seed}: stopped at {} by {:?}, rules first hold at {expected:?}",
            trace.records.len() - 1,
            trace.stop_reason
        );
        match trace.stop_reason {
            StopReason::FeasibleOptimal => fired[0] += 1,
            _ => fired[1] += 1,
        }
    }
    Ok(format!(
        "6 instances, {} by feasibility+optimality, {} by movement",
        fired[0], fired[1]
    ))
}

// ---- kernel SVM ------------------------------------------------------------

/// Minimizer of `|a - alpha|^2` over `{0 <= a <= hi, y'a = 0}` by
/// enumerating which coordinates sit at a bound.
fn enumerate_projection(alpha: &[f64], y: &[f64], upper: Option<f64>) -> Vec<f64> {
    let n = y.len();
    let states = if upper.is_some() { 3usize } else { 2 };
    let hi = upper.unwrap_or(f64::INFINITY);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..states.pow(n as u32) {
        let mut rest = code;
        let mut a = vec![0.0; n];
        let mut free = Vec::new();
        for (j, slot) in a.iter_mut().enumerate() {
            match rest % states {
                0 => *slot = 0.0,
                1 => free.push(j),
                _ => *slot = hi,
            }
            rest /= states;
        }
        let fixed_sum: f64 = (0..n).filter(|j| !free.contains(j)).map(|j| y[j] * a[j]).sum();
        if free.is_empty() {
            if fixed_sum.abs() > 1e-12 {
                continue;
            }
        } else {
            // a_j = alpha_j - nu y_j on the free set, nu fixed by y'a = 0
            let nu = (free.iter().map(|&j| y[j] * alpha[j]).sum::<f64>() + fixed_sum) / free.len() as f64;
            for &j in &free {
                a[j] = alpha[j] - nu * y[j];
            }
        }
        if a.iter().any(|&v| v < -1e-12 || v > hi + 1e-12) {
            continue;
        }
        let dist: f64 = a.iter().zip(alpha).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, a));
        }
    }
    best.expect("zero is feasible").1
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let count = 500;
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let n = rng.random_range(1..=6);
        let alpha: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let upper = rng.random_bool(0.5).then(|| rng.random_range(0.05..2.0));
        let got = match upper {
            None => project_simplex_like(&alpha, &y),
            Some(u) => project_box_hyperplane(&alpha, &y, u),
        }
        .map_err(|e| e.to_string())?;
        let expected = enumerate_projection(&alpha, &y, upper);
        for (g, e) in got.iter().zip(&expected) {
            worst = worst.max((g - e).abs());
        }
    }
    ensure!(worst <= 1e-8, "max difference {worst:e}");
    let time = within(Duration::from_secs(10), start.elapsed())?;
    Ok(format!("{count} instances, max difference {worst:.1e}, {time}"))
}

/// Multiplier minimizing the stationarity residual on the free coordinates
/// of `x = [alpha; d]`, by grid search with step 1e-4.
fn grid_multiplier(problem: &MklProblem, x: &DVector<f64>, index: usize) -> f64 {
    let nt = problem.train_size();
    let alpha = x.rows(0, nt).clone_owned();
    let free: Vec<usize> = (0..nt).filter(|&j| alpha[j] > 1e-8).collect();
    let ga = problem.label_gram(index) * &alpha;
    let k = free.len() + 1;
    let mut g_f = DVector::zeros(k);
    let mut g_h = DVector::zeros(k);
    let mut normal = DVector::zeros(k);
    for (r, &j) in free.iter().enumerate() {
        g_f[r] = alpha[j] / problem.c - 1.0;
        g_h[r] = ga[j];
        normal[r] = problem.train_labels[j];
    }
    g_f[k - 1] = problem.r;
    g_h[k - 1] = -1.0;
    let residual = |lambda: f64| {
        let r = &g_f + &g_h * lambda;
        let nu = -r.dot(&normal) / normal.norm_squared();
        (r + &normal * nu).norm()
    };
    let steps = ((2.0 * problem.r + 1.0) / 1e-4) as usize;
    (0..=steps)
        .map(|s| s as f64 * 1e-4)
        .min_by(|a, b| residual(*a).total_cmp(&residual(*b)))
        .unwrap()
}

fn smba_cmd(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_smba"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "smba {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn criterion_8() -> Outcome {
    let (x, y) = two_blobs(200, 3.0, 0.5, 0);
    let mut data = Dataset::with_random_split(x.clone(), y.clone(), 0.8, 0).unwrap();
    data.standardize().unwrap();
    let kernels = gaussian_grid(10);
    let assembled = assemble_mkl_qcqp(&data, &kernels, 0.1).unwrap();
    let config = default_training_config(&assembled.to_problem().unwrap(), 100_000, 0);
    let training = train_mkl(&data, &kernels, 0.1, &config).map_err(|e| e.to_string())?;
    let tsa = predict_tsa(&training.classifier, &data).map_err(|e| e.to_string())?;
    ensure!(tsa == 1.0, "TSA = {tsa}");
    let nonzero = training.classifier.lambda.iter().filter(|e| e.value != 0.0).count();
    ensure!(nonzero == 1, "{nonzero} nonzero multipliers");
    let lambda = training.dual.lambda;
    let oracle = grid_multiplier(&training.problem, &training.trace.x_final, training.dual.active_index);
    ensure!(
        (lambda - oracle).abs() < 5e-3,
        "lambda = {lambda:.4}, grid oracle {oracle:.4}"
    );

    // the same points through the CLI as a CSV file, with the baseline
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_csv_dataset(&dir.path().join("blobs.csv"), &x, &y).map_err(|e| e.to_string())?;
    smba_cmd(
        dir.path(),
        &["svm", "--data", "blobs.csv", "--single-kernel", "--out", "svm"],
    )?;
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("svm/report.json")).unwrap()).unwrap();
    let csv_tsa = report["tsa"].as_f64().ok_or("report has no TSA")?;
    let tsa2 = report["single_kernel"]["tsa2"].as_f64().ok_or("report has no TSA2")?;
    Ok(format!(
        "TSA {tsa}, lambda[{}] = {lambda:.4} (grid {oracle:.4}), {} iterations; CSV run TSA {csv_tsa}, TSA2 {tsa2}",
        training.dual.active_index, training.trace.iterations
    ))
}

// ---- determinism -----------------------------------------------------------

fn run_pipeline(dir: &Path) -> Result<(), String> {
    smba_cmd(
        dir,
        &[
            "generate",
            "--n",
            "20",
            "--m",
            "30",
            "--regime",
            "convex",
            "--b-scheme",
            "feasible-x0",
            "--seed",
            "5",
            "--linear-range",
            "-1,1",
            "--out",
            "inst",
        ],
    )?;
    fs::write(
        dir.join("run.json"),
        r#"{"instance": "inst/instance.json", "output": "out", "repetitions": 3,
            "reference": {"value": 0.0, "provenance": "external"},
            "solver": {"max_iters": 5000, "stopping": null,
                       "average_metrics": {"type": "log_spaced", "per_decade": 20}}}"#,
    )
    .map_err(|e| e.to_string())?;
    smba_cmd(dir, &["solve", "--config", "run.json"])?;
    smba_cmd(
        dir,
        &[
            "rates",
            "out/average_000.csv",
            "out/average_001.csv",
            "out/average_002.csv",
            "--reference-value",
            "0",
            "--json",
            "rates.json",
        ],
    )?;
    smba_cmd(
        dir,
        &["svm", "--blobs", "80", "--seed", "2", "--single-kernel", "--out", "svm"],
    )?;
    smba_cmd(dir, &["schema", "--out", "schema.json"])?;
    Ok(())
}

fn output_files(dir: &Path, base: &Path, out: &mut Vec<std::path::PathBuf>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            output_files(&path, base, out);
        } else if path.file_name().is_some_and(|n| n != "timing.json") {
            out.push(path.strip_prefix(base).unwrap().to_path_buf());
        }
    }
}

fn criterion_9() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_pipeline(a.path())?;
    run_pipeline(b.path())?;
    let mut files = Vec::new();
    output_files(a.path(), a.path(), &mut files);
    files.sort();
    let mut other = Vec::new();
    output_files(b.path(), b.path(), &mut other);
    other.sort();
    ensure!(files == other, "different file sets: {files:?} vs {other:?}");
    for f in &files {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        ensure!(x == y, "{} differs between runs", f.display());
    }
    Ok(format!("{} CSV/JSON files byte-identical across two runs", files.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("ball step bounds", criterion_1),
        ("gradient/projection step equivalence", criterion_2),
        ("analytic 1-D problem", criterion_3),
        ("convex rate orders", criterion_4),
        ("strongly convex rate order", criterion_5),
        ("stopping protocol", criterion_6),
        ("projection oracle", criterion_7),
        ("kernel SVM end to end", criterion_8),
        ("determinism", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let label = format!("{} {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(format!(
                "panicked: {}",
                p.downcast_ref::<String>().cloned().unwrap_or_default()
            ))
        });
        match outcome {
            Ok(detail) => println!("criterion {label}: PASS ({detail})"),
            Err(detail) => {
                failed += 1;
                println!("criterion {label}: FAIL ({detail})");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
