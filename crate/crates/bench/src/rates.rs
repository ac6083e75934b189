//! Slope fits of averaged-iterate metrics and the `smba rates` command.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use smba::problem::{Provenance, ReferenceOptimum};
use smba::solver::{loglog_slope, RateMetric};

use crate::config::{RateBand, RateBands};
use crate::solve::SolveSummary;
use crate::write_json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    OptGap,
    FeasSq,
    DistSq,
}

impl From<MetricArg> for RateMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::OptGap => RateMetric::OptGap,
            MetricArg::FeasSq => RateMetric::FeasSq,
            MetricArg::DistSq => RateMetric::DistSq,
        }
    }
}

pub fn metric_name(metric: RateMetric) -> &'static str {
    match metric {
        RateMetric::OptGap => "opt_gap",
        RateMetric::FeasSq => "feas_sq",
        RateMetric::DistSq => "dist_sq",
    }
}

pub fn band_for(bands: &RateBands, metric: RateMetric) -> RateBand {
    match metric {
        RateMetric::OptGap => bands.opt_gap,
        RateMetric::FeasSq => bands.feas_sq,
        RateMetric::DistSq => bands.dist_sq,
    }
}

/// One fitted slope checked against its band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCheck {
    pub metric: RateMetric,
    pub slope: f64,
    pub band: RateBand,
    pub pass: bool,
}

impl RateCheck {
    pub fn new(metric: RateMetric, slope: f64, band: RateBand) -> Self {
        Self {
            metric,
            slope,
            band,
            pass: band.contains(slope),
        }
    }

    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

/// Median of a nonempty slice; the mean of the middle pair for even length.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Columns of a trace or averaged-metric CSV, keyed by header.
pub struct MetricTable {
    pub k: Vec<f64>,
    pub f: Option<Vec<f64>>,
    pub feas_sq: Option<Vec<f64>>,
    pub dist_sq: Option<Vec<f64>>,
}

impl MetricTable {
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
        let headers = reader.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let Some(k_col) = col("k") else {
            bail!("{} has no 'k' column", path.display());
        };
        let cols = [col("f"), col("feas_sq"), col("dist_sq")];
        let mut k = Vec::new();
        let mut data: [Vec<f64>; 3] = Default::default();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let parse = |j: usize| -> anyhow::Result<f64> {
                let field = record.get(j).unwrap_or("");
                if field.is_empty() {
                    return Ok(f64::NAN);
                }
                field
                    .parse()
                    .with_context(|| format!("{} row {}: cannot parse '{field}'", path.display(), row + 1))
            };
            k.push(parse(k_col)?);
            for (c, out) in cols.iter().zip(data.iter_mut()) {
                if let Some(j) = c {
                    out.push(parse(*j)?);
                }
            }
        }
        if k.is_empty() {
            bail!("{} has no data rows", path.display());
        }
        let [f, feas_sq, dist_sq] = data;
        let keep = |c: Option<usize>, v: Vec<f64>| c.map(|_| v);
        Ok(Self {
            k,
            f: keep(cols[0], f),
            feas_sq: keep(cols[1], feas_sq),
            dist_sq: keep(cols[2], dist_sq),
        })
    }

    /// Whether `metric` can be computed from this table.
    pub fn has(&self, metric: RateMetric) -> bool {
        let column = match metric {
            RateMetric::OptGap => &self.f,
            RateMetric::FeasSq => &self.feas_sq,
            RateMetric::DistSq => &self.dist_sq,
        };
        column.as_ref().is_some_and(|c| c.iter().any(|v| v.is_finite()))
    }

    /// `(k, metric)` pairs with finite values.
    pub fn series(&self, metric: RateMetric, f_star: Option<f64>) -> anyhow::Result<Vec<(f64, f64)>> {
        let values: Vec<f64> = match metric {
            RateMetric::OptGap => {
                let fs = f_star.context("the optimality gap needs a reference value")?;
                self.f
                    .as_ref()
                    .context("no 'f' column")?
                    .iter()
                    .map(|f| (f - fs).abs())
                    .collect()
            }
            RateMetric::FeasSq => self.feas_sq.clone().context("no 'feas_sq' column")?,
            RateMetric::DistSq => self.dist_sq.clone().context("no 'dist_sq' column")?,
        };
        Ok(self
            .k
            .iter()
            .zip(values)
            .filter(|(_, v)| v.is_finite())
            .map(|(&k, v)| (k, v))
            .collect())
    }
}

/// Reads a reference optimum from a reference file or from the summary of a
/// baseline `solve` run (first repetition's final iterate).
pub fn load_reference(path: &Path) -> anyhow::Result<ReferenceOptimum> {
    let text = fs::read_to_string(path).with_context(|| format!("reading reference {}", path.display()))?;
    if let Ok(r) = serde_json::from_str::<ReferenceOptimum>(&text) {
        return Ok(r);
    }
    let summary: SolveSummary = serde_json::from_str(&text)
        .with_context(|| format!("{} is neither a reference file nor a solve summary", path.display()))?;
    let run = summary.runs.first().context("baseline summary has no runs")?;
    Ok(ReferenceOptimum {
        value: run.final_f,
        point: Some(run.x_final.clone()),
        provenance: Provenance::LongRunBaseline,
    })
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    /// Averaged-metric CSVs written by `smba solve` (`average_*.csv`).
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Metrics to fit; defaults to every metric the files and reference allow.
    #[arg(long, value_enum)]
    pub metric: Vec<MetricArg>,
    /// Optimal value for the optimality gap.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "reference")]
    pub reference_value: Option<f64>,
    /// Reference file or baseline `summary.json` supplying the optimal value.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Trailing fraction of the run used for the fit.
    #[arg(long, default_value_t = 0.8)]
    pub window: f64,
    /// Slope band `LO:HI` overriding the default for every selected metric.
    #[arg(long, allow_hyphen_values = true)]
    pub band: Option<RateBand>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatesReport {
    pub window: f64,
    pub files: Vec<FileRates>,
    /// Median slope over files, per metric, when more than one file is given.
    pub median: Vec<RateCheck>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileRates {
    pub file: PathBuf,
    pub checks: Vec<RateCheck>,
}

pub fn cmd_rates(args: &RatesArgs) -> anyhow::Result<RatesReport> {
    let f_star = match (&args.reference, args.reference_value) {
        (Some(p), _) => Some(load_reference(p)?.value),
        (None, v) => v,
    };
    let tables = args
        .files
        .iter()
        .map(|p| MetricTable::read(p))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let metrics: Vec<RateMetric> = if args.metric.is_empty() {
        [RateMetric::OptGap, RateMetric::FeasSq, RateMetric::DistSq]
            .into_iter()
            .filter(|&m| tables.iter().all(|t| t.has(m)) && (m != RateMetric::OptGap || f_star.is_some()))
            .collect()
    } else {
        args.metric.iter().map(|&m| m.into()).collect()
    };
    if metrics.is_empty() {
        bail!("no metric can be fitted from these files");
    }
    let defaults = RateBands::default();
    let band = |m| args.band.unwrap_or_else(|| band_for(&defaults, m));

    let mut files = Vec::new();
    for (path, table) in args.files.iter().zip(&tables) {
        let mut checks = Vec::new();
        for &m in &metrics {
            let series = table.series(m, f_star).with_context(|| format!("{}", path.display()))?;
            let slope = loglog_slope(&series, args.window).with_context(|| format!("{}", path.display()))?;
            let check = RateCheck::new(m, slope, band(m));
            println!(
                "{}  {:<8} slope = {:+.4}  band = {}  {}",
                path.display(),
                metric_name(m),
                slope,
                check.band,
                check.verdict()
            );
            checks.push(check);
        }
        files.push(FileRates {
            file: path.clone(),
            checks,
        });
    }
    let mut medians = Vec::new();
    if files.len() > 1 {
        for (i, &m) in metrics.iter().enumerate() {
            let slopes: Vec<f64> = files.iter().map(|f| f.checks[i].slope).collect();
            let check = RateCheck::new(m, median(&slopes), band(m));
            println!(
                "median over {} files  {:<8} slope = {:+.4}  band = {}  {}",
                files.len(),
                metric_name(m),
                check.slope,
                check.band,
                check.verdict()
            );
            medians.push(check);
        }
    }
    let report = RatesReport {
        window: args.window,
        files,
        median: medians,
    };
    if let Some(path) = &args.json {
        write_json(path, &report)?;
    }
    Ok(report)
}
