use serde::{Deserialize, Serialize};

use super::trace::RunTrace;
use crate::error::{Error, Result};

/// Values below this are clamped before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-16;
/// Minimum number of points a rate fit accepts.
pub const MIN_FIT_POINTS: usize = 10;

/// Quantity measured at the averaged iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub enum RateMetric {
    /// `|f(x_avg) - f*|`.
    OptGap,
    /// `||max(0, h(x_avg))||^2`.
    FeasSq,
    /// `||x_avg - x*||^2`.
    DistSq,
}

/// `(k, metric)` pairs for every record carrying averaged-iterate metrics.
pub fn rate_series(trace: &RunTrace, metric: RateMetric, f_star: Option<f64>) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for rec in &trace.records {
        let Some(avg) = &rec.average else { continue };
        let value = match metric {
            RateMetric::OptGap => {
                let fs = f_star.ok_or_else(|| Error::MissingReference("optimal value".into()))?;
                (avg.f - fs).abs()
            }
            RateMetric::FeasSq => avg.feas_sq,
            RateMetric::DistSq => avg
                .dist_sq
                .ok_or_else(|| Error::MissingReference("optimal point".into()))?,
        };
        out.push((rec.k as f64, value));
    }
    Ok(out)
}

/// Log-log slope of an averaged-iterate metric over the trailing `window`
/// fraction of the run.
pub fn fit_rate_slope(trace: &RunTrace, metric: RateMetric, f_star: Option<f64>, window: f64) -> Result<f64> {
    loglog_slope(&rate_series(trace, metric, f_star)?, window)
}

/// Least-squares slope of `ln(max(y, 1e-16))` against `ln(k)` over points
/// with `k >= (1 - window) * k_max`.
pub fn loglog_slope(points: &[(f64, f64)], window: f64) -> Result<f64> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "window must lie in (0, 1], got {window}"
        )));
    }
    let k_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let cutoff = (1.0 - window) * k_max;
    let selected: Vec<(f64, f64)> = points
        .iter()
        .filter(|(k, _)| *k > 0.0 && *k >= cutoff)
        .map(|&(k, y)| (k.ln(), y.max(LOG_FLOOR).ln()))
        .collect();
    if selected.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            found: selected.len(),
        });
    }
    let n = selected.len() as f64;
    let mx = selected.iter().map(|p| p.0).sum::<f64>() / n;
    let my = selected.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = selected.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = selected.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "rate fit needs distinct iteration counts".into(),
        ));
    }
    Ok(sxy / sxx)
}
