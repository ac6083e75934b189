use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::ball::FeasibilityCase;
use crate::error::Result;

/// Metrics at the averaged iterate after `k` iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageMetrics {
    pub f: f64,
    pub feas_sq: f64,
    /// Squared distance to the reference minimizer, when one is known.
    pub dist_sq: Option<f64>,
}

/// One iteration, producing `x_k` from `x_{k-1}`. `k` starts at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub k: usize,
    /// Stepsize `alpha_{k-1}` used for this iteration.
    pub alpha: f64,
    /// `f(x_k)`, NaN when metrics are not recorded.
    pub f: f64,
    /// `||max(0, h(x_k, .))||^2`, NaN when metrics are not recorded.
    pub feas_sq: f64,
    /// `||x_k - x_{k-1}||^2`.
    pub step_sq: f64,
    pub case: FeasibilityCase,
    /// Constraint used for the feasibility step, `None` when it was skipped.
    pub constraint: Option<usize>,
    pub average: Option<AverageMetrics>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopReason {
    #[serde(rename = "feas+opt")]
    FeasibleOptimal,
    #[serde(rename = "movement")]
    Movement,
    #[serde(rename = "max-iters")]
    MaxIterations,
}

impl StopReason {
    pub fn tag(self) -> &'static str {
        match self {
            StopReason::FeasibleOptimal => "feas+opt",
            StopReason::Movement => "movement",
            StopReason::MaxIterations => "max-iters",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseCounts {
    pub feasible: usize,
    pub ball: usize,
    pub empty: usize,
}

impl CaseCounts {
    pub fn add(&mut self, case: FeasibilityCase) {
        match case {
            FeasibilityCase::AlreadyFeasible => self.feasible += 1,
            FeasibilityCase::NonemptyBall => self.ball += 1,
            FeasibilityCase::EmptyBall => self.empty += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.feasible + self.ball + self.empty
    }
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    /// Per-iteration records; empty when the run streamed them elsewhere.
    pub records: Vec<IterRecord>,
    /// `x_0, ..., x_K` when iterate retention was requested, else empty.
    pub iterates: Vec<DVector<f64>>,
    pub x_final: DVector<f64>,
    pub x_average: Option<DVector<f64>>,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub case_counts: CaseCounts,
    pub wall_time_secs: f64,
    pub seed: u64,
}

/// Compact JSON description of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub case_counts: CaseCounts,
    pub seed: u64,
    pub x_final: Vec<f64>,
    pub x_average: Option<Vec<f64>>,
    pub final_f: Option<f64>,
    pub final_feas_sq: Option<f64>,
}

impl RunTrace {
    pub fn summary(&self) -> RunSummary {
        let last = self.records.last();
        RunSummary {
            iterations: self.iterations,
            stop_reason: self.stop_reason,
            case_counts: self.case_counts,
            seed: self.seed,
            x_final: self.x_final.as_slice().to_vec(),
            x_average: self.x_average.as_ref().map(|x| x.as_slice().to_vec()),
            final_f: last.map(|r| r.f).filter(|v| v.is_finite()),
            final_feas_sq: last.map(|r| r.feas_sq).filter(|v| v.is_finite()),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = CsvTraceWriter::new(out)?;
        for rec in &self.records {
            writer.write(rec)?;
        }
        writer.finish()?;
        Ok(())
    }
}

const FLUSH_EVERY: usize = 1000;

/// Streams records as CSV rows `k,f,feas_sq,step_sq,case`.
pub struct CsvTraceWriter<W: Write> {
    inner: csv::Writer<W>,
    pending: usize,
}

impl<W: Write> CsvTraceWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(["k", "f", "feas_sq", "step_sq", "case"])?;
        Ok(Self { inner, pending: 0 })
    }

    pub fn write(&mut self, rec: &IterRecord) -> Result<()> {
        self.inner.write_record([
            rec.k.to_string(),
            rec.f.to_string(),
            rec.feas_sq.to_string(),
            rec.step_sq.to_string(),
            rec.case.tag().to_string(),
        ])?;
        self.pending += 1;
        if self.pending >= FLUSH_EVERY {
            self.inner.flush()?;
            self.pending = 0;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Streams averaged-iterate metrics as CSV rows `k,f,feas_sq,dist_sq`,
/// skipping records without them.
pub struct CsvAverageWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> CsvAverageWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(["k", "f", "feas_sq", "dist_sq"])?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, rec: &IterRecord) -> Result<()> {
        if let Some(avg) = &rec.average {
            self.inner.write_record([
                rec.k.to_string(),
                avg.f.to_string(),
                avg.feas_sq.to_string(),
                avg.dist_sq.map(|d| d.to_string()).unwrap_or_default(),
            ])?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(k: usize) -> IterRecord {
        IterRecord {
            k,
            alpha: 0.5,
            f: 1.5,
            feas_sq: 0.0,
            step_sq: 0.25,
            case: FeasibilityCase::NonemptyBall,
            constraint: Some(0),
            average: None,
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        let mut w = CsvTraceWriter::new(&mut buf).unwrap();
        w.write(&record(1)).unwrap();
        w.finish().unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "k,f,feas_sq,step_sq,case\n1,1.5,0,0.25,ball\n");
    }

    #[test]
    fn stop_reason_tags() {
        assert_eq!(
            serde_json::to_string(&StopReason::FeasibleOptimal).unwrap(),
            "\"feas+opt\""
        );
        assert_eq!(StopReason::MaxIterations.tag(), "max-iters");
    }
}
