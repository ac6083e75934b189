//! The `solve` configuration file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use smba::problem::ReferenceOptimum;
use smba::qcqp_gen::GenSpec;
use smba::solver::{RateMetric, SolverConfig};

/// A `solve` run: which instance, which solver settings, where to write.
/// Relative paths are resolved against the directory holding the file.
#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    /// Path to an instance JSON written by `smba generate`, or an inline
    /// generator spec.
    pub instance: InstanceSource,
    /// Starting point. Defaults to the x0 of the instance sidecar (or of the
    /// inline generator), then to the zero vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Known optimum, inline or as a path to a reference file or to the
    /// `summary.json` of a long baseline run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSource>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Output directory.
    pub output: PathBuf,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub rates: RateSettings,
}

fn default_repetitions() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum InstanceSource {
    Path(PathBuf),
    Generate(GenSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum ReferenceSource {
    Inline(ReferenceOptimum),
    Path(PathBuf),
}

/// Closed slope interval; a missing end is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RateBand {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl RateBand {
    pub fn new(lower: Option<f64>, upper: Option<f64>) -> Self {
        Self { lower, upper }
    }

    pub fn contains(&self, slope: f64) -> bool {
        slope.is_finite() && self.lower.is_none_or(|lo| slope >= lo) && self.upper.is_none_or(|hi| slope <= hi)
    }
}

impl std::fmt::Display for RateBand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let show = |v: Option<f64>, inf: &str| v.map_or(inf.to_string(), |x| format!("{x}"));
        write!(f, "[{}, {}]", show(self.lower, "-inf"), show(self.upper, "inf"))
    }
}

impl std::str::FromStr for RateBand {
    type Err = anyhow::Error;

    /// `LO:HI`, either side may be empty.
    fn from_str(s: &str) -> anyhow::Result<Self> {
        let Some((lo, hi)) = s.split_once(':') else {
            bail!("band must look like LO:HI, got '{s}'");
        };
        let parse = |t: &str| -> anyhow::Result<Option<f64>> {
            let t = t.trim();
            if t.is_empty() {
                Ok(None)
            } else {
                Ok(Some(t.parse().with_context(|| format!("bad band bound '{t}'"))?))
            }
        };
        let band = RateBand::new(parse(lo)?, parse(hi)?);
        if let (Some(l), Some(h)) = (band.lower, band.upper) {
            if l > h {
                bail!("band lower bound {l} exceeds upper bound {h}");
            }
        }
        Ok(band)
    }
}

/// Expected log-log slopes of the averaged-iterate metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct RateBands {
    pub opt_gap: RateBand,
    pub feas_sq: RateBand,
    pub dist_sq: RateBand,
}

impl Default for RateBands {
    fn default() -> Self {
        Self {
            opt_gap: RateBand::new(Some(-0.75), Some(-0.30)),
            feas_sq: RateBand::new(None, Some(-0.30)),
            dist_sq: RateBand::new(Some(-1.6), Some(-0.7)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct RateSettings {
    /// Trailing fraction of the run used for the fit.
    pub window: f64,
    /// Metrics to fit. Empty picks by averaging mode: the distance for
    /// strongly convex weights, otherwise the gap and the feasibility.
    pub metrics: Vec<RateMetric>,
    pub bands: RateBands,
}

impl Default for RateSettings {
    fn default() -> Self {
        Self {
            window: 0.8,
            metrics: Vec::new(),
            bands: RateBands::default(),
        }
    }
}

impl RunConfigFile {
    /// Reads and validates a config; returns it with the directory relative
    /// paths resolve against.
    pub fn load(path: &Path) -> anyhow::Result<(Self, PathBuf)> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let config: Self = serde_json::from_str(&text)
            .with_context(|| format!("config {} does not match the schema", path.display()))?;
        if config.repetitions == 0 {
            bail!("repetitions must be at least 1");
        }
        if !(config.rates.window > 0.0 && config.rates.window <= 1.0) {
            bail!("rates.window must lie in (0, 1], got {}", config.rates.window);
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((config, base))
    }
}

/// `path` if absolute, else `base/path`.
pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// JSON Schema of [`RunConfigFile`].
pub fn schema_json() -> String {
    let schema = schemars::schema_for!(RunConfigFile);
    let mut text = serde_json::to_string_pretty(&schema).expect("schema serializes");
    text.push('\n');
    text
}
