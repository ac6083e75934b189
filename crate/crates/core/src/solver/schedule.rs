use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Objective stepsize sequence `alpha_k`, indexed from `k = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub enum StepsizeSchedule {
    /// `alpha0 / (sqrt(k + 2) ln(k + 2))`. Fold `1/L_f` into `alpha0` to get
    /// the Lipschitz-scaled variant.
    SqrtLog { alpha0: f64 },
    /// `alpha0 / sqrt(k + 1)`.
    InvSqrt { alpha0: f64 },
    /// `2 / (mu (k + 1))` for a `mu`-strongly convex objective.
    StronglyConvex { mu: f64 },
}

impl StepsizeSchedule {
    pub fn value(&self, k: usize) -> f64 {
        let k = k as f64;
        match *self {
            StepsizeSchedule::SqrtLog { alpha0 } => alpha0 / ((k + 2.0).sqrt() * (k + 2.0).ln()),
            StepsizeSchedule::InvSqrt { alpha0 } => alpha0 / (k + 1.0).sqrt(),
            StepsizeSchedule::StronglyConvex { mu } => 2.0 / (mu * (k + 1.0)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            StepsizeSchedule::SqrtLog { alpha0 } => ("alpha0", alpha0),
            StepsizeSchedule::InvSqrt { alpha0 } => ("alpha0", alpha0),
            StepsizeSchedule::StronglyConvex { mu } => ("mu", mu),
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "stepsize {name} must be positive and finite, got {v}"
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let s = StepsizeSchedule::SqrtLog { alpha0: 1.0 };
        assert_eq!(s.value(0), 1.0 / (2f64.sqrt() * 2f64.ln()));
        let s = StepsizeSchedule::InvSqrt { alpha0: 0.1 };
        assert_eq!(s.value(0), 0.1);
        assert_eq!(s.value(3), 0.05);
        let s = StepsizeSchedule::StronglyConvex { mu: 2.0 };
        assert_eq!(s.value(0), 1.0);
        assert_eq!(s.value(9), 0.1);
    }

    #[test]
    fn non_increasing() {
        for s in [
            StepsizeSchedule::SqrtLog { alpha0: 3.0 },
            StepsizeSchedule::InvSqrt { alpha0: 0.5 },
            StepsizeSchedule::StronglyConvex { mu: 0.01 },
        ] {
            for k in 0..100_000 {
                let (a, b) = (s.value(k), s.value(k + 1));
                assert!(b <= a && b > 0.0, "{s:?} at {k}: {a} -> {b}");
            }
        }
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(StepsizeSchedule::StronglyConvex { mu: 0.0 }.validate().is_err());
        assert!(StepsizeSchedule::SqrtLog { alpha0: -1.0 }.validate().is_err());
        assert!(StepsizeSchedule::InvSqrt { alpha0: f64::NAN }.validate().is_err());
    }
}
