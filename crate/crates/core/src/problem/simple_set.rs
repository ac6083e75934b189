//! Closed convex sets with cheap exact projections.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed convex set `Y` that admits an exact, inexpensive projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimpleSet {
    /// All of `R^n`.
    Whole,
    /// `{x : x >= 0}`.
    NonnegativeOrthant,
    /// `{x : lower <= x <= upper}` componentwise.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `{x : 0 <= x <= upper, sum_j labels_j x_j = 0}` with `labels_j` in
    /// `{-1, +1}`. `upper = None` drops the upper bound.
    SignedHyperplane {
        labels: Vec<f64>,
        #[serde(default)]
        upper: Option<f64>,
    },
    /// Cartesian product of consecutive coordinate blocks.
    Product { blocks: Vec<SetBlock> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetBlock {
    pub dim: usize,
    pub set: SimpleSet,
}

impl SimpleSet {
    /// The dimension this set is tied to, if any. `Whole` and
    /// `NonnegativeOrthant` fit every dimension.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            SimpleSet::Whole | SimpleSet::NonnegativeOrthant => None,
            SimpleSet::Box { lower, .. } => Some(lower.len()),
            SimpleSet::SignedHyperplane { labels, .. } => Some(labels.len()),
            SimpleSet::Product { blocks } => Some(blocks.iter().map(|b| b.dim).sum()),
        }
    }

    /// Checks that the set is well formed and usable in dimension `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(d) = self.fixed_dim() {
            if d != n {
                return Err(Error::dims("simple set", n, d));
            }
        }
        match self {
            SimpleSet::Whole | SimpleSet::NonnegativeOrthant => Ok(()),
            SimpleSet::Box { lower, upper } => {
                if lower.len() != upper.len() {
                    return Err(Error::dims("box upper bounds", lower.len(), upper.len()));
                }
                for (l, u) in lower.iter().zip(upper) {
                    if l.is_nan() || u.is_nan() || l > u {
                        return Err(Error::InvalidParameter(format!(
                            "box bounds must satisfy lower <= upper, got [{l}, {u}]"
                        )));
                    }
                }
                Ok(())
            }
            SimpleSet::SignedHyperplane { labels, upper } => {
                if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
                    return Err(Error::InvalidParameter("hyperplane labels must be -1 or +1".into()));
                }
                if let Some(u) = upper {
                    if !(*u >= 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "hyperplane upper bound must be nonnegative, got {u}"
                        )));
                    }
                }
                Ok(())
            }
            SimpleSet::Product { blocks } => {
                for block in blocks {
                    block.set.validate(block.dim)?;
                }
                Ok(())
            }
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = x.clone();
        self.project_in_place(out.as_mut_slice());
        out
    }

    pub fn project_in_place(&self, x: &mut [f64]) {
        match self {
            SimpleSet::Whole => {}
            SimpleSet::NonnegativeOrthant => {
                for xi in x.iter_mut() {
                    *xi = xi.max(0.0);
                }
            }
            SimpleSet::Box { lower, upper } => {
                for ((xi, l), u) in x.iter_mut().zip(lower).zip(upper) {
                    *xi = xi.clamp(*l, *u);
                }
            }
            SimpleSet::SignedHyperplane { labels, upper } => {
                let projected = project_signed_hyperplane(x, labels, *upper);
                x.copy_from_slice(&projected);
            }
            SimpleSet::Product { blocks } => {
                let mut offset = 0;
                for block in blocks {
                    block.set.project_in_place(&mut x[offset..offset + block.dim]);
                    offset += block.dim;
                }
            }
        }
    }

    /// Membership test with absolute tolerance `tol` on every defining
    /// inequality and equality.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            SimpleSet::Whole => true,
            SimpleSet::NonnegativeOrthant => x.iter().all(|&v| v >= -tol),
            SimpleSet::Box { lower, upper } => x
                .iter()
                .zip(lower)
                .zip(upper)
                .all(|((v, l), u)| *v >= l - tol && *v <= u + tol),
            SimpleSet::SignedHyperplane { labels, upper } => {
                let bounds_ok = x.iter().all(|&v| v >= -tol && upper.is_none_or(|u| v <= u + tol));
                let balance: f64 = x.iter().zip(labels).map(|(v, y)| v * y).sum();
                bounds_ok && balance.abs() <= tol
            }
            SimpleSet::Product { blocks } => {
                let mut offset = 0;
                blocks.iter().all(|block| {
                    let ok = block.set.contains(&x[offset..offset + block.dim], tol);
                    offset += block.dim;
                    ok
                })
            }
        }
    }
}

/// Projects `alpha` onto `{a : 0 <= a <= upper, sum_j labels_j a_j = 0}`.
///
/// The minimizer has the form `a_j(theta) = clip(alpha_j - labels_j * theta, 0, upper)`
/// where `theta` is the multiplier of the hyperplane. The balance function
/// `g(theta) = sum_j labels_j a_j(theta)` is continuous, piecewise linear and
/// nonincreasing, with kinks where a coordinate enters or leaves a bound. The
/// kinks are sorted, the sign change of `g` is located by bisection over them
/// (`O(n log n)` overall), and the root is solved exactly on the linear piece.
///
/// When every label has the same sign only the origin is feasible.
pub fn project_signed_hyperplane(alpha: &[f64], labels: &[f64], upper: Option<f64>) -> Vec<f64> {
    let n = alpha.len();
    debug_assert_eq!(n, labels.len());
    let has_pos = labels.iter().any(|&y| y > 0.0);
    let has_neg = labels.iter().any(|&y| y < 0.0);
    if !(has_pos && has_neg) {
        return vec![0.0; n];
    }
    let clip = |v: f64| match upper {
        Some(u) => v.clamp(0.0, u),
        None => v.max(0.0),
    };
    let balance = |theta: f64| -> f64 { alpha.iter().zip(labels).map(|(&a, &y)| y * clip(a - y * theta)).sum() };

    // alpha_j - y_j * theta hits 0 at theta = y_j * alpha_j and hits u at
    // theta = y_j * (alpha_j - u), since y_j = 1 / y_j.
    let mut kinks: Vec<f64> = Vec::with_capacity(if upper.is_some() { 2 * n } else { n });
    for (&a, &y) in alpha.iter().zip(labels) {
        kinks.push(y * a);
        if let Some(u) = upper {
            kinks.push(y * (a - u));
        }
    }
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();

    // Locate the piece [lo, hi] with g(lo) >= 0 >= g(hi). Ends may be open.
    let (lo, hi) = if balance(kinks[0]) < 0.0 {
        (None, Some(kinks[0]))
    } else if balance(kinks[kinks.len() - 1]) > 0.0 {
        (Some(kinks[kinks.len() - 1]), None)
    } else {
        // invariant: g(kinks[a]) >= 0, g(kinks[b]) <= 0
        let (mut a, mut b) = (0usize, kinks.len() - 1);
        while b - a > 1 {
            let mid = a + (b - a) / 2;
            let g = balance(kinks[mid]);
            if g == 0.0 {
                a = mid;
                b = mid;
                break;
            } else if g > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        if balance(kinks[a]) == 0.0 {
            (Some(kinks[a]), Some(kinks[a]))
        } else if balance(kinks[b]) == 0.0 {
            (Some(kinks[b]), Some(kinks[b]))
        } else {
            (Some(kinks[a]), Some(kinks[b]))
        }
    };

    let theta = match (lo, hi) {
        (Some(l), Some(h)) if l == h => l,
        _ => {
            // Any interior point of the piece fixes the active pattern.
            let probe = match (lo, hi) {
                (Some(l), Some(h)) => 0.5 * (l + h),
                (None, Some(h)) => h - 1.0,
                (Some(l), None) => l + 1.0,
                (None, None) => unreachable!("kinks is nonempty"),
            };
            let mut fixed = 0.0;
            let mut free_sum = 0.0;
            let mut free_count = 0usize;
            for (&a, &y) in alpha.iter().zip(labels) {
                let t = a - y * probe;
                let at_upper = upper.is_some_and(|u| t >= u);
                if t <= 0.0 {
                    continue;
                } else if at_upper {
                    fixed += y * upper.unwrap_or(0.0);
                } else {
                    free_sum += y * a;
                    free_count += 1;
                }
            }
            if free_count == 0 {
                // g is constant (hence zero) on this piece.
                probe
            } else {
                let theta = (fixed + free_sum) / free_count as f64;
                match (lo, hi) {
                    (Some(l), Some(h)) => theta.clamp(l, h),
                    (None, Some(h)) => theta.min(h),
                    (Some(l), None) => theta.max(l),
                    (None, None) => theta,
                }
            }
        }
    };

    alpha.iter().zip(labels).map(|(&a, &y)| clip(a - y * theta)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthant_and_box_clip() {
        let x = DVector::from_vec(vec![-1.0, 0.5, 2.0]);
        let p = SimpleSet::NonnegativeOrthant.project(&x);
        assert_eq!(p.as_slice(), &[0.0, 0.5, 2.0]);
        let b = SimpleSet::Box {
            lower: vec![0.0; 3],
            upper: vec![1.0; 3],
        };
        assert_eq!(b.project(&x).as_slice(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn signed_hyperplane_examples() {
        let labels = [1.0, -1.0];
        assert_eq!(project_signed_hyperplane(&[1.0, 1.0], &labels, None), vec![1.0, 1.0]);
        assert_eq!(project_signed_hyperplane(&[2.0, 0.0], &labels, None), vec![1.0, 1.0]);
        assert_eq!(project_signed_hyperplane(&[-1.0, -1.0], &labels, None), vec![0.0, 0.0]);
    }

    #[test]
    fn single_class_collapses_to_origin() {
        let p = project_signed_hyperplane(&[3.0, 1.0, 2.0], &[1.0, 1.0, 1.0], None);
        assert_eq!(p, vec![0.0; 3]);
    }

    #[test]
    fn box_variant_respects_upper_bound() {
        let labels = [1.0, 1.0, -1.0];
        let p = project_signed_hyperplane(&[5.0, 5.0, 0.0], &labels, Some(1.0));
        // feasible: both positives capped, negative balances them
        let balance: f64 = p.iter().zip(&labels).map(|(a, y)| a * y).sum();
        assert!(balance.abs() < 1e-12);
        assert!(p.iter().all(|&a| (-1e-12..=1.0 + 1e-12).contains(&a)));
    }

    #[test]
    fn product_projects_blockwise() {
        let set = SimpleSet::Product {
            blocks: vec![
                SetBlock {
                    dim: 2,
                    set: SimpleSet::SignedHyperplane {
                        labels: vec![1.0, -1.0],
                        upper: None,
                    },
                },
                SetBlock {
                    dim: 1,
                    set: SimpleSet::Whole,
                },
            ],
        };
        set.validate(3).unwrap();
        let p = set.project(&DVector::from_vec(vec![2.0, 0.0, -7.0]));
        assert_eq!(p.as_slice(), &[1.0, 1.0, -7.0]);
        assert!(set.validate(4).is_err());
    }

    #[test]
    fn serde_tags_are_stable() {
        let set = SimpleSet::NonnegativeOrthant;
        let s = serde_json::to_string(&set).unwrap();
        assert_eq!(s, r#"{"type":"nonnegative_orthant"}"#);
        let bad = serde_json::from_str::<SimpleSet>(r#"{"type":"box","lower":[0],"upper":[1],"extra":1}"#);
        assert!(bad.is_err());
    }
}
