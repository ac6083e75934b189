//! Ball approximations of smooth constraints and the SMBA feasibility step.
//!
//! For a constraint `h` with `L`-Lipschitz gradient, the quadratic upper model
//! at `v`,
//!
//! ```text
//! q(y; v) = h(v) + <grad h(v), y - v> + (L/2) ||y - v||^2,
//! ```
//!
//! satisfies `q(y; v) <= 0  <=>  ||y - c||^2 <= R` with center
//! `c = v - grad h(v) / L` and radius-squared
//! `R = ||grad h(v)||^2 / L^2 - 2 h(v) / L`. The ball is empty when `R <= 0`.
//!
//! The feasibility step moves `v` to
//! `z = v - beta * (h(v))_+ / p * grad h(v)` (with `0/0 = 0`), where the
//! adaptive normalizer
//!
//! ```text
//! p = (h(v))_+ * L / (1 - sqrt((R)_+) / ||v - c||)
//! ```
//!
//! makes the step a relaxed projection onto the ball when it is nonempty and
//! a gradient step on the upper model when it is empty.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which branch of the feasibility step applies at the current point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilityCase {
    /// `h(v) <= 0`: no move.
    AlreadyFeasible,
    /// `h(v) > 0` and `R > 0`: relaxed projection onto the ball.
    NonemptyBall,
    /// `h(v) > 0` and `R <= 0`: gradient step on the upper model.
    EmptyBall,
}

impl FeasibilityCase {
    pub fn classify(h_value: f64, radius_sq: f64) -> Self {
        if h_value <= 0.0 {
            FeasibilityCase::AlreadyFeasible
        } else if radius_sq > 0.0 {
            FeasibilityCase::NonemptyBall
        } else {
            FeasibilityCase::EmptyBall
        }
    }

    /// Short tag used in trace files.
    pub fn tag(self) -> &'static str {
        match self {
            FeasibilityCase::AlreadyFeasible => "feasible",
            FeasibilityCase::NonemptyBall => "ball",
            FeasibilityCase::EmptyBall => "empty",
        }
    }
}

/// Center and radius of the quadratic upper model of one constraint at `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallApprox {
    pub center: DVector<f64>,
    /// `||grad h||^2 / L^2 - 2 h / L`; may be zero or negative.
    pub radius_sq: f64,
    pub h_value: f64,
    pub grad_norm_sq: f64,
    pub lipschitz: f64,
    /// `||v - c||^2 = ||grad h||^2 / L^2`, stored so that
    /// `radius_sq <= dist_sq` holds exactly whenever `h > 0`.
    dist_sq: f64,
}

impl BallApprox {
    pub fn case(&self) -> FeasibilityCase {
        FeasibilityCase::classify(self.h_value, self.radius_sq)
    }

    /// `||v - c||` for the point the ball was built at.
    pub fn center_distance(&self) -> f64 {
        self.dist_sq.sqrt()
    }

    pub fn center_distance_sq(&self) -> f64 {
        self.dist_sq
    }

    /// `sqrt((R)_+) / ||v - c||`, with `0/0 = 0`. Lies in `[0, 1]` when `h > 0`.
    fn radius_ratio(&self) -> f64 {
        if self.radius_sq <= 0.0 || self.dist_sq == 0.0 {
            0.0
        } else {
            self.radius_sq.sqrt() / self.dist_sq.sqrt()
        }
    }
}

/// Builds the ball approximation of a constraint at `v` from `h(v)`,
/// `grad h(v)` and the gradient Lipschitz constant.
pub fn build_ball(v: &DVector<f64>, h_value: f64, gradient: &DVector<f64>, lipschitz: f64) -> Result<BallApprox> {
    if !(lipschitz > 0.0) || !lipschitz.is_finite() {
        return Err(Error::NonPositiveLipschitz(lipschitz));
    }
    if v.len() != gradient.len() {
        return Err(Error::dims("constraint gradient", v.len(), gradient.len()));
    }
    if !h_value.is_finite() || v.iter().chain(gradient.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("ball construction input".into()));
    }
    let grad_norm_sq = gradient.norm_squared();
    let dist_sq = grad_norm_sq / (lipschitz * lipschitz);
    let radius_sq = dist_sq - 2.0 * h_value / lipschitz;
    let center = v - gradient / lipschitz;
    Ok(BallApprox {
        center,
        radius_sq,
        h_value,
        grad_norm_sq,
        lipschitz,
        dist_sq,
    })
}

/// The adaptive normalizer `p` of the feasibility step.
///
/// Evaluated through the identity
/// `p = ||grad h||^2 / 2 * (1 + sqrt(R) / ||v - c||)` in the nonempty-ball
/// case, which avoids the cancellation in `1 - sqrt(R)/||v - c||` when `h` is
/// small. Returns `0` when `h <= 0` and `h L` when the ball is empty.
///
/// `v` must be the point the ball was built at; `||v - c||` is taken from the
/// ball, where it equals `||grad h|| / L` exactly.
pub fn adaptive_p(ball: &BallApprox, v: &DVector<f64>) -> Result<f64> {
    if v.len() != ball.center.len() {
        return Err(Error::dims("adaptive_p point", ball.center.len(), v.len()));
    }
    let h = ball.h_value;
    if h <= 0.0 {
        return Ok(0.0);
    }
    if ball.grad_norm_sq == 0.0 {
        return Err(Error::DegenerateConstraint { index: None, value: h });
    }
    let floor = h * ball.lipschitz;
    Ok(match ball.case() {
        FeasibilityCase::NonemptyBall => {
            let p = 0.5 * ball.grad_norm_sq * (1.0 + ball.radius_ratio());
            // p >= hL holds exactly; keep it under rounding
            p.max(floor)
        }
        _ => floor,
    })
}

/// Euclidean projection onto the ball `{y : ||y - c||^2 <= R}`.
pub fn project_onto_ball(v: &DVector<f64>, ball: &BallApprox) -> Result<DVector<f64>> {
    if !(ball.radius_sq > 0.0) {
        return Err(Error::EmptyBall(ball.radius_sq));
    }
    if v.len() != ball.center.len() {
        return Err(Error::dims("ball projection point", ball.center.len(), v.len()));
    }
    let offset = v - &ball.center;
    let dist = offset.norm();
    let radius = ball.radius_sq.sqrt();
    if dist <= radius {
        return Ok(v.clone());
    }
    Ok(&ball.center + offset * (radius / dist))
}

/// `z = v - beta * (h)_+ / p * grad h`, returned together with the branch
/// that produced it.
pub fn feasibility_step(
    v: &DVector<f64>,
    ball: &BallApprox,
    gradient: &DVector<f64>,
    beta: f64,
) -> Result<(DVector<f64>, FeasibilityCase)> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    if gradient.len() != v.len() {
        return Err(Error::dims("feasibility step gradient", v.len(), gradient.len()));
    }
    let case = ball.case();
    let p = adaptive_p(ball, v)?;
    if case == FeasibilityCase::AlreadyFeasible {
        return Ok((v.clone(), case));
    }
    let coeff = beta * ball.h_value / p;
    Ok((v - gradient * coeff, case))
}

/// Relaxed-projection form of the nonempty-ball step:
/// `(1 - beta) v + beta * proj_ball(v)`.
pub fn feasibility_step_via_projection(v: &DVector<f64>, ball: &BallApprox, beta: f64) -> Result<DVector<f64>> {
    let case = ball.case();
    if case != FeasibilityCase::NonemptyBall {
        return Err(Error::NotNonemptyBall(case));
    }
    let projected = project_onto_ball(v, ball)?;
    Ok(v * (1.0 - beta) + projected * beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn ball_for_unit_interval_constraint() {
        // h(x) = (x^2 - 1)/2 at v = 2
        let ball = build_ball(&scalar(2.0), 1.5, &scalar(2.0), 1.0).unwrap();
        assert_eq!(ball.center[0], 0.0);
        assert_eq!(ball.radius_sq, 1.0);
        assert_eq!(ball.case(), FeasibilityCase::NonemptyBall);
        assert_eq!(adaptive_p(&ball, &scalar(2.0)).unwrap(), 3.0);
    }

    #[test]
    fn zero_gradient_at_boundary() {
        let v = DVector::from_vec(vec![0.3, -1.2]);
        let ball = build_ball(&v, 0.0, &DVector::zeros(2), 2.0).unwrap();
        assert_eq!(ball.center, v);
        assert_eq!(ball.radius_sq, 0.0);
        assert_eq!(ball.case(), FeasibilityCase::AlreadyFeasible);
    }

    #[test]
    fn empty_ball_branch() {
        // h(x) = x^2/2 + 1 at v = 1
        let ball = build_ball(&scalar(1.0), 1.5, &scalar(1.0), 1.0).unwrap();
        assert_eq!(ball.center[0], 0.0);
        assert_eq!(ball.radius_sq, -2.0);
        assert_eq!(ball.case(), FeasibilityCase::EmptyBall);
        assert_eq!(adaptive_p(&ball, &scalar(1.0)).unwrap(), 1.5);
        let (z, case) = feasibility_step(&scalar(1.0), &ball, &scalar(1.0), 0.5).unwrap();
        assert_eq!(case, FeasibilityCase::EmptyBall);
        assert_eq!(z[0], 0.5);
    }

    #[test]
    fn feasible_point_has_zero_p_and_stays() {
        let ball = build_ball(&scalar(0.5), -0.5, &scalar(0.5), 1.0).unwrap();
        assert_eq!(adaptive_p(&ball, &scalar(0.5)).unwrap(), 0.0);
        let (z, case) = feasibility_step(&scalar(0.5), &ball, &scalar(0.5), 1.0).unwrap();
        assert_eq!(z[0], 0.5);
        assert_eq!(case, FeasibilityCase::AlreadyFeasible);
    }

    #[test]
    fn full_step_projects_onto_interval() {
        let v = scalar(2.0);
        let ball = build_ball(&v, 1.5, &scalar(2.0), 1.0).unwrap();
        let (z, _) = feasibility_step(&v, &ball, &scalar(2.0), 1.0).unwrap();
        assert_eq!(z[0], 1.0);
        let z2 = feasibility_step_via_projection(&v, &ball, 1.0).unwrap();
        assert_eq!(z2[0], 1.0);
        assert_eq!(feasibility_step_via_projection(&v, &ball, 0.0).unwrap()[0], 2.0);
    }

    #[test]
    fn ball_projection_examples() {
        let ball = build_ball(&scalar(2.0), 1.5, &scalar(2.0), 1.0).unwrap();
        assert_eq!(project_onto_ball(&scalar(2.0), &ball).unwrap()[0], 1.0);
        assert_eq!(project_onto_ball(&scalar(0.25), &ball).unwrap()[0], 0.25);

        // h = 0, grad = v, L = 1 gives center (0,0) and radius_sq 25; v is on the boundary
        let v = DVector::from_vec(vec![3.0, 4.0]);
        let ball = build_ball(&v, 0.0, &v, 1.0).unwrap();
        assert_eq!(ball.radius_sq, 25.0);
        assert_eq!(project_onto_ball(&v, &ball).unwrap(), v);
    }

    #[test]
    fn projection_requires_nonempty_ball() {
        let ball = build_ball(&scalar(1.0), 1.5, &scalar(1.0), 1.0).unwrap();
        assert!(matches!(
            project_onto_ball(&scalar(1.0), &ball),
            Err(Error::EmptyBall(_))
        ));
        assert!(matches!(
            feasibility_step_via_projection(&scalar(1.0), &ball, 0.5),
            Err(Error::NotNonemptyBall(FeasibilityCase::EmptyBall))
        ));
    }

    #[test]
    fn rejects_bad_lipschitz() {
        assert!(matches!(
            build_ball(&scalar(1.0), 1.0, &scalar(1.0), 0.0),
            Err(Error::NonPositiveLipschitz(_))
        ));
        assert!(build_ball(&scalar(1.0), 1.0, &scalar(1.0), -2.0).is_err());
    }

    #[test]
    fn violated_zero_gradient_is_reported() {
        let ball = build_ball(&scalar(0.0), 1.0, &scalar(0.0), 1.0).unwrap();
        let err = feasibility_step(&scalar(0.0), &ball, &scalar(0.0), 1.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateConstraint { index: None, .. }));
        assert!(matches!(
            err.with_constraint(4),
            Error::DegenerateConstraint { index: Some(4), .. }
        ));
    }

    #[test]
    fn tie_at_zero_radius_is_empty_ball() {
        // grad^2/L^2 = 2h/L exactly: R = 0
        let ball = build_ball(&scalar(1.0), 0.5, &scalar(1.0), 1.0).unwrap();
        assert_eq!(ball.radius_sq, 0.0);
        assert_eq!(ball.case(), FeasibilityCase::EmptyBall);
    }
}
