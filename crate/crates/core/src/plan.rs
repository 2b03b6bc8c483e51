//! Path and speed plan together.

use thiserror::Error;

use crate::clothoid::Pose2D;
use crate::path::{check_feasible, solve_g2, Feasibility, PathBoundaryCondition, PathError, ThreeClothoidPath};
use crate::vehicle::VehicleLimits;
use crate::velocity::{plan_velocity, SmoothedVelocityPlan, VelocityError, VelocityProfile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("path violates the curvature limit: max |κ| = {max_abs_curvature} > {kappa_max} at s = {argmax_s}")]
    InfeasibleCurvature { max_abs_curvature: f64, kappa_max: f64, argmax_s: f64 },
    #[error(transparent)]
    Velocity(#[from] VelocityError),
}

/// A geometric path with the speed plan that drives it.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionPlan {
    pub path: ThreeClothoidPath,
    pub velocity: SmoothedVelocityPlan,
}

impl MotionPlan {
    pub fn profile(&self) -> Result<VelocityProfile, VelocityError> {
        self.velocity.profile()
    }
}

/// Solves the path, checks curvature, then builds and smooths the speed plan.
///
/// ```
/// use cloplan::plan::plan_motion;
/// use cloplan::{PathBoundaryCondition, Pose2D, VehicleLimits};
///
/// let bc = PathBoundaryCondition::new(14.5, 21.5, std::f64::consts::FRAC_PI_2, 0.0, 0.0);
/// let plan = plan_motion(&bc, 5.0, 5.0, 5.0, Pose2D::origin(), &VehicleLimits::default()).unwrap();
/// assert!(plan.velocity.total_time().unwrap() > 0.0);
/// ```
pub fn plan_motion(
    bc: &PathBoundaryCondition,
    s0: f64,
    s2: f64,
    v0: f64,
    origin: Pose2D,
    limits: &VehicleLimits,
) -> Result<MotionPlan, PlanError> {
    limits.validate().map_err(|m| PlanError::Path(PathError::InvalidInput(m)))?;
    let local = solve_g2(bc, s0, s2)?;
    let Feasibility { feasible, max_abs_curvature, argmax_s } = check_feasible(&local, limits);
    if !feasible {
        return Err(PlanError::InfeasibleCurvature { max_abs_curvature, kappa_max: limits.kappa_max(), argmax_s });
    }
    let path = if origin == Pose2D::origin() { local } else { local.with_origin(origin)? };
    let velocity = plan_velocity(&path, v0, limits)?;
    Ok(MotionPlan { path, velocity })
}
