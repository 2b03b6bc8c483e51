//! Three-clothoid motion planning for car-like vehicles.

pub mod chart;
pub mod clothoid;
pub mod codec;
pub mod collision;
pub mod error;
pub mod export;
pub mod fresnel;
pub mod geometry;
pub mod path;
pub mod plan;
pub mod swept;
pub mod vehicle;
pub mod velocity;

pub use clothoid::{normalize_angle, ClothoidSegment, Pose2D};
pub use error::GeometryError;
pub use path::{check_feasible, curvature_at, sample_path, solve_g2, PathBoundaryCondition, PathError, ThreeClothoidPath};
pub use vehicle::{VehicleGeometry, VehicleLimits};
pub use plan::{plan_motion, MotionPlan, PlanError};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/clothoids.md")]
    mod clothoids {}
    #[doc = include_str!("../../../book/src/paths.md")]
    mod paths {}
    #[doc = include_str!("../../../book/src/charts.md")]
    mod charts {}
    #[doc = include_str!("../../../book/src/velocity.md")]
    mod velocity {}
    #[doc = include_str!("../../../book/src/codec.md")]
    mod codec {}
    #[doc = include_str!("../../../book/src/collision.md")]
    mod collision {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
