//! Workspace geometry: obstacles, environments, collision predicates and
//! occupancy rasters.

mod collision;
mod environment;
mod grid;
mod primitives;

pub use collision::{clearance, point_in_collision, segment_in_collision, CollisionChecker};
pub use environment::{
    fmt_sig9, round_sig9, Environment, ProblemClass, CANONICAL_BOUNDS, CANONICAL_GOAL,
    CANONICAL_START, CANONICAL_START_HEADING, GOAL_TOLERANCE,
};
pub use grid::{grid_path_exists, rasterize, OccupancyGrid};
pub use primitives::{point_segment_dist, wrap_angle, Aabb, Obstacle, Point2};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("bounds have zero area")]
    DegenerateBounds,
    #[error("grid resolution must be positive, got {0}")]
    BadResolution(f64),
    #[error("obstacle {0} violates its shape invariants")]
    InvalidObstacle(usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("start is in collision")]
    StartBlocked,
    #[error("goal is in collision")]
    GoalBlocked,
    #[error("unknown problem class `{0}`")]
    UnknownClass(String),
}
