use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use super::collision::point_in_collision;
use super::primitives::{wrap_angle, Aabb, Obstacle, Point2};
use super::GeomError;

/// Workspace bounds of the canonical frame.
pub const CANONICAL_BOUNDS: Aabb = Aabb::new(-5.0, -5.0, 55.0, 55.0);
pub const CANONICAL_START: Point2 = Point2::new(0.0, 0.0);
pub const CANONICAL_START_HEADING: f64 = FRAC_PI_4;
pub const CANONICAL_GOAL: Point2 = Point2::new(50.0, 50.0);
pub const GOAL_TOLERANCE: f64 = 1.0;

/// Procedural family an environment was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemClass {
    Curves,
    Random,
    Trap,
}

impl ProblemClass {
    pub const ALL: [ProblemClass; 3] = [ProblemClass::Curves, ProblemClass::Random, ProblemClass::Trap];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemClass::Curves => "curves",
            ProblemClass::Random => "random",
            ProblemClass::Trap => "trap",
        }
    }
}

impl fmt::Display for ProblemClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemClass {
    type Err = GeomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "curves" => Ok(ProblemClass::Curves),
            "random" => Ok(ProblemClass::Random),
            "trap" => Ok(ProblemClass::Trap),
            other => Err(GeomError::UnknownClass(other.to_string())),
        }
    }
}

/// A planning problem: bounds, obstacles, and the start/goal pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub bounds: Aabb,
    pub obstacles: Vec<Obstacle>,
    pub start: Point2,
    pub start_heading: f64,
    pub goal: Point2,
    pub class_tag: ProblemClass,
}

impl Environment {
    /// Obstacle-free problem in the canonical frame.
    pub fn empty(class_tag: ProblemClass) -> Self {
        Self {
            bounds: CANONICAL_BOUNDS,
            obstacles: Vec::new(),
            start: CANONICAL_START,
            start_heading: CANONICAL_START_HEADING,
            goal: CANONICAL_GOAL,
            class_tag,
        }
    }

    pub fn with_obstacles(class_tag: ProblemClass, obstacles: Vec<Obstacle>) -> Self {
        Self {
            obstacles,
            ..Self::empty(class_tag)
        }
    }

    /// Checks the structural invariants and that start and goal are free at `radius`.
    pub fn validate(&self, radius: f64) -> Result<(), GeomError> {
        if !(self.bounds.width() > 0.0 && self.bounds.height() > 0.0) {
            return Err(GeomError::DegenerateBounds);
        }
        if let Some(i) = self.obstacles.iter().position(|o| !o.is_valid()) {
            return Err(GeomError::InvalidObstacle(i));
        }
        if !self.start.is_finite() || !self.goal.is_finite() || !self.start_heading.is_finite() {
            return Err(GeomError::NonFinite);
        }
        if point_in_collision(self, self.start, radius) {
            return Err(GeomError::StartBlocked);
        }
        if point_in_collision(self, self.goal, radius) {
            return Err(GeomError::GoalBlocked);
        }
        Ok(())
    }

    /// Rounds every real to the 9 significant digits used by the text format,
    /// so an environment equals its own serialized round trip.
    pub fn canonicalize(mut self) -> Self {
        let r = round_sig9;
        self.bounds = Aabb::new(
            r(self.bounds.min.x),
            r(self.bounds.min.y),
            r(self.bounds.max.x),
            r(self.bounds.max.y),
        );
        self.start = Point2::new(r(self.start.x), r(self.start.y));
        self.start_heading = r(self.start_heading);
        self.goal = Point2::new(r(self.goal.x), r(self.goal.y));
        for o in &mut self.obstacles {
            *o = match *o {
                Obstacle::RotRect {
                    cx,
                    cy,
                    w,
                    h,
                    theta,
                } => Obstacle::RotRect {
                    cx: r(cx),
                    cy: r(cy),
                    w: r(w),
                    h: r(h),
                    theta: r(wrap_angle(theta)),
                },
                Obstacle::Circle { cx, cy, r: rad } => Obstacle::Circle {
                    cx: r(cx),
                    cy: r(cy),
                    r: r(rad),
                },
            };
        }
        self
    }
}

/// Nearest double to `x` printed with 9 significant digits.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{:.8e}", x).parse().unwrap_or(x)
}

/// Shortest decimal text for `x` after rounding to 9 significant digits.
pub fn fmt_sig9(x: f64) -> String {
    format!("{}", round_sig9(x))
}
