//! Kinodynamic tree planners: plain RRT, a roadmap-guided group planner in the
//! style of GUST, and a roadmap path follower. All three accept an optional
//! [`SamplingBias`] built from retrieved plans (the open-box variants).

mod bias;
mod follow;
mod gust;
mod nearest;
mod roadmap;
mod rrt;
mod tree;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use bias::{SamplingBias, TargetDistribution, TargetSource};
pub use follow::follow_plan;
pub use gust::{group_weight, gust_plan};
pub use nearest::NearestIndex;
pub use roadmap::{build_roadmap, Roadmap};
pub use rrt::rrt_plan;

use crate::geom::Environment;
use crate::robot::{MotionPlan, RobotError, RobotSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("start state is in collision")]
    StartInCollision,
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid sampling bias: {0}")]
    InvalidBias(String),
    #[error(transparent)]
    Robot(#[from] RobotError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    /// Wall-clock budget in seconds.
    pub time_limit: f64,
    /// Optional expansion budget; when set the search is fully deterministic.
    pub max_iterations: Option<u64>,
    pub goal_bias: f64,
    /// Duration of one tree expansion, in seconds.
    pub expand_dt: f64,
    /// Integration step of the produced plans.
    pub dt: f64,
    pub controls_per_expand: usize,
    pub roadmap_nodes: usize,
    pub roadmap_neighbors: usize,
    /// Fraction of roadmap vertices drawn from the bias distribution when one
    /// is given; the rest stay uniform.
    pub roadmap_bias_share: f64,
    /// Consecutive failures before the follower falls back to group selection.
    pub follow_patience: u32,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            time_limit: 10.0,
            max_iterations: None,
            goal_bias: 0.1,
            expand_dt: 1.0,
            dt: 0.1,
            controls_per_expand: 8,
            roadmap_nodes: 500,
            roadmap_neighbors: 15,
            roadmap_bias_share: 0.3,
            follow_patience: 20,
            seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: &str| Err(PlanError::InvalidConfig(m.to_string()));
        if !(self.time_limit > 0.0) {
            return bad("time_limit must be positive");
        }
        // the degenerate greedy setting goal_bias = 1 is allowed
        if !(self.goal_bias > 0.0 && self.goal_bias <= 1.0) {
            return bad("goal_bias must lie in (0, 1]");
        }
        if !(self.dt > 0.0 && self.expand_dt >= self.dt) {
            return bad("expand_dt must be at least one integration step");
        }
        if self.controls_per_expand == 0 || self.roadmap_neighbors == 0 {
            return bad("controls_per_expand and roadmap_neighbors must be positive");
        }
        if !(0.0..=1.0).contains(&self.roadmap_bias_share) {
            return bad("roadmap_bias_share must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn steps_per_expand(&self) -> usize {
        ((self.expand_dt / self.dt).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlanStatus {
    Solved,
    Timeout,
    NoRoadmapPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub plan: Option<MotionPlan>,
    pub status: PlanStatus,
    /// Seconds of wall time.
    pub runtime: f64,
    pub iterations: u64,
    pub tree_size: usize,
    /// Times the follower dropped back to group selection.
    pub fallbacks: u64,
}

impl PlanResult {
    pub fn solved(&self) -> bool {
        self.status == PlanStatus::Solved
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlannerKind {
    Rrt,
    Gust,
    Follow,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [PlannerKind::Gust, PlannerKind::Follow, PlannerKind::Rrt];

    pub fn as_str(&self) -> &'static str {
        match self {
            PlannerKind::Rrt => "rrt",
            PlannerKind::Gust => "gust",
            PlannerKind::Follow => "follow",
        }
    }

    pub fn plan(
        &self,
        env: &Environment,
        spec: &RobotSpec,
        cfg: &PlannerConfig,
        bias: Option<&SamplingBias>,
    ) -> Result<PlanResult, PlanError> {
        match self {
            PlannerKind::Rrt => rrt_plan(env, spec, cfg, bias),
            PlannerKind::Gust => gust_plan(env, spec, cfg, bias),
            PlannerKind::Follow => follow_plan(env, spec, cfg, bias),
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlannerKind {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rrt" => Ok(PlannerKind::Rrt),
            "gust" => Ok(PlannerKind::Gust),
            "follow" => Ok(PlannerKind::Follow),
            other => Err(PlanError::InvalidConfig(format!("unknown planner `{other}`"))),
        }
    }
}

/// Wall-clock and iteration budget shared by the search loops.
pub(crate) struct Budget {
    started: Instant,
    limit: f64,
    max_iterations: Option<u64>,
}

impl Budget {
    pub(crate) fn new(cfg: &PlannerConfig) -> Self {
        Self {
            started: Instant::now(),
            limit: cfg.time_limit,
            max_iterations: cfg.max_iterations,
        }
    }

    pub(crate) fn exhausted(&self, iterations: u64) -> bool {
        if let Some(max) = self.max_iterations {
            if iterations >= max {
                return true;
            }
        }
        self.elapsed() >= self.limit
    }

    pub(crate) fn elapsed(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }
}
