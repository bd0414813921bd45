use super::bias::{SamplingBias, TargetDistribution};
use super::tree::MotionTree;
use super::{Budget, PlanError, PlanResult, PlanStatus, PlannerConfig};
use crate::geom::{CollisionChecker, Environment};
use crate::robot::{RobotSpec, RobotState};
use crate::seed::{rng_from_seed, stage_seed};

pub(crate) fn start_state(env: &Environment) -> RobotState {
    RobotState::new(env.start.x, env.start.y, env.start_heading)
}

pub(crate) fn check_start(checker: &CollisionChecker<'_>, spec: &RobotSpec) -> Result<(), PlanError> {
    if checker.point_in_collision(checker.env().start, spec.radius) {
        return Err(PlanError::StartInCollision);
    }
    Ok(())
}

/// Kinodynamic RRT. With a bias, steering targets are drawn around the
/// retrieved trajectories instead of uniformly.
pub fn rrt_plan(
    env: &Environment,
    spec: &RobotSpec,
    cfg: &PlannerConfig,
    bias: Option<&SamplingBias>,
) -> Result<PlanResult, PlanError> {
    cfg.validate()?;
    let budget = Budget::new(cfg);
    let checker = CollisionChecker::new(env);
    check_start(&checker, spec)?;
    let mut rng = rng_from_seed(stage_seed(cfg.seed, "rrt"));
    let targets = TargetDistribution::new(env, cfg.goal_bias, bias);
    let mut tree = MotionTree::new(&checker, *spec, cfg, start_state(env));
    let mut iterations = 0u64;
    while !budget.exhausted(iterations) {
        iterations += 1;
        let (target, _) = targets.sample(&mut rng);
        let from = tree.nearest(target);
        if let Some(e) = tree.expand(&mut rng, from, target) {
            let leaf = tree.add(from, &e);
            if e.reached_goal {
                return Ok(PlanResult {
                    plan: Some(tree.extract(leaf)),
                    status: PlanStatus::Solved,
                    runtime: budget.elapsed(),
                    iterations,
                    tree_size: tree.len(),
                    fallbacks: 0,
                });
            }
        }
    }
    Ok(PlanResult {
        plan: None,
        status: PlanStatus::Timeout,
        runtime: budget.elapsed(),
        iterations,
        tree_size: tree.len(),
        fallbacks: 0,
    })
}
