use super::bias::SamplingBias;
use super::gust::{group_round, no_roadmap, prepare_roadmap, Groups};
use super::rrt::{check_start, start_state};
use super::tree::MotionTree;
use super::{Budget, PlanError, PlanResult, PlanStatus, PlannerConfig};
use crate::geom::{CollisionChecker, Environment};
use crate::robot::RobotSpec;
use crate::seed::{rng_from_seed, stage_seed};

/// Distance at which a tree state counts as having reached a waypoint.
pub const WAYPOINT_RADIUS: f64 = 2.0;

/// Aggressive roadmap follower: expansions chase the first unreached waypoint
/// of the shortest roadmap path. After `cfg.follow_patience` consecutive
/// failed expansions one group-selection round is run instead.
pub fn follow_plan(
    env: &Environment,
    spec: &RobotSpec,
    cfg: &PlannerConfig,
    bias: Option<&SamplingBias>,
) -> Result<PlanResult, PlanError> {
    cfg.validate()?;
    let budget = Budget::new(cfg);
    let checker = CollisionChecker::new(env);
    check_start(&checker, spec)?;
    let Some(rm) = prepare_roadmap(&checker, spec, cfg, bias) else {
        return Ok(no_roadmap(&budget));
    };
    let path = rm.shortest_path().expect("roadmap is connected");
    let mut rng = rng_from_seed(stage_seed(cfg.seed, "follow"));
    let root = start_state(env);
    let mut tree = MotionTree::new(&checker, *spec, cfg, root);
    let mut groups = Groups::new(&rm);
    groups.insert(&rm, 0, root.position());
    let mut frontier = 1usize;
    let mut failures = 0u32;
    let mut fallbacks = 0u64;
    let mut iterations = 0u64;
    while !budget.exhausted(iterations) {
        iterations += 1;
        let step = if failures >= cfg.follow_patience {
            failures = 0;
            fallbacks += 1;
            group_round(&tree, &mut groups, &rm, env, &mut rng)
        } else {
            let target = if frontier < path.len() {
                rm.nodes[path[frontier]]
            } else {
                env.goal
            };
            let from = tree.nearest(target);
            let before = tree.state(from).position().dist(target);
            match tree.expand(&mut rng, from, target) {
                Some(e) if e.reached_goal || e.state.position().dist(target) < before => Some((from, e)),
                other => {
                    failures += 1;
                    other.map(|e| (from, e))
                }
            }
        };
        let Some((from, e)) = step else {
            continue;
        };
        let leaf = tree.add(from, &e);
        if e.reached_goal {
            return Ok(PlanResult {
                plan: Some(tree.extract(leaf)),
                status: PlanStatus::Solved,
                runtime: budget.elapsed(),
                iterations,
                tree_size: tree.len(),
                fallbacks,
            });
        }
        groups.insert(&rm, leaf, e.state.position());
        let p = e.state.position();
        // reaching a later waypoint also passes the ones before it
        if let Some(j) = (frontier..path.len()).rev().find(|&j| p.dist(rm.nodes[path[j]]) <= WAYPOINT_RADIUS) {
            frontier = j + 1;
            failures = 0;
        }
    }
    Ok(PlanResult {
        plan: None,
        status: PlanStatus::Timeout,
        runtime: budget.elapsed(),
        iterations,
        tree_size: tree.len(),
        fallbacks,
    })
}
