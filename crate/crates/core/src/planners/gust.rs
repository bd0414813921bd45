use rand::Rng;

use super::bias::SamplingBias;
use super::roadmap::{build_roadmap_with, Roadmap};
use super::rrt::{check_start, start_state};
use super::tree::{Expansion, MotionTree};
use super::{Budget, PlanError, PlanResult, PlanStatus, PlannerConfig};
use crate::geom::{CollisionChecker, Environment, Point2};
use crate::robot::RobotSpec;
use crate::seed::{rng_from_seed, split_seed, stage_seed};

/// Priority of a group that has been selected `nsel` times and whose roadmap
/// node is `h` meters from the goal along the roadmap.
pub fn group_weight(nsel: u32, h: f64) -> f64 {
    if !h.is_finite() {
        return 0.0;
    }
    0.5f64.powi(nsel as i32) / ((1.0 + h) * (1.0 + h))
}

/// Roadmap for the guided planners, rebuilt once with twice the nodes when
/// the first one leaves start and goal disconnected.
pub(crate) fn prepare_roadmap(
    checker: &CollisionChecker<'_>,
    spec: &RobotSpec,
    cfg: &PlannerConfig,
    bias: Option<&SamplingBias>,
) -> Option<Roadmap> {
    let rm = build_roadmap_with(checker, spec, cfg, bias);
    if rm.connected() {
        return Some(rm);
    }
    let retry = PlannerConfig {
        roadmap_nodes: cfg.roadmap_nodes * 2,
        seed: split_seed(cfg.seed, 1),
        ..cfg.clone()
    };
    let rm = build_roadmap_with(checker, spec, &retry, bias);
    rm.connected().then_some(rm)
}

/// Partition of the motion tree by nearest roadmap node.
pub(crate) struct Groups {
    members: Vec<Vec<u32>>,
    nsel: Vec<u32>,
    occupied: Vec<usize>,
}

impl Groups {
    pub fn new(rm: &Roadmap) -> Self {
        Self {
            members: vec![Vec::new(); rm.len()],
            nsel: vec![0; rm.len()],
            occupied: Vec::new(),
        }
    }

    pub fn insert(&mut self, rm: &Roadmap, node: usize, p: Point2) {
        let g = rm.nearest_node(p);
        if self.members[g].is_empty() {
            self.occupied.push(g);
        }
        self.members[g].push(node as u32);
    }

    /// Highest-weight occupied group (lowest roadmap index on ties); counts the selection.
    pub fn select(&mut self, rm: &Roadmap) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for &g in &self.occupied {
            let w = group_weight(self.nsel[g], rm.dist_to_goal[g]);
            let better = match best {
                None => true,
                Some((bw, bg)) => w > bw || (w == bw && g < bg),
            };
            if better {
                best = Some((w, g));
            }
        }
        let (_, g) = best?;
        self.nsel[g] += 1;
        Some(g)
    }

    pub fn random_member<R: Rng>(&self, rng: &mut R, g: usize) -> usize {
        let m = &self.members[g];
        m[rng.gen_range(0..m.len())] as usize
    }
}

/// Steering target for a group: the next roadmap node toward the goal, or the
/// goal itself from the goal's own group.
pub(crate) fn group_target(rm: &Roadmap, env: &Environment, g: usize) -> Point2 {
    match rm.next[g] {
        Some(n) => rm.nodes[n as usize],
        None => env.goal,
    }
}

/// One group-selection round shared with the follower's fallback.
pub(crate) fn group_round<R: Rng>(
    tree: &MotionTree<'_, '_>,
    groups: &mut Groups,
    rm: &Roadmap,
    env: &Environment,
    rng: &mut R,
) -> Option<(usize, Expansion)> {
    let g = groups.select(rm)?;
    let from = groups.random_member(rng, g);
    let target = group_target(rm, env, g);
    tree.expand(rng, from, target).map(|e| (from, e))
}

pub(crate) fn no_roadmap(budget: &Budget) -> PlanResult {
    PlanResult {
        plan: None,
        status: PlanStatus::NoRoadmapPath,
        runtime: budget.elapsed(),
        iterations: 0,
        tree_size: 1,
        fallbacks: 0,
    }
}

/// Roadmap-guided motion-tree search: the tree is partitioned by nearest
/// roadmap node and expansion favors groups close to the goal that have not
/// been selected often.
pub fn gust_plan(
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
    let mut rng = rng_from_seed(stage_seed(cfg.seed, "gust"));
    let root = start_state(env);
    let mut tree = MotionTree::new(&checker, *spec, cfg, root);
    let mut groups = Groups::new(&rm);
    groups.insert(&rm, 0, root.position());
    let mut iterations = 0u64;
    while !budget.exhausted(iterations) {
        iterations += 1;
        let Some((from, e)) = group_round(&tree, &mut groups, &rm, env, &mut rng) else {
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
                fallbacks: 0,
            });
        }
        groups.insert(&rm, leaf, e.state.position());
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twice_selected_group_has_half_weight() {
        for h in [0.0, 3.5, 40.0] {
            assert_eq!(group_weight(2, h), 0.5 * group_weight(1, h));
            assert_eq!(group_weight(2, h) * 4.0, group_weight(0, h));
        }
        assert_eq!(group_weight(0, f64::INFINITY), 0.0);
        assert_eq!(group_weight(0, 1.0), 0.25);
    }
}
