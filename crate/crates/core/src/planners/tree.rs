use rand::Rng;

use super::nearest::{steer_metric, NearestIndex};
use super::PlannerConfig;
use crate::geom::{CollisionChecker, Point2, GOAL_TOLERANCE};
use crate::robot::{goal_reached, step, step_in_collision, Control, MotionPlan, RobotSpec, RobotState};

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeNode {
    pub parent: Option<u32>,
    pub control: Control,
    pub steps: u32,
}

/// Outcome of one successful expansion.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Expansion {
    pub state: RobotState,
    pub control: Control,
    pub steps: u32,
    pub reached_goal: bool,
}

/// Motion tree rooted at the start state. Each non-root node stores the
/// constant control and number of integration steps leading to it.
pub(crate) struct MotionTree<'c, 'e> {
    pub nodes: Vec<TreeNode>,
    pub index: NearestIndex,
    checker: &'c CollisionChecker<'e>,
    spec: RobotSpec,
    dt: f64,
    steps_per_expand: usize,
    controls_per_expand: usize,
}

impl<'c, 'e> MotionTree<'c, 'e> {
    pub fn new(checker: &'c CollisionChecker<'e>, spec: RobotSpec, cfg: &PlannerConfig, root: RobotState) -> Self {
        let env = checker.env();
        let mut index = NearestIndex::new(env.bounds.min, env.bounds.max);
        index.insert(root);
        Self {
            nodes: vec![TreeNode {
                parent: None,
                control: Control::default(),
                steps: 0,
            }],
            index,
            checker,
            spec,
            dt: cfg.dt,
            steps_per_expand: cfg.steps_per_expand(),
            controls_per_expand: cfg.controls_per_expand,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn state(&self, i: usize) -> &RobotState {
        self.index.get(i)
    }

    pub fn nearest(&self, target: Point2) -> usize {
        self.index.nearest(target).expect("tree has a root")
    }

    fn random_control<R: Rng>(&self, rng: &mut R) -> Control {
        Control::new(
            rng.gen_range(0.0..=self.spec.v_max),
            rng.gen_range(-self.spec.omega_max..=self.spec.omega_max),
        )
    }

    /// Tries `controls_per_expand` random controls from node `from` and keeps the
    /// collision-free rollout ending closest to `target`. A rollout that enters
    /// the goal ball stops there and wins outright.
    pub fn expand<R: Rng>(&self, rng: &mut R, from: usize, target: Point2) -> Option<Expansion> {
        let goal = self.checker.env().goal;
        let s0 = *self.state(from);
        let mut best: Option<(f64, Expansion)> = None;
        for _ in 0..self.controls_per_expand {
            let u = self.random_control(rng);
            let mut s = s0;
            let mut outcome = None;
            for k in 1..=self.steps_per_expand {
                let next = step(s, u, self.dt);
                if step_in_collision(self.checker, s, u, self.dt, next, self.spec.radius) {
                    break;
                }
                s = next;
                let reached = goal_reached(&s, goal, GOAL_TOLERANCE);
                if reached || k == self.steps_per_expand {
                    outcome = Some(Expansion {
                        state: s,
                        control: u,
                        steps: k as u32,
                        reached_goal: reached,
                    });
                    break;
                }
            }
            let Some(e) = outcome else { continue };
            if e.reached_goal {
                return Some(e);
            }
            let d = steer_metric(&e.state, target);
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, e));
            }
        }
        best.map(|(_, e)| e)
    }

    pub fn add(&mut self, parent: usize, e: &Expansion) -> usize {
        self.nodes.push(TreeNode {
            parent: Some(parent as u32),
            control: e.control,
            steps: e.steps,
        });
        self.index.insert(e.state)
    }

    /// Plan from the root to node `leaf`, re-integrated step by step.
    pub fn extract(&self, leaf: usize) -> MotionPlan {
        let mut chain = Vec::new();
        let mut i = leaf;
        while let Some(p) = self.nodes[i].parent {
            chain.push(i);
            i = p as usize;
        }
        chain.reverse();
        let start = *self.state(0);
        let mut steps = Vec::new();
        let mut s = start;
        for &n in &chain {
            let node = &self.nodes[n];
            for _ in 0..node.steps {
                s = step(s, node.control, self.dt);
                steps.push((node.control, s));
            }
        }
        MotionPlan {
            dt: self.dt,
            start,
            steps,
            spec: self.spec,
        }
    }
}
