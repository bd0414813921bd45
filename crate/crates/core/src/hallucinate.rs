//! Experience augmentation. Positives rearrange the obstacles of a solved
//! problem while keeping its plan valid; negatives add obstacles until no
//! stored plan survives.

use std::f64::consts::PI;

use rand::Rng;

use crate::envgen::SOLVABILITY_RESOLUTION;
use crate::exec::try_map_indexed;
use crate::geom::{grid_path_exists, rasterize, Aabb, CollisionChecker, Environment, Obstacle, Point2};
use crate::robot::{plan_valid_with, MotionPlan, RobotError};
use crate::seed::{rng_from_seed, split_seed};

const JITTER_TRIES: usize = 50;
const PLACE_TRIES: usize = 1000;
const NEGATIVE_RETRIES: u64 = 100;
const MAX_ROTATION: f64 = 0.2;
const CELL: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AugmentError {
    #[error("plan has no states")]
    EmptyPlan,
    #[error("invalid augmentation parameters: {0}")]
    InvalidParams(String),
    #[error("plan is not valid in its source environment")]
    PlanInvalid,
    #[error("could not place obstacle {0} clear of the corridor")]
    Crowded(usize),
    #[error("could not block every plan while keeping the problem solvable")]
    NegativeExhausted,
    #[error(transparent)]
    Robot(#[from] RobotError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentParams {
    /// Obstacles within this distance of the corridor are jittered; the rest are re-placed.
    pub near_dist: f64,
    pub jitter: f64,
    pub margin: f64,
    pub count: usize,
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self {
            near_dist: 6.0,
            jitter: 1.5,
            margin: 0.25,
            count: 199,
        }
    }
}

impl AugmentParams {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if !(self.jitter >= 0.0 && self.jitter < self.near_dist) {
            return Err(AugmentError::InvalidParams("need 0 <= jitter < near_dist".into()));
        }
        if !(self.margin >= 0.0) {
            return Err(AugmentError::InvalidParams("margin must be non-negative".into()));
        }
        if self.count == 0 {
            return Err(AugmentError::InvalidParams("count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Discs of radius `robot radius + margin` on every plan state (the start
/// included), joined by the capsules between consecutive states.
#[derive(Debug, Clone)]
pub struct Corridor {
    pub discs: Vec<(Point2, f64)>,
    radius: f64,
    origin: Point2,
    nx: i64,
    ny: i64,
    buckets: Vec<Vec<u32>>,
}

pub fn corridor(plan: &MotionPlan, margin: f64) -> Result<Corridor, AugmentError> {
    if plan.is_empty() {
        return Err(AugmentError::EmptyPlan);
    }
    let radius = plan.spec.radius + margin;
    let centers: Vec<Point2> = std::iter::once(plan.start.position())
        .chain(plan.states().map(|s| s.position()))
        .collect();
    let mut bb = Aabb::of_segment(centers[0], centers[0]);
    for c in &centers {
        bb = Aabb::new(bb.min.x.min(c.x), bb.min.y.min(c.y), bb.max.x.max(c.x), bb.max.y.max(c.y));
    }
    let origin = bb.min;
    let nx = ((bb.width() / CELL).floor() as i64 + 1).max(1);
    let ny = ((bb.height() / CELL).floor() as i64 + 1).max(1);
    let mut c = Corridor {
        discs: centers.iter().map(|&p| (p, radius)).collect(),
        radius,
        origin,
        nx,
        ny,
        buckets: vec![Vec::new(); (nx * ny) as usize],
    };
    for i in 0..centers.len().saturating_sub(1).max(1) {
        let (a, b) = c.segment(i);
        let (x0, y0, x1, y1) = c.cell_range(&Aabb::of_segment(a, b));
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                c.buckets[(cy * nx + cx) as usize].push(i as u32);
            }
        }
    }
    Ok(c)
}

impl Corridor {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn segment(&self, i: usize) -> (Point2, Point2) {
        let a = self.discs[i].0;
        let b = self.discs.get(i + 1).map_or(a, |d| d.0);
        (a, b)
    }

    fn cell_range(&self, q: &Aabb) -> (i64, i64, i64, i64) {
        let f = |v: f64, o: f64, n: i64| (((v - o) / CELL).floor() as i64).clamp(0, n - 1);
        (
            f(q.min.x, self.origin.x, self.nx),
            f(q.min.y, self.origin.y, self.ny),
            f(q.max.x, self.origin.x, self.nx),
            f(q.max.y, self.origin.y, self.ny),
        )
    }

    /// True iff `o` comes within `dist` of the corridor's centerline.
    pub fn within(&self, o: &Obstacle, dist: f64) -> bool {
        let q = o.aabb().inflate(dist);
        let (x0, y0, x1, y1) = self.cell_range(&q);
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                for &i in &self.buckets[(cy * self.nx + cx) as usize] {
                    let (a, b) = self.segment(i as usize);
                    if o.distance_to_segment(a, b) <= dist {
                        return true;
                    }
                }
            }
        }
        false
    }

    pub fn intersects(&self, o: &Obstacle) -> bool {
        self.within(o, self.radius)
    }
}

fn goal_blocked(env: &Environment, o: &Obstacle, radius: f64) -> bool {
    o.distance_to_point(env.goal) <= radius || o.distance_to_point(env.start) <= radius
}

/// One positive sample: near obstacles jittered, far ones re-placed.
fn augment_once<R: Rng>(
    env: &Environment,
    near: &[bool],
    cor: &Corridor,
    p: &AugmentParams,
    radius: f64,
    rng: &mut R,
) -> Result<Environment, AugmentError> {
    let b = env.bounds;
    let mut out = env.clone();
    for (i, o) in env.obstacles.iter().enumerate() {
        if near[i] {
            for _ in 0..JITTER_TRIES {
                let dc = Point2::new(rng.gen_range(-p.jitter..=p.jitter), rng.gen_range(-p.jitter..=p.jitter));
                let dth = rng.gen_range(-MAX_ROTATION..=MAX_ROTATION);
                let cand = o.placed(o.center() + dc, o.theta() + dth);
                if !cor.intersects(&cand) && !goal_blocked(env, &cand, radius) {
                    out.obstacles[i] = cand;
                    break;
                }
            }
        } else {
            let mut placed = false;
            for _ in 0..PLACE_TRIES {
                let c = Point2::new(rng.gen_range(b.min.x..b.max.x), rng.gen_range(b.min.y..b.max.y));
                let cand = o.placed(c, rng.gen_range(-PI..PI));
                if !cor.intersects(&cand) && !goal_blocked(env, &cand, radius) {
                    out.obstacles[i] = cand;
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(AugmentError::Crowded(i));
            }
        }
    }
    Ok(out.canonicalize())
}

/// `p.count` rearrangements of `env` in each of which `plan` stays valid.
pub fn augment_positive(
    env: &Environment,
    plan: &MotionPlan,
    p: &AugmentParams,
    seed: u64,
) -> Result<Vec<Environment>, AugmentError> {
    p.validate()?;
    plan.check_integrity()?;
    let checker = CollisionChecker::new(env);
    if !plan_valid_with(&checker, plan, crate::geom::GOAL_TOLERANCE) {
        return Err(AugmentError::PlanInvalid);
    }
    let cor = corridor(plan, p.margin)?;
    let near: Vec<bool> = env.obstacles.iter().map(|o| cor.within(o, p.near_dist)).collect();
    let radius = plan.spec.radius;
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(p.count);
    while out.len() < p.count {
        let mut candidate = None;
        // rounding to stored precision could in principle touch the corridor;
        // such draws are simply redrawn
        for _ in 0..JITTER_TRIES {
            let e = augment_once(env, &near, &cor, p, radius, &mut rng)?;
            if plan_valid_with(&CollisionChecker::new(&e), plan, crate::geom::GOAL_TOLERANCE) {
                candidate = Some(e);
                break;
            }
        }
        out.push(candidate.ok_or(AugmentError::Crowded(usize::MAX))?);
    }
    Ok(out)
}

/// Positives for many `(env, plan)` pairs, each with its own split seed.
pub fn augment_batch(
    pairs: &[(Environment, MotionPlan)],
    p: &AugmentParams,
    seed: u64,
) -> Result<Vec<Vec<Environment>>, AugmentError> {
    try_map_indexed(pairs.len(), |i| {
        augment_positive(&pairs[i].0, &pairs[i].1, p, split_seed(seed, i as u64))
    })
}

/// Radius of the blocking discs dropped onto plan states.
const BLOCK_RADIUS: (f64, f64) = (0.5, 1.0);

/// `p.count` variants of `template` in which every plan in `plans` is blocked
/// by some obstacle while the problem stays solvable on the grid.
pub fn generate_negative(
    plans: &[MotionPlan],
    template: &Environment,
    p: &AugmentParams,
    seed: u64,
) -> Result<Vec<Environment>, AugmentError> {
    p.validate()?;
    if plans.iter().any(MotionPlan::is_empty) {
        return Err(AugmentError::EmptyPlan);
    }
    let radius = plans.first().map_or(0.5, |pl| pl.spec.radius);
    let mut out = Vec::with_capacity(p.count);
    for m in 0..p.count {
        let mut found = None;
        for attempt in 0..NEGATIVE_RETRIES {
            let mut rng = rng_from_seed(split_seed(split_seed(seed, m as u64), attempt));
            if let Some(e) = block_all(plans, template, radius, &mut rng) {
                found = Some(e);
                break;
            }
        }
        out.push(found.ok_or(AugmentError::NegativeExhausted)?);
    }
    Ok(out)
}

fn block_all<R: Rng>(plans: &[MotionPlan], template: &Environment, radius: f64, rng: &mut R) -> Option<Environment> {
    let mut env = template.clone();
    for plan in plans {
        if !plan_valid_with(&CollisionChecker::new(&env), plan, crate::geom::GOAL_TOLERANCE) {
            continue;
        }
        let r = rng.gen_range(BLOCK_RADIUS.0..=BLOCK_RADIUS.1);
        // states whose blocking disc leaves start and goal clear
        let keep = radius + r + 1e-6;
        let candidates: Vec<Point2> = plan
            .states()
            .map(|s| s.position())
            .filter(|q| q.dist(env.start) > keep && q.dist(env.goal) > keep)
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let c = candidates[rng.gen_range(0..candidates.len())];
        env.obstacles.push(Obstacle::circle(c.x, c.y, r));
    }
    let env = env.canonicalize();
    if env.validate(radius).is_err() {
        return None;
    }
    let checker = CollisionChecker::new(&env);
    if plans.iter().any(|pl| plan_valid_with(&checker, pl, crate::geom::GOAL_TOLERANCE)) {
        return None;
    }
    let grid = rasterize(&env, SOLVABILITY_RESOLUTION).ok()?;
    grid_path_exists(&grid, env.start, env.goal, radius).then_some(env)
}
