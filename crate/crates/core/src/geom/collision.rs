//! Exact collision predicates for a disc robot.
//!
//! All tests are closed: clearance equal to the inflation radius counts as a
//! collision. The free functions scan every obstacle; [`CollisionChecker`]
//! gives identical answers through a bucket index and is what the planners use.

use super::environment::Environment;
use super::primitives::{Aabb, Obstacle, Point2};

fn outside_shrunk_bounds(bounds: &Aabb, p: Point2, inflate: f64) -> bool {
    !(bounds.interior_clearance(p) > inflate)
}

/// True iff `p` lies within `inflate` of an obstacle or of the workspace boundary.
pub fn point_in_collision(env: &Environment, p: Point2, inflate: f64) -> bool {
    debug_assert!(inflate >= 0.0);
    if outside_shrunk_bounds(&env.bounds, p, inflate) {
        return true;
    }
    env.obstacles
        .iter()
        .any(|o| o.distance_to_point(p) <= inflate)
}

/// True iff the capsule swept by a disc of radius `inflate` along `[a, b]`
/// touches an obstacle or leaves the workspace.
pub fn segment_in_collision(env: &Environment, a: Point2, b: Point2, inflate: f64) -> bool {
    debug_assert!(inflate >= 0.0);
    // the shrunk bounds are convex, so checking the endpoints is exact
    if outside_shrunk_bounds(&env.bounds, a, inflate) || outside_shrunk_bounds(&env.bounds, b, inflate) {
        return true;
    }
    env.obstacles
        .iter()
        .any(|o| o.distance_to_segment(a, b) <= inflate)
}

/// Smallest distance from `p` to any obstacle (the boundary is ignored).
pub fn clearance(env: &Environment, p: Point2) -> f64 {
    env.obstacles
        .iter()
        .map(|o| o.distance_to_point(p))
        .fold(f64::INFINITY, f64::min)
}

const BUCKET_SIZE: f64 = 4.0;

/// Uniform-grid broadphase over an environment's obstacles.
#[derive(Debug, Clone)]
pub struct CollisionChecker<'a> {
    env: &'a Environment,
    boxes: Vec<Aabb>,
    origin: Point2,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
    // obstacles whose box leaves the bucketed region
    overflow: Vec<u32>,
    stamp: std::cell::Cell<u32>,
    seen: std::cell::RefCell<Vec<u32>>,
}

impl<'a> CollisionChecker<'a> {
    pub fn new(env: &'a Environment) -> Self {
        let origin = env.bounds.min;
        let nx = ((env.bounds.width() / BUCKET_SIZE).ceil() as usize).max(1);
        let ny = ((env.bounds.height() / BUCKET_SIZE).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        let mut overflow = Vec::new();
        let boxes: Vec<Aabb> = env.obstacles.iter().map(Obstacle::aabb).collect();
        for (i, bb) in boxes.iter().enumerate() {
            let (x0, y0) = Self::cell_of(origin, bb.min);
            let (x1, y1) = Self::cell_of(origin, bb.max);
            if x0 < 0 || y0 < 0 || x1 >= nx as i64 || y1 >= ny as i64 {
                overflow.push(i as u32);
            }
            for cy in y0.max(0)..=y1.min(ny as i64 - 1) {
                for cx in x0.max(0)..=x1.min(nx as i64 - 1) {
                    buckets[cy as usize * nx + cx as usize].push(i as u32);
                }
            }
        }
        Self {
            env,
            boxes,
            origin,
            nx,
            ny,
            buckets,
            overflow,
            stamp: std::cell::Cell::new(0),
            seen: std::cell::RefCell::new(vec![0; env.obstacles.len()]),
        }
    }

    pub fn env(&self) -> &Environment {
        self.env
    }

    fn cell_of(origin: Point2, p: Point2) -> (i64, i64) {
        (
            ((p.x - origin.x) / BUCKET_SIZE).floor() as i64,
            ((p.y - origin.y) / BUCKET_SIZE).floor() as i64,
        )
    }

    /// Calls `f` with each obstacle whose box overlaps `query` until it returns true.
    fn any_candidate(&self, query: &Aabb, mut f: impl FnMut(&Obstacle) -> bool) -> bool {
        let stamp = self.stamp.get().wrapping_add(1);
        self.stamp.set(stamp);
        let mut seen = self.seen.borrow_mut();
        if stamp == 0 {
            seen.iter_mut().for_each(|s| *s = u32::MAX);
        }
        let mut visit = |i: u32| {
            let idx = i as usize;
            if seen[idx] == stamp {
                return false;
            }
            seen[idx] = stamp;
            self.boxes[idx].overlaps(query) && f(&self.env.obstacles[idx])
        };
        for &i in &self.overflow {
            if visit(i) {
                return true;
            }
        }
        let (x0, y0) = Self::cell_of(self.origin, query.min);
        let (x1, y1) = Self::cell_of(self.origin, query.max);
        for cy in y0.max(0)..=y1.min(self.ny as i64 - 1) {
            for cx in x0.max(0)..=x1.min(self.nx as i64 - 1) {
                for &i in &self.buckets[cy as usize * self.nx + cx as usize] {
                    if visit(i) {
                        return true;
                    }
                }
            }
        }
        false
    }

    pub fn point_in_collision(&self, p: Point2, inflate: f64) -> bool {
        if outside_shrunk_bounds(&self.env.bounds, p, inflate) {
            return true;
        }
        let q = Aabb::of_segment(p, p).inflate(inflate);
        self.any_candidate(&q, |o| o.distance_to_point(p) <= inflate)
    }

    pub fn segment_in_collision(&self, a: Point2, b: Point2, inflate: f64) -> bool {
        if outside_shrunk_bounds(&self.env.bounds, a, inflate)
            || outside_shrunk_bounds(&self.env.bounds, b, inflate)
        {
            return true;
        }
        let q = Aabb::of_segment(a, b).inflate(inflate);
        self.any_candidate(&q, |o| o.distance_to_segment(a, b) <= inflate)
    }
}
