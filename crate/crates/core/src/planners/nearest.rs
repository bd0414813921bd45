use crate::geom::{wrap_angle, Point2};
use crate::robot::RobotState;

/// Weight of heading error in the steering metric, in meters per radian.
pub const ANGLE_WEIGHT: f64 = 1.0;

const LINEAR_LIMIT: usize = 5000;
const CELL: f64 = 2.0;

/// Distance from `s` to a target position: positional distance plus the
/// heading change needed to face it.
pub fn steer_metric(s: &RobotState, target: Point2) -> f64 {
    let dx = target.x - s.x;
    let dy = target.y - s.y;
    let d = dx.hypot(dy);
    if d == 0.0 {
        return 0.0;
    }
    d + ANGLE_WEIGHT * wrap_angle(dy.atan2(dx) - s.theta).abs()
}

/// Nearest-state index: linear scan while small, uniform buckets beyond
/// [`LINEAR_LIMIT`] entries. Ties resolve to the lower index either way.
#[derive(Debug, Clone)]
pub struct NearestIndex {
    states: Vec<RobotState>,
    origin: Point2,
    nx: i64,
    ny: i64,
    buckets: Vec<Vec<u32>>,
}

impl NearestIndex {
    pub fn new(lo: Point2, hi: Point2) -> Self {
        let nx = (((hi.x - lo.x) / CELL).ceil() as i64).max(1);
        let ny = (((hi.y - lo.y) / CELL).ceil() as i64).max(1);
        Self {
            states: Vec::new(),
            origin: lo,
            nx,
            ny,
            buckets: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    fn cell(&self, p: Point2) -> (i64, i64) {
        let cx = ((p.x - self.origin.x) / CELL).floor() as i64;
        let cy = ((p.y - self.origin.y) / CELL).floor() as i64;
        (cx.clamp(0, self.nx - 1), cy.clamp(0, self.ny - 1))
    }

    fn bucket_insert(&mut self, i: usize) {
        let (cx, cy) = self.cell(self.states[i].position());
        self.buckets[(cy * self.nx + cx) as usize].push(i as u32);
    }

    pub fn insert(&mut self, s: RobotState) -> usize {
        let i = self.states.len();
        self.states.push(s);
        if !self.buckets.is_empty() {
            self.bucket_insert(i);
        } else if self.states.len() > LINEAR_LIMIT {
            self.buckets = vec![Vec::new(); (self.nx * self.ny) as usize];
            for j in 0..self.states.len() {
                self.bucket_insert(j);
            }
        }
        i
    }

    /// Index of the state minimizing [`steer_metric`] to `target`.
    pub fn nearest(&self, target: Point2) -> Option<usize> {
        if self.states.is_empty() {
            return None;
        }
        if self.buckets.is_empty() {
            return Some(self.nearest_linear(target));
        }
        Some(self.nearest_buckets(target))
    }

    fn better(best: &mut (f64, usize), d: f64, i: usize) {
        if d < best.0 || (d == best.0 && i < best.1) {
            *best = (d, i);
        }
    }

    fn nearest_linear(&self, target: Point2) -> usize {
        let mut best = (f64::INFINITY, usize::MAX);
        for (i, s) in self.states.iter().enumerate() {
            Self::better(&mut best, steer_metric(s, target), i);
        }
        best.1
    }

    fn nearest_buckets(&self, target: Point2) -> usize {
        let (tx, ty) = self.cell(target);
        // clamping may have moved the target's cell, so measure ring gaps from the
        // true cell coordinates
        let fx = (target.x - self.origin.x) / CELL;
        let fy = (target.y - self.origin.y) / CELL;
        let mut best = (f64::INFINITY, usize::MAX);
        let max_ring = self.nx.max(self.ny) + 1;
        for r in 0..=max_ring {
            for cy in (ty - r)..=(ty + r) {
                for cx in (tx - r)..=(tx + r) {
                    if (cx - tx).abs() != r && (cy - ty).abs() != r {
                        continue;
                    }
                    if cx < 0 || cy < 0 || cx >= self.nx || cy >= self.ny {
                        continue;
                    }
                    for &i in &self.buckets[(cy * self.nx + cx) as usize] {
                        let i = i as usize;
                        Self::better(&mut best, steer_metric(&self.states[i], target), i);
                    }
                }
            }
            // every unvisited cell lies at least this far from the target
            let gap_x = (fx - (tx - r) as f64).min((tx + r + 1) as f64 - fx);
            let gap_y = (fy - (ty - r) as f64).min((ty + r + 1) as f64 - fy);
            let reach = gap_x.min(gap_y).max(0.0) * CELL;
            if best.0 < reach {
                break;
            }
        }
        best.1
    }

    pub fn get(&self, i: usize) -> &RobotState {
        &self.states[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use rand::Rng;

    #[test]
    fn metric_prefers_aligned_heading() {
        let t = Point2::new(5.0, 0.0);
        let facing = RobotState::new(0.0, 0.0, 0.0);
        let away = RobotState::new(0.0, 0.0, std::f64::consts::PI);
        assert!(steer_metric(&facing, t) < steer_metric(&away, t));
        assert_eq!(steer_metric(&facing, t), 5.0);
    }

    #[test]
    fn buckets_agree_with_linear_scan() {
        let lo = Point2::new(-5.0, -5.0);
        let hi = Point2::new(55.0, 55.0);
        let mut idx = NearestIndex::new(lo, hi);
        let mut rng = rng_from_seed(4);
        for _ in 0..6000 {
            idx.insert(RobotState::new(
                rng.gen_range(-5.0..55.0),
                rng.gen_range(-5.0..55.0),
                rng.gen_range(-3.0..3.0),
            ));
        }
        assert!(!idx.buckets.is_empty());
        for _ in 0..500 {
            let t = Point2::new(rng.gen_range(-8.0..58.0), rng.gen_range(-8.0..58.0));
            assert_eq!(idx.nearest(t), Some(idx.nearest_linear(t)));
        }
    }
}
