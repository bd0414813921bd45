//! Procedural problem classes: concentric walls with gaps (Curves), scattered
//! clutter (Random) and a U-shaped bug trap (Trap).
//!
//! Every generator is a pure function of `(params, seed)`. A candidate that
//! fails the grid solvability filter is regenerated from
//! `split_seed(seed, attempt)`, up to [`MAX_ATTEMPTS`] times.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geom::{
    grid_path_exists, rasterize, Environment, GeomError, Obstacle, Point2, ProblemClass,
};
use crate::robot::RobotSpec;
use crate::seed::{rng_from_seed, split_seed};

pub const MAX_ATTEMPTS: u64 = 100;
/// Resolution of the solvability raster.
pub const SOLVABILITY_RESOLUTION: f64 = 0.5;
/// Obstacles may not come within this distance of start or goal.
pub const KEEP_OUT_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("no solvable instance after {0} attempts")]
    Exhausted(u64),
    #[error("environment is not solvable on the grid")]
    Unsolvable,
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvesParams {
    pub n_curves: usize,
    pub segments_per_curve: usize,
    pub gap_width: f64,
    /// Radial spacing between consecutive walls; the first wall sits at this radius.
    pub separation: f64,
    /// Uniform radial offset of each wall and tangential offset of each gap.
    pub jitter: f64,
    pub thickness: f64,
    /// Number of evenly spaced candidate gap positions per wall; 0 draws the
    /// gap angle uniformly over the usable arc.
    pub gap_slots: usize,
}

impl Default for CurvesParams {
    fn default() -> Self {
        Self {
            n_curves: 3,
            segments_per_curve: 24,
            gap_width: 4.0,
            separation: 17.5,
            jitter: 0.5,
            thickness: 1.0,
            gap_slots: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomParams {
    /// Target fraction of the bounds covered by obstacles.
    pub density: f64,
    pub size_range: (f64, f64),
    pub circle_fraction: f64,
}

impl Default for RandomParams {
    fn default() -> Self {
        Self {
            density: 0.15,
            size_range: (1.0, 3.0),
            circle_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapParams {
    pub trap_depth: f64,
    pub trap_width: f64,
    pub wall_thickness: f64,
    pub placement_jitter: f64,
    pub n_scatter: usize,
}

impl Default for TrapParams {
    fn default() -> Self {
        Self {
            trap_depth: 20.0,
            trap_width: 20.0,
            wall_thickness: 1.0,
            placement_jitter: 2.0,
            n_scatter: 12,
        }
    }
}

/// Parameters for all three classes plus the robot used by the solvability filter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeneratorParams {
    pub curves: CurvesParams,
    pub random: RandomParams,
    pub trap: TrapParams,
    pub robot: RobotSpec,
}

impl GeneratorParams {
    pub fn generate(&self, class: ProblemClass, seed: u64) -> Result<Environment, GenError> {
        match class {
            ProblemClass::Curves => gen_curves_with(&self.curves, &self.robot, seed),
            ProblemClass::Random => gen_random_with(&self.random, &self.robot, seed),
            ProblemClass::Trap => gen_trap_with(&self.trap, &self.robot, seed),
        }
    }
}

/// Returns `env` unchanged if it is free at start and goal and grid-solvable
/// at [`SOLVABILITY_RESOLUTION`] with robot-radius dilation.
pub fn ensure_solvable(env: Environment, robot: &RobotSpec) -> Result<Environment, GenError> {
    if env.validate(robot.radius).is_err() {
        return Err(GenError::Unsolvable);
    }
    let grid = rasterize(&env, SOLVABILITY_RESOLUTION)?;
    if grid_path_exists(&grid, env.start, env.goal, robot.radius) {
        Ok(env)
    } else {
        Err(GenError::Unsolvable)
    }
}

fn with_retries(
    seed: u64,
    robot: &RobotSpec,
    mut build: impl FnMut(&mut ChaCha8Rng) -> Environment,
) -> Result<Environment, GenError> {
    for attempt in 0..MAX_ATTEMPTS {
        let s = if attempt == 0 { seed } else { split_seed(seed, attempt) };
        let env = build(&mut rng_from_seed(s)).canonicalize();
        match ensure_solvable(env, robot) {
            Ok(env) => return Ok(env),
            Err(GenError::Unsolvable) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(GenError::Exhausted(MAX_ATTEMPTS))
}

fn keeps_out(env: &Environment, o: &Obstacle) -> bool {
    o.distance_to_point(env.start) > KEEP_OUT_RADIUS && o.distance_to_point(env.goal) > KEEP_OUT_RADIUS
}

pub fn gen_curves(p: &CurvesParams, seed: u64) -> Result<Environment, GenError> {
    gen_curves_with(p, &RobotSpec::default(), seed)
}

pub fn gen_random(p: &RandomParams, seed: u64) -> Result<Environment, GenError> {
    gen_random_with(p, &RobotSpec::default(), seed)
}

pub fn gen_trap(p: &TrapParams, seed: u64) -> Result<Environment, GenError> {
    gen_trap_with(p, &RobotSpec::default(), seed)
}

/// Angular interval around the start-goal direction where the circle of
/// radius `r` about the start keeps `margin` clearance from the bounds.
fn usable_arc(env: &Environment, r: f64, margin: f64) -> Option<(f64, f64)> {
    let inside = |th: f64| {
        let p = env.start + Point2::new(th.cos(), th.sin()) * r;
        env.bounds.interior_clearance(p) >= margin
    };
    if !inside(FRAC_PI_4) {
        return None;
    }
    let step = 1e-3;
    let mut lo = FRAC_PI_4;
    while lo - step > -PI && inside(lo - step) {
        lo -= step;
    }
    let mut hi = FRAC_PI_4;
    while hi + step < PI && inside(hi + step) {
        hi += step;
    }
    Some((lo, hi))
}

/// Rectangle covering the chord from `a` to `b`, extended by `ext_a`/`ext_b` past each end.
fn chord_rect(a: Point2, b: Point2, ext_a: f64, ext_b: f64, thickness: f64) -> Obstacle {
    let d = b - a;
    let len = d.norm();
    let dir = d * (1.0 / len);
    let a2 = a - dir * ext_a;
    let b2 = b + dir * ext_b;
    let c = a2.lerp(b2, 0.5);
    Obstacle::rect(c.x, c.y, len + ext_a + ext_b, thickness, dir.y.atan2(dir.x))
}

pub fn gen_curves_with(p: &CurvesParams, robot: &RobotSpec, seed: u64) -> Result<Environment, GenError> {
    if p.n_curves == 0 {
        return Err(GenError::InvalidParams("n_curves must be at least 1".into()));
    }
    if p.gap_width <= 2.0 * robot.radius {
        return Err(GenError::InvalidParams("gap_width must exceed the robot diameter".into()));
    }
    if p.segments_per_curve < 2 || !(p.separation > 0.0) || !(p.thickness > 0.0) || p.jitter < 0.0 {
        return Err(GenError::InvalidParams("curve geometry out of range".into()));
    }
    with_retries(seed, robot, |rng| {
        let mut env = Environment::empty(ProblemClass::Curves);
        let goal_dist = env.start.dist(env.goal);
        for i in 0..p.n_curves {
            let jr = if p.jitter > 0.0 { rng.gen_range(-p.jitter..=p.jitter) } else { 0.0 };
            let r = p.separation * (i + 1) as f64 + jr;
            if r <= KEEP_OUT_RADIUS + p.thickness || r >= goal_dist - KEEP_OUT_RADIUS - p.thickness {
                continue;
            }
            let half_gap = 0.5 * p.gap_width / r;
            let margin = 0.5 * p.gap_width + 2.0 * robot.radius;
            let Some((use_lo, use_hi)) = usable_arc(&env, r, margin) else {
                continue;
            };
            let gap_center = if p.gap_slots == 0 {
                rng.gen_range(use_lo..=use_hi)
            } else {
                let k = rng.gen_range(0..p.gap_slots);
                let jt = if p.jitter > 0.0 { rng.gen_range(-p.jitter..=p.jitter) / r } else { 0.0 };
                (use_lo + (use_hi - use_lo) * (k as f64 + 0.5) / p.gap_slots as f64 + jt).clamp(use_lo, use_hi)
            };
            // the wall runs past the bounds on both sides so nothing slips around its ends
            let (wall_lo, wall_hi) = usable_arc(&env, r, 0.0).unwrap_or((use_lo, use_hi));
            let overrun = 3.0 / r;
            let pieces = [
                (wall_lo - overrun, gap_center - half_gap),
                (gap_center + half_gap, wall_hi + overrun),
            ];
            let total: f64 = pieces.iter().map(|(a, b)| (b - a).max(0.0)).sum();
            let n_first = ((p.segments_per_curve as f64 * (pieces[0].1 - pieces[0].0).max(0.0) / total).round()
                as usize)
                .clamp(1, p.segments_per_curve - 1);
            let counts = [n_first, p.segments_per_curve - n_first];
            for (side, ((a0, a1), n)) in pieces.iter().zip(counts).enumerate() {
                if a1 <= a0 {
                    continue;
                }
                let at = |th: f64| env.start + Point2::new(th.cos(), th.sin()) * r;
                for j in 0..n {
                    let ta = a0 + (a1 - a0) * j as f64 / n as f64;
                    let tb = a0 + (a1 - a0) * (j + 1) as f64 / n as f64;
                    // overlap at joints; flush at the gap
                    let gap_end_a = side == 1 && j == 0;
                    let gap_end_b = side == 0 && j + 1 == n;
                    let ext = 0.5 * p.thickness;
                    env.obstacles.push(chord_rect(
                        at(ta),
                        at(tb),
                        if gap_end_a { 0.0 } else { ext },
                        if gap_end_b { 0.0 } else { ext },
                        p.thickness,
                    ));
                }
            }
        }
        env
    })
}

pub fn gen_random_with(p: &RandomParams, robot: &RobotSpec, seed: u64) -> Result<Environment, GenError> {
    if !(0.0..=0.4).contains(&p.density) {
        return Err(GenError::InvalidParams("density must lie in [0, 0.4]".into()));
    }
    if !(p.size_range.0 > 0.0 && p.size_range.1 >= p.size_range.0) || !(0.0..=1.0).contains(&p.circle_fraction) {
        return Err(GenError::InvalidParams("bad obstacle size range or circle fraction".into()));
    }
    with_retries(seed, robot, |rng| {
        let mut env = Environment::empty(ProblemClass::Random);
        if p.density == 0.0 {
            return env;
        }
        let mut coverage = CoverageRaster::new(&env, 0.25);
        let mut tries = 0;
        while coverage.fraction() < p.density && tries < 100_000 {
            tries += 1;
            let o = random_obstacle(rng, &env, p.size_range, p.circle_fraction);
            if !keeps_out(&env, &o) {
                continue;
            }
            coverage.add(&o);
            env.obstacles.push(o);
        }
        env
    })
}

fn random_obstacle(rng: &mut ChaCha8Rng, env: &Environment, size: (f64, f64), circle_fraction: f64) -> Obstacle {
    let b = env.bounds;
    let c = Point2::new(rng.gen_range(b.min.x..b.max.x), rng.gen_range(b.min.y..b.max.y));
    let is_circle = rng.gen_bool(circle_fraction);
    if is_circle {
        let d = sz_draw(rng, size);
        Obstacle::circle(c.x, c.y, 0.5 * d)
    } else {
        let w = sz_draw(rng, size);
        let h = sz_draw(rng, size);
        Obstacle::rect(c.x, c.y, w, h, rng.gen_range(-PI..PI))
    }
}

fn sz_draw(rng: &mut ChaCha8Rng, size: (f64, f64)) -> f64 {
    if size.1 > size.0 {
        rng.gen_range(size.0..=size.1)
    } else {
        size.0
    }
}

/// Fine raster tracking the union area of placed obstacles.
struct CoverageRaster {
    grid: crate::geom::OccupancyGrid,
    occupied: usize,
}

impl CoverageRaster {
    fn new(env: &Environment, res: f64) -> Self {
        let empty = Environment {
            obstacles: Vec::new(),
            ..env.clone()
        };
        let grid = rasterize(&empty, res).expect("canonical bounds rasterize");
        Self { grid, occupied: 0 }
    }

    fn fraction(&self) -> f64 {
        self.occupied as f64 / (self.grid.width * self.grid.height) as f64
    }

    fn add(&mut self, o: &Obstacle) {
        let g = &mut self.grid;
        let res = g.resolution();
        let origin = g.origin();
        let bb = o.aabb();
        let x0 = (((bb.min.x - origin.x) / res).floor() as i64).max(0) as usize;
        let y0 = (((bb.min.y - origin.y) / res).floor() as i64).max(0) as usize;
        let x1 = (((bb.max.x - origin.x) / res).ceil() as i64).clamp(0, g.width as i64) as usize;
        let y1 = (((bb.max.y - origin.y) / res).ceil() as i64).clamp(0, g.height as i64) as usize;
        for iy in y0..y1 {
            for ix in x0..x1 {
                if !g.get(ix, iy) && o.distance_to_point(g.cell_center(ix, iy)) <= 0.0 {
                    g.set(ix, iy, true);
                    self.occupied += 1;
                }
            }
        }
    }
}

pub fn gen_trap_with(p: &TrapParams, robot: &RobotSpec, seed: u64) -> Result<Environment, GenError> {
    if p.trap_width <= 2.0 * robot.radius || !(p.trap_depth > 0.0) || !(p.wall_thickness > 0.0) || p.placement_jitter < 0.0
    {
        return Err(GenError::InvalidParams("trap geometry out of range".into()));
    }
    with_retries(seed, robot, |rng| {
        let mut env = Environment::empty(ProblemClass::Trap);
        let mid = env.start.lerp(env.goal, 0.5);
        let (jx, jy, ja) = if p.placement_jitter > 0.0 {
            let j = p.placement_jitter;
            (
                rng.gen_range(-j..=j),
                rng.gen_range(-j..=j),
                rng.gen_range(-j..=j) * 0.05,
            )
        } else {
            (0.0, 0.0, 0.0)
        };
        let center = mid + Point2::new(jx, jy);
        let axis = FRAC_PI_4 + ja;
        let d = Point2::new(axis.cos(), axis.sin());
        let n = d.rotate(FRAC_PI_2);
        let t = p.wall_thickness;
        // back wall toward the goal, side walls open toward the start
        let back = center + d * (0.5 * p.trap_depth);
        env.obstacles.push(Obstacle::rect(back.x, back.y, p.trap_width + t, t, axis + FRAC_PI_2));
        for sign in [-1.0, 1.0] {
            let c = center + n * (sign * 0.5 * p.trap_width);
            env.obstacles.push(Obstacle::rect(c.x, c.y, p.trap_depth + t, t, axis));
        }
        let mut placed = 0;
        let mut tries = 0;
        while placed < p.n_scatter && tries < 10_000 {
            tries += 1;
            let o = random_obstacle(rng, &env, (0.5, 1.5), 0.5);
            if keeps_out(&env, &o) {
                env.obstacles.push(o);
                placed += 1;
            }
        }
        env
    })
}
