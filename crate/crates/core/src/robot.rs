//! Unicycle robot model, motion plans and plan validation.

use crate::geom::{
    wrap_angle, CollisionChecker, Environment, Point2, CANONICAL_START, CANONICAL_START_HEADING,
};

/// Integration invariant tolerance for stored plans.
pub const PLAN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RobotError {
    #[error("control list is empty")]
    EmptyControls,
    #[error("plan state {0} does not follow from its control")]
    CorruptPlan(usize),
    #[error("control {0} exceeds the robot's velocity bounds")]
    ControlOutOfBounds(usize),
    #[error("time step must be positive")]
    BadTimeStep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotSpec {
    pub radius: f64,
    pub v_max: f64,
    pub omega_max: f64,
}

impl Default for RobotSpec {
    fn default() -> Self {
        Self {
            radius: 0.5,
            v_max: 3.0,
            omega_max: 1.5,
        }
    }
}

impl RobotSpec {
    pub fn admits(&self, u: Control) -> bool {
        u.v.abs() <= self.v_max && u.omega.abs() <= self.omega_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl RobotState {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn canonical_start() -> Self {
        Self::new(CANONICAL_START.x, CANONICAL_START.y, CANONICAL_START_HEADING)
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    fn close_to(&self, other: &RobotState, tol: f64) -> bool {
        (self.x - other.x).abs() <= tol
            && (self.y - other.y).abs() <= tol
            && wrap_angle(self.theta - other.theta).abs() <= tol
    }
}

/// Commanded linear and angular velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Control {
    pub v: f64,
    pub omega: f64,
}

impl Control {
    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }
}

/// Exact unicycle integration of `u` held for `dt`.
pub fn step(s: RobotState, u: Control, dt: f64) -> RobotState {
    if u.omega.abs() < 1e-9 {
        let (sin, cos) = s.theta.sin_cos();
        RobotState {
            x: s.x + u.v * dt * cos,
            y: s.y + u.v * dt * sin,
            theta: wrap_angle(s.theta + u.omega * dt),
        }
    } else {
        let th1 = s.theta + u.omega * dt;
        let r = u.v / u.omega;
        RobotState {
            x: s.x + r * (th1.sin() - s.theta.sin()),
            y: s.y - r * (th1.cos() - s.theta.cos()),
            theta: wrap_angle(th1),
        }
    }
}

/// Euclidean distance check against a closed goal ball; heading is ignored.
pub fn goal_reached(s: &RobotState, goal: Point2, tol: f64) -> bool {
    s.position().dist(goal) <= tol
}

/// A timed sequence of controls and the states they produce.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionPlan {
    pub dt: f64,
    pub start: RobotState,
    pub steps: Vec<(Control, RobotState)>,
    pub spec: RobotSpec,
}

impl MotionPlan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn controls(&self) -> Vec<Control> {
        self.steps.iter().map(|(u, _)| *u).collect()
    }

    pub fn states(&self) -> impl Iterator<Item = &RobotState> + '_ {
        self.steps.iter().map(|(_, s)| s)
    }

    pub fn final_state(&self) -> Option<&RobotState> {
        self.steps.last().map(|(_, s)| s)
    }

    /// Total path length of the chords between consecutive states.
    pub fn path_length(&self) -> f64 {
        let mut prev = self.start.position();
        let mut total = 0.0;
        for s in self.states() {
            total += prev.dist(s.position());
            prev = s.position();
        }
        total
    }

    /// Verifies the integration invariant and the control bounds.
    pub fn check_integrity(&self) -> Result<(), RobotError> {
        if self.steps.is_empty() {
            return Err(RobotError::EmptyControls);
        }
        if !(self.dt > 0.0) {
            return Err(RobotError::BadTimeStep);
        }
        let mut prev = self.start;
        for (i, (u, s)) in self.steps.iter().enumerate() {
            if !self.spec.admits(*u) {
                return Err(RobotError::ControlOutOfBounds(i));
            }
            let expected = step(prev, *u, self.dt);
            if !expected.close_to(s, PLAN_TOLERANCE) {
                return Err(RobotError::CorruptPlan(i));
            }
            prev = *s;
        }
        Ok(())
    }
}

/// Integrates `controls` from `start`, producing a plan that satisfies its own invariant.
pub fn rollout(
    start: RobotState,
    controls: &[Control],
    dt: f64,
    spec: RobotSpec,
) -> Result<MotionPlan, RobotError> {
    if controls.is_empty() {
        return Err(RobotError::EmptyControls);
    }
    if !(dt > 0.0) {
        return Err(RobotError::BadTimeStep);
    }
    let mut steps = Vec::with_capacity(controls.len());
    let mut s = start;
    for &u in controls {
        s = step(s, u, dt);
        steps.push((u, s));
    }
    Ok(MotionPlan {
        dt,
        start,
        steps,
        spec,
    })
}

/// Number of chords needed so the sagitta of each piece of the arc stays below `radius / 4`.
fn chord_pieces(u: Control, dt: f64, radius: f64) -> usize {
    if u.omega.abs() < 1e-9 || u.v == 0.0 {
        return 1;
    }
    let rho = (u.v / u.omega).abs();
    let sweep = (u.omega * dt).abs();
    let limit = radius / 4.0;
    let mut n = 1usize;
    while rho * (1.0 - (sweep / (2.0 * n as f64)).cos()) >= limit {
        n *= 2;
    }
    n
}

/// Collision test for one integration step, shared by validation and the planners
/// so that anything a planner accepts also validates.
pub fn step_in_collision(
    checker: &CollisionChecker<'_>,
    from: RobotState,
    u: Control,
    dt: f64,
    to: RobotState,
    radius: f64,
) -> bool {
    let n = chord_pieces(u, dt, radius);
    let mut a = from.position();
    for j in 1..=n {
        let b = if j == n {
            to.position()
        } else {
            step(from, u, dt * j as f64 / n as f64).position()
        };
        if checker.segment_in_collision(a, b, radius) {
            return true;
        }
        a = b;
    }
    false
}

/// True iff every step of `plan` is collision-free at the robot radius and the
/// final state reaches the goal ball. A plan that breaks its own integration
/// invariant is an error, not merely invalid.
pub fn plan_valid(env: &Environment, plan: &MotionPlan, goal_tol: f64) -> Result<bool, RobotError> {
    plan.check_integrity()?;
    let checker = CollisionChecker::new(env);
    Ok(plan_valid_with(&checker, plan, goal_tol))
}

/// [`plan_valid`] for a plan already known to be internally consistent.
pub fn plan_valid_with(checker: &CollisionChecker<'_>, plan: &MotionPlan, goal_tol: f64) -> bool {
    let radius = plan.spec.radius;
    let Some(last) = plan.final_state() else {
        return false;
    };
    if !goal_reached(last, checker.env().goal, goal_tol) {
        return false;
    }
    if checker.point_in_collision(plan.start.position(), radius) {
        return false;
    }
    let mut prev = plan.start;
    for &(u, s) in &plan.steps {
        if step_in_collision(checker, prev, u, plan.dt, s, radius) {
            return false;
        }
        prev = s;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Obstacle, ProblemClass, GOAL_TOLERANCE};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn close(a: RobotState, b: RobotState, tol: f64) -> bool {
        a.close_to(&b, tol)
    }

    #[test]
    fn straight_line_step() {
        let s = step(RobotState::new(0.0, 0.0, 0.0), Control::new(1.0, 0.0), 1.0);
        assert!(close(s, RobotState::new(1.0, 0.0, 0.0), 1e-15));
    }

    #[test]
    fn rotate_in_place() {
        let s = step(RobotState::new(0.0, 0.0, 0.0), Control::new(0.0, 1.0), 1.0);
        assert!(close(s, RobotState::new(0.0, 0.0, 1.0), 1e-15));
    }

    #[test]
    fn quarter_arc_matches_closed_form_and_euler() {
        let s = step(RobotState::new(0.0, 0.0, 0.0), Control::new(1.0, FRAC_PI_2), 1.0);
        let expected = RobotState::new(2.0 / PI, 2.0 / PI, FRAC_PI_2);
        assert!(close(s, expected, 1e-12));
        // 10^6-substep forward Euler
        let n = 1_000_000;
        let h = 1.0 / n as f64;
        let (mut x, mut y, mut th) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..n {
            x += h * th.cos();
            y += h * th.sin();
            th += FRAC_PI_2 * h;
        }
        assert!((x - s.x).abs() < 1e-5 && (y - s.y).abs() < 1e-5);
    }

    #[test]
    fn step_is_reversible() {
        let s0 = RobotState::new(3.0, -2.0, 2.9);
        for &(v, w) in &[(2.5, 1.2), (-1.0, 0.3), (3.0, 0.0), (0.0, -1.5), (1.0, 1e-12)] {
            let s1 = step(s0, Control::new(v, w), 0.1);
            let back = step(s1, Control::new(-v, -w), 0.1);
            assert!(close(back, s0, 1e-9), "{v} {w}");
        }
    }

    #[test]
    fn goal_ball_is_closed() {
        let g = Point2::new(50.0, 50.0);
        assert!(goal_reached(&RobotState::new(50.0, 50.0, 0.0), g, 1.0));
        assert!(goal_reached(&RobotState::new(51.0, 50.0, 0.0), g, 1.0));
        assert!(!goal_reached(&RobotState::new(51.0 + 1e-9, 50.0, 0.0), g, 1.0));
    }

    fn straight_plan() -> MotionPlan {
        // 70.71 m along the diagonal at 3 m/s, then trimmed onto the goal ball
        let n = (CANONICAL_DIAG / 0.3).ceil() as usize - 2;
        rollout(
            RobotState::canonical_start(),
            &vec![Control::new(3.0, 0.0); n],
            0.1,
            RobotSpec::default(),
        )
        .unwrap()
    }

    const CANONICAL_DIAG: f64 = 70.710_678_118_654_76;

    #[test]
    fn rollout_rejects_empty() {
        assert_eq!(
            rollout(RobotState::canonical_start(), &[], 0.1, RobotSpec::default()),
            Err(RobotError::EmptyControls)
        );
    }

    #[test]
    fn rollout_single_step_and_idempotent() {
        let p = rollout(RobotState::canonical_start(), &[Control::new(1.0, 0.0)], 0.1, RobotSpec::default()).unwrap();
        assert_eq!(p.len(), 1);
        let plan = straight_plan();
        plan.check_integrity().unwrap();
        let again = rollout(plan.start, &plan.controls(), plan.dt, plan.spec).unwrap();
        assert_eq!(again, plan);
    }

    #[test]
    fn valid_in_empty_env_and_blocked_by_circle() {
        let plan = straight_plan();
        let env = Environment::empty(ProblemClass::Curves);
        assert!(plan_valid(&env, &plan, GOAL_TOLERANCE).unwrap());
        let mid = plan.steps[plan.len() / 2].1;
        let blocked = Environment::with_obstacles(ProblemClass::Curves, vec![Obstacle::circle(mid.x, mid.y, 0.5)]);
        assert!(!plan_valid(&blocked, &plan, GOAL_TOLERANCE).unwrap());
    }

    #[test]
    fn grazing_contact_is_invalid() {
        // drive along y = 0 (exact in floating point) toward a goal at (30, 0)
        let plan = rollout(
            RobotState::new(0.0, 0.0, 0.0),
            &vec![Control::new(3.0, 0.0); 100],
            0.1,
            RobotSpec::default(),
        )
        .unwrap();
        let mut env = Environment::empty(ProblemClass::Curves);
        env.start = Point2::new(0.0, 0.0);
        env.goal = Point2::new(30.0, 0.0);
        assert!(plan_valid(&env, &plan, GOAL_TOLERANCE).unwrap());
        // a circle of radius 0.5 centered 1.0 above the path has clearance exactly 0.5 = radius
        env.obstacles = vec![Obstacle::circle(15.0, 1.0, 0.5)];
        assert!(!plan_valid(&env, &plan, GOAL_TOLERANCE).unwrap());
        env.obstacles = vec![Obstacle::circle(15.0, 1.0 + 1e-9, 0.5)];
        assert!(plan_valid(&env, &plan, GOAL_TOLERANCE).unwrap());
    }

    #[test]
    fn corrupt_plan_is_an_error() {
        let mut plan = straight_plan();
        plan.steps[5].1.x += 1e-6;
        assert_eq!(
            plan_valid(&Environment::empty(ProblemClass::Curves), &plan, 1.0),
            Err(RobotError::CorruptPlan(5))
        );
    }

    #[test]
    fn arc_length_consistency() {
        for &(v, w) in &[(3.0, 1.5), (-2.0, 0.7), (1.0, 0.0)] {
            let s0 = RobotState::new(1.0, 1.0, FRAC_PI_4);
            // fine chords approximate arc length
            let n = 10_000;
            let mut prev = s0;
            let mut len = 0.0;
            for j in 1..=n {
                let s = step(s0, Control::new(v, w), 0.1 * j as f64 / n as f64);
                len += prev.position().dist(s.position());
                prev = s;
            }
            assert!((len - v.abs() * 0.1).abs() < 1e-9);
        }
    }

    #[test]
    fn chord_subdivision_bounds_sagitta() {
        let u = Control::new(3.0, 0.01);
        assert_eq!(chord_pieces(u, 0.1, 0.5), 1);
        // very long step on a tight arc needs subdivision
        assert!(chord_pieces(Control::new(3.0, 1.5), 4.0, 0.5) > 1);
    }
}
