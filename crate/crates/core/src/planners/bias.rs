use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::PlanError;
use crate::geom::{Environment, Point2, GOAL_TOLERANCE};
use crate::robot::MotionPlan;

/// Where a sampled target came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetSource {
    Trajectory(usize),
    Goal,
    Uniform,
}

/// Sampling distribution biased toward retrieved plans.
///
/// Trajectory `i` is drawn with probability `weights[i]`, the goal region with
/// `b_goal` and the rest of the workspace with `b_other`. Weights must be
/// strictly decreasing in that order and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingBias {
    trajectories: Vec<MotionPlan>,
    weights: Vec<f64>,
    b_goal: f64,
    b_other: f64,
    sigma: f64,
}

pub const DEFAULT_SIGMA: f64 = 2.0;

impl SamplingBias {
    pub fn new(
        trajectories: Vec<MotionPlan>,
        weights: Vec<f64>,
        b_goal: f64,
        b_other: f64,
        sigma: f64,
    ) -> Result<Self, PlanError> {
        let bad = |m: String| Err(PlanError::InvalidBias(m));
        if trajectories.is_empty() {
            return bad("no trajectories".into());
        }
        if trajectories.len() != weights.len() {
            return bad(format!("{} trajectories but {} weights", trajectories.len(), weights.len()));
        }
        if trajectories.iter().any(MotionPlan::is_empty) {
            return bad("empty trajectory".into());
        }
        let chain: Vec<f64> = weights.iter().copied().chain([b_goal, b_other]).collect();
        if chain.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return bad("weights must be positive".into());
        }
        if chain.windows(2).any(|w| !(w[0] > w[1])) {
            return bad("weights must be strictly decreasing".into());
        }
        let total: f64 = chain.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("weights sum to {total}"));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return bad("sigma must be non-negative".into());
        }
        Ok(Self {
            trajectories,
            weights,
            b_goal,
            b_other,
            sigma,
        })
    }

    /// Default open-box weights for `k` retrieved plans. The tabulated values
    /// cover `k = 1` and `k = 5`; other sizes use [`SamplingBias::geometric`]
    /// with the `k = 5` goal and background shares.
    pub fn with_defaults(trajectories: Vec<MotionPlan>) -> Result<Self, PlanError> {
        match trajectories.len() {
            // goal share above background share, as the ordering requires
            1 => Self::new(trajectories, vec![0.70], 0.20, 0.10, DEFAULT_SIGMA),
            5 => Self::new(trajectories, vec![0.35, 0.20, 0.15, 0.10, 0.08], 0.07, 0.05, DEFAULT_SIGMA),
            _ => Self::geometric(trajectories, 0.07, 0.05),
        }
    }

    /// Geometrically decaying weights `b_i ∝ 2^-i` for `k` trajectories,
    /// leaving `b_goal` and `b_other` as given.
    pub fn geometric(trajectories: Vec<MotionPlan>, b_goal: f64, b_other: f64) -> Result<Self, PlanError> {
        let k = trajectories.len();
        let mass = 1.0 - b_goal - b_other;
        let norm: f64 = (0..k).map(|i| 0.5f64.powi(i as i32)).sum();
        let weights = (0..k).map(|i| mass * 0.5f64.powi(i as i32) / norm).collect();
        Self::new(trajectories, weights, b_goal, b_other, DEFAULT_SIGMA)
    }

    pub fn trajectories(&self) -> &[MotionPlan] {
        &self.trajectories
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn b_goal(&self) -> f64 {
        self.b_goal
    }

    pub fn b_other(&self) -> f64 {
        self.b_other
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Target distribution used by a planner: either plain goal-biased uniform
/// sampling or a [`SamplingBias`].
#[derive(Debug, Clone)]
pub struct TargetDistribution<'a> {
    bias: Option<&'a SamplingBias>,
    goal_bias: f64,
    goal: Point2,
    lo: Point2,
    hi: Point2,
    noise: Option<Normal<f64>>,
}

impl<'a> TargetDistribution<'a> {
    pub fn new(env: &Environment, goal_bias: f64, bias: Option<&'a SamplingBias>) -> Self {
        let noise = bias
            .filter(|b| b.sigma > 0.0)
            .map(|b| Normal::new(0.0, b.sigma).expect("sigma validated"));
        Self {
            bias,
            goal_bias,
            goal: env.goal,
            lo: env.bounds.min,
            hi: env.bounds.max,
            noise,
        }
    }

    pub fn uniform_point<R: Rng>(&self, rng: &mut R) -> Point2 {
        Point2::new(rng.gen_range(self.lo.x..self.hi.x), rng.gen_range(self.lo.y..self.hi.y))
    }

    pub fn goal_point<R: Rng>(&self, rng: &mut R) -> Point2 {
        let r = GOAL_TOLERANCE * rng.gen::<f64>().sqrt();
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        Point2::new(self.goal.x + r * a.cos(), self.goal.y + r * a.sin())
    }

    /// A random intermediate state of trajectory `i` plus isotropic noise.
    pub fn trajectory_point<R: Rng>(&self, rng: &mut R, i: usize) -> Point2 {
        let bias = self.bias.expect("trajectory sampling needs a bias");
        let plan = &bias.trajectories[i];
        let s = plan.steps[rng.gen_range(0..plan.len())].1;
        match &self.noise {
            Some(n) => Point2::new(s.x + n.sample(rng), s.y + n.sample(rng)),
            None => s.position(),
        }
    }

    fn pick_source<R: Rng>(&self, rng: &mut R) -> TargetSource {
        let u: f64 = rng.gen();
        match self.bias {
            None => {
                if u < self.goal_bias {
                    TargetSource::Goal
                } else {
                    TargetSource::Uniform
                }
            }
            Some(b) => {
                let mut acc = 0.0;
                for (i, w) in b.weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return TargetSource::Trajectory(i);
                    }
                }
                if u < acc + b.b_goal {
                    TargetSource::Goal
                } else {
                    TargetSource::Uniform
                }
            }
        }
    }

    /// Steering target for a tree expansion.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> (Point2, TargetSource) {
        let src = self.pick_source(rng);
        let p = match src {
            TargetSource::Trajectory(i) => self.trajectory_point(rng, i),
            TargetSource::Goal => self.goal_point(rng),
            TargetSource::Uniform => self.uniform_point(rng),
        };
        (p, src)
    }

    /// Roadmap vertex candidate: trajectory states with their weights, uniform otherwise.
    pub fn sample_roadmap<R: Rng>(&self, rng: &mut R) -> (Point2, TargetSource) {
        match self.pick_source(rng) {
            TargetSource::Trajectory(i) => (self.trajectory_point(rng, i), TargetSource::Trajectory(i)),
            _ => (self.uniform_point(rng), TargetSource::Uniform),
        }
    }

    pub fn is_biased(&self) -> bool {
        self.bias.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ProblemClass;
    use crate::robot::{rollout, Control, RobotSpec, RobotState};
    use crate::seed::rng_from_seed;

    fn plan(n: usize) -> MotionPlan {
        rollout(RobotState::canonical_start(), &vec![Control::new(2.0, 0.1); n], 0.1, RobotSpec::default()).unwrap()
    }

    #[test]
    fn rejects_bad_orderings() {
        let ok = SamplingBias::new(vec![plan(5), plan(5)], vec![0.5, 0.3], 0.15, 0.05, 1.0);
        assert!(ok.is_ok());
        assert!(SamplingBias::new(vec![plan(5), plan(5)], vec![0.3, 0.5], 0.15, 0.05, 1.0).is_err());
        assert!(SamplingBias::new(vec![plan(5)], vec![0.5], 0.4, 0.2, 1.0).is_err());
        assert!(SamplingBias::new(vec![plan(5)], vec![0.5], 0.3, 0.1, 1.0).is_err());
        assert!(SamplingBias::new(vec![plan(5)], vec![0.7], 0.2, 0.1, -1.0).is_err());
        assert!(SamplingBias::new(vec![], vec![], 0.6, 0.4, 1.0).is_err());
    }

    #[test]
    fn geometric_weights_valid() {
        let b = SamplingBias::geometric(vec![plan(3), plan(3), plan(3)], 0.1, 0.05).unwrap();
        let total: f64 = b.weights().iter().sum::<f64>() + 0.15;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn source_frequencies_match_weights() {
        let env = Environment::empty(ProblemClass::Curves);
        let b = SamplingBias::new(vec![plan(5), plan(5)], vec![0.5, 0.3], 0.15, 0.05, 1.0).unwrap();
        let dist = TargetDistribution::new(&env, 0.1, Some(&b));
        let mut rng = rng_from_seed(9);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            match dist.sample(&mut rng).1 {
                TargetSource::Trajectory(i) => counts[i] += 1,
                TargetSource::Goal => counts[2] += 1,
                TargetSource::Uniform => counts[3] += 1,
            }
        }
        for (c, w) in counts.iter().zip([0.5, 0.3, 0.15, 0.05]) {
            assert!((*c as f64 / n as f64 - w).abs() < 0.02);
        }
    }

    #[test]
    fn goal_samples_stay_in_goal_ball() {
        let env = Environment::empty(ProblemClass::Curves);
        let dist = TargetDistribution::new(&env, 0.1, None);
        let mut rng = rng_from_seed(1);
        for _ in 0..1000 {
            assert!(dist.goal_point(&mut rng).dist(env.goal) <= GOAL_TOLERANCE);
        }
    }
}
