use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;

use super::HarnessError;
use crate::geom::{CollisionChecker, Environment, GOAL_TOLERANCE};
use crate::memory::MemoryStore;
use crate::planners::{PlanResult, PlanStatus, PlannerConfig, PlannerKind, SamplingBias};
use crate::robot::{plan_valid_with, MotionPlan, RobotSpec};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntegrationMode {
    Baseline,
    ClosedBox { k: usize },
    OpenBox { k: usize },
    /// Open-box integration fed with uniformly drawn stored plans instead of
    /// retrieved ones.
    AblationRandom { k: usize },
}

impl IntegrationMode {
    pub fn k(&self) -> usize {
        match *self {
            IntegrationMode::Baseline => 0,
            IntegrationMode::ClosedBox { k } | IntegrationMode::OpenBox { k } | IntegrationMode::AblationRandom { k } => k,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            IntegrationMode::Baseline => "baseline",
            IntegrationMode::ClosedBox { .. } => "closed",
            IntegrationMode::OpenBox { .. } => "open",
            IntegrationMode::AblationRandom { .. } => "random",
        }
    }

    pub fn needs_store(&self) -> bool {
        *self != IntegrationMode::Baseline
    }
}

impl fmt::Display for IntegrationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegrationMode::Baseline => f.write_str("baseline"),
            m => write!(f, "{}_{}", m.name(), m.k()),
        }
    }
}

impl FromStr for IntegrationMode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HarnessError::Config(format!("unknown mode `{s}`"));
        if s == "baseline" {
            return Ok(IntegrationMode::Baseline);
        }
        let (name, k) = s.rsplit_once('_').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        match name {
            "closed" => Ok(IntegrationMode::ClosedBox { k }),
            "open" => Ok(IntegrationMode::OpenBox { k }),
            "random" => Ok(IntegrationMode::AblationRandom { k }),
            _ => Err(bad()),
        }
    }
}

/// Outcome of one integrated planning query.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeResult {
    pub result: PlanResult,
    /// A stored plan was returned without running the planner.
    pub from_memory: bool,
}

fn first_valid(env: &Environment, plans: &[&MotionPlan]) -> Option<MotionPlan> {
    let checker = CollisionChecker::new(env);
    plans
        .iter()
        .find(|p| !p.is_empty() && plan_valid_with(&checker, p, GOAL_TOLERANCE))
        .map(|p| (*p).clone())
}

fn memory_hit(plan: MotionPlan, runtime: f64) -> ModeResult {
    ModeResult {
        result: PlanResult {
            plan: Some(plan),
            status: PlanStatus::Solved,
            runtime,
            iterations: 0,
            tree_size: 0,
            fallbacks: 0,
        },
        from_memory: true,
    }
}

/// Checks `plans` in order and returns the first valid one, else runs
/// `planner` (biased along `plans` when `open`). The overhead measured from
/// `started` is added to the reported runtime.
fn with_candidates(
    started: Instant,
    planner: PlannerKind,
    plans: &[&MotionPlan],
    open: bool,
    env: &Environment,
    spec: &RobotSpec,
    cfg: &PlannerConfig,
) -> Result<ModeResult, HarnessError> {
    if let Some(p) = first_valid(env, plans) {
        return Ok(memory_hit(p, started.elapsed().as_secs_f64()));
    }
    let trajectories: Vec<MotionPlan> = plans.iter().filter(|p| !p.is_empty()).map(|p| (*p).clone()).collect();
    let bias = if open && !trajectories.is_empty() {
        Some(SamplingBias::with_defaults(trajectories)?)
    } else {
        None
    };
    let overhead = started.elapsed().as_secs_f64();
    let mut result = planner.plan(env, spec, cfg, bias.as_ref())?;
    result.runtime += overhead;
    Ok(ModeResult {
        result,
        from_memory: false,
    })
}

pub fn closed_box_plan(
    planner: PlannerKind,
    store: &MemoryStore,
    env: &Environment,
    spec: &RobotSpec,
    k: usize,
    cfg: &PlannerConfig,
) -> Result<ModeResult, HarnessError> {
    let started = Instant::now();
    let retrieved = store.retrieve(env, k)?;
    let plans: Vec<&MotionPlan> = retrieved.iter().map(|(p, _)| *p).collect();
    with_candidates(started, planner, &plans, false, env, spec, cfg)
}

pub fn open_box_plan(
    planner: PlannerKind,
    store: &MemoryStore,
    env: &Environment,
    spec: &RobotSpec,
    k: usize,
    cfg: &PlannerConfig,
) -> Result<ModeResult, HarnessError> {
    let started = Instant::now();
    let retrieved = store.retrieve(env, k)?;
    let plans: Vec<&MotionPlan> = retrieved.iter().map(|(p, _)| *p).collect();
    with_candidates(started, planner, &plans, true, env, spec, cfg)
}

/// `k` distinct stored plans drawn uniformly with `seed`.
pub fn random_plans(store: &MemoryStore, k: usize, seed: u64) -> Result<Vec<&MotionPlan>, HarnessError> {
    if k == 0 || k > store.len() {
        return Err(crate::memory::MemoryError::BadK(k, store.len()).into());
    }
    let mut rng = rng_from_seed(seed);
    Ok(sample(&mut rng, store.len(), k).into_iter().map(|i| &store.plans[i]).collect())
}

/// Runs `planner` under `mode`. `select_seed` drives the random selection of
/// the ablation mode and is ignored otherwise.
pub fn integrated_plan(
    mode: IntegrationMode,
    planner: PlannerKind,
    store: Option<&MemoryStore>,
    env: &Environment,
    spec: &RobotSpec,
    cfg: &PlannerConfig,
    select_seed: u64,
) -> Result<ModeResult, HarnessError> {
    let need = || HarnessError::Config(format!("mode {mode} needs a memory store"));
    match mode {
        IntegrationMode::Baseline => Ok(ModeResult {
            result: planner.plan(env, spec, cfg, None)?,
            from_memory: false,
        }),
        IntegrationMode::ClosedBox { k } => closed_box_plan(planner, store.ok_or_else(need)?, env, spec, k, cfg),
        IntegrationMode::OpenBox { k } => open_box_plan(planner, store.ok_or_else(need)?, env, spec, k, cfg),
        IntegrationMode::AblationRandom { k } => {
            let started = Instant::now();
            let plans = random_plans(store.ok_or_else(need)?, k, select_seed)?;
            with_candidates(started, planner, &plans, true, env, spec, cfg)
        }
    }
}
