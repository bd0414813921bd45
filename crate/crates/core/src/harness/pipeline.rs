use std::collections::HashSet;

use rand::seq::SliceRandom;

use super::integrate::{integrated_plan, IntegrationMode};
use super::io::{env_hash, Cluster};
use super::report::{Report, ReportRow};
use super::HarnessError;
use crate::envgen::GeneratorParams;
use crate::exec::{map_indexed, try_map_indexed, with_jobs};
use crate::geom::{Environment, ProblemClass, GOAL_TOLERANCE};
use crate::hallucinate::{augment_batch, generate_negative, AugmentParams};
use crate::memory::{build_store, train, GridTensor, MemoryStore, TrainHyper};
use crate::planners::{PlannerConfig, PlannerKind};
use crate::robot::{plan_valid, MotionPlan, RobotSpec};
use crate::seed::{rng_from_seed, split_seed, stage_seed};

/// Experience levels of the sweep.
pub const SWEEP_LEVELS: [usize; 5] = [20, 40, 60, 80, 100];

/// Expansion budget used when iterations are the cost measure and no
/// explicit budget is configured.
pub const DEFAULT_ITERATION_BUDGET: u64 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostMeasure {
    /// Milliseconds of wall time; unsolved runs are charged the time limit.
    WallTime,
    /// Tree expansions; unsolved runs are charged the iteration budget. The
    /// search then runs without a clock, so every column is reproducible.
    Iterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub classes: Vec<ProblemClass>,
    /// Adds the condition trained and tested on all classes together.
    pub include_combined: bool,
    pub planners: Vec<PlannerKind>,
    pub modes: Vec<IntegrationMode>,
    /// Planner that solves the experience problems.
    pub experience_planner: PlannerKind,
    pub n_experience: usize,
    /// Environments per cluster, the original problem included.
    pub n_augment: usize,
    /// Fraction of each cluster held out for retrieval accuracy.
    pub holdout: f64,
    pub n_test: usize,
    pub seed: u64,
    pub planner: PlannerConfig,
    pub train: TrainHyper,
    pub augment: AugmentParams,
    pub generator: GeneratorParams,
    pub robot: RobotSpec,
    pub cost: CostMeasure,
    /// Trains with the negative cluster (empty plan) as well.
    pub include_negative: bool,
    /// k of the closed-box mode used by the experience sweep.
    pub sweep_k: usize,
    pub jobs: Option<usize>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            classes: ProblemClass::ALL.to_vec(),
            include_combined: true,
            planners: PlannerKind::ALL.to_vec(),
            modes: vec![
                IntegrationMode::Baseline,
                IntegrationMode::ClosedBox { k: 1 },
                IntegrationMode::ClosedBox { k: 5 },
                IntegrationMode::OpenBox { k: 1 },
                IntegrationMode::OpenBox { k: 5 },
            ],
            experience_planner: PlannerKind::Gust,
            n_experience: 100,
            n_augment: 200,
            holdout: 0.1,
            n_test: 500,
            seed: 0,
            planner: PlannerConfig::default(),
            train: TrainHyper::default(),
            augment: AugmentParams::default(),
            generator: GeneratorParams::default(),
            robot: RobotSpec::default(),
            cost: CostMeasure::WallTime,
            include_negative: false,
            sweep_k: 5,
            jobs: None,
        }
    }
}

impl BenchmarkConfig {
    /// 100 plans with 1000 environments each, 10,000 test problems.
    pub fn paper_scale() -> Self {
        Self {
            n_augment: 1000,
            n_test: 10_000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.n_experience < 2 {
            return bad("n_experience must be at least 2".into());
        }
        if self.n_augment < 2 {
            return bad("n_augment must be at least 2".into());
        }
        if self.n_test == 0 {
            return bad("n_test must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.holdout) {
            return bad("holdout must lie in [0, 1)".into());
        }
        if self.planners.is_empty() || self.modes.is_empty() {
            return bad("planner and mode sets must be non-empty".into());
        }
        if let Some(m) = self.modes.iter().find(|m| m.k() > self.n_experience) {
            return bad(format!("mode {m} asks for more plans than n_experience"));
        }
        self.planner.validate()?;
        self.train.validate()?;
        self.augment.validate()?;
        Ok(())
    }

    /// Planner configuration used for every planning call of the pipeline.
    pub fn run_config(&self) -> PlannerConfig {
        let mut cfg = self.planner.clone();
        if self.cost == CostMeasure::Iterations {
            cfg.max_iterations = Some(cfg.max_iterations.unwrap_or(DEFAULT_ITERATION_BUDGET));
            cfg.time_limit = f64::INFINITY;
        }
        cfg
    }

    fn unsolved_cost(&self) -> f64 {
        match self.cost {
            CostMeasure::WallTime => self.planner.time_limit * 1e3,
            CostMeasure::Iterations => self.run_config().max_iterations.unwrap_or(DEFAULT_ITERATION_BUDGET) as f64,
        }
    }
}

/// Solved experience problems of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperienceSet {
    pub envs: Vec<Environment>,
    pub plans: Vec<MotionPlan>,
}

/// Generates problems of `class` and keeps the first `n_experience` that the
/// experience planner solves, in candidate order.
pub fn experience_class(cfg: &BenchmarkConfig, class: ProblemClass, seed: u64) -> Result<ExperienceSet, HarnessError> {
    let n = cfg.n_experience;
    let env_seed = stage_seed(seed, "envs");
    let plan_seed = stage_seed(seed, "plans");
    let run = cfg.run_config();
    let max_candidates = 4 * n + 16;
    let mut out = ExperienceSet {
        envs: Vec::with_capacity(n),
        plans: Vec::with_capacity(n),
    };
    let mut next = 0;
    while out.plans.len() < n {
        if next >= max_candidates {
            return Err(HarnessError::stage(
                "experience",
                format!("only {} of {n} {class} problems solved", out.plans.len()),
            ));
        }
        let batch = (n - out.plans.len()).max(8).min(max_candidates - next);
        let solved = try_map_indexed(batch, |j| -> Result<_, HarnessError> {
            let i = (next + j) as u64;
            let env = cfg.generator.generate(class, split_seed(env_seed, i))?;
            let pc = PlannerConfig {
                seed: split_seed(plan_seed, i),
                ..run.clone()
            };
            let r = cfg.experience_planner.plan(&env, &cfg.robot, &pc, None)?;
            Ok(r.plan.filter(|_| r.status == crate::planners::PlanStatus::Solved).map(|p| (env, p)))
        })?;
        next += batch;
        for (env, plan) in solved.into_iter().flatten() {
            if out.plans.len() < n {
                out.envs.push(env);
                out.plans.push(plan);
            }
        }
    }
    Ok(out)
}

/// Hallucinated clusters: each holds its original problem followed by
/// `n_augment - 1` rearrangements. With `include_negative` a last cluster
/// with the empty plan collects environments that block every plan.
pub fn augment_class(cfg: &BenchmarkConfig, exp: &ExperienceSet, seed: u64) -> Result<Vec<Cluster>, HarnessError> {
    let p = AugmentParams {
        count: cfg.n_augment - 1,
        ..cfg.augment.clone()
    };
    let pairs: Vec<(Environment, MotionPlan)> = exp.envs.iter().cloned().zip(exp.plans.iter().cloned()).collect();
    let augmented = augment_batch(&pairs, &p, stage_seed(seed, "positive"))?;
    let mut clusters: Vec<Cluster> = pairs
        .into_iter()
        .zip(augmented)
        .map(|((env, plan), rest)| {
            let mut envs = Vec::with_capacity(rest.len() + 1);
            envs.push(env);
            envs.extend(rest);
            Cluster { plan, envs }
        })
        .collect();
    if cfg.include_negative {
        let template = &exp.envs[0];
        let envs = generate_negative(
            &exp.plans,
            template,
            &AugmentParams {
                count: cfg.n_augment,
                ..cfg.augment.clone()
            },
            stage_seed(seed, "negative"),
        )?;
        let plan = MotionPlan {
            dt: exp.plans[0].dt,
            start: exp.plans[0].start,
            steps: Vec::new(),
            spec: exp.plans[0].spec,
        };
        clusters.push(Cluster { plan, envs });
    }
    Ok(clusters)
}

/// Grids of a train/held-out split.
#[derive(Debug, Clone, PartialEq)]
pub struct Holdout {
    pub train: Vec<Vec<GridTensor>>,
    /// `(cluster, grid)` pairs held out of training.
    pub test: Vec<(usize, GridTensor)>,
}

/// Holds out `frac` of each cluster's augmented members; originals always
/// stay in training.
pub fn split_holdout(clusters: &[Cluster], frac: f64, seed: u64) -> Result<Holdout, HarnessError> {
    let grids = try_map_indexed(clusters.len(), |i| -> Result<Vec<GridTensor>, HarnessError> {
        clusters[i]
            .envs
            .iter()
            .map(|e| GridTensor::from_env(e).map_err(HarnessError::from))
            .collect()
    })?;
    let mut out = Holdout {
        train: Vec::with_capacity(clusters.len()),
        test: Vec::new(),
    };
    for (c, g) in grids.into_iter().enumerate() {
        let mut idx: Vec<usize> = (1..g.len()).collect();
        idx.shuffle(&mut rng_from_seed(split_seed(seed, c as u64)));
        let n_hold = ((g.len() as f64 * frac).floor() as usize).min(idx.len());
        let held: HashSet<usize> = idx[..n_hold].iter().copied().collect();
        out.train
            .push(g.iter().enumerate().filter(|(j, _)| !held.contains(j)).map(|(_, t)| *t).collect());
        let mut held: Vec<usize> = held.into_iter().collect();
        held.sort_unstable();
        out.test.extend(held.into_iter().map(|j| (c, g[j])));
    }
    Ok(out)
}

/// Nearest-centroid accuracy on held-out grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalStats {
    pub n: usize,
    pub top1: f64,
    pub top5: f64,
}

#[derive(Debug, Clone)]
pub struct StoreOutcome {
    pub store: MemoryStore,
    pub history: Vec<f64>,
    pub retrieval: RetrievalStats,
}

/// Trains the encoder on the training split, builds the centroid store and
/// scores retrieval on the held-out grids.
pub fn train_store(cfg: &BenchmarkConfig, clusters: &[Cluster], seed: u64) -> Result<StoreOutcome, HarnessError> {
    let split = split_holdout(clusters, cfg.holdout, stage_seed(seed, "split"))?;
    let hyper = TrainHyper {
        seed: stage_seed(seed, "train"),
        ..cfg.train.clone()
    };
    let outcome = train(&split.train, &hyper)?;
    let plans = clusters.iter().map(|c| c.plan.clone()).collect();
    let store = build_store(outcome.params, &split.train, plans)?;
    let k = store.len().min(5);
    let hits = map_indexed(split.test.len(), |i| {
        let (label, g) = &split.test[i];
        let near = store.nearest_clusters(&store.encoder.encode(g), k).expect("k within store size");
        (near[0].0 == *label, near.iter().any(|(c, _)| c == label))
    });
    let n = hits.len();
    let frac = |f: fn(&(bool, bool)) -> bool| {
        if n == 0 {
            f64::NAN
        } else {
            hits.iter().filter(|h| f(h)).count() as f64 / n as f64
        }
    };
    let retrieval = RetrievalStats {
        n,
        top1: frac(|h| h.0),
        top5: frac(|h| h.1),
    };
    Ok(StoreOutcome {
        store,
        history: outcome.history,
        retrieval,
    })
}

/// `cfg.n_test` fresh problems of `class`. Candidates whose content hash is
/// in `forbidden` are skipped.
pub fn generate_test_problems(
    cfg: &BenchmarkConfig,
    class: ProblemClass,
    seed: u64,
    forbidden: &HashSet<u64>,
) -> Result<Vec<Environment>, HarnessError> {
    let mut out = Vec::with_capacity(cfg.n_test);
    let mut next = 0u64;
    while out.len() < cfg.n_test {
        let need = cfg.n_test - out.len();
        let batch = try_map_indexed(need, |j| cfg.generator.generate(class, split_seed(seed, next + j as u64)))?;
        next += need as u64;
        out.extend(batch.into_iter().filter(|e| !forbidden.contains(&env_hash(e))));
        if next > 2 * cfg.n_test as u64 + 100 {
            return Err(HarnessError::stage("test-problems", "too many collisions with training data"));
        }
    }
    Ok(out)
}

fn training_hashes(clusters: &[Cluster]) -> HashSet<u64> {
    clusters.iter().flat_map(|c| c.envs.iter().map(env_hash)).collect()
}

fn check_hygiene(tests: &[Environment], hashes: &HashSet<u64>) -> Result<(), HarnessError> {
    match tests.iter().position(|e| hashes.contains(&env_hash(e))) {
        Some(i) => Err(HarnessError::Leak(i)),
        None => Ok(()),
    }
}

/// One planning query of the evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub solved: bool,
    pub cost: f64,
    pub iterations: u64,
    pub tree_size: usize,
    /// A Solved plan that failed post-hoc validation.
    pub invalid: bool,
    pub from_memory: bool,
}

/// Runs every `(planner, mode)` pair on every problem. Problem `i` uses the
/// planner seed `split_seed(seed, i)` under all pairs, so comparisons are
/// paired. Returns one record list per pair, in problem order.
pub fn evaluate(
    cfg: &BenchmarkConfig,
    tests: &[Environment],
    store: Option<&MemoryStore>,
    pairs: &[(PlannerKind, IntegrationMode)],
    seed: u64,
) -> Result<Vec<Vec<Record>>, HarnessError> {
    let run = cfg.run_config();
    let plan_seed = stage_seed(seed, "plan");
    let select_seed = stage_seed(seed, "select");
    let per_problem = try_map_indexed(tests.len(), |i| -> Result<Vec<Record>, HarnessError> {
        let env = &tests[i];
        let pc = PlannerConfig {
            seed: split_seed(plan_seed, i as u64),
            ..run.clone()
        };
        pairs
            .iter()
            .map(|&(planner, mode)| {
                let r = integrated_plan(mode, planner, store, env, &cfg.robot, &pc, split_seed(select_seed, i as u64))?;
                let res = &r.result;
                let solved = res.solved();
                let invalid = solved
                    && !match &res.plan {
                        Some(p) => plan_valid(env, p, GOAL_TOLERANCE)?,
                        None => false,
                    };
                let cost = match cfg.cost {
                    CostMeasure::WallTime if solved => res.runtime * 1e3,
                    CostMeasure::WallTime => (res.runtime * 1e3).max(cfg.unsolved_cost()),
                    CostMeasure::Iterations if solved => res.iterations as f64,
                    CostMeasure::Iterations => cfg.unsolved_cost(),
                };
                Ok(Record {
                    solved,
                    cost,
                    iterations: res.iterations,
                    tree_size: res.tree_size,
                    invalid,
                    from_memory: r.from_memory,
                })
            })
            .collect()
    })?;
    Ok((0..pairs.len())
        .map(|p| per_problem.iter().map(|recs| recs[p]).collect())
        .collect())
}

fn pairs_of(planners: &[PlannerKind], modes: &[IntegrationMode]) -> Vec<(PlannerKind, IntegrationMode)> {
    planners.iter().flat_map(|&p| modes.iter().map(move |&m| (p, m))).collect()
}

fn rows_from(label: &str, pairs: &[(PlannerKind, IntegrationMode)], records: &[Vec<Record>]) -> Vec<ReportRow> {
    pairs
        .iter()
        .zip(records)
        .map(|(&(planner, mode), recs)| ReportRow::aggregate(label, planner, mode, recs))
        .collect()
}

/// Everything a benchmark run produces besides the report itself.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub report: Report,
    /// Per condition label.
    pub retrieval: Vec<(String, RetrievalStats)>,
    pub histories: Vec<(String, Vec<f64>)>,
}

struct ClassData {
    clusters: Vec<Cluster>,
    tests: Vec<Environment>,
}

fn prepare_class(cfg: &BenchmarkConfig, class: ProblemClass) -> Result<ClassData, HarnessError> {
    let exp = experience_class(cfg, class, stage_seed(cfg.seed, &format!("experience/{class}")))?;
    let clusters = augment_class(cfg, &exp, stage_seed(cfg.seed, &format!("augment/{class}")))?;
    let hashes = training_hashes(&clusters);
    let tests = generate_test_problems(cfg, class, stage_seed(cfg.seed, &format!("test/{class}")), &hashes)?;
    check_hygiene(&tests, &hashes)?;
    Ok(ClassData { clusters, tests })
}

/// The full matrix: every class plus, optionally, the combined condition,
/// each evaluated for every `(planner, mode)` pair.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<PipelineOutcome, HarnessError> {
    cfg.validate()?;
    with_jobs(cfg.jobs, || {
        let pairs = pairs_of(&cfg.planners, &cfg.modes);
        let needs_store = cfg.modes.iter().any(IntegrationMode::needs_store);
        let mut out = PipelineOutcome {
            report: Report::default(),
            retrieval: Vec::new(),
            histories: Vec::new(),
        };
        let mut all = Vec::new();
        for &class in &cfg.classes {
            let data = prepare_class(cfg, class)?;
            let label = class.as_str();
            let store = if needs_store {
                let s = train_store(cfg, &data.clusters, stage_seed(cfg.seed, &format!("memory/{label}")))?;
                out.retrieval.push((label.to_string(), s.retrieval));
                out.histories.push((label.to_string(), s.history));
                Some(s.store)
            } else {
                None
            };
            let records = evaluate(cfg, &data.tests, store.as_ref(), &pairs, stage_seed(cfg.seed, &format!("eval/{label}")))?;
            out.report.rows.extend(rows_from(label, &pairs, &records));
            all.push((data, records));
        }
        if cfg.include_combined && !cfg.classes.is_empty() {
            combined(cfg, &pairs, needs_store, &all, &mut out)?;
        }
        out.report.fill_ratios();
        Ok(out)
    })
}

/// One encoder and store over every class; baseline records are reused from
/// the per-class runs, which saw the same problems and seeds.
fn combined(
    cfg: &BenchmarkConfig,
    pairs: &[(PlannerKind, IntegrationMode)],
    needs_store: bool,
    all: &[(ClassData, Vec<Vec<Record>>)],
    out: &mut PipelineOutcome,
) -> Result<(), HarnessError> {
    const LABEL: &str = "all";
    let clusters: Vec<Cluster> = all.iter().flat_map(|(d, _)| d.clusters.iter().cloned()).collect();
    let store = if needs_store {
        let s = train_store(cfg, &clusters, stage_seed(cfg.seed, "memory/all"))?;
        out.retrieval.push((LABEL.to_string(), s.retrieval));
        out.histories.push((LABEL.to_string(), s.history));
        Some(s.store)
    } else {
        None
    };
    let mut records: Vec<Vec<Record>> = vec![Vec::new(); pairs.len()];
    for (class_idx, &class) in cfg.classes.iter().enumerate() {
        let (data, class_records) = &all[class_idx];
        let mm: Vec<usize> = (0..pairs.len()).filter(|&p| pairs[p].1.needs_store()).collect();
        let mm_pairs: Vec<_> = mm.iter().map(|&p| pairs[p]).collect();
        // same per-problem seeds as the class run
        let fresh = evaluate(
            cfg,
            &data.tests,
            store.as_ref(),
            &mm_pairs,
            stage_seed(cfg.seed, &format!("eval/{class}")),
        )?;
        for (p, recs) in records.iter_mut().enumerate() {
            match mm.iter().position(|&q| q == p) {
                Some(j) => recs.extend_from_slice(&fresh[j]),
                None => recs.extend_from_slice(&class_records[p]),
            }
        }
    }
    out.report.rows.extend(rows_from(LABEL, pairs, &records));
    Ok(())
}

fn single_class(cfg: &BenchmarkConfig, class: ProblemClass) -> BenchmarkConfig {
    BenchmarkConfig {
        classes: vec![class],
        include_combined: false,
        planners: vec![PlannerKind::Gust],
        ..cfg.clone()
    }
}

/// Closed-box GUST on Curves with stores built from the first `level`
/// clusters, all levels sharing one test set. Rows are labelled
/// `curves@<level>`; a baseline row uses the plain label.
pub fn sweep_levels(
    cfg: &BenchmarkConfig,
    clusters: &[Cluster],
    tests: &[Environment],
    levels: &[usize],
) -> Result<Report, HarnessError> {
    let class = ProblemClass::Curves;
    let eval_seed = stage_seed(cfg.seed, &format!("eval/{class}"));
    let base = [(PlannerKind::Gust, IntegrationMode::Baseline)];
    let mode = IntegrationMode::ClosedBox { k: cfg.sweep_k };
    let mut report = Report::default();
    let records = evaluate(cfg, tests, None, &base, eval_seed)?;
    report.rows.extend(rows_from(class.as_str(), &base, &records));
    for &level in levels {
        if level < 2 || level > clusters.len() || cfg.sweep_k > level {
            return Err(HarnessError::Config(format!("experience level {level} out of range")));
        }
        let s = train_store(cfg, &clusters[..level], stage_seed(cfg.seed, &format!("memory/sweep{level}")))?;
        let pairs = [(PlannerKind::Gust, mode)];
        let records = evaluate(cfg, tests, Some(&s.store), &pairs, eval_seed)?;
        let mut row = ReportRow::aggregate(&format!("{class}@{level}"), PlannerKind::Gust, mode, &records[0]);
        row.baseline_key = Some(class.as_str().to_string());
        report.rows.push(row);
    }
    report.fill_ratios();
    Ok(report)
}

pub fn run_experience_sweep(cfg: &BenchmarkConfig) -> Result<Report, HarnessError> {
    let top = *SWEEP_LEVELS.last().expect("levels");
    let cfg = BenchmarkConfig {
        n_experience: cfg.n_experience.max(top),
        ..single_class(cfg, ProblemClass::Curves)
    };
    cfg.validate()?;
    with_jobs(cfg.jobs, || {
        let data = prepare_class(&cfg, ProblemClass::Curves)?;
        sweep_levels(&cfg, &data.clusters, &data.tests, &SWEEP_LEVELS)
    })
}

/// Open-box GUST on Curves with retrieved plans against uniformly drawn
/// ones, k in {1, 5}, next to the baseline.
pub fn run_ablation(cfg: &BenchmarkConfig) -> Result<Report, HarnessError> {
    let cfg = BenchmarkConfig {
        modes: vec![
            IntegrationMode::Baseline,
            IntegrationMode::OpenBox { k: 1 },
            IntegrationMode::OpenBox { k: 5 },
            IntegrationMode::AblationRandom { k: 1 },
            IntegrationMode::AblationRandom { k: 5 },
        ],
        ..single_class(cfg, ProblemClass::Curves)
    };
    Ok(run_benchmark(&cfg)?.report)
}
