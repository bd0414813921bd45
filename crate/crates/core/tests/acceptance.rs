//! Acceptance run: one PASS/FAIL line per criterion. `ACCEPTANCE_ONLY=2,9`
//! restricts the run to the listed criteria. Failures are reported but only
//! change the exit status when `ACCEPTANCE_STRICT` is set.

use std::collections::HashSet;
use std::process::{Command, ExitCode};
use std::time::Instant;

use motion_memory::envgen::GeneratorParams;
use motion_memory::geom::{Environment, ProblemClass, GOAL_TOLERANCE};
use motion_memory::hallucinate::{augment_batch, generate_negative, AugmentParams};
use motion_memory::harness::io::{env_hash, Cluster};
use motion_memory::harness::{
    evaluate, experience_class, generate_test_problems, train_store, BenchmarkConfig, ExperienceSet,
    IntegrationMode, Record, StoreOutcome,
};
use motion_memory::memory::{grad_check, param_blocks, EncoderParams, GridTensor, Triplet};
use motion_memory::planners::{PlannerConfig, PlannerKind, SamplingBias, TargetDistribution, TargetSource};
use motion_memory::robot::{plan_valid, rollout, Control, RobotSpec, RobotState};
use motion_memory::seed::{rng_from_seed, split_seed, stage_seed};

const SEED: u64 = 2024;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mean_cost(recs: &[Record]) -> f64 {
    recs.iter().map(|r| r.cost).sum::<f64>() / recs.len() as f64
}

/// Curves experience, its hallucinated clusters, the trained store and the
/// evaluation records shared by criteria 1 and 3 to 7.
struct Curves {
    cfg: BenchmarkConfig,
    exp: ExperienceSet,
    clusters: Vec<Cluster>,
    positives_ok: (usize, usize),
    memory: Option<StoreOutcome>,
    tests: Vec<Environment>,
    records: Vec<(IntegrationMode, Vec<Record>)>,
}

impl Curves {
    fn build() -> Self {
        let cfg = BenchmarkConfig {
            classes: vec![ProblemClass::Curves],
            include_combined: false,
            seed: SEED,
            ..BenchmarkConfig::default()
        };
        let t = Instant::now();
        let exp = experience_class(&cfg, ProblemClass::Curves, stage_seed(SEED, "experience/curves")).unwrap();
        // 200 rearrangements per plan: all of them are checked, the first
        // n_augment - 1 join the original in each cluster
        let p = AugmentParams {
            count: 200,
            ..cfg.augment.clone()
        };
        let pairs: Vec<_> = exp.envs.iter().cloned().zip(exp.plans.iter().cloned()).collect();
        let augmented = augment_batch(&pairs, &p, stage_seed(SEED, "positive")).unwrap();
        let mut valid = 0;
        let mut total = 0;
        for ((_, plan), envs) in pairs.iter().zip(&augmented) {
            for e in envs {
                total += 1;
                valid += usize::from(plan_valid(e, plan, GOAL_TOLERANCE).unwrap());
            }
        }
        let clusters = pairs
            .into_iter()
            .zip(augmented)
            .map(|((env, plan), rest)| {
                let mut envs = vec![env];
                envs.extend(rest.into_iter().take(cfg.n_augment - 1));
                Cluster { plan, envs }
            })
            .collect();
        eprintln!("  curves experience and augmentation: {:.1} s", t.elapsed().as_secs_f64());
        Curves {
            cfg,
            exp,
            clusters,
            positives_ok: (valid, total),
            memory: None,
            tests: Vec::new(),
            records: Vec::new(),
        }
    }

    fn memory(&mut self) -> &StoreOutcome {
        if self.memory.is_none() {
            let t = Instant::now();
            self.memory = Some(train_store(&self.cfg, &self.clusters, stage_seed(SEED, "memory/curves")).unwrap());
            eprintln!("  training on {} clusters: {:.1} s", self.clusters.len(), t.elapsed().as_secs_f64());
        }
        self.memory.as_ref().unwrap()
    }

    fn records(&mut self) -> &[(IntegrationMode, Vec<Record>)] {
        if self.records.is_empty() {
            self.memory();
            let hashes: HashSet<u64> = self.clusters.iter().flat_map(|c| c.envs.iter().map(env_hash)).collect();
            self.tests =
                generate_test_problems(&self.cfg, ProblemClass::Curves, stage_seed(SEED, "test/curves"), &hashes)
                    .unwrap();
            let modes = [
                IntegrationMode::Baseline,
                IntegrationMode::ClosedBox { k: 1 },
                IntegrationMode::ClosedBox { k: 5 },
                IntegrationMode::OpenBox { k: 1 },
                IntegrationMode::OpenBox { k: 5 },
                IntegrationMode::AblationRandom { k: 1 },
                IntegrationMode::AblationRandom { k: 5 },
            ];
            let pairs: Vec<_> = modes.iter().map(|&m| (PlannerKind::Gust, m)).collect();
            let t = Instant::now();
            let store = &self.memory.as_ref().unwrap().store;
            let recs = evaluate(&self.cfg, &self.tests, Some(store), &pairs, stage_seed(SEED, "eval/curves")).unwrap();
            eprintln!("  evaluation of {} problems: {:.1} s", self.tests.len(), t.elapsed().as_secs_f64());
            self.records = modes.into_iter().zip(recs).collect();
        }
        &self.records
    }

    fn mode(&mut self, mode: IntegrationMode) -> &[Record] {
        &self.records().iter().find(|(m, _)| *m == mode).expect("evaluated mode").1
    }

    fn mean(&mut self, mode: IntegrationMode) -> f64 {
        mean_cost(self.mode(mode))
    }

    fn unsolved(&mut self, mode: IntegrationMode) -> usize {
        self.mode(mode).iter().filter(|r| !r.solved).count()
    }
}

fn criterion1(c: &mut Curves) -> Outcome {
    let (valid, total) = c.positives_ok;
    let template = &c.exp.envs[0];
    let p = AugmentParams {
        count: 1000,
        ..AugmentParams::default()
    };
    let negatives = generate_negative(&c.exp.plans, template, &p, stage_seed(SEED, "negative")).map_err(|e| e.to_string())?;
    let blocked = negatives
        .iter()
        .filter(|e| c.exp.plans.iter().all(|pl| !plan_valid(e, pl, GOAL_TOLERANCE).unwrap()))
        .count();
    check(
        valid == total && total == 20_000 && blocked == negatives.len() && negatives.len() == 1000,
        format!("{valid}/{total} positives valid, {blocked}/{} negatives block every plan", negatives.len()),
    )
}

fn criterion2() -> Outcome {
    let gen = GeneratorParams::default();
    let clusters: Vec<Vec<GridTensor>> = (0..3)
        .map(|c| {
            (0..3)
                .map(|m| GridTensor::from_env(&gen.generate(ProblemClass::ALL[c], 10 * c as u64 + m).unwrap()).unwrap())
                .collect()
        })
        .collect();
    let batch: Vec<Triplet> = (0..3)
        .map(|c| Triplet {
            anchor: (c, 0),
            similar: (c, 1),
            dissimilar: ((c + 1) % 3, 2),
        })
        .collect();
    let params = EncoderParams::<f64>::init(SEED);
    let good = grad_check(&params, &clusters, &batch, 1.0, 1e-4, 200, SEED, None);
    let fc2 = param_blocks().into_iter().find(|(n, _)| *n == "fc2.w").expect("fc2 block").1;
    let negate = move |g: &mut [f64]| g[fc2.clone()].iter_mut().for_each(|v| *v = -*v);
    let bad = grad_check(&params, &clusters, &batch, 1.0, 1e-4, 200, SEED, Some(&negate));
    check(
        good.checked >= 200 && good.max_rel_error <= 1e-4 && bad.max_rel_error > 1e-2,
        format!(
            "max rel error {:.2e} over {} parameters ({} skipped), corrupted {:.2e}",
            good.max_rel_error, good.checked, good.skipped, bad.max_rel_error
        ),
    )
}

fn criterion3(c: &mut Curves) -> Outcome {
    let h = &c.memory().history;
    let (first, last) = (h[0], *h.last().unwrap());
    check(last <= 0.2 * first, format!("epoch loss {first:.4} -> {last:.4} ({:.3} of initial)", last / first))
}

fn criterion4(c: &mut Curves) -> Outcome {
    let r = c.memory().retrieval;
    check(
        r.top1 >= 0.80 && r.top5 >= 0.95,
        format!("top-1 {:.3}, top-5 {:.3} over {} held-out environments", r.top1, r.top5, r.n),
    )
}

fn criterion5(c: &mut Curves) -> Outcome {
    let base = c.mean(IntegrationMode::Baseline);
    let r = |c: &mut Curves, m| c.mean(m) / base;
    let (c1, c5) = (r(c, IntegrationMode::ClosedBox { k: 1 }), r(c, IntegrationMode::ClosedBox { k: 5 }));
    let (o1, o5) = (r(c, IntegrationMode::OpenBox { k: 1 }), r(c, IntegrationMode::OpenBox { k: 5 }));
    let modes = [
        IntegrationMode::Baseline,
        IntegrationMode::ClosedBox { k: 1 },
        IntegrationMode::ClosedBox { k: 5 },
        IntegrationMode::OpenBox { k: 1 },
        IntegrationMode::OpenBox { k: 5 },
    ];
    let unsolved: Vec<String> = modes.iter().map(|&m| c.unsolved(m).to_string()).collect();
    check(
        o5 <= o1 && o1 <= 1.0 && c5 <= 0.7,
        format!(
            "baseline {base:.2} ms; ratios C1 {c1:.3}, C5 {c5:.3}, O1 {o1:.3}, O5 {o5:.3}; unsolved B/C1/C5/O1/O5 {}",
            unsolved.join("/")
        ),
    )
}

fn criterion6(c: &mut Curves) -> Outcome {
    let base = c.mean(IntegrationMode::Baseline);
    let full = c.mean(IntegrationMode::ClosedBox { k: 5 });
    let t = Instant::now();
    let small = train_store(&c.cfg, &c.clusters[..20], stage_seed(SEED, "memory/sweep20")).map_err(|e| e.to_string())?;
    let pairs = [(PlannerKind::Gust, IntegrationMode::ClosedBox { k: 5 })];
    let recs = evaluate(&c.cfg, &c.tests, Some(&small.store), &pairs, stage_seed(SEED, "eval/curves")).map_err(|e| e.to_string())?;
    eprintln!("  20-plan level: {:.1} s", t.elapsed().as_secs_f64());
    let low = mean_cost(&recs[0]);
    check(
        full < low,
        format!("closed-box GUST mean {low:.2} ms with 20 plans vs {full:.2} ms with 100 (baseline {base:.2} ms)"),
    )
}

fn criterion7(c: &mut Curves) -> Outcome {
    let base = c.mean(IntegrationMode::Baseline);
    let r1 = c.mean(IntegrationMode::AblationRandom { k: 1 });
    let r5 = c.mean(IntegrationMode::AblationRandom { k: 5 });
    check(
        r1 >= base && r5 >= base,
        format!("random k=1 {r1:.2} ms, k=5 {r5:.2} ms vs baseline {base:.2} ms"),
    )
}

fn criterion8() -> Outcome {
    let gen = GeneratorParams::default();
    let spec = RobotSpec::default();
    let seed = stage_seed(SEED, "sanity");
    let envs: Vec<_> = (0..200).map(|i| gen.generate(ProblemClass::Random, split_seed(seed, i)).unwrap()).collect();
    let mut lines = Vec::new();
    let mut ok = true;
    for planner in [PlannerKind::Rrt, PlannerKind::Gust, PlannerKind::Follow] {
        let (mut solved, mut invalid) = (0, 0);
        for (i, env) in envs.iter().enumerate() {
            let cfg = PlannerConfig {
                seed: i as u64,
                ..PlannerConfig::default()
            };
            let r = planner.plan(env, &spec, &cfg, None).map_err(|e| e.to_string())?;
            if r.solved() {
                solved += 1;
                if !plan_valid(env, r.plan.as_ref().unwrap(), GOAL_TOLERANCE).unwrap() {
                    invalid += 1;
                }
            }
        }
        ok &= solved >= 190 && invalid == 0;
        lines.push(format!("{planner} {solved}/200 solved, {invalid} invalid"));
    }
    check(ok, lines.join("; "))
}

fn criterion9() -> Outcome {
    let env = Environment::empty(ProblemClass::Random);
    let plans: Vec<_> = (0..5)
        .map(|i| {
            let u = vec![Control::new(2.0, 0.1 * i as f64); 30];
            rollout(RobotState::canonical_start(), &u, 0.1, RobotSpec::default()).unwrap()
        })
        .collect();
    let bias = SamplingBias::with_defaults(plans).map_err(|e| e.to_string())?;
    let dist = TargetDistribution::new(&env, 0.1, Some(&bias));
    let mut rng = rng_from_seed(SEED);
    let n = 100_000;
    let mut counts = [0usize; 7];
    for _ in 0..n {
        let slot = match dist.sample(&mut rng).1 {
            TargetSource::Trajectory(i) => i,
            TargetSource::Goal => 5,
            TargetSource::Uniform => 6,
        };
        counts[slot] += 1;
    }
    let want: Vec<f64> = bias.weights().iter().copied().chain([bias.b_goal(), bias.b_other()]).collect();
    let worst = counts
        .iter()
        .zip(&want)
        .map(|(c, w)| (*c as f64 / n as f64 - w).abs())
        .fold(0.0, f64::max);
    check(worst <= 0.02, format!("largest deviation {worst:.4} over {n} draws"))
}

fn criterion10() -> Outcome {
    let args = [
        "eval",
        "--seed",
        "7",
        "--class",
        "all",
        "--iterations-as-cost",
        "--n-experience",
        "5",
        "--n-augment",
        "6",
        "--n-test",
        "4",
        "--epochs",
        "2",
        "--steps-per-epoch",
        "2",
        "--batch-size",
        "8",
    ];
    let mut csvs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out = Command::new(env!("CARGO_BIN_EXE_motion-memory"))
            .args(args)
            .arg("--out")
            .arg(dir.path())
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        csvs.push(std::fs::read(dir.path().join("report.csv")).map_err(|e| e.to_string())?);
    }
    let rows = String::from_utf8_lossy(&csvs[0]).lines().count() - 1;
    check(csvs[0] == csvs[1] && rows == 60, format!("{rows} rows, identical bytes: {}", csvs[0] == csvs[1]))
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as `--nocapture`; they do not apply here
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |n: usize| only.as_ref().is_none_or(|o| o.contains(&n));
    let mut curves: Option<Curves> = None;
    let mut failed = 0;
    for n in 1..=10 {
        if !wanted(n) {
            continue;
        }
        let t = Instant::now();
        let needs_curves = matches!(n, 1 | 3 | 4 | 5 | 6 | 7);
        if needs_curves && curves.is_none() {
            curves = Some(Curves::build());
        }
        let c = curves.as_mut();
        let outcome = match n {
            1 => criterion1(c.unwrap()),
            2 => criterion2(),
            3 => criterion3(c.unwrap()),
            4 => criterion4(c.unwrap()),
            5 => criterion5(c.unwrap()),
            6 => criterion6(c.unwrap()),
            7 => criterion7(c.unwrap()),
            8 => criterion8(),
            9 => criterion9(),
            _ => criterion10(),
        };
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {n}: PASS ({d}) [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("criterion {n}: FAIL ({d}) [{secs:.1} s]");
            }
        }
    }
    println!("{failed} criteria failed");
    if failed == 0 || std::env::var_os("ACCEPTANCE_STRICT").is_none() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
