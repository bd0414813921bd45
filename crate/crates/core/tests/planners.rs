use motion_memory::envgen::GeneratorParams;
use motion_memory::geom::{point_segment_dist, Environment, Obstacle, Point2, ProblemClass, GOAL_TOLERANCE};
use motion_memory::planners::{
    build_roadmap, gust_plan, rrt_plan, PlanResult, PlanStatus, PlannerConfig, PlannerKind, SamplingBias,
};
use motion_memory::robot::{plan_valid, MotionPlan, RobotSpec};

fn cfg(seed: u64) -> PlannerConfig {
    PlannerConfig {
        seed,
        ..PlannerConfig::default()
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn solved_plan(r: &PlanResult) -> &MotionPlan {
    assert_eq!(r.status, PlanStatus::Solved);
    r.plan.as_ref().expect("solved result carries a plan")
}

#[test]
fn empty_env_is_always_solved() {
    let env = Environment::empty(ProblemClass::Random);
    let spec = RobotSpec::default();
    for planner in PlannerKind::ALL {
        for seed in 0..50 {
            let c = PlannerConfig {
                time_limit: 5.0,
                ..cfg(seed)
            };
            let r = planner.plan(&env, &spec, &c, None).unwrap();
            let plan = solved_plan(&r);
            assert!(plan_valid(&env, plan, GOAL_TOLERANCE).unwrap(), "{planner} seed {seed}");
            assert!(r.runtime < 5.0);
        }
    }
}

#[test]
fn greedy_goal_bias_still_solves() {
    let env = Environment::empty(ProblemClass::Random);
    let c = PlannerConfig {
        goal_bias: 1.0,
        ..cfg(3)
    };
    let r = rrt_plan(&env, &RobotSpec::default(), &c, None).unwrap();
    assert!(plan_valid(&env, solved_plan(&r), GOAL_TOLERANCE).unwrap());
}

#[test]
fn start_in_collision_is_an_error() {
    let env = Environment::with_obstacles(ProblemClass::Random, vec![Obstacle::circle(0.0, 0.0, 1.0)]);
    for planner in PlannerKind::ALL {
        assert!(planner.plan(&env, &RobotSpec::default(), &cfg(0), None).is_err());
    }
}

#[test]
fn iteration_budget_makes_runs_reproducible() {
    let env = GeneratorParams::default().generate(ProblemClass::Curves, 5).unwrap();
    let spec = RobotSpec::default();
    for planner in PlannerKind::ALL {
        let c = PlannerConfig {
            max_iterations: Some(3000),
            time_limit: f64::INFINITY,
            ..cfg(11)
        };
        let a = planner.plan(&env, &spec, &c, None).unwrap();
        let b = planner.plan(&env, &spec, &c, None).unwrap();
        assert_eq!(a.plan, b.plan);
        assert_eq!((a.status, a.iterations, a.tree_size, a.fallbacks), (b.status, b.iterations, b.tree_size, b.fallbacks));
    }
}

#[test]
fn walled_goal_has_no_roadmap_path() {
    let ring: Vec<Obstacle> = (0..24)
        .map(|i| {
            let a = i as f64 * std::f64::consts::TAU / 24.0;
            Obstacle::rect(50.0 + 4.0 * a.cos(), 50.0 + 4.0 * a.sin(), 1.0, 1.6, a)
        })
        .collect();
    let env = Environment::with_obstacles(ProblemClass::Random, ring);
    for planner in [PlannerKind::Gust, PlannerKind::Follow] {
        let r = planner.plan(&env, &RobotSpec::default(), &cfg(0), None).unwrap();
        assert_eq!(r.status, PlanStatus::NoRoadmapPath);
        assert!(r.plan.is_none());
    }
}

/// Known solution of a Curves instance, found by GUST.
fn curves_with_solution(seed: u64) -> (Environment, MotionPlan) {
    let env = GeneratorParams::default().generate(ProblemClass::Curves, seed).unwrap();
    let r = gust_plan(&env, &RobotSpec::default(), &cfg(seed + 1000), None).unwrap();
    let plan = solved_plan(&r).clone();
    (env, plan)
}

fn paired_iterations(planner: PlannerKind, env: &Environment, bias: Option<&SamplingBias>, n: u64) -> Vec<f64> {
    (0..n)
        .map(|s| {
            let c = PlannerConfig {
                max_iterations: Some(20_000),
                time_limit: f64::INFINITY,
                ..cfg(s)
            };
            planner.plan(env, &RobotSpec::default(), &c, bias).unwrap().iterations as f64
        })
        .collect()
}

#[test]
fn bias_along_a_valid_plan_lowers_median_iterations() {
    // 50 paired runs: 5 Curves instances with 10 seeds each
    let cases: Vec<_> = (2..)
        .filter_map(|seed| {
            let env = GeneratorParams::default().generate(ProblemClass::Curves, seed).unwrap();
            let r = gust_plan(&env, &RobotSpec::default(), &cfg(seed + 1000), None).unwrap();
            r.plan.map(|plan| (env, plan))
        })
        .take(5)
        .collect();
    let pooled = |planner: PlannerKind, biased: bool| -> f64 {
        let runs = cases.iter().flat_map(|(env, plan)| {
            let bias = SamplingBias::with_defaults(vec![plan.clone()]).unwrap();
            paired_iterations(planner, env, biased.then_some(&bias), 10)
        });
        median(runs.collect())
    };
    let (plain, biased) = (pooled(PlannerKind::Rrt, false), pooled(PlannerKind::Rrt, true));
    assert!(biased < plain, "rrt biased {biased} vs {plain}");
    let (plain, biased) = (pooled(PlannerKind::Gust, false), pooled(PlannerKind::Gust, true));
    assert!(biased <= plain, "gust biased {biased} vs {plain}");
}

#[test]
fn biased_roadmap_adds_nodes_along_the_trajectory() {
    let (env, plan) = curves_with_solution(4);
    let bias = SamplingBias::with_defaults(vec![plan.clone()]).unwrap();
    let states: Vec<Point2> = plan.states().map(|s| s.position()).collect();
    let reach = 3.0 * bias.sigma();
    let (mut near, mut total) = (0usize, 0usize);
    for seed in 0..10 {
        let c = cfg(seed);
        let plain = build_roadmap(&env, &RobotSpec::default(), &c, None);
        let rm = build_roadmap(&env, &RobotSpec::default(), &c, Some(&bias));
        let n_biased = (c.roadmap_nodes as f64 * c.roadmap_bias_share).round() as usize;
        let split = 2 + c.roadmap_nodes - n_biased;
        assert_eq!(rm.nodes.len(), plain.nodes.len());
        assert_eq!(rm.nodes[..split], plain.nodes[..split]);
        for p in &rm.nodes[split..] {
            total += 1;
            if states.iter().any(|s| s.dist(*p) <= reach) {
                near += 1;
            }
        }
    }
    assert!(near as f64 >= 0.6 * total as f64, "{near} of {total}");
}

fn polyline_deviation(plan: &MotionPlan, path: &[Point2]) -> f64 {
    let d: Vec<f64> = plan
        .states()
        .map(|s| {
            path.windows(2)
                .map(|w| point_segment_dist(s.position(), w[0], w[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    d.iter().sum::<f64>() / d.len() as f64
}

#[test]
fn follower_tracks_the_roadmap_path_more_closely() {
    let env = Environment::empty(ProblemClass::Random);
    let spec = RobotSpec::default();
    let (mut follow_dev, mut gust_dev) = (0.0, 0.0);
    for seed in 0..20 {
        let c = cfg(seed);
        let rm = build_roadmap(&env, &spec, &c, None);
        let path: Vec<Point2> = rm.shortest_path().unwrap().into_iter().map(|i| rm.nodes[i]).collect();
        follow_dev += polyline_deviation(solved_plan(&PlannerKind::Follow.plan(&env, &spec, &c, None).unwrap()), &path);
        gust_dev += polyline_deviation(solved_plan(&PlannerKind::Gust.plan(&env, &spec, &c, None).unwrap()), &path);
    }
    assert!(follow_dev < gust_dev, "follow {follow_dev} vs gust {gust_dev}");
}

#[test]
fn follower_falls_back_to_group_rounds() {
    let spec = RobotSpec::default();
    let total: u64 = (0..10)
        .map(|seed| {
            let env = GeneratorParams::default().generate(ProblemClass::Trap, seed).unwrap();
            let c = PlannerConfig {
                follow_patience: 2,
                ..cfg(seed)
            };
            PlannerKind::Follow.plan(&env, &spec, &c, None).unwrap().fallbacks
        })
        .sum();
    assert!(total > 0);
}

#[test]
fn guided_planner_beats_rrt_on_traps() {
    let spec = RobotSpec::default();
    let (mut gust, mut rrt) = (Vec::new(), Vec::new());
    for seed in 0..40 {
        let env = GeneratorParams::default().generate(ProblemClass::Trap, 100 + seed).unwrap();
        let g = PlannerKind::Gust.plan(&env, &spec, &cfg(seed), None).unwrap();
        let r = PlannerKind::Rrt.plan(&env, &spec, &cfg(seed), None).unwrap();
        gust.push(if g.solved() { g.runtime } else { 10.0 });
        rrt.push(if r.solved() { r.runtime } else { 10.0 });
    }
    assert!(median(gust) < median(rrt));
}

#[test]
fn solved_plans_validate_on_generated_classes() {
    let spec = RobotSpec::default();
    for class in ProblemClass::ALL {
        for seed in 0..10 {
            let env = GeneratorParams::default().generate(class, seed).unwrap();
            for planner in PlannerKind::ALL {
                let r = planner.plan(&env, &spec, &cfg(seed), None).unwrap();
                if let Some(p) = &r.plan {
                    assert!(plan_valid(&env, p, GOAL_TOLERANCE).unwrap(), "{planner} {class} {seed}");
                }
            }
        }
    }
}
