use proptest::prelude::*;

use motion_memory::geom::{
    point_in_collision, segment_in_collision, CollisionChecker, Environment, Obstacle, Point2, ProblemClass,
};
use motion_memory::harness::io::{env_from_str, env_to_string, plan_from_str, plan_to_string};
use motion_memory::memory::{triplet_loss, GridTensor};
use motion_memory::planners::SamplingBias;
use motion_memory::robot::{rollout, Control, RobotSpec, RobotState};
use motion_memory::seed::{rng_from_seed, split_seed};
use rand::Rng;

fn obstacle() -> impl Strategy<Value = Obstacle> {
    prop_oneof![
        (0.0..50.0f64, 0.0..50.0f64, 0.2..8.0f64, 0.2..8.0f64, -3.0..3.0f64)
            .prop_map(|(x, y, w, h, t)| Obstacle::rect(x, y, w, h, t)),
        (0.0..50.0f64, 0.0..50.0f64, 0.1..4.0f64).prop_map(|(x, y, r)| Obstacle::circle(x, y, r)),
    ]
}

fn env() -> impl Strategy<Value = Environment> {
    prop::collection::vec(obstacle(), 0..25).prop_map(|obs| Environment::with_obstacles(ProblemClass::Random, obs))
}

fn point() -> impl Strategy<Value = Point2> {
    (-4.0..54.0f64, -4.0..54.0f64).prop_map(|(x, y)| Point2::new(x, y))
}

fn controls() -> impl Strategy<Value = Vec<Control>> {
    prop::collection::vec((0.0..=3.0f64, -1.5..=1.5f64).prop_map(|(v, w)| Control::new(v, w)), 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn checker_agrees_with_linear_scan(e in env(), ps in prop::collection::vec((point(), point()), 20), r in 0.0..1.5f64) {
        let checker = CollisionChecker::new(&e);
        for (a, b) in ps {
            prop_assert_eq!(checker.point_in_collision(a, r), point_in_collision(&e, a, r));
            prop_assert_eq!(checker.segment_in_collision(a, b, r), segment_in_collision(&e, a, b, r));
        }
    }

    #[test]
    fn segment_distance_is_symmetric_and_bounded(o in obstacle(), a in point(), b in point()) {
        let d = o.distance_to_segment(a, b);
        prop_assert!((d - o.distance_to_segment(b, a)).abs() < 1e-9);
        prop_assert!(d >= 0.0);
        prop_assert!(d <= o.distance_to_point(a) + 1e-9);
        prop_assert!(d <= o.distance_to_point(b) + 1e-9);
        prop_assert!(d <= o.distance_to_point(a.lerp(b, 0.37)) + 1e-9);
    }

    #[test]
    fn inflation_is_monotone(e in env(), p in point(), r1 in 0.0..2.0f64, extra in 0.0..2.0f64) {
        if point_in_collision(&e, p, r1) {
            prop_assert!(point_in_collision(&e, p, r1 + extra));
        }
    }

    #[test]
    fn rollout_plans_survive_text_round_trip(us in controls(), x in -2.0..2.0f64, th in -3.0..3.0f64) {
        let plan = rollout(RobotState::new(x, 0.5, th), &us, 0.1, RobotSpec::default()).unwrap();
        plan.check_integrity().unwrap();
        prop_assert_eq!(plan_from_str(&plan_to_string(&plan)).unwrap(), plan);
    }

    #[test]
    fn canonical_env_text_round_trip(e in env()) {
        let e = e.canonicalize();
        let text = env_to_string(&e);
        let back = env_from_str(&text).unwrap();
        prop_assert_eq!(env_to_string(&back), text);
        prop_assert_eq!(back, e);
    }

    #[test]
    fn triplet_loss_bounds(a in prop::collection::vec(-5.0..5.0f64, 30), s in prop::collection::vec(-5.0..5.0f64, 30),
                           d in prop::collection::vec(-5.0..5.0f64, 30), m in 0.0..3.0f64) {
        let l = triplet_loss(&a, &s, &d, m);
        prop_assert!(l >= 0.0);
        // swapping similar and dissimilar mirrors the hinge argument around the margin
        let swapped = triplet_loss(&a, &d, &s, m);
        prop_assert!(l + swapped >= 2.0 * m - 1e-9);
        prop_assert!((triplet_loss(&a, &a, &a, m) - m).abs() < 1e-12);
    }

    #[test]
    fn hamming_is_a_metric(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let mut g = || GridTensor::from_rows(std::array::from_fn(|_| rng.gen()));
        let (x, y, z) = (g(), g(), g());
        prop_assert_eq!(x.hamming(&y), y.hamming(&x));
        prop_assert_eq!(x.hamming(&x), 0);
        prop_assert!(x.hamming(&z) <= x.hamming(&y) + y.hamming(&z));
    }

    #[test]
    fn decreasing_weights_are_accepted_and_reversals_rejected(raw in prop::collection::vec(1.0..100.0f64, 3..8)) {
        let mut w = raw.clone();
        w.sort_by(|a, b| b.total_cmp(a));
        w.dedup();
        prop_assume!(w.len() >= 3 && w.windows(2).all(|p| p[0] - p[1] > 1e-6));
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / total).collect();
        let k = w.len() - 2;
        let plan = rollout(RobotState::canonical_start(), &[Control::new(1.0, 0.0)], 0.1, RobotSpec::default()).unwrap();
        let trajs = vec![plan; k];
        prop_assert!(SamplingBias::new(trajs.clone(), w[..k].to_vec(), w[k], w[k + 1], 2.0).is_ok());
        prop_assert!(SamplingBias::new(trajs, w[..k].to_vec(), w[k + 1], w[k], 2.0).is_err());
    }

    #[test]
    fn split_seeds_do_not_collide(master in any::<u64>(), i in 0u64..1000, j in 0u64..1000) {
        prop_assume!(i != j);
        prop_assert_ne!(split_seed(master, i), split_seed(master, j));
    }
}

/// Dense sampling along short random segments at 1 mm spacing. Exact
/// predicate and oracle may only disagree where the exact clearance lies
/// within 1 mm of the inflated boundary, and only with the exact predicate
/// reporting the collision.
#[test]
fn segment_predicate_against_dense_sampling() {
    let mut rng = rng_from_seed(17);
    let obstacles = (0..30)
        .map(|_| {
            let (x, y) = (rng.gen_range(0.0..50.0), rng.gen_range(0.0..50.0));
            if rng.gen_bool(0.5) {
                Obstacle::rect(x, y, rng.gen_range(0.5..6.0), rng.gen_range(0.5..6.0), rng.gen_range(-3.0..3.0))
            } else {
                Obstacle::circle(x, y, rng.gen_range(0.3..3.0))
            }
        })
        .collect();
    let env = Environment::with_obstacles(ProblemClass::Random, obstacles);
    let inflate = 0.5;
    let clearance = |a: Point2, b: Point2| {
        env.obstacles
            .iter()
            .map(|o| o.distance_to_segment(a, b))
            .fold(f64::INFINITY, f64::min)
    };
    let mut hits = 0;
    for _ in 0..10_000 {
        let a = Point2::new(rng.gen_range(2.0..48.0), rng.gen_range(2.0..48.0));
        let ang: f64 = rng.gen_range(-3.2..3.2);
        let len: f64 = rng.gen_range(0.05..2.0);
        let b = Point2::new(a.x + len * ang.cos(), a.y + len * ang.sin());
        let n = (len / 1e-3).ceil() as usize;
        let sampled = (0..=n).any(|i| point_in_collision(&env, a.lerp(b, i as f64 / n as f64), inflate));
        let exact = segment_in_collision(&env, a, b, inflate);
        if sampled {
            hits += 1;
            assert!(exact, "sampling found a collision the exact test missed");
        } else if exact {
            let c = clearance(a, b);
            assert!(c > inflate - 1e-3 && c <= inflate, "disagreement with clearance {c}");
        }
    }
    assert!(hits > 100);
}
