use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use motion_memory::envgen::GeneratorParams;
use motion_memory::exec::{map_indexed, map_indexed_seq};
use motion_memory::geom::ProblemClass;
use motion_memory::memory::{EncoderParams, GridTensor};
use motion_memory::planners::{PlannerConfig, PlannerKind};
use motion_memory::robot::RobotSpec;

fn planning(c: &mut Criterion) {
    let envs: Vec<_> = (0..16)
        .map(|s| GeneratorParams::default().generate(ProblemClass::Random, s).unwrap())
        .collect();
    let spec = RobotSpec::default();
    let solve = |i: usize| {
        let cfg = PlannerConfig {
            seed: i as u64,
            max_iterations: Some(2000),
            ..PlannerConfig::default()
        };
        PlannerKind::Gust.plan(&envs[i], &spec, &cfg, None).unwrap().iterations
    };
    let mut g = c.benchmark_group("gust_16_problems");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| black_box(map_indexed(envs.len(), solve))));
    g.bench_function("sequential", |b| b.iter(|| black_box(map_indexed_seq(envs.len(), solve))));
    g.finish();
}

fn encoding(c: &mut Criterion) {
    let params = EncoderParams::<f32>::init(1);
    let grids: Vec<GridTensor> = (0..64)
        .map(|s| GridTensor::from_env(&GeneratorParams::default().generate(ProblemClass::Curves, s).unwrap()).unwrap())
        .collect();
    let encode = |i: usize| params.encode(&grids[i]);
    let mut g = c.benchmark_group("encode_64_grids");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| black_box(map_indexed(grids.len(), encode))));
    g.bench_function("sequential", |b| b.iter(|| black_box(map_indexed_seq(grids.len(), encode))));
    g.finish();
}

criterion_group!(benches, planning, encoding);
criterion_main!(benches);
