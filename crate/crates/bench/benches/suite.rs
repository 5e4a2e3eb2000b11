//! Sequential against rayon execution for the two data-parallel paths:
//! scene construction (roadmap edge checks) and suite runs (one trial per
//! worker).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tamp_bench::{fixtures, replay_dir, run_suite, LlmSpec, Method, TrialConfig};
use tamp_core::motion::{MotionConfig, Scene};
use tamp_core::par::Parallelism;

const MODES: [(&str, Parallelism); 2] = [
    ("sequential", Parallelism::Sequential),
    ("rayon", Parallelism::Rayon),
];

fn scene_construction(c: &mut Criterion) {
    let mut group = c.benchmark_group("scene_construction");
    let prob = fixtures::p1();
    for (name, mode) in MODES {
        let config = MotionConfig {
            prm_samples: 600,
            parallelism: mode,
            ..MotionConfig::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| Scene::new(prob.clone(), config.clone()).unwrap())
        });
    }
    group.finish();
}

fn suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("suite");
    group.sample_size(10);
    let problems = vec![fixtures::p2(), fixtures::p4()];
    let methods = [Method::Stalm, Method::Uct];
    let seeds: Vec<u64> = (0..4).collect();
    for (name, mode) in MODES {
        let cfg = TrialConfig {
            llm: LlmSpec::Replay {
                dir: replay_dir(),
                repeat_last: true,
            },
            motion: MotionConfig {
                parallelism: Parallelism::Sequential,
                ..MotionConfig::default()
            },
            ..TrialConfig::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_suite(&problems, &methods, &seeds, &cfg, mode))
        });
    }
    group.finish();
}

criterion_group!(benches, scene_construction, suite);
criterion_main!(benches);
