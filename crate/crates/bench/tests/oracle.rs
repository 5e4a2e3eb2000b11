use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tamp_bench::fixtures;
use tamp_bench::oracle::{
    backup_oracle, check_state, corridor_slices, overlap, resample, FuzzDomain, OcclusionOracle,
    OcclusionReport, TwoStepMdp,
};
use tamp_core::geom::{Pose2, Vec2};
use tamp_core::motion::{MotionConfig, Scene};
use tamp_core::planner::mcts::Search;
use tamp_core::planner::PlannerConfig;
use tamp_core::scenario::random_problem;

fn square(x: f64, y: f64, h: f64) -> Vec<Vec2> {
    vec![
        Vec2::new(x - h, y - h),
        Vec2::new(x + h, y - h),
        Vec2::new(x + h, y + h),
        Vec2::new(x - h, y + h),
    ]
}

#[test]
fn overlap_cases() {
    assert!(overlap(&square(0.0, 0.0, 1.0), &square(1.5, 0.0, 1.0)));
    assert!(!overlap(&square(0.0, 0.0, 1.0), &square(2.5, 0.0, 1.0)));
    // containment without edge crossings
    assert!(overlap(&square(0.0, 0.0, 1.0), &square(0.0, 0.0, 0.2)));
    assert!(overlap(&square(0.0, 0.0, 0.2), &square(0.0, 0.0, 1.0)));
}

#[test]
fn resampling_steps_are_small() {
    let path = [
        Pose2::new(0.0, 0.0, 0.0),
        Pose2::new(1.0, 0.0, 3.0),
        Pose2::new(1.0, 2.0, -3.0),
    ];
    let dense = resample(&path, 0.3);
    assert_eq!(dense.first(), path.first());
    assert_eq!(dense.last().unwrap().position(), path[2].position());
    for w in dense.windows(2) {
        assert!(w[0].distance(&w[1]) <= 0.0101, "{:?}", w);
    }
}

#[test]
fn corridor_slices_cover_the_segment() {
    let slices = corridor_slices(Vec2::new(0.0, 0.0), Vec2::new(0.5, 0.0), 0.1);
    assert!(slices.len() >= 50);
    assert!(overlap(&slices[0], &square(0.0, 0.04, 0.005)));
    assert!(!overlap(&slices[0], &square(0.0, 0.07, 0.005)));
}

#[test]
fn random_scenes_agree() {
    let mut report = OcclusionReport::default();
    for seed in 0..10 {
        let scene = Scene::new(random_problem(seed, 4), MotionConfig::default()).unwrap();
        check_state(&scene, &scene.problem().s0.clone(), &mut report);
    }
    assert!(report.queries > 100);
    assert!(report.mismatches.is_empty(), "{:?}", report.mismatches);
}

#[test]
fn oracle_detects_a_changed_scene() {
    // An oracle built for the closed-door state must disagree with the
    // predicates of the open-door state: the door occludes the kitchen.
    let scene = Scene::new(fixtures::p1(), MotionConfig::default()).unwrap();
    let closed = scene.problem().s0.clone();
    let mut open = closed.clone();
    open.door_open[0] = true;
    let oracle = OcclusionOracle::new(&scene, &closed);
    let differing = (0..scene.problem().movables.len())
        .filter(|&o| scene.pick_occluders(&open, o) != oracle.pick(o))
        .count();
    assert!(differing >= 3, "{differing}");
    let agreeing = (0..scene.problem().movables.len())
        .all(|o| scene.pick_occluders(&closed, o) == oracle.pick(o));
    assert!(agreeing);
}

#[test]
fn backup_oracle_on_fuzzed_domain() {
    let cfg = PlannerConfig {
        horizon: 4,
        ..PlannerConfig::default()
    };
    let r = backup_oracle(&mut FuzzDomain { actions: 3 }, 0, &cfg, 400, 11);
    assert!(r.violations.is_empty(), "{:?}", r.violations);
    assert!(r.max_error < 1e-9);
}

#[test]
fn traced_totals_average_to_q() {
    let cfg = PlannerConfig {
        horizon: 2,
        trace: true,
        ..PlannerConfig::default()
    };
    let mut domain = TwoStepMdp;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut search = Search::new(&mut domain, &cfg, &mut rng, Vec::new(), 0);
    search.run(50, None);
    let tree = search.into_tree();
    let trace = tree.trace.as_ref().unwrap();
    for (i, e) in tree.discrete[0].entries.iter().enumerate() {
        let totals: Vec<f64> = trace
            .iter()
            .filter(|b| b.node == 0 && b.entry == i)
            .map(|b| b.total)
            .collect();
        assert_eq!(totals.len() as u64, e.visits);
        let mean = totals.iter().sum::<f64>() / totals.len() as f64;
        assert!((mean - e.q).abs() < 1e-9);
    }
}
