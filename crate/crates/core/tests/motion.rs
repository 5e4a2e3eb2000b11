use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tamp_core::motion::feasibility::is_feasible;
use tamp_core::motion::literals::{compute_literals, LiteralCache};
use tamp_core::motion::sampler::sample_continuous;
use tamp_core::motion::{MotionConfig, Occluder, Scene};
use tamp_core::scenario::{demo_problem, random_problem};
use tamp_core::world::{transition, Direction, DiscreteAction, PlaceRef, RewardMode};

fn demo() -> Scene {
    Scene::new(demo_problem(), MotionConfig::default()).unwrap()
}

fn idx(scene: &Scene, name: &str) -> usize {
    scene
        .problem()
        .movables
        .iter()
        .position(|m| m.name == name)
        .unwrap()
}

#[test]
fn front_object_occludes_pick_behind_it() {
    let scene = demo();
    let s = &scene.problem().s0;
    let (cup, bottle) = (idx(&scene, "cup"), idx(&scene, "bottle"));
    assert_eq!(
        scene.pick_occluders(s, cup).into_iter().collect::<Vec<_>>(),
        vec![Occluder::Movable(bottle)]
    );
    assert!(scene.pick_occluders(s, bottle).is_empty());
}

#[test]
fn closed_door_occludes_the_other_room() {
    let scene = demo();
    let s = &scene.problem().s0;
    let bottle = idx(&scene, "bottle");
    let occ = scene.place_occluders(s, bottle, Direction::On, PlaceRef::Region(2));
    assert!(occ.contains(&Occluder::Door(0)));
    let mut open = s.clone();
    open.door_open[0] = true;
    assert!(scene
        .place_occluders(&open, bottle, Direction::On, PlaceRef::Region(2))
        .is_empty());
}

#[test]
fn pick_and_place_back_restores_pose() {
    let scene = demo();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s0 = scene.problem().s0.clone();
    let bottle = idx(&scene, "bottle");
    let pick = DiscreteAction::Pick { target: bottle };
    let k = sample_continuous(&s0, &pick, &scene, &mut rng).expect("bottle is reachable");
    let t = transition(&s0, &pick, &k, &scene, RewardMode::Delta).unwrap();
    assert!(t.feasible);
    assert!(t.state.is_held(bottle));
    let place = DiscreteAction::Place {
        target: bottle,
        dir: Direction::On,
        reference: PlaceRef::Region(0),
    };
    let mut k2 = sample_continuous(&t.state, &place, &scene, &mut rng).expect("table1 has room");
    let old = s0.poses[bottle].unwrap();
    k2.placement_point = Some(old.position());
    let back = transition(&t.state, &place, &k2, &scene, RewardMode::Delta).unwrap();
    assert!(back.feasible);
    let new = back.state.poses[bottle].unwrap();
    assert!((new.x - old.x).abs() < 1e-9 && (new.y - old.y).abs() < 1e-9);
    assert!((new.theta - old.theta).abs() < 1e-9);
}

#[test]
fn occluded_pick_is_infeasible() {
    let scene = demo();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s0 = &scene.problem().s0;
    let pick = DiscreteAction::Pick {
        target: idx(&scene, "cup"),
    };
    assert!(sample_continuous(s0, &pick, &scene, &mut rng).is_none());
}

#[test]
fn literal_rendering() {
    let scene = demo();
    let lits = compute_literals(&scene.problem().s0, &scene);
    let text: Vec<String> = lits.iter().map(|l| l.to_string()).collect();
    assert!(text.contains(&"(HandAvailable)".to_string()));
    assert!(text.contains(&"(IsClosed door)".to_string()));
    assert!(text.contains(&"(PickOccludedBy cup bottle)".to_string()));
    assert!(text.contains(&"(AtPosition cup on table1)".to_string()));
    assert!(text.contains(&"(AtPosition cup behind_of bottle)".to_string()));
    assert!(text.contains(&"(PlaceOccludedBy cup on counter1 door)".to_string()));
}

/// Random walk of sampled feasible actions; checks sampler soundness and
/// that cached literals equal freshly computed ones along the way.
fn walk(seed: u64, n_movables: usize, steps: usize) {
    let prob = random_problem(seed, n_movables);
    let scene = Scene::new(prob, MotionConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut cache = LiteralCache::new();
    let mut s = scene.problem().s0.clone();
    assert_eq!(*cache.get(&s, &scene), compute_literals(&s, &scene));
    for _ in 0..steps {
        let mut actions = scene.problem().legal_actions(&s);
        actions.shuffle(&mut rng);
        let Some((a, k)) = actions
            .iter()
            .find_map(|a| sample_continuous(&s, a, &scene, &mut rng).map(|k| (*a, k)))
        else {
            break;
        };
        assert!(
            is_feasible(&s, &a, &k, &scene),
            "sampler returned infeasible params for {a:?}"
        );
        let t = transition(&s, &a, &k, &scene, RewardMode::Delta).unwrap();
        assert!(t.feasible);
        let cached = cache.successor(&s, &a, &t.state, &scene);
        let fresh = compute_literals(&t.state, &scene);
        if *cached != fresh {
            let extra: Vec<String> = cached.difference(&fresh).map(|l| l.to_string()).collect();
            let missing: Vec<String> = fresh.difference(&cached).map(|l| l.to_string()).collect();
            panic!(
                "cache diverged after {}: extra {extra:?} missing {missing:?}",
                a.describe(scene.problem())
            );
        }
        s = t.state;
    }
}

#[test]
fn cache_matches_fresh_literals_on_demo() {
    for seed in 0..5 {
        walk(seed, 5, 12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cache_is_transparent(seed in 0u64..10_000, n in 2usize..7) {
        walk(seed, n, 10);
    }
}
