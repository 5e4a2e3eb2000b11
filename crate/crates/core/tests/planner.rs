use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tamp_core::motion::sampler::sample_continuous;
use tamp_core::motion::{MotionConfig, Scene};
use tamp_core::planner::mcts::{uct_baseline, warm_started_uct};
use tamp_core::planner::{concretize, Domain, FailureTag, PlannerConfig, TampDomain, ValueFn};
use tamp_core::prompt::{parse_response, TaskPlan};
use tamp_core::scenario::{demo_problem, random_problem};
use tamp_core::world::{conjunct_holds, goal_satisfied, ProblemInstance, RewardMode, WorldState};

fn demo() -> Scene {
    Scene::new(demo_problem(), MotionConfig::default()).unwrap()
}

fn plan(scene: &Scene, text: &str) -> TaskPlan {
    parse_response(text, scene.problem()).unwrap().plan
}

const SOLUTION: &str = "plan = [('open', 'door'), ('pick', 'bottle'), ('place', 'bottle', 'on', 'counter1'), \
    ('pick', 'plate'), ('place', 'plate', 'on', 'table1'), ('pick', 'cup'), ('place', 'cup', 'left_of', 'bottle')]";

#[test]
fn concretize_solves_a_correct_plan() {
    let scene = demo();
    let cfg = PlannerConfig::default();
    let s0 = scene.problem().s0.clone();
    let mut solved = 0;
    for seed in 0..5 {
        let mut domain = TampDomain::new(&scene, RewardMode::Delta);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ok, plans) = concretize(
            &[plan(&scene, SOLUTION)],
            &s0,
            0,
            &cfg,
            &mut domain,
            &mut rng,
        );
        if ok {
            solved += 1;
            let p = plans.last().unwrap();
            assert!(p.achieved_goal && p.failure.is_none());
            assert_eq!(p.steps.len(), 7);
            // rewards telescope to the goal conjuncts gained
            assert_eq!(p.steps.iter().map(|s| s.reward).sum::<f64>(), 6.0);
            let end = p.replay(&s0, &scene, RewardMode::Delta).unwrap();
            assert!(goal_satisfied(&end, scene.problem()));
        }
    }
    assert_eq!(solved, 5);
}

#[test]
fn concretize_tags_failures() {
    let scene = demo();
    let cfg = PlannerConfig::default();
    let s0 = scene.problem().s0.clone();
    let mut domain = TampDomain::new(&scene, RewardMode::Delta);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let plans = [
        // the bottle stands in front of the cup
        plan(&scene, "plan = [('pick', 'cup')]"),
        plan(&scene, "plan = [('open', 'door')]"),
        plan(&scene, "plan = [('place', 'cup', 'on', 'table2')]"),
    ];
    let (ok, out) = concretize(&plans, &s0, 0, &cfg, &mut domain, &mut rng);
    assert!(!ok);
    assert_eq!(out.len(), 3);
    assert_eq!(out[0].failure, Some(FailureTag::PreconditionViolation));
    assert!(out[0].end_state.failed);
    assert_eq!(out[1].failure, Some(FailureTag::PartialGoal));
    assert!(!out[1].end_state.failed);
    assert_eq!(out[2].failure, Some(FailureTag::PreconditionViolation));
}

#[test]
fn concretize_respects_the_horizon() {
    let scene = demo();
    let cfg = PlannerConfig {
        horizon: 3,
        ..PlannerConfig::default()
    };
    let s0 = scene.problem().s0.clone();
    let mut domain = TampDomain::new(&scene, RewardMode::Delta);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (ok, out) = concretize(
        &[plan(&scene, SOLUTION)],
        &s0,
        1,
        &cfg,
        &mut domain,
        &mut rng,
    );
    assert!(!ok);
    assert!(out[0].steps.len() <= 2);
}

fn search(scene: &Scene, cfg: &PlannerConfig, seed: u64) -> (String, Option<String>, u64, u64) {
    let mut domain =
        TampDomain::new(scene, cfg.reward_mode).track_literals(cfg.value == ValueFn::Hcount);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = uct_baseline(&scene.problem().s0, 0, cfg, &mut domain, &mut rng, None);
    let best = tree.best_root().map(|(a, _)| format!("{a:?}"));
    (
        tree.fingerprint(),
        best,
        tree.stats.rollouts,
        tree.stats.heuristic_calls,
    )
}

#[test]
fn search_is_deterministic_per_seed() {
    let scene = demo();
    let cfg = PlannerConfig::uct_baseline();
    assert_eq!(search(&scene, &cfg, 3), search(&scene, &cfg, 3));
}

#[test]
fn hcount_value_never_rolls_out() {
    let scene = demo();
    let cfg = PlannerConfig {
        value: ValueFn::Hcount,
        ..PlannerConfig::uct_baseline()
    };
    let (_, best, rollouts, heuristic) = search(&scene, &cfg, 0);
    assert!(best.is_some());
    assert_eq!(rollouts, 0);
    assert!(heuristic > 0);
}

#[test]
fn scaled_rewards_keep_the_choice() {
    let scene = demo();
    let base = PlannerConfig::uct_baseline();
    let doubled = PlannerConfig {
        reward_scale: 2.0,
        ..base.clone()
    };
    for seed in 0..3 {
        let mut d1 = TampDomain::new(&scene, RewardMode::Delta);
        let mut d2 = TampDomain::new(&scene, RewardMode::Delta);
        let t1 = uct_baseline(
            &scene.problem().s0,
            0,
            &base,
            &mut d1,
            &mut ChaCha8Rng::seed_from_u64(seed),
            None,
        );
        let t2 = uct_baseline(
            &scene.problem().s0,
            0,
            &doubled,
            &mut d2,
            &mut ChaCha8Rng::seed_from_u64(seed),
            None,
        );
        assert_eq!(
            t1.best_root().map(|(a, _)| *a),
            t2.best_root().map(|(a, _)| *a)
        );
        for (e1, e2) in t1.discrete[0].entries.iter().zip(&t2.discrete[0].entries) {
            assert_eq!(e1.action, e2.action);
            assert_eq!(e1.visits, e2.visits);
            assert!((2.0 * e1.q - e2.q).abs() < 1e-9);
        }
    }
}

#[test]
fn zero_budget_warm_start_follows_the_plan() {
    let scene = demo();
    let cfg = PlannerConfig {
        n_budget: 0,
        ..PlannerConfig::default()
    };
    let s0 = scene.problem().s0.clone();
    let mut domain = TampDomain::new(&scene, RewardMode::Delta);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (_, plans) = concretize(
        &[plan(&scene, SOLUTION)],
        &s0,
        0,
        &cfg,
        &mut domain,
        &mut rng,
    );
    let warm: Vec<_> = plans.iter().map(|p| p.warm_steps()).collect();
    let tree = warm_started_uct(&warm, &s0, 0, &cfg, &mut domain, &mut rng, None);
    assert_eq!(tree.stats.simulations, 0);
    let (a, k) = tree.best_root().unwrap();
    assert_eq!(*a, plans[0].steps[0].action);
    assert_eq!(k.param, plans[0].steps[0].params);
    // each warm step adds one discrete child under its parent
    assert_eq!(tree.discrete.len(), 1 + plans[0].steps.len());
}

fn holding(s: &WorldState, prob: &ProblemInstance) -> Vec<bool> {
    prob.goal
        .conjuncts
        .iter()
        .map(|c| conjunct_holds(s, prob, c))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rewards_match_conjunct_changes(seed in 0u64..10_000, n in 2usize..6, positive in any::<bool>()) {
        let scene = Scene::new(random_problem(seed, n), MotionConfig::default()).unwrap();
        let prob = scene.problem();
        let mode = if positive { RewardMode::PositiveOnly } else { RewardMode::Delta };
        let mut domain = TampDomain::new(&scene, mode);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = prob.s0.clone();
        let mut total = 0.0;
        for _ in 0..8 {
            let Some((a, k)) = domain
                .legal_actions(&s)
                .into_iter()
                .find_map(|a| sample_continuous(&s, &a, &scene, &mut rng).map(|k| (a, k)))
            else {
                break;
            };
            let t = domain.apply(&s, &a, Some(&k));
            prop_assert!(t.feasible);
            let (before, after) = (holding(&s, prob), holding(&t.state, prob));
            let gained = before.iter().zip(&after).filter(|(b, a)| !**b && **a).count() as f64;
            let lost = before.iter().zip(&after).filter(|(b, a)| **b && !**a).count() as f64;
            let expected = match mode {
                RewardMode::Delta => 3.0 * (gained - lost),
                RewardMode::PositiveOnly => 3.0 * gained,
            };
            prop_assert_eq!(t.reward, expected);
            total += t.reward;
            s = t.state;
        }
        if mode == RewardMode::Delta {
            let count = |v: Vec<bool>| v.into_iter().filter(|&b| b).count() as f64;
            prop_assert_eq!(total, 3.0 * (count(holding(&s, prob)) - count(holding(&prob.s0, prob))));
        }
    }
}
