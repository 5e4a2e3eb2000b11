use tamp_bench::runner::aggregate;
use tamp_bench::{fixtures, replay_dir, run_suite, run_trial, LlmSpec, Method, Suite, TrialConfig};
use tamp_core::par::Parallelism;
use tamp_core::scenario::TwoRoom;
use tamp_core::world::ProblemInstance;

/// One cup, goal already satisfied in the initial state.
fn solved() -> ProblemInstance {
    let mut w = TwoRoom::new();
    w.name("solved");
    let t1 = w.region("table1", TwoRoom::H1);
    let cup = w.movable_at("cup", 0.08, 0.08, t1, 0.0, 0.0);
    w.goal_on(cup, t1);
    w.build()
}

/// One cup to carry to the neighbouring table.
fn one_move() -> ProblemInstance {
    let mut w = TwoRoom::new();
    w.name("one_move").horizon(4);
    let t1 = w.region("table1", TwoRoom::H1);
    let t2 = w.region("table2", TwoRoom::H2);
    let cup = w.movable_at("cup", 0.08, 0.08, t1, 0.0, 0.0);
    w.goal_on(cup, t2);
    w.build()
}

fn replay(repeat_last: bool) -> TrialConfig {
    TrialConfig {
        llm: LlmSpec::Replay {
            dir: replay_dir(),
            repeat_last,
        },
        ..TrialConfig::default()
    }
}

#[test]
fn solved_start_needs_no_planning() {
    for m in Method::ALL {
        let r = run_trial(
            &solved(),
            m,
            0,
            &TrialConfig {
                llm: LlmSpec::Fixed(vec!["plan = [('pick', 'cup')]".into()]),
                ..TrialConfig::default()
            },
        );
        assert!(r.success, "{m}");
        assert!(r.executed_plan.steps.is_empty());
        assert_eq!(r.n_simulations, 0);
    }
}

#[test]
fn uct_solves_a_single_move() {
    let cfg = TrialConfig {
        budget: Some(200),
        ..TrialConfig::default()
    };
    let wins = (0..4)
        .filter(|&s| run_trial(&one_move(), Method::Uct, s, &cfg).success)
        .count();
    assert!(wins >= 3, "{wins}/4");
}

#[test]
fn scripted_plan_runs_without_search() {
    let cfg = TrialConfig {
        llm: LlmSpec::Fixed(vec![
            "plan = [('pick', 'cup'), ('place', 'cup', 'on', 'table2')]".into(),
        ]),
        ..TrialConfig::default()
    };
    let r = run_trial(&one_move(), Method::Stalm, 3, &cfg);
    assert!(r.success);
    assert_eq!(r.n_simulations, 0);
    assert_eq!(r.n_llm_calls, 1);
    assert_eq!(r.executed_plan.steps.len(), 2);
    assert!(r.executed_plan.achieved_goal);
}

#[test]
fn model_methods_need_a_backend() {
    let r = run_trial(&one_move(), Method::Stalm, 0, &TrialConfig::default());
    assert!(!r.success);
    assert!(r.error.as_deref().unwrap().contains("backend"));
}

#[test]
fn zero_time_budget_fails() {
    let cfg = TrialConfig {
        time_limit: Some(0.0),
        ..TrialConfig::default()
    };
    let r = run_trial(&one_move(), Method::Uct, 0, &cfg);
    assert!(!r.success);
    assert!(r.executed_plan.steps.is_empty());
    assert!(r.error.is_none());
}

#[test]
fn trials_replay_exactly() {
    let prob = fixtures::p4();
    for m in [Method::Stalm, Method::ConcretizeOnly, Method::Uct] {
        let a = run_trial(&prob, m, 7, &replay(true)).untimed();
        let b = run_trial(&prob, m, 7, &replay(true)).untimed();
        assert_eq!(a, b, "{m}");
    }
}

#[test]
fn trials_are_isolated_from_suite_order() {
    let problems = vec![fixtures::p2(), fixtures::p4()];
    let cfg = replay(true);
    let methods = [Method::Stalm, Method::Uct];
    let forward = run_suite(
        &problems,
        &methods,
        &[0, 1, 2],
        &cfg,
        Parallelism::Sequential,
    );
    let backward = run_suite(&problems, &methods, &[2, 1, 0], &cfg, Parallelism::Rayon);
    for r in &forward.results {
        let twin = backward
            .results
            .iter()
            .find(|b| b.problem == r.problem && b.method == r.method && b.seed == r.seed)
            .unwrap();
        assert_eq!(r.untimed(), twin.untimed());
    }
}

#[test]
fn untimed_suite_output_is_byte_stable() {
    let problems = vec![fixtures::p1(), fixtures::p4()];
    let methods = Method::ALL;
    let run = |mode| run_suite(&problems, &methods, &[0, 1], &replay(true), mode).to_jsonl(false);
    let a = run(Parallelism::Sequential);
    assert_eq!(a, run(Parallelism::Rayon));
    // one record per trial, one per (problem, method)
    assert_eq!(a.lines().count(), 2 * 4 * 2 + 2 * 4);
    for line in a.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["kind"] == "trial" || v["kind"] == "row");
    }
}

#[test]
fn table_marks_methods_that_never_succeed() {
    let cfg = TrialConfig {
        time_limit: Some(0.0),
        ..replay(true)
    };
    let results = vec![
        run_trial(&one_move(), Method::Uct, 0, &cfg),
        run_trial(&solved(), Method::Uct, 0, &cfg),
    ];
    let suite = Suite {
        rows: aggregate(&results),
        results,
    };
    let table = suite.table();
    let one_move_line = table.lines().find(|l| l.starts_with("one_move")).unwrap();
    assert!(one_move_line.contains("t/o"), "{table}");
    let solved_line = table.lines().find(|l| l.starts_with("solved")).unwrap();
    assert!(solved_line.contains("1.00"), "{table}");
}

#[test]
fn rows_aggregate_success_rates() {
    let cfg = TrialConfig {
        llm: LlmSpec::Fixed(vec![
            "plan = [('pick', 'cup'), ('place', 'cup', 'on', 'table2')]".into(),
        ]),
        ..TrialConfig::default()
    };
    let mut results: Vec<_> = (0..3)
        .map(|s| run_trial(&one_move(), Method::Stalm, s, &cfg))
        .collect();
    results.push(run_trial(
        &one_move(),
        Method::Stalm,
        9,
        &TrialConfig {
            time_limit: Some(0.0),
            ..cfg.clone()
        },
    ));
    let rows = aggregate(&results);
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].trials, rows[0].successes), (4, 3));
    assert!((rows[0].success_rate - 0.75).abs() < 1e-12);
    assert!(rows[0].mean_time.is_some());
}
