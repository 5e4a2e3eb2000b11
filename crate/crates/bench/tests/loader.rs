use tamp_bench::{fixtures, load_problem, problems_dir, LoadError, ProblemFile};
use tamp_core::world::WorldError;

fn p2_json() -> serde_json::Value {
    let text = std::fs::read_to_string(problems_dir().join("p2_analog.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn p2_file_loads() {
    let p = load_problem(problems_dir().join("p2_analog.json")).unwrap();
    assert_eq!(p.movables.len(), 4);
    assert!(p.regions.len() >= 5);
    assert_eq!(p.doors.len(), 1);
    assert_eq!(p.goal.conjuncts.len(), 2);
}

#[test]
fn bundled_files_match_builders() {
    for p in fixtures::all() {
        let loaded = load_problem(problems_dir().join(format!("{}.json", p.name))).unwrap();
        assert_eq!(
            loaded, p,
            "{} is stale; rerun the export_problems example",
            p.name
        );
    }
}

#[test]
fn file_round_trip() {
    for p in fixtures::all() {
        let file = ProblemFile::from_instance(&p);
        let back = ProblemFile::from_json(&file.to_json()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.into_instance().unwrap(), p);
    }
}

#[test]
fn missing_goal_names_the_field() {
    let mut v = p2_json();
    v.as_object_mut().unwrap().remove("goal");
    let err = ProblemFile::from_json(&v.to_string()).unwrap_err();
    let LoadError::Schema { field, message } = err else {
        panic!("expected a schema error, got {err:?}");
    };
    assert!(message.contains("goal"), "{message}");
    assert_eq!(field, ".");
}

#[test]
fn nested_type_error_has_a_path() {
    let mut v = p2_json();
    v["movables"][1]["footprint"] = serde_json::json!("square");
    let err = ProblemFile::from_json(&v.to_string()).unwrap_err();
    let LoadError::Schema { field, .. } = err else {
        panic!("expected a schema error, got {err:?}");
    };
    assert_eq!(field, "movables[1].footprint");
}

#[test]
fn unknown_field_is_rejected() {
    let mut v = p2_json();
    v["colour"] = serde_json::json!("red");
    assert!(matches!(
        ProblemFile::from_json(&v.to_string()),
        Err(LoadError::Schema { .. })
    ));
}

#[test]
fn overlapping_footprints_fail_validation() {
    let mut v = p2_json();
    let bottle2 = v["init"]["poses"]["bottle2"].clone();
    v["init"]["poses"]["bottle3"] = bottle2;
    let err = ProblemFile::from_json(&v.to_string())
        .unwrap()
        .into_instance()
        .unwrap_err();
    assert!(
        matches!(err, LoadError::Invalid(WorldError::InvalidProblem(_))),
        "{err:?}"
    );
}

#[test]
fn unknown_goal_entity() {
    let mut v = p2_json();
    v["goal"][0][2] = serde_json::json!("table9");
    let err = ProblemFile::from_json(&v.to_string())
        .unwrap()
        .into_instance()
        .unwrap_err();
    assert!(
        matches!(err, LoadError::UnknownEntity { ref name, .. } if name == "table9"),
        "{err:?}"
    );
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(
        load_problem(problems_dir().join("nope.json")),
        Err(LoadError::Io { .. })
    ));
}
