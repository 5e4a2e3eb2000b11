use proptest::prelude::*;

use tamp_core::prompt::{format_plan, parse_response, TaskPlan};
use tamp_core::scenario::random_problem;
use tamp_core::world::{Direction, DiscreteAction, PlaceRef, ProblemInstance};

fn action(prob: &ProblemInstance, kind: u8, a: usize, b: usize, d: usize) -> DiscreteAction {
    let nm = prob.movables.len();
    match kind % 3 {
        0 if !prob.doors.is_empty() => DiscreteAction::Open {
            door: a % prob.doors.len(),
        },
        1 => DiscreteAction::Pick { target: a % nm },
        _ => {
            let target = a % nm;
            let dir = Direction::ALL[d % 5];
            let reference = if dir == Direction::On {
                PlaceRef::Region(b % prob.regions.len())
            } else {
                PlaceRef::Movable((target + 1 + b % (nm - 1)) % nm)
            };
            DiscreteAction::place(target, dir, reference).unwrap()
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn format_then_parse_is_identity(
        seed in 0u64..500,
        n in 2usize..6,
        raw in prop::collection::vec((any::<u8>(), any::<usize>(), any::<usize>(), any::<usize>()), 1..15),
        prose in "[a-zA-Z ,.]{0,40}",
    ) {
        let prob = random_problem(seed, n);
        let plan = TaskPlan {
            actions: raw.iter().map(|&(k, a, b, d)| action(&prob, k, a, b, d)).collect(),
        };
        let text = format!("## Plan ##\\n{prose}\\n{}\\n", format_plan(&plan, &prob));
        let parsed = parse_response(&text, &prob).unwrap();
        prop_assert_eq!(parsed.plan, plan);
    }
}
