//! Occlusion-counting cost-to-go heuristic, used as a leaf value in the
//! UCT-with-heuristic baseline.

use std::collections::BTreeSet;

use crate::motion::literals::{LiteralSet, Predicate};
use crate::world::{Goal, ProblemInstance};

/// Symbolic facts the heuristic reads.
pub trait OcclusionFacts {
    fn pick_occluders(&self, subject: &str) -> Vec<String>;
    fn place_occluders(&self, subject: &str, dir: &str, reference: &str) -> Vec<String>;
    fn at_position(&self, subject: &str, dir: &str, reference: &str) -> bool;
}

impl OcclusionFacts for LiteralSet {
    fn pick_occluders(&self, subject: &str) -> Vec<String> {
        self.with_predicate(Predicate::PickOccludedBy)
            .filter(|l| l.args()[0] == subject)
            .map(|l| l.args()[1].clone())
            .collect()
    }

    fn place_occluders(&self, subject: &str, dir: &str, reference: &str) -> Vec<String> {
        self.with_predicate(Predicate::PlaceOccludedBy)
            .filter(|l| l.args()[0] == subject && l.args()[1] == dir && l.args()[2] == reference)
            .map(|l| l.args()[3].clone())
            .collect()
    }

    fn at_position(&self, subject: &str, dir: &str, reference: &str) -> bool {
        self.with_predicate(Predicate::AtPosition)
            .any(|l| l.args()[0] == subject && l.args()[1] == dir && l.args()[2] == reference)
    }
}

/// Goal conjuncts by entity name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalNames {
    pub conjuncts: Vec<[String; 3]>,
}

impl GoalNames {
    pub fn new(conjuncts: &[[&str; 3]]) -> Self {
        Self {
            conjuncts: conjuncts.iter().map(|c| c.map(str::to_string)).collect(),
        }
    }

    pub fn from_goal(goal: &Goal, prob: &ProblemInstance) -> Self {
        Self {
            conjuncts: goal
                .conjuncts
                .iter()
                .map(|c| {
                    [
                        prob.movables[c.subject].name.clone(),
                        c.dir.token().to_string(),
                        prob.name_of(c.reference.entity()).to_string(),
                    ]
                })
                .collect(),
        }
    }

    /// Distinct subjects in first-mention order.
    pub fn objects(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.conjuncts {
            if !out.contains(&c[0].as_str()) {
                out.push(&c[0]);
            }
        }
        out
    }
}

/// Number of occluding entities that must move, corrected by the goal
/// objects already in place and by whether the last manipulated entity is
/// a goal object:
///
/// `|M| − |in_goal| + [target ∈ in_goal] − [target ∉ in_goal ∧ target ∈ goal_objects]`
///
/// `M` starts from the pick occluders and goal-placement occluders of the
/// goal objects not yet in place and is closed under pick occlusion. The
/// `world` sentinel is never counted.
pub fn hcount<F: OcclusionFacts + ?Sized>(
    facts: &F,
    goal: &GoalNames,
    o_target: Option<&str>,
) -> f64 {
    let objects = goal.objects();
    let in_goal: Vec<&str> = objects
        .iter()
        .copied()
        .filter(|o| {
            goal.conjuncts
                .iter()
                .filter(|c| c[0] == *o)
                .all(|c| facts.at_position(&c[0], &c[1], &c[2]))
        })
        .collect();
    let mut frontier: Vec<String> = Vec::new();
    for o in objects.iter().filter(|o| !in_goal.contains(o)) {
        frontier.extend(facts.pick_occluders(o));
        for c in goal.conjuncts.iter().filter(|c| c[0] == *o) {
            frontier.extend(facts.place_occluders(&c[0], &c[1], &c[2]));
        }
    }
    let mut m: BTreeSet<String> = BTreeSet::new();
    while let Some(x) = frontier.pop() {
        if x == "world" || !m.insert(x.clone()) {
            continue;
        }
        frontier.extend(facts.pick_occluders(&x));
    }
    let target_in_goal = o_target.is_some_and(|t| in_goal.contains(&t));
    let target_pending = o_target.is_some_and(|t| !in_goal.contains(&t) && objects.contains(&t));
    m.len() as f64 - in_goal.len() as f64 + f64::from(u8::from(target_in_goal))
        - f64::from(u8::from(target_pending))
}

/// Leaf value `3·|goal objects| − 3·hcount`.
pub fn hcount_value<F: OcclusionFacts + ?Sized>(
    facts: &F,
    goal: &GoalNames,
    o_target: Option<&str>,
) -> f64 {
    3.0 * goal.objects().len() as f64 - 3.0 * hcount(facts, goal, o_target)
}
