//! The household planning problem as a search domain, and concretization of
//! task plans into executable hybrid plans.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hcount::{hcount_value, GoalNames};
use super::mcts::{Domain, Outcome, WarmStep};
use super::PlannerConfig;
use crate::motion::feasibility::preconditions_hold;
use crate::motion::literals::LiteralCache;
use crate::motion::sampler::sample_continuous;
use crate::motion::Scene;
use crate::prompt::TaskPlan;
use crate::world::{
    goal_satisfied, transition, ContinuousParams, DiscreteAction, RewardMode, Transition,
    WorldState,
};

pub struct TampDomain<'s> {
    scene: &'s Scene,
    mode: RewardMode,
    goal: GoalNames,
    cache: LiteralCache,
    track_literals: bool,
}

impl<'s> TampDomain<'s> {
    pub fn new(scene: &'s Scene, mode: RewardMode) -> Self {
        Self {
            scene,
            mode,
            goal: GoalNames::from_goal(&scene.problem().goal, scene.problem()),
            cache: LiteralCache::new(),
            track_literals: false,
        }
    }

    /// Keep the literal cache updated along every transition (needed by the
    /// heuristic value).
    pub fn track_literals(mut self, on: bool) -> Self {
        self.track_literals = on;
        self
    }

    pub fn scene(&self) -> &'s Scene {
        self.scene
    }

    pub fn cache(&mut self) -> &mut LiteralCache {
        &mut self.cache
    }

    pub fn apply(
        &mut self,
        s: &WorldState,
        a: &DiscreteAction,
        k: Option<&ContinuousParams>,
    ) -> Transition {
        let t = match k {
            None => Transition::infeasible(s),
            Some(k) => transition(s, a, k, self.scene, self.mode)
                .unwrap_or_else(|_| Transition::infeasible(s)),
        };
        if self.track_literals && t.feasible {
            self.cache.successor(s, a, &t.state, self.scene);
        }
        t
    }
}

impl Domain for TampDomain<'_> {
    type State = WorldState;
    type Action = DiscreteAction;
    type Param = ContinuousParams;

    fn legal_actions(&mut self, s: &WorldState) -> Vec<DiscreteAction> {
        if s.failed {
            return Vec::new();
        }
        self.scene.problem().legal_actions(s)
    }

    fn sample(
        &mut self,
        s: &WorldState,
        a: &DiscreteAction,
        rng: &mut ChaCha8Rng,
    ) -> Option<ContinuousParams> {
        sample_continuous(s, a, self.scene, rng)
    }

    fn step(
        &mut self,
        s: &WorldState,
        a: &DiscreteAction,
        k: Option<&ContinuousParams>,
    ) -> Outcome<WorldState> {
        let t = self.apply(s, a, k);
        Outcome {
            state: t.state,
            reward: t.reward,
        }
    }

    fn is_terminal(&self, s: &WorldState) -> bool {
        s.failed || goal_satisfied(s, self.scene.problem())
    }

    fn heuristic_value(&mut self, s: &WorldState, last: &DiscreteAction) -> f64 {
        let lits = self.cache.get(s, self.scene);
        let target = self.scene.problem().name_of(last.target()).to_string();
        hcount_value(lits.as_ref(), &self.goal, Some(&target))
    }
}

/// Why a model plan was abandoned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureTag {
    PreconditionViolation,
    InfeasibleContinuous,
    PartialGoal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcreteStep {
    pub action: DiscreteAction,
    pub params: Option<ContinuousParams>,
    /// State after the step.
    pub state: WorldState,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcretePlan {
    pub steps: Vec<ConcreteStep>,
    pub end_state: WorldState,
    pub achieved_goal: bool,
    pub failure: Option<FailureTag>,
}

impl ConcretePlan {
    pub fn empty(s0: &WorldState) -> Self {
        Self {
            steps: Vec::new(),
            end_state: s0.clone(),
            achieved_goal: false,
            failure: None,
        }
    }

    pub fn warm_steps<'s>(&self) -> Vec<WarmStep<TampDomain<'s>>> {
        self.steps
            .iter()
            .map(|st| WarmStep {
                action: st.action,
                param: st.params.clone(),
                state: st.state.clone(),
                reward: st.reward,
            })
            .collect()
    }

    /// Re-applies every step from `s0` and checks that each recorded state
    /// is reproduced. Returns the final state.
    pub fn replay(
        &self,
        s0: &WorldState,
        scene: &Scene,
        mode: RewardMode,
    ) -> Result<WorldState, String> {
        let mut s = s0.clone();
        for (i, st) in self.steps.iter().enumerate() {
            let t = match &st.params {
                None => Transition::infeasible(&s),
                Some(k) => transition(&s, &st.action, k, scene, mode)
                    .map_err(|e| format!("step {i}: {e}"))?,
            };
            if t.state != st.state || t.reward != st.reward {
                return Err(format!(
                    "step {i} ({:?}) does not reproduce its recorded result",
                    st.action
                ));
            }
            s = t.state;
        }
        if s != self.end_state {
            return Err("end state differs".into());
        }
        Ok(s)
    }
}

/// Concretizes each task plan from `s0` with one parameter draw per action.
/// Stops all work as soon as a plan reaches the goal; returns every plan
/// attempted, the successful one last.
pub fn concretize(
    task_plans: &[TaskPlan],
    s0: &WorldState,
    h0: usize,
    cfg: &PlannerConfig,
    domain: &mut TampDomain<'_>,
    rng: &mut ChaCha8Rng,
) -> (bool, Vec<ConcretePlan>) {
    let scene = domain.scene();
    let mut out = Vec::new();
    for tp in task_plans {
        let mut plan = ConcretePlan::empty(s0);
        let mut s = s0.clone();
        for (h, a) in (h0..).zip(&tp.actions) {
            if h >= cfg.horizon || s.failed {
                break;
            }
            let k = domain.sample(&s, a, rng);
            if k.is_none() {
                let pre = scene.problem().well_typed(a).is_ok() && preconditions_hold(&s, a, scene);
                plan.failure = Some(if pre {
                    FailureTag::InfeasibleContinuous
                } else {
                    FailureTag::PreconditionViolation
                });
            }
            let t = domain.apply(&s, a, k.as_ref());
            plan.steps.push(ConcreteStep {
                action: *a,
                params: k,
                state: t.state.clone(),
                reward: t.reward,
            });
            s = t.state;
            if !t.feasible {
                plan.failure.get_or_insert(FailureTag::InfeasibleContinuous);
                break;
            }
            if goal_satisfied(&s, scene.problem()) {
                plan.end_state = s;
                plan.achieved_goal = true;
                plan.failure = None;
                out.push(plan);
                return (true, out);
            }
        }
        plan.end_state = s;
        if plan.failure.is_none() {
            plan.failure = Some(FailureTag::PartialGoal);
        }
        log::debug!(
            "abandoned plan after {} steps: {:?}",
            plan.steps.len(),
            plan.failure
        );
        out.push(plan);
    }
    (false, out)
}
