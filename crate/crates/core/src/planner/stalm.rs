//! Model-guided planning step: prompt the model from the current state,
//! concretize its task plans, and fall back to a search warm-started with
//! the attempted plans.

use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::mcts::{warm_started_uct, WarmStep};
use super::tamp::{concretize, ConcretePlan, FailureTag, TampDomain};
use super::PlannerConfig;
use crate::llm::{LlmBackend, LlmRequest};
use crate::motion::Scene;
use crate::prompt::{create_prompt, parse_response, TaskPlan};
use crate::world::{ContinuousParams, DiscreteAction, WorldState};

/// What one planning step decided.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Decision {
    /// A concretized plan that reaches the goal.
    Plan(ConcretePlan),
    /// The best root action of the search and its outcome.
    Action {
        action: DiscreteAction,
        params: Option<ContinuousParams>,
        state: WorldState,
        reward: f64,
    },
    /// The search tried nothing (budget or deadline exhausted, or no legal
    /// action).
    NoAction,
}

#[derive(Debug, Clone, Serialize)]
pub struct StalmReport {
    pub decision: Decision,
    pub simulations: u64,
    pub llm_calls: u64,
    pub responses: usize,
    pub parse_failures: usize,
    pub llm_latency: Duration,
    pub failure_tags: Vec<FailureTag>,
}

/// Receding-horizon planner guided by a language model. Call [`Stalm::step`]
/// from each state reached, and [`Stalm::record`] for every executed action.
pub struct Stalm<'a> {
    scene: &'a Scene,
    cfg: PlannerConfig,
    backend: &'a dyn LlmBackend,
    remembered: Option<Vec<TaskPlan>>,
    executed: Vec<DiscreteAction>,
}

impl<'a> Stalm<'a> {
    pub fn new(scene: &'a Scene, cfg: PlannerConfig, backend: &'a dyn LlmBackend) -> Self {
        Self {
            scene,
            cfg,
            backend,
            remembered: None,
            executed: Vec::new(),
        }
    }

    pub fn record(&mut self, a: DiscreteAction) {
        self.executed.push(a);
    }

    /// Queries the model and parses the batch. Unparseable responses are
    /// dropped; a failed query yields no plans.
    fn query(
        &mut self,
        s: &WorldState,
        domain: &mut TampDomain<'_>,
        report: &mut StalmReport,
    ) -> Vec<TaskPlan> {
        let prob = self.scene.problem();
        let lits = domain.cache().get(s, self.scene);
        let prompt = create_prompt(s, &prob.goal, prob, &lits);
        let mut req = LlmRequest::new(prompt, &prob.name, self.cfg.n_batch);
        req.temperature = self.cfg.temperature;
        req.model = self.cfg.model.clone();
        let started = Instant::now();
        report.llm_calls += 1;
        let batch = self.backend.query(&req);
        report.llm_latency += started.elapsed();
        let batch = match batch {
            Ok(b) => b,
            Err(e) => {
                log::warn!("model query failed ({e}); searching without plans");
                return Vec::new();
            }
        };
        report.responses += batch.responses.len();
        let mut plans = Vec::new();
        for r in &batch.responses {
            match parse_response(r, prob) {
                Ok(p) => plans.push(p.plan),
                Err(e) => {
                    report.parse_failures += 1;
                    log::debug!("dropping unparseable response: {e}");
                }
            }
        }
        if plans.is_empty() {
            log::info!("no usable plan in the batch; searching without plans");
        }
        plans
    }

    /// Plans from the remembered first batch whose prefix matches the
    /// executed actions, with that prefix removed.
    fn remembered_plans(&self) -> Vec<TaskPlan> {
        let done = &self.executed;
        self.remembered
            .iter()
            .flatten()
            .filter(|p| p.actions.len() > done.len() && p.actions[..done.len()] == done[..])
            .map(|p| TaskPlan {
                actions: p.actions[done.len()..].to_vec(),
            })
            .collect()
    }

    fn empty_report() -> StalmReport {
        StalmReport {
            decision: Decision::NoAction,
            simulations: 0,
            llm_calls: 0,
            responses: 0,
            parse_failures: 0,
            llm_latency: Duration::ZERO,
            failure_tags: Vec::new(),
        }
    }

    /// Gets task plans for `s` and concretizes them. Returns whether one
    /// reached the goal and every attempted plan, the successful one last.
    fn attempt(
        &mut self,
        s: &WorldState,
        h: usize,
        domain: &mut TampDomain<'_>,
        rng: &mut ChaCha8Rng,
        report: &mut StalmReport,
    ) -> (bool, Vec<ConcretePlan>) {
        let task_plans = if self.cfg.single_query && self.remembered.is_some() {
            self.remembered_plans()
        } else {
            let plans = self.query(s, domain, report);
            if self.cfg.single_query {
                self.remembered = Some(plans.clone());
                self.executed.clear();
            }
            plans
        };
        let (success, plans) = concretize(&task_plans, s, h, &self.cfg, domain, rng);
        report.failure_tags = plans.iter().filter_map(|p| p.failure).collect();
        (success, plans)
    }

    /// One planning step from `s` with `h` actions already executed.
    pub fn step(
        &mut self,
        s: &WorldState,
        h: usize,
        rng: &mut ChaCha8Rng,
        deadline: Option<Instant>,
    ) -> StalmReport {
        let mut report = Self::empty_report();
        let mut domain = TampDomain::new(self.scene, self.cfg.reward_mode);
        let (success, plans) = self.attempt(s, h, &mut domain, rng, &mut report);
        if success {
            let plan = plans
                .into_iter()
                .last()
                .expect("successful plan is returned last");
            report.decision = Decision::Plan(plan);
            return report;
        }
        let warm: Vec<Vec<WarmStep<TampDomain<'_>>>> =
            plans.iter().map(|p| p.warm_steps()).collect();
        let tree = warm_started_uct(&warm, s, h, &self.cfg, &mut domain, rng, deadline);
        report.simulations = tree.stats.simulations;
        if let Some((a, k)) = tree.best_root() {
            report.decision = Decision::Action {
                action: *a,
                params: k.param.clone(),
                state: k.child_state.clone(),
                reward: k.reward,
            };
        }
        report
    }

    /// Like [`Stalm::step`] without the search fallback: when no plan
    /// reaches the goal, executes the first step of the attempted plan with
    /// the highest return over its feasible steps (earliest on ties).
    pub fn step_without_search(
        &mut self,
        s: &WorldState,
        h: usize,
        rng: &mut ChaCha8Rng,
    ) -> StalmReport {
        let mut report = Self::empty_report();
        let mut domain = TampDomain::new(self.scene, self.cfg.reward_mode);
        let (success, plans) = self.attempt(s, h, &mut domain, rng, &mut report);
        if success {
            let plan = plans
                .into_iter()
                .last()
                .expect("successful plan is returned last");
            report.decision = Decision::Plan(plan);
            return report;
        }
        let mut best: Option<(f64, &ConcretePlan)> = None;
        for p in &plans {
            let Some(first) = p.steps.first() else {
                continue;
            };
            if first.state.failed {
                continue;
            }
            let ret: f64 = p
                .steps
                .iter()
                .take_while(|st| !st.state.failed)
                .map(|st| st.reward)
                .sum();
            if best.is_none_or(|(b, _)| ret > b) {
                best = Some((ret, p));
            }
        }
        if let Some((_, p)) = best {
            let st = &p.steps[0];
            report.decision = Decision::Action {
                action: st.action,
                params: st.params.clone(),
                state: st.state.clone(),
                reward: st.reward,
            };
        }
        report
    }
}
