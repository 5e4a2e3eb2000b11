//! Seeded receding-horizon trials and suites of them.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use tamp_core::llm::{BatchMode, FixedBackend, HttpBackend, LlmBackend, ReplayBackend};
use tamp_core::motion::{MotionConfig, Scene};
use tamp_core::par::{self, Parallelism};
use tamp_core::planner::mcts::uct_baseline;
use tamp_core::planner::{
    ConcretePlan, ConcreteStep, Decision, PlannerConfig, Stalm, TampDomain, ValueFn,
};
use tamp_core::world::{goal_satisfied, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Stalm,
    ConcretizeOnly,
    Uct,
    UctHcount,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Stalm,
        Method::ConcretizeOnly,
        Method::Uct,
        Method::UctHcount,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::Stalm => "stalm",
            Method::ConcretizeOnly => "concretize-only",
            Method::Uct => "uct",
            Method::UctHcount => "uct-hcount",
        }
    }

    pub fn needs_llm(self) -> bool {
        matches!(self, Method::Stalm | Method::ConcretizeOnly)
    }

    /// Simulations per step when no budget is given.
    pub fn default_budget(self) -> usize {
        match self {
            Method::Stalm | Method::ConcretizeOnly => PlannerConfig::default().n_budget,
            Method::Uct | Method::UctHcount => PlannerConfig::uct_baseline().n_budget,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| {
                format!("unknown method `{s}` (expected stalm, concretize-only, uct or uct-hcount)")
            })
    }
}

/// How to build the model backend of a trial. Each trial gets a fresh
/// backend, so replay call counters are never shared between trials.
#[derive(Debug, Clone, PartialEq)]
pub enum LlmSpec {
    None,
    Replay { dir: PathBuf, repeat_last: bool },
    Http { endpoint: String, mode: BatchMode },
    Fixed(Vec<String>),
}

impl LlmSpec {
    pub fn build(&self) -> Option<Box<dyn LlmBackend>> {
        match self {
            LlmSpec::None => None,
            LlmSpec::Replay { dir, repeat_last } => Some(Box::new(
                ReplayBackend::new(dir.clone()).repeat_last(*repeat_last),
            )),
            LlmSpec::Http { endpoint, mode } => {
                Some(Box::new(HttpBackend::new(endpoint).mode(*mode)))
            }
            LlmSpec::Fixed(responses) => Some(Box::new(FixedBackend {
                responses: responses.clone(),
            })),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub planner: PlannerConfig,
    /// Simulations per step; the method default when unset.
    pub budget: Option<usize>,
    /// Overrides the problem's time budget, seconds.
    pub time_limit: Option<f64>,
    pub motion: MotionConfig,
    pub llm: LlmSpec,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            planner: PlannerConfig::default(),
            budget: None,
            time_limit: None,
            motion: MotionConfig::default(),
            llm: LlmSpec::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub problem: String,
    pub method: Method,
    pub seed: u64,
    pub success: bool,
    /// Planning time in seconds, excluding time spent waiting on the model.
    pub wall_time: f64,
    pub llm_time: f64,
    pub n_simulations: u64,
    pub n_llm_calls: u64,
    pub n_motion_plans: u64,
    pub executed_plan: ConcretePlan,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialResult {
    /// The record without timing fields, for byte-stable output.
    pub fn untimed(&self) -> TrialResult {
        TrialResult {
            wall_time: 0.0,
            llm_time: 0.0,
            ..self.clone()
        }
    }
}

fn failed_result(prob: &ProblemInstance, method: Method, seed: u64, error: String) -> TrialResult {
    TrialResult {
        problem: prob.name.clone(),
        method,
        seed,
        success: false,
        wall_time: 0.0,
        llm_time: 0.0,
        n_simulations: 0,
        n_llm_calls: 0,
        n_motion_plans: 0,
        executed_plan: ConcretePlan::empty(&prob.s0),
        error: Some(error),
    }
}

/// Runs one receding-horizon episode: plan from the current state, execute
/// the decision, repeat until the goal, the horizon, a failure or the time
/// budget. A model plan reaching the goal is executed whole.
pub fn run_trial(
    prob: &ProblemInstance,
    method: Method,
    seed: u64,
    cfg: &TrialConfig,
) -> TrialResult {
    let scene = match Scene::new(prob.clone(), cfg.motion.clone()) {
        Ok(s) => s,
        Err(e) => return failed_result(prob, method, seed, e.to_string()),
    };
    let mut planner = cfg.planner.clone();
    planner.seed = seed;
    planner.horizon = prob.horizon;
    planner.n_budget = cfg.budget.unwrap_or(method.default_budget());
    if method == Method::UctHcount {
        planner.value = ValueFn::Hcount;
    }
    if let Err(e) = planner.validate() {
        return failed_result(prob, method, seed, e.to_string());
    }
    let backend = if method.needs_llm() {
        match cfg.llm.build() {
            Some(b) => Some(b),
            None => {
                return failed_result(
                    prob,
                    method,
                    seed,
                    format!("method `{method}` needs a model backend"),
                )
            }
        }
    } else {
        None
    };

    let budget = Duration::from_secs_f64(cfg.time_limit.unwrap_or(prob.time_budget).max(0.0));
    let start = Instant::now();
    let deadline = start + budget;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stalm = backend
        .as_deref()
        .map(|b| Stalm::new(&scene, planner.clone(), b));
    let mut plan = ConcretePlan::empty(&prob.s0);
    let mut s = prob.s0.clone();
    let (mut sims, mut calls, mut llm_time) = (0u64, 0u64, Duration::ZERO);

    while plan.steps.len() < prob.horizon
        && !s.failed
        && !goal_satisfied(&s, prob)
        && Instant::now() < deadline
    {
        let h = plan.steps.len();
        let decision = match (method, stalm.as_mut()) {
            (Method::Stalm | Method::ConcretizeOnly, Some(st)) => {
                let report = if method == Method::Stalm {
                    st.step(&s, h, &mut rng, Some(deadline))
                } else {
                    st.step_without_search(&s, h, &mut rng)
                };
                sims += report.simulations;
                calls += report.llm_calls;
                llm_time += report.llm_latency;
                report.decision
            }
            _ => {
                let mut domain = TampDomain::new(&scene, planner.reward_mode)
                    .track_literals(method == Method::UctHcount);
                let tree = uct_baseline(&s, h, &planner, &mut domain, &mut rng, Some(deadline));
                sims += tree.stats.simulations;
                match tree.best_root() {
                    Some((a, k)) => Decision::Action {
                        action: *a,
                        params: k.param.clone(),
                        state: k.child_state.clone(),
                        reward: k.reward,
                    },
                    None => Decision::NoAction,
                }
            }
        };
        match decision {
            Decision::Plan(p) => {
                plan.steps.extend(p.steps);
                s = p.end_state;
                break;
            }
            Decision::Action {
                action,
                params,
                state,
                reward,
            } => {
                if let Some(st) = stalm.as_mut() {
                    st.record(action);
                }
                plan.steps.push(ConcreteStep {
                    action,
                    params,
                    state: state.clone(),
                    reward,
                });
                s = state;
            }
            Decision::NoAction => break,
        }
    }
    let success = !s.failed && goal_satisfied(&s, prob);
    plan.achieved_goal = success;
    plan.end_state = s;
    let elapsed = start.elapsed();
    TrialResult {
        problem: prob.name.clone(),
        method,
        seed,
        success,
        wall_time: elapsed.saturating_sub(llm_time).as_secs_f64(),
        llm_time: llm_time.as_secs_f64(),
        n_simulations: sims,
        n_llm_calls: calls,
        n_motion_plans: scene.plan_calls(),
        executed_plan: plan,
        error: None,
    }
}

/// Aggregate of one (problem, method) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub problem: String,
    pub method: Method,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean wall time over successful trials; `None` when there were none.
    pub mean_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub results: Vec<TrialResult>,
    pub rows: Vec<SuiteRow>,
}

/// Runs every (problem, method, seed) trial, one trial per worker, and
/// aggregates per (problem, method) in input order.
pub fn run_suite(
    problems: &[ProblemInstance],
    methods: &[Method],
    seeds: &[u64],
    cfg: &TrialConfig,
    mode: Parallelism,
) -> Suite {
    let jobs: Vec<(usize, Method, u64)> = (0..problems.len())
        .flat_map(|p| {
            methods
                .iter()
                .flat_map(move |&m| seeds.iter().map(move |&s| (p, m, s)))
        })
        .collect();
    let results = par::map(&jobs, mode, |&(p, m, seed)| {
        run_trial(&problems[p], m, seed, cfg)
    });
    let rows = aggregate(&results);
    Suite { results, rows }
}

/// One row per distinct (problem, method) in first-appearance order.
pub fn aggregate(results: &[TrialResult]) -> Vec<SuiteRow> {
    let mut keys: Vec<(String, Method)> = Vec::new();
    for r in results {
        let key = (r.problem.clone(), r.method);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(problem, method)| {
            let of: Vec<&TrialResult> = results
                .iter()
                .filter(|r| r.problem == problem && r.method == method)
                .collect();
            let wins: Vec<&&TrialResult> = of.iter().filter(|r| r.success).collect();
            let mean_time = if wins.is_empty() {
                None
            } else {
                Some(wins.iter().map(|r| r.wall_time).sum::<f64>() / wins.len() as f64)
            };
            SuiteRow {
                problem,
                method,
                trials: of.len(),
                successes: wins.len(),
                success_rate: wins.len() as f64 / of.len() as f64,
                mean_time,
            }
        })
        .collect()
}

impl Suite {
    /// Line-delimited JSON: one `trial` record per trial, then one `row`
    /// record per (problem, method). Without timing the output depends only
    /// on the inputs.
    pub fn to_jsonl(&self, timing: bool) -> String {
        #[derive(Serialize)]
        #[serde(tag = "kind", rename_all = "snake_case")]
        enum Record<'a> {
            Trial(&'a TrialResult),
            Row(&'a SuiteRow),
        }
        let mut out = String::new();
        let untimed: Vec<TrialResult>;
        let results: &[TrialResult] = if timing {
            &self.results
        } else {
            untimed = self.results.iter().map(TrialResult::untimed).collect();
            &untimed
        };
        for r in results {
            out.push_str(&serde_json::to_string(&Record::Trial(r)).expect("trial serializes"));
            out.push('\n');
        }
        let rows = if timing {
            self.rows.clone()
        } else {
            aggregate(results)
        };
        for r in &rows {
            let r = if timing {
                r.clone()
            } else {
                SuiteRow {
                    mean_time: None,
                    ..r.clone()
                }
            };
            out.push_str(&serde_json::to_string(&Record::Row(&r)).expect("row serializes"));
            out.push('\n');
        }
        out
    }

    /// Aligned text table: success rate and mean time of successful trials
    /// per problem and method, `t/o` when no trial succeeded.
    pub fn table(&self) -> String {
        let mut methods: Vec<Method> = Vec::new();
        let mut problems: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !methods.contains(&r.method) {
                methods.push(r.method);
            }
            if !problems.contains(&r.problem.as_str()) {
                problems.push(&r.problem);
            }
        }
        let mut cells: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["problem".to_string()];
        header.extend(methods.iter().map(|m| m.id().to_string()));
        cells.push(header);
        for p in &problems {
            let mut line = vec![p.to_string()];
            for m in &methods {
                let cell = match self.rows.iter().find(|r| r.problem == *p && r.method == *m) {
                    None => "-".to_string(),
                    Some(r) => match r.mean_time {
                        None => "t/o".to_string(),
                        Some(t) => format!("{:.2} ({:.2}s)", r.success_rate, t),
                    },
                };
                line.push(cell);
            }
            cells.push(line);
        }
        let widths: Vec<usize> = (0..cells[0].len())
            .map(|c| cells.iter().map(|l| l[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for line in &cells {
            let padded: Vec<String> = line
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:<w$}"))
                .collect();
            out.push_str(padded.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}
