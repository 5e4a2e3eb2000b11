use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tamp_bench::oracle::{backup_oracle, occlusion_sweep, widening_fuzz, TwoStepMdp};
use tamp_bench::runner::aggregate;
use tamp_bench::{
    fixtures, load_problem, render_prompt, run_suite, run_trial, LlmSpec, Method, Suite,
    TrialConfig,
};
use tamp_core::llm::BatchMode;
use tamp_core::par::Parallelism;
use tamp_core::planner::PlannerConfig;
use tamp_core::world::{ProblemInstance, RewardMode};

#[derive(Parser)]
#[command(
    name = "tamp",
    about = "Language-model-guided task and motion planning benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single trial and print the executed plan.
    Plan {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run every problem x method x seed and print the results table.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        /// Seeds 0..N per problem and method.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Run trials one after another instead of on the worker pool.
        #[arg(long)]
        sequential: bool,
        /// Leave timing fields out of the records so output depends only on
        /// the inputs.
        #[arg(long)]
        no_timing: bool,
    },
    /// Print the prompt for a problem's initial state.
    Prompt {
        #[arg(long)]
        problem: String,
    },
    /// Run the brute-force occlusion, backup and widening oracles.
    Oracle {
        /// Number of random scenes for the occlusion oracle.
        #[arg(long, default_value_t = 200)]
        seeds: u64,
        /// Simulations for the backup oracle.
        #[arg(long, default_value_t = 500)]
        budget: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LlmKind {
    Http,
    Replay,
}

#[derive(Clone, Copy, ValueEnum)]
enum RewardArg {
    Delta,
    PositiveOnly,
}

#[derive(Args)]
struct RunArgs {
    /// Problem file path or bundled problem name; repeatable. Defaults to
    /// every bundled problem for `bench`.
    #[arg(long)]
    problem: Vec<String>,
    /// stalm, concretize-only, uct or uct-hcount; repeatable.
    #[arg(long)]
    method: Vec<String>,
    /// Simulations per step.
    #[arg(long)]
    budget: Option<usize>,
    /// Seconds per trial, overriding the problem's budget.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, value_enum, default_value = "replay")]
    llm: LlmKind,
    #[arg(long, default_value = "https://api.openai.com/v1/chat/completions")]
    endpoint: String,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    replay_dir: Option<PathBuf>,
    /// Write line-delimited JSON records here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Query the model once per episode.
    #[arg(long)]
    single_query: bool,
    #[arg(long, value_enum, default_value = "delta")]
    reward_mode: RewardArg,
}

fn resolve_problem(arg: &str) -> Result<ProblemInstance> {
    let path = Path::new(arg);
    if path.exists() {
        return load_problem(path).with_context(|| format!("loading {arg}"));
    }
    if let Some(p) = fixtures::all().into_iter().find(|p| p.name == arg) {
        return Ok(p);
    }
    bail!("`{arg}` is neither a problem file nor a bundled problem name")
}

impl RunArgs {
    fn problems(&self, default_all: bool) -> Result<Vec<ProblemInstance>> {
        if self.problem.is_empty() {
            if default_all {
                return Ok(fixtures::all());
            }
            bail!("--problem is required");
        }
        self.problem.iter().map(|p| resolve_problem(p)).collect()
    }

    fn methods(&self, default: &[Method]) -> Result<Vec<Method>> {
        if self.method.is_empty() {
            return Ok(default.to_vec());
        }
        self.method
            .iter()
            .map(|m| m.parse::<Method>().map_err(anyhow::Error::msg))
            .collect()
    }

    fn config(&self) -> TrialConfig {
        let mut planner = PlannerConfig {
            single_query: self.single_query,
            reward_mode: match self.reward_mode {
                RewardArg::Delta => RewardMode::Delta,
                RewardArg::PositiveOnly => RewardMode::PositiveOnly,
            },
            ..PlannerConfig::default()
        };
        if let Some(m) = &self.model {
            planner.model = m.clone();
        }
        let llm = match self.llm {
            LlmKind::Replay => LlmSpec::Replay {
                dir: self
                    .replay_dir
                    .clone()
                    .unwrap_or_else(tamp_bench::replay_dir),
                repeat_last: true,
            },
            LlmKind::Http => LlmSpec::Http {
                endpoint: self.endpoint.clone(),
                mode: BatchMode::default(),
            },
        };
        TrialConfig {
            planner,
            budget: self.budget,
            time_limit: self.time_limit,
            llm,
            ..TrialConfig::default()
        }
    }
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Result<()> {
    if let Some(path) = path {
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Plan { run, seed } => {
            let problems = run.problems(false)?;
            let [prob] = problems.as_slice() else {
                bail!("`plan` takes exactly one --problem");
            };
            let methods = run.methods(&[Method::Stalm])?;
            let [method] = methods.as_slice() else {
                bail!("`plan` takes exactly one --method");
            };
            let result = run_trial(prob, *method, seed, &run.config());
            if let Some(e) = &result.error {
                bail!("trial could not run: {e}");
            }
            for (i, st) in result.executed_plan.steps.iter().enumerate() {
                writeln!(
                    stdout,
                    "{i:>2}  {:<40} reward {:+.1}",
                    st.action.describe(prob),
                    st.reward
                )?;
            }
            writeln!(
                stdout,
                "success={} time={:.3}s llm={:.3}s simulations={} llm_calls={} motion_plans={}",
                result.success,
                result.wall_time,
                result.llm_time,
                result.n_simulations,
                result.n_llm_calls,
                result.n_motion_plans
            )?;
            let suite = Suite {
                rows: aggregate(std::slice::from_ref(&result)),
                results: vec![result],
            };
            write_out(&run.out, &suite.to_jsonl(true))?;
        }
        Command::Bench {
            run,
            seeds,
            sequential,
            no_timing,
        } => {
            let problems = run.problems(true)?;
            let methods = run.methods(&Method::ALL)?;
            let seeds: Vec<u64> = (0..seeds).collect();
            let mode = if sequential {
                Parallelism::Sequential
            } else {
                Parallelism::Rayon
            };
            let suite = run_suite(&problems, &methods, &seeds, &run.config(), mode);
            for r in suite.results.iter().filter(|r| r.error.is_some()) {
                log::error!(
                    "{} {} seed {}: {}",
                    r.problem,
                    r.method,
                    r.seed,
                    r.error.as_deref().unwrap_or("")
                );
            }
            write!(stdout, "{}", suite.table())?;
            write_out(&run.out, &suite.to_jsonl(!no_timing))?;
        }
        Command::Prompt { problem } => {
            let prob = resolve_problem(&problem)?;
            writeln!(stdout, "{}", render_prompt(&prob, &prob.s0)?)?;
        }
        Command::Oracle { seeds, budget } => {
            let occ = occlusion_sweep(0..seeds, (3, 6));
            writeln!(
                stdout,
                "occlusion: {} scenes, {} queries, {} mismatches, {} sweep-conservatism exceptions",
                occ.scenes,
                occ.queries,
                occ.mismatches.len(),
                occ.conservatism.len()
            )?;
            for m in occ.mismatches.iter().chain(&occ.conservatism) {
                writeln!(stdout, "  {m}")?;
            }
            let cfg = PlannerConfig {
                horizon: 2,
                ..PlannerConfig::default()
            };
            let b = backup_oracle(&mut TwoStepMdp, Vec::new(), &cfg, budget, 0);
            writeln!(
                stdout,
                "backup: {} simulations, {} backups, max error {:.2e}, {} violations",
                b.simulations,
                b.backups,
                b.max_error,
                b.violations.len()
            )?;
            let w = widening_fuzz(10_000, 0, &PlannerConfig::default());
            writeln!(
                stdout,
                "widening: {} checks, {} draws, {} violations",
                w.checks,
                w.samples,
                w.violations.len()
            )?;
        }
    }
    Ok(())
}
