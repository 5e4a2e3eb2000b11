//! Benchmark harness: bundled problems, the on-disk problem format, seeded
//! trial and suite runners, and brute-force oracles.

pub mod fixtures;
pub mod oracle;
pub mod problem;
pub mod runner;

pub use problem::{load_problem, LoadError, ProblemFile};
pub use runner::{
    run_suite, run_trial, LlmSpec, Method, Suite, SuiteRow, TrialConfig, TrialResult,
};

use std::path::{Path, PathBuf};

use tamp_core::motion::literals::compute_literals;
use tamp_core::motion::{MotionConfig, MotionError, Scene};
use tamp_core::prompt::create_prompt;
use tamp_core::world::{ProblemInstance, WorldState};

/// Directory holding the bundled problem files.
pub fn problems_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems")
}

/// Directory holding the bundled replay responses.
pub fn replay_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("replay")
}

/// System and user prompt for `s`, separated by a blank line.
pub fn render_prompt(prob: &ProblemInstance, s: &WorldState) -> Result<String, MotionError> {
    let scene = Scene::new(prob.clone(), MotionConfig::default())?;
    let lits = compute_literals(s, &scene);
    let bundle = create_prompt(s, &prob.goal, prob, &lits);
    Ok(format!("{}\n\n{}", bundle.system_text, bundle.user_text))
}

/// File name of the golden prompt of `s`.
pub fn golden_prompt_name(prob: &ProblemInstance, s: &WorldState) -> String {
    format!("{}.{}.prompt.txt", prob.name, s.digest())
}
