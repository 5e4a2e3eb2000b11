//! Planning algorithms: plan concretization, warm-started MCTS, the
//! language-model-guided receding-horizon loop, and the UCT baselines.

pub mod hcount;
pub mod mcts;
pub mod stalm;
pub mod tamp;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::RewardMode;

pub use hcount::{hcount, hcount_value};
pub use mcts::{Domain, Search, Tree};
pub use stalm::{Decision, Stalm, StalmReport};
pub use tamp::{concretize, ConcretePlan, ConcreteStep, FailureTag, TampDomain};

/// Leaf evaluator used when a search reaches a new node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueFn {
    #[default]
    Rollout,
    Hcount,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("gamma must lie in (0, 1], got {0}")]
    Gamma(f64),
    #[error("c_alpha must lie in (0, 1), got {0}")]
    CAlpha(f64),
    #[error("k_alpha must be positive, got {0}")]
    KAlpha(f64),
    #[error("reward_scale must be positive, got {0}")]
    RewardScale(f64),
    #[error("n_batch must be at least 1")]
    Batch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub n_batch: usize,
    pub n_budget: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub c_uct: f64,
    pub k_alpha: f64,
    pub c_alpha: f64,
    pub rollout_depth: usize,
    pub seed: u64,
    pub reward_mode: RewardMode,
    /// Uniform positive scale on rewards; the exploration constant is
    /// scaled with it so action choices are unchanged.
    pub reward_scale: f64,
    pub value: ValueFn,
    /// Record backups and widening decisions in the tree.
    pub trace: bool,
    /// Query the model once per episode instead of once per executed action.
    pub single_query: bool,
    pub temperature: f64,
    pub model: String,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            n_batch: 5,
            n_budget: 30,
            horizon: 20,
            gamma: 0.99,
            c_uct: 50.0,
            k_alpha: 1.5,
            c_alpha: 0.15,
            rollout_depth: 5,
            seed: 0,
            reward_mode: RewardMode::Delta,
            reward_scale: 1.0,
            value: ValueFn::Rollout,
            trace: false,
            single_query: false,
            temperature: 1.0,
            model: "gpt-4-turbo".into(),
        }
    }
}

impl PlannerConfig {
    /// Plain UCT baseline settings: no model, larger budget.
    pub fn uct_baseline() -> Self {
        Self {
            n_budget: 35,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(ConfigError::Gamma(self.gamma));
        }
        if !(self.c_alpha > 0.0 && self.c_alpha < 1.0) {
            return Err(ConfigError::CAlpha(self.c_alpha));
        }
        if self.k_alpha.is_nan() || self.k_alpha <= 0.0 {
            return Err(ConfigError::KAlpha(self.k_alpha));
        }
        if self.reward_scale.is_nan() || self.reward_scale <= 0.0 {
            return Err(ConfigError::RewardScale(self.reward_scale));
        }
        if self.n_batch == 0 {
            return Err(ConfigError::Batch);
        }
        Ok(())
    }
}
