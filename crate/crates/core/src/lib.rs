//! Task and motion planning for mobile manipulation: a hybrid planning MDP
//! over a 2-D household world, a roadmap motion layer, and Monte Carlo tree
//! search warm-started by language-model task plans.

pub mod geom;
pub mod llm;
pub mod motion;
pub mod par;
pub mod planner;
pub mod prompt;
pub mod scenario;
pub mod world;
