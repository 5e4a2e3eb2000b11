//! Monte Carlo tree search over hybrid actions: UCT over discrete actions,
//! progressive widening over sampled continuous parameters, and warm-up
//! from externally supplied plans.

use std::fmt::Debug;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{PlannerConfig, ValueFn};

/// Result of applying a discrete action with (possibly absent) parameters.
#[derive(Debug, Clone)]
pub struct Outcome<S> {
    pub state: S,
    pub reward: f64,
}

/// The problem a search runs on.
pub trait Domain {
    type State: Clone + Debug;
    type Action: Clone + PartialEq + Debug;
    type Param: Clone + PartialEq + Debug;

    /// Legal discrete actions in enumeration order.
    fn legal_actions(&mut self, s: &Self::State) -> Vec<Self::Action>;
    /// Draws parameters; `None` when sampling fails.
    fn sample(
        &mut self,
        s: &Self::State,
        a: &Self::Action,
        rng: &mut ChaCha8Rng,
    ) -> Option<Self::Param>;
    /// Applies an action. `None` parameters yield the absorbing failure.
    fn step(
        &mut self,
        s: &Self::State,
        a: &Self::Action,
        k: Option<&Self::Param>,
    ) -> Outcome<Self::State>;
    /// Goal or failure.
    fn is_terminal(&self, s: &Self::State) -> bool;
    /// Heuristic leaf value for the node reached by `last`.
    fn heuristic_value(&mut self, _s: &Self::State, _last: &Self::Action) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct KappaEntry<P, S> {
    pub param: Option<P>,
    pub q: f64,
    pub visits: u64,
    pub reward: f64,
    pub child: usize,
    pub child_state: S,
}

#[derive(Debug, Clone)]
pub struct ContinuousNode<P, S> {
    pub n: u64,
    pub kappas: Vec<KappaEntry<P, S>>,
}

#[derive(Debug, Clone)]
pub struct ActionEntry<A> {
    pub action: A,
    pub q: f64,
    pub visits: u64,
    pub cont: usize,
}

#[derive(Debug, Clone)]
pub struct DiscreteNode<A> {
    pub n: u64,
    /// Tried actions in insertion order.
    pub entries: Vec<ActionEntry<A>>,
    /// Remaining horizon is `horizon - depth`.
    pub depth: usize,
}

impl<A: PartialEq> DiscreteNode<A> {
    fn entry(&self, a: &A) -> Option<usize> {
        self.entries.iter().position(|e| &e.action == a)
    }
}

/// One backup through a (discrete entry, continuous entry) pair.
#[derive(Debug, Clone, Serialize)]
pub struct Backup {
    pub seq: u64,
    pub phase: &'static str,
    pub node: usize,
    pub entry: usize,
    pub cont: usize,
    pub kappa: usize,
    pub total: f64,
    pub q_entry: f64,
    pub q_kappa: f64,
}

/// One progressive-widening decision, recorded for bound checks.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WideningCheck {
    pub n: u64,
    pub children_before: usize,
    pub sampled: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SearchStats {
    pub simulations: u64,
    pub rollouts: u64,
    pub heuristic_calls: u64,
    pub samples: u64,
}

/// Search tree for one root state. Node 0 is the root.
#[derive(Debug, Clone)]
pub struct Tree<D: Domain> {
    pub discrete: Vec<DiscreteNode<D::Action>>,
    pub continuous: Vec<ContinuousNode<D::Param, D::State>>,
    pub root_state: D::State,
    pub stats: SearchStats,
    pub trace: Option<Vec<Backup>>,
    pub widening: Option<Vec<WideningCheck>>,
    seq: u64,
}

/// A warm-up step: the action, its parameters, and the observed result.
#[derive(Debug, Clone)]
pub struct WarmStep<D: Domain> {
    pub action: D::Action,
    pub param: Option<D::Param>,
    pub state: D::State,
    pub reward: f64,
}

/// UCT score; untried entries are scored with `q = 0`, `visits = 0`.
pub fn uct_score(q: f64, parent_n: u64, visits: u64, c: f64) -> f64 {
    let ln = (parent_n.max(1) as f64).ln();
    q + c * (ln / (1.0 + visits as f64)).sqrt()
}

/// Progressive-widening test: a new parameter may be drawn while
/// `children ≤ k · n^alpha`.
pub fn widening_allows(children: usize, n: u64, k_alpha: f64, c_alpha: f64) -> bool {
    (children as f64) <= k_alpha * (n as f64).powf(c_alpha)
}

fn mean_update(q: &mut f64, visits: &mut u64, total: f64) {
    *visits += 1;
    *q += (total - *q) / *visits as f64;
}

pub struct Search<'a, D: Domain> {
    pub domain: &'a mut D,
    pub cfg: &'a PlannerConfig,
    pub rng: &'a mut ChaCha8Rng,
    pub tree: Tree<D>,
}

impl<'a, D: Domain> Search<'a, D> {
    pub fn new(
        domain: &'a mut D,
        cfg: &'a PlannerConfig,
        rng: &'a mut ChaCha8Rng,
        root: D::State,
        depth: usize,
    ) -> Self {
        let tree = Tree {
            discrete: vec![DiscreteNode {
                n: 0,
                entries: Vec::new(),
                depth,
            }],
            continuous: Vec::new(),
            root_state: root,
            stats: SearchStats::default(),
            trace: cfg.trace.then(Vec::new),
            widening: cfg.trace.then(Vec::new),
            seq: 0,
        };
        Search {
            domain,
            cfg,
            rng,
            tree,
        }
    }

    fn c(&self) -> f64 {
        self.cfg.c_uct * self.cfg.reward_scale
    }

    fn new_discrete(&mut self, depth: usize) -> usize {
        self.tree.discrete.push(DiscreteNode {
            n: 0,
            entries: Vec::new(),
            depth,
        });
        self.tree.discrete.len() - 1
    }

    fn ensure_entry(&mut self, node: usize, a: &D::Action) -> usize {
        if let Some(i) = self.tree.discrete[node].entry(a) {
            return i;
        }
        self.tree.continuous.push(ContinuousNode {
            n: 0,
            kappas: Vec::new(),
        });
        let cont = self.tree.continuous.len() - 1;
        let entries = &mut self.tree.discrete[node].entries;
        entries.push(ActionEntry {
            action: a.clone(),
            q: 0.0,
            visits: 0,
            cont,
        });
        entries.len() - 1
    }

    fn push_kappa(
        &mut self,
        cont: usize,
        depth: usize,
        param: Option<D::Param>,
        out: Outcome<D::State>,
    ) -> usize {
        let child = self.new_discrete(depth + 1);
        let kappas = &mut self.tree.continuous[cont].kappas;
        kappas.push(KappaEntry {
            param,
            q: 0.0,
            visits: 0,
            reward: out.reward,
            child,
            child_state: out.state,
        });
        kappas.len() - 1
    }

    fn terminal_at(&self, s: &D::State, depth: usize) -> bool {
        depth >= self.cfg.horizon || self.domain.is_terminal(s)
    }

    fn leaf_value(&mut self, s: &D::State, depth: usize, last: &D::Action) -> f64 {
        if self.terminal_at(s, depth) {
            return 0.0;
        }
        match self.cfg.value {
            ValueFn::Rollout => self.rollout(s, depth),
            ValueFn::Hcount => {
                self.tree.stats.heuristic_calls += 1;
                self.domain.heuristic_value(s, last) * self.cfg.reward_scale
            }
        }
    }

    /// Random-policy return from `s`, at most `min(rollout_depth, H − depth)`
    /// steps.
    pub fn rollout(&mut self, s: &D::State, depth: usize) -> f64 {
        self.tree.stats.rollouts += 1;
        if self.terminal_at(s, depth) {
            return 0.0;
        }
        let steps = self.cfg.rollout_depth.min(self.cfg.horizon - depth);
        let mut s = s.clone();
        let mut total = 0.0;
        let mut discount = 1.0;
        for _ in 0..steps {
            let actions = self.domain.legal_actions(&s);
            if actions.is_empty() {
                break;
            }
            let a = &actions[self.rng.gen_range(0..actions.len())];
            let k = self.domain.sample(&s, a, self.rng);
            self.tree.stats.samples += 1;
            let out = self.domain.step(&s, a, k.as_ref());
            total += discount * out.reward * self.cfg.reward_scale;
            discount *= self.cfg.gamma;
            s = out.state;
            if self.domain.is_terminal(&s) {
                break;
            }
        }
        total
    }

    fn backup(&mut self, phase: &'static str, node: usize, entry: usize, kappa: usize, total: f64) {
        let cont = self.tree.discrete[node].entries[entry].cont;
        let e = &mut self.tree.discrete[node].entries[entry];
        mean_update(&mut e.q, &mut e.visits, total);
        let q_entry = e.q;
        let k = &mut self.tree.continuous[cont].kappas[kappa];
        mean_update(&mut k.q, &mut k.visits, total);
        let q_kappa = k.q;
        self.tree.seq += 1;
        if let Some(trace) = self.tree.trace.as_mut() {
            trace.push(Backup {
                seq: self.tree.seq,
                phase,
                node,
                entry,
                cont,
                kappa,
                total,
                q_entry,
                q_kappa,
            });
        }
    }

    /// Inserts a plan's steps below `node` and backs up its return.
    pub fn add_to_tree(&mut self, node: usize, steps: &[WarmStep<D>]) -> f64 {
        let Some((first, rest)) = steps.split_first() else {
            return 0.0;
        };
        self.tree.discrete[node].n += 1;
        let depth = self.tree.discrete[node].depth;
        let entry = self.ensure_entry(node, &first.action);
        let cont = self.tree.discrete[node].entries[entry].cont;
        self.tree.continuous[cont].n += 1;
        let existing = self.tree.continuous[cont]
            .kappas
            .iter()
            .position(|k| k.param.is_some() && k.param == first.param);
        let kappa = existing.unwrap_or_else(|| {
            let out = Outcome {
                state: first.state.clone(),
                reward: first.reward,
            };
            self.push_kappa(cont, depth, first.param.clone(), out)
        });
        let (child, reward) = {
            let k = &self.tree.continuous[cont].kappas[kappa];
            (k.child, k.reward * self.cfg.reward_scale)
        };
        let child_state = self.tree.continuous[cont].kappas[kappa].child_state.clone();
        let total = if rest.is_empty() || self.terminal_at(&child_state, depth + 1) {
            self.tree.discrete[child].n += 1;
            reward + self.cfg.gamma * self.leaf_value(&child_state, depth + 1, &first.action)
        } else {
            reward + self.cfg.gamma * self.add_to_tree(child, rest)
        };
        self.backup("warmup", node, entry, kappa, total);
        total
    }

    pub fn warm_up(&mut self, plans: &[Vec<WarmStep<D>>]) {
        for p in plans {
            self.add_to_tree(0, p);
        }
    }

    /// One simulation from `node` in state `s`.
    pub fn simulate(&mut self, node: usize, s: &D::State) -> f64 {
        self.tree.discrete[node].n += 1;
        let depth = self.tree.discrete[node].depth;
        if self.terminal_at(s, depth) {
            return 0.0;
        }
        let actions = self.domain.legal_actions(s);
        if actions.is_empty() {
            return 0.0;
        }
        let parent_n = self.tree.discrete[node].n;
        let c = self.c();
        let mut best: Option<(f64, usize)> = None;
        for (i, a) in actions.iter().enumerate() {
            let (q, v) = match self.tree.discrete[node].entry(a) {
                Some(e) => {
                    let e = &self.tree.discrete[node].entries[e];
                    (e.q, e.visits)
                }
                None => (0.0, 0),
            };
            let score = uct_score(q, parent_n, v, c);
            if best.is_none_or(|(b, _)| score > b) {
                best = Some((score, i));
            }
        }
        let action = actions[best.expect("nonempty action set").1].clone();
        let entry = self.ensure_entry(node, &action);
        let cont = self.tree.discrete[node].entries[entry].cont;
        self.tree.continuous[cont].n += 1;
        let cn = self.tree.continuous[cont].n;
        let children = self.tree.continuous[cont].kappas.len();
        let sampled = widening_allows(children, cn, self.cfg.k_alpha, self.cfg.c_alpha);
        if let Some(w) = self.tree.widening.as_mut() {
            w.push(WideningCheck {
                n: cn,
                children_before: children,
                sampled,
            });
        }
        let mut fresh = None;
        if sampled {
            let k = self.domain.sample(s, &action, self.rng);
            self.tree.stats.samples += 1;
            let out = self.domain.step(s, &action, k.as_ref());
            fresh = Some(self.push_kappa(cont, depth, k, out));
        }
        let kappa = {
            let kn = &self.tree.continuous[cont];
            let mut best: Option<(f64, usize)> = None;
            for (i, k) in kn.kappas.iter().enumerate() {
                let score = uct_score(k.q, kn.n, k.visits, c);
                if best.is_none_or(|(b, _)| score > b) {
                    best = Some((score, i));
                }
            }
            best.expect("continuous node has a child after widening").1
        };
        let (child, reward, child_state) = {
            let k = &self.tree.continuous[cont].kappas[kappa];
            (
                k.child,
                k.reward * self.cfg.reward_scale,
                k.child_state.clone(),
            )
        };
        let total = if fresh == Some(kappa) || self.terminal_at(&child_state, depth + 1) {
            self.tree.discrete[child].n += 1;
            reward + self.cfg.gamma * self.leaf_value(&child_state, depth + 1, &action)
        } else {
            reward + self.cfg.gamma * self.simulate(child, &child_state)
        };
        self.backup("simulate", node, entry, kappa, total);
        total
    }

    /// Runs up to `budget` simulations from the root, stopping early at the
    /// deadline.
    pub fn run(&mut self, budget: usize, deadline: Option<Instant>) {
        let root = self.tree.root_state.clone();
        for _ in 0..budget {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                break;
            }
            self.simulate(0, &root);
            self.tree.stats.simulations += 1;
        }
    }

    pub fn into_tree(self) -> Tree<D> {
        self.tree
    }
}

/// Builds a tree at `s0` (`h0` actions already taken), warms it up with
/// `plans`, then runs `cfg.n_budget` simulations.
pub fn warm_started_uct<D: Domain>(
    plans: &[Vec<WarmStep<D>>],
    s0: &D::State,
    h0: usize,
    cfg: &PlannerConfig,
    domain: &mut D,
    rng: &mut ChaCha8Rng,
    deadline: Option<Instant>,
) -> Tree<D> {
    let mut search = Search::new(domain, cfg, rng, s0.clone(), h0);
    search.warm_up(plans);
    search.run(cfg.n_budget, deadline);
    search.into_tree()
}

/// Plain UCT: a warm-started search with no plans.
pub fn uct_baseline<D: Domain>(
    s0: &D::State,
    h0: usize,
    cfg: &PlannerConfig,
    domain: &mut D,
    rng: &mut ChaCha8Rng,
    deadline: Option<Instant>,
) -> Tree<D> {
    warm_started_uct(&[], s0, h0, cfg, domain, rng, deadline)
}

/// A root action with its chosen parameter entry.
pub type RootChoice<'t, D> = (
    &'t <D as Domain>::Action,
    &'t KappaEntry<<D as Domain>::Param, <D as Domain>::State>,
);

impl<D: Domain> Tree<D> {
    /// Root action with the highest Q among tried actions, then its
    /// parameter with the highest Q. Ties go to the earliest insertion.
    pub fn best_root(&self) -> Option<RootChoice<'_, D>> {
        let root = &self.discrete[0];
        let mut best: Option<&ActionEntry<D::Action>> = None;
        for e in &root.entries {
            if e.visits > 0 && best.is_none_or(|b| e.q > b.q) {
                best = Some(e);
            }
        }
        let e = best?;
        let cont = &self.continuous[e.cont];
        let mut bk: Option<&KappaEntry<D::Param, D::State>> = None;
        for k in &cont.kappas {
            if k.visits > 0 && bk.is_none_or(|b| k.q > b.q) {
                bk = Some(k);
            }
        }
        bk.map(|k| (&e.action, k))
    }

    /// Structural fingerprint for equality checks between runs.
    pub fn fingerprint(&self) -> String
    where
        D::Action: Debug,
    {
        let mut out = String::new();
        for (i, n) in self.discrete.iter().enumerate() {
            out.push_str(&format!("d{i} n={} depth={}\n", n.n, n.depth));
            for e in &n.entries {
                out.push_str(&format!(
                    "  {:?} q={:.12} v={} c={}\n",
                    e.action, e.q, e.visits, e.cont
                ));
            }
        }
        for (i, c) in self.continuous.iter().enumerate() {
            out.push_str(&format!("c{i} n={}\n", c.n));
            for k in &c.kappas {
                out.push_str(&format!(
                    "  q={:.12} v={} r={} child={} param={}\n",
                    k.q,
                    k.visits,
                    k.reward,
                    k.child,
                    k.param.is_some()
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widening_bound_with_default_constants() {
        // 1.5 * 100^0.15 ≈ 2.99: sampling allowed with 0, 1 or 2 children
        assert!(widening_allows(2, 100, 1.5, 0.15));
        assert!(!widening_allows(3, 100, 1.5, 0.15));
        assert!(widening_allows(0, 1, 1.5, 0.15));
        assert!(widening_allows(1, 1, 1.5, 0.15));
        assert!(!widening_allows(2, 1, 1.5, 0.15));
    }

    #[test]
    fn uct_prefers_unvisited_after_first_visit() {
        let tried = uct_score(1.0, 4, 3, 2.0);
        let untried = uct_score(0.0, 4, 0, 2.0);
        assert!(untried > tried);
        assert_eq!(uct_score(5.0, 1, 0, 50.0), 5.0);
    }
}
