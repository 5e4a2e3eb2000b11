//! Grounded literals describing a state symbolically, and a per-worker
//! cache that updates them incrementally along search transitions.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use super::Scene;
use crate::world::{at_position, Direction, DiscreteAction, EntityRef, PlaceRef, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Predicate {
    HandAvailable,
    RobotHolding,
    IsClosed,
    AtPosition,
    PickOccludedBy,
    PlaceOccludedBy,
}

impl Predicate {
    pub fn name(self) -> &'static str {
        match self {
            Predicate::HandAvailable => "HandAvailable",
            Predicate::RobotHolding => "RobotHolding",
            Predicate::IsClosed => "IsClosed",
            Predicate::AtPosition => "AtPosition",
            Predicate::PickOccludedBy => "PickOccludedBy",
            Predicate::PlaceOccludedBy => "PlaceOccludedBy",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Predicate::HandAvailable => 0,
            Predicate::RobotHolding | Predicate::IsClosed => 1,
            Predicate::PickOccludedBy => 2,
            Predicate::AtPosition => 3,
            Predicate::PlaceOccludedBy => 4,
        }
    }
}

/// A predicate applied to entity names and direction tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundedLiteral {
    predicate: Predicate,
    args: Vec<String>,
}

impl GroundedLiteral {
    /// # Panics
    /// If the argument count does not match the predicate arity.
    pub fn new(predicate: Predicate, args: Vec<String>) -> Self {
        assert_eq!(
            args.len(),
            predicate.arity(),
            "{} takes {} arguments",
            predicate.name(),
            predicate.arity()
        );
        Self { predicate, args }
    }

    pub fn predicate(&self) -> Predicate {
        self.predicate
    }

    pub fn args(&self) -> &[String] {
        &self.args
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.args.iter().any(|a| a == name)
    }
}

impl Ord for GroundedLiteral {
    fn cmp(&self, other: &Self) -> Ordering {
        self.predicate
            .name()
            .cmp(other.predicate.name())
            .then_with(|| self.args.cmp(&other.args))
    }
}

impl PartialOrd for GroundedLiteral {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GroundedLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate.name())?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// Sorted literal set. Each literal carries the cache generation it was
/// computed in; equality ignores generations.
#[derive(Debug, Clone, Default)]
pub struct LiteralSet {
    entries: BTreeMap<GroundedLiteral, u64>,
}

impl PartialEq for LiteralSet {
    fn eq(&self, other: &Self) -> bool {
        self.entries.len() == other.entries.len() && self.entries.keys().eq(other.entries.keys())
    }
}

impl LiteralSet {
    pub fn iter(&self) -> impl Iterator<Item = &GroundedLiteral> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, l: &GroundedLiteral) -> bool {
        self.entries.contains_key(l)
    }

    pub fn generation(&self, l: &GroundedLiteral) -> Option<u64> {
        self.entries.get(l).copied()
    }

    pub fn insert(&mut self, l: GroundedLiteral, generation: u64) {
        self.entries.insert(l, generation);
    }

    fn retain(&mut self, mut keep: impl FnMut(&GroundedLiteral) -> bool) {
        self.entries.retain(|l, _| keep(l));
    }

    pub fn with_predicate(&self, p: Predicate) -> impl Iterator<Item = &GroundedLiteral> {
        self.entries.keys().filter(move |l| l.predicate == p)
    }

    pub fn difference<'a>(
        &'a self,
        other: &'a LiteralSet,
    ) -> impl Iterator<Item = &'a GroundedLiteral> {
        self.entries.keys().filter(|l| !other.contains(l))
    }
}

struct Emitter<'a> {
    scene: &'a Scene,
    s: &'a WorldState,
    out: &'a mut LiteralSet,
    generation: u64,
}

impl Emitter<'_> {
    fn name(&self, e: EntityRef) -> String {
        self.scene.problem().name_of(e).to_string()
    }

    fn push(&mut self, p: Predicate, args: Vec<String>) {
        self.out
            .insert(GroundedLiteral::new(p, args), self.generation);
    }

    fn hand(&mut self) {
        match self.s.holding {
            Some(h) => {
                let n = self.name(EntityRef::Movable(h.object));
                self.push(Predicate::RobotHolding, vec![n]);
            }
            None => self.push(Predicate::HandAvailable, vec![]),
        }
    }

    fn doors(&mut self) {
        for d in 0..self.scene.problem().doors.len() {
            if !self.s.door_open[d] {
                let n = self.name(EntityRef::Door(d));
                self.push(Predicate::IsClosed, vec![n]);
            }
        }
    }

    /// AtPosition literals with `o` as subject, and with `o` as reference
    /// when `as_reference` is set.
    fn at_positions(&mut self, o: usize, as_reference: bool) {
        let prob = self.scene.problem();
        if self.s.poses[o].is_none() {
            return;
        }
        for r in 0..prob.regions.len() {
            if at_position(self.s, prob, o, Direction::On, PlaceRef::Region(r)) {
                let args = vec![
                    self.name(EntityRef::Movable(o)),
                    "on".into(),
                    self.name(EntityRef::Region(r)),
                ];
                self.push(Predicate::AtPosition, args);
            }
        }
        for m in 0..prob.movables.len() {
            if m == o || self.s.poses[m].is_none() {
                continue;
            }
            let pairs: &[(usize, usize)] = if as_reference {
                &[(o, m), (m, o)]
            } else {
                &[(o, m)]
            };
            for &(a, b) in pairs {
                for dir in Direction::RELATIVE {
                    if at_position(self.s, prob, a, dir, PlaceRef::Movable(b)) {
                        let args = vec![
                            self.name(EntityRef::Movable(a)),
                            dir.token().into(),
                            self.name(EntityRef::Movable(b)),
                        ];
                        self.push(Predicate::AtPosition, args);
                    }
                }
            }
        }
    }

    fn pick_occlusion(&mut self, o: usize) {
        if self.s.poses[o].is_none() {
            return;
        }
        let prob = self.scene.problem();
        for occ in self.scene.pick_occluders(self.s, o) {
            let args = vec![self.name(EntityRef::Movable(o)), occ.name(prob).to_string()];
            self.push(Predicate::PickOccludedBy, args);
        }
    }

    /// PlaceOccludedBy literals for subject `o` over groundings whose
    /// destination region passes `dest_filter`.
    fn place_occlusion(&mut self, o: usize, dest_filter: &dyn Fn(Option<usize>) -> bool) {
        let prob = self.scene.problem();
        let mut groundings: Vec<(Direction, PlaceRef)> = (0..prob.regions.len())
            .map(|r| (Direction::On, PlaceRef::Region(r)))
            .collect();
        for m in 0..prob.movables.len() {
            if m != o && self.s.poses[m].is_some() {
                groundings.extend(
                    Direction::RELATIVE
                        .iter()
                        .map(|&d| (d, PlaceRef::Movable(m))),
                );
            }
        }
        for (dir, reference) in groundings {
            if !dest_filter(self.scene.place_region(self.s, reference)) {
                continue;
            }
            for occ in self.scene.place_occluders(self.s, o, dir, reference) {
                let args = vec![
                    self.name(EntityRef::Movable(o)),
                    dir.token().into(),
                    self.name(reference.entity()),
                    occ.name(prob).to_string(),
                ];
                self.push(Predicate::PlaceOccludedBy, args);
            }
        }
    }
}

/// Computes every literal of `s` from scratch.
pub fn compute_literals(s: &WorldState, scene: &Scene) -> LiteralSet {
    let mut out = LiteralSet::default();
    let mut e = Emitter {
        scene,
        s,
        out: &mut out,
        generation: 0,
    };
    e.hand();
    e.doors();
    for o in 0..scene.problem().movables.len() {
        e.at_positions(o, false);
        e.pick_occlusion(o);
        e.place_occlusion(o, &|_| true);
    }
    out
}

/// Incrementally derives the literals of `next`, reached from `prev` by the
/// feasible action `a`, from the literals of `prev`.
pub fn successor_literals(
    prev_lits: &LiteralSet,
    prev: &WorldState,
    a: &DiscreteAction,
    next: &WorldState,
    scene: &Scene,
    generation: u64,
) -> LiteralSet {
    if next.failed || prev == next {
        return prev_lits.clone();
    }
    let prob = scene.problem();
    let mut out = prev_lits.clone();
    match *a {
        DiscreteAction::Pick { target } => {
            let name = prob.movables[target].name.as_str();
            out.retain(|l| {
                let own_place = l.predicate == Predicate::PlaceOccludedBy
                    && l.args[0] == name
                    && l.args[2] != name
                    && l.args[3] != name;
                !matches!(
                    l.predicate,
                    Predicate::HandAvailable | Predicate::RobotHolding
                ) && (own_place || !l.mentions(name))
            });
            let mut e = Emitter {
                scene,
                s: next,
                out: &mut out,
                generation,
            };
            e.hand();
        }
        DiscreteAction::Open { door } => {
            let name = prob.doors[door].name.as_str();
            out.retain(|l| !l.mentions(name));
        }
        DiscreteAction::Place { target, .. } => {
            let name = prob.movables[target].name.clone();
            let Some(dest) = prob.region_of(next, target) else {
                return compute_literals(next, scene);
            };
            let affected = scene.coupled_regions(dest).to_vec();
            let in_affected = |r: Option<usize>| r.is_some_and(|r| affected.contains(&r));
            // destination of a PlaceOccludedBy reference, evaluated in `next`
            let dest_of = |reference: &str| match prob.lookup(reference) {
                Some(EntityRef::Region(r)) => Some(r),
                Some(EntityRef::Movable(m)) => prob.region_of(next, m),
                _ => None,
            };
            out.retain(|l| match l.predicate {
                Predicate::HandAvailable | Predicate::RobotHolding => false,
                _ if l.mentions(&name) => false,
                Predicate::PickOccludedBy => {
                    let o = prob.lookup(&l.args[0]);
                    !matches!(o, Some(EntityRef::Movable(m)) if in_affected(prob.region_of(next, m)))
                }
                Predicate::PlaceOccludedBy => !in_affected(dest_of(&l.args[2])),
                _ => true,
            });
            let mut e = Emitter {
                scene,
                s: next,
                out: &mut out,
                generation,
            };
            e.hand();
            e.at_positions(target, true);
            e.pick_occlusion(target);
            e.place_occlusion(target, &|_| true);
            for m in 0..prob.movables.len() {
                if m == target {
                    continue;
                }
                if in_affected(prob.region_of(next, m)) {
                    e.pick_occlusion(m);
                }
                e.place_occlusion(m, &in_affected);
            }
        }
    }
    out
}

/// Literal cache keyed by state. Intended to be owned by one search worker.
#[derive(Debug, Default)]
pub struct LiteralCache {
    map: HashMap<WorldState, Arc<LiteralSet>>,
    generation: u64,
    hits: u64,
    misses: u64,
}

impl LiteralCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, s: &WorldState, scene: &Scene) -> Arc<LiteralSet> {
        if let Some(l) = self.map.get(s) {
            self.hits += 1;
            return l.clone();
        }
        self.misses += 1;
        let l = Arc::new(compute_literals(s, scene));
        self.map.insert(s.clone(), l.clone());
        l
    }

    /// Literals of `next`, derived incrementally from `prev` when possible.
    pub fn successor(
        &mut self,
        prev: &WorldState,
        a: &DiscreteAction,
        next: &WorldState,
        scene: &Scene,
    ) -> Arc<LiteralSet> {
        if let Some(l) = self.map.get(next) {
            self.hits += 1;
            return l.clone();
        }
        let prev_lits = self.get(prev, scene);
        self.generation += 1;
        let l = Arc::new(successor_literals(
            &prev_lits,
            prev,
            a,
            next,
            scene,
            self.generation,
        ));
        self.map.insert(next.clone(), l.clone());
        l
    }

    pub fn stats(&self) -> (u64, u64) {
        (self.hits, self.misses)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}
