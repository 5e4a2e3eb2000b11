//! The deterministic planning MDP: entities, states, hybrid actions, the
//! transition model and the goal-conjunct reward.

use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{intersects, transform, ConvexPolygon, Pose2, Vec2};
use crate::motion::{feasibility, Scene};

/// Minimum center distance for a relative direction to hold.
pub const D_MIN: f64 = 0.02;
pub const GOAL_REWARD: f64 = 3.0;
pub const INFEASIBLE_REWARD: f64 = -6.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("state is absorbed (failed); no action may be applied")]
    AbsorbedState,
    #[error("ill-typed action: {0}")]
    IllTyped(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Movable,
    Door,
    Region,
}

impl EntityKind {
    /// Type name used in the PDDL-style prompt.
    pub fn pddl_type(self) -> &'static str {
        match self {
            EntityKind::Movable => "movable_object",
            EntityKind::Door => "openable",
            EntityKind::Region => "region",
        }
    }
}

/// Index-backed reference to an entity of a [`ProblemInstance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityRef {
    Movable(usize),
    Region(usize),
    Door(usize),
}

impl EntityRef {
    pub fn kind(self) -> EntityKind {
        match self {
            EntityRef::Movable(_) => EntityKind::Movable,
            EntityRef::Region(_) => EntityKind::Region,
            EntityRef::Door(_) => EntityKind::Door,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    On,
    LeftOf,
    RightOf,
    FrontOf,
    BehindOf,
}

impl Direction {
    pub const ALL: [Direction; 5] = [
        Direction::On,
        Direction::LeftOf,
        Direction::RightOf,
        Direction::FrontOf,
        Direction::BehindOf,
    ];
    pub const RELATIVE: [Direction; 4] = [
        Direction::LeftOf,
        Direction::RightOf,
        Direction::FrontOf,
        Direction::BehindOf,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Direction::On => "on",
            Direction::LeftOf => "left_of",
            Direction::RightOf => "right_of",
            Direction::FrontOf => "front_of",
            Direction::BehindOf => "behind_of",
        }
    }

    pub fn from_token(s: &str) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.token() == s)
    }

    /// Unit axis in a region's local frame (x = right, y = behind).
    pub fn local_axis(self) -> Vec2 {
        match self {
            Direction::On => Vec2::new(0.0, 0.0),
            Direction::LeftOf => Vec2::new(-1.0, 0.0),
            Direction::RightOf => Vec2::new(1.0, 0.0),
            Direction::FrontOf => Vec2::new(0.0, -1.0),
            Direction::BehindOf => Vec2::new(0.0, 1.0),
        }
    }

    /// Dominant-axis classification of a local-frame offset. `None` when the
    /// offset is shorter than [`D_MIN`] or exactly on a diagonal.
    pub fn classify(delta: Vec2) -> Option<Direction> {
        if delta.norm() < D_MIN {
            return None;
        }
        let (ax, ay) = (delta.x.abs(), delta.y.abs());
        if ax > ay {
            Some(if delta.x < 0.0 {
                Direction::LeftOf
            } else {
                Direction::RightOf
            })
        } else if ay > ax {
            Some(if delta.y > 0.0 {
                Direction::BehindOf
            } else {
                Direction::FrontOf
            })
        } else {
            None
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Movable {
    pub name: String,
    /// Footprint in the object frame; the frame origin is the object center.
    pub footprint: ConvexPolygon,
    pub grasp_point: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    /// Placement surface in the world frame.
    pub extent: ConvexPolygon,
    pub base_pose: Pose2,
    /// Origin and axes for relative directions: +x is right, +y is behind.
    pub local_frame: Pose2,
    #[serde(default)]
    pub walls: Vec<ConvexPolygon>,
    /// The region body (extent grown by this margin) blocks the robot base.
    #[serde(default = "default_body_margin")]
    pub body_margin: f64,
}

fn default_body_margin() -> f64 {
    0.03
}

impl Region {
    pub fn body(&self) -> ConvexPolygon {
        if self.body_margin > 0.0 {
            self.extent.inflate(self.body_margin)
        } else {
            self.extent.clone()
        }
    }

    /// Offset of `p` from `origin` expressed in the region's local axes.
    pub fn local_delta(&self, origin: Vec2, p: Vec2) -> Vec2 {
        (p - origin).rotate(-self.local_frame.theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Door {
    pub name: String,
    pub closed_polygon: ConvexPolygon,
    pub base_pose: Pose2,
    pub handle_point: Vec2,
}

/// Object held by the robot with its yaw relative to the frame of the region
/// it was picked from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Held {
    pub object: usize,
    pub relative_yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    /// Stable pose per movable; `None` exactly for the held object.
    pub poses: Vec<Option<Pose2>>,
    pub door_open: Vec<bool>,
    pub base: Pose2,
    pub holding: Option<Held>,
    pub failed: bool,
}

impl Eq for WorldState {}

impl Hash for WorldState {
    fn hash<H: Hasher>(&self, h: &mut H) {
        fn pose<H: Hasher>(p: &Pose2, h: &mut H) {
            p.x.to_bits().hash(h);
            p.y.to_bits().hash(h);
            p.theta.to_bits().hash(h);
        }
        for p in &self.poses {
            match p {
                Some(p) => pose(p, h),
                None => 0xdead_u64.hash(h),
            }
        }
        self.door_open.hash(h);
        pose(&self.base, h);
        if let Some(held) = &self.holding {
            held.object.hash(h);
            held.relative_yaw.to_bits().hash(h);
        }
        self.failed.hash(h);
    }
}

impl WorldState {
    pub fn hand_available(&self) -> bool {
        self.holding.is_none()
    }

    pub fn is_held(&self, o: usize) -> bool {
        self.holding.map(|h| h.object) == Some(o)
    }

    pub fn with_failure(&self) -> WorldState {
        WorldState {
            failed: true,
            ..self.clone()
        }
    }

    /// Stable hex digest of the state, used for fixture names.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        let mut put = |v: f64| hasher.update(v.to_bits().to_le_bytes());
        for p in &self.poses {
            match p {
                Some(p) => {
                    put(p.x);
                    put(p.y);
                    put(p.theta);
                }
                None => put(f64::NAN),
            }
        }
        put(self.base.x);
        put(self.base.y);
        put(self.base.theta);
        if let Some(h) = &self.holding {
            put(h.object as f64);
            put(h.relative_yaw);
        }
        let mut bytes: Vec<u8> = self.door_open.iter().map(|&o| o as u8).collect();
        bytes.push(self.failed as u8);
        hasher.update(&bytes);
        hasher
            .finalize()
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Reference argument of a Place action or goal conjunct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PlaceRef {
    Region(usize),
    Movable(usize),
}

impl PlaceRef {
    pub fn entity(self) -> EntityRef {
        match self {
            PlaceRef::Region(r) => EntityRef::Region(r),
            PlaceRef::Movable(m) => EntityRef::Movable(m),
        }
    }
}

/// Operator with its discrete arguments; arity is fixed by the variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiscreteAction {
    Pick {
        target: usize,
    },
    Open {
        door: usize,
    },
    Place {
        target: usize,
        dir: Direction,
        reference: PlaceRef,
    },
}

impl DiscreteAction {
    /// `on` takes a region reference, every other direction a movable.
    pub fn place(target: usize, dir: Direction, reference: PlaceRef) -> Result<Self, WorldError> {
        check_ref_typing(dir, reference)?;
        if reference == PlaceRef::Movable(target) {
            return Err(WorldError::IllTyped(
                "object placed relative to itself".into(),
            ));
        }
        Ok(DiscreteAction::Place {
            target,
            dir,
            reference,
        })
    }

    pub fn operator(&self) -> &'static str {
        match self {
            DiscreteAction::Pick { .. } => "pick",
            DiscreteAction::Open { .. } => "open",
            DiscreteAction::Place { .. } => "place",
        }
    }

    /// The entity the action manipulates.
    pub fn target(&self) -> EntityRef {
        match *self {
            DiscreteAction::Pick { target } | DiscreteAction::Place { target, .. } => {
                EntityRef::Movable(target)
            }
            DiscreteAction::Open { door } => EntityRef::Door(door),
        }
    }

    /// Tuple form as used in plan text, e.g. `["place", "coke", "on", "table1"]`.
    pub fn tokens(&self, prob: &ProblemInstance) -> Vec<String> {
        match *self {
            DiscreteAction::Pick { target } => {
                vec!["pick".into(), prob.movables[target].name.clone()]
            }
            DiscreteAction::Open { door } => vec!["open".into(), prob.doors[door].name.clone()],
            DiscreteAction::Place {
                target,
                dir,
                reference,
            } => vec![
                "place".into(),
                prob.movables[target].name.clone(),
                dir.token().into(),
                prob.name_of(reference.entity()).to_string(),
            ],
        }
    }

    pub fn describe(&self, prob: &ProblemInstance) -> String {
        format!("({})", self.tokens(prob).join(", "))
    }
}

fn check_ref_typing(dir: Direction, reference: PlaceRef) -> Result<(), WorldError> {
    match (dir, reference) {
        (Direction::On, PlaceRef::Region(_)) => Ok(()),
        (Direction::On, PlaceRef::Movable(_)) => {
            Err(WorldError::IllTyped("`on` needs a region reference".into()))
        }
        (_, PlaceRef::Movable(_)) => Ok(()),
        (d, PlaceRef::Region(_)) => Err(WorldError::IllTyped(format!(
            "`{d}` needs a movable reference"
        ))),
    }
}

/// Sampled continuous parameters of an action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousParams {
    pub nav_path: Vec<Pose2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approach_yaw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement_point: Option<Vec2>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Conjunct {
    pub subject: usize,
    pub dir: Direction,
    pub reference: PlaceRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub conjuncts: Vec<Conjunct>,
}

impl Goal {
    pub fn new(conjuncts: Vec<Conjunct>) -> Result<Self, WorldError> {
        if conjuncts.is_empty() {
            return Err(WorldError::InvalidProblem("goal has no conjuncts".into()));
        }
        for c in &conjuncts {
            check_ref_typing(c.dir, c.reference)?;
        }
        Ok(Self { conjuncts })
    }

    /// Distinct goal subjects in first-mention order.
    pub fn subjects(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for c in &self.conjuncts {
            if !out.contains(&c.subject) {
                out.push(c.subject);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// +3 per newly satisfied conjunct, -3 per newly violated one.
    #[default]
    Delta,
    /// +3 per newly satisfied conjunct only.
    PositiveOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub name: String,
    pub movables: Vec<Movable>,
    pub regions: Vec<Region>,
    pub doors: Vec<Door>,
    pub static_walls: Vec<ConvexPolygon>,
    pub robot_footprint: ConvexPolygon,
    /// Workspace bounding box `[min, max]` for roadmap sampling.
    pub bounds: [Vec2; 2],
    pub s0: WorldState,
    pub goal: Goal,
    pub horizon: usize,
    /// Wall-clock budget per trial, seconds.
    pub time_budget: f64,
}

impl ProblemInstance {
    /// Checks every structural invariant; returns the instance unchanged on
    /// success.
    pub fn validated(self) -> Result<Self, WorldError> {
        let bad = |m: String| Err(WorldError::InvalidProblem(m));
        let mut names: Vec<&str> = Vec::new();
        names.extend(self.movables.iter().map(|m| m.name.as_str()));
        names.extend(self.regions.iter().map(|r| r.name.as_str()));
        names.extend(self.doors.iter().map(|d| d.name.as_str()));
        for (i, n) in names.iter().enumerate() {
            if !valid_name(n) {
                return bad(format!(
                    "entity name `{n}` must be lowercase letters, digits or `_`"
                ));
            }
            if n == &"world" {
                return bad("`world` is reserved for the structural occluder".into());
            }
            if names[..i].contains(n) {
                return bad(format!("duplicate entity name `{n}`"));
            }
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        for m in &self.movables {
            if !m.footprint.contains_point(m.grasp_point) {
                return bad(format!(
                    "grasp point of `{}` lies outside its footprint",
                    m.name
                ));
            }
        }
        for r in &self.regions {
            if r.extent.contains_point(r.base_pose.position()) {
                return bad(format!(
                    "base pose of region `{}` lies inside its extent",
                    r.name
                ));
            }
            if r.extent.area() <= 1e-9 {
                return bad(format!("region `{}` has a degenerate extent", r.name));
            }
        }
        for d in &self.doors {
            if d.closed_polygon.area() <= 1e-9 {
                return bad(format!("door `{}` has a degenerate polygon", d.name));
            }
        }
        let s0 = &self.s0;
        if s0.poses.len() != self.movables.len() || s0.door_open.len() != self.doors.len() {
            return bad("initial state does not cover every movable and door".into());
        }
        if s0.failed {
            return bad("initial state is marked failed".into());
        }
        if s0
            .poses
            .iter()
            .enumerate()
            .any(|(i, p)| p.is_none() && !s0.is_held(i))
        {
            return bad("every movable that is not held needs an initial pose".into());
        }
        let placed: Vec<(usize, ConvexPolygon)> = (0..self.movables.len())
            .filter_map(|i| self.placed_footprint(s0, i).map(|f| (i, f)))
            .collect();
        for (k, (i, fi)) in placed.iter().enumerate() {
            for (j, fj) in &placed[k + 1..] {
                if intersects(fi, fj) {
                    return bad(format!(
                        "initial footprints of `{}` and `{}` overlap",
                        self.movables[*i].name, self.movables[*j].name
                    ));
                }
            }
            let statics = self
                .static_walls
                .iter()
                .chain(self.regions.iter().flat_map(|r| r.walls.iter()));
            for w in statics {
                if intersects(fi, w) {
                    return bad(format!(
                        "initial footprint of `{}` hits a static wall",
                        self.movables[*i].name
                    ));
                }
            }
        }
        for c in &self.goal.conjuncts {
            if c.subject >= self.movables.len() {
                return bad("goal subject out of range".into());
            }
            check_ref_typing(c.dir, c.reference)?;
        }
        Ok(self)
    }

    pub fn lookup(&self, name: &str) -> Option<EntityRef> {
        if let Some(i) = self.movables.iter().position(|m| m.name == name) {
            return Some(EntityRef::Movable(i));
        }
        if let Some(i) = self.regions.iter().position(|r| r.name == name) {
            return Some(EntityRef::Region(i));
        }
        self.doors
            .iter()
            .position(|d| d.name == name)
            .map(EntityRef::Door)
    }

    pub fn name_of(&self, e: EntityRef) -> &str {
        match e {
            EntityRef::Movable(i) => &self.movables[i].name,
            EntityRef::Region(i) => &self.regions[i].name,
            EntityRef::Door(i) => &self.doors[i].name,
        }
    }

    /// World-frame footprint of a movable at its stable pose.
    pub fn placed_footprint(&self, s: &WorldState, o: usize) -> Option<ConvexPolygon> {
        s.poses[o].map(|p| transform(&self.movables[o].footprint, &p))
    }

    /// Polygons that block the robot base: static walls, region bodies and
    /// region walls.
    pub fn base_blockers(&self) -> Vec<ConvexPolygon> {
        let mut out = self.static_walls.clone();
        for r in &self.regions {
            out.push(r.body());
            out.extend(r.walls.iter().cloned());
        }
        out
    }

    /// Region whose extent holds the object's whole footprint.
    pub fn region_of(&self, s: &WorldState, o: usize) -> Option<usize> {
        let fp = self.placed_footprint(s, o)?;
        self.regions
            .iter()
            .position(|r| r.extent.contains_polygon(&fp))
    }

    /// Every well-typed discrete action in `s`. Place is only offered for
    /// the held object.
    pub fn legal_actions(&self, s: &WorldState) -> Vec<DiscreteAction> {
        let mut out = Vec::new();
        match s.holding {
            None => {
                for o in 0..self.movables.len() {
                    if s.poses[o].is_some() {
                        out.push(DiscreteAction::Pick { target: o });
                    }
                }
                for d in 0..self.doors.len() {
                    if !s.door_open[d] {
                        out.push(DiscreteAction::Open { door: d });
                    }
                }
            }
            Some(held) => {
                let o = held.object;
                for r in 0..self.regions.len() {
                    out.push(DiscreteAction::Place {
                        target: o,
                        dir: Direction::On,
                        reference: PlaceRef::Region(r),
                    });
                }
                for m in 0..self.movables.len() {
                    if m == o || s.poses[m].is_none() {
                        continue;
                    }
                    for dir in Direction::RELATIVE {
                        out.push(DiscreteAction::Place {
                            target: o,
                            dir,
                            reference: PlaceRef::Movable(m),
                        });
                    }
                }
            }
        }
        out
    }

    pub fn well_typed(&self, a: &DiscreteAction) -> Result<(), WorldError> {
        let n_mov = self.movables.len();
        match *a {
            DiscreteAction::Pick { target } if target < n_mov => Ok(()),
            DiscreteAction::Open { door } if door < self.doors.len() => Ok(()),
            DiscreteAction::Place {
                target,
                dir,
                reference,
            } if target < n_mov => {
                check_ref_typing(dir, reference)?;
                match reference {
                    PlaceRef::Region(r) if r < self.regions.len() => Ok(()),
                    PlaceRef::Movable(m) if m < n_mov && m != target => Ok(()),
                    _ => Err(WorldError::IllTyped("place reference out of range".into())),
                }
            }
            _ => Err(WorldError::IllTyped(format!(
                "{a:?} references an unknown entity"
            ))),
        }
    }
}

/// Whether `subject` stands at `dir` of `reference` in `s`.
pub fn at_position(
    s: &WorldState,
    prob: &ProblemInstance,
    subject: usize,
    dir: Direction,
    reference: PlaceRef,
) -> bool {
    let Some(fp) = prob.placed_footprint(s, subject) else {
        return false;
    };
    match (dir, reference) {
        (Direction::On, PlaceRef::Region(r)) => prob.regions[r].extent.contains_polygon(&fp),
        (Direction::On, PlaceRef::Movable(_)) => false,
        (_, PlaceRef::Region(_)) => false,
        (dir, PlaceRef::Movable(m)) => {
            if m == subject {
                return false;
            }
            let (Some(rs), Some(rm)) = (prob.region_of(s, subject), prob.region_of(s, m)) else {
                return false;
            };
            if rs != rm {
                return false;
            }
            let (Some(ps), Some(pm)) = (s.poses[subject], s.poses[m]) else {
                return false;
            };
            let delta = prob.regions[rs].local_delta(pm.position(), ps.position());
            Direction::classify(delta) == Some(dir)
        }
    }
}

pub fn conjunct_holds(s: &WorldState, prob: &ProblemInstance, c: &Conjunct) -> bool {
    at_position(s, prob, c.subject, c.dir, c.reference)
}

pub fn satisfied_conjuncts(s: &WorldState, prob: &ProblemInstance) -> usize {
    prob.goal
        .conjuncts
        .iter()
        .filter(|c| conjunct_holds(s, prob, c))
        .count()
}

/// True when every goal conjunct holds. A held goal subject has no pose, so
/// its conjuncts are false; holding an unrelated object is allowed.
pub fn goal_satisfied(s: &WorldState, prob: &ProblemInstance) -> bool {
    !s.failed
        && prob
            .goal
            .conjuncts
            .iter()
            .all(|c| conjunct_holds(s, prob, c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: WorldState,
    pub reward: f64,
    pub feasible: bool,
}

impl Transition {
    pub fn infeasible(s: &WorldState) -> Transition {
        Transition {
            state: s.with_failure(),
            reward: INFEASIBLE_REWARD,
            feasible: false,
        }
    }
}

/// Applies `a` with parameters `k`. Infeasible actions absorb into the
/// failure state with reward −6.
pub fn transition(
    s: &WorldState,
    a: &DiscreteAction,
    k: &ContinuousParams,
    scene: &Scene,
    mode: RewardMode,
) -> Result<Transition, WorldError> {
    if s.failed {
        return Err(WorldError::AbsorbedState);
    }
    let prob = scene.problem();
    prob.well_typed(a)?;
    if !feasibility::is_feasible(s, a, k, scene) {
        return Ok(Transition::infeasible(s));
    }
    let mut next = s.clone();
    next.base = *k.nav_path.last().expect("feasible params have a nav path");
    match *a {
        DiscreteAction::Pick { target } => {
            let pose = s.poses[target].expect("feasible pick has a pose");
            let region = prob
                .region_of(s, target)
                .expect("feasible pick is on a region");
            next.poses[target] = None;
            next.holding = Some(Held {
                object: target,
                relative_yaw: pose.theta - prob.regions[region].local_frame.theta,
            });
        }
        DiscreteAction::Open { door } => next.door_open[door] = true,
        DiscreteAction::Place { target, .. } => {
            let held = s.holding.expect("feasible place holds the target");
            next.poses[target] =
                Some(feasibility::placed_pose(s, a, k, scene).expect("checked placement"));
            debug_assert_eq!(held.object, target);
            next.holding = None;
        }
    }
    let reward = conjunct_reward(s, &next, prob, mode);
    Ok(Transition {
        state: next,
        reward,
        feasible: true,
    })
}

/// Signed (or positive-only) change in satisfied goal conjuncts, times 3.
pub fn conjunct_reward(
    before: &WorldState,
    after: &WorldState,
    prob: &ProblemInstance,
    mode: RewardMode,
) -> f64 {
    let mut gained = 0usize;
    let mut lost = 0usize;
    for c in &prob.goal.conjuncts {
        match (
            conjunct_holds(before, prob, c),
            conjunct_holds(after, prob, c),
        ) {
            (false, true) => gained += 1,
            (true, false) => lost += 1,
            _ => {}
        }
    }
    match mode {
        RewardMode::Delta => GOAL_REWARD * gained as f64 - GOAL_REWARD * lost as f64,
        RewardMode::PositiveOnly => GOAL_REWARD * gained as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{MotionConfig, Scene};
    use crate::scenario::{demo_problem, TwoRoom};

    fn test_scene() -> Scene {
        Scene::new(demo_problem(), MotionConfig::default()).unwrap()
    }

    #[test]
    fn direction_classification() {
        assert_eq!(
            Direction::classify(Vec2::new(-0.3, 0.05)),
            Some(Direction::LeftOf)
        );
        assert_eq!(
            Direction::classify(Vec2::new(0.3, 0.05)),
            Some(Direction::RightOf)
        );
        assert_eq!(
            Direction::classify(Vec2::new(0.0, 0.3)),
            Some(Direction::BehindOf)
        );
        assert_eq!(
            Direction::classify(Vec2::new(0.0, -0.3)),
            Some(Direction::FrontOf)
        );
        assert_eq!(Direction::classify(Vec2::new(0.01, 0.0)), None);
        assert_eq!(Direction::classify(Vec2::new(0.2, 0.2)), None);
    }

    #[test]
    fn at_position_on_and_relative() {
        let mut w = TwoRoom::new();
        let t1 = w.region("table1", TwoRoom::H1);
        let _t2 = w.region("table2", TwoRoom::H2);
        let a = w.movable_at("salter", 0.08, 0.08, t1, -0.3, 0.05);
        let b = w.movable_at("bottle", 0.08, 0.08, t1, 0.0, 0.0);
        let prob = w.goal_on(a, t1).build();
        let s = &prob.s0;
        assert!(at_position(
            s,
            &prob,
            a,
            Direction::On,
            PlaceRef::Region(t1)
        ));
        assert!(!at_position(
            s,
            &prob,
            a,
            Direction::On,
            PlaceRef::Region(1)
        ));
        assert!(at_position(
            s,
            &prob,
            a,
            Direction::LeftOf,
            PlaceRef::Movable(b)
        ));
        assert!(!at_position(
            s,
            &prob,
            a,
            Direction::RightOf,
            PlaceRef::Movable(b)
        ));
        assert!(at_position(
            s,
            &prob,
            b,
            Direction::RightOf,
            PlaceRef::Movable(a)
        ));
    }

    #[test]
    fn relative_requires_same_region() {
        let mut w = TwoRoom::new();
        let t1 = w.region("table1", TwoRoom::H1);
        let t2 = w.region("table2", TwoRoom::H2);
        let a = w.movable_at("a", 0.08, 0.08, t1, 0.0, 0.0);
        let b = w.movable_at("b", 0.08, 0.08, t2, 0.0, 0.0);
        let prob = w.goal_on(a, t2).build();
        for dir in Direction::RELATIVE {
            assert!(!at_position(&prob.s0, &prob, a, dir, PlaceRef::Movable(b)));
        }
    }

    #[test]
    fn goal_ignores_unrelated_held_object() {
        let mut w = TwoRoom::new();
        let t1 = w.region("table1", TwoRoom::H1);
        let a = w.movable_at("a", 0.08, 0.08, t1, -0.3, 0.0);
        let b = w.movable_at("b", 0.08, 0.08, t1, 0.3, 0.0);
        let prob = w.goal_on(a, t1).build();
        let mut s = prob.s0.clone();
        assert!(goal_satisfied(&s, &prob));
        s.poses[b] = None;
        s.holding = Some(Held {
            object: b,
            relative_yaw: 0.0,
        });
        assert!(goal_satisfied(&s, &prob));
        // a held goal subject has no pose, so its conjunct is false
        let mut s2 = prob.s0.clone();
        s2.poses[a] = None;
        s2.holding = Some(Held {
            object: a,
            relative_yaw: 0.0,
        });
        assert!(!goal_satisfied(&s2, &prob));
    }

    #[test]
    fn failed_state_rejects_transitions() {
        let scene = test_scene();
        let s = scene.problem().s0.with_failure();
        let a = DiscreteAction::Pick { target: 0 };
        let k = ContinuousParams {
            nav_path: vec![s.base],
            approach_yaw: Some(0.0),
            placement_point: None,
        };
        assert_eq!(
            transition(&s, &a, &k, &scene, RewardMode::Delta),
            Err(WorldError::AbsorbedState)
        );
    }

    #[test]
    fn place_constructor_enforces_typing() {
        assert!(DiscreteAction::place(0, Direction::On, PlaceRef::Movable(1)).is_err());
        assert!(DiscreteAction::place(0, Direction::LeftOf, PlaceRef::Region(1)).is_err());
        assert!(DiscreteAction::place(0, Direction::LeftOf, PlaceRef::Movable(0)).is_err());
        assert!(DiscreteAction::place(0, Direction::On, PlaceRef::Region(1)).is_ok());
    }

    #[test]
    fn reward_modes() {
        let mut w = TwoRoom::new();
        let t1 = w.region("table1", TwoRoom::H1);
        let t2 = w.region("table2", TwoRoom::H2);
        let a = w.movable_at("a", 0.08, 0.08, t1, 0.0, 0.0);
        let prob = w.goal_on(a, t1).build();
        let before = prob.s0.clone();
        let mut after = before.clone();
        let c = prob.regions[t2].extent.centroid();
        after.poses[a] = Some(Pose2::new(c.x, c.y, 0.0));
        assert_eq!(
            conjunct_reward(&before, &after, &prob, RewardMode::Delta),
            -3.0
        );
        assert_eq!(
            conjunct_reward(&before, &after, &prob, RewardMode::PositiveOnly),
            0.0
        );
        assert_eq!(
            conjunct_reward(&after, &before, &prob, RewardMode::Delta),
            3.0
        );
    }
}
