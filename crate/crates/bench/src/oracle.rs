//! Brute-force reference computations used to check the fast paths:
//! occluder sets from densely resampled motions, and search-tree backups
//! against the logged returns.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use tamp_core::geom::{intersects, sweep, Pose2, Vec2};
use tamp_core::motion::{MotionConfig, Occluder, OccluderSet, Scene};
use tamp_core::planner::mcts::{widening_allows, Domain, Outcome, Search};
use tamp_core::planner::PlannerConfig;
use tamp_core::scenario::random_problem;
use tamp_core::world::{Direction, PlaceRef, ProblemInstance, WorldState};

/// Resampling step for base motions and reach corridors, meters.
pub const STEP: f64 = 0.01;

fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

fn bbox(p: &[Vec2]) -> (Vec2, Vec2) {
    let mut lo = p[0];
    let mut hi = p[0];
    for v in p {
        lo = Vec2::new(lo.x.min(v.x), lo.y.min(v.y));
        hi = Vec2::new(hi.x.max(v.x), hi.y.max(v.y));
    }
    (lo, hi)
}

/// Closed point-in-convex-polygon test for a CCW vertex list.
fn inside(p: Vec2, poly: &[Vec2]) -> bool {
    (0..poly.len()).all(|i| cross(poly[(i + 1) % poly.len()] - poly[i], p - poly[i]) >= 0.0)
}

fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    (d1 * d2 <= 0.0) && (d3 * d4 <= 0.0)
}

/// Polygon overlap by edge crossings and vertex containment, written
/// independently of the separating-axis test in `geom`.
pub fn overlap(a: &[Vec2], b: &[Vec2]) -> bool {
    let ((alo, ahi), (blo, bhi)) = (bbox(a), bbox(b));
    if ahi.x < blo.x || bhi.x < alo.x || ahi.y < blo.y || bhi.y < alo.y {
        return false;
    }
    if a.iter().any(|&p| inside(p, b)) || b.iter().any(|&p| inside(p, a)) {
        return true;
    }
    for i in 0..a.len() {
        for j in 0..b.len() {
            if segments_cross(a[i], a[(i + 1) % a.len()], b[j], b[(j + 1) % b.len()]) {
                return true;
            }
        }
    }
    false
}

fn place(local: &[Vec2], p: &Pose2) -> Vec<Vec2> {
    let (s, c) = p.theta.sin_cos();
    local
        .iter()
        .map(|v| Vec2::new(p.x + c * v.x - s * v.y, p.y + s * v.x + c * v.y))
        .collect()
}

/// Poses along `path` no more than [`STEP`] apart, with yaw interpolated
/// along the shorter arc. Rotation is resampled at the same arc length for
/// a point at `radius`.
pub fn resample(path: &[Pose2], radius: f64) -> Vec<Pose2> {
    let mut out = Vec::new();
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut dth = (b.theta - a.theta) % std::f64::consts::TAU;
        if dth > std::f64::consts::PI {
            dth -= std::f64::consts::TAU;
        } else if dth < -std::f64::consts::PI {
            dth += std::f64::consts::TAU;
        }
        let dist = ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt();
        let n = ((dist / STEP).ceil().max((dth.abs() * radius / STEP).ceil()) as usize).max(1);
        for i in 0..n {
            let t = i as f64 / n as f64;
            out.push(Pose2::new(
                a.x + t * (b.x - a.x),
                a.y + t * (b.y - a.y),
                a.theta + t * dth,
            ));
        }
    }
    if let Some(last) = path.last() {
        out.push(*last);
    }
    out
}

/// Slices of width `width` tiling the segment `from -> to`, each at most
/// [`STEP`] long.
pub fn corridor_slices(from: Vec2, to: Vec2, width: f64) -> Vec<Vec<Vec2>> {
    let d = to - from;
    let len = (d.x * d.x + d.y * d.y).sqrt();
    if len == 0.0 {
        return Vec::new();
    }
    let u = Vec2::new(d.x / len, d.y / len);
    let side = Vec2::new(-u.y * width / 2.0, u.x * width / 2.0);
    let n = (len / STEP).ceil() as usize;
    (0..n)
        .map(|i| {
            let s0 = i as f64 * STEP;
            let s1 = ((i + 1) as f64 * STEP).min(len);
            let p0 = Vec2::new(from.x + u.x * s0, from.y + u.y * s0);
            let p1 = Vec2::new(from.x + u.x * s1, from.y + u.y * s1);
            vec![p0 - side, p1 - side, p1 + side, p0 + side]
        })
        .collect()
}

/// What the dense robot motion to one region touches.
#[derive(Debug, Clone, Default)]
struct RegionHits {
    reachable: bool,
    dense: BTreeSet<Occluder>,
    hull: BTreeSet<Occluder>,
}

/// Brute-force occluder sets for one state of a scene.
pub struct OcclusionOracle<'a> {
    scene: &'a Scene,
    state: WorldState,
    hits: Vec<RegionHits>,
    /// Entities touched by the hull sweep but by no resampled pose.
    pub conservatism: Vec<String>,
}

impl<'a> OcclusionOracle<'a> {
    pub fn new(scene: &'a Scene, state: &WorldState) -> Self {
        let prob = scene.problem();
        let robot = prob.robot_footprint.vertices().to_vec();
        let radius = robot.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut conservatism = Vec::new();
        let hits = (0..prob.regions.len())
            .map(|r| {
                let Some(path) = scene.nominal_path(r) else {
                    return RegionHits::default();
                };
                let poses = resample(path, radius);
                let placed: Vec<Vec<Vec2>> = poses.iter().map(|p| place(&robot, p)).collect();
                let hulls = sweep(&prob.robot_footprint, path);
                let mut h = RegionHits {
                    reachable: true,
                    ..Default::default()
                };
                let mut obstacles: Vec<(Occluder, Vec<Vec2>)> = Vec::new();
                for o in 0..prob.movables.len() {
                    if let Some(fp) = prob.placed_footprint(state, o) {
                        obstacles.push((Occluder::Movable(o), fp.vertices().to_vec()));
                    }
                }
                for (d, door) in prob.doors.iter().enumerate() {
                    if !state.door_open[d] {
                        obstacles
                            .push((Occluder::Door(d), door.closed_polygon.vertices().to_vec()));
                    }
                }
                for (who, poly) in obstacles {
                    if placed.iter().any(|p| overlap(p, &poly)) {
                        h.dense.insert(who);
                    }
                    let polygon = tamp_core::geom::ConvexPolygon::new(poly)
                        .expect("placed footprints stay convex");
                    if hulls.iter().any(|s| intersects(s, &polygon)) {
                        h.hull.insert(who);
                        if !h.dense.contains(&who) {
                            conservatism.push(format!(
                                "{}: sweep to `{}` touches `{}` between samples",
                                prob.name,
                                prob.regions[r].name,
                                who.name(prob)
                            ));
                        }
                    }
                }
                h
            })
            .collect();
        Self {
            scene,
            state: state.clone(),
            hits,
            conservatism,
        }
    }

    fn region_of(&self, o: usize) -> Option<usize> {
        let prob = self.scene.problem();
        let fp = prob.placed_footprint(&self.state, o)?;
        prob.regions.iter().position(|r| {
            fp.vertices()
                .iter()
                .all(|&v| inside(v, r.extent.vertices()))
        })
    }

    fn reach(&self, region: usize, point: Vec2, subject: usize) -> OccluderSet {
        let prob = self.scene.problem();
        let cfg = self.scene.config();
        let mut out = OccluderSet::new();
        let hits = &self.hits[region];
        if !hits.reachable {
            out.insert(Occluder::World);
            return out;
        }
        let slices = corridor_slices(
            prob.regions[region].base_pose.position(),
            point,
            cfg.gripper_width,
        );
        if prob.regions[region]
            .walls
            .iter()
            .any(|w| slices.iter().any(|s| overlap(s, w.vertices())))
        {
            out.insert(Occluder::World);
        }
        for o in 0..prob.movables.len() {
            if o == subject {
                continue;
            }
            let Some(fp) = prob.placed_footprint(&self.state, o) else {
                continue;
            };
            if hits.dense.contains(&Occluder::Movable(o))
                || slices.iter().any(|s| overlap(s, fp.vertices()))
            {
                out.insert(Occluder::Movable(o));
            }
        }
        out.extend(
            hits.dense
                .iter()
                .filter(|o| matches!(o, Occluder::Door(_)))
                .copied(),
        );
        out
    }

    pub fn pick(&self, o: usize) -> OccluderSet {
        let prob = self.scene.problem();
        match (self.state.poses[o], self.region_of(o)) {
            (Some(pose), Some(region)) => {
                self.reach(region, pose.apply(prob.movables[o].grasp_point), o)
            }
            _ => OccluderSet::from([Occluder::World]),
        }
    }

    pub fn place(&self, o: usize, dir: Direction, reference: PlaceRef) -> OccluderSet {
        let prob = self.scene.problem();
        let target = match reference {
            PlaceRef::Region(r) => {
                let v = prob.regions[r].extent.vertices();
                // shoelace centroid
                let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
                for i in 0..v.len() {
                    let (p, q) = (v[i], v[(i + 1) % v.len()]);
                    let w = cross(p, q);
                    a2 += w;
                    cx += (p.x + q.x) * w;
                    cy += (p.y + q.y) * w;
                }
                Some((r, Vec2::new(cx / (3.0 * a2), cy / (3.0 * a2))))
            }
            PlaceRef::Movable(m) => match (self.state.poses[m], self.region_of(m)) {
                (Some(pose), Some(r)) => {
                    let (lx, ly) = match dir {
                        Direction::RightOf => (1.0, 0.0),
                        Direction::LeftOf => (-1.0, 0.0),
                        Direction::BehindOf => (0.0, 1.0),
                        Direction::FrontOf => (0.0, -1.0),
                        Direction::On => (0.0, 0.0),
                    };
                    let th = prob.regions[r].local_frame.theta;
                    let (s, c) = th.sin_cos();
                    let off = self.scene.config().place_offset;
                    Some((
                        r,
                        Vec2::new(
                            pose.x + off * (c * lx - s * ly),
                            pose.y + off * (s * lx + c * ly),
                        ),
                    ))
                }
                _ => None,
            },
        };
        match target {
            Some((r, point)) => self.reach(r, point, o),
            None => OccluderSet::from([Occluder::World]),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct OcclusionReport {
    pub scenes: usize,
    pub queries: usize,
    pub mismatches: Vec<String>,
    pub conservatism: Vec<String>,
}

/// Compares pick and place occluder sets of every grounding in the initial
/// state of random scenes against the brute-force oracle.
pub fn occlusion_sweep(
    seeds: impl IntoIterator<Item = u64>,
    movables: (usize, usize),
) -> OcclusionReport {
    let mut report = OcclusionReport::default();
    for seed in seeds {
        let n = movables.0 + (seed as usize % (movables.1 - movables.0 + 1));
        let prob = random_problem(seed, n);
        let Ok(scene) = Scene::new(prob, MotionConfig::default()) else {
            report
                .mismatches
                .push(format!("seed {seed}: scene construction failed"));
            continue;
        };
        check_state(&scene, &scene.problem().s0.clone(), &mut report);
        report.scenes += 1;
    }
    report
}

/// Adds the comparisons for one state to `report`.
pub fn check_state(scene: &Scene, s: &WorldState, report: &mut OcclusionReport) {
    let prob: &ProblemInstance = scene.problem();
    let oracle = OcclusionOracle::new(scene, s);
    report
        .conservatism
        .extend(oracle.conservatism.iter().cloned());
    let fmt = |set: &OccluderSet| {
        set.iter()
            .map(|o| o.name(prob).to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    for o in 0..prob.movables.len() {
        report.queries += 1;
        let (fast, slow) = (scene.pick_occluders(s, o), oracle.pick(o));
        if fast != slow {
            report.mismatches.push(format!(
                "{}: pick {} -> [{}] vs oracle [{}]",
                prob.name,
                prob.movables[o].name,
                fmt(&fast),
                fmt(&slow)
            ));
        }
        let mut refs: Vec<(Direction, PlaceRef)> = (0..prob.regions.len())
            .map(|r| (Direction::On, PlaceRef::Region(r)))
            .collect();
        for m in (0..prob.movables.len()).filter(|&m| m != o) {
            refs.extend(
                Direction::RELATIVE
                    .iter()
                    .map(|&d| (d, PlaceRef::Movable(m))),
            );
        }
        for (dir, reference) in refs {
            report.queries += 1;
            let (fast, slow) = (
                scene.place_occluders(s, o, dir, reference),
                oracle.place(o, dir, reference),
            );
            if fast != slow {
                report.mismatches.push(format!(
                    "{}: place {} {} {} -> [{}] vs oracle [{}]",
                    prob.name,
                    prob.movables[o].name,
                    dir.token(),
                    prob.name_of(reference.entity()),
                    fmt(&fast),
                    fmt(&slow)
                ));
            }
        }
    }
}

/// Two-step decision problem without continuous choice: three first
/// actions, two second actions, fixed rewards.
#[derive(Debug, Clone, Default)]
pub struct TwoStepMdp;

impl TwoStepMdp {
    pub const FIRST: [f64; 3] = [1.0, 0.0, 2.0];
    pub const SECOND: [[f64; 2]; 3] = [[0.0, 4.0], [5.0, 1.0], [-1.0, 0.5]];
}

/// State: the actions taken so far.
impl Domain for TwoStepMdp {
    type State = Vec<usize>;
    type Action = usize;
    type Param = ();

    fn legal_actions(&mut self, s: &Vec<usize>) -> Vec<usize> {
        match s.len() {
            0 => vec![0, 1, 2],
            1 => vec![0, 1],
            _ => Vec::new(),
        }
    }

    fn sample(&mut self, _s: &Vec<usize>, _a: &usize, _rng: &mut ChaCha8Rng) -> Option<()> {
        Some(())
    }

    fn step(&mut self, s: &Vec<usize>, a: &usize, _k: Option<&()>) -> Outcome<Vec<usize>> {
        let reward = match s.as_slice() {
            [] => Self::FIRST[*a],
            [first] => Self::SECOND[*first][*a],
            _ => 0.0,
        };
        let mut next = s.clone();
        next.push(*a);
        Outcome {
            state: next,
            reward,
        }
    }

    fn is_terminal(&self, s: &Vec<usize>) -> bool {
        s.len() >= 2
    }
}

/// Random continuous-parameter problem used to exercise widening: each
/// action's reward depends on the sampled parameter.
#[derive(Debug, Clone)]
pub struct FuzzDomain {
    pub actions: usize,
}

impl Domain for FuzzDomain {
    type State = u64;
    type Action = usize;
    type Param = u64;

    fn legal_actions(&mut self, _s: &u64) -> Vec<usize> {
        (0..self.actions).collect()
    }

    fn sample(&mut self, _s: &u64, _a: &usize, rng: &mut ChaCha8Rng) -> Option<u64> {
        // one draw in eight fails
        let k: u64 = rng.gen();
        (!k.is_multiple_of(8)).then_some(k)
    }

    fn step(&mut self, s: &u64, a: &usize, k: Option<&u64>) -> Outcome<u64> {
        match k {
            Some(k) => Outcome {
                state: s.wrapping_mul(31).wrapping_add(*k ^ *a as u64),
                reward: (k % 7) as f64 - 3.0,
            },
            None => Outcome {
                state: u64::MAX,
                reward: -6.0,
            },
        }
    }

    fn is_terminal(&self, s: &u64) -> bool {
        *s == u64::MAX
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BackupReport {
    pub simulations: u64,
    pub backups: usize,
    /// Largest |Q − mean of logged totals| over all tree entries.
    pub max_error: f64,
    pub violations: Vec<String>,
}

/// Runs `simulations` traced simulations and checks every entry's Q and
/// visit count against the logged backups, and every logged return against
/// reward plus discounted child return.
pub fn backup_oracle<D: Domain>(
    domain: &mut D,
    root: D::State,
    cfg: &PlannerConfig,
    simulations: usize,
    seed: u64,
) -> BackupReport {
    let cfg = PlannerConfig {
        trace: true,
        ..cfg.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut search = Search::new(domain, &cfg, &mut rng, root, 0);
    search.run(simulations, None);
    let tree = search.into_tree();
    let trace = tree.trace.clone().unwrap_or_default();
    let mut report = BackupReport {
        simulations: tree.stats.simulations,
        backups: trace.len(),
        ..Default::default()
    };
    for (i, node) in tree.discrete.iter().enumerate() {
        for (j, e) in node.entries.iter().enumerate() {
            let totals: Vec<f64> = trace
                .iter()
                .filter(|b| b.node == i && b.entry == j)
                .map(|b| b.total)
                .collect();
            check_mean(
                &mut report,
                &format!("node {i} entry {j}"),
                e.q,
                e.visits,
                &totals,
            );
        }
    }
    for (c, cont) in tree.continuous.iter().enumerate() {
        for (j, k) in cont.kappas.iter().enumerate() {
            let totals: Vec<f64> = trace
                .iter()
                .filter(|b| b.cont == c && b.kappa == j)
                .map(|b| b.total)
                .collect();
            check_mean(
                &mut report,
                &format!("cont {c} kappa {j}"),
                k.q,
                k.visits,
                &totals,
            );
        }
    }
    // a backup below `node` is logged just before the backup through it
    for w in trace.windows(2) {
        let (inner, outer) = (&w[0], &w[1]);
        let k = &tree.continuous[outer.cont].kappas[outer.kappa];
        if inner.node == k.child {
            let expected = k.reward * cfg.reward_scale + cfg.gamma * inner.total;
            if (outer.total - expected).abs() > 1e-9 {
                report.violations.push(format!(
                    "backup {}: total {} != r + γ·{}",
                    outer.seq, outer.total, inner.total
                ));
            }
        }
    }
    report
}

fn check_mean(report: &mut BackupReport, what: &str, q: f64, visits: u64, totals: &[f64]) {
    if totals.len() as u64 != visits {
        report.violations.push(format!(
            "{what}: {visits} visits but {} backups",
            totals.len()
        ));
        return;
    }
    if totals.is_empty() {
        return;
    }
    let mean = totals.iter().sum::<f64>() / totals.len() as f64;
    let err = (q - mean).abs();
    report.max_error = report.max_error.max(err);
    if err > 1e-9 {
        report
            .violations
            .push(format!("{what}: q {q} vs mean {mean}"));
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct WideningReport {
    pub checks: usize,
    pub samples: usize,
    pub violations: Vec<String>,
}

/// Runs a traced search on a random domain and checks that a parameter is
/// drawn exactly when `children ≤ k_alpha · n^c_alpha`, and that no node
/// ends with more children than the bound admits.
pub fn widening_fuzz(simulations: usize, seed: u64, cfg: &PlannerConfig) -> WideningReport {
    let cfg = PlannerConfig {
        trace: true,
        horizon: 8,
        ..cfg.clone()
    };
    let mut domain = FuzzDomain { actions: 3 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut search = Search::new(&mut domain, &cfg, &mut rng, seed, 0);
    search.run(simulations, None);
    let tree = search.into_tree();
    let mut report = WideningReport::default();
    for w in tree.widening.iter().flatten() {
        report.checks += 1;
        let bound = cfg.k_alpha * (w.n as f64).powf(cfg.c_alpha);
        let allowed = w.children_before as f64 <= bound;
        if w.sampled {
            report.samples += 1;
        }
        if w.sampled != allowed
            || widening_allows(w.children_before, w.n, cfg.k_alpha, cfg.c_alpha) != allowed
        {
            report.violations.push(format!(
                "n={} children={} sampled={} bound={bound}",
                w.n, w.children_before, w.sampled
            ));
        }
    }
    for (c, node) in tree.continuous.iter().enumerate() {
        let bound = cfg.k_alpha * (node.n as f64).powf(cfg.c_alpha);
        if node.kappas.len() as f64 > bound.floor() + 1.0 {
            report.violations.push(format!(
                "cont {c}: {} children at n={}",
                node.kappas.len(),
                node.n
            ));
        }
    }
    report
}
