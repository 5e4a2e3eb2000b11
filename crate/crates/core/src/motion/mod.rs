//! Motion layer: roadmap planning, occlusion predicates, grounded literals
//! and continuous-parameter samplers.

pub mod feasibility;
pub mod literals;
pub mod roadmap;
pub mod sampler;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{corridor_polygon, intersects, sweep, ConvexPolygon, Corridor, Pose2, Vec2};
use crate::par::Parallelism;
use crate::world::{Direction, PlaceRef, ProblemInstance, WorldState};
pub use roadmap::Roadmap;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MotionError {
    #[error("no collision-free roadmap sample could be drawn")]
    WorkspaceBlocked,
    #[error("workspace bounds are empty")]
    BadBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionConfig {
    pub prm_samples: usize,
    pub prm_k: usize,
    pub prm_seed: u64,
    /// Width of reach corridors.
    pub gripper_width: f64,
    /// Length of the short pick approach corridor.
    pub approach_length: f64,
    /// Pick approach yaw is drawn from `[-limit, limit]`, radians.
    pub approach_yaw_limit: f64,
    /// Distance from a reference object to the canonical point of a
    /// relative placement.
    pub place_offset: f64,
    pub max_tries: usize,
    /// How roadmap edges are checked at scene construction.
    pub parallelism: Parallelism,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            prm_samples: 300,
            prm_k: 8,
            prm_seed: 0,
            gripper_width: 0.10,
            approach_length: 0.15,
            approach_yaw_limit: 60f64.to_radians(),
            place_offset: 0.15,
            max_tries: 20,
            parallelism: Parallelism::default(),
        }
    }
}

/// Something that blocks a pick or place: an object, a closed door, or the
/// static structure of the world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Occluder {
    Movable(usize),
    Door(usize),
    World,
}

impl Occluder {
    pub fn name<'a>(&self, prob: &'a ProblemInstance) -> &'a str {
        match *self {
            Occluder::Movable(i) => &prob.movables[i].name,
            Occluder::Door(i) => &prob.doors[i].name,
            Occluder::World => "world",
        }
    }
}

pub type OccluderSet = BTreeSet<Occluder>;

/// Shortest static path from the home pose to a target base pose, with the
/// footprint sweep along it.
#[derive(Debug, Clone)]
struct Nominal {
    path: Vec<Pose2>,
    sweep: Vec<ConvexPolygon>,
}

/// A problem together with its roadmap and the precomputed static data
/// used by occlusion predicates.
///
/// Occlusion paths are planned once from the initial base pose against the
/// static geometry only, so every occlusion literal depends on object and
/// door poses but not on where the robot currently stands.
#[derive(Debug)]
pub struct Scene {
    problem: ProblemInstance,
    roadmap: Roadmap,
    config: MotionConfig,
    blockers: Vec<ConvexPolygon>,
    nominal: Vec<Option<Nominal>>,
    /// `coupled[r]` lists the regions whose occlusion literals can change
    /// when an object appears in or leaves region `r`.
    coupled: Vec<Vec<usize>>,
    plan_calls: AtomicU64,
}

impl Clone for Scene {
    fn clone(&self) -> Self {
        Scene {
            problem: self.problem.clone(),
            roadmap: self.roadmap.clone(),
            config: self.config.clone(),
            blockers: self.blockers.clone(),
            nominal: self.nominal.clone(),
            coupled: self.coupled.clone(),
            plan_calls: AtomicU64::new(self.plan_calls.load(Ordering::Relaxed)),
        }
    }
}

/// Pose on the far side of a door, mirrored through the door centroid.
fn mirrored_base(door: &crate::world::Door) -> Pose2 {
    let c = door.closed_polygon.centroid();
    let p = door.base_pose.position();
    let m = c * 2.0 - p;
    Pose2::new(m.x, m.y, door.base_pose.theta)
}

impl Scene {
    pub fn new(problem: ProblemInstance, config: MotionConfig) -> Result<Scene, MotionError> {
        let blockers = problem.base_blockers();
        let mut anchors = vec![problem.s0.base];
        anchors.extend(problem.regions.iter().map(|r| r.base_pose));
        let forced: Vec<(Pose2, Pose2)> = problem
            .doors
            .iter()
            .map(|d| (d.base_pose, mirrored_base(d)))
            .collect();
        let roadmap = Roadmap::build(
            &problem.robot_footprint,
            &blockers,
            problem.bounds,
            &anchors,
            &forced,
            config.prm_samples,
            config.prm_k,
            config.prm_seed,
            config.parallelism,
        )?;
        let home = problem.s0.base;
        let nominal: Vec<Option<Nominal>> = problem
            .regions
            .iter()
            .map(|r| {
                let path = roadmap.plan_path(home, r.base_pose, &[]);
                if path.is_none() {
                    log::warn!("region `{}` is unreachable from the home pose", r.name);
                }
                path.map(|path| Nominal {
                    sweep: sweep(&problem.robot_footprint, &path),
                    path,
                })
            })
            .collect();
        let mut scene = Scene {
            problem,
            roadmap,
            config,
            blockers,
            nominal,
            coupled: Vec::new(),
            plan_calls: AtomicU64::new(0),
        };
        scene.coupled = scene.compute_coupling();
        Ok(scene)
    }

    pub fn problem(&self) -> &ProblemInstance {
        &self.problem
    }

    pub fn roadmap(&self) -> &Roadmap {
        &self.roadmap
    }

    pub fn config(&self) -> &MotionConfig {
        &self.config
    }

    pub fn blockers(&self) -> &[ConvexPolygon] {
        &self.blockers
    }

    /// Number of motion-planner queries issued so far.
    pub fn plan_calls(&self) -> u64 {
        self.plan_calls.load(Ordering::Relaxed)
    }

    /// Static nominal path from home to the base pose of `region`.
    pub fn nominal_path(&self, region: usize) -> Option<&[Pose2]> {
        self.nominal[region].as_ref().map(|n| n.path.as_slice())
    }

    pub fn coupled_regions(&self, region: usize) -> &[usize] {
        &self.coupled[region]
    }

    /// Plans a base path from `from` to `to` around movables and closed
    /// doors in `s`. The held object travels with the robot and is ignored.
    pub fn plan_path(&self, s: &WorldState, from: Pose2, to: Pose2) -> Option<Vec<Pose2>> {
        self.plan_calls.fetch_add(1, Ordering::Relaxed);
        self.roadmap.plan_path(from, to, &self.dynamic_obstacles(s))
    }

    /// Footprints of placed movables plus closed doors.
    pub fn dynamic_obstacles(&self, s: &WorldState) -> Vec<ConvexPolygon> {
        let prob = &self.problem;
        let mut out: Vec<ConvexPolygon> = (0..prob.movables.len())
            .filter_map(|o| prob.placed_footprint(s, o))
            .collect();
        for (d, door) in prob.doors.iter().enumerate() {
            if !s.door_open[d] {
                out.push(door.closed_polygon.clone());
            }
        }
        out
    }

    /// Region `r2` is coupled to `r1` when an object inside `r1` can lie on
    /// the nominal path to `r2` or inside the zone swept by `r2`'s reach
    /// corridors.
    fn compute_coupling(&self) -> Vec<Vec<usize>> {
        let regions = &self.problem.regions;
        let zones: Vec<ConvexPolygon> = regions.iter().map(|r| self.reach_zone(r)).collect();
        (0..regions.len())
            .map(|r1| {
                (0..regions.len())
                    .filter(|&r2| {
                        r1 == r2
                            || intersects(&regions[r1].extent, &zones[r2])
                            || self.nominal[r2].as_ref().is_some_and(|n| {
                                n.sweep.iter().any(|p| intersects(&regions[r1].extent, p))
                            })
                    })
                    .collect()
            })
            .collect()
    }

    fn reach_zone(&self, r: &crate::world::Region) -> ConvexPolygon {
        let mut pts = r
            .extent
            .inflate(self.config.place_offset)
            .vertices()
            .to_vec();
        pts.push(r.base_pose.position());
        ConvexPolygon::hull(&pts)
            .expect("region zone has area")
            .inflate(self.config.gripper_width / 2.0)
    }

    fn corridor(&self, from: Vec2, to: Vec2) -> Option<ConvexPolygon> {
        Corridor::new(from, to, self.config.gripper_width)
            .ok()
            .map(|c| corridor_polygon(&c))
    }

    /// Occluders of a reach into `region` towards `point`, ignoring `subject`.
    fn reach_occluders(
        &self,
        s: &WorldState,
        region: usize,
        point: Vec2,
        subject: usize,
    ) -> OccluderSet {
        let prob = &self.problem;
        let mut out = OccluderSet::new();
        let (Some(nominal), Some(corridor)) = (
            self.nominal[region].as_ref(),
            self.corridor(prob.regions[region].base_pose.position(), point),
        ) else {
            out.insert(Occluder::World);
            return out;
        };
        if prob.regions[region]
            .walls
            .iter()
            .any(|w| intersects(w, &corridor))
        {
            out.insert(Occluder::World);
        }
        for o in 0..prob.movables.len() {
            if o == subject {
                continue;
            }
            let Some(fp) = prob.placed_footprint(s, o) else {
                continue;
            };
            if intersects(&fp, &corridor) || nominal.sweep.iter().any(|p| intersects(&fp, p)) {
                out.insert(Occluder::Movable(o));
            }
        }
        for (d, door) in prob.doors.iter().enumerate() {
            if !s.door_open[d]
                && nominal
                    .sweep
                    .iter()
                    .any(|p| intersects(&door.closed_polygon, p))
            {
                out.insert(Occluder::Door(d));
            }
        }
        out
    }

    /// Entities preventing a pick of `o` in `s`. Objects without a region
    /// are occluded by the world.
    pub fn pick_occluders(&self, s: &WorldState, o: usize) -> OccluderSet {
        let prob = &self.problem;
        let (Some(pose), Some(region)) = (s.poses[o], prob.region_of(s, o)) else {
            return OccluderSet::from([Occluder::World]);
        };
        let grasp = pose.apply(prob.movables[o].grasp_point);
        self.reach_occluders(s, region, grasp, o)
    }

    /// Destination region of a placement of `subject` relative to `reference`.
    pub fn place_region(&self, s: &WorldState, reference: PlaceRef) -> Option<usize> {
        match reference {
            PlaceRef::Region(r) => Some(r),
            PlaceRef::Movable(m) => self.problem.region_of(s, m),
        }
    }

    /// Canonical target point of a placement: the region centroid for `on`,
    /// otherwise a point offset from the reference along the direction axis.
    pub fn place_point(&self, s: &WorldState, dir: Direction, reference: PlaceRef) -> Option<Vec2> {
        let region = self.place_region(s, reference)?;
        let r = &self.problem.regions[region];
        match reference {
            PlaceRef::Region(_) => Some(r.extent.centroid()),
            PlaceRef::Movable(m) => {
                let c = s.poses[m]?.position();
                let axis = dir.local_axis().rotate(r.local_frame.theta);
                Some(c + axis * self.config.place_offset)
            }
        }
    }

    /// Entities preventing a placement of `o` at `dir` of `reference`.
    pub fn place_occluders(
        &self,
        s: &WorldState,
        o: usize,
        dir: Direction,
        reference: PlaceRef,
    ) -> OccluderSet {
        match (
            self.place_region(s, reference),
            self.place_point(s, dir, reference),
        ) {
            (Some(region), Some(point)) => self.reach_occluders(s, region, point, o),
            _ => OccluderSet::from([Occluder::World]),
        }
    }

    /// The reach corridor from a region's base pose to a point.
    pub fn reach_corridor(&self, region: usize, point: Vec2) -> Option<ConvexPolygon> {
        self.corridor(self.problem.regions[region].base_pose.position(), point)
    }
}

impl fmt::Display for MotionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "prm(n={}, k={}, seed={}) gripper={} tries={}",
            self.prm_samples, self.prm_k, self.prm_seed, self.gripper_width, self.max_tries
        )
    }
}
