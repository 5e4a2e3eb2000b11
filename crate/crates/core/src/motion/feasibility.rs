//! Geometric validation of sampled continuous parameters. The transition
//! model accepts an action exactly when these checks pass.

use crate::geom::{
    corridor_polygon, intersects, transform, ConvexPolygon, Corridor, Pose2, Vec2, EPS,
};
use crate::world::{at_position, ContinuousParams, DiscreteAction, PlaceRef, WorldState};

use super::Scene;

/// Base pose an action must end its navigation at.
pub fn target_base(s: &WorldState, a: &DiscreteAction, scene: &Scene) -> Option<Pose2> {
    let prob = scene.problem();
    match *a {
        DiscreteAction::Pick { target } => {
            prob.region_of(s, target).map(|r| prob.regions[r].base_pose)
        }
        DiscreteAction::Open { door } => Some(prob.doors[door].base_pose),
        DiscreteAction::Place { reference, .. } => scene
            .place_region(s, reference)
            .map(|r| prob.regions[r].base_pose),
    }
}

fn same_pose(a: &Pose2, b: &Pose2) -> bool {
    a.distance(b) < EPS && (a.theta - b.theta).abs() < EPS
}

/// Checks that the path starts at the current base, ends at `goal`, and
/// every segment sweep is clear of statics, placed movables and closed doors.
pub fn nav_path_valid(s: &WorldState, path: &[Pose2], goal: &Pose2, scene: &Scene) -> bool {
    let (Some(first), Some(last)) = (path.first(), path.last()) else {
        return false;
    };
    if !same_pose(first, &s.base) || !same_pose(last, goal) {
        return false;
    }
    let obstacles = scene.dynamic_obstacles(s);
    path.windows(2)
        .all(|w| scene.roadmap().segment_free(&w[0], &w[1], &obstacles))
}

/// Short corridor ending at the grasp point, rotated about it by `yaw`
/// from the straight line out of the base.
pub fn approach_corridor(
    base: Vec2,
    grasp: Vec2,
    yaw: f64,
    length: f64,
    width: f64,
) -> Option<ConvexPolygon> {
    let d = grasp - base;
    let n = d.norm();
    if n < EPS {
        return None;
    }
    let u = (d * (1.0 / n)).rotate(yaw);
    Corridor::new(grasp - u * length, grasp, width)
        .ok()
        .map(|c| corridor_polygon(&c))
}

/// Whether `poly` is clear of every placed movable other than `skip` and of
/// the given walls.
pub fn clear_of(
    s: &WorldState,
    scene: &Scene,
    poly: &ConvexPolygon,
    skip: Option<usize>,
    walls: &[ConvexPolygon],
) -> bool {
    let prob = scene.problem();
    let bbox = poly.aabb();
    let movables_clear = (0..prob.movables.len())
        .filter(|&o| Some(o) != skip)
        .filter_map(|o| prob.placed_footprint(s, o))
        .all(|fp| !(fp.aabb().overlaps(&bbox) && intersects(&fp, poly)));
    movables_clear && walls.iter().all(|w| !intersects(w, poly))
}

/// Pose the held object would take when placed at the sampled point.
pub fn placed_pose(
    s: &WorldState,
    a: &DiscreteAction,
    k: &ContinuousParams,
    scene: &Scene,
) -> Option<Pose2> {
    let DiscreteAction::Place {
        target, reference, ..
    } = *a
    else {
        return None;
    };
    let held = s.holding.filter(|h| h.object == target)?;
    let region = scene.place_region(s, reference)?;
    let p = k.placement_point?;
    let frame = scene.problem().regions[region].local_frame;
    Some(Pose2::new(p.x, p.y, frame.theta + held.relative_yaw))
}

/// Checks a candidate placement geometrically: footprint inside the
/// destination extent, clear of objects and walls, reachable through a
/// clear corridor, and satisfying the requested direction.
pub fn placement_valid(
    s: &WorldState,
    a: &DiscreteAction,
    k: &ContinuousParams,
    scene: &Scene,
) -> bool {
    let DiscreteAction::Place {
        target,
        dir,
        reference,
    } = *a
    else {
        return false;
    };
    let prob = scene.problem();
    let (Some(pose), Some(region)) = (
        placed_pose(s, a, k, scene),
        scene.place_region(s, reference),
    ) else {
        return false;
    };
    let r = &prob.regions[region];
    let fp = transform(&prob.movables[target].footprint, &pose);
    if !r.extent.contains_polygon(&fp) || !clear_of(s, scene, &fp, Some(target), &r.walls) {
        return false;
    }
    let Some(corridor) = scene.reach_corridor(region, pose.position()) else {
        return false;
    };
    if !clear_of(s, scene, &corridor, Some(target), &r.walls) {
        return false;
    }
    let mut after = s.clone();
    after.poses[target] = Some(pose);
    after.holding = None;
    at_position(&after, prob, target, dir, reference)
}

/// Symbolic preconditions of `a` in `s`.
pub fn preconditions_hold(s: &WorldState, a: &DiscreteAction, scene: &Scene) -> bool {
    match *a {
        DiscreteAction::Pick { target } => {
            s.hand_available()
                && s.poses[target].is_some()
                && scene.pick_occluders(s, target).is_empty()
        }
        DiscreteAction::Open { door } => s.hand_available() && !s.door_open[door],
        DiscreteAction::Place {
            target,
            dir,
            reference,
        } => {
            s.is_held(target)
                && match reference {
                    PlaceRef::Movable(m) => s.poses[m].is_some(),
                    PlaceRef::Region(_) => true,
                }
                && scene.place_occluders(s, target, dir, reference).is_empty()
        }
    }
}

/// Full feasibility of `a` with parameters `k` in `s`.
pub fn is_feasible(
    s: &WorldState,
    a: &DiscreteAction,
    k: &ContinuousParams,
    scene: &Scene,
) -> bool {
    if s.failed || !preconditions_hold(s, a, scene) {
        return false;
    }
    let Some(goal) = target_base(s, a, scene) else {
        return false;
    };
    if !nav_path_valid(s, &k.nav_path, &goal, scene) {
        return false;
    }
    let prob = scene.problem();
    let cfg = scene.config();
    match *a {
        DiscreteAction::Pick { target } => {
            let Some(yaw) = k.approach_yaw else {
                return false;
            };
            if !yaw.is_finite() || yaw.abs() > cfg.approach_yaw_limit + EPS {
                return false;
            }
            let pose = s.poses[target].expect("checked by preconditions");
            let region = prob.region_of(s, target).expect("checked by target_base");
            let grasp = pose.apply(prob.movables[target].grasp_point);
            match approach_corridor(
                goal.position(),
                grasp,
                yaw,
                cfg.approach_length,
                cfg.gripper_width,
            ) {
                Some(c) => clear_of(s, scene, &c, Some(target), &prob.regions[region].walls),
                None => false,
            }
        }
        DiscreteAction::Open { door } => {
            let d = &prob.doors[door];
            match Corridor::new(d.base_pose.position(), d.handle_point, cfg.gripper_width) {
                Ok(c) => clear_of(s, scene, &corridor_polygon(&c), None, &[]),
                Err(_) => true,
            }
        }
        DiscreteAction::Place { .. } => placement_valid(s, a, k, scene),
    }
}
