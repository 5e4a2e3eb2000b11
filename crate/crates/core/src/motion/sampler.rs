//! Samplers for the continuous parameters of discrete actions. A returned
//! parameter set always passes [`feasibility::is_feasible`].

use rand::Rng;

use super::feasibility::{self, approach_corridor, clear_of};
use super::Scene;
use crate::geom::{intersects, transform, Vec2};
use crate::world::{ContinuousParams, Direction, DiscreteAction, WorldState};

/// Draws continuous parameters for `a` in `s`, or `None` when the action is
/// infeasible or sampling exhausts its budget.
pub fn sample_continuous<R: Rng + ?Sized>(
    s: &WorldState,
    a: &DiscreteAction,
    scene: &Scene,
    rng: &mut R,
) -> Option<ContinuousParams> {
    if s.failed
        || scene.problem().well_typed(a).is_err()
        || !feasibility::preconditions_hold(s, a, scene)
    {
        return None;
    }
    let goal = feasibility::target_base(s, a, scene)?;
    let nav_path = scene.plan_path(s, s.base, goal)?;
    let k = match *a {
        DiscreteAction::Pick { target } => {
            sample_pick(s, target, goal.position(), nav_path, scene, rng)?
        }
        DiscreteAction::Open { .. } => ContinuousParams {
            nav_path,
            approach_yaw: None,
            placement_point: None,
        },
        DiscreteAction::Place { .. } => sample_place(s, a, nav_path, scene, rng)?,
    };
    feasibility::is_feasible(s, a, &k, scene).then_some(k)
}

fn sample_pick<R: Rng + ?Sized>(
    s: &WorldState,
    o: usize,
    base: Vec2,
    nav_path: Vec<crate::geom::Pose2>,
    scene: &Scene,
    rng: &mut R,
) -> Option<ContinuousParams> {
    let prob = scene.problem();
    let cfg = scene.config();
    let region = prob.region_of(s, o)?;
    let grasp = s.poses[o]?.apply(prob.movables[o].grasp_point);
    let walls = &prob.regions[region].walls;
    for _ in 0..cfg.max_tries.max(1) {
        let yaw = rng.gen_range(-cfg.approach_yaw_limit..=cfg.approach_yaw_limit);
        let c = approach_corridor(base, grasp, yaw, cfg.approach_length, cfg.gripper_width)?;
        if clear_of(s, scene, &c, Some(o), walls) {
            return Some(ContinuousParams {
                nav_path,
                approach_yaw: Some(yaw),
                placement_point: None,
            });
        }
    }
    None
}

/// Rejection-samples a placement point. Candidates that keep clear of the
/// reach corridors of other objects in the region are preferred; otherwise
/// the first valid candidate is returned.
fn sample_place<R: Rng + ?Sized>(
    s: &WorldState,
    a: &DiscreteAction,
    nav_path: Vec<crate::geom::Pose2>,
    scene: &Scene,
    rng: &mut R,
) -> Option<ContinuousParams> {
    let DiscreteAction::Place {
        target,
        dir,
        reference,
    } = *a
    else {
        return None;
    };
    let prob = scene.problem();
    let cfg = scene.config();
    let region = scene.place_region(s, reference)?;
    let r = &prob.regions[region];
    let bbox = r.extent.aabb();
    let ref_center = match reference {
        crate::world::PlaceRef::Movable(m) => s.poses[m].map(|p| p.position()),
        crate::world::PlaceRef::Region(_) => None,
    };
    // reach corridors of the other objects already in the region plus the
    // region's own placement corridor
    let mut keep_clear = Vec::new();
    for m in 0..prob.movables.len() {
        if m == target || prob.region_of(s, m) != Some(region) {
            continue;
        }
        if let Some(p) = s.poses[m] {
            keep_clear.extend(scene.reach_corridor(region, p.apply(prob.movables[m].grasp_point)));
        }
    }
    keep_clear.extend(scene.reach_corridor(region, r.extent.centroid()));

    let mut fallback: Option<ContinuousParams> = None;
    for _ in 0..cfg.max_tries.max(1) {
        let mut point = None;
        for _ in 0..cfg.max_tries.max(1) {
            let p = Vec2::new(
                rng.gen_range(bbox.min.x..=bbox.max.x),
                rng.gen_range(bbox.min.y..=bbox.max.y),
            );
            if !r.extent.contains_point(p) {
                continue;
            }
            let aligned = match (dir, ref_center) {
                (Direction::On, _) => true,
                (d, Some(c)) => Direction::classify(r.local_delta(c, p)) == Some(d),
                (_, None) => false,
            };
            if aligned {
                point = Some(p);
                break;
            }
        }
        let Some(p) = point else { continue };
        let k = ContinuousParams {
            nav_path: nav_path.clone(),
            approach_yaw: None,
            placement_point: Some(p),
        };
        if !feasibility::placement_valid(s, a, &k, scene) {
            continue;
        }
        let pose = feasibility::placed_pose(s, a, &k, scene)?;
        let fp = transform(&prob.movables[target].footprint, &pose);
        if keep_clear.iter().all(|c| !intersects(c, &fp)) {
            return Some(k);
        }
        fallback.get_or_insert(k);
    }
    fallback
}
