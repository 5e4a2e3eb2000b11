//! Builders for the two-room household layout: a hall on the left, a
//! kitchen on the right, and a dividing wall with one doorway.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::{ConvexPolygon, Pose2, Vec2};
use crate::world::{
    Conjunct, Direction, Door, Goal, Movable, PlaceRef, ProblemInstance, Region, WorldError,
    WorldState,
};

pub const ROBOT_RADIUS: f64 = 0.25;
pub const HOME: Pose2 = Pose2 {
    x: 1.0,
    y: 2.5,
    theta: 0.0,
};

/// A table slot: the surface rectangle and the base pose facing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slot {
    pub extent: [f64; 4],
    pub base: Pose2,
}

const fn bottom(x0: f64) -> Slot {
    Slot {
        extent: [x0, 0.3, x0 + 1.0, 0.9],
        base: Pose2 {
            x: x0 + 0.5,
            y: 1.25,
            theta: -FRAC_PI_2,
        },
    }
}

const fn top(x0: f64) -> Slot {
    Slot {
        extent: [x0, 4.1, x0 + 1.0, 4.7],
        base: Pose2 {
            x: x0 + 0.5,
            y: 3.75,
            theta: FRAC_PI_2,
        },
    }
}

/// Which sides of a region carry a low wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Walls {
    pub left: bool,
    pub right: bool,
    pub back: bool,
}

impl Walls {
    pub const U: Walls = Walls {
        left: true,
        right: true,
        back: true,
    };
}

/// Incremental builder for problems in the two-room layout.
#[derive(Debug, Clone)]
pub struct TwoRoom {
    name: String,
    movables: Vec<Movable>,
    regions: Vec<Region>,
    doors: Vec<Door>,
    poses: Vec<Option<Pose2>>,
    door_open: Vec<bool>,
    goal: Vec<Conjunct>,
    horizon: usize,
    time_budget: f64,
}

impl Default for TwoRoom {
    fn default() -> Self {
        Self::new()
    }
}

impl TwoRoom {
    pub const H1: Slot = bottom(0.6);
    pub const H2: Slot = bottom(2.2);
    pub const H3: Slot = top(0.6);
    pub const H4: Slot = top(2.2);
    pub const K1: Slot = bottom(4.8);
    pub const K2: Slot = bottom(6.4);
    pub const K3: Slot = top(4.8);
    pub const K4: Slot = top(6.4);

    pub const WIDTH: f64 = 8.0;
    pub const HEIGHT: f64 = 5.0;

    pub fn new() -> Self {
        Self {
            name: "scene".into(),
            movables: Vec::new(),
            regions: Vec::new(),
            doors: Vec::new(),
            poses: Vec::new(),
            door_open: Vec::new(),
            goal: Vec::new(),
            horizon: 20,
            time_budget: 600.0,
        }
    }

    pub fn name(&mut self, name: &str) -> &mut Self {
        self.name = name.into();
        self
    }

    pub fn horizon(&mut self, h: usize) -> &mut Self {
        self.horizon = h;
        self
    }

    pub fn time_budget(&mut self, seconds: f64) -> &mut Self {
        self.time_budget = seconds;
        self
    }

    pub fn region(&mut self, name: &str, slot: Slot) -> usize {
        self.walled_region(name, slot, Walls::default())
    }

    /// Adds a region with low walls on the requested sides. Walls sit just
    /// outside the surface, inside the region body.
    pub fn walled_region(&mut self, name: &str, slot: Slot, walls: Walls) -> usize {
        let [x0, y0, x1, y1] = slot.extent;
        let extent = ConvexPolygon::aabb_rect(x0, y0, x1, y1).expect("slot rectangle");
        let local_frame = Pose2::new(
            (x0 + x1) / 2.0,
            (y0 + y1) / 2.0,
            slot.base.theta - FRAC_PI_2,
        );
        let t = 0.02;
        let rect = |a: f64, b: f64, c: f64, d: f64| {
            ConvexPolygon::aabb_rect(a, b, c, d).expect("wall rectangle")
        };
        // the back wall is the side away from the base pose
        let facing_down = slot.base.y > y1;
        let mut w = Vec::new();
        // "left" and "right" follow the region frame
        let (lo_x_side, hi_x_side) = if facing_down {
            (walls.right, walls.left)
        } else {
            (walls.left, walls.right)
        };
        if lo_x_side {
            w.push(rect(x0 - t, y0, x0, y1));
        }
        if hi_x_side {
            w.push(rect(x1, y0, x1 + t, y1));
        }
        if walls.back {
            if facing_down {
                w.push(rect(x0 - t, y0 - t, x1 + t, y0));
            } else {
                w.push(rect(x0 - t, y1, x1 + t, y1 + t));
            }
        }
        self.regions.push(Region {
            name: name.into(),
            extent,
            base_pose: slot.base,
            local_frame,
            walls: w,
            body_margin: 0.03,
        });
        self.regions.len() - 1
    }

    /// Adds the door across the doorway of the dividing wall.
    pub fn door(&mut self, name: &str, open: bool) -> usize {
        self.doors.push(Door {
            name: name.into(),
            closed_polygon: ConvexPolygon::aabb_rect(3.97, 2.0, 4.03, 3.0).expect("door rectangle"),
            base_pose: Pose2::new(3.5, 2.5, 0.0),
            handle_point: Vec2::new(3.97, 2.5),
        });
        self.door_open.push(open);
        self.doors.len() - 1
    }

    /// Adds a rectangular object on `region`, offset from the region center
    /// by `(dx, dy)` in the region frame (x right, y behind).
    pub fn movable_at(
        &mut self,
        name: &str,
        w: f64,
        h: f64,
        region: usize,
        dx: f64,
        dy: f64,
    ) -> usize {
        let frame = self.regions[region].local_frame;
        let p = frame.apply(Vec2::new(dx, dy));
        self.movables.push(Movable {
            name: name.into(),
            footprint: ConvexPolygon::rectangle(w, h).expect("object rectangle"),
            grasp_point: Vec2::new(0.0, 0.0),
        });
        self.poses.push(Some(Pose2::new(p.x, p.y, frame.theta)));
        self.movables.len() - 1
    }

    pub fn goal(&mut self, subject: usize, dir: Direction, reference: PlaceRef) -> &mut Self {
        self.goal.push(Conjunct {
            subject,
            dir,
            reference,
        });
        self
    }

    pub fn goal_on(&mut self, subject: usize, region: usize) -> &mut Self {
        self.goal(subject, Direction::On, PlaceRef::Region(region))
    }

    pub fn try_build(&self) -> Result<ProblemInstance, WorldError> {
        let r = 0.1;
        let (w, h) = (Self::WIDTH, Self::HEIGHT);
        let rect = |a: f64, b: f64, c: f64, d: f64| {
            ConvexPolygon::aabb_rect(a, b, c, d).expect("wall rectangle")
        };
        let static_walls = vec![
            rect(-r, -r, w + r, 0.0),
            rect(-r, h, w + r, h + r),
            rect(-r, 0.0, 0.0, h),
            rect(w, 0.0, w + r, h),
            rect(3.95, 0.0, 4.05, 2.0),
            rect(3.95, 3.0, 4.05, h),
        ];
        ProblemInstance {
            name: self.name.clone(),
            movables: self.movables.clone(),
            regions: self.regions.clone(),
            doors: self.doors.clone(),
            static_walls,
            robot_footprint: ConvexPolygon::regular(8, ROBOT_RADIUS, PI / 8.0).expect("octagon"),
            bounds: [Vec2::new(0.0, 0.0), Vec2::new(w, h)],
            s0: WorldState {
                poses: self.poses.clone(),
                door_open: self.door_open.clone(),
                base: HOME,
                holding: None,
                failed: false,
            },
            goal: Goal::new(self.goal.clone())?,
            horizon: self.horizon,
            time_budget: self.time_budget,
        }
        .validated()
    }

    /// # Panics
    /// If the assembled problem is invalid.
    pub fn build(&self) -> ProblemInstance {
        self.try_build().expect("valid two-room problem")
    }
}

/// Small problem used in examples and tests: two hall tables, a kitchen
/// counter behind a closed door, and a cup blocked by a bottle.
pub fn demo_problem() -> ProblemInstance {
    let mut w = TwoRoom::new();
    w.name("demo");
    let t1 = w.region("table1", TwoRoom::H1);
    let t2 = w.region("table2", TwoRoom::H2);
    let c1 = w.region("counter1", TwoRoom::K1);
    w.door("door", false);
    let cup = w.movable_at("cup", 0.08, 0.08, t1, 0.0, 0.15);
    w.movable_at("bottle", 0.08, 0.08, t1, 0.0, -0.1);
    let plate = w.movable_at("plate", 0.2, 0.2, t2, 0.0, 0.0);
    w.goal_on(cup, c1).goal_on(plate, t1);
    w.build()
}

/// Random problem for property tests and oracle sweeps: up to five regions
/// (some walled), a door in random state, `n_movables` small objects placed
/// without overlap, and a goal over one to three objects.
pub fn random_problem(seed: u64, n_movables: usize) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = TwoRoom::new();
    w.name(&format!("random{seed}"));
    let mut slots = [
        TwoRoom::H1,
        TwoRoom::H2,
        TwoRoom::H3,
        TwoRoom::K1,
        TwoRoom::K2,
        TwoRoom::K3,
    ];
    slots.shuffle(&mut rng);
    let n_regions = rng.gen_range(2..=5);
    let regions: Vec<usize> = (0..n_regions)
        .map(|i| {
            let walls = if rng.gen_bool(0.3) {
                Walls::U
            } else {
                Walls::default()
            };
            w.walled_region(&format!("region{i}"), slots[i], walls)
        })
        .collect();
    w.door("door", rng.gen_bool(0.5));
    let mut placed: Vec<(usize, f64, f64)> = Vec::new();
    let mut objects = Vec::new();
    for i in 0..n_movables {
        let size = *[0.08, 0.08, 0.12, 0.2].choose(&mut rng).expect("nonempty");
        for _ in 0..200 {
            let r = regions[rng.gen_range(0..regions.len())];
            let lim_x = 0.5 - size / 2.0 - 0.01;
            let lim_y = 0.3 - size / 2.0 - 0.01;
            let dx = rng.gen_range(-lim_x..lim_x);
            let dy = rng.gen_range(-lim_y..lim_y);
            let clash = placed
                .iter()
                .any(|&(pr, px, py)| pr == r && (px - dx).abs() < 0.22 && (py - dy).abs() < 0.22);
            if !clash {
                placed.push((r, dx, dy));
                objects.push(w.movable_at(&format!("obj{i}"), size, size, r, dx, dy));
                break;
            }
        }
    }
    let n_goal = rng.gen_range(1..=3.min(objects.len().max(1)));
    let mut subjects = objects.clone();
    subjects.shuffle(&mut rng);
    for &o in subjects.iter().take(n_goal) {
        let r = regions[rng.gen_range(0..regions.len())];
        w.goal_on(o, r);
    }
    if subjects.len() >= 2 && rng.gen_bool(0.5) {
        let dir = Direction::RELATIVE[rng.gen_range(0..4)];
        w.goal(subjects[0], dir, PlaceRef::Movable(subjects[1]));
    }
    if objects.is_empty() {
        // a goal needs a subject
        let o = w.movable_at("obj0", 0.08, 0.08, regions[0], 0.0, 0.0);
        w.goal_on(o, regions[0]);
    }
    w.build()
}
