//! The six bundled benchmark problems, built in the two-room layout. The
//! JSON files under `problems/` are generated from these builders.

use tamp_core::scenario::{TwoRoom, Walls};
use tamp_core::world::{Direction, PlaceRef, ProblemInstance};

const BOTTLE: f64 = 0.08;
const SALTER: f64 = 0.06;
const CAN: f64 = 0.07;

/// Door occlusion: three goal objects sit behind the closed kitchen door.
pub fn p1() -> ProblemInstance {
    let mut w = TwoRoom::new();
    w.name("p1_analog").time_budget(300.0);
    let table1 = w.region("table1", TwoRoom::H1);
    let table2 = w.region("table2", TwoRoom::H2);
    let counter1 = w.region("counter1", TwoRoom::K1);
    let counter2 = w.region("counter2", TwoRoom::K2);
    let shelf = w.region("shelf", TwoRoom::K3);
    let minifridge = w.region("minifridge", TwoRoom::K4);
    w.door("kitchen_door", false);
    let bottle1 = w.movable_at("bottle1", BOTTLE, BOTTLE, table2, -0.25, 0.0);
    let bottle2 = w.movable_at("bottle2", BOTTLE, BOTTLE, minifridge, 0.0, 0.1);
    let bottle3 = w.movable_at("bottle3", BOTTLE, BOTTLE, table2, 0.25, 0.1);
    let salter1 = w.movable_at("salter1", SALTER, SALTER, counter1, 0.2, 0.0);
    let salter2 = w.movable_at("salter2", SALTER, SALTER, counter2, -0.2, 0.1);
    let salter3 = w.movable_at("salter3", SALTER, SALTER, table1, 0.0, 0.1);
    w.goal_on(bottle1, table1)
        .goal_on(bottle2, counter2)
        .goal_on(bottle3, table1)
        .goal_on(salter1, counter2)
        .goal_on(salter2, shelf)
        .goal_on(salter3, table2);
    w.build()
}

/// Clutter clearing: the salter stands behind two bottles.
pub fn p2() -> ProblemInstance {
    let mut w = TwoRoom::new();
    w.name("p2_analog").time_budget(300.0);
    w.region("table1", TwoRoom::H1);
    let table2 = w.region("table2", TwoRoom::H2);
    w.region("counter1", TwoRoom::H3);
    let counter2 = w.region("counter2", TwoRoom::H4);
    w.region("shelf", TwoRoom::K1);
    w.door("kitchen_door", false);
    let salter = w.movable_at("salter", SALTER, SALTER, counter2, 0.0, 0.2);
    let bottle1 = w.movable_at("bottle1", BOTTLE, BOTTLE, table2, -0.3, 0.0);
    w.movable_at("bottle2", BOTTLE, BOTTLE, counter2, 0.0, 0.0);
    w.movable_at("bottle3", BOTTLE, BOTTLE, counter2, 0.0, -0.2);
    w.goal_on(salter, table2)
        .goal(salter, Direction::RightOf, PlaceRef::Movable(bottle1));
    w.build()
}

/// Tight space: milk and coke share a counter with bottles that do not
/// block them.
pub fn p3() -> ProblemInstance {
    let mut w = TwoRoom::new();
    w.name("p3_analog").time_budget(600.0);
    let counter1 = w.region("counter1", TwoRoom::K1);
    let counter2 = w.region("counter2", TwoRoom::K2);
    w.door("kitchen_door", true);
    let milk = w.movable_at("milk", BOTTLE, BOTTLE, counter1, -0.1, 0.15);
    let coke = w.movable_at("coke", CAN, CAN, counter1, 0.1, 0.15);
    w.movable_at("bottle1", BOTTLE, BOTTLE, counter1, -0.3, -0.05);
    w.movable_at("bottle2", BOTTLE, BOTTLE, counter1, 0.3, -0.05);
    w.movable_at("bottle3", BOTTLE, BOTTLE, counter2, 0.35, 0.15);
    w.goal_on(milk, counter2).goal_on(coke, counter2);
    w.build()
}

/// Door plus clutter: the plate is behind the closed door and the salter
/// behind two bottles.
pub fn p4() -> ProblemInstance {
    let mut w = TwoRoom::new();
    w.name("p4_analog").time_budget(300.0);
    w.region("table1", TwoRoom::H1);
    let table2 = w.region("table2", TwoRoom::H2);
    let counter2 = w.region("counter2", TwoRoom::H3);
    let counter1 = w.region("counter1", TwoRoom::K1);
    let shelf = w.region("shelf", TwoRoom::K3);
    w.door("kitchen_door", false);
    let plate = w.movable_at("plate", 0.2, 0.2, shelf, 0.0, 0.0);
    let salter = w.movable_at("salter", SALTER, SALTER, counter2, 0.0, 0.2);
    let bottle1 = w.movable_at("bottle1", BOTTLE, BOTTLE, table2, -0.3, 0.0);
    w.movable_at("bottle2", BOTTLE, BOTTLE, counter2, 0.0, 0.0);
    w.movable_at("bottle3", BOTTLE, BOTTLE, counter2, 0.0, -0.2);
    w.goal_on(plate, counter1).goal_on(salter, table2).goal(
        salter,
        Direction::RightOf,
        PlaceRef::Movable(bottle1),
    );
    w.build()
}

/// Temporary displacement of a goal object: the grill blocks the coke and
/// all three goal objects share a walled counter.
pub fn p5() -> ProblemInstance {
    let mut w = TwoRoom::new();
    w.name("p5_analog").time_budget(600.0);
    let counter1 = w.walled_region("counter1", TwoRoom::K1, Walls::U);
    let counter2 = w.region("counter2", TwoRoom::K2);
    let counter3 = w.region("counter3", TwoRoom::K3);
    let counter5 = w.region("counter5", TwoRoom::K4);
    w.door("kitchen_door", true);
    let coke = w.movable_at("coke", CAN, CAN, counter2, 0.0, 0.15);
    let sprite = w.movable_at("sprite", CAN, CAN, counter3, -0.2, 0.0);
    w.movable_at("mango_juice", BOTTLE, BOTTLE, counter5, 0.0, 0.15);
    w.movable_at("dr_pepper", CAN, CAN, counter5, 0.0, -0.1);
    w.movable_at("pork_grill", 0.25, 0.2, counter3, 0.2, 0.0);
    let beef_grill = w.movable_at("beef_grill", 0.25, 0.2, counter2, 0.0, -0.12);
    w.movable_at("wine", BOTTLE, BOTTLE, counter5, 0.35, 0.0);
    w.goal_on(coke, counter1)
        .goal_on(sprite, counter1)
        .goal_on(beef_grill, counter1);
    w.build()
}

/// Displacing an object already in place: the grill stands in front of
/// the walled goal counter.
pub fn p6() -> ProblemInstance {
    let mut w = TwoRoom::new();
    w.name("p6_analog").time_budget(600.0);
    let table1 = w.region("table1", TwoRoom::H1);
    let counter2 = w.walled_region("counter2", TwoRoom::K1, Walls::U);
    let counter3 = w.region("counter3", TwoRoom::K2);
    w.door("kitchen_door", false);
    let coke = w.movable_at("coke", CAN, CAN, counter3, 0.0, 0.1);
    let wine = w.movable_at("wine", BOTTLE, BOTTLE, table1, 0.1, 0.0);
    let beef_grill = w.movable_at("beef_grill", 0.25, 0.2, counter2, 0.0, -0.15);
    w.goal_on(coke, counter2)
        .goal_on(wine, counter2)
        .goal_on(beef_grill, counter2);
    w.build()
}

/// All bundled problems in order.
pub fn all() -> Vec<ProblemInstance> {
    vec![p1(), p2(), p3(), p4(), p5(), p6()]
}
