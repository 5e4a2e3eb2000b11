//! On-disk problem format. Entities are referenced by name; the loader
//! resolves names to indices and validates the assembled instance.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use tamp_core::geom::{ConvexPolygon, Pose2, Vec2};
use tamp_core::world::{
    Conjunct, Direction, Door, Goal, Held, Movable, PlaceRef, ProblemInstance, Region, WorldError,
    WorldState,
};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("unknown entity `{name}` referenced in {context}")]
    UnknownEntity { name: String, context: String },
    #[error(transparent)]
    Invalid(#[from] WorldError),
}

fn default_horizon() -> usize {
    20
}

fn default_body_margin() -> f64 {
    0.03
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub name: String,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Seconds per trial.
    pub time_budget: f64,
    /// Workspace box `[[xmin, ymin], [xmax, ymax]]`.
    pub bounds: [[f64; 2]; 2],
    pub robot: RobotSpec,
    #[serde(default)]
    pub statics: Vec<ConvexPolygon>,
    pub movables: Vec<MovableSpec>,
    pub regions: Vec<RegionSpec>,
    #[serde(default)]
    pub doors: Vec<DoorSpec>,
    pub init: InitSpec,
    /// Conjuncts as `[subject, direction, reference]`.
    pub goal: Vec<[String; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub footprint: ConvexPolygon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovableSpec {
    pub name: String,
    pub footprint: ConvexPolygon,
    #[serde(default)]
    pub grasp_point: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub name: String,
    pub extent: ConvexPolygon,
    pub base_pose: Pose2,
    pub local_frame: Pose2,
    #[serde(default)]
    pub walls: Vec<ConvexPolygon>,
    #[serde(default = "default_body_margin")]
    pub body_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoorSpec {
    pub name: String,
    pub polygon: ConvexPolygon,
    pub base_pose: Pose2,
    pub handle: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub base: Pose2,
    /// Stable pose of every movable not held.
    pub poses: BTreeMap<String, Pose2>,
    #[serde(default)]
    pub open_doors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holding: Option<HeldSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeldSpec {
    pub object: String,
    #[serde(default)]
    pub relative_yaw: f64,
}

fn v2([x, y]: [f64; 2]) -> Vec2 {
    Vec2::new(x, y)
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<ProblemFile, LoadError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| LoadError::Schema {
            field: e.path().to_string(),
            message: e.into_inner().to_string(),
        })
    }

    /// Pretty JSON with numeric arrays (points, poses) kept on one line.
    pub fn to_json(&self) -> String {
        collapse_number_arrays(
            &serde_json::to_string_pretty(self).expect("problem files always serialize"),
        )
    }

    /// Resolves names and validates the instance.
    pub fn into_instance(self) -> Result<ProblemInstance, LoadError> {
        let movables: Vec<Movable> = self
            .movables
            .iter()
            .map(|m| Movable {
                name: m.name.clone(),
                footprint: m.footprint.clone(),
                grasp_point: v2(m.grasp_point),
            })
            .collect();
        let regions: Vec<Region> = self
            .regions
            .iter()
            .map(|r| Region {
                name: r.name.clone(),
                extent: r.extent.clone(),
                base_pose: r.base_pose,
                local_frame: r.local_frame,
                walls: r.walls.clone(),
                body_margin: r.body_margin,
            })
            .collect();
        let doors: Vec<Door> = self
            .doors
            .iter()
            .map(|d| Door {
                name: d.name.clone(),
                closed_polygon: d.polygon.clone(),
                base_pose: d.base_pose,
                handle_point: v2(d.handle),
            })
            .collect();
        let unknown = |name: &str, context: &str| LoadError::UnknownEntity {
            name: name.to_string(),
            context: context.to_string(),
        };
        let movable_index = |name: &str, context: &str| {
            movables
                .iter()
                .position(|m| m.name == name)
                .ok_or_else(|| unknown(name, context))
        };

        let mut poses = vec![None; movables.len()];
        for (name, pose) in &self.init.poses {
            poses[movable_index(name, "init.poses")?] = Some(*pose);
        }
        let mut door_open = vec![false; doors.len()];
        for name in &self.init.open_doors {
            let d = doors
                .iter()
                .position(|d| &d.name == name)
                .ok_or_else(|| unknown(name, "init.open_doors"))?;
            door_open[d] = true;
        }
        let holding = match &self.init.holding {
            Some(h) => Some(Held {
                object: movable_index(&h.object, "init.holding")?,
                relative_yaw: h.relative_yaw,
            }),
            None => None,
        };

        let mut conjuncts = Vec::new();
        for (i, [subject, dir, reference]) in self.goal.iter().enumerate() {
            let context = format!("goal[{i}]");
            let subject = movable_index(subject, &context)?;
            let dir = Direction::from_token(dir).ok_or_else(|| LoadError::Schema {
                field: format!("goal[{i}][1]"),
                message: format!("unknown direction `{dir}`"),
            })?;
            let reference = if let Some(r) = regions.iter().position(|r| &r.name == reference) {
                PlaceRef::Region(r)
            } else {
                PlaceRef::Movable(movable_index(reference, &context)?)
            };
            conjuncts.push(Conjunct {
                subject,
                dir,
                reference,
            });
        }

        let robot_footprint = self.robot.footprint;
        Ok(ProblemInstance {
            name: self.name,
            movables,
            regions,
            doors,
            static_walls: self.statics,
            robot_footprint,
            bounds: [v2(self.bounds[0]), v2(self.bounds[1])],
            s0: WorldState {
                poses,
                door_open,
                base: self.init.base,
                holding,
                failed: false,
            },
            goal: Goal::new(conjuncts)?,
            horizon: self.horizon,
            time_budget: self.time_budget,
        }
        .validated()?)
    }

    /// Inverse of [`ProblemFile::into_instance`].
    pub fn from_instance(p: &ProblemInstance) -> ProblemFile {
        let xy = |v: Vec2| [v.x, v.y];
        ProblemFile {
            name: p.name.clone(),
            horizon: p.horizon,
            time_budget: p.time_budget,
            bounds: [xy(p.bounds[0]), xy(p.bounds[1])],
            robot: RobotSpec {
                footprint: p.robot_footprint.clone(),
            },
            statics: p.static_walls.clone(),
            movables: p
                .movables
                .iter()
                .map(|m| MovableSpec {
                    name: m.name.clone(),
                    footprint: m.footprint.clone(),
                    grasp_point: xy(m.grasp_point),
                })
                .collect(),
            regions: p
                .regions
                .iter()
                .map(|r| RegionSpec {
                    name: r.name.clone(),
                    extent: r.extent.clone(),
                    base_pose: r.base_pose,
                    local_frame: r.local_frame,
                    walls: r.walls.clone(),
                    body_margin: r.body_margin,
                })
                .collect(),
            doors: p
                .doors
                .iter()
                .map(|d| DoorSpec {
                    name: d.name.clone(),
                    polygon: d.closed_polygon.clone(),
                    base_pose: d.base_pose,
                    handle: xy(d.handle_point),
                })
                .collect(),
            init: InitSpec {
                base: p.s0.base,
                poses: p
                    .s0
                    .poses
                    .iter()
                    .enumerate()
                    .filter_map(|(i, pose)| pose.map(|pose| (p.movables[i].name.clone(), pose)))
                    .collect(),
                open_doors: p
                    .doors
                    .iter()
                    .zip(&p.s0.door_open)
                    .filter(|(_, &open)| open)
                    .map(|(d, _)| d.name.clone())
                    .collect(),
                holding: p.s0.holding.map(|h| HeldSpec {
                    object: p.movables[h.object].name.clone(),
                    relative_yaw: h.relative_yaw,
                }),
            },
            goal: p
                .goal
                .conjuncts
                .iter()
                .map(|c| {
                    [
                        p.movables[c.subject].name.clone(),
                        c.dir.token().to_string(),
                        p.name_of(c.reference.entity()).to_string(),
                    ]
                })
                .collect(),
        }
    }
}

fn collapse_number_arrays(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('[') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find(']');
        let inner = close.map(|c| &after[..c]);
        match inner {
            Some(inner)
                if !inner.trim().is_empty()
                    && inner.chars().all(|c| {
                        c.is_ascii_digit() || c.is_whitespace() || "-+.,eE".contains(c)
                    }) =>
            {
                let items: Vec<&str> = inner.split(',').map(str::trim).collect();
                out.push('[');
                out.push_str(&items.join(", "));
                out.push(']');
                rest = &after[inner.len() + 1..];
            }
            _ => {
                out.push('[');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Reads, parses and validates a problem file.
pub fn load_problem(path: impl AsRef<Path>) -> Result<ProblemInstance, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ProblemFile::from_json(&text)?.into_instance()
}
