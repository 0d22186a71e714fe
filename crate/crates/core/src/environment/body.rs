use nalgebra::{Isometry3, Rotation3};
use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::kinematics::{DhTable, JointConfig, JOINT_COUNT};
use crate::Vec3;

/// Index of the TCP frame in `DhTable::frames`.
pub const TOOL_FRAME: usize = JOINT_COUNT + 1;

/// Convex collision shape in the coordinates of its parent frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    /// Segment `a`–`b` swept by a sphere of `radius_m`. `a == b` gives a sphere.
    Capsule {
        a_m: [f64; 3],
        b_m: [f64; 3],
        radius_m: f64,
    },
    /// Box aligned with the parent frame axes.
    Box {
        center_m: [f64; 3],
        half_extents_m: [f64; 3],
    },
}

impl Shape {
    /// Hull vertices in the parent frame and the sweep radius.
    fn local_hull(&self) -> (Vec<Vec3>, f64) {
        match *self {
            Shape::Capsule { a_m, b_m, radius_m } => {
                (vec![Vec3::from(a_m), Vec3::from(b_m)], radius_m)
            }
            Shape::Box {
                center_m,
                half_extents_m,
            } => {
                let c = Vec3::from(center_m);
                let h = Vec3::from(half_extents_m);
                let corners = (0..8)
                    .map(|i| {
                        c + Vec3::new(
                            if i & 1 == 0 { -h.x } else { h.x },
                            if i & 2 == 0 { -h.y } else { h.y },
                            if i & 4 == 0 { -h.z } else { h.z },
                        )
                    })
                    .collect();
                (corners, 0.0)
            }
        }
    }

    fn validate(&self) -> Result<(), String> {
        match *self {
            Shape::Capsule { a_m, b_m, radius_m } => {
                if a_m.iter().chain(b_m.iter()).any(|v| !v.is_finite()) {
                    return Err("capsule endpoints must be finite".into());
                }
                if !(radius_m > 0.0 && radius_m.is_finite()) {
                    return Err("capsule radius must be > 0".into());
                }
            }
            Shape::Box {
                center_m,
                half_extents_m,
            } => {
                if center_m.iter().any(|v| !v.is_finite()) {
                    return Err("box centre must be finite".into());
                }
                if half_extents_m.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err("box half extents must be > 0".into());
                }
            }
        }
        Ok(())
    }

    /// Same shape with every dimension reduced by `margin`.
    fn shrunk(&self, margin: f64) -> Shape {
        match *self {
            Shape::Capsule { a_m, b_m, radius_m } => Shape::Capsule {
                a_m,
                b_m,
                radius_m: radius_m - margin,
            },
            Shape::Box {
                center_m,
                half_extents_m,
            } => Shape::Box {
                center_m,
                half_extents_m: half_extents_m.map(|h| h - margin),
            },
        }
    }
}

/// A shape rigidly attached to frame `frame` (0 = base, 1..=6 = D-H frames,
/// 7 = TCP).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub frame: usize,
    #[serde(flatten)]
    pub shape: Shape,
}

/// World-frame hull of one primitive.
#[derive(Clone, Debug)]
pub struct WorldHull {
    pub points: Vec<Vec3>,
    pub radius: f64,
    /// Point guaranteed to lie inside the primitive.
    pub reference: Vec3,
}

/// Conservative collision geometry of the arm and magnet tool. Arm
/// self-collision is not modelled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotBody {
    pub primitives: Vec<Primitive>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BodyToml {
    link_radius_m: Option<f64>,
    tool_radius_m: Option<f64>,
    tool_length_m: Option<f64>,
    primitive: Option<Vec<Primitive>>,
}

impl RobotBody {
    pub const DEFAULT_LINK_RADIUS: f64 = 0.03;
    pub const DEFAULT_TOOL_RADIUS: f64 = 0.012;
    pub const DEFAULT_TOOL_LENGTH: f64 = 0.02;

    pub fn new(primitives: Vec<Primitive>) -> Result<Self, EnvError> {
        let body = Self { primitives };
        body.validate()?;
        Ok(body)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.primitives.is_empty() {
            return Err(EnvError::InvalidBody("no primitives".into()));
        }
        for (i, p) in self.primitives.iter().enumerate() {
            if p.frame > TOOL_FRAME {
                return Err(EnvError::InvalidBody(format!(
                    "primitive {i}: frame {} > {TOOL_FRAME}",
                    p.frame
                )));
            }
            p.shape
                .validate()
                .map_err(|m| EnvError::InvalidBody(format!("primitive {i}: {m}")))?;
        }
        if !self.primitives.iter().any(|p| p.frame == TOOL_FRAME) {
            return Err(EnvError::InvalidBody(
                "no primitive on the tool frame".into(),
            ));
        }
        Ok(())
    }

    /// One capsule per link joining successive frame origins, plus a tool
    /// capsule from the flange to the far end of the magnet
    /// (`tool_length` beyond the TCP along the magnet axis).
    ///
    /// The origin of frame i−1 seen from frame i is `Rx(−α)·(−a, 0, −d)`,
    /// independent of the joint angle, so each capsule is fixed in frame i.
    pub fn from_dh(
        dh: &DhTable,
        link_radius: f64,
        tool_radius: f64,
        tool_length: f64,
    ) -> Result<Self, EnvError> {
        let mut primitives = Vec::with_capacity(JOINT_COUNT + 1);
        for (i, row) in dh.joints.iter().enumerate() {
            let prev = Rotation3::from_axis_angle(&Vec3::x_axis(), -row.alpha_rad)
                * Vec3::new(-row.a_m, 0.0, -row.d_m);
            primitives.push(Primitive {
                frame: i + 1,
                shape: Shape::Capsule {
                    a_m: prev.into(),
                    b_m: [0.0; 3],
                    radius_m: link_radius,
                },
            });
        }
        primitives.push(Primitive {
            frame: TOOL_FRAME,
            shape: Shape::Capsule {
                a_m: [-dh.tool_offset_m, 0.0, 0.0],
                b_m: [tool_length, 0.0, 0.0],
                radius_m: tool_radius,
            },
        });
        Self::new(primitives)
    }

    pub fn nominal(dh: &DhTable) -> Self {
        Self::from_dh(
            dh,
            Self::DEFAULT_LINK_RADIUS,
            Self::DEFAULT_TOOL_RADIUS,
            Self::DEFAULT_TOOL_LENGTH,
        )
        .expect("nominal dimensions are positive")
    }

    /// Reads an optional `[body]` table: either explicit `[[body.primitive]]`
    /// entries or the radii for `from_dh`. A missing table gives `nominal`.
    pub fn from_toml_table(table: &toml::Table, dh: &DhTable) -> Result<Self, EnvError> {
        let Some(v) = table.get("body") else {
            return Ok(Self::nominal(dh));
        };
        let cfg: BodyToml = v
            .clone()
            .try_into()
            .map_err(|e: toml::de::Error| EnvError::InvalidBody(e.to_string()))?;
        if let Some(prims) = cfg.primitive {
            return Self::new(prims);
        }
        Self::from_dh(
            dh,
            cfg.link_radius_m.unwrap_or(Self::DEFAULT_LINK_RADIUS),
            cfg.tool_radius_m.unwrap_or(Self::DEFAULT_TOOL_RADIUS),
            cfg.tool_length_m.unwrap_or(Self::DEFAULT_TOOL_LENGTH),
        )
    }

    /// Every primitive reduced by `margin`; fails if a dimension would vanish.
    pub fn shrunk(&self, margin: f64) -> Result<Self, EnvError> {
        Self::new(
            self.primitives
                .iter()
                .map(|p| Primitive {
                    frame: p.frame,
                    shape: p.shape.shrunk(margin),
                })
                .collect(),
        )
    }

    pub fn world_hulls(&self, dh: &DhTable, joints: &JointConfig) -> Vec<WorldHull> {
        let frames = dh.frames(joints);
        self.primitives
            .iter()
            .map(|p| hull_in(&frames[p.frame], &p.shape))
            .collect()
    }
}

fn hull_in(frame: &Isometry3<f64>, shape: &Shape) -> WorldHull {
    let (local, radius) = shape.local_hull();
    let points: Vec<Vec3> = local
        .iter()
        .map(|v| frame.transform_point(&(*v).into()).coords)
        .collect();
    let reference = points.iter().sum::<Vec3>() / points.len() as f64;
    WorldHull {
        points,
        radius,
        reference,
    }
}
