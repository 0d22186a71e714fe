//! Environment meshes, robot collision geometry, and pose feasibility.
//!
//! Collision queries use an axis-aligned bounding-box tree over all
//! environment triangles (broad phase) and GJK hull distances between robot
//! primitives and individual triangles (narrow phase). Primitives whose
//! interior point lies inside a closed environment mesh count as colliding
//! even when no surface is crossed.

mod body;
mod bvh;
mod gjk;
mod mesh;

use std::path::Path;

use nalgebra::{Isometry3, Translation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::kinematics::{inverse_kinematics, DhTable, JointConfig, Pose};
use crate::Vec3;

pub use body::{Primitive, RobotBody, Shape, WorldHull, TOOL_FRAME};
pub use bvh::{Aabb, Bvh};
pub use gjk::hull_distance;
pub use mesh::{
    box_mesh, load_mesh, parse_off, parse_stl, to_off_string, TriangleMesh, MIN_TRIANGLE_AREA,
};

/// Default joint-space interpolation step for path checks (rad).
pub const DEFAULT_PATH_STEP: f64 = 0.01;

/// Upper bound on interpolation samples per path.
const MAX_PATH_SAMPLES: usize = 1 << 20;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EnvError {
    #[error("{0}")]
    Io(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("invalid robot body: {0}")]
    InvalidBody(String),
    #[error("environment manifest: {0}")]
    Manifest(String),
    #[error("path endpoint is in collision")]
    EndpointInCollision,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Static collision scene. The bounding-volume tree is built once.
#[derive(Clone, Debug, Default)]
pub struct Environment {
    meshes: Vec<TriangleMesh>,
    closed: Vec<bool>,
    bvh: Bvh,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestToml {
    #[serde(default)]
    mesh: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    path: String,
    #[serde(default)]
    translation_m: [f64; 3],
    /// Extrinsic x-y-z angles, same convention as `Pose`.
    #[serde(default)]
    rotation_rad: [f64; 3],
}

impl Environment {
    pub fn new(meshes: Vec<TriangleMesh>) -> Self {
        let closed = meshes.iter().map(|m| m.is_closed()).collect();
        let soup = meshes
            .iter()
            .flat_map(|m| (0..m.triangles.len()).map(move |k| m.triangle(k)))
            .collect();
        Self {
            meshes,
            closed,
            bvh: Bvh::build(soup),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn meshes(&self) -> &[TriangleMesh] {
        &self.meshes
    }

    pub fn is_empty(&self) -> bool {
        self.bvh.is_empty()
    }

    pub fn triangle_count(&self) -> usize {
        self.bvh.triangle_count()
    }

    /// TOML manifest of `[[mesh]]` entries with `path` (relative to
    /// `base_dir`), optional `translation_m` and `rotation_rad`.
    pub fn from_manifest_str(text: &str, base_dir: &Path) -> Result<Self, EnvError> {
        let m: ManifestToml =
            toml::from_str(text).map_err(|e| EnvError::Manifest(e.to_string()))?;
        let mut meshes = Vec::with_capacity(m.mesh.len());
        for e in m.mesh {
            let mesh = load_mesh(&base_dir.join(&e.path))?;
            let [x, y, z] = e.translation_m;
            let [ax, ay, az] = e.rotation_rad;
            let rot = Pose::new(0.0, 0.0, 0.0, ax, ay, az).rotation();
            let iso = Isometry3::from_parts(
                Translation3::new(x, y, z),
                UnitQuaternion::from_rotation_matrix(&rot),
            );
            meshes.push(mesh.transformed(&iso));
        }
        Ok(Self::new(meshes))
    }

    pub fn load_manifest(path: &Path) -> Result<Self, EnvError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EnvError::Io(format!("{}: {e}", path.display())))?;
        Self::from_manifest_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn encloses(&self, p: Vec3) -> bool {
        self.meshes
            .iter()
            .zip(&self.closed)
            .any(|(m, &c)| c && m.contains(p))
    }

    /// Distance (≥ 0) from one world hull to the scene, `None` when empty.
    pub fn hull_distance(&self, hull: &WorldHull) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        if self.encloses(hull.reference) {
            return Some(0.0);
        }
        self.bvh.min_distance(&hull.points, hull.radius)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub clear: bool,
    /// Smallest primitive-to-mesh distance (m), 0 when colliding; `None`
    /// (infinite) for an empty environment.
    pub min_distance: Option<f64>,
}

pub fn check_collision(
    body: &RobotBody,
    dh: &DhTable,
    joints: &JointConfig,
    env: &Environment,
) -> CollisionReport {
    if env.is_empty() {
        return CollisionReport {
            clear: true,
            min_distance: None,
        };
    }
    let mut best = f64::INFINITY;
    for hull in body.world_hulls(dh, joints) {
        if let Some(d) = env.hull_distance(&hull) {
            best = best.min(d);
        }
        if best <= 0.0 {
            break;
        }
    }
    CollisionReport {
        clear: best > 0.0,
        min_distance: Some(best),
    }
}

/// Number of interpolation intervals: the smallest power of two whose step
/// does not exceed `step`. Powers of two make a halved step sample a
/// superset of the coarser configurations.
fn path_intervals(max_delta: f64, step: f64) -> usize {
    let ratio = max_delta / step;
    if !(ratio > 1.0) {
        return 1;
    }
    let k = ratio.log2().ceil() as u32;
    (1usize << k.min(20)).min(MAX_PATH_SAMPLES)
}

/// True iff every joint-space linear interpolant between the endpoints,
/// sampled with per-joint increments no larger than `step`, is collision-free.
pub fn path_feasible(
    body: &RobotBody,
    dh: &DhTable,
    start: &JointConfig,
    end: &JointConfig,
    env: &Environment,
    step: f64,
) -> Result<bool, EnvError> {
    if !(step > 0.0) {
        return Err(EnvError::InvalidArgument("step must be > 0".into()));
    }
    if !check_collision(body, dh, start, env).clear || !check_collision(body, dh, end, env).clear {
        return Err(EnvError::EndpointInCollision);
    }
    let n = path_intervals(start.max_abs_diff(end), step);
    for i in 1..n {
        let q = start.lerp(end, i as f64 / n as f64);
        if !check_collision(body, dh, &q, env).clear {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeasibilityStatus {
    Reachable,
    IkFailure,
    Collision,
}

impl FeasibilityStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeasibilityStatus::Reachable => "Reachable",
            FeasibilityStatus::IkFailure => "IkFailure",
            FeasibilityStatus::Collision => "Collision",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseFeasibility {
    pub pose: Pose,
    /// Present iff IK succeeded.
    pub joints: Option<JointConfig>,
    pub status: FeasibilityStatus,
    pub min_distance: Option<f64>,
}

/// IK then collision check for one pose.
pub fn classify_pose(
    pose: &Pose,
    dh: &DhTable,
    body: &RobotBody,
    env: &Environment,
    seed: &JointConfig,
) -> PoseFeasibility {
    match inverse_kinematics(dh, pose, seed) {
        Err(_) => PoseFeasibility {
            pose: *pose,
            joints: None,
            status: FeasibilityStatus::IkFailure,
            min_distance: None,
        },
        Ok(q) => {
            let rep = check_collision(body, dh, &q, env);
            let status = if rep.clear {
                FeasibilityStatus::Reachable
            } else {
                FeasibilityStatus::Collision
            };
            PoseFeasibility {
                pose: *pose,
                joints: Some(q),
                status,
                min_distance: rep.min_distance,
            }
        }
    }
}

/// Classifies every pose in order. Each IK starts from the previous pose's
/// solution when there is one, else from `seed`, so the result depends only
/// on the inputs.
pub fn partition_pose_dictionary(
    poses: &[Pose],
    dh: &DhTable,
    body: &RobotBody,
    env: &Environment,
    seed: &JointConfig,
) -> Vec<PoseFeasibility> {
    let mut current = dh.clamp(seed);
    poses
        .iter()
        .map(|p| {
            let r = classify_pose(p, dh, body, env, &current);
            if let Some(q) = r.joints {
                current = q;
            }
            r
        })
        .collect()
}
