use std::f64::consts::{PI, TAU};

use nalgebra::{Isometry3, Matrix3, Rotation3, Translation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::Vec3;

/// Wraps an angle into the half-open interval (-π, π]. An input of -π maps to +π.
pub fn normalize_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Tool centre point pose in the world frame.
///
/// Orientation angles are extrinsic rotations about the fixed world axes,
/// applied in the order x, then y, then z, so the rotation matrix is
/// `Rz(alpha_z) * Ry(alpha_y) * Rx(alpha_x)`. With this convention the pose
/// x-axis is [`unit_normal`]`(alpha_y, alpha_z)`, independent of `alpha_x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub alpha_z: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64, alpha_x: f64, alpha_y: f64, alpha_z: f64) -> Self {
        Self {
            x,
            y,
            z,
            alpha_x: normalize_angle(alpha_x),
            alpha_y: normalize_angle(alpha_y),
            alpha_z: normalize_angle(alpha_z),
        }
    }

    pub fn from_position_angles(position: Vec3, alpha_x: f64, alpha_y: f64, alpha_z: f64) -> Self {
        Self::new(
            position.x, position.y, position.z, alpha_x, alpha_y, alpha_z,
        )
    }

    /// Pose at `position` whose x-axis points along `axis` (roll fixed at zero).
    pub fn with_x_axis(position: Vec3, axis: &UnitVector) -> Self {
        let (alpha_y, alpha_z) = axis.angles();
        Self::from_position_angles(position, 0.0, alpha_y, alpha_z)
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_axis_angle(&Vec3::z_axis(), self.alpha_z)
            * Rotation3::from_axis_angle(&Vec3::y_axis(), self.alpha_y)
            * Rotation3::from_axis_angle(&Vec3::x_axis(), self.alpha_x)
    }

    pub fn x_axis(&self) -> UnitVector {
        UnitVector::from_vec_unchecked(self.rotation() * Vec3::x())
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::from(self.position()),
            UnitQuaternion::from_rotation_matrix(&self.rotation()),
        )
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        let (ax, ay, az) = euler_xyz_extrinsic(&iso.rotation.to_rotation_matrix().into_inner());
        let t = iso.translation.vector;
        Self::new(t.x, t.y, t.z, ax, ay, az)
    }

    /// Same orientation, position snapped to the nearest multiple of `resolution`.
    pub fn quantised(&self, resolution: f64) -> Self {
        let q = |v: f64| (v / resolution).round() * resolution;
        Self {
            x: q(self.x),
            y: q(self.y),
            z: q(self.z),
            ..*self
        }
    }

    /// Position distance (m) and rotation angle (rad) between two poses.
    pub fn distance_to(&self, other: &Pose) -> (f64, f64) {
        let dp = (self.position() - other.position()).norm();
        let q =
            UnitQuaternion::from_rotation_matrix(&(self.rotation().inverse() * other.rotation()));
        let dr = 2.0 * q.imag().norm().atan2(q.scalar().abs());
        (dp, dr)
    }
}

/// Extract (alpha_x, alpha_y, alpha_z) with `R = Rz * Ry * Rx`.
///
/// At gimbal lock (|alpha_y| = π/2) the roll is set to zero and the whole
/// residual rotation is assigned to alpha_z.
pub fn euler_xyz_extrinsic(r: &Matrix3<f64>) -> (f64, f64, f64) {
    let cb = (r[(0, 0)].powi(2) + r[(1, 0)].powi(2)).sqrt();
    let ay = (-r[(2, 0)]).atan2(cb);
    if cb > 1e-12 {
        let ax = r[(2, 1)].atan2(r[(2, 2)]);
        let az = r[(1, 0)].atan2(r[(0, 0)]);
        (ax, ay, az)
    } else {
        (0.0, ay, (-r[(0, 1)]).atan2(r[(1, 1)]))
    }
}

/// Unit-norm direction vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitVector {
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
}

impl UnitVector {
    /// Normalises `v`; `None` for a zero or non-finite vector.
    pub fn new(v: Vec3) -> Option<Self> {
        let n = v.norm();
        if n > 0.0 && n.is_finite() {
            Some(Self::from_vec_unchecked(v / n))
        } else {
            None
        }
    }

    fn from_vec_unchecked(v: Vec3) -> Self {
        Self {
            nx: v.x,
            ny: v.y,
            nz: v.z,
        }
    }

    pub fn as_vec(&self) -> Vec3 {
        Vec3::new(self.nx, self.ny, self.nz)
    }

    /// Inverse of [`unit_normal`]: the (alpha_y, alpha_z) that produce this direction.
    pub fn angles(&self) -> (f64, f64) {
        let alpha_y = (-self.nz).atan2((self.nx * self.nx + self.ny * self.ny).sqrt());
        let alpha_z = if self.nx == 0.0 && self.ny == 0.0 {
            0.0
        } else {
            self.ny.atan2(self.nx)
        };
        (alpha_y, alpha_z)
    }
}

/// World x-axis rotated by `alpha_y` about world y, then by `alpha_z` about world z.
pub fn unit_normal(alpha_y: f64, alpha_z: f64) -> UnitVector {
    let (sy, cy) = alpha_y.sin_cos();
    let (sz, cz) = alpha_z.sin_cos();
    UnitVector {
        nx: cz * cy,
        ny: sz * cy,
        nz: -sy,
    }
}

/// Magnet-centre pose that places the sample `standoff` metres along the
/// magnet's axis, with the axis pointing at the sample along `unit_normal(alpha_y, alpha_z)`.
pub fn magnet_pose_for_field_direction(
    sample: Vec3,
    alpha_y: f64,
    alpha_z: f64,
    standoff: f64,
) -> Pose {
    let n = unit_normal(alpha_y, alpha_z).as_vec();
    Pose::from_position_angles(sample - standoff * n, 0.0, alpha_y, alpha_z)
}
