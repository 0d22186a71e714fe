//! Pose algebra and kinematics of a 6-DoF serial arm carrying a magnet tool.
//!
//! Euler convention: extrinsic rotations about the fixed world axes in the
//! order x, y, z. A pose's x-axis is therefore `unit_normal(alpha_y, alpha_z)`
//! and roll (`alpha_x`) spins the axially symmetric magnet about itself.

mod dh;
mod ik;
mod pose;

pub use dh::{forward_kinematics, DhRow, DhTable, JointConfig, JOINT_COUNT};
pub use ik::{inverse_kinematics, inverse_kinematics_with, IkOptions};
pub use pose::{
    euler_xyz_extrinsic, magnet_pose_for_field_direction, normalize_angle, unit_normal, Pose,
    UnitVector,
};

/// Default linear resolution of the arm when emulating achievable positions (m).
pub const DEFAULT_POSE_RESOLUTION: f64 = 0.5e-3;

#[derive(Debug, thiserror::Error)]
pub enum KinematicsError {
    #[error("joint {joint} at {value} rad outside limits [{min}, {max}]")]
    JointLimit {
        joint: usize,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("inverse kinematics found no solution")]
    NoSolution,
    #[error("D-H configuration: {0}")]
    Config(String),
}
