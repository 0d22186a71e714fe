use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use nalgebra::{Isometry3, Matrix3, Rotation3, Translation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::{KinematicsError, Pose};
use crate::Vec3;

pub const JOINT_COUNT: usize = 6;

/// Joint angles (rad), one per revolute joint, base first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointConfig(pub [f64; JOINT_COUNT]);

impl JointConfig {
    pub const HOME: JointConfig = JointConfig([0.0; JOINT_COUNT]);

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Largest per-joint absolute difference.
    pub fn max_abs_diff(&self, other: &JointConfig) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Joint-space linear interpolation, `t` in [0, 1].
    pub fn lerp(&self, other: &JointConfig, t: f64) -> JointConfig {
        let mut q = [0.0; JOINT_COUNT];
        for (i, qi) in q.iter_mut().enumerate() {
            *qi = self.0[i] + t * (other.0[i] - self.0[i]);
        }
        JointConfig(q)
    }
}

/// One standard Denavit-Hartenberg row plus the joint's travel limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DhRow {
    pub a_m: f64,
    pub alpha_rad: f64,
    pub d_m: f64,
    pub theta_offset_rad: f64,
    pub q_min_rad: f64,
    pub q_max_rad: f64,
}

impl DhRow {
    /// `Rz(q + theta_offset) * Tz(d) * Tx(a) * Rx(alpha)`
    pub fn transform(&self, q: f64) -> Isometry3<f64> {
        let theta = q + self.theta_offset_rad;
        let rot_z = UnitQuaternion::from_axis_angle(&Vec3::z_axis(), theta);
        let rot_x = UnitQuaternion::from_axis_angle(&Vec3::x_axis(), self.alpha_rad);
        Isometry3::from_parts(Translation3::new(0.0, 0.0, self.d_m), rot_z)
            * Isometry3::from_parts(Translation3::new(self.a_m, 0.0, 0.0), rot_x)
    }
}

/// Kinematic description of the arm and its magnet tool.
///
/// The end-effector frame relabels the last D-H frame so that its x-axis is
/// the flange normal (D-H z6); the TCP sits `tool_offset_m` further along
/// that x-axis. The magnet's magnetisation axis is the TCP x-axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DhTable {
    pub joints: [DhRow; JOINT_COUNT],
    pub tool_offset_m: f64,
}

/// Columns: end-effector x = flange z, y = flange x, z = flange y.
fn flange_to_end_effector() -> Rotation3<f64> {
    Rotation3::from_matrix_unchecked(Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0))
}

impl DhTable {
    /// Nominal 6-joint table with link lengths resembling a small desktop
    /// arm. These are placeholder values, not vendor data.
    pub fn nominal() -> Self {
        let row = |a_m, alpha_rad, d_m, theta_offset_rad, lim: (f64, f64)| DhRow {
            a_m,
            alpha_rad,
            d_m,
            theta_offset_rad,
            q_min_rad: lim.0,
            q_max_rad: lim.1,
        };
        DhTable {
            joints: [
                row(0.0, -FRAC_PI_2, 0.1715, 0.0, (-2.949, 2.949)),
                row(0.221, 0.0, 0.0, -FRAC_PI_2, (-1.83, 1.83)),
                row(0.0325, -FRAC_PI_2, 0.0, 0.0, (-1.90, 1.90)),
                row(0.0, FRAC_PI_2, 0.235, 0.0, (-2.949, 2.949)),
                row(0.0, -FRAC_PI_2, 0.0, 0.0, (-2.09, 2.09)),
                row(0.0, 0.0, 0.0237, 0.0, (-2.949, 2.949)),
            ],
            tool_offset_m: 0.05,
        }
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !(self.tool_offset_m >= 0.0) {
            return Err(KinematicsError::Config("tool_offset_m must be >= 0".into()));
        }
        for (i, r) in self.joints.iter().enumerate() {
            let vals = [
                r.a_m,
                r.alpha_rad,
                r.d_m,
                r.theta_offset_rad,
                r.q_min_rad,
                r.q_max_rad,
            ];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(KinematicsError::Config(format!(
                    "joint {}: non-finite value",
                    i + 1
                )));
            }
            if r.q_min_rad > r.q_max_rad {
                return Err(KinematicsError::Config(format!(
                    "joint {}: q_min_rad > q_max_rad",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn check_limits(&self, joints: &JointConfig) -> Result<(), KinematicsError> {
        for (i, (q, r)) in joints.0.iter().zip(self.joints.iter()).enumerate() {
            if !(*q >= r.q_min_rad - 1e-12 && *q <= r.q_max_rad + 1e-12) {
                return Err(KinematicsError::JointLimit {
                    joint: i + 1,
                    value: *q,
                    min: r.q_min_rad,
                    max: r.q_max_rad,
                });
            }
        }
        Ok(())
    }

    pub fn clamp(&self, joints: &JointConfig) -> JointConfig {
        let mut q = joints.0;
        for (qi, r) in q.iter_mut().zip(self.joints.iter()) {
            *qi = qi.clamp(r.q_min_rad, r.q_max_rad);
        }
        JointConfig(q)
    }

    /// World transforms of frame 0 (base), D-H frames 1..=6, and the TCP (index 7).
    /// Joint limits are not checked.
    pub fn frames(&self, joints: &JointConfig) -> [Isometry3<f64>; JOINT_COUNT + 2] {
        let mut out = [Isometry3::identity(); JOINT_COUNT + 2];
        let mut t = Isometry3::identity();
        for i in 0..JOINT_COUNT {
            t *= self.joints[i].transform(joints.0[i]);
            out[i + 1] = t;
        }
        let ee = Isometry3::from_parts(
            Translation3::identity(),
            UnitQuaternion::from_rotation_matrix(&flange_to_end_effector()),
        );
        out[JOINT_COUNT + 1] = t * ee * Isometry3::translation(self.tool_offset_m, 0.0, 0.0);
        out
    }

    pub fn tcp_isometry(&self, joints: &JointConfig) -> Isometry3<f64> {
        self.frames(joints)[JOINT_COUNT + 1]
    }

    /// Crude upper bound on the distance from the base origin to any TCP position.
    pub fn reach_bound(&self) -> f64 {
        self.joints
            .iter()
            .map(|r| r.a_m.abs() + r.d_m.abs())
            .sum::<f64>()
            + self.tool_offset_m
    }

    pub fn home(&self) -> JointConfig {
        self.clamp(&JointConfig::HOME)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, KinematicsError> {
        let value: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| KinematicsError::Config(e.to_string()))?;
        Self::from_toml_table(&value)
    }

    pub fn load(path: &Path) -> Result<Self, KinematicsError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| KinematicsError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Parses `tool_offset_m` and exactly six `[[joint]]` tables. Errors name
    /// the offending joint (1-based) and field.
    pub fn from_toml_table(table: &toml::Table) -> Result<Self, KinematicsError> {
        let number = |v: &toml::Value| v.as_float().or_else(|| v.as_integer().map(|i| i as f64));
        let tool_offset_m = table
            .get("tool_offset_m")
            .ok_or_else(|| KinematicsError::Config("missing field tool_offset_m".into()))
            .and_then(|v| {
                number(v).ok_or_else(|| {
                    KinematicsError::Config("tool_offset_m: expected a number".into())
                })
            })?;
        let rows = table
            .get("joint")
            .and_then(|v| v.as_array())
            .ok_or_else(|| KinematicsError::Config("missing [[joint]] array".into()))?;
        if rows.len() != JOINT_COUNT {
            return Err(KinematicsError::Config(format!(
                "expected {JOINT_COUNT} [[joint]] rows, found {}",
                rows.len()
            )));
        }
        let mut joints = [DhRow {
            a_m: 0.0,
            alpha_rad: 0.0,
            d_m: 0.0,
            theta_offset_rad: 0.0,
            q_min_rad: 0.0,
            q_max_rad: 0.0,
        }; JOINT_COUNT];
        for (i, row) in rows.iter().enumerate() {
            let t = row.as_table().ok_or_else(|| {
                KinematicsError::Config(format!("joint {}: expected a table", i + 1))
            })?;
            let field = |name: &str| -> Result<f64, KinematicsError> {
                let v = t.get(name).ok_or_else(|| {
                    KinematicsError::Config(format!("joint {}: missing field {name}", i + 1))
                })?;
                number(v).ok_or_else(|| {
                    KinematicsError::Config(format!(
                        "joint {}: field {name}: expected a number",
                        i + 1
                    ))
                })
            };
            joints[i] = DhRow {
                a_m: field("a_m")?,
                alpha_rad: field("alpha_rad")?,
                d_m: field("d_m")?,
                theta_offset_rad: field("theta_offset_rad")?,
                q_min_rad: field("q_min_rad")?,
                q_max_rad: field("q_max_rad")?,
            };
        }
        let dh = DhTable {
            joints,
            tool_offset_m,
        };
        dh.validate()?;
        Ok(dh)
    }

    pub fn to_toml_string(&self) -> String {
        let mut s = format!("tool_offset_m = {:?}\n", self.tool_offset_m);
        for r in &self.joints {
            s.push_str(&format!(
                "\n[[joint]]\na_m = {:?}\nalpha_rad = {:?}\nd_m = {:?}\ntheta_offset_rad = {:?}\nq_min_rad = {:?}\nq_max_rad = {:?}\n",
                r.a_m, r.alpha_rad, r.d_m, r.theta_offset_rad, r.q_min_rad, r.q_max_rad
            ));
        }
        s
    }
}

/// TCP pose for a joint configuration. Fails on a joint-limit violation.
pub fn forward_kinematics(dh: &DhTable, joints: &JointConfig) -> Result<Pose, KinematicsError> {
    dh.check_limits(joints)?;
    Ok(Pose::from_isometry(&dh.tcp_isometry(joints)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let dh = DhTable::nominal();
        let back = DhTable::from_toml_str(&dh.to_toml_string()).unwrap();
        assert_eq!(dh, back);
    }

    #[test]
    fn parse_error_names_row_and_field() {
        let text = DhTable::nominal()
            .to_toml_string()
            .replacen("d_m = 0.235", "d_x = 0.235", 1);
        let err = DhTable::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("joint 4") && err.contains("d_m"), "{err}");

        let text = DhTable::nominal().to_toml_string().replacen(
            "alpha_rad = 0.0",
            "alpha_rad = \"zero\"",
            1,
        );
        let err = DhTable::from_toml_str(&text).unwrap_err().to_string();
        assert!(
            err.contains("joint 2") && err.contains("alpha_rad"),
            "{err}"
        );
    }

    #[test]
    fn wrong_row_count_rejected() {
        let mut text = DhTable::nominal().to_toml_string();
        let cut = text.rfind("[[joint]]").unwrap();
        text.truncate(cut);
        assert!(DhTable::from_toml_str(&text).is_err());
    }

    #[test]
    fn negative_tool_offset_rejected() {
        let text = DhTable::nominal().to_toml_string().replacen(
            "tool_offset_m = 0.05",
            "tool_offset_m = -0.01",
            1,
        );
        assert!(DhTable::from_toml_str(&text).is_err());
    }

    #[test]
    fn limit_violation_is_error() {
        let dh = DhTable::nominal();
        let mut q = JointConfig::HOME;
        q.0[1] = 3.0;
        assert!(matches!(
            forward_kinematics(&dh, &q),
            Err(KinematicsError::JointLimit { joint: 2, .. })
        ));
    }

    #[test]
    fn base_rotation_rotates_tcp_about_z() {
        let dh = DhTable::nominal();
        let q0 = JointConfig([0.0, 0.3, -0.4, 0.2, 0.5, 0.1]);
        let mut q1 = q0;
        let delta = 0.7;
        q1.0[0] += delta;
        let p0 = forward_kinematics(&dh, &q0).unwrap().position();
        let p1 = forward_kinematics(&dh, &q1).unwrap().position();
        let rotated = Rotation3::from_axis_angle(&Vec3::z_axis(), delta) * p0;
        assert!((rotated - p1).norm() < 1e-12);
    }

    #[test]
    fn lerp_endpoints() {
        let a = JointConfig([0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let b = JointConfig([-0.1; 6]);
        assert_eq!(a.lerp(&b, 0.0), a);
        assert!(a.lerp(&b, 1.0).max_abs_diff(&b) < 1e-15);
    }
}
