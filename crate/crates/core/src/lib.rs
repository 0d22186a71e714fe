//! Robot-carried permanent magnet toolkit.
//!
//! A 6-DoF serial arm holds a cylindrical permanent magnet and places it
//! around a sample point to synthesise a chosen vector magnetic field. The
//! crate covers the full pipeline:
//!
//! - [`kinematics`]: pose algebra, D-H forward kinematics, damped
//!   least-squares inverse kinematics.
//! - [`magnetostatics`]: dipole and closed-form hollow-cylinder fields, and the
//!   inverse dipole problem.
//! - [`environment`]: triangle meshes, capsule/box robot bodies, collision
//!   queries, and partitioning of pose dictionaries.
//! - [`alignment`]: sphere-segment scans, calibration fitting, amplitude
//!   scheduling, the similarity kernel, and forbidden-pose replacement.
//! - [`nvspin`]: NV-centre spin-1 Hamiltonian, characteristic cubic, ODMR
//!   synthesis and fitting, and NV-axis orientation fitting.
//!
//! Internal units are SI throughout (metres, radians, tesla, hertz).

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alignment;
pub mod config;
pub mod environment;
pub mod kinematics;
pub mod lsq;
pub mod magnetostatics;
pub mod nvspin;
pub mod seed;

pub use alignment::{AmplitudeSchedule, CalibrationResult, ReplacementPlan, ScanGrid, ScanPoint};
pub use environment::{PoseFeasibility, RobotBody, TriangleMesh};
pub use kinematics::{DhTable, JointConfig, Pose, UnitVector};
pub use magnetostatics::{DipoleMoment, FieldVector, MagnetSpec};
pub use nvspin::{NvParams, OrientationFit, ResonancePair};

/// 3-vector used for positions and displacements (metres).
pub type Vec3 = nalgebra::Vector3<f64>;
