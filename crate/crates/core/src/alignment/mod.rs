//! Field-generation algorithms built on the kinematic and magnetic models:
//! sphere-segment scans, calibration of pose offsets, 1/r³ amplitude
//! schedules, the similarity kernel, and replacement of forbidden poses.

mod calibration;
mod replacement;
mod scan;
mod schedule;

use crate::kinematics::UnitVector;
use crate::magnetostatics::{FieldError, FieldVector};

pub use calibration::{
    calibrate_offsets, synthetic_arc, CalibrationGeometry, CalibrationMeasurement,
    CalibrationResult,
};
pub use replacement::{
    replace_forbidden_pose, transverse_sweep, DisplacementAxis, ReplacementOptions,
    ReplacementPlan, ReplacementStatus, TransverseSweep,
};
pub use scan::{sphere_segment_scan, AngleRange, ScanGrid, ScanPoint};
pub use schedule::{amplitude_schedule, on_axis_field, AmplitudeSchedule, DistanceRange};

/// Similarity length scale (mT).
pub const DEFAULT_SIMILARITY_D_MT: f64 = 3.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AlignmentError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("field has zero magnitude")]
    ZeroField,
    #[error("insufficient data: need at least {needed} measurements{context}, got {got}")]
    InsufficientData {
        needed: usize,
        got: usize,
        context: String,
    },
    #[error("fit diverged")]
    FitDiverged,
    #[error("target {target_mt} mT unreachable: {reason}")]
    TargetUnreachable { target_mt: f64, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no reachable displacement found within the search budget")]
    NoReachableDisplacement,
    #[error("every reachable displacement led to a forbidden final pose")]
    FinalPoseForbidden,
}

/// Angle (rad) between a field and a designed direction: the arccos of
/// their normalised dot product.
pub fn angular_error(
    predicted: &FieldVector,
    designed: &UnitVector,
) -> Result<f64, AlignmentError> {
    let n = predicted.norm();
    if !(n > 0.0) {
        return Err(AlignmentError::ZeroField);
    }
    // atan2 form keeps precision near 0 and π
    let (b, d) = (predicted.as_vec(), designed.as_vec());
    Ok(b.cross(&d).norm().atan2(b.dot(&d)))
}

/// `S = exp(−‖B2 − B1‖² / (2 d²))` with the norm and `d` in millitesla.
pub fn similarity(b1: &FieldVector, b2: &FieldVector, d_mt: f64) -> Result<f64, AlignmentError> {
    if !(d_mt > 0.0 && d_mt.is_finite()) {
        return Err(AlignmentError::InvalidArgument(
            "similarity length scale must be > 0".into(),
        ));
    }
    let diff_mt = (*b2 - *b1).norm() * 1e3;
    Ok((-(diff_mt * diff_mt) / (2.0 * d_mt * d_mt)).exp())
}
