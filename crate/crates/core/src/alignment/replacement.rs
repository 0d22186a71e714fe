use serde::{Deserialize, Serialize};

use super::{angular_error, similarity, AlignmentError, DEFAULT_SIMILARITY_D_MT};
use crate::environment::{classify_pose, Environment, FeasibilityStatus, RobotBody};
use crate::kinematics::{DhTable, JointConfig, Pose, UnitVector};
use crate::magnetostatics::{cylinder_field, inverse_dipole, FieldVector, MagnetSpec};
use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisplacementAxis {
    Y,
    Z,
}

impl DisplacementAxis {
    pub fn unit(&self) -> Vec3 {
        match self {
            DisplacementAxis::Y => Vec3::y(),
            DisplacementAxis::Z => Vec3::z(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplacementOptions {
    pub axis: DisplacementAxis,
    /// Displacement search step (m).
    pub step: f64,
    /// Search k·step for k = 1..=max_steps, alternating +/− at each k.
    pub max_steps: usize,
    /// Dipole approximation trusted beyond this many outer diameters.
    pub far_field_factor: f64,
    pub similarity_d_mt: f64,
}

impl Default for ReplacementOptions {
    fn default() -> Self {
        Self {
            axis: DisplacementAxis::Z,
            step: 0.005,
            max_steps: 40,
            far_field_factor: 8.0,
            similarity_d_mt: DEFAULT_SIMILARITY_D_MT,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReplacementStatus {
    /// The original pose was already reachable.
    Identity,
    Replaced,
}

/// The four stages: (i) original pose and its target field, (ii) displaced
/// into free space, (iii) reoriented along the inverse-dipole moment,
/// (iv) moved along the sample ray to restore the field magnitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplacementPlan {
    pub original_pose: Pose,
    pub displaced_pose: Pose,
    pub rotated_pose: Pose,
    pub final_pose: Pose,
    pub target_field: FieldVector,
    pub achieved_field: FieldVector,
    pub similarity: f64,
    pub status: ReplacementStatus,
    /// Signed displacement along the search axis (m).
    pub displacement: f64,
    /// Angle between the original and rotated magnet axes (rad).
    pub rotation_angle: f64,
    /// Angle between achieved and target fields (rad).
    pub angular_error: f64,
    /// Displaced magnet distance below the far-field threshold.
    pub far_field_violated: bool,
    pub final_joints: Option<JointConfig>,
}

/// Step (iv): position along the ray from `sample` through `start` where the
/// exact field magnitude equals `target`, with the magnet axis held fixed.
fn magnitude_match(
    spec: &MagnetSpec,
    axis: &UnitVector,
    sample: Vec3,
    start: Vec3,
    b_start: f64,
    target: f64,
) -> Result<Pose, AlignmentError> {
    let offset = start - sample;
    let r0 = offset.norm();
    let ray = offset / r0;
    let pose_at = |t: f64| Pose::with_x_axis(sample + ray * t, axis);
    let mag = |t: f64| -> Result<f64, AlignmentError> {
        Ok(cylinder_field(spec, &pose_at(t), sample)?.norm())
    };
    // closest approach that keeps the sample outside the magnet
    let t_min = 1.05 * (0.5 * spec.length).hypot(spec.outer_radius);
    let t0 = (r0 * (b_start / target).cbrt()).max(t_min);
    let (mut lo, mut hi) = (t0, t0);
    while mag(lo)? < target {
        if lo <= t_min {
            return Err(AlignmentError::TargetUnreachable {
                target_mt: target * 1e3,
                reason: "too close to the magnet".into(),
            });
        }
        lo = (lo * 0.8).max(t_min);
    }
    let mut guard = 0;
    while mag(hi)? > target {
        hi *= 1.25;
        guard += 1;
        if guard > 200 {
            return Err(AlignmentError::TargetUnreachable {
                target_mt: target * 1e3,
                reason: "field too weak".into(),
            });
        }
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if mag(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(pose_at(0.5 * (lo + hi)))
}

/// Replaces a forbidden magnet pose by one that is reachable and produces
/// a similar field at `sample`.
///
/// Displacements are tried at ±k·step along the chosen world axis. For each
/// reachable displacement the magnet is reoriented along the moment from the
/// inverse dipole problem and moved along the sample ray to match the
/// target magnitude; the first plan whose final pose is reachable wins.
#[allow(clippy::too_many_arguments)]
pub fn replace_forbidden_pose(
    forbidden: &Pose,
    sample: Vec3,
    spec: &MagnetSpec,
    env: &Environment,
    dh: &DhTable,
    body: &RobotBody,
    seed: &JointConfig,
    opts: &ReplacementOptions,
) -> Result<ReplacementPlan, AlignmentError> {
    if !(opts.step > 0.0) || opts.max_steps == 0 {
        return Err(AlignmentError::InvalidArgument(
            "search step must be > 0 and max_steps >= 1".into(),
        ));
    }
    let target = cylinder_field(spec, forbidden, sample)?;
    let target_mag = target.norm();
    if !(target_mag > 0.0) {
        return Err(AlignmentError::ZeroField);
    }
    let far_limit = opts.far_field_factor * spec.outer_diameter();

    let original = classify_pose(forbidden, dh, body, env, seed);
    if original.status == FeasibilityStatus::Reachable {
        return Ok(ReplacementPlan {
            original_pose: *forbidden,
            displaced_pose: *forbidden,
            rotated_pose: *forbidden,
            final_pose: *forbidden,
            target_field: target,
            achieved_field: target,
            similarity: 1.0,
            status: ReplacementStatus::Identity,
            displacement: 0.0,
            rotation_angle: 0.0,
            angular_error: 0.0,
            far_field_violated: (sample - forbidden.position()).norm() < far_limit,
            final_joints: original.joints,
        });
    }

    let axis = opts.axis.unit();
    let mut any_displaced = false;
    for k in 1..=opts.max_steps {
        for sign in [1.0, -1.0] {
            let shift = sign * k as f64 * opts.step;
            let displaced = Pose {
                x: forbidden.x + shift * axis.x,
                y: forbidden.y + shift * axis.y,
                z: forbidden.z + shift * axis.z,
                ..*forbidden
            };
            let d = classify_pose(&displaced, dh, body, env, seed);
            if d.status != FeasibilityStatus::Reachable {
                continue;
            }
            any_displaced = true;
            let seed_here = d.joints.unwrap_or(*seed);

            let r = sample - displaced.position();
            let Some(mhat) = UnitVector::new(inverse_dipole(&target, r)?.as_vec()) else {
                continue;
            };
            let rotated = Pose::with_x_axis(displaced.position(), &mhat);
            let b3 = cylinder_field(spec, &rotated, sample)?;
            let final_pose = match magnitude_match(
                spec,
                &mhat,
                sample,
                displaced.position(),
                b3.norm(),
                target_mag,
            ) {
                Ok(p) => p,
                Err(AlignmentError::TargetUnreachable { .. }) => continue,
                Err(e) => return Err(e),
            };
            let f = classify_pose(&final_pose, dh, body, env, &seed_here);
            if f.status != FeasibilityStatus::Reachable {
                continue;
            }
            let achieved = cylinder_field(spec, &final_pose, sample)?;
            return Ok(ReplacementPlan {
                original_pose: *forbidden,
                displaced_pose: displaced,
                rotated_pose: rotated,
                final_pose,
                target_field: target,
                achieved_field: achieved,
                similarity: similarity(&target, &achieved, opts.similarity_d_mt)?,
                status: ReplacementStatus::Replaced,
                displacement: shift,
                rotation_angle: forbidden.x_axis().as_vec().angle(&mhat.as_vec()),
                angular_error: angular_error(
                    &achieved,
                    &UnitVector::new(target.as_vec()).expect("non-zero target"),
                )?,
                far_field_violated: r.norm() < far_limit,
                final_joints: f.joints,
            });
        }
    }
    Err(if any_displaced {
        AlignmentError::FinalPoseForbidden
    } else {
        AlignmentError::NoReachableDisplacement
    })
}

/// Transverse field while rotating a displaced magnet about world y.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransverseSweep {
    /// Rotation of the magnet axis about y, from +x (rad).
    pub angles: Vec<f64>,
    /// √(By² + Bz²) at the sample (T).
    pub transverse: Vec<f64>,
    /// Angle with the smallest transverse field.
    pub minimum_angle: f64,
    /// Angle of the inverse-dipole moment in the same parametrisation.
    pub predicted_angle: f64,
}

/// Sample at the origin with a +x target field from a magnet at (−s, 0, 0).
/// The magnet is moved to (−s, 0, Δ) and its axis swept about y over
/// ±`half_range` in `step` increments.
pub fn transverse_sweep(
    spec: &MagnetSpec,
    standoff: f64,
    dz: f64,
    half_range: f64,
    step: f64,
) -> Result<TransverseSweep, AlignmentError> {
    if !(standoff > 0.0 && step > 0.0 && half_range > 0.0) {
        return Err(AlignmentError::InvalidArgument(
            "standoff, step and range must be > 0".into(),
        ));
    }
    let sample = Vec3::zeros();
    let centre = Vec3::new(-standoff, 0.0, dz);
    let target = FieldVector::new(1e-3, 0.0, 0.0);
    let m = inverse_dipole(&target, sample - centre)?.as_vec();
    // Ry(θ)·x̂ = (cos θ, 0, −sin θ)
    let predicted_angle = (-m.z).atan2(m.x);
    let n = (2.0 * half_range / step).round() as usize;
    let mut angles = Vec::with_capacity(n + 1);
    let mut transverse = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let th = -half_range + i as f64 * step;
        let pose = Pose::new(centre.x, centre.y, centre.z, 0.0, th, 0.0);
        let b = cylinder_field(spec, &pose, sample)?;
        angles.push(th);
        transverse.push(b.by.hypot(b.bz));
    }
    let k = (0..transverse.len())
        .min_by(|&a, &b| transverse[a].total_cmp(&transverse[b]))
        .expect("non-empty");
    Ok(TransverseSweep {
        minimum_angle: angles[k],
        angles,
        transverse,
        predicted_angle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::magnet_pose_for_field_direction;
    use crate::magnetostatics::{dipole_field, DipoleMoment};

    #[test]
    fn empty_environment_gives_identity() {
        let dh = DhTable::nominal();
        let body = RobotBody::nominal(&dh);
        let sample = Vec3::new(0.3, 0.1, 0.15);
        let pose = magnet_pose_for_field_direction(sample, 0.3, 0.4, 0.06);
        let plan = replace_forbidden_pose(
            &pose,
            sample,
            &MagnetSpec::nominal(),
            &Environment::empty(),
            &dh,
            &body,
            &dh.home(),
            &ReplacementOptions::default(),
        )
        .unwrap();
        assert_eq!(plan.status, ReplacementStatus::Identity);
        assert_eq!(plan.similarity, 1.0);
        assert_eq!(plan.final_pose, pose);
    }

    #[test]
    fn dipole_direction_recovery_is_exact() {
        let target = FieldVector::new(1.2e-3, -0.4e-3, 0.7e-3);
        let r = Vec3::new(0.12, 0.05, -0.2);
        let m = inverse_dipole(&target, r).unwrap();
        let unit = DipoleMoment::from(m.as_vec().normalize() * 3.0);
        let b = dipole_field(&unit, r).unwrap();
        assert!(b.as_vec().angle(&target.as_vec()) < 1e-10);
    }

    #[test]
    fn sweep_minimum_near_prediction() {
        let s = transverse_sweep(
            &MagnetSpec::nominal(),
            0.2,
            0.03,
            40f64.to_radians(),
            0.1f64.to_radians(),
        )
        .unwrap();
        assert!((s.minimum_angle - s.predicted_angle).abs() < 1f64.to_radians());
        assert_eq!(s.angles.len(), 801);
    }
}
