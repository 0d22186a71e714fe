use serde::{Deserialize, Serialize};

use super::AlignmentError;
use crate::kinematics::{Pose, UnitVector};
use crate::magnetostatics::{cylinder_field, MagnetSpec};
use crate::Vec3;

/// Allowed magnet-centre distances from the sample (m).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceRange {
    pub min: f64,
    pub max: f64,
}

impl DistanceRange {
    /// From 5 mm beyond the magnet face out to 0.3 m.
    pub fn for_magnet(spec: &MagnetSpec) -> Self {
        Self {
            min: 0.5 * spec.length + 0.005,
            max: 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSchedule {
    /// T.
    pub targets: Vec<f64>,
    /// Magnet-centre distance from the sample after quantisation (m).
    pub distances: Vec<f64>,
    /// |B| at the quantised distance (T).
    pub achieved: Vec<f64>,
    /// achieved − target (T).
    pub errors: Vec<f64>,
    /// Bound on |error| from the local slope: |dB/dr| at the near edge of the
    /// quantisation cell × resolution / 2 (T).
    pub error_bounds: Vec<f64>,
}

/// |B| at the sample with the magnet `r` behind it along `direction`,
/// magnetised towards the sample.
pub fn on_axis_field(
    spec: &MagnetSpec,
    direction: &UnitVector,
    sample: Vec3,
    r: f64,
) -> Result<f64, AlignmentError> {
    let pose = Pose::with_x_axis(sample - direction.as_vec() * r, direction);
    Ok(cylinder_field(spec, &pose, sample)?.norm())
}

/// Inverts the monotone |B|(r) curve for each target (bisection to 1e-9 m),
/// snaps r to the resolution grid, and reports the achieved field.
pub fn amplitude_schedule(
    targets: &[f64],
    spec: &MagnetSpec,
    direction: &UnitVector,
    sample: Vec3,
    resolution: f64,
    range: &DistanceRange,
) -> Result<AmplitudeSchedule, AlignmentError> {
    if !(resolution > 0.0) {
        return Err(AlignmentError::InvalidArgument(
            "resolution must be > 0".into(),
        ));
    }
    if !(range.min > 0.5 * spec.length && range.max > range.min) {
        return Err(AlignmentError::InvalidArgument(
            "distance range must lie outside the magnet and be non-empty".into(),
        ));
    }
    let field = |r: f64| on_axis_field(spec, direction, sample, r);
    // usable grid: multiples of the resolution inside the range
    let grid_min = (range.min / resolution).ceil() * resolution;
    let grid_max = (range.max / resolution).floor() * resolution;
    if grid_max < grid_min {
        return Err(AlignmentError::InvalidArgument(
            "no resolution grid point inside the distance range".into(),
        ));
    }
    let b_near = field(range.min)?;
    let b_far = field(range.max)?;

    let mut out = AmplitudeSchedule {
        targets: Vec::new(),
        distances: Vec::new(),
        achieved: Vec::new(),
        errors: Vec::new(),
        error_bounds: Vec::new(),
    };
    for &t in targets {
        if !(t <= b_near) {
            return Err(AlignmentError::TargetUnreachable {
                target_mt: t * 1e3,
                reason: format!("exceeds {:.4} mT at the minimum distance", b_near * 1e3),
            });
        }
        if !(t >= b_far) {
            return Err(AlignmentError::TargetUnreachable {
                target_mt: t * 1e3,
                reason: format!("below {:.4} mT at the far cutoff", b_far * 1e3),
            });
        }
        let (mut lo, mut hi) = (range.min, range.max);
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            if field(mid)? > t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        let rq = ((r / resolution).round() * resolution).clamp(grid_min, grid_max);
        let achieved = field(rq)?;
        let near = (r - 0.5 * resolution).max(range.min);
        let h = 1e-6 * near;
        let slope = (field(near - h)? - field(near + h)?) / (2.0 * h);
        out.targets.push(t);
        out.distances.push(rq);
        out.achieved.push(achieved);
        out.errors.push(achieved - t);
        out.error_bounds.push(slope.abs() * 0.5 * resolution);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (MagnetSpec, UnitVector, Vec3, DistanceRange) {
        let spec = MagnetSpec::nominal();
        (
            spec,
            UnitVector::new(Vec3::x()).unwrap(),
            Vec3::new(0.3, 0.1, 0.15),
            DistanceRange::for_magnet(&spec),
        )
    }

    #[test]
    fn exact_grid_distance_has_zero_error() {
        let (spec, dir, sample, range) = setup();
        let b = on_axis_field(&spec, &dir, sample, 0.0625).unwrap();
        let s = amplitude_schedule(&[b], &spec, &dir, sample, 0.5e-3, &range).unwrap();
        assert!((s.distances[0] - 0.0625).abs() < 1e-12);
        assert!(s.errors[0].abs() < 1e-9 * b);
    }

    #[test]
    fn monotone_distances_and_bounded_errors() {
        let (spec, dir, sample, range) = setup();
        let targets: Vec<f64> = (0..20)
            .map(|i| (0.5 + 9.5 * i as f64 / 19.0) * 1e-3)
            .collect();
        let s = amplitude_schedule(&targets, &spec, &dir, sample, 0.5e-3, &range).unwrap();
        assert!(s.distances.windows(2).all(|w| w[1] <= w[0]));
        assert!(s.achieved.windows(2).all(|w| w[1] >= w[0]));
        for (e, b) in s.errors.iter().zip(&s.error_bounds) {
            assert!(e.abs() <= *b);
        }
        assert!(s.error_bounds.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn unreachable_targets() {
        let (spec, dir, sample, range) = setup();
        assert!(matches!(
            amplitude_schedule(&[5.0], &spec, &dir, sample, 0.5e-3, &range),
            Err(AlignmentError::TargetUnreachable { .. })
        ));
        assert!(matches!(
            amplitude_schedule(&[1e-9], &spec, &dir, sample, 0.5e-3, &range),
            Err(AlignmentError::TargetUnreachable { .. })
        ));
    }
}
