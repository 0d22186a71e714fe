use serde::{Deserialize, Serialize};

use super::{angular_error, AlignmentError};
use crate::kinematics::{magnet_pose_for_field_direction, unit_normal, Pose};
use crate::magnetostatics::{cylinder_field, FieldVector, MagnetSpec};
use crate::Vec3;

/// Evenly spaced angles from `start` to `stop` inclusive (rad).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl AngleRange {
    pub fn new(start: f64, stop: f64, count: usize) -> Self {
        Self { start, stop, count }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }

    /// Spacing between neighbouring angles (0 for a single angle).
    pub fn step(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.stop - self.start).abs() / (self.count - 1) as f64
        }
    }
}

/// Rows are α_y values, columns α_z values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub alpha_y: AngleRange,
    pub alpha_z: AngleRange,
}

impl ScanGrid {
    /// One-eighth sphere segment: both angles over [0, π/2].
    pub fn one_eighth(count: usize) -> Self {
        let r = AngleRange::new(0.0, std::f64::consts::FRAC_PI_2, count);
        Self {
            alpha_y: r,
            alpha_z: r,
        }
    }

    pub fn len(&self) -> usize {
        self.alpha_y.count * self.alpha_z.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid (row, column) indices in meander order: row k runs α_z
    /// ascending when k is even and descending when odd.
    pub fn meander(&self) -> Vec<(usize, usize)> {
        let nz = self.alpha_z.count;
        (0..self.alpha_y.count)
            .flat_map(|r| (0..nz).map(move |c| (r, if r % 2 == 0 { c } else { nz - 1 - c })))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub order_index: usize,
    pub row: usize,
    pub col: usize,
    pub alpha_y: f64,
    pub alpha_z: f64,
    pub pose: Pose,
    pub predicted_field: FieldVector,
    pub measured_field: Option<FieldVector>,
}

impl ScanPoint {
    /// Error of the measured field when present, else of the prediction,
    /// relative to the designed direction `n̂(α_y, α_z)`.
    pub fn angular_error(&self) -> Result<f64, AlignmentError> {
        let b = self.measured_field.unwrap_or(self.predicted_field);
        angular_error(&b, &unit_normal(self.alpha_y, self.alpha_z))
    }
}

/// Magnet poses placing `n̂(α_y, α_z)` fields at `sample`, in meander order.
///
/// With `resolution` set, magnet positions are snapped to that grid as the
/// arm would realise them, and the prediction uses the snapped pose.
pub fn sphere_segment_scan(
    sample: Vec3,
    grid: &ScanGrid,
    standoff: f64,
    spec: &MagnetSpec,
    resolution: Option<f64>,
) -> Result<Vec<ScanPoint>, AlignmentError> {
    if !(standoff > 0.0) {
        return Err(AlignmentError::InvalidArgument(
            "standoff must be > 0".into(),
        ));
    }
    if grid.is_empty() {
        return Err(AlignmentError::InvalidArgument("scan grid is empty".into()));
    }
    if let Some(r) = resolution {
        if !(r > 0.0) {
            return Err(AlignmentError::InvalidArgument(
                "resolution must be > 0".into(),
            ));
        }
    }
    let ay = grid.alpha_y.values();
    let az = grid.alpha_z.values();
    grid.meander()
        .into_iter()
        .enumerate()
        .map(|(order_index, (row, col))| {
            let mut pose = magnet_pose_for_field_direction(sample, ay[row], az[col], standoff);
            if let Some(r) = resolution {
                pose = pose.quantised(r);
            }
            let predicted_field = cylinder_field(spec, &pose, sample)?;
            Ok(ScanPoint {
                order_index,
                row,
                col,
                alpha_y: ay[row],
                alpha_z: az[col],
                pose,
                predicted_field,
                measured_field: None,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn single_point_on_minus_x() {
        let spec = MagnetSpec::nominal();
        let grid = ScanGrid {
            alpha_y: AngleRange::new(0.0, 0.0, 1),
            alpha_z: AngleRange::new(0.0, 0.0, 1),
        };
        let pts = sphere_segment_scan(Vec3::zeros(), &grid, 0.06, &spec, None).unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0].pose.position() - Vec3::new(-0.06, 0.0, 0.0)).norm() < 1e-15);
        let b = pts[0].predicted_field;
        assert!(b.bx > 0.0 && b.by.abs() < 1e-12 * b.bx && b.bz.abs() < 1e-12 * b.bx);
    }

    #[test]
    fn meander_rows_alternate_and_cover_grid() {
        let grid = ScanGrid::one_eighth(5);
        let order = grid.meander();
        assert_eq!(order.len(), 25);
        assert_eq!(order.iter().collect::<HashSet<_>>().len(), 25);
        for (k, chunk) in order.chunks(5).enumerate() {
            let cols: Vec<usize> = chunk.iter().map(|p| p.1).collect();
            let ascending = cols.windows(2).all(|w| w[0] < w[1]);
            assert_eq!(ascending, k % 2 == 0);
        }
    }

    #[test]
    fn constant_magnitude_over_segment() {
        let spec = MagnetSpec::nominal();
        let pts = sphere_segment_scan(
            Vec3::new(0.3, 0.1, 0.15),
            &ScanGrid::one_eighth(7),
            0.06,
            &spec,
            None,
        )
        .unwrap();
        let mags: Vec<f64> = pts.iter().map(|p| p.predicted_field.norm()).collect();
        let (lo, hi) = mags
            .iter()
            .fold((f64::MAX, 0.0f64), |(a, b), &m| (a.min(m), b.max(m)));
        assert!((hi - lo) / hi < 1e-9);
        assert!(pts.iter().all(|p| p.angular_error().unwrap() < 1e-9));
    }

    #[test]
    fn rejects_bad_arguments() {
        let spec = MagnetSpec::nominal();
        assert!(
            sphere_segment_scan(Vec3::zeros(), &ScanGrid::one_eighth(3), 0.0, &spec, None).is_err()
        );
        assert!(
            sphere_segment_scan(Vec3::zeros(), &ScanGrid::one_eighth(0), 0.1, &spec, None).is_err()
        );
    }
}
