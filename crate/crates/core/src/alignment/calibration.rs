use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::AlignmentError;
use crate::kinematics::magnet_pose_for_field_direction;
use crate::lsq::{levenberg_marquardt, LmOptions};
use crate::magnetostatics::{cylinder_field, FieldVector, MagnetSpec};
use crate::Vec3;

/// Minimum measurements per magnet-mass configuration.
const MIN_PER_MASS: usize = 4;

/// One Hall reading at a commanded field direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMeasurement {
    pub alpha_y: f64,
    pub alpha_z: f64,
    pub mass_index: usize,
    pub field: FieldVector,
}

/// Sample position, magnet standoff, and the magnet used for each mass index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGeometry {
    pub sample: [f64; 3],
    pub standoff: f64,
    pub magnets: Vec<MagnetSpec>,
}

impl CalibrationGeometry {
    /// Magnet stacks of 1, 2, … `masses` nominal magnets.
    pub fn stacked(sample: Vec3, standoff: f64, masses: usize) -> Self {
        let base = MagnetSpec::nominal();
        let magnets = (1..=masses)
            .map(|k| MagnetSpec {
                length: base.length * k as f64,
                ..base
            })
            .collect();
        Self {
            sample: sample.into(),
            standoff,
            magnets,
        }
    }

    /// Field at the sample for a commanded direction with the given offsets.
    pub fn model_field(
        &self,
        alpha_y: f64,
        alpha_z: f64,
        mass_index: usize,
    ) -> Result<FieldVector, AlignmentError> {
        let spec = self.magnets.get(mass_index).ok_or_else(|| {
            AlignmentError::InvalidArgument(format!("mass index {mass_index} has no magnet"))
        })?;
        let sample = Vec3::from(self.sample);
        let pose = magnet_pose_for_field_direction(sample, alpha_y, alpha_z, self.standoff);
        Ok(cylinder_field(spec, &pose, sample)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// Shared α_y offset (rad).
    pub delta_alpha_y: f64,
    /// α_z offset per mass index (rad).
    pub delta_alpha_z: Vec<f64>,
    pub sigma_alpha_y: f64,
    pub sigma_alpha_z: Vec<f64>,
    /// RMS of the per-component field residuals (T).
    pub residual_rms: f64,
    pub iterations: usize,
}

/// Least-squares fit of a shared α_y offset and per-mass α_z offsets so that
/// the modelled fields at the offset poses match the measurements.
pub fn calibrate_offsets(
    measured: &[CalibrationMeasurement],
    geometry: &CalibrationGeometry,
) -> Result<CalibrationResult, AlignmentError> {
    let masses = geometry.magnets.len();
    if masses == 0 {
        return Err(AlignmentError::InvalidArgument(
            "geometry has no magnets".into(),
        ));
    }
    for k in 0..masses {
        let got = measured.iter().filter(|m| m.mass_index == k).count();
        if got < MIN_PER_MASS {
            return Err(AlignmentError::InsufficientData {
                needed: MIN_PER_MASS,
                got,
                context: format!(" for mass {k}"),
            });
        }
    }
    if let Some(m) = measured.iter().find(|m| m.mass_index >= masses) {
        return Err(AlignmentError::InvalidArgument(format!(
            "mass index {} has no magnet",
            m.mass_index
        )));
    }
    for k in 0..masses {
        geometry.model_field(0.0, 0.0, k)?;
    }

    // residuals in mT, parameters [Δα_y, Δα_z(0), …]
    let residuals = |p: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * measured.len());
        for m in measured {
            let b = geometry
                .model_field(
                    m.alpha_y + p[0],
                    m.alpha_z + p[1 + m.mass_index],
                    m.mass_index,
                )
                .expect("validated above");
            let d = (b - m.field).to_millitesla();
            out.extend_from_slice(&d);
        }
        out
    };
    let p0 = vec![0.0; 1 + masses];
    let opts = LmOptions {
        fd_steps: Some(vec![1e-7; 1 + masses]),
        ..LmOptions::default()
    };
    let rep = levenberg_marquardt(residuals, &p0, &opts);
    if !rep.converged || rep.params.iter().any(|v| !v.is_finite()) {
        return Err(AlignmentError::FitDiverged);
    }
    let n = rep.residuals.len() as f64;
    let cov = rep.covariance();
    let sig = |i: usize| {
        cov.as_ref()
            .map(|c| c[(i, i)].max(0.0).sqrt())
            .unwrap_or(f64::NAN)
    };
    Ok(CalibrationResult {
        delta_alpha_y: rep.params[0],
        delta_alpha_z: rep.params[1..].to_vec(),
        sigma_alpha_y: sig(0),
        sigma_alpha_z: (1..=masses).map(sig).collect(),
        residual_rms: (rep.cost / n).sqrt() * 1e-3,
        iterations: rep.iterations,
    })
}

/// Synthetic Hall readings along an α_y arc from 0 to π/2 at α_z = 0 for
/// every mass, with the true pose offset by (Δα_y, Δα_z[k]) and Gaussian
/// noise of `noise_sigma` (T) on each component.
pub fn synthetic_arc<R: Rng + ?Sized>(
    geometry: &CalibrationGeometry,
    delta_alpha_y: f64,
    delta_alpha_z: &[f64],
    points_per_mass: usize,
    noise_sigma: f64,
    rng: &mut R,
) -> Result<Vec<CalibrationMeasurement>, AlignmentError> {
    if delta_alpha_z.len() != geometry.magnets.len() {
        return Err(AlignmentError::InvalidArgument(
            "one α_z offset per magnet is required".into(),
        ));
    }
    if !(noise_sigma >= 0.0) {
        return Err(AlignmentError::InvalidArgument(
            "noise sigma must be >= 0".into(),
        ));
    }
    let noise = Normal::new(0.0, noise_sigma)
        .map_err(|e| AlignmentError::InvalidArgument(e.to_string()))?;
    let mut out = Vec::with_capacity(points_per_mass * delta_alpha_z.len());
    for (k, dz) in delta_alpha_z.iter().enumerate() {
        for i in 0..points_per_mass {
            let ay = if points_per_mass > 1 {
                std::f64::consts::FRAC_PI_2 * i as f64 / (points_per_mass - 1) as f64
            } else {
                0.0
            };
            let b = geometry.model_field(ay + delta_alpha_y, *dz, k)?;
            let field = if noise_sigma > 0.0 {
                b + FieldVector::new(noise.sample(rng), noise.sample(rng), noise.sample(rng))
            } else {
                b
            };
            out.push(CalibrationMeasurement {
                alpha_y: ay,
                alpha_z: 0.0,
                mass_index: k,
                field,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn geometry() -> CalibrationGeometry {
        CalibrationGeometry::stacked(Vec3::new(0.3, 0.1, 0.15), 0.06, 3)
    }

    #[test]
    fn zero_offsets_zero_noise() {
        let g = geometry();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = synthetic_arc(&g, 0.0, &[0.0; 3], 12, 0.0, &mut rng).unwrap();
        let r = calibrate_offsets(&data, &g).unwrap();
        assert!(r.delta_alpha_y.abs() < 1e-8);
        assert!(r.delta_alpha_z.iter().all(|d| d.abs() < 1e-8));
        assert!(r.residual_rms < 1e-12);
    }

    #[test]
    fn recovers_injected_offsets_without_noise() {
        let g = geometry();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dz = [1f64.to_radians(), 2f64.to_radians(), 3f64.to_radians()];
        let data = synthetic_arc(&g, 15f64.to_radians(), &dz, 12, 0.0, &mut rng).unwrap();
        let r = calibrate_offsets(&data, &g).unwrap();
        assert!((r.delta_alpha_y - 15f64.to_radians()).abs() < 1e-8);
        for (a, b) in r.delta_alpha_z.iter().zip(dz.iter()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn too_few_points() {
        let g = geometry();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = synthetic_arc(&g, 0.0, &[0.0; 3], 3, 0.0, &mut rng).unwrap();
        assert!(matches!(
            calibrate_offsets(&data, &g),
            Err(AlignmentError::InsufficientData {
                needed: 4,
                got: 3,
                ..
            })
        ));
    }
}
