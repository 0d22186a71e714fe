use std::f64::consts::PI;

use super::{DipoleMoment, FieldError, FieldVector, MagnetSpec, MU_0};
use crate::kinematics::Pose;
use crate::Vec3;

/// Point-dipole field at displacement `r` (dipole → observer).
pub fn dipole_field(m: &DipoleMoment, r: Vec3) -> Result<FieldVector, FieldError> {
    let d = r.norm();
    if d == 0.0 {
        return Err(FieldError::ZeroDistance);
    }
    let rhat = r / d;
    let m = m.as_vec();
    let b = (MU_0 / (4.0 * PI)) * (3.0 * m.dot(&rhat) * rhat - m) / (d * d * d);
    Ok(FieldVector::from(b))
}

/// Dipole moment that produces `target` at displacement `r` (dipole → observer).
///
/// `m = (6π/μ0)(B·r)|r| r − (4π/μ0)|r|³ B`; exact inverse of [`dipole_field`].
pub fn inverse_dipole(target: &FieldVector, r: Vec3) -> Result<DipoleMoment, FieldError> {
    let d = r.norm();
    if d == 0.0 {
        return Err(FieldError::ZeroDistance);
    }
    let b = target.as_vec();
    let m = (6.0 * PI / MU_0) * b.dot(&r) * d * r - (4.0 * PI / MU_0) * d * d * d * b;
    Ok(DipoleMoment::from(m))
}

/// Equivalent point dipole of the magnet at `pose`: magnitude M·V along the pose x-axis.
pub fn equivalent_dipole(spec: &MagnetSpec, pose: &Pose) -> DipoleMoment {
    DipoleMoment::from(pose.x_axis().as_vec() * spec.magnetisation * spec.volume())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn on_axis_and_equatorial() {
        let m0 = 2.0;
        let m = DipoleMoment::new(0.0, 0.0, m0);
        let d = 0.05;
        let b = dipole_field(&m, Vec3::new(0.0, 0.0, d)).unwrap();
        let expect = MU_0 * m0 / (2.0 * PI * d.powi(3));
        assert!((b.bz - expect).abs() < 1e-15 * expect);
        let b2 = dipole_field(&m, Vec3::new(0.0, 0.0, 2.0 * d)).unwrap();
        assert!((b.bz / b2.bz - 8.0).abs() < 1e-12);

        let b = dipole_field(&m, Vec3::new(d, 0.0, 0.0)).unwrap();
        let expect = -MU_0 * m0 / (4.0 * PI * d.powi(3));
        assert!((b.bz - expect).abs() < 1e-15 * expect.abs());
        assert_eq!((b.bx, b.by), (0.0, 0.0));
    }

    #[test]
    fn generic_matches_componentwise_formula() {
        let (mx, my, mz) = (0.3, -1.2, 0.7);
        let (x, y, z) = (0.04, 0.01, -0.03);
        let r2: f64 = x * x + y * y + z * z;
        let r5 = r2.powf(2.5);
        let mdotr = mx * x + my * y + mz * z;
        let k = 1e-7;
        let expect = [
            k * (3.0 * mdotr * x - mx * r2) / r5,
            k * (3.0 * mdotr * y - my * r2) / r5,
            k * (3.0 * mdotr * z - mz * r2) / r5,
        ];
        let b = dipole_field(&DipoleMoment::new(mx, my, mz), Vec3::new(x, y, z)).unwrap();
        for (got, want) in [b.bx, b.by, b.bz].iter().zip(expect.iter()) {
            assert!(
                (got - want).abs() < 1e-12 * want.abs().max(1e-9),
                "{got} vs {want}"
            );
        }
    }

    #[test]
    fn zero_distance() {
        assert_eq!(
            dipole_field(&DipoleMoment::new(1.0, 0.0, 0.0), Vec3::zeros()),
            Err(FieldError::ZeroDistance)
        );
        assert_eq!(
            inverse_dipole(&FieldVector::new(1.0, 0.0, 0.0), Vec3::zeros()),
            Err(FieldError::ZeroDistance)
        );
    }

    #[test]
    fn inverse_parallel_and_linear() {
        let r = Vec3::new(0.02, -0.05, 0.03);
        let b = FieldVector::from(r.normalize() * 4e-3);
        let m = inverse_dipole(&b, r).unwrap();
        let expect = 2.0 * PI / MU_0 * r.norm().powi(3) * b.norm();
        assert!((m.magnitude() - expect).abs() < 1e-12 * expect);
        assert!(m.as_vec().normalize().dot(&r.normalize()) > 1.0 - 1e-14);

        let b = FieldVector::new(1e-3, -2e-3, 5e-4);
        let m1 = inverse_dipole(&b, r).unwrap();
        let m2 = inverse_dipole(&(b * 2.0), r).unwrap();
        assert!((m2.as_vec() - 2.0 * m1.as_vec()).norm() < 1e-14 * m2.magnitude());
    }

    #[test]
    fn equivalent_dipole_volume() {
        let spec = MagnetSpec::new(0.01, 0.0, 0.02, 1e6).unwrap();
        let m = equivalent_dipole(&spec, &Pose::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        assert!((m.magnitude() - 1e6 * std::f64::consts::PI * 0.01 * 0.01 * 0.02).abs() < 1e-12);
        assert!((m.mx - m.magnitude()).abs() < 1e-15);
        let thin = MagnetSpec::new(0.01, 0.01 - 1e-9, 0.02, 1e6).unwrap();
        assert!(
            equivalent_dipole(&thin, &Pose::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)).magnitude() < 2e-3
        );
        let m2 = equivalent_dipole(&spec.scaled(2.0), &Pose::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        assert!((m2.magnitude() - 2.0 * m.magnitude()).abs() < 1e-12);
    }
}
