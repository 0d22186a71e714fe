use std::f64::consts::PI;

use super::elliptic::cel;
use super::{FieldError, FieldVector, MagnetSpec, MATERIAL_TOLERANCE, MU_0};
use crate::kinematics::Pose;
use crate::Vec3;

/// Field of a solid cylinder (radius `radius`, length `length`, axial
/// magnetisation `magnetisation`) centred at the origin with its axis along
/// local z. Returns (B_rho, B_z) at cylindrical coordinates (rho, z).
///
/// Current-sheet formulation in terms of Bulirsch's `cel`; valid inside and
/// outside the material except on the rim edges.
pub fn solid_cylinder_field_local(
    radius: f64,
    length: f64,
    magnetisation: f64,
    rho: f64,
    z: f64,
) -> (f64, f64) {
    let b = 0.5 * length;
    let b0 = MU_0 * magnetisation / PI;
    let zp = z + b;
    let zm = z - b;
    let sum = radius + rho;
    let diff = radius - rho;
    let inv_p = 1.0 / (zp * zp + sum * sum).sqrt();
    let inv_m = 1.0 / (zm * zm + sum * sum).sqrt();
    let alpha_p = radius * inv_p;
    let alpha_m = radius * inv_m;
    let beta_p = zp * inv_p;
    let beta_m = zm * inv_m;
    let gamma = diff / sum;
    let kp = ((zp * zp + diff * diff) / (zp * zp + sum * sum)).sqrt();
    let km = ((zm * zm + diff * diff) / (zm * zm + sum * sum)).sqrt();

    let b_rho = b0 * (alpha_p * cel(kp, 1.0, 1.0, -1.0) - alpha_m * cel(km, 1.0, 1.0, -1.0));
    let g2 = gamma * gamma;
    let b_z =
        b0 * radius / sum * (beta_p * cel(kp, g2, 1.0, gamma) - beta_m * cel(km, g2, 1.0, gamma));
    (b_rho, b_z)
}

/// Field of the magnet at `observer`, both in world coordinates.
///
/// The magnet is centred at the pose position with its magnetisation along
/// the pose x-axis. Points inside the bore are allowed.
pub fn cylinder_field(
    spec: &MagnetSpec,
    magnet_pose: &Pose,
    observer: Vec3,
) -> Result<FieldVector, FieldError> {
    spec.validate()?;
    let rot = magnet_pose.rotation();
    let local = rot.inverse() * (observer - magnet_pose.position());
    let axial = local.x;
    let radial = Vec3::new(0.0, local.y, local.z);
    let rho = radial.norm();

    let half = 0.5 * spec.length;
    let tol = MATERIAL_TOLERANCE;
    let in_slab = axial.abs() <= half + tol;
    let in_ring = rho <= spec.outer_radius + tol
        && (spec.inner_radius == 0.0 || rho >= spec.inner_radius - tol);
    if in_slab && in_ring {
        return Err(FieldError::ObserverInsideMaterial);
    }

    let (mut b_rho, mut b_ax) = solid_cylinder_field_local(
        spec.outer_radius,
        spec.length,
        spec.magnetisation,
        rho,
        axial,
    );
    if spec.inner_radius > 0.0 {
        let (ir, iz) = solid_cylinder_field_local(
            spec.inner_radius,
            spec.length,
            spec.magnetisation,
            rho,
            axial,
        );
        b_rho -= ir;
        b_ax -= iz;
    }
    let radial_dir = if rho > 0.0 {
        radial / rho
    } else {
        Vec3::zeros()
    };
    let local_b = Vec3::new(b_ax, 0.0, 0.0) + radial_dir * b_rho;
    Ok(FieldVector::from(rot * local_b))
}
