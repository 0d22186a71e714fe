use nalgebra::Matrix3;
use num_complex::Complex64;

use super::{NvParams, ResonancePair, SpinError};
use crate::kinematics::unit_normal;
use crate::magnetostatics::FieldVector;
use crate::Vec3;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// 3×3 Hermitian operator in the |ms = +1⟩, |0⟩, |−1⟩ basis, in Hz.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinMatrix(pub Matrix3<Complex64>);

impl SpinMatrix {
    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Largest |Hᵢⱼ − conj(Hⱼᵢ)|.
    pub fn hermiticity_error(&self) -> f64 {
        let m = &self.0;
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues ascending with their eigenvectors (columns).
    pub fn eigen(&self) -> ([f64; 3], Matrix3<Complex64>) {
        let eig = self.0.symmetric_eigen();
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals = [
            eig.eigenvalues[idx[0]],
            eig.eigenvalues[idx[1]],
            eig.eigenvalues[idx[2]],
        ];
        let vecs = Matrix3::from_columns(&[
            eig.eigenvectors.column(idx[0]).into_owned(),
            eig.eigenvectors.column(idx[1]).into_owned(),
            eig.eigenvectors.column(idx[2]).into_owned(),
        ]);
        (vals, vecs)
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Spin-1 operators (Sx, Sy, Sz) with ħ = 1.
pub fn spin_operators() -> [Matrix3<Complex64>; 3] {
    let s = FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    let sx = Matrix3::new(z, c(s, 0.0), z, c(s, 0.0), z, c(s, 0.0), z, c(s, 0.0), z);
    let sy = Matrix3::new(z, c(0.0, -s), z, c(0.0, s), z, c(0.0, -s), z, c(0.0, s), z);
    let sz = Matrix3::new(c(1.0, 0.0), z, z, z, z, z, z, z, c(-1.0, 0.0));
    [sx, sy, sz]
}

/// `H = D Sz² + Π (Sx² − Sy²) + γe (Bx Sx + By Sy) + γe Bz Sz`, with `b_nv` in the NV frame.
pub fn hamiltonian(p: &NvParams, b_nv: &FieldVector) -> SpinMatrix {
    let [sx, sy, sz] = spin_operators();
    let g = p.gamma_e;
    let h = sz * sz * c(p.d, 0.0)
        + (sx * sx - sy * sy) * c(p.pi, 0.0)
        + sx * c(g * b_nv.bx, 0.0)
        + sy * c(g * b_nv.by, 0.0)
        + sz * c(g * b_nv.bz, 0.0);
    SpinMatrix(h)
}

/// ODMR transition frequencies from the ms = 0-like eigenstate, which is
/// identified by maximal overlap with |0⟩ rather than by energy order.
pub fn resonances(p: &NvParams, b_nv: &FieldVector) -> Result<ResonancePair, SpinError> {
    let (vals, vecs) = hamiltonian(p, b_nv).eigen();
    let overlaps: Vec<f64> = (0..3).map(|k| vecs[(1, k)].norm_sqr()).collect();
    let zero = (0..3)
        .max_by(|&a, &b| overlaps[a].total_cmp(&overlaps[b]))
        .unwrap();
    if overlaps[zero] < 0.5 {
        return Err(SpinError::StateMixingTooStrong);
    }
    let mut f: Vec<f64> = (0..3)
        .filter(|&k| k != zero)
        .map(|k| (vals[k] - vals[zero]).abs())
        .collect();
    f.sort_by(f64::total_cmp);
    Ok(ResonancePair::new(f[0], f[1]))
}

/// Orthonormal NV frame (x, y, z) in world coordinates.
///
/// z is the NV axis `unit_normal(axis_alpha_y, axis_alpha_z)`. The transverse
/// gauge puts x along the projection of world z onto the plane normal to the
/// axis (world x when the axis is parallel to world z).
pub fn nv_frame(p: &NvParams) -> [Vec3; 3] {
    let z = unit_normal(p.axis_alpha_y, p.axis_alpha_z).as_vec();
    let mut x = Vec3::z() - z * z.z;
    if x.norm() < 1e-9 {
        x = Vec3::x() - z * z.x;
    }
    let x = x.normalize();
    let y = z.cross(&x);
    [x, y, z]
}

pub fn world_to_nv_frame(b_world: &FieldVector, p: &NvParams) -> FieldVector {
    let [x, y, z] = nv_frame(p);
    let b = b_world.as_vec();
    FieldVector::new(b.dot(&x), b.dot(&y), b.dot(&z))
}
