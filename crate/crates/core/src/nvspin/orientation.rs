use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::cubic::cubic_splitting;
use super::SpinError;
use crate::lsq::{levenberg_marquardt, LmOptions, LmReport};

/// One trajectory sample: field direction angles set by the robot and the
/// (normalised) resonance splitting measured there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub alpha_y_b: f64,
    pub alpha_z_b: f64,
    pub splitting: f64,
}

/// Fitted NV axis orientation. Angles are reported in [0, π); an axis and
/// its negation are indistinguishable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientationFit {
    pub alpha_y_nv: f64,
    pub alpha_z_nv: f64,
    /// Effective constant field magnitude of the normalised data (T).
    pub b_fit: f64,
    pub sigma_alpha_y: f64,
    pub sigma_alpha_z: f64,
    pub sigma_b: f64,
    /// Hz.
    pub residual_rms: f64,
    pub notes: Vec<String>,
}

/// Multi-start grid size per angle.
pub const MULTISTART_GRID: usize = 12;

/// Column-scaled Jacobian condition ratio below which the fit is degenerate.
const DEGENERACY_RATIO: f64 = 1e-7;

/// `γ = arccos(|cos(α_z^B − α_z^NV) cos(α_y^B − α_y^NV)|)`
pub fn field_nv_angle(alpha_y_b: f64, alpha_z_b: f64, alpha_y_nv: f64, alpha_z_nv: f64) -> f64 {
    ((alpha_z_b - alpha_z_nv).cos() * (alpha_y_b - alpha_y_nv).cos())
        .abs()
        .min(1.0)
        .acos()
}

fn wrap_pi(a: f64) -> f64 {
    let r = a.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Least-squares fit of (α_y^NV, α_z^NV, B) to normalised splittings.
///
/// The model splitting comes from the characteristic cubic at angle `γ(i)`
/// and constant field `B`. Starts on a 12×12 angle grid over [0, π)² and
/// keeps the lowest-cost solution.
pub fn fit_orientation(
    points: &[TrajectoryPoint],
    d: f64,
    pi: f64,
    gamma_e: f64,
) -> Result<OrientationFit, SpinError> {
    if points.len() < 4 {
        return Err(SpinError::InsufficientData {
            needed: 4,
            got: points.len(),
        });
    }
    let max_split = points.iter().map(|p| p.splitting).fold(0.0, f64::max);
    if !(max_split > 0.0) {
        return Err(SpinError::DegenerateFit("no positive splittings".into()));
    }

    // parameters: [alpha_y (rad), alpha_z (rad), B (mT)]
    let residuals = |p: &[f64]| -> Vec<f64> {
        let beta = gamma_e * p[2].abs() * 1e-3;
        points
            .iter()
            .map(|pt| {
                let g = field_nv_angle(pt.alpha_y_b, pt.alpha_z_b, p[0], p[1]);
                match cubic_splitting(d, pi, beta, g) {
                    Ok(s) => (s - pt.splitting) * 1e-6,
                    Err(_) => 1e6,
                }
            })
            .collect()
    };
    let opts = LmOptions {
        fd_steps: Some(vec![1e-7, 1e-7, 1e-7]),
        max_iterations: 300,
        ..LmOptions::default()
    };

    // |B| from the largest splitting assuming near alignment, plus a larger guess
    let b0 = max_split / (2.0 * gamma_e) * 1e3;
    let mut best: Option<LmReport> = None;
    for i in 0..MULTISTART_GRID {
        for j in 0..MULTISTART_GRID {
            let ay = (i as f64 + 0.5) * PI / MULTISTART_GRID as f64;
            let az = (j as f64 + 0.5) * PI / MULTISTART_GRID as f64;
            for &bs in &[b0, 2.0 * b0] {
                let rep = levenberg_marquardt(residuals, &[ay, az, bs], &opts);
                if best.as_ref().is_none_or(|b| rep.cost < b.cost) {
                    best = Some(rep);
                }
            }
        }
    }
    let rep = best.expect("grid is non-empty");
    if !rep.cost.is_finite() {
        return Err(SpinError::DegenerateFit("non-finite cost".into()));
    }

    let jac = &rep.jacobian;
    let mut scaled = jac.clone();
    for c in 0..scaled.ncols() {
        let n = jac.column(c).norm();
        if n == 0.0 {
            return Err(SpinError::DegenerateFit(format!(
                "parameter {c} has no influence on the residuals"
            )));
        }
        scaled.column_mut(c).scale_mut(1.0 / n);
    }
    let sv = scaled.singular_values();
    if sv.min() / sv.max() < DEGENERACY_RATIO {
        return Err(SpinError::DegenerateFit(
            "flat residual landscape (angles not identifiable)".into(),
        ));
    }

    let n = points.len() as f64;
    let residual_rms = (rep.cost / n).sqrt() * 1e6;
    let (sa, sz, sb) = match rep.covariance() {
        Some(cov) => (
            cov[(0, 0)].max(0.0).sqrt(),
            cov[(1, 1)].max(0.0).sqrt(),
            cov[(2, 2)].max(0.0).sqrt() * 1e-3,
        ),
        None => (f64::NAN, f64::NAN, f64::NAN),
    };
    let mut notes = vec![
        "axis defined modulo pi in each angle; the axis and its negation give identical splittings"
            .to_string(),
    ];
    if rep.params[2] < 0.0 {
        notes.push("field parameter converged negative; reported magnitude".into());
    }
    if points.len() == 3 {
        notes.push("no residual degrees of freedom".into());
    }
    Ok(OrientationFit {
        alpha_y_nv: wrap_pi(rep.params[0]),
        alpha_z_nv: wrap_pi(rep.params[1]),
        b_fit: rep.params[2].abs() * 1e-3,
        sigma_alpha_y: sa,
        sigma_alpha_z: sz,
        sigma_b: sb,
        residual_rms,
        notes,
    })
}

/// Noise-free normalised splittings for a trajectory at constant |B|.
pub fn synthesize_trajectory(
    angles: &[(f64, f64)],
    alpha_y_nv: f64,
    alpha_z_nv: f64,
    b: f64,
    d: f64,
    pi: f64,
    gamma_e: f64,
) -> Result<Vec<TrajectoryPoint>, SpinError> {
    angles
        .iter()
        .map(|&(ay, az)| {
            let g = field_nv_angle(ay, az, alpha_y_nv, alpha_z_nv);
            Ok(TrajectoryPoint {
                alpha_y_b: ay,
                alpha_z_b: az,
                splitting: cubic_splitting(d, pi, gamma_e * b, g)?,
            })
        })
        .collect()
}

/// Smallest angular distance between two angles modulo π.
pub fn angle_diff_mod_pi(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}
