use serde::{Deserialize, Serialize};

use super::cubic::cubic_resonances;
use super::SpinError;
use crate::lsq::{levenberg_marquardt, LmOptions};

/// Field magnitude (T) and polar angle to the NV axis (rad, in [0, π/2]).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarField {
    pub b_magnitude: f64,
    pub theta: f64,
}

/// Round-trip tolerance on reproduced resonances (Hz).
const ROUND_TRIP_TOLERANCE: f64 = 1e3;

/// Recovers (|B|, θ) from a pair of resonances using the characteristic cubic.
///
/// The three cubic roots are fixed by the resonances (they sum to zero), so
/// Vieta's relations give β² from the linear coefficient and cos 2θ from the
/// constant term. The estimate is then polished by a bounded least-squares
/// solve on the forward model and accepted only if it reproduces both
/// resonances within 1 kHz.
pub fn polar_angle_from_resonances(
    f_minus: f64,
    f_plus: f64,
    d: f64,
    pi: f64,
    gamma_e: f64,
) -> Result<PolarField, SpinError> {
    if !(f_plus >= f_minus) || !(f_minus > 0.0) {
        return Err(SpinError::InvalidParameter(
            "require f_plus >= f_minus > 0".into(),
        ));
    }
    let x1 = -(f_minus + f_plus) / 3.0;
    let x2 = x1 + f_minus;
    let x3 = x1 + f_plus;
    let e2 = x1 * x2 + x1 * x3 + x2 * x3;
    let beta2 = -e2 - d * d / 3.0 - pi * pi;
    let tol_b2 = 1e-9 * d * d;
    if beta2 < -tol_b2 {
        return Err(SpinError::NoConsistentField);
    }
    let beta2 = beta2.max(0.0);
    let q = -x1 * x2 * x3;
    let cos2 = if beta2 > 0.0 {
        (2.0 * d * d * d / 27.0 - (d / 6.0) * (4.0 * pi * pi + beta2) - q) * 2.0 / (beta2 * d)
    } else {
        1.0
    };
    if !cos2.is_finite() || cos2.abs() > 1.0 + 1e-3 {
        return Err(SpinError::NoConsistentField);
    }
    let mut b = beta2.sqrt() / gamma_e;
    let mut theta = 0.5 * cos2.clamp(-1.0, 1.0).acos();

    let residual = |b: f64, theta: f64| -> Option<[f64; 2]> {
        let r = cubic_resonances(
            d,
            pi,
            gamma_e * b.max(0.0),
            theta.clamp(0.0, std::f64::consts::FRAC_PI_2),
        )
        .ok()?;
        Some([r.f_minus - f_minus, r.f_plus - f_plus])
    };
    let worst = |r: [f64; 2]| r[0].abs().max(r[1].abs());

    let initial = residual(b, theta).map(worst).unwrap_or(f64::INFINITY);
    if initial > 1.0 && b > 0.0 {
        // polish in scaled units: field in mT, angle in rad
        let f = |p: &[f64]| match residual(p[0] * 1e-3, p[1]) {
            Some(r) => vec![r[0] * 1e-6, r[1] * 1e-6],
            None => vec![1e12, 1e12],
        };
        let rep = levenberg_marquardt(
            f,
            &[b * 1e3, theta],
            &LmOptions {
                fd_steps: Some(vec![1e-7, 1e-7]),
                ..LmOptions::default()
            },
        );
        let (nb, nt) = (
            rep.params[0].max(0.0) * 1e-3,
            rep.params[1].clamp(0.0, std::f64::consts::FRAC_PI_2),
        );
        if residual(nb, nt).map(worst).unwrap_or(f64::INFINITY) < initial {
            b = nb;
            theta = nt;
        }
    }
    let r = residual(b, theta).ok_or(SpinError::NoConsistentField)?;
    if worst(r) > ROUND_TRIP_TOLERANCE {
        return Err(SpinError::NoConsistentField);
    }
    Ok(PolarField {
        b_magnitude: b,
        theta,
    })
}

/// `ν_n(i) = ν(i) / |B(i)| · max|B|`
pub fn normalize_splittings(
    splittings: &[f64],
    b_magnitudes: &[f64],
) -> Result<Vec<f64>, SpinError> {
    if splittings.len() != b_magnitudes.len() {
        return Err(SpinError::InvalidParameter(
            "splittings and magnitudes differ in length".into(),
        ));
    }
    if b_magnitudes.iter().any(|b| !(*b > 0.0)) {
        return Err(SpinError::ZeroMagnitude);
    }
    let max = b_magnitudes.iter().cloned().fold(0.0, f64::max);
    Ok(splittings
        .iter()
        .zip(b_magnitudes)
        .map(|(nu, b)| nu * (max / b))
        .collect())
}
