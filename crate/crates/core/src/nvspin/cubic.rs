//! Characteristic cubic of the NV spin energies.
//!
//! With `x = E − 2D/3` the spin-1 energies satisfy the depressed cubic
//!
//! ```text
//! x³ − (D²/3 + Π² + β²) x − (β²/2) D cos2γ − (D/6)(4Π² + β²) + 2D³/27 = 0
//! ```
//!
//! where `β = γe|B|` and `γ` is the angle between field and NV axis. Expanding
//! `det(H − E)` for the full Hamiltonian gives one extra constant term,
//! `−Π β² sin²γ cos2φ`, with `φ` the azimuth of the transverse field relative
//! to the strain axes. The cubic is therefore exact when `Π = 0` or when the
//! transverse field bisects the strain axes (`φ = 45°`), and otherwise
//! neglects that azimuthal term.

use std::f64::consts::PI;

use super::{ResonancePair, SpinError};

/// Relative discriminant tolerance before declaring complex roots.
const DISCRIMINANT_TOLERANCE: f64 = 1e-9;

/// Coefficients (p, q) of `x³ + p x + q`.
pub fn cubic_coefficients(d: f64, pi: f64, beta: f64, gamma_angle: f64) -> (f64, f64) {
    let b2 = beta * beta;
    let p = -(d * d / 3.0 + pi * pi + b2);
    let q = -(b2 / 2.0) * d * (2.0 * gamma_angle).cos() - (d / 6.0) * (4.0 * pi * pi + b2)
        + 2.0 * d * d * d / 27.0;
    (p, q)
}

/// Three real roots (ascending, Hz) of the characteristic cubic, by the
/// trigonometric method. Adding `2D/3` gives the spin energies.
pub fn characteristic_roots(
    d: f64,
    pi: f64,
    beta: f64,
    gamma_angle: f64,
) -> Result<[f64; 3], SpinError> {
    if !(beta >= 0.0) {
        return Err(SpinError::InvalidParameter("beta must be >= 0".into()));
    }
    let (p, q) = cubic_coefficients(d, pi, beta, gamma_angle);
    depressed_cubic_real_roots(p, q)
}

/// Real roots of `x³ + p x + q = 0` when all three are real.
pub fn depressed_cubic_real_roots(p: f64, q: f64) -> Result<[f64; 3], SpinError> {
    if p == 0.0 && q == 0.0 {
        return Ok([0.0; 3]);
    }
    let disc = 4.0 * p * p * p + 27.0 * q * q;
    let scale = (4.0 * p * p * p).abs() + 27.0 * q * q;
    if p >= 0.0 || disc > DISCRIMINANT_TOLERANCE * scale {
        return Err(SpinError::ComplexRoots);
    }
    let m = 2.0 * (-p / 3.0).sqrt();
    let arg = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
    let theta = arg.acos() / 3.0;
    let mut roots = [
        m * theta.cos(),
        m * (theta - 2.0 * PI / 3.0).cos(),
        m * (theta - 4.0 * PI / 3.0).cos(),
    ];
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

/// Resonances predicted by the cubic, taking the lowest level as ms = 0
/// (valid below the ground-state level anticrossing, β < D).
pub fn cubic_resonances(
    d: f64,
    pi: f64,
    beta: f64,
    gamma_angle: f64,
) -> Result<ResonancePair, SpinError> {
    let r = characteristic_roots(d, pi, beta, gamma_angle)?;
    Ok(ResonancePair::new(r[1] - r[0], r[2] - r[0]))
}

/// Splitting `f+ − f−` predicted by the cubic.
pub fn cubic_splitting(d: f64, pi: f64, beta: f64, gamma_angle: f64) -> Result<f64, SpinError> {
    let r = characteristic_roots(d, pi, beta, gamma_angle)?;
    Ok(r[2] - r[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: f64 = 2.8704e9;

    #[test]
    fn zero_field_roots() {
        let pi = 1.8515e6;
        let r = characteristic_roots(D, pi, 0.0, 0.3).unwrap();
        let expect = [-2.0 * D / 3.0, D / 3.0 - pi, D / 3.0 + pi];
        for (a, b) in r.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn even_in_gamma() {
        let a = characteristic_roots(D, 4e6, 9e7, 0.4).unwrap();
        let b = characteristic_roots(D, 4e6, 9e7, PI - 0.4).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn roots_satisfy_cubic() {
        let (p, q) = cubic_coefficients(D, 7e6, 1.3e8, 1.1);
        for x in characteristic_roots(D, 7e6, 1.3e8, 1.1).unwrap() {
            let val = x * x * x + p * x + q;
            assert!(val.abs() < 1e-12 * (x.abs().powi(3) + q.abs()));
        }
    }

    #[test]
    fn complex_roots_detected() {
        assert_eq!(
            depressed_cubic_real_roots(1.0, 1.0),
            Err(SpinError::ComplexRoots)
        );
        assert_eq!(
            depressed_cubic_real_roots(-3.0, 10.0),
            Err(SpinError::ComplexRoots)
        );
        assert!(depressed_cubic_real_roots(-3.0, 2.0).is_ok()); // double root at 1
    }

    #[test]
    fn negative_beta_rejected() {
        assert!(characteristic_roots(D, 0.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn secular_limit_splitting() {
        let beta = 28.02495e9 * 3e-3;
        let s = cubic_splitting(D, 0.0, beta, 0.0).unwrap();
        assert!((s - 2.0 * beta).abs() < 1e-9 * 2.0 * beta);
    }
}
