//! Bulirsch's generalised complete elliptic integral.

use std::f64::consts::FRAC_PI_2;

const CEL_TOLERANCE: f64 = 1e-12;

/// `cel(kc, p, c, s) = ∫₀^{π/2} (c cos²φ + s sin²φ) / ((cos²φ + p sin²φ) √(cos²φ + kc² sin²φ)) dφ`
///
/// `kc` is the complementary modulus. Returns NaN for `kc == 0`.
pub fn cel(kc: f64, p: f64, c: f64, s: f64) -> f64 {
    if kc == 0.0 {
        return f64::NAN;
    }
    let mut k = kc.abs();
    let mut em = 1.0;
    let (mut pp, mut cc, mut ss);
    if p > 0.0 {
        pp = p.sqrt();
        cc = c;
        ss = s / pp;
    } else {
        let mut f = kc * kc;
        let mut q = 1.0 - f;
        let g = 1.0 - p;
        f -= p;
        q *= s - c * p;
        pp = (f / g).sqrt();
        cc = (c - s) / g;
        ss = -q / (g * g * pp) + cc * pp;
    }

    let mut f = cc;
    cc += ss / pp;
    let mut g = k / pp;
    ss = 2.0 * (ss + f * g);
    pp += g;
    g = em;
    em += k;
    let mut kk = k;
    for _ in 0..64 {
        if (g - k).abs() <= g * CEL_TOLERANCE {
            break;
        }
        k = 2.0 * kk.sqrt();
        kk = k * em;
        f = cc;
        cc += ss / pp;
        g = kk / pp;
        ss = 2.0 * (ss + f * g);
        pp += g;
        g = em;
        em += k;
    }
    FRAC_PI_2 * (ss + cc * em) / (em * (em + pp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Composite Simpson on the defining integral.
    fn cel_quadrature(kc: f64, p: f64, c: f64, s: f64) -> f64 {
        let n = 20_000;
        let h = FRAC_PI_2 / n as f64;
        let f = |phi: f64| {
            let (sn, cs) = phi.sin_cos();
            let (s2, c2) = (sn * sn, cs * cs);
            (c * c2 + s * s2) / ((c2 + p * s2) * (c2 + kc * kc * s2).sqrt())
        };
        let mut sum = f(0.0) + f(FRAC_PI_2);
        for i in 1..n {
            sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        sum * h / 3.0
    }

    #[test]
    fn unit_modulus_is_quarter_circle() {
        assert!((cel(1.0, 1.0, 1.0, 1.0) - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn complete_integrals_k_and_e() {
        // K(m=0.5) and E(m=0.5)
        let kc = 0.5_f64.sqrt();
        let k = cel(kc, 1.0, 1.0, 1.0);
        let e = cel(kc, 1.0, 1.0, kc * kc);
        assert!((k - 1.854_074_677_301_372).abs() < 1e-13, "{k}");
        assert!((e - 1.350_643_881_047_675_5).abs() < 1e-13, "{e}");
    }

    #[test]
    fn matches_quadrature() {
        for &(kc, p, c, s) in &[
            (0.3, 1.0, 1.0, -1.0),
            (0.7, 0.25, 1.0, 0.5),
            (0.9, 0.0, 1.0, 0.0),
            (0.05, 0.8, 1.0, 0.9),
        ] {
            let a = cel(kc, p, c, s);
            let b = cel_quadrature(kc, p, c, s);
            assert!(
                (a - b).abs() < 1e-9 * b.abs().max(1.0),
                "kc={kc} p={p}: {a} vs {b}"
            );
        }
        let _ = PI;
    }
}
