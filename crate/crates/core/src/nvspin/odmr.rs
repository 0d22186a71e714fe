use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::hamiltonian::resonances;
use super::{NvParams, ResonancePair, SpinError};
use crate::lsq::{levenberg_marquardt, LmOptions};
use crate::magnetostatics::FieldVector;

/// Normalised photoluminescence versus microwave frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdmrSpectrum {
    /// Hz.
    pub frequencies: Vec<f64>,
    /// 1 off resonance, dips below.
    pub contrast: Vec<f64>,
    pub noise_sigma: f64,
}

/// Lorentzian of unit height and full width at half maximum `fwhm`.
pub fn lorentzian(f: f64, center: f64, fwhm: f64) -> f64 {
    let hw = 0.5 * fwhm;
    hw * hw / ((f - center).powi(2) + hw * hw)
}

/// Two Lorentzian dips at the resonances of `p` in field `b_nv`, plus
/// optional Gaussian noise drawn from `rng`.
pub fn odmr_spectrum<R: Rng + ?Sized>(
    p: &NvParams,
    b_nv: &FieldVector,
    linewidth: f64,
    contrast_depth: f64,
    grid: &[f64],
    noise_sigma: f64,
    rng: &mut R,
) -> Result<OdmrSpectrum, SpinError> {
    if !(linewidth > 0.0) {
        return Err(SpinError::InvalidParameter("linewidth must be > 0".into()));
    }
    if !(contrast_depth > 0.0 && contrast_depth < 1.0) {
        return Err(SpinError::InvalidParameter(
            "contrast depth must be in (0, 1)".into(),
        ));
    }
    if !(noise_sigma >= 0.0) {
        return Err(SpinError::InvalidParameter(
            "noise sigma must be >= 0".into(),
        ));
    }
    let r = resonances(p, b_nv)?;
    let noise = Normal::new(0.0, noise_sigma.max(f64::MIN_POSITIVE)).expect("sigma is positive");
    let contrast = grid
        .iter()
        .map(|&f| {
            let clean = 1.0
                - contrast_depth
                    * (lorentzian(f, r.f_minus, linewidth) + lorentzian(f, r.f_plus, linewidth));
            if noise_sigma > 0.0 {
                clean + noise.sample(rng)
            } else {
                clean
            }
        })
        .collect();
    Ok(OdmrSpectrum {
        frequencies: grid.to_vec(),
        contrast,
        noise_sigma,
    })
}

/// Fitted resonances with 1σ uncertainties (Hz).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceFit {
    pub pair: ResonancePair,
    pub sigma_minus: f64,
    pub sigma_plus: f64,
    /// Only one dip could be resolved; `f_minus == f_plus`.
    pub merged: bool,
    pub linewidth: f64,
    pub depths: [f64; 2],
    pub baseline: f64,
    pub residual_rms: f64,
}

fn smoothed(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            v[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Indices of local minima of `v`, deepest first.
fn local_minima(v: &[f64]) -> Vec<usize> {
    let n = v.len();
    let mut mins: Vec<usize> = (0..n)
        .filter(|&i| (i == 0 || v[i] <= v[i - 1]) && (i + 1 == n || v[i] < v[i + 1]))
        .collect();
    mins.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    mins
}

/// Full width at half depth of the dip at index `k`, from the smoothed curve.
fn half_depth_width(f: &[f64], v: &[f64], k: usize, baseline: f64) -> f64 {
    let half = baseline - 0.5 * (baseline - v[k]);
    let mut lo = k;
    while lo > 0 && v[lo] < half {
        lo -= 1;
    }
    let mut hi = k;
    while hi + 1 < v.len() && v[hi] < half {
        hi += 1;
    }
    (f[hi] - f[lo]).max(f[1.min(f.len() - 1)] - f[0])
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Double-Lorentzian least-squares fit with a shared linewidth.
///
/// Initial centres come from the two deepest local minima of the lightly
/// smoothed spectrum. A second minimum shallower than half the first, or
/// closer than half a linewidth, is treated as a single merged dip.
pub fn fit_resonances(spectrum: &OdmrSpectrum) -> Result<ResonanceFit, SpinError> {
    let f = &spectrum.frequencies;
    let y = &spectrum.contrast;
    let n = f.len();
    if n < 8 || y.len() != n {
        return Err(SpinError::InvalidParameter(
            "spectrum needs >= 8 points of equal length".into(),
        ));
    }
    let f0 = f[0];
    let span = f[n - 1] - f0;
    if !(span > 0.0) {
        return Err(SpinError::InvalidParameter(
            "frequencies must increase".into(),
        ));
    }
    // normalised frequency coordinate u in [0, 1]
    let u: Vec<f64> = f.iter().map(|x| (x - f0) / span).collect();
    let sm = smoothed(y);
    let baseline = median(y.clone());
    let mins = local_minima(&sm);
    let first = *mins.first().ok_or(SpinError::FitDiverged)?;
    let depth1 = baseline - sm[first];
    if !(depth1 > 0.0) {
        return Err(SpinError::FitDiverged);
    }
    let width = half_depth_width(&u, &sm, first, baseline);
    let second = mins
        .iter()
        .copied()
        .skip(1)
        .find(|&k| (u[k] - u[first]).abs() > 0.5 * width && baseline - sm[k] > 0.5 * depth1);

    let model2 = |p: &[f64], x: f64| {
        p[0] * (1.0 - p[3] * lorentzian(x, p[1], p[5]) - p[4] * lorentzian(x, p[2], p[5]))
    };
    let model1 = |p: &[f64], x: f64| p[0] * (1.0 - p[2] * lorentzian(x, p[1], p[3]));
    let opts = LmOptions {
        fd_steps: None,
        max_iterations: 400,
        ..LmOptions::default()
    };

    let (merged, params, report) = match second {
        Some(k2) => {
            let (a, b) = if u[first] < u[k2] {
                (first, k2)
            } else {
                (k2, first)
            };
            let p0 = [
                baseline,
                u[a],
                u[b],
                baseline - sm[a],
                baseline - sm[b],
                width,
            ];
            let res = |p: &[f64]| {
                u.iter()
                    .zip(y)
                    .map(|(&x, &yy)| model2(p, x) - yy)
                    .collect::<Vec<_>>()
            };
            let rep = levenberg_marquardt(res, &p0, &opts);
            (false, rep.params.clone(), rep)
        }
        None => {
            let p0 = [baseline, u[first], depth1, width];
            let res = |p: &[f64]| {
                u.iter()
                    .zip(y)
                    .map(|(&x, &yy)| model1(p, x) - yy)
                    .collect::<Vec<_>>()
            };
            let rep = levenberg_marquardt(res, &p0, &opts);
            (true, rep.params.clone(), rep)
        }
    };
    if !report.converged || params.iter().any(|v| !v.is_finite()) {
        return Err(SpinError::FitDiverged);
    }
    let cov = report.covariance();
    let sig = |i: usize| {
        cov.as_ref()
            .map(|c| c[(i, i)].max(0.0).sqrt() * span)
            .unwrap_or(f64::NAN)
    };
    let residual_rms = (report.cost / n as f64).sqrt();

    let fit = if merged {
        let c = f0 + params[1] * span;
        ResonanceFit {
            pair: ResonancePair::new(c, c),
            sigma_minus: sig(1),
            sigma_plus: sig(1),
            merged: true,
            linewidth: params[3].abs() * span,
            depths: [params[2], params[2]],
            baseline: params[0],
            residual_rms,
        }
    } else {
        let (c1, c2) = (f0 + params[1] * span, f0 + params[2] * span);
        let (lo, hi, s_lo, s_hi, d_lo, d_hi) = if c1 <= c2 {
            (c1, c2, sig(1), sig(2), params[3], params[4])
        } else {
            (c2, c1, sig(2), sig(1), params[4], params[3])
        };
        ResonanceFit {
            pair: ResonancePair::new(lo, hi),
            sigma_minus: s_lo,
            sigma_plus: s_hi,
            merged: false,
            linewidth: params[5].abs() * span,
            depths: [d_lo, d_hi],
            baseline: params[0],
            residual_rms,
        }
    };
    let in_range = |x: f64| x >= f[0] && x <= f[n - 1];
    if !in_range(fit.pair.f_minus) || !in_range(fit.pair.f_plus) {
        return Err(SpinError::FitDiverged);
    }
    Ok(fit)
}

/// Evenly spaced frequency grid, inclusive of both ends.
pub fn linear_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![start];
    }
    let step = (stop - start) / (points - 1) as f64;
    (0..points).map(|i| start + step * i as f64).collect()
}
