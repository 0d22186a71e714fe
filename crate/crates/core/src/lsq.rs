//! Small dense Levenberg-Marquardt solver for problems with a handful of
//! parameters. Jacobians are taken by central finite differences.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative reduction of the cost falls below this.
    pub ftol: f64,
    /// Stop when the relative parameter step falls below this.
    pub xtol: f64,
    pub initial_lambda: f64,
    /// Per-parameter finite-difference steps; `None` uses `1e-6 * max(|p|, 1e-3)`.
    pub fd_steps: Option<Vec<f64>>,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            ftol: 1e-14,
            xtol: 1e-12,
            initial_lambda: 1e-3,
            fd_steps: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LmReport {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Jacobian at the solution (rows = residuals).
    pub jacobian: DMatrix<f64>,
}

impl LmReport {
    /// Parameter covariance `s² (JᵀJ)⁻¹` with `s² = cost / (n − p)`.
    /// `None` when JᵀJ is singular or there are no degrees of freedom.
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        let n = self.residuals.len();
        let p = self.params.len();
        if n <= p {
            return None;
        }
        let jtj = self.jacobian.transpose() * &self.jacobian;
        let inv = jtj.try_inverse()?;
        Some(inv * (self.cost / (n - p) as f64))
    }

    /// Ratio of smallest to largest singular value of the Jacobian.
    pub fn jacobian_condition_ratio(&self) -> f64 {
        let sv = self.jacobian.clone().singular_values();
        let max = sv.max();
        if max == 0.0 {
            return 0.0;
        }
        sv.min() / max
    }
}

fn jacobian<F>(f: &F, p: &[f64], steps: &Option<Vec<f64>>, m: usize) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = p.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut work = p.to_vec();
    for j in 0..n {
        let h = steps
            .as_ref()
            .map(|s| s[j])
            .unwrap_or_else(|| 1e-6 * p[j].abs().max(1e-3));
        work[j] = p[j] + h;
        let fp = f(&work);
        work[j] = p[j] - h;
        let fm = f(&work);
        work[j] = p[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Minimises `Σ rᵢ(p)²` starting from `p0`.
pub fn levenberg_marquardt<F>(residuals: F, p0: &[f64], opts: &LmOptions) -> LmReport
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut p = p0.to_vec();
    let mut r = residuals(&p);
    let m = r.len();
    let mut cost = sum_sq(&r);
    let mut lambda = opts.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;
    let mut jac = jacobian(&residuals, &p, &opts.fd_steps, m);

    while iterations < opts.max_iterations {
        iterations += 1;
        if !cost.is_finite() {
            break;
        }
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &rv;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..a.nrows() {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-30);
            }
            let step = match a.clone().cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => match a.lu().solve(&(-&g)) {
                    Some(s) => s,
                    None => {
                        lambda *= 10.0;
                        continue;
                    }
                },
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rt = residuals(&trial);
            let ct = sum_sq(&rt);
            if ct.is_finite() && ct < cost {
                let rel_f = (cost - ct) / cost.max(f64::MIN_POSITIVE);
                let pnorm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                let rel_x = step.norm() / (pnorm + opts.xtol);
                p = trial;
                r = rt;
                cost = ct;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel_f < opts.ftol || rel_x < opts.xtol || cost == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                break;
            }
        }
        if !improved {
            // no descent direction left: at a (local) minimum to working precision
            converged = cost.is_finite();
            break;
        }
        jac = jacobian(&residuals, &p, &opts.fd_steps, m);
        if converged {
            break;
        }
    }

    LmReport {
        params: p,
        residuals: r,
        cost,
        iterations,
        converged,
        jacobian: jac,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exponential_exactly() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let truth = [2.5, -0.7];
        let ys: Vec<f64> = xs.iter().map(|x| truth[0] * (truth[1] * x).exp()).collect();
        let f = |p: &[f64]| {
            xs.iter()
                .zip(ys.iter())
                .map(|(x, y)| p[0] * (p[1] * x).exp() - y)
                .collect::<Vec<_>>()
        };
        let rep = levenberg_marquardt(f, &[1.0, -0.1], &LmOptions::default());
        assert!(rep.converged);
        assert!((rep.params[0] - truth[0]).abs() < 1e-8);
        assert!((rep.params[1] - truth[1]).abs() < 1e-8);
    }

    #[test]
    fn rosenbrock_minimum() {
        let f = |p: &[f64]| vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]];
        let rep = levenberg_marquardt(f, &[-1.2, 1.0], &LmOptions::default());
        assert!((rep.params[0] - 1.0).abs() < 1e-6 && (rep.params[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn covariance_scales_with_noise() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| 3.0 * x + 1.0 + if i % 2 == 0 { 0.1 } else { -0.1 })
            .collect();
        let f = |p: &[f64]| {
            xs.iter()
                .zip(ys.iter())
                .map(|(x, y)| p[0] * x + p[1] - y)
                .collect::<Vec<_>>()
        };
        let rep = levenberg_marquardt(f, &[0.0, 0.0], &LmOptions::default());
        let cov = rep.covariance().unwrap();
        assert!(cov[(0, 0)] > 0.0 && cov[(1, 1)] > 0.0);
        assert!(rep.jacobian_condition_ratio() > 0.0);
    }
}
