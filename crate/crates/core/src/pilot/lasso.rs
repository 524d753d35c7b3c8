use super::offline::BurninDataset;
use crate::error::{OrbitError, Result};

pub const KKT_TOL: f64 = 1e-8;
pub const MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub theta: Vec<f64>,
    pub lambda: f64,
    pub sweeps: usize,
    pub kkt_residual: f64,
}

/// `C_lambda * p_max * sqrt(ln(d T) / n)`.
pub fn default_lambda(c_lambda: f64, p_max: f64, d: usize, t: u64, n: usize) -> f64 {
    c_lambda * p_max * ((d as f64 * t as f64).ln().max(0.0) / n as f64).sqrt()
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

/// Minimizes `(1/n) sum (Z - x'theta)^2 + lambda |theta|_1` by cyclic
/// coordinate descent on the Gram matrix. Features are not standardized.
pub fn lasso_fit(data: &BurninDataset, lambda: f64) -> Result<LassoFit> {
    let n = data.len();
    if n == 0 {
        return Err(OrbitError::contract("lasso needs at least one sample"));
    }
    if !(lambda >= 0.0) {
        return Err(OrbitError::config(format!(
            "lambda = {lambda} must be nonnegative"
        )));
    }
    let d = data.dim();
    let mut gram = vec![0.0; d * d];
    let mut corr = vec![0.0; d];
    for (x, &z) in data.contexts().iter().zip(data.responses()) {
        for i in 0..d {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            corr[i] += xi * z;
            let row = &mut gram[i * d..(i + 1) * d];
            for (g, &xj) in row.iter_mut().zip(x) {
                *g += xi * xj;
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    gram.iter_mut().for_each(|g| *g *= inv_n);
    corr.iter_mut().for_each(|c| *c *= inv_n);
    lasso_gram(&gram, &corr, lambda)
}

/// Coordinate descent on `theta' G theta - 2 c' theta + lambda |theta|_1`.
pub fn lasso_gram(gram: &[f64], corr: &[f64], lambda: f64) -> Result<LassoFit> {
    let d = corr.len();
    let mut theta = vec![0.0; d];
    // g_theta = G theta, kept current as coordinates move.
    let mut g_theta = vec![0.0; d];
    let mut residual = kkt_residual(gram, corr, &theta, &g_theta, lambda);
    for sweep in 1..=MAX_SWEEPS {
        for k in 0..d {
            let gkk = gram[k * d + k];
            let new = if gkk <= 0.0 {
                0.0
            } else {
                let partial = corr[k] - (g_theta[k] - gkk * theta[k]);
                soft_threshold(partial, lambda / 2.0) / gkk
            };
            let delta = new - theta[k];
            if delta != 0.0 {
                theta[k] = new;
                for (gt, &g) in g_theta.iter_mut().zip(&gram[k * d..(k + 1) * d]) {
                    *gt += delta * g;
                }
            }
        }
        residual = kkt_residual(gram, corr, &theta, &g_theta, lambda);
        if residual <= KKT_TOL {
            // Refresh G theta from scratch so drift cannot fake convergence.
            for (i, gt) in g_theta.iter_mut().enumerate() {
                *gt = gram[i * d..(i + 1) * d]
                    .iter()
                    .zip(&theta)
                    .map(|(a, b)| a * b)
                    .sum();
            }
            residual = kkt_residual(gram, corr, &theta, &g_theta, lambda);
            if residual <= KKT_TOL {
                return Ok(LassoFit {
                    theta,
                    lambda,
                    sweeps: sweep,
                    kkt_residual: residual,
                });
            }
        }
    }
    Err(OrbitError::Convergence {
        iterations: MAX_SWEEPS,
        residual,
    })
}

/// Largest violation of the subgradient optimality conditions.
fn kkt_residual(gram: &[f64], corr: &[f64], theta: &[f64], g_theta: &[f64], lambda: f64) -> f64 {
    let d = corr.len();
    (0..d)
        .map(|k| {
            let grad = 2.0 * (g_theta[k] - corr[k]);
            if gram[k * d + k] <= 0.0 {
                0.0
            } else if theta[k] != 0.0 {
                (grad + lambda * theta[k].signum()).abs()
            } else {
                (grad.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};

    fn dataset(rows: &[(&[f64], f64)]) -> BurninDataset {
        let mut d = BurninDataset::new(rows[0].0.len(), f64::INFINITY);
        for (x, z) in rows {
            d.push_unchecked(x.to_vec(), *z);
        }
        d
    }

    #[test]
    fn zero_penalty_is_least_squares() {
        let rows: [(&[f64], f64); 3] = [
            (&[1.0, 2.0, 0.5], 1.0),
            (&[0.0, 1.0, -1.0], -2.0),
            (&[3.0, 0.5, 1.0], 0.5),
        ];
        let fit = lasso_fit(&dataset(&rows), 0.0).unwrap();
        let x = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.5, 0.0, 1.0, -1.0, 3.0, 0.5, 1.0]);
        let z = DVector::from_column_slice(&[1.0, -2.0, 0.5]);
        let direct = x.lu().solve(&z).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(fit.theta[k], direct[k], epsilon = 1e-6);
        }
    }

    #[test]
    fn one_dimensional_soft_threshold() {
        // Empirical second moment 1 and correlation rho = 0.6.
        let rows: [(&[f64], f64); 2] = [(&[1.0], 0.9), (&[-1.0], -0.3)];
        let data = dataset(&rows);
        for &lambda in &[0.0, 0.4, 1.0, 1.5] {
            let fit = lasso_fit(&data, lambda).unwrap();
            assert_abs_diff_eq!(
                fit.theta[0],
                soft_threshold(0.6, lambda / 2.0),
                epsilon = 1e-12
            );
            assert!(fit.kkt_residual <= 1e-8);
        }
    }
}
