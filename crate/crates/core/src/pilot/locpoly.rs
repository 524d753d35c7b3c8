use nalgebra::{DMatrix, DVector};

use super::offline::BurninDataset;
use crate::error::{OrbitError, Result};

const JITTER: f64 = 1e-8;
/// Bandwidth doublings tried after an empty window.
pub const MAX_WIDENINGS: usize = 4;

/// Multi-indices of total degree at most `degree` in `d` variables.
pub fn multi_indices(d: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0; d];
    fn rec(pos: usize, left: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == current.len() {
            out.push(current.clone());
            return;
        }
        for k in 0..=left {
            current[pos] = k;
            rec(pos + 1, left - k, current, out);
        }
        current[pos] = 0;
    }
    rec(0, degree, &mut current, &mut out);
    // Constant term first so the intercept is coefficient 0.
    out.sort_by_key(|a| a.iter().sum::<usize>());
    out
}

/// Intercept of the least-squares polynomial fit in `(x - x0)/b` over the
/// samples with `|x - x0|_inf <= b`, uniform weights.
///
/// Windows with fewer than `(degree+1)^d` samples fall back to the local
/// mean; an empty window is [`OrbitError::NoData`].
pub fn locpoly_fit(data: &BurninDataset, x0: &[f64], bandwidth: f64, degree: usize) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(OrbitError::config(format!(
            "bandwidth {bandwidth} must be positive"
        )));
    }
    if x0.len() != data.dim() {
        return Err(OrbitError::contract("query point has the wrong dimension"));
    }
    let d = data.dim();
    let mut local: Vec<(Vec<f64>, f64)> = Vec::new();
    for (x, &z) in data.contexts().iter().zip(data.responses()) {
        if x.iter().zip(x0).all(|(a, b)| (a - b).abs() <= bandwidth) {
            local.push((
                x.iter().zip(x0).map(|(a, b)| (a - b) / bandwidth).collect(),
                z,
            ));
        }
    }
    if local.is_empty() {
        return Err(OrbitError::NoData);
    }
    let needed = (degree + 1).checked_pow(d as u32).unwrap_or(usize::MAX);
    if local.len() < needed || degree == 0 {
        return Ok(local.iter().map(|(_, z)| z).sum::<f64>() / local.len() as f64);
    }
    let basis = multi_indices(d, degree);
    let k = basis.len();
    let mut normal = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::zeros(k);
    let mut phi = vec![0.0; k];
    for (v, z) in &local {
        for (p, alpha) in phi.iter_mut().zip(&basis) {
            *p = alpha
                .iter()
                .zip(v)
                .map(|(&a, &x)| x.powi(a as i32))
                .product();
        }
        for i in 0..k {
            rhs[i] += phi[i] * z;
            for j in 0..k {
                normal[(i, j)] += phi[i] * phi[j];
            }
        }
    }
    for i in 0..k {
        normal[(i, i)] += JITTER;
    }
    let coef = normal
        .cholesky()
        .ok_or_else(|| {
            OrbitError::Numerical("local normal matrix is not positive definite".into())
        })?
        .solve(&rhs);
    Ok(coef[0])
}

/// [`locpoly_fit`] with the bandwidth doubled after each empty window, up
/// to [`MAX_WIDENINGS`] times.
pub fn locpoly_predict(
    data: &BurninDataset,
    x0: &[f64],
    bandwidth: f64,
    degree: usize,
) -> Result<f64> {
    let mut b = bandwidth;
    for attempt in 0..=MAX_WIDENINGS {
        match locpoly_fit(data, x0, b, degree) {
            Err(OrbitError::NoData) if attempt < MAX_WIDENINGS => b *= 2.0,
            other => return other,
        }
    }
    Err(OrbitError::NoData)
}

/// Bandwidth `(ln T / n)^{1/(2 gamma + d)}`.
pub fn default_bandwidth(gamma: f64, d: usize, t: u64, n: usize) -> f64 {
    ((t as f64).ln() / n as f64).powf(1.0 / (2.0 * gamma + d as f64))
}

/// Degree `ceil(gamma) - 1`.
pub fn default_degree(gamma: f64) -> usize {
    (gamma.ceil() as usize).saturating_sub(1)
}
