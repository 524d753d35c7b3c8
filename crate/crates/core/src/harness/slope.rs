use crate::error::{OrbitError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares of `ln regret` on `ln T`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(OrbitError::contract(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(t, r)) = points
        .iter()
        .find(|&&(t, r)| !(t > 0.0 && r > 0.0) || !t.is_finite() || !r.is_finite())
    {
        return Err(OrbitError::contract(format!(
            "log-log fit needs positive finite values, got ({t}, {r})"
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(OrbitError::contract(
            "slope fit needs at least two distinct horizons",
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
    })
}
