use crate::error::{OrbitError, Result};

/// Coarse price grid `{k * eta} ∪ {p_max}`, ascending without duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceGrid {
    points: Vec<f64>,
    spacing: f64,
    p_max: f64,
}

pub fn build_grid(p_max: f64, eta_grid: f64) -> Result<PriceGrid> {
    if !(eta_grid > 0.0) {
        return Err(OrbitError::config(format!(
            "grid spacing {eta_grid} must be positive"
        )));
    }
    if !(p_max > 0.0) || eta_grid > p_max {
        return Err(OrbitError::config(format!(
            "grid spacing {eta_grid} must not exceed p_max = {p_max}"
        )));
    }
    let k_max = (p_max / eta_grid + 1e-9).floor() as usize;
    let mut points: Vec<f64> = (0..=k_max)
        .map(|k| k as f64 * eta_grid)
        .filter(|&p| p < p_max)
        .collect();
    let last = *points.last().expect("zero is always on the grid");
    if p_max - last <= 1e-9 * p_max && points.len() > 1 {
        points.pop();
    }
    points.push(p_max);
    Ok(PriceGrid {
        points,
        spacing: eta_grid,
        p_max,
    })
}

impl PriceGrid {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }
}
