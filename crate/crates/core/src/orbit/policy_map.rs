use crate::error::{OrbitError, Result};

/// Local polynomial price `sum_k a_k z^k` at `z = 2(u - mid)/bar_h`, with `z`
/// clamped to `[-1, 1]`.
pub fn poly_price(bin_midpoint: f64, bar_h: f64, a: &[f64], u_tilde: f64) -> f64 {
    let z = (2.0 * (u_tilde - bin_midpoint) / bar_h).clamp(-1.0, 1.0);
    a.iter().rev().fold(0.0, |acc, &c| acc * z + c)
}

/// Membership in the l1 trust region `|a - a_ctr|_1 <= radius`.
pub fn trust_region_membership(a_ctr: &[f64], trust_radius: f64, a: &[f64]) -> Result<bool> {
    if a_ctr.len() != a.len() {
        return Err(OrbitError::contract(format!(
            "coefficient length {} does not match the center length {}",
            a.len(),
            a_ctr.len()
        )));
    }
    let dist: f64 = a.iter().zip(a_ctr).map(|(x, c)| (x - c).abs()).sum();
    Ok(dist <= trust_radius * (1.0 + 1e-12))
}
