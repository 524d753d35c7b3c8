use std::collections::BTreeMap;

use super::RevenueCurve;
use crate::error::{OrbitError, Result};
use crate::orbit::poly_price;

/// One refinement round of a transcript.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineRow {
    pub bin: usize,
    pub u: f64,
    pub u_tilde: f64,
    pub price: f64,
}

/// Geometry of a refined bin: the price map's expansion point and the
/// implemented trust region.
#[derive(Debug, Clone, PartialEq)]
pub struct BinGeometry {
    pub bin: usize,
    pub midpoint: f64,
    pub bar_h: f64,
    pub center: Vec<f64>,
    pub radius: f64,
}

/// `realized = r_approx + r_learn` against one comparator coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct BinDecomposition {
    pub bin: usize,
    pub rounds: usize,
    pub realized: f64,
    pub r_approx: f64,
    pub r_learn: f64,
    /// Best fixed coefficient over the l1 trust region.
    pub comparator: Vec<f64>,
    /// Approximation term of the best coefficient over the larger set
    /// `sup_{|z|<=1} |(a - a_ctr)' psi(z)| <= radius`.
    pub r_approx_sup_set: f64,
}

/// Splits each bin's refinement regret at the best fixed coefficient found
/// on a coordinate grid of spacing `radius/50`.
pub fn refinement_decomposition<C: RevenueCurve + ?Sized>(
    rows: &[RefineRow],
    curve: &C,
    bins: &[BinGeometry],
) -> Result<Vec<BinDecomposition>> {
    let mut grouped: BTreeMap<usize, Vec<RefineRow>> = BTreeMap::new();
    for row in rows {
        if !bins.iter().any(|b| b.bin == row.bin) {
            return Err(OrbitError::contract(format!(
                "row attributed to unknown bin {}",
                row.bin
            )));
        }
        grouped.entry(row.bin).or_default().push(*row);
    }
    let p_max = curve.p_max();
    let mut out = Vec::new();
    for (bin, rows) in grouped {
        let geo = bins.iter().find(|b| b.bin == bin).expect("checked above");
        let optimal: Vec<f64> = rows
            .iter()
            .map(|r| curve.revenue(r.u, curve.oracle_price(r.u)))
            .collect();
        let realized: f64 = rows
            .iter()
            .zip(&optimal)
            .map(|(r, o)| o - curve.revenue(r.u, r.price))
            .sum();
        let total = |a: &[f64]| -> f64 {
            rows.iter()
                .map(|r| {
                    curve.revenue(
                        r.u,
                        poly_price(geo.midpoint, geo.bar_h, a, r.u_tilde).clamp(0.0, p_max),
                    )
                })
                .sum()
        };
        let l1_ok =
            |off: &[f64]| off.iter().map(|x| x.abs()).sum::<f64>() <= geo.radius * (1.0 + 1e-12);
        let (l1_best, l1_value) = grid_search(geo, &total, 50, l1_ok);
        // For degree one the two sets coincide.
        let sup_value = if geo.center.len() <= 2 {
            l1_value
        } else {
            let sup_ok = |off: &[f64]| {
                (0..=200).all(|k| {
                    let z = -1.0 + k as f64 / 100.0;
                    off.iter().rev().fold(0.0, |acc, &c| acc * z + c).abs()
                        <= geo.radius * (1.0 + 1e-12)
                })
            };
            // Coefficients of a polynomial bounded by r on [-1, 1] are at
            // most 2^(q-1) r in magnitude.
            let span = 50 * (1i64 << (geo.center.len() - 2));
            grid_search(geo, &total, span, sup_ok).1
        };
        let best_total: f64 = optimal.iter().sum();
        let r_approx = best_total - l1_value;
        let r_learn = realized - r_approx;
        out.push(BinDecomposition {
            bin,
            rounds: rows.len(),
            realized,
            r_approx,
            r_learn,
            comparator: l1_best,
            r_approx_sup_set: best_total - sup_value,
        });
    }
    Ok(out)
}

/// Maximizes `total` over center offsets `radius/50 * k`, `|k_i| <= span`,
/// restricted by `feasible`.
fn grid_search<F, G>(geo: &BinGeometry, total: &F, span: i64, feasible: G) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> bool,
{
    let dim = geo.center.len();
    let step = geo.radius / 50.0;
    let mut idx = vec![-span; dim];
    let mut best = (geo.center.clone(), total(&geo.center));
    let mut off = vec![0.0; dim];
    let mut a = vec![0.0; dim];
    loop {
        for k in 0..dim {
            off[k] = idx[k] as f64 * step;
        }
        if feasible(&off) {
            for k in 0..dim {
                a[k] = geo.center[k] + off[k];
            }
            let v = total(&a);
            if v > best.1 {
                best = (a.clone(), v);
            }
        }
        let mut k = 0;
        loop {
            if k == dim {
                return best;
            }
            idx[k] += 1;
            if idx[k] > span {
                idx[k] = -span;
                k += 1;
            } else {
                break;
            }
        }
    }
}
