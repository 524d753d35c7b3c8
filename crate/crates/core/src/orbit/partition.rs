use crate::error::{OrbitError, Result};

/// Equal-width bins tiling the index interval. Bins are half-open except the
/// last, which is closed. Bin indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct BinPartition {
    u_min: f64,
    u_max: f64,
    m: usize,
    bar_h: f64,
    target_h: f64,
}

/// `M = ceil((u_max - u_min) / h)` bins of exact width `(u_max - u_min) / M`.
pub fn build_bins(u_min: f64, u_max: f64, target_h: f64) -> Result<BinPartition> {
    if !(u_min < u_max) {
        return Err(OrbitError::config(format!(
            "index interval [{u_min}, {u_max}] is empty"
        )));
    }
    if !(target_h > 0.0 && target_h <= 1.0) {
        return Err(OrbitError::config(format!(
            "bin width {target_h} must lie in (0, 1]"
        )));
    }
    let width = u_max - u_min;
    // The small slack stops exact divisions from rounding up an extra bin.
    let m = ((width / target_h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok(BinPartition {
        u_min,
        u_max,
        m,
        bar_h: width / m as f64,
        target_h,
    })
}

impl BinPartition {
    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn bar_h(&self) -> f64 {
        self.bar_h
    }

    pub fn target_h(&self) -> f64 {
        self.target_h
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.u_min, self.u_max)
    }

    pub fn midpoint(&self, j: usize) -> f64 {
        self.u_min + (j as f64 + 0.5) * self.bar_h
    }

    /// `[left, right]` edges of bin `j`.
    pub fn edges(&self, j: usize) -> (f64, f64) {
        let left = self.u_min + j as f64 * self.bar_h;
        let right = if j + 1 == self.m {
            self.u_max
        } else {
            left + self.bar_h
        };
        (left, right)
    }

    pub fn assign(&self, u_tilde: f64) -> Result<usize> {
        if !(u_tilde >= self.u_min && u_tilde <= self.u_max) {
            return Err(OrbitError::contract(format!(
                "pilot value {u_tilde} outside [{}, {}]",
                self.u_min, self.u_max
            )));
        }
        let j = ((u_tilde - self.u_min) / self.bar_h).floor() as usize;
        Ok(j.min(self.m - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn bin_counts() {
        let p = build_bins(1.0, 3.0, 0.25).unwrap();
        assert_eq!(p.len(), 8);
        assert_abs_diff_eq!(p.bar_h(), 0.25);
        let p = build_bins(1.0, 3.0, 0.3).unwrap();
        assert_eq!(p.len(), 7);
        assert_abs_diff_eq!(p.bar_h(), 2.0 / 7.0);
        let p = build_bins(0.0, 1.0, 1.0).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.assign(1.0).unwrap(), 0);
        assert_eq!(build_bins(1.0, 3.0, 0.1).unwrap().len(), 20);
        assert!(build_bins(1.0, 3.0, 0.0).unwrap_err().is_configuration());
        assert!(build_bins(1.0, 3.0, -0.5).unwrap_err().is_configuration());
    }

    #[test]
    fn assignment_examples() {
        let p = build_bins(1.0, 3.0, 0.25).unwrap();
        assert_eq!(p.assign(1.0).unwrap(), 0);
        assert_eq!(p.assign(3.0).unwrap(), 7);
        assert_eq!(p.assign(1.25).unwrap(), 1);
        assert!(matches!(p.assign(3.0001), Err(OrbitError::Contract(_))));
        assert!(matches!(p.assign(0.5), Err(OrbitError::Contract(_))));
    }

    proptest! {
        #[test]
        fn assigned_bin_contains_the_point(h in 0.01f64..1.0, t in 0.0f64..=1.0) {
            let p = build_bins(1.0, 3.0, h).unwrap();
            prop_assert!(p.bar_h() <= h * (1.0 + 1e-12));
            let u = 1.0 + 2.0 * t;
            let j = p.assign(u).unwrap();
            let (l, r) = p.edges(j);
            prop_assert!(u >= l - 1e-12 && u <= r + 1e-12);
            if j + 1 < p.len() {
                prop_assert!(u < r + 1e-12);
            }
        }
    }
}
