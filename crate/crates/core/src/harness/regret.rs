use crate::env::{Instance, OraclePriceTable};

/// Raw regret below this is more than interpolation slack and gets counted
/// by the simulation as a tolerance violation.
pub const REGRET_SLACK: f64 = -1e-6;

/// `r(u, p*(u)) - r(u, price)` with `p*(u)` read off the table, unclamped.
pub fn regret_raw(instance: &Instance, table: &OraclePriceTable, u: f64, price: f64) -> f64 {
    let best = table.price(u);
    instance.revenue(u, best) - instance.revenue(u, price)
}

/// Instantaneous regret against the tabulated oracle, clamped at zero.
///
/// Posting a price closer to the true maximizer than the interpolated table
/// value gives a tiny negative raw regret; that slack is absorbed here.
pub fn regret_account(instance: &Instance, table: &OraclePriceTable, u: f64, price: f64) -> f64 {
    regret_raw(instance, table, u, price)
        .max(REGRET_SLACK)
        .max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_experiment_instance, ExperimentKind};
    use crate::seed::{Purpose, SeedStream};
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_point_and_zero_price() {
        let mut rng = SeedStream::new(1, 0).rng(Purpose::Parameters);
        let inst = make_experiment_instance(ExperimentKind::SphereIid, 3, &mut rng).unwrap();
        let table = OraclePriceTable::build(&inst, 0.01).unwrap();
        let u = table.grid()[37];
        let p = table.values()[37];
        assert_abs_diff_eq!(regret_account(&inst, &table, u, p), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(
            regret_account(&inst, &table, u, 0.0),
            inst.revenue(u, p),
            epsilon = 1e-15
        );
    }
}
