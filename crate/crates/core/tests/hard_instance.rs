use orbit_core::hard_instance::{
    baseline_tail, bump_phi, default_delta, hard_instance_report, HardFamily, HardFamilyParams,
};
use orbit_core::seed::{Purpose, SeedStream};
use orbit_core::verify::{concavity_radius, quadratic_growth_scan};
use proptest::prelude::*;
use rand::Rng;

fn omega(m: usize, rng: &mut impl Rng) -> Vec<i8> {
    (0..m)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect()
}

fn family(t: f64, kappa: f64) -> HardFamily {
    let mut p = HardFamilyParams::new(2.0, t);
    p.kappa = kappa;
    HardFamily::new(p).unwrap()
}

#[test]
fn zero_amplitude_gives_zero_shift() {
    let f = family(1e10, 0.0);
    let mut rng = SeedStream::new(1, 0).rng(Purpose::Auxiliary);
    for s in f.shift_check(&omega(f.m(), &mut rng)).unwrap() {
        assert!(s.ratio.abs() < 1e-9, "j = {}: {}", s.j, s.ratio);
    }
}

#[test]
fn flipping_one_sign_moves_only_that_price() {
    let f = family(1e10, 0.05);
    let mut rng = SeedStream::new(2, 0).rng(Purpose::Auxiliary);
    let base = omega(f.m(), &mut rng);
    let before = f.shift_check(&base).unwrap();
    let k = 6;
    let mut flipped = base.clone();
    flipped[k] = -flipped[k];
    let after = f.shift_check(&flipped).unwrap();
    for (b, a) in before.iter().zip(&after) {
        if b.j == k + 1 {
            let s_before = b.price - b.baseline_price;
            let s_after = a.price - a.baseline_price;
            assert!(s_before.signum() == -s_after.signum());
            // The bump is odd but the baseline is only linear near each
            // context, so the two magnitudes agree up to a small relative gap.
            assert!(
                ((s_before + s_after) / s_before).abs() < 0.05,
                "{s_before} vs {s_after}"
            );
        } else {
            assert!((a.price - b.price).abs() <= 1e-10, "j = {}", b.j);
        }
    }
}

#[test]
fn report_passes_on_random_sign_vectors() {
    let f = family(1e10, 0.05);
    let mut rng = SeedStream::new(3, 0).rng(Purpose::Auxiliary);
    let omegas: Vec<Vec<i8>> = (0..4).map(|_| omega(f.m(), &mut rng)).collect();
    let report = hard_instance_report(&f, &omegas).unwrap();
    assert!(report.passed(), "{}", report.to_text());
    assert_eq!(report.m, 15);
    assert!(report.ratio_min > 0.0 && report.ratio_max < 10.0 * report.ratio_min);
    assert!(report.to_text().contains("passed = true"));
    assert!(hard_instance_report(&f, &[]).is_err());
    assert!(f.shift_check(&[1, -1]).is_err());
}

#[test]
fn growth_constants_are_bounded_across_sign_vectors() {
    let f = family(1e10, 0.05);
    let mut rng = SeedStream::new(4, 0).rng(Purpose::Auxiliary);
    let mut sigmas = Vec::new();
    let mut ls = Vec::new();
    for _ in 0..5 {
        let inst = f.centered_instance(&omega(f.m(), &mut rng)).unwrap();
        let g = quadratic_growth_scan(&inst, 40, 400).unwrap();
        assert!(g.sigma > 0.0 && g.sigma <= g.l);
        sigmas.push(g.sigma);
        ls.push(g.l);
    }
    // The baseline revenue has curvature 2/B; the bumps move it slightly.
    let b = 31.0 / 32.0;
    for (s, l) in sigmas.iter().zip(&ls) {
        assert!(*s > 0.5 * 2.0 / b && *l < 2.0 * 2.0 / b, "sigma {s}, L {l}");
    }
}

#[test]
fn concavity_radius_meets_the_normalization_floor() {
    let f = family(1e5, 0.01);
    assert!((f.w() - 0.01).abs() < 1e-15);
    let mut rng = SeedStream::new(5, 0).rng(Purpose::Auxiliary);
    let inst = f.centered_instance(&omega(f.m(), &mut rng)).unwrap();
    let g = quadratic_growth_scan(&inst, 20, 400).unwrap();
    let rho = concavity_radius(&inst, g.sigma).expect("a positive radius");
    assert!(rho >= 1.0 / 32.0, "rho0 = {rho}");
}

#[test]
fn valuations_stay_in_the_unit_strip() {
    let f = family(1e10, 0.05);
    let mut rng = SeedStream::new(6, 0).rng(Purpose::Auxiliary);
    let inst = f.centered_instance(&omega(f.m(), &mut rng)).unwrap();
    for _ in 0..10_000 {
        let x = inst.contexts.sample(&mut rng);
        let v = inst.index(&x) + inst.tail.sample_noise(&mut rng).unwrap();
        assert!(v >= 2.0 * f.w() - 1e-9 && v <= 1.0 + 1e-9);
    }
}

#[test]
fn baseline_rejects_infeasible_shoulders() {
    assert!(baseline_tail(0.01, default_delta(0.01)).is_ok());
    assert!(baseline_tail(0.01, 0.2).unwrap_err().is_configuration());
    assert!(HardFamily::new(HardFamilyParams::new(1.5, 1e5))
        .unwrap_err()
        .is_configuration());
}

#[test]
fn large_amplitude_breaks_monotonicity() {
    let f = family(1e10, 1e4);
    let err = f.perturbed_tail(&vec![1; f.m()]).unwrap_err();
    assert!(err.to_string().contains("kappa"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mean_is_independent_of_the_signs(seed in 0u64..10_000) {
        let f = family(1e10, 0.05);
        let mut rng = SeedStream::new(seed, 0).rng(Purpose::Auxiliary);
        let m = f.mean(&omega(f.m(), &mut rng)).unwrap();
        prop_assert!((m - f.mu0()).abs() <= 1e-8);
    }

    #[test]
    fn bump_is_odd_and_supported(t in -0.5f64..0.5) {
        prop_assert_eq!(bump_phi(-t), -bump_phi(t));
        if t.abs() >= 0.125 {
            prop_assert_eq!(bump_phi(t), 0.0);
        }
    }
}
