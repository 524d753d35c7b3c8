use orbit_core::bco::{l1_norm, l1_project, BcoParams, RefinementGenerator};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn generator(center: Vec<f64>, radius: f64, seed: u64) -> RefinementGenerator {
    RefinementGenerator::new(center, radius, 1.0, BcoParams::default(), seed).unwrap()
}

#[test]
fn l1_projection_examples() {
    assert_eq!(l1_project(&[0.2, -0.3], 1.0), vec![0.2, -0.3]);
    let p = l1_project(&[2.0, 0.0], 1.0);
    assert_eq!(p, vec![1.0, 0.0]);
    let p = l1_project(&[1.0, 1.0], 1.0);
    assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    let p = l1_project(&[3.0, -1.0, 0.5], 1.0);
    assert!((p[0] - 1.0).abs() < 1e-15 && p[1] == 0.0 && p[2] == 0.0);
}

#[test]
fn actions_are_feasible_over_many_trials() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..40 {
        let dim = 1 + trial % 4;
        let center: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let radius = rng.random_range(0.01..0.5);
        let mut g = generator(center.clone(), radius, trial as u64);
        for _ in 0..500 {
            let a = g.next_action();
            let off: Vec<f64> = a.iter().zip(&center).map(|(x, c)| x - c).collect();
            assert!(l1_norm(&off) <= radius * (1.0 + 1e-12));
            g.update_feedback(-rng.random::<f64>()).unwrap();
        }
    }
}

#[test]
fn schedule_parameters_follow_the_epoch_length() {
    let mut g = generator(vec![0.0, 0.0], 1.0, 1);
    let mut seen = 0;
    while g.epoch() < 8 {
        let n = g.epoch_length() as f64;
        assert_eq!(g.epoch_length(), 1u64 << g.epoch());
        let expected = 0.25f64.min(n.powf(-0.25)).min(0.5 / 2f64.sqrt());
        assert!((g.smoothing_radius() - expected).abs() < 1e-15);
        assert!((g.step_size() - n.powf(-0.75)).abs() < 1e-15);
        g.next_action();
        g.update_feedback(-0.5).unwrap();
        seen += 1;
    }
    assert_eq!(seen, 255);
    assert_eq!(g.history_len(), 255);
}

#[test]
fn converges_on_a_noisy_quadratic() {
    let target = [0.3, -0.2];
    let mut noise = ChaCha8Rng::seed_from_u64(17);
    let mut g = generator(vec![0.0, 0.0], 1.0, 3);
    // Stop one step before epoch 15 ends, so the iterate has run a full epoch.
    for _ in 0..(1u64 << 16) - 2 {
        let a = g.next_action();
        let k = 0.4 * ((a[0] - target[0]).powi(2) + (a[1] - target[1]).powi(2));
        let y = (k + noise.random_range(-0.1..0.1)).clamp(0.0, 1.0);
        g.update_feedback(y - 1.0).unwrap();
    }
    assert_eq!(g.epoch(), 15);
    let x = g.raw_iterate();
    let err = ((x[0] - target[0]).powi(2) + (x[1] - target[1]).powi(2)).sqrt();
    assert!(err < 0.1, "iterate {x:?}, distance {err}");
}

#[test]
fn linear_loss_regret_is_sublinear() {
    // Shifted loss 0.5 + 0.5 <v, x> over the unit l1 ball; the best point is
    // a signed vertex with value 0.5 - 0.5 |v|_inf.
    let v = [0.6, -0.9, 0.3];
    let best = 0.5 - 0.5 * 0.9;
    for seed in 0..5 {
        let mut g = generator(vec![0.0; 3], 1.0, seed);
        let n = (1u64 << 13) - 1;
        let mut regret = 0.0;
        for _ in 0..n {
            let x = g.next_action();
            let f = 0.5 + 0.5 * x.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
            regret += f - best;
            g.update_feedback(f - 1.0).unwrap();
        }
        let bound = 5.0 * (n as f64).powf(0.75);
        assert!(regret <= bound, "seed {seed}: regret {regret} > {bound}");
    }
}

#[test]
fn rejects_bad_parameters() {
    let bad = BcoParams {
        delta_cap: 1.0,
        ..BcoParams::default()
    };
    assert!(RefinementGenerator::new(vec![0.0], 1.0, 1.0, bad, 0)
        .unwrap_err()
        .is_configuration());
    let bad = BcoParams {
        step_scale: 0.0,
        ..BcoParams::default()
    };
    assert!(RefinementGenerator::new(vec![0.0], 1.0, 1.0, bad, 0)
        .unwrap_err()
        .is_configuration());
    assert!(RefinementGenerator::new(vec![], 1.0, 1.0, BcoParams::default(), 0).is_err());
    let mut g = generator(vec![0.0], 1.0, 0);
    g.next_action();
    assert!(g.update_feedback(f64::NAN).is_err());
}

#[test]
fn same_seed_same_actions() {
    let run = |seed| {
        let mut g = generator(vec![1.0, 0.0], 0.1, seed);
        (0..300)
            .map(|k| {
                let a = g.next_action();
                g.update_feedback(-((k % 7) as f64) / 7.0).unwrap();
                a
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5), run(6));
}

proptest! {
    #[test]
    fn projection_lands_in_the_ball_and_is_idempotent(v in prop::collection::vec(-5.0f64..5.0, 1..6),
                                                      r in 0.01f64..3.0) {
        let p = l1_project(&v, r);
        prop_assert!(l1_norm(&p) <= r * (1.0 + 1e-12));
        let q = l1_project(&p, r);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        if l1_norm(&v) <= r {
            prop_assert_eq!(p, v);
        }
    }

    #[test]
    fn projection_is_the_nearest_point(v in prop::collection::vec(-3.0f64..3.0, 2..4),
                                       w in prop::collection::vec(-1.0f64..1.0, 4)) {
        let p = l1_project(&v, 1.0);
        let mut other: Vec<f64> = w[..v.len()].to_vec();
        let n = l1_norm(&other);
        if n > 1.0 {
            other.iter_mut().for_each(|x| *x /= n);
        }
        let dist = |a: &[f64]| a.iter().zip(&v).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        prop_assert!(dist(&p) <= dist(&other) + 1e-12);
    }
}
