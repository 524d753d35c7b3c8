use std::fs;
use std::path::Path;

use orbit_core::env::Instance;
use orbit_core::harness::{
    emit, fit_loglog_slope, read_rep_csv, read_summary_csv, regret_account, rep_path, run,
    simulate, ExperimentConfig, ExperimentKindName, HorizonContext, Phase, PolicyKind, RepSeeds,
    REP_HEADER,
};
use orbit_core::seed::{Purpose, SeedStream};
use rand::Rng;

fn tuned(policy: PolicyKind, horizons: Vec<u64>, reps: usize) -> ExperimentConfig {
    ExperimentConfig {
        experiment: ExperimentKindName::LinearIid,
        policy,
        horizons,
        repetitions: reps,
        c_w_multiplier: 0.01,
        c_eta: 2.0,
        eta_grid: 0.25,
        m0: 0.5,
        ..ExperimentConfig::default()
    }
}

/// Best price on a 1e-4 grid; independent of the library oracle.
fn brute_best(inst: &Instance, u: f64) -> f64 {
    let n = (inst.p_max / 1e-4).round() as usize;
    (0..=n)
        .map(|k| inst.revenue(u, k as f64 * 1e-4))
        .fold(0.0, f64::max)
}

/// Mean per-round gap of uniform pricing: contexts by Monte Carlo, the
/// price average by the trapezoid rule.
fn uniform_gap(inst: &Instance, samples: usize) -> f64 {
    let (lo, hi) = inst.index_interval;
    let m = 400;
    let gap_at: Vec<f64> = (0..=m)
        .map(|i| {
            let u = lo + (hi - lo) * i as f64 / m as f64;
            let n = 3500;
            let avg = (0..=n)
                .map(|k| {
                    let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                    w * inst.revenue(u, inst.p_max * k as f64 / n as f64)
                })
                .sum::<f64>()
                / n as f64;
            brute_best(inst, u) - avg
        })
        .collect();
    let mut rng = SeedStream::new(77, 0).rng(Purpose::Auxiliary);
    let mut total = 0.0;
    for _ in 0..samples {
        let u = inst.index(&inst.contexts.sample(&mut rng));
        let s = ((u - lo) / (hi - lo) * m as f64).clamp(0.0, m as f64);
        let i = (s.floor() as usize).min(m - 1);
        let f = s - i as f64;
        total += gap_at[i] * (1.0 - f) + gap_at[i + 1] * f;
    }
    total / samples as f64
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in walk(dir) {
        out.push((
            entry.strip_prefix(dir).unwrap().display().to_string(),
            fs::read(&entry).unwrap(),
        ));
    }
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            files.extend(walk(&path));
        } else {
            files.push(path);
        }
    }
    files
}

#[test]
fn uniform_regret_matches_the_monte_carlo_gap() {
    let t = 3000;
    let config = tuned(PolicyKind::UniformRandom, vec![t], 5);
    let ctx = HorizonContext::new(&config, t).unwrap();
    let gap = uniform_gap(&ctx.instance, 100_000);
    let summary = run(&config).unwrap();
    let med = summary.horizons[0].median;
    let lo = 0.5 * t as f64 * gap;
    let hi = 1.0 * t as f64 * gap;
    assert!(med >= lo && med <= hi, "median {med} outside [{lo}, {hi}]");
}

#[test]
fn adaptive_policy_beats_uniform_pricing_per_round() {
    let t = 3000;
    let config = tuned(PolicyKind::OrbitAdaptive, vec![t], 3);
    let ctx = HorizonContext::new(&config, t).unwrap();
    let gap = uniform_gap(&ctx.instance, 20_000);
    let summary = run(&config).unwrap();
    let per_round = summary.horizons[0].median / t as f64;
    assert!(per_round < gap, "{per_round} vs uniform {gap}");
}

#[test]
fn cumulative_regret_is_monotone_and_phases_are_consistent() {
    for policy in [
        PolicyKind::OrbitAdaptive,
        PolicyKind::ExploreThenOrbitLasso,
        PolicyKind::UniformRandom,
    ] {
        let config = tuned(policy, vec![2000], 1);
        let ctx = HorizonContext::new(&config, 2000).unwrap();
        let out = ctx.run_repetition(&config, 0, true).unwrap();
        assert_eq!(out.records.len(), 2000);
        let mut prev = 0.0;
        for (k, r) in out.records.iter().enumerate() {
            assert_eq!(r.t, k as u64 + 1);
            assert!(r.inst_regret >= 0.0);
            assert!(r.cum_regret >= prev);
            assert!((r.cum_regret - prev - r.inst_regret).abs() < 1e-9);
            prev = r.cum_regret;
            assert!(r.price >= 0.0 && r.price <= ctx.instance.p_max);
            match r.phase {
                Phase::Coarse | Phase::Refine => assert!(r.bin.is_some() && r.u_tilde.is_some()),
                Phase::PilotExplore | Phase::Burnin => assert!(r.bin.is_none()),
            }
        }
        assert_eq!(out.final_regret, prev);
        let orbit_rounds = out
            .records
            .iter()
            .filter(|r| matches!(r.phase, Phase::Coarse | Phase::Refine))
            .count();
        assert_eq!(orbit_rounds as u64, out.orbit_rounds);
        assert_eq!(out.explore_rounds + out.orbit_rounds, 2000);
        if policy == PolicyKind::ExploreThenOrbitLasso {
            let burnin: Vec<_> = out
                .records
                .iter()
                .filter(|r| r.phase == Phase::Burnin)
                .collect();
            assert_eq!(burnin.len() as u64, ctx.settings.n_exp);
            let burnin_regret: f64 = burnin.iter().map(|r| r.inst_regret).sum();
            assert!(burnin_regret <= ctx.instance.p_max * ctx.settings.n_exp as f64);
            // The burn-in comes first.
            assert!(out.records[..burnin.len()]
                .iter()
                .all(|r| r.phase == Phase::Burnin));
        }
    }
}

#[test]
fn orbit_seed_does_not_change_exploration() {
    let config = tuned(PolicyKind::OrbitAdaptive, vec![4000], 1);
    let ctx = HorizonContext::new(&config, 4000).unwrap();
    let seeds = RepSeeds::from_stream(&SeedStream::new(config.master_seed, 0));
    let a = simulate(&ctx.instance, &ctx.table, &ctx.settings, seeds, 0, true).unwrap();
    let other = RepSeeds {
        orbit: seeds.orbit ^ 0xdead_beef,
        ..seeds
    };
    let b = simulate(&ctx.instance, &ctx.table, &ctx.settings, other, 0, true).unwrap();
    let explore = |o: &orbit_core::harness::RepetitionOutput| {
        o.records
            .iter()
            .map(|r| (r.phase == Phase::PilotExplore, r.u.to_bits()))
            .collect::<Vec<_>>()
    };
    assert_eq!(explore(&a), explore(&b));
    // The refinement draws do differ.
    let prices = |o: &orbit_core::harness::RepetitionOutput| {
        o.records
            .iter()
            .map(|r| r.price.to_bits())
            .collect::<Vec<_>>()
    };
    assert_ne!(prices(&a), prices(&b));
}

#[test]
fn orbit_clock_counts_only_orbit_rounds() {
    let config = tuned(PolicyKind::OrbitAdaptive, vec![3000], 1);
    let ctx = HorizonContext::new(&config, 3000).unwrap();
    let out = ctx.run_repetition(&config, 0, true).unwrap();
    assert!(out.explore_rounds > 0 && out.orbit_rounds > 0);
    // Replaying the ORBIT rounds alone through a fresh policy reproduces the
    // coarse/refine phase of every round: exploration never touched its clock.
    let seeds = RepSeeds::from_stream(&SeedStream::new(config.master_seed, 0));
    let mut state = orbit_core::orbit::OrbitState::new(
        ctx.settings.orbit_for_budget(3000),
        ctx.instance.index_interval,
        ctx.instance.p_max,
        seeds.orbit,
    )
    .unwrap();
    for r in out
        .records
        .iter()
        .filter(|r| matches!(r.phase, Phase::Coarse | Phase::Refine))
    {
        let p = state.propose(r.u_tilde.unwrap()).unwrap();
        assert_eq!(p.bin, r.bin.unwrap());
        assert_eq!(p.phase.as_str(), r.phase.as_str());
        state.observe(r.purchase).unwrap();
    }
    assert_eq!(state.calls(), out.orbit_rounds);
}

#[test]
fn emitted_files_are_reproducible_and_consistent() {
    let mut config = tuned(PolicyKind::OrbitAdaptive, vec![1000, 2000, 4000], 3);
    config.master_seed = 5;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let summary = emit(&config, a.path()).unwrap();
    emit(&config, b.path()).unwrap();
    assert_eq!(read_dir_bytes(a.path()), read_dir_bytes(b.path()));

    let first = fs::read_to_string(rep_path(a.path(), &config, 1000, 0)).unwrap();
    assert_eq!(first.lines().next().unwrap(), REP_HEADER);
    let rows = read_summary_csv(&a.path().join("summary.csv")).unwrap();
    assert_eq!(rows.len(), 3);
    for (h, (t, med)) in summary.horizons.iter().zip(&rows) {
        assert_eq!(*t, h.horizon as f64);
        let finals: Vec<f64> = (0..3)
            .map(|k| {
                read_rep_csv(&rep_path(a.path(), &config, h.horizon, k))
                    .unwrap()
                    .last()
                    .unwrap()
                    .cum_regret
            })
            .collect();
        assert_eq!(median(finals), *med);
    }
    let meta = fs::read_to_string(a.path().join("meta.txt")).unwrap();
    assert!(meta.contains("c_w_multiplier"));
    assert!(meta.contains("median"));
    let fit = fit_loglog_slope(&rows).unwrap();
    assert!(fit.slope.is_finite());
}

#[test]
fn repetitions_use_distinct_streams() {
    let config = tuned(PolicyKind::UniformRandom, vec![500], 2);
    let ctx = HorizonContext::new(&config, 500).unwrap();
    let a = ctx.run_repetition(&config, 0, true).unwrap();
    let b = ctx.run_repetition(&config, 1, true).unwrap();
    let again = ctx.run_repetition(&config, 0, true).unwrap();
    assert_eq!(a.records, again.records);
    assert_ne!(a.records, b.records);
}

#[test]
fn regret_accounting_examples() {
    let config = tuned(PolicyKind::UniformRandom, vec![100], 1);
    let ctx = HorizonContext::new(&config, 100).unwrap();
    let (inst, table) = (&ctx.instance, &ctx.table);
    let u = table.grid()[137];
    assert!(regret_account(inst, table, u, table.values()[137]) < 1e-9);
    let r0 = regret_account(inst, table, u, 0.0);
    assert!((r0 - inst.revenue(u, table.values()[137])).abs() < 1e-12);
    let mut rng = SeedStream::new(1, 0).rng(Purpose::Auxiliary);
    for _ in 0..200 {
        let u = rng.random_range(1.0..3.0);
        let p = rng.random_range(0.0..3.5);
        let exact = inst.revenue(u, inst.oracle_price(u).unwrap()) - inst.revenue(u, p);
        let res = table.resolution();
        assert!(
            (regret_account(inst, table, u, p) - exact.max(0.0)).abs() <= 4.0 * res * res + 1e-9
        );
    }
}

#[test]
fn configuration_errors_are_reported() {
    let bad = [
        "policy = \"uniform_random\"\nT = 10\n",
        "experiment = \"linear_iid\"\npolicy = \"uniform_random\"\nT = 0\n",
        "experiment = \"linear_iid\"\npolicy = \"uniform_random\"\nT = 10\nbogus = 1\n",
        "experiment = \"linear_iid\"\npolicy = \"nope\"\nT = 10\n",
        "experiment = \"linear_iid\"\npolicy = \"uniform_random\"\nT = 10\nbeta = 1.5\n",
        "experiment = \"linear_iid\"\npolicy = \"uniform_random\"\nT = 10\nhorizons = [10]\n",
        "experiment = \"custom\"\npolicy = \"uniform_random\"\nT = 10\n",
        "experiment = \"linear_iid\"\npolicy = \"explore_then_orbit_lasso\"\nT = 3\n",
    ];
    for text in bad {
        let err = ExperimentConfig::from_toml_str(text)
            .and_then(|c| c.validate().map(|_| c))
            .unwrap_err();
        assert!(err.is_configuration(), "{text:?}: {err}");
    }
    let good = ExperimentConfig::from_toml_str("experiment = \"sparse\"\npolicy = \"orbit_adaptive\"\nhorizons = [100, 200]\nd = 8\ns = 2\n").unwrap();
    good.validate().unwrap();
    assert_eq!(good.horizons, vec![100, 200]);
    let dir = tempfile::tempdir().unwrap();
    let mut zero = tuned(PolicyKind::UniformRandom, vec![0], 1);
    zero.write_transcripts = true;
    assert!(emit(&zero, dir.path()).unwrap_err().is_configuration());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn slope_fit_examples() {
    let ts = [3e3, 1e4, 3e4, 1e5];
    let lin: Vec<(f64, f64)> = ts.iter().map(|&t| (t, 2.0 * t)).collect();
    assert!((fit_loglog_slope(&lin).unwrap().slope - 1.0).abs() < 1e-12);
    let p: Vec<(f64, f64)> = ts.iter().map(|&t| (t, 0.7 * t.powf(0.6))).collect();
    let fit = fit_loglog_slope(&p).unwrap();
    assert!((fit.slope - 0.6).abs() < 1e-12 && (fit.r_squared - 1.0).abs() < 1e-12);
    assert!(fit_loglog_slope(&lin[..2]).is_err());
    assert!(fit_loglog_slope(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
}
