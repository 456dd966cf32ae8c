//! Property tests for the structural invariants of each module.

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::Rng;

use spinloc::glauber::{GlauberChain, SpinChain};
use spinloc::graphs::erdos_renyi;
use spinloc::io::{model_from_json, model_to_json, read_spin_rows, write_spin_row, ModelFile};
use spinloc::model::{build_antiferro, IsingModel};
use spinloc::oracle::{exact_distribution, exact_kernel, tv_distance, ChainKind};
use spinloc::rng::{chain_rng, rng_from_seed};
use spinloc::sphere::{OnConfig, OnGlauberChain, OnModel};
use spinloc::thresholds::{r_ising, solve_q_eta_ising, SolverOptions};
use spinloc::verify::random_small_model;
use spinloc::{FixedMagChain, PolarizedChain, WeightedIndexTree};

fn model(n: usize, gamma: f64, seed: u64) -> IsingModel {
    random_small_model(n, gamma, &mut rng_from_seed(seed))
}

fn simplex(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_map(|v| {
        let s: f64 = v.iter().sum::<f64>() + 1e-12;
        let mut p: Vec<f64> = v.iter().map(|x| x / s).collect();
        let rest = 1.0 - p.iter().sum::<f64>();
        p[0] += rest;
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn diagonal_shift_leaves_measure(seed in any::<u64>(), alpha in -2.0f64..5.0, n in 2usize..8) {
        let m = model(n, 0.0, seed);
        let a = exact_distribution(&m).unwrap();
        let b = exact_distribution(&m.clone().with_diagonal(alpha)).unwrap();
        for (p, q) in a.probabilities().iter().zip(b.probabilities()) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn antiferro_decomposition_is_exact(seed in any::<u64>(), beta in 0.0f64..0.5, n in 3usize..9) {
        let g = erdos_renyi(n, 0.5, seed).unwrap();
        let mut rng = rng_from_seed(seed);
        let h: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (m, _) = build_antiferro(&g, beta, h.clone(), 0.1).unwrap();
        let trip = g.edges().iter().map(|&(i, j)| (i, j, -beta)).collect();
        let raw = IsingModel::new(n, trip, h, 0.0, None).unwrap();
        let a = exact_distribution(&m).unwrap();
        let b = exact_distribution(&raw).unwrap();
        for (p, q) in a.probabilities().iter().zip(b.probabilities()) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn kernels_are_stochastic_and_stationary(
        seed in any::<u64>(),
        n in 2usize..7,
        gamma in prop_oneof![Just(0.0), 0.1f64..20.0],
    ) {
        let m = model(n, gamma, seed);
        let nu = exact_distribution(&m).unwrap();
        for kind in [ChainKind::Glauber, ChainKind::Polarized] {
            let k = exact_kernel(kind, &m).unwrap();
            prop_assert!(k.max_row_sum_error() < 1e-12);
            prop_assert!(k.stationarity_residual(nu.probabilities()) < 1e-12);
            prop_assert!(k.rows().iter().flatten().all(|e| e.1 >= 0.0));
        }
        let g = exact_kernel(ChainKind::Glauber, &m).unwrap();
        prop_assert!(g.detailed_balance_residual(nu.probabilities()) < 1e-14);
    }

    #[test]
    fn fixed_mag_kernel_on_slice(seed in any::<u64>(), n in 2usize..8, plus in 1usize..7) {
        let plus = plus.min(n - 1);
        let k = 2 * plus as i64 - n as i64;
        let m = model(n, 0.0, seed).with_magnetization(Some(k)).unwrap();
        let nu = exact_distribution(&m).unwrap();
        let ker = exact_kernel(ChainKind::FixedMag, &m).unwrap();
        prop_assert!(ker.states().iter().all(|s| s.count_ones() as usize == plus));
        prop_assert!(ker.max_row_sum_error() < 1e-12);
        prop_assert!(ker.stationarity_residual(nu.probabilities()) < 1e-12);
    }

    #[test]
    fn polarized_moves_are_local(seed in any::<u64>(), n in 2usize..7) {
        let m = model(n, 1.0, seed);
        let k = exact_kernel(ChainKind::Polarized, &m).unwrap();
        let states = k.states();
        for (r, row) in k.rows().iter().enumerate() {
            for &(t, _) in row {
                prop_assert!((states[r] ^ states[t]).count_ones() <= 2);
            }
        }
    }

    #[test]
    fn chains_keep_their_caches(seed in any::<u64>(), n in 3usize..12) {
        let m = model(n, 2.0, seed);
        let mut g = GlauberChain::all_minus(&m, chain_rng(seed, 0)).unwrap();
        let mut p = PolarizedChain::all_minus(&m, chain_rng(seed, 1)).unwrap();
        for _ in 0..2000 {
            g.step().unwrap();
            p.step().unwrap();
        }
        prop_assert!(g.config().max_cache_error(&m) < 1e-9);
        prop_assert!(p.config().max_cache_error(&m) < 1e-9);
        prop_assert!(p.check_invariants().is_ok());
        prop_assert!(p.log_weight_error() < 1e-8);
    }

    #[test]
    fn fixed_mag_stays_on_slice(seed in any::<u64>(), n in 2usize..12, plus in 1usize..11) {
        let plus = plus.min(n - 1);
        let m = model(n, 0.0, seed).with_magnetization(Some(2 * plus as i64 - n as i64)).unwrap();
        let mut c = FixedMagChain::first_sites_plus(&m, chain_rng(seed, 2)).unwrap();
        let mut ok = true;
        c.run(3000, 1, &mut |x| ok &= x.iter().filter(|&&s| s > 0).count() == plus).unwrap();
        prop_assert!(ok);
        prop_assert!(c.check_invariants().is_ok());
    }

    #[test]
    fn tv_triangle_inequality((p, q, r) in (2usize..32).prop_flat_map(|l| (simplex(l), simplex(l), simplex(l)))) {
        let pq = tv_distance(&p, &q).unwrap();
        let qr = tv_distance(&q, &r).unwrap();
        let pr = tv_distance(&p, &r).unwrap();
        prop_assert!(pr <= pq + qr + 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&pq));
        prop_assert!(tv_distance(&p, &p).unwrap() == 0.0);
    }

    #[test]
    fn tree_matches_shadow(ops in prop::collection::vec((0u8..3, 0usize..64, 0u32..100), 1..400)) {
        let mut t = WeightedIndexTree::new();
        let mut shadow: BTreeMap<usize, f64> = BTreeMap::new();
        for (op, key, w) in ops {
            let w = w as f64;
            match op {
                0 | 1 => {
                    t.update(key, w).unwrap();
                    shadow.insert(key, w);
                }
                _ => {
                    if shadow.remove(&key).is_some() {
                        t.delete(key).unwrap();
                    } else {
                        prop_assert!(t.delete(key).is_err());
                    }
                }
            }
            prop_assert!(t.check_invariants().is_ok());
            prop_assert_eq!(t.sum(), shadow.values().sum::<f64>());
        }
        let pairs: Vec<(usize, f64)> = shadow.iter().map(|(&k, &w)| (k, w)).collect();
        prop_assert_eq!(t.pairs(), pairs.clone());
        // every integer offset lands on the key whose interval holds it
        let mut before = 0.0;
        for (k, w) in pairs {
            if w > 0.0 {
                prop_assert_eq!(t.range_search(before).unwrap(), k);
                prop_assert_eq!(t.range_search(before + w - 1.0).unwrap(), k);
            }
            before += w;
        }
    }

    #[test]
    fn io_round_trips(seed in any::<u64>(), n in 1usize..10, gamma in 0.0f64..3.0) {
        let m = model(n, gamma, seed);
        let back = model_from_json(&model_to_json(&m)).unwrap();
        prop_assert_eq!(ModelFile::from(&back), ModelFile::from(&m));

        let mut rng = rng_from_seed(seed);
        let rows: Vec<Vec<i8>> = (0..5)
            .map(|_| (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
            .collect();
        let mut buf = Vec::new();
        for r in &rows {
            write_spin_row(&mut buf, r).unwrap();
        }
        prop_assert_eq!(read_spin_rows(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn on_spins_stay_unit(seed in any::<u64>(), n in 2usize..6, dim in 1usize..6) {
        let m = model(n, 0.0, seed);
        let on = OnModel::from_ising(&m, dim).unwrap();
        let mut c = OnGlauberChain::new(&on, OnConfig::aligned(&on), 1e-9, chain_rng(seed, 3)).unwrap();
        for _ in 0..500 {
            c.step().unwrap();
        }
        prop_assert!(c.config().max_norm_error() < 1e-12);
        prop_assert!(c.config().max_cache_error(&on) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn q_curve_is_increasing_and_solves_the_equation(eta in 0.05f64..1.0) {
        let opts = SolverOptions { z_max: 0.8, step: 1e-3, ..SolverOptions::default() };
        let c = solve_q_eta_ising(eta, opts).unwrap();
        prop_assert!(c.values.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(c.integral.windows(2).all(|w| w[1] >= w[0]));

        // q(z) − r(ηz) − ∫₀^z q², the integral by the trapezoid rule
        let mut sq = 0.0;
        let mut worst: f64 = 0.0;
        for k in 0..c.grid.len() {
            if k > 0 {
                sq += 0.5 * c.step * (c.values[k - 1].powi(2) + c.values[k].powi(2));
            }
            let resid = c.values[k] - r_ising(eta * c.grid[k], 64).unwrap() - sq;
            worst = worst.max(resid.abs() / c.values[k]);
        }
        prop_assert!(worst < 1e-4, "{}", worst);

        let fine = solve_q_eta_ising(eta, SolverOptions { step: 5e-4, ..opts }).unwrap();
        for z in [0.2, 0.5, 0.8] {
            let (a, b) = (c.value_at(z).unwrap(), fine.value_at(z).unwrap());
            prop_assert!((a - b).abs() / b < 1e-5);
        }
    }
}

#[test]
fn stored_weight_drift_stays_small() {
    for seed in 0..3 {
        let m = model(40, 5.0, seed);
        let mut c = PolarizedChain::all_minus(&m, chain_rng(seed, 4)).unwrap();
        for _ in 0..1_000_000 {
            c.step().unwrap();
        }
        assert!(c.max_log_weight_drift() < 1e-7, "{}", c.max_log_weight_drift());
        assert!(c.log_weight_error() < 1e-7);
    }
}
