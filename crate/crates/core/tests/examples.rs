//! Worked examples for each module, checked against hand computations or
//! independent oracles.

use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use spinloc::glauber::{conditional_plus, mixing_steps, GlauberChain, SpinChain};
use spinloc::graphs::{erdos_renyi, random_regular, spectral_lambda, Graph};
use spinloc::model::{
    build_antiferro, build_curie_weiss, build_hopfield, build_random_psd, build_sk, local_field, shift_to_psd,
    IsingModel, SpinConfig,
};
use spinloc::oracle::{
    empirical_covariance, empirical_distribution, exact_covariance, exact_distribution, sphere_marginal_moments,
    sphere_n3_cdf, tv_distance,
};
use spinloc::{FixedMagChain, PolarizedChain, WeightedIndexTree};
use spinloc::rng::{chain_rng, rng_from_seed};
use spinloc::sphere::envelope::EnvelopeSampler;
use spinloc::sphere::{sample_conditional_spin, sample_sphere_marginal, OnConfig, OnGlauberChain, OnModel};
use spinloc::thresholds::{
    ate_constant, big_q, lambda_roots, q_closed_form, r_ising, s_of_eta, solve_q_eta_ising, solve_q_semilogconcave,
    SolverOptions, ThresholdError,
};

fn normal_sd(v: f64, n: usize) -> f64 {
    (v / n as f64).sqrt()
}

// ---- model ----

#[test]
fn local_field_by_hand() {
    let m = IsingModel::new(2, vec![(0, 1, 0.4)], vec![0.0; 2], 0.0, None).unwrap();
    let c = SpinConfig::new(&m, vec![-1, 1]).unwrap();
    assert_abs_diff_eq!(local_field(&m, &c, 0).unwrap(), 0.4, epsilon = 1e-15);

    let m = IsingModel::new(3, vec![], vec![0.0; 3], 3.0, None).unwrap();
    let c = SpinConfig::new(&m, vec![1, 1, -1]).unwrap();
    assert_abs_diff_eq!(local_field(&m, &c, 0).unwrap(), 0.0, epsilon = 1e-15);
    let c = SpinConfig::new(&m, vec![1, 1, 1]).unwrap();
    assert_abs_diff_eq!(local_field(&m, &c, 0).unwrap(), -2.0, epsilon = 1e-15);
}

#[test]
fn sk_edge_eigenvalues_and_eta() {
    let m = build_sk(500, 1.0, 3);
    let (lo, hi) = m.off_diagonal_extremes();
    assert!((1.8..=2.2).contains(&hi), "{hi}");
    assert!((-2.2..=-1.8).contains(&lo), "{lo}");
    let eta = m.spectral_summary().eta;
    assert!((0.45..=0.55).contains(&eta), "{eta}");
}

#[test]
fn hopfield_zero_beta_is_free() {
    let m = build_hopfield(12, 3, 0.0, 1);
    assert!(m.triplets().iter().all(|t| t.2 == 0.0));
    assert_eq!(m.diagonal(), 0.0);
}

#[test]
fn hopfield_large_diagonal() {
    let m = build_hopfield(1000, 1000, 1.0, 2);
    assert_eq!(m.diagonal(), 0.5);
}

#[test]
fn shift_of_four_clique() {
    // adjacency of K4 has spectrum {3, −1, −1, −1}
    let a = DMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 1.0 });
    let s = shift_to_psd(&a).unwrap();
    assert_abs_diff_eq!(s.alpha, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(s.op_norm_j, 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(s.eta, 0.25, epsilon = 1e-12);
}

#[test]
fn antiferro_cycle_matches_raw_measure() {
    let g = Graph::cycle(4);
    let beta = 0.1;
    let h = vec![0.3, -0.2, 0.05, 0.7];
    let (model, _) = build_antiferro(&g, beta, h.clone(), 0.1).unwrap();
    let raw_trip = g.edges().iter().map(|&(i, j)| (i, j, -beta)).collect();
    let raw = IsingModel::new(4, raw_trip, h, 0.0, None).unwrap();
    let a = exact_distribution(&model).unwrap();
    let b = exact_distribution(&raw).unwrap();
    for (p, q) in a.probabilities().iter().zip(b.probabilities()) {
        assert_abs_diff_eq!(p, q, epsilon = 1e-12);
    }
}

#[test]
fn antiferro_zero_beta_is_product() {
    let g = random_regular(10, 3, 4).unwrap();
    let h: Vec<f64> = (0..10).map(|i| 0.1 * i as f64 - 0.4).collect();
    let (model, _) = build_antiferro(&g, 0.0, h.clone(), 0.1).unwrap();
    assert_eq!(model.gamma(), 0.0);
    let d = exact_distribution(&model).unwrap();
    for (s, &p) in d.probabilities().iter().enumerate() {
        let prod: f64 = (0..10)
            .map(|i| {
                let x = if s >> i & 1 == 1 { 1.0 } else { -1.0 };
                (h[i] * x).exp() / (2.0 * h[i].cosh())
            })
            .product();
        assert_abs_diff_eq!(p, prod, epsilon = 1e-14);
    }
}

#[test]
fn antiferro_regular_applicability() {
    // β sits just below the threshold for typical random cubic graphs
    let beta = 0.9 / (8.0 * 2f64.sqrt());
    let g = random_regular(100, 3, 0).unwrap();
    let (_, s) = build_antiferro(&g, beta, vec![0.0; 100], 0.1).unwrap();
    assert!(s.applicable);
    let hits = (0..50u64)
        .filter(|&seed| {
            let g = random_regular(100, 3, seed).unwrap();
            build_antiferro(&g, beta, vec![0.0; 100], 0.1).unwrap().1.applicable
        })
        .count();
    assert!(hits >= 40, "{hits}/50");
}

// ---- thresholds ----

#[test]
fn r_examples() {
    assert_eq!(r_ising(0.0, 64).unwrap(), 1.0);
    assert!(r_ising(100.0, 64).unwrap() < 0.1);
    assert!(matches!(r_ising(-1.0, 64), Err(ThresholdError::NegativeTime(_))));
}

#[test]
fn r_at_one_matches_monte_carlo() {
    let mut rng = rng_from_seed(17);
    let n = 2_000_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let x = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let g: f64 = StandardNormal.sample(&mut rng);
        let v = 1.0 - (x + g).tanh().powi(2);
        s += v;
        s2 += v * v;
    }
    let mean = s / n as f64;
    let se = normal_sd(s2 / n as f64 - mean * mean, n);
    assert!((r_ising(1.0, 64).unwrap() - mean).abs() < 3.0 * se);
}

#[test]
fn eta_zero_curve_is_one_over_one_minus_z() {
    let c = solve_q_eta_ising(0.0, SolverOptions::default()).unwrap();
    assert_abs_diff_eq!(c.value_at(0.5).unwrap(), 2.0, epsilon = 1e-6);
    assert_abs_diff_eq!(c.blowup_z.unwrap(), 1.0, epsilon = 1e-4);
    assert_abs_diff_eq!(ate_constant(&c, 0.5).unwrap(), 2.0, epsilon = 1e-4);
    assert_eq!(ate_constant(&c, 0.0).unwrap(), 1.0);
}

#[test]
fn half_eta_closed_form() {
    assert_abs_diff_eq!(q_closed_form(0.5, 1.0, 0.0).unwrap(), 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(q_closed_form(0.5, 1.0, 1.0).unwrap(), 86.0 / 15.0, epsilon = 1e-12);
    let (l1, l2) = lambda_roots(0.5).unwrap();
    assert_abs_diff_eq!(l1, 2.0, epsilon = 1e-15);
    assert_abs_diff_eq!(l2, -1.0, epsilon = 1e-15);
    let s = s_of_eta(0.5).unwrap();
    assert_abs_diff_eq!(s, 2.0 * (4f64.cbrt() - 1.0), epsilon = 1e-12);
    assert!(matches!(big_q(0.5, s), Err(ThresholdError::BeyondBlowup { .. })));
    assert!(matches!(s_of_eta(0.0), Err(ThresholdError::EtaZero)));
    assert!((s_of_eta(1e-4).unwrap() - 1.0).abs() < 1e-2);
}

#[test]
fn sphere_curve_rescaling() {
    // q_{η,1/N}(z) = (1/N)·Q_η(z/N)
    let n = 3.0;
    let opts = SolverOptions {
        z_max: 2.0,
        ..SolverOptions::default()
    };
    let c = solve_q_semilogconcave(0.5, &|_| 1.0 / n, opts).unwrap();
    assert_abs_diff_eq!(c.values[0], 1.0 / n, epsilon = 1e-12);
    for z in [0.5, 1.0, 2.0] {
        let exact = big_q(0.5, z / n).unwrap() / n;
        assert!((c.value_at(z).unwrap() - exact).abs() / exact < 1e-4);
    }
}

#[test]
fn ate_constant_is_monotone() {
    let c = solve_q_eta_ising(0.7, SolverOptions::default()).unwrap();
    let mut last = 0.0;
    for k in 0..=100 {
        let v = ate_constant(&c, 0.01 * k as f64).unwrap();
        assert!(v >= last);
        last = v;
    }
}

// ---- glauber ----

#[test]
fn two_site_conditional() {
    let m = IsingModel::new(2, vec![(0, 1, 0.5)], vec![0.0; 2], 0.0, None).unwrap();
    assert_abs_diff_eq!(conditional_plus(&m, &[-1, 1], 0), 0.731_058_578_630_004_9, epsilon = 1e-12);
}

fn random_model(n: usize, seed: u64) -> IsingModel {
    build_random_psd(n, 0.6, 0.0, 0.8, seed).unwrap()
}

#[test]
fn glauber_empirical_law() {
    let m = random_model(6, 21);
    let exact = exact_distribution(&m).unwrap();
    let mut chain = GlauberChain::all_minus(&m, rng_from_seed(5)).unwrap();
    let mut samples = Vec::with_capacity(1_000_000);
    chain.run(1_000_000, 1, &mut |x| samples.push(x.to_vec())).unwrap();
    let emp = empirical_distribution(6, samples.iter().map(Vec::as_slice)).unwrap();
    assert!(tv_distance(&emp, exact.probabilities()).unwrap() < 0.02);
}

#[test]
fn glauber_same_seed_same_stream() {
    let m = build_sk(30, 0.4, 2);
    let run = || {
        let mut c = GlauberChain::all_minus(&m, rng_from_seed(9)).unwrap();
        let mut out = Vec::new();
        c.run(5000, 7, &mut |x| out.push(x.to_vec())).unwrap();
        out
    };
    assert_eq!(run(), run());
}

#[test]
fn sk_mean_magnetization_vanishes() {
    let n = 200;
    let m = build_sk(n, 0.25, 11);
    let steps = mixing_steps(n, 0.01);
    let mut total = 0.0;
    for c in 0..50 {
        let mut chain = GlauberChain::all_minus(&m, chain_rng(3, c)).unwrap();
        for _ in 0..steps {
            chain.step().unwrap();
        }
        total += chain.config().spin_sum() as f64 / n as f64;
    }
    assert!((total / 50.0).abs() < 0.05);
}

// ---- polarized ----

#[test]
fn tree_arithmetic() {
    let mut t = WeightedIndexTree::new();
    assert_eq!(t.sum(), 0.0);
    for (k, w) in [(1, 2.0), (2, 3.0), (3, 5.0)] {
        t.insert(k, w).unwrap();
    }
    assert_eq!(t.sum(), 10.0);
    t.update(2, 7.0).unwrap();
    assert_eq!(t.sum(), 14.0);
}

#[test]
fn tree_prefix_searches() {
    let t = WeightedIndexTree::from_pairs([(1, 2.0), (2, 3.0), (3, 5.0)]).unwrap();
    // minimum key whose exclusive prefix reaches ℓ
    assert_eq!(t.prefix_lower_bound(0.0), Some(1));
    assert_eq!(t.prefix_lower_bound(2.0), Some(2));
    assert_eq!(t.prefix_lower_bound(4.0), Some(3));
    assert_eq!(t.prefix_lower_bound(6.0), None);
    // sampling rule: the key whose [P_excl, P_incl) holds ℓ
    assert_eq!(t.range_search(0.0).unwrap(), 1);
    assert_eq!(t.range_search(2.0).unwrap(), 2);
    assert_eq!(t.range_search(4.0).unwrap(), 2);
    assert_eq!(t.range_search(5.0).unwrap(), 3);
}

#[test]
fn tree_insert_delete_restores() {
    let mut t = WeightedIndexTree::from_pairs([(1, 2.0), (2, 3.0), (3, 5.0)]).unwrap();
    let before = t.pairs();
    t.insert(9, 1.5).unwrap();
    t.delete(9).unwrap();
    assert_eq!(t.pairs(), before);
}

#[test]
fn curie_weiss_polarized_mixes() {
    let n = 10;
    let m = build_curie_weiss(n, 5.0, vec![0.0; n]).unwrap();
    let exact = exact_distribution(&m).unwrap();
    let steps = mixing_steps(n, 0.01);
    // the law is exchangeable, so compare plus-count histograms
    let mut hist = vec![0.0; n + 1];
    let runs = 20_000;
    for r in 0..runs {
        let mut c = PolarizedChain::all_minus(&m, chain_rng(8, r)).unwrap();
        for _ in 0..steps {
            c.step().unwrap();
        }
        hist[c.config().plus_count()] += 1.0 / runs as f64;
    }
    let mut target = vec![0.0; n + 1];
    for (s, p) in exact.probabilities().iter().enumerate() {
        target[s.count_ones() as usize] += p;
    }
    assert!(tv_distance(&hist, &target).unwrap() < 0.02);
}

#[test]
fn fixed_mag_uniform_slice() {
    let m = IsingModel::free(6).with_magnetization(Some(0)).unwrap();
    let exact = exact_distribution(&m).unwrap();
    assert_eq!(exact.support().len(), 20);
    let mut c = FixedMagChain::first_sites_plus(&m, rng_from_seed(4)).unwrap();
    let mut samples = Vec::new();
    c.run(100_000, 1, &mut |x| samples.push(x.to_vec())).unwrap();
    let emp = empirical_distribution(6, samples.iter().map(Vec::as_slice)).unwrap();
    assert!(tv_distance(&emp, exact.probabilities()).unwrap() < 0.02);
}

// ---- sphere ----

fn ks_uniform(mut ys: Vec<f64>) -> f64 {
    ys.sort_by(f64::total_cmp);
    let n = ys.len() as f64;
    ys.iter()
        .enumerate()
        .map(|(i, &y)| {
            let f = (y + 1.0) / 2.0;
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn n3_unbiased_is_uniform() {
    let mut rng = rng_from_seed(1);
    let ys: Vec<f64> = (0..100_000)
        .map(|_| sample_sphere_marginal(3, 0.0, 1e-9, &mut rng).unwrap())
        .collect();
    assert!(ks_uniform(ys) < 0.01);
}

#[test]
fn unbiased_means_vanish() {
    let mut rng = rng_from_seed(2);
    for dim in 1..10 {
        let n = 20_000;
        let mean = (0..n)
            .map(|_| sample_sphere_marginal(dim, 0.0, 1e-9, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        let var = sphere_marginal_moments(dim, 0.0, 2)[1];
        assert!(mean.abs() < 3.0 * normal_sd(var, n), "N={dim}: {mean}");
    }
}

#[test]
fn n3_cdf_at_quantiles() {
    let mut rng = rng_from_seed(3);
    let n = 100_000;
    let mut ys: Vec<f64> = (0..n)
        .map(|_| sample_sphere_marginal(3, 2.0, 1e-9, &mut rng).unwrap())
        .collect();
    ys.sort_by(f64::total_cmp);
    for k in 1..=20 {
        let y = -1.0 + 2.0 * k as f64 / 21.0;
        let emp = ys.partition_point(|&v| v <= y) as f64 / n as f64;
        let exact = ((2.0 * y).exp() - (-2.0f64).exp()) / (2.0f64.exp() - (-2.0f64).exp());
        assert_abs_diff_eq!(exact, sphere_n3_cdf(2.0, y), epsilon = 1e-12);
        assert!((emp - exact).abs() < 0.01);
    }
}

#[test]
fn seven_dim_moments() {
    let mut rng = rng_from_seed(4);
    let n = 100_000;
    let ys: Vec<f64> = (0..n)
        .map(|_| sample_sphere_marginal(7, 5.0, 1e-9, &mut rng).unwrap())
        .collect();
    let exact = sphere_marginal_moments(7, 5.0, 4);
    for p in 1..=2 {
        let emp = ys.iter().map(|y| y.powi(p as i32)).sum::<f64>() / n as f64;
        let var = exact[2 * p - 1] - exact[p - 1].powi(2);
        assert!((emp - exact[p - 1]).abs() < 3.0 * normal_sd(var, n));
    }
}

#[test]
fn gaussian_envelope_gives_gaussian() {
    let s = EnvelopeSampler::new(
        |x: f64| x * x / 2.0,
        &|x| x,
        (f64::NEG_INFINITY, f64::INFINITY),
        (f64::NEG_INFINITY, f64::INFINITY),
        1.0,
    )
    .unwrap();
    let mut rng = rng_from_seed(5);
    let mut xs: Vec<f64> = (0..100_000).map(|_| s.sample(1e-9, &mut rng)).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
    use statrs::distribution::ContinuousCDF;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "{ks}");
}

#[test]
fn uniform_sphere_for_zero_field() {
    let mut rng = rng_from_seed(6);
    let n = 100_000;
    let mut mean = [0.0; 4];
    for _ in 0..n {
        let s = sample_conditional_spin(&[0.0; 4], 1e-9, &mut rng).unwrap();
        for k in 0..4 {
            mean[k] += s[k] / n as f64;
        }
    }
    let norm = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(norm < 0.02);
}

#[test]
fn planar_conditional_moments() {
    let mut rng = rng_from_seed(7);
    let n = 100_000;
    let proj: Vec<f64> = (0..n)
        .map(|_| sample_conditional_spin(&[3.0, 0.0], 1e-9, &mut rng).unwrap()[0])
        .collect();
    let exact = sphere_marginal_moments(2, 3.0, 4);
    for p in 1..=2 {
        let emp = proj.iter().map(|y| y.powi(p as i32)).sum::<f64>() / n as f64;
        let var = exact[2 * p - 1] - exact[p - 1].powi(2);
        assert!((emp - exact[p - 1]).abs() < 3.0 * normal_sd(var, n));
    }
}

#[test]
fn conditional_spin_is_rotation_equivariant() {
    // the law of ⟨s, u⟩ with u = w/‖w‖ does not depend on the direction of w
    let mut rng = rng_from_seed(8);
    let n = 50_000;
    let w1 = [1.5, 0.0, 0.0, 0.0];
    let w2 = [0.5, -1.0, 0.5, 0.866_025_403_784_438_6];
    let norm2 = w2.iter().map(|v| v * v).sum::<f64>().sqrt();
    let w2: Vec<f64> = w2.iter().map(|v| v * 1.5 / norm2).collect();
    let mut a: Vec<f64> = (0..n)
        .map(|_| sample_conditional_spin(&w1, 1e-9, &mut rng).unwrap()[0])
        .collect();
    let mut b: Vec<f64> = (0..n)
        .map(|_| {
            let s = sample_conditional_spin(&w2, 1e-9, &mut rng).unwrap();
            s.iter().zip(&w2).map(|(x, y)| x * y).sum::<f64>() / 1.5
        })
        .collect();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    // two-sample KS; the 0.001 critical value is 1.95·√(2/n)
    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < n && j < n {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 - j as f64).abs() / n as f64);
    }
    assert!(d < 1.95 * (2.0 / n as f64).sqrt(), "{d}");
}

#[test]
fn two_planar_spins_alignment() {
    let couplings = IsingModel::new(2, vec![(0, 1, 0.3)], vec![0.0; 2], 0.0, None).unwrap();
    let model = OnModel::new(couplings, 2, vec![0.0; 4]).unwrap();
    let mut chain = OnGlauberChain::new(&model, OnConfig::aligned(&model), 1e-9, rng_from_seed(9)).unwrap();
    let steps = 1_000_000u64;
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for _ in 0..steps {
        chain.step().unwrap();
        let s = chain.config().spins();
        let dot = s[0] * s[2] + s[1] * s[3];
        sum += dot;
        sum2 += dot * dot;
    }
    // only the relative angle matters: E[cos φ] with φ ∝ exp(0.3 cos φ)
    let exact = sphere_marginal_moments(2, 0.3, 1)[0];
    let mean = sum / steps as f64;
    // consecutive states are correlated; a site is refreshed every two steps
    // on average, so allow for an effective sample size of steps/4
    let se = normal_sd(sum2 / steps as f64 - mean * mean, steps as usize / 4);
    assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact}");
}

// ---- graphs ----

#[test]
fn gnp_edge_count() {
    let n = 2000;
    let p = 2.0 * (n as f64).ln() / n as f64;
    let g = erdos_renyi(n, p, 12).unwrap();
    let pairs = (n * (n - 1) / 2) as f64;
    let sd = (pairs * p * (1.0 - p)).sqrt();
    assert!((g.edges().len() as f64 - p * pairs).abs() < 4.0 * sd);
}

#[test]
fn complete_and_cycle_spectra() {
    let k5 = spectral_lambda(&Graph::complete(5)).unwrap();
    assert_abs_diff_eq!(k5.lambda2, -1.0, epsilon = 1e-9);
    assert_abs_diff_eq!(k5.lambda_min, -1.0, epsilon = 1e-9);
    assert_abs_diff_eq!(k5.lambda_g, 0.25, epsilon = 1e-9);
    let c4 = spectral_lambda(&Graph::cycle(4)).unwrap();
    assert_abs_diff_eq!(c4.lambda2, 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(c4.lambda_min, -2.0, epsilon = 1e-9);
}

// ---- oracle ----

#[test]
fn uniform_covariance_is_identity() {
    let d = exact_distribution(&IsingModel::free(5)).unwrap();
    let c = exact_covariance(&d);
    assert!((c - DMatrix::<f64>::identity(5, 5)).abs().max() < 1e-14);
}

#[test]
fn confined_covariance_bound() {
    let m = build_random_psd(10, 0.3, 2.0, 1.0, 4).unwrap();
    let c = exact_covariance(&exact_distribution(&m).unwrap());
    let top = spinloc::linalg::symmetric_eigenvalues(&c).last().copied().unwrap();
    assert!(top <= 5.0);
}

#[test]
fn psd_covariance_below_curve() {
    let mut rng = rng_from_seed(31);
    for _ in 0..20 {
        let mut m = build_random_psd(8, rng.random_range(0.2..0.9), 0.0, 2.0, rng.random()).unwrap();
        let s = m.spectral_summary();
        m = m.with_diagonal(s.alpha);
        let cov = exact_covariance(&exact_distribution(&m).unwrap());
        let top = *spinloc::linalg::symmetric_eigenvalues(&cov).last().unwrap();
        let opts = SolverOptions {
            z_max: s.op_norm_j + 1e-3,
            ..SolverOptions::default()
        };
        let q = solve_q_eta_ising(s.eta, opts).unwrap().value_at(s.op_norm_j).unwrap();
        assert!(top <= q * (1.0 + 1e-9), "{top} > {q}");
    }
}

#[test]
fn empirical_helpers() {
    let x = [1i8, -1, 1];
    let one = empirical_distribution(3, std::iter::repeat_n(&x[..], 10)).unwrap();
    assert_eq!(one[0b101], 1.0);
    let ones = [1i8; 4];
    let c = empirical_covariance(4, std::iter::repeat_n(&ones[..], 100));
    assert_eq!(c.abs().max(), 0.0);

    let mut rng = rng_from_seed(2);
    let samples: Vec<Vec<i8>> = (0..1_000_000)
        .map(|_| (0..3).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
        .collect();
    let emp = empirical_distribution(3, samples.iter().map(Vec::as_slice)).unwrap();
    assert!(tv_distance(&emp, &[0.125; 8]).unwrap() < 0.01);
}

#[test]
fn dense_and_lanczos_spectra_agree() {
    use spinloc::graphs::{spectral_lambda_dense, spectral_lambda_iterative};
    for seed in 0..5 {
        let g = random_regular(200, 3, seed).unwrap();
        let a = spectral_lambda_dense(&g).unwrap();
        let b = spectral_lambda_iterative(&g).unwrap();
        assert!((a.lambda2 - b.lambda2).abs() < 1e-6);
        assert!((a.lambda_min - b.lambda_min).abs() < 1e-6);
        assert!((a.lambda_g - b.lambda_g).abs() < 1e-6);
    }
}
