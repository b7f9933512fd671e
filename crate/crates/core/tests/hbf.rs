use hbf_ee::channel::{generate_channel, ula_response};
use hbf_ee::config::{DictionaryKind, Pursuit, SystemConfig};
use hbf_ee::dinkelbach::{subproblem_waterfill, threshold_allocation};
use hbf_ee::hbf::{
    design_all, digital_combiner, digital_precoder, gp_factorize, ls_solve_count, omp_factorize,
    Dictionary, PursuitOptions,
};
use hbf_ee::rate::{se_diag, se_exact};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn randn_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Independent least-squares residual used as an oracle (does not route
/// through the library's counted solver).
fn ls_residual(a: &DMatrix<Complex64>, t: &DMatrix<Complex64>) -> f64 {
    let svd = nalgebra::SVD::try_new(a.clone(), true, true, f64::EPSILON, 10_000).unwrap();
    let x = svd.solve(t, 1e-12).unwrap();
    (t - a * x).norm() / t.norm()
}

fn rich_config() -> SystemConfig {
    let mut cfg = SystemConfig::default();
    cfg.n_tx = 16;
    cfg.n_rx = 8;
    cfg.n_cl = 4;
    cfg.n_ray = 8;
    cfg.mean_angle_range_deg = (30.0, 150.0);
    cfg
}

#[test]
fn dictionary_columns_are_unit_norm() {
    let angles = [10.0, 47.5, 90.0, 133.2, 170.0];
    for n in [1usize, 4, 32] {
        let dict = Dictionary::from_angles(n, &angles, 0.5);
        assert_eq!(dict.atom_count(), angles.len());
        for j in 0..dict.atom_count() {
            assert!((dict.atoms.column(j).norm() - 1.0).abs() <= 1e-12);
        }
    }
    let grid = Dictionary::uniform_grid(32, 64, 0.5);
    assert_eq!(grid.atom_count(), 64);
    for j in 0..64 {
        assert!((grid.atoms.column(j).norm() - 1.0).abs() <= 1e-12);
    }
    let cfg = SystemConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let chan = generate_channel(&cfg, &mut rng).unwrap();
    let tx = Dictionary::tx_from_paths(&cfg, &chan.paths);
    let rx = Dictionary::rx_from_paths(&cfg, &chan.paths);
    assert_eq!(tx.atoms.nrows(), cfg.n_tx);
    assert_eq!(rx.atoms.nrows(), cfg.n_rx);
    assert_eq!(tx.atom_count(), cfg.n_cl * cfg.n_ray);
    assert_eq!(rx.atom_count(), cfg.n_cl * cfg.n_ray);
    for j in 0..tx.atom_count() {
        assert!((tx.atoms.column(j).norm() - 1.0).abs() <= 1e-12);
        assert!((rx.atoms.column(j).norm() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn single_stream_precoder_is_the_scaled_top_right_vector() {
    let cfg = SystemConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let chan = generate_channel(&cfg, &mut rng).unwrap();
    let p_max = 1.0;
    let f = digital_precoder(&chan, &[p_max], 1).unwrap();
    let expected = chan.v.column(0) * Complex64::from(p_max.sqrt());
    assert!((&f.column(0) - expected).norm() <= 1e-12);
    assert!((f.norm_squared() - p_max).abs() <= 1e-12);
}

#[test]
fn precoder_columns_are_orthogonal_with_the_allocation_on_the_diagonal() {
    let cfg = rich_config();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let chan = generate_channel(&cfg, &mut rng).unwrap();
    let n_s = chan.l_avail.min(3);
    let p = [0.5, 0.3, 0.2];
    let f = digital_precoder(&chan, &p[..n_s], n_s).unwrap();
    let gram = f.adjoint() * &f;
    for i in 0..n_s {
        for j in 0..n_s {
            let expected = if i == j { p[i] } else { 0.0 };
            assert!(
                (gram[(i, j)] - Complex64::from(expected)).norm() <= 1e-10,
                "gram[{i},{j}] = {}",
                gram[(i, j)]
            );
        }
    }
}

#[test]
fn digital_pair_reproduces_the_diagonal_rate() {
    let cfg = rich_config();
    for seed in [3u64, 4, 5] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chan = generate_channel(&cfg, &mut rng).unwrap();
        let n_s = chan.l_avail.min(2);
        let p = [0.6, 0.4];
        let f = digital_precoder(&chan, &p[..n_s], n_s).unwrap();
        let w = digital_combiner(&chan, n_s).unwrap();
        let eye = DMatrix::<Complex64>::identity(n_s, n_s);
        let via_factors = se_exact(&chan.h, &f, &eye, &w, &eye, cfg.noise_var).unwrap();
        let sigma = chan.sigma.rows(0, n_s).into_owned();
        let via_diag = se_diag(&sigma, &p[..n_s], cfg.noise_var).unwrap();
        assert!((via_factors - via_diag).abs() <= 1e-9);
    }
}

#[test]
fn precoder_rejects_inconsistent_requests() {
    let cfg = SystemConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let chan = generate_channel(&cfg, &mut rng).unwrap();
    assert!(digital_precoder(&chan, &[1.0; 9], chan.l_avail + 1).is_err());
    assert!(digital_precoder(&chan, &[1.0], 0).is_err());
    assert!(digital_precoder(&chan, &[], 1).is_err());
    assert!(digital_precoder(&chan, &[-0.1], 1).is_err());
    assert!(digital_combiner(&chan, 0).is_err());
    assert!(digital_combiner(&chan, chan.l_avail + 1).is_err());
}

#[test]
fn omp_recovers_a_single_atom_target_exactly() {
    let dict = Dictionary::from_angles(8, &[40.0, 75.0, 110.0, 145.0], 0.5);
    let coeff = Complex64::from_polar(0.7, 0.3);
    let target = DMatrix::from_columns(&[dict.atoms.column(2).into_owned()]) * coeff;
    let before = ls_solve_count();
    let out = omp_factorize(&target, &dict, 1, None).unwrap();
    assert_eq!(ls_solve_count() - before, 1, "one selection, one solve");
    assert!(out.relative_residual <= 1e-12);
    assert!(!out.rank_deficient);
    let rebuilt = &out.rf * &out.bb;
    assert!((&rebuilt - &target).norm() <= 1e-10);
    let modulus = 1.0 / 8f64.sqrt();
    for z in out.rf.iter() {
        assert!((z.norm() - modulus).abs() <= 1e-14);
    }
}

#[test]
fn selecting_every_atom_leaves_only_the_projection_error() {
    let dict = Dictionary::from_angles(8, &[20.0, 60.0, 100.0, 140.0], 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let target = randn_matrix(8, 2, &mut rng);
    let out = omp_factorize(&target, &dict, 4, None).unwrap();
    let oracle = ls_residual(&dict.atoms, &target);
    assert!(
        (out.relative_residual - oracle).abs() <= 1e-9,
        "full selection residual {} vs projection error {oracle}",
        out.relative_residual
    );
}

#[test]
fn omp_is_near_the_best_pair_of_atoms_on_a_small_array() {
    // Greedy selection has no per-instance approximation guarantee — when
    // two atoms are nearly collinear, both residuals are tiny and their
    // ratio is unstable — so the 1.5x closeness claim is asserted on the
    // median over instances, with exactness (greedy can never beat the
    // exhaustive search) checked on every one.
    let mut cfg = SystemConfig::default();
    cfg.n_tx = 8;
    cfg.n_rx = 4;
    cfg.n_cl = 2;
    cfg.n_ray = 3;
    let mut ratios = Vec::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chan = generate_channel(&cfg, &mut rng).unwrap();
        if chan.l_avail < 2 {
            continue;
        }
        let target = digital_precoder(&chan, &[0.5, 0.5], 2).unwrap();
        let dict = Dictionary::tx_from_paths(&cfg, &chan.paths);
        let out = omp_factorize(&target, &dict, 2, None).unwrap();
        let mut best = f64::INFINITY;
        for i in 0..dict.atom_count() {
            for j in (i + 1)..dict.atom_count() {
                let pair = DMatrix::from_columns(&[
                    dict.atoms.column(i).into_owned(),
                    dict.atoms.column(j).into_owned(),
                ]);
                best = best.min(ls_residual(&pair, &target));
            }
        }
        assert!(
            out.relative_residual >= best - 1e-9,
            "seed {seed}: greedy {} beat the exhaustive best pair {best}",
            out.relative_residual
        );
        ratios.push(out.relative_residual / best.max(1e-15));
    }
    assert!(ratios.len() >= 80, "too few usable realizations: {}", ratios.len());
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    assert!(
        median <= 1.5,
        "median greedy/best-pair residual ratio {median} above 1.5"
    );
}

#[test]
fn gradient_pursuit_equals_omp_on_a_single_atom() {
    let dict = Dictionary::from_angles(8, &[40.0, 75.0, 110.0, 145.0], 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let target = randn_matrix(8, 1, &mut rng);
    let omp = omp_factorize(&target, &dict, 1, None).unwrap();
    for polish in [false, true] {
        let gp = gp_factorize(&target, &dict, 1, None, polish).unwrap();
        assert!((&gp.rf - &omp.rf).norm() <= 1e-12);
        assert!((&gp.bb - &omp.bb).norm() <= 1e-12);
        assert!((gp.relative_residual - omp.relative_residual).abs() <= 1e-12);
    }
}

#[test]
fn gradient_pursuit_stays_within_ten_percent_of_omp() {
    let dict = Dictionary::uniform_grid(32, 64, 0.5);
    let trials = 200;
    let mut close = 0;
    for seed in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed as u64);
        let target = randn_matrix(32, 4, &mut rng);
        let omp = omp_factorize(&target, &dict, 4, None).unwrap();
        let gp = gp_factorize(&target, &dict, 4, None, true).unwrap();
        if gp.relative_residual <= 1.10 * omp.relative_residual + 1e-12 {
            close += 1;
        }
    }
    assert!(
        close * 100 >= trials * 95,
        "GP within 10% of OMP in only {close}/{trials} trials"
    );
}

#[test]
fn gradient_pursuit_inner_loop_never_solves_a_system() {
    let dict = Dictionary::uniform_grid(16, 32, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let target = randn_matrix(16, 2, &mut rng);

    let before = ls_solve_count();
    omp_factorize(&target, &dict, 3, None).unwrap();
    assert_eq!(ls_solve_count() - before, 3, "OMP re-solves every iteration");

    let before = ls_solve_count();
    gp_factorize(&target, &dict, 3, None, false).unwrap();
    assert_eq!(ls_solve_count() - before, 0, "unpolished GP never solves");

    let before = ls_solve_count();
    gp_factorize(&target, &dict, 3, None, true).unwrap();
    assert_eq!(ls_solve_count() - before, 1, "polish is a single terminal solve");
}

#[test]
fn rank_one_design_is_exact_when_the_steering_vectors_are_atoms() {
    let mut cfg = SystemConfig::default();
    cfg.n_cl = 1;
    cfg.n_ray = 1;
    for seed in [10u64, 11, 12] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chan = generate_channel(&cfg, &mut rng).unwrap();
        for pursuit in [Pursuit::Omp, Pursuit::Gp] {
            let opts = PursuitOptions {
                pursuit,
                ..PursuitOptions::default()
            };
            let hf = design_all(&chan, &cfg, &[1.0], 1, 1.0, &opts).unwrap();
            assert!(hf.residual_tx <= 1e-6, "tx residual {}", hf.residual_tx);
            assert!(hf.residual_rx <= 1e-6, "rx residual {}", hf.residual_rx);
        }
    }
}

#[test]
fn transmit_product_carries_exactly_the_budget() {
    let cfg = SystemConfig::default();
    for (seed, p_max) in [(13u64, 1.0), (14, 16.0), (15, 1.0)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chan = generate_channel(&cfg, &mut rng).unwrap();
        let n_s = chan.l_avail.min(2);
        let p = vec![p_max / n_s as f64; n_s];
        for opts in [
            PursuitOptions::default(),
            PursuitOptions {
                pursuit: Pursuit::Gp,
                ..PursuitOptions::default()
            },
            PursuitOptions {
                dictionary: DictionaryKind::Grid,
                grid_size: 64,
                ..PursuitOptions::default()
            },
        ] {
            let hf = design_all(&chan, &cfg, &p, n_s, p_max, &opts).unwrap();
            let carried = (&hf.f_rf * &hf.f_bb).norm_squared();
            assert!(
                (carried - p_max).abs() <= 1e-9 * p_max,
                "carried {carried} vs budget {p_max}"
            );
            let tx_modulus = 1.0 / (cfg.n_tx as f64).sqrt();
            let rx_modulus = 1.0 / (cfg.n_rx as f64).sqrt();
            for z in hf.f_rf.iter() {
                assert!((z.norm() - tx_modulus).abs() <= 1e-14);
            }
            for z in hf.w_rf.iter() {
                assert!((z.norm() - rx_modulus).abs() <= 1e-14);
            }
        }
    }
}

#[test]
fn hybrid_rate_never_beats_the_digital_optimum() {
    let beta_prime = 2.92;
    for seed in 0..50u64 {
        let mut cfg = SystemConfig::default();
        cfg.set_snr_db(if seed % 2 == 0 { 0.0 } else { 10.0 });
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let chan = generate_channel(&cfg, &mut rng).unwrap();
        let p_max = 1.0;
        let gains: Vec<f64> = chan.sigma.as_slice()[..chan.l_avail]
            .iter()
            .map(|&s| s * s / cfg.noise_var)
            .collect();
        let (p, _) = subproblem_waterfill(&gains, 0.0, beta_prime, p_max).unwrap();
        let p = threshold_allocation(&p, cfg.eps_th);
        let n_s = p.iter().filter(|&&x| x > 0.0).count();
        let diag_p = &p[..n_s];
        let sigma = chan.sigma.rows(0, n_s).into_owned();
        let bound = se_diag(&sigma, diag_p, cfg.noise_var).unwrap();
        for pursuit in [Pursuit::Omp, Pursuit::Gp] {
            let opts = PursuitOptions {
                pursuit,
                ..PursuitOptions::default()
            };
            let hf = design_all(&chan, &cfg, diag_p, n_s, p_max, &opts).unwrap();
            let se = se_exact(&chan.h, &hf.f_rf, &hf.f_bb, &hf.w_rf, &hf.w_bb, cfg.noise_var)
                .unwrap();
            assert!(
                se <= bound + 1e-6,
                "seed {seed}: designed rate {se} above digital bound {bound}"
            );
        }
    }
}

#[test]
fn greedy_residual_is_non_increasing_in_the_chain_count() {
    let dict = Dictionary::uniform_grid(16, 24, 0.5);
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        let target = randn_matrix(16, 2, &mut rng);
        let mut prev = f64::INFINITY;
        for l in 2..=8 {
            let out = omp_factorize(&target, &dict, l, None).unwrap();
            assert!(
                out.relative_residual <= prev + 1e-12,
                "residual rose at l={l}: {} after {prev}",
                out.relative_residual
            );
            prev = out.relative_residual;
        }
    }
}

#[test]
fn full_dictionary_omp_and_polished_gp_agree() {
    let dict = Dictionary::from_angles(12, &[15.0, 55.0, 95.0, 135.0, 175.0], 0.5);
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + seed);
        let target = randn_matrix(12, 2, &mut rng);
        let omp = omp_factorize(&target, &dict, 5, None).unwrap();
        let gp = gp_factorize(&target, &dict, 5, None, true).unwrap();
        assert!(
            (omp.relative_residual - gp.relative_residual).abs() <= 1e-8,
            "residuals differ on the full dictionary: {} vs {}",
            omp.relative_residual,
            gp.relative_residual
        );
    }
}

#[test]
fn identical_inputs_produce_identical_factors() {
    let dict = Dictionary::uniform_grid(16, 32, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let target = randn_matrix(16, 2, &mut rng);
    let a = omp_factorize(&target, &dict, 3, Some(1.0)).unwrap();
    let b = omp_factorize(&target, &dict, 3, Some(1.0)).unwrap();
    assert_eq!(a.rf, b.rf);
    assert_eq!(a.bb, b.bb);
    let c = gp_factorize(&target, &dict, 3, Some(1.0), true).unwrap();
    let d = gp_factorize(&target, &dict, 3, Some(1.0), true).unwrap();
    assert_eq!(c.rf, d.rf);
    assert_eq!(c.bb, d.bb);
}

#[test]
fn pursuit_rejects_inconsistent_requests() {
    let dict = Dictionary::from_angles(8, &[30.0, 90.0, 150.0], 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let target = randn_matrix(8, 2, &mut rng);
    assert!(omp_factorize(&target, &dict, 0, None).is_err());
    assert!(omp_factorize(&target, &dict, 4, None).is_err());
    assert!(omp_factorize(&target, &dict, 1, None).is_err(), "fewer chains than streams");
    let short = randn_matrix(4, 2, &mut rng);
    assert!(omp_factorize(&short, &dict, 2, None).is_err(), "row mismatch");
    let zero = DMatrix::<Complex64>::zeros(8, 2);
    assert!(omp_factorize(&zero, &dict, 2, None).is_err(), "zero-norm target");
    assert!(gp_factorize(&target, &dict, 0, None, true).is_err());
    assert!(gp_factorize(&zero, &dict, 2, None, false).is_err());
}

#[test]
fn atoms_match_the_array_response_at_their_angles() {
    let angles = [25.0, 80.0, 155.0];
    let dict = Dictionary::from_angles(16, &angles, 0.5);
    for (j, &ang) in angles.iter().enumerate() {
        let expected = ula_response(16, ang, 0.5);
        assert!((dict.atoms.column(j) - expected).norm() <= 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn power_cap_and_modulus_hold_for_any_cap(
        seed in 0u64..1000,
        cap in 0.1f64..32.0,
        l in 2usize..=5,
    ) {
        let dict = Dictionary::uniform_grid(16, 24, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = randn_matrix(16, 2, &mut rng);
        let out = omp_factorize(&target, &dict, l, Some(cap)).unwrap();
        let carried = (&out.rf * &out.bb).norm_squared();
        prop_assert!((carried - cap).abs() <= 1e-9 * cap);
        let modulus = 1.0 / 16f64.sqrt();
        for z in out.rf.iter() {
            prop_assert!((z.norm() - modulus).abs() <= 1e-13);
        }
    }

    #[test]
    fn polish_never_hurts_gradient_pursuit(
        seed in 0u64..1000,
        l in 2usize..=6,
    ) {
        let dict = Dictionary::uniform_grid(12, 20, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = randn_matrix(12, 2, &mut rng);
        let raw = gp_factorize(&target, &dict, l, None, false).unwrap();
        let polished = gp_factorize(&target, &dict, l, None, true).unwrap();
        prop_assert!(polished.relative_residual <= raw.relative_residual + 1e-12);
    }
}
