//! Power model: consumption formulas, caps, and the effective amplifier
//! slope.

use approx::assert_relative_eq;
use proptest::prelude::*;

use hbf_ee::power::PowerModel;

#[test]
fn link_consumption_with_two_chains_per_side() {
    // 2.5·1 + 2·10 + 32·0.1 + 8·0.1 + 2·(0.1 + 32·0.01) + 2·(0.1 + 8·0.01)
    let pm = PowerModel::default();
    let p = pm.total_power(32, 8, 2, 2, 1.0).unwrap();
    assert_relative_eq!(p, 27.7, epsilon = 1e-12);
}

#[test]
fn static_terms_survive_with_all_chains_off() {
    let pm = PowerModel::default();
    let p = pm.total_power(32, 8, 0, 0, 0.0).unwrap();
    assert_relative_eq!(p, 24.0, epsilon = 1e-12);
}

#[test]
fn full_chain_consumption_equals_the_cap() {
    let pm = PowerModel::default();
    let total = pm.total_power(32, 8, 32, 8, pm.p_max).unwrap();
    let cap = pm.power_budget_cap(32, 8, 32, 8);
    assert_eq!(total, cap);
}

#[test]
fn cap_for_eight_chains_each_side() {
    let pm = PowerModel::default();
    assert_relative_eq!(pm.power_budget_cap(32, 8, 8, 8), 31.3, epsilon = 1e-12);
}

#[test]
fn cap_for_single_antenna_link() {
    let pm = PowerModel::default();
    assert_relative_eq!(pm.power_budget_cap(1, 1, 1, 1), 22.92, epsilon = 1e-12);
}

#[test]
fn each_extra_tx_chain_raises_the_cap_by_its_overhead() {
    let pm = PowerModel::default();
    let per_chain = pm.p_rf + 32.0 * pm.p_ps;
    for l in 1..8 {
        let lo = pm.power_budget_cap(32, 8, l, 4);
        let hi = pm.power_budget_cap(32, 8, l + 1, 4);
        assert_relative_eq!(hi - lo, per_chain, epsilon = 1e-12);
    }
}

#[test]
fn transmit_side_consumption_counts_active_chains_only() {
    let pm = PowerModel::default();
    // 10 + 3.2 static, 2.5·1 radiated, two active chains at 0.42 each.
    let two = pm.tx_power(32, &[0.5, 0.5]).unwrap();
    assert_relative_eq!(two, 16.54, epsilon = 1e-12);
    // No streams: static power only.
    let none = pm.tx_power(32, &[]).unwrap();
    assert_relative_eq!(none, 13.2, epsilon = 1e-12);
    // A zero entry is an off chain and must not pay chain overhead.
    let with_off = pm.tx_power(32, &[0.5, 0.0, 0.5]).unwrap();
    assert_eq!(with_off, two);
}

#[test]
fn effective_slope_identity_at_the_budget_point() {
    // Folding the chain overhead into the amplifier slope charges exactly
    // one chain's overhead per full budget spent, so the identity
    // tx_power = P_static + β′·Σp is exact when a single active chain
    // carries the whole budget (and only then — each further active chain
    // adds its own overhead on the left but nothing on the right).
    let pm = PowerModel::default();
    let p = [pm.p_max];
    let direct = pm.tx_power(32, &p).unwrap();
    let static_p = pm.p_cp + 32.0 * pm.p_t;
    let via_slope = static_p + pm.beta_prime(32) * p.iter().sum::<f64>();
    assert_relative_eq!(direct, via_slope, epsilon = 1e-12);
    // Two chains sharing the same budget exceed the folded-slope value by
    // exactly one extra chain overhead.
    let split = pm.tx_power(32, &[0.5, 0.5]).unwrap();
    assert_relative_eq!(
        split - via_slope,
        pm.p_rf + 32.0 * pm.p_ps,
        epsilon = 1e-12
    );
}

#[test]
fn effective_slope_values() {
    let pm = PowerModel::default();
    assert_relative_eq!(pm.beta_prime(32), 2.92, epsilon = 1e-12);
    assert_relative_eq!(pm.beta_prime(1), 2.61, epsilon = 1e-12);
}

#[test]
fn negative_and_overbudget_power_rejected() {
    let pm = PowerModel::default();
    assert!(pm.total_power(32, 8, 2, 2, -0.1).is_err());
    assert!(pm.total_power(32, 8, 2, 2, pm.p_max * 1.001).is_err());
    assert!(pm.tx_power(32, &[-0.1]).is_err());
    assert!(pm.tx_power(32, &[0.6, 0.6]).is_err());
    // Exactly at the tolerance boundary is allowed.
    assert!(pm.total_power(32, 8, 2, 2, pm.p_max * (1.0 + 1e-9)).is_ok());
}

#[test]
fn validation_requires_positive_fields() {
    let mut pm = PowerModel::default();
    pm.p_rf = 0.0;
    assert!(pm.validate().is_err());
    let mut pm = PowerModel::default();
    pm.p_max = -1.0;
    assert!(pm.validate().is_err());
    assert!(PowerModel::default().validate().is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn consumption_is_affine_increasing(
        tr_a in 0.0f64..0.5,
        dtr in 0.0f64..0.5,
        l_t in 0usize..8,
        l_r in 0usize..8,
    ) {
        let pm = PowerModel::default();
        let base = pm.total_power(32, 8, l_t, l_r, tr_a).unwrap();
        // Increasing radiated power by dtr raises consumption by exactly β·dtr.
        let more_p = pm.total_power(32, 8, l_t, l_r, tr_a + dtr).unwrap();
        prop_assert!((more_p - base - pm.beta * dtr).abs() <= 1e-12);
        // One more chain on either side strictly increases consumption.
        let more_lt = pm.total_power(32, 8, l_t + 1, l_r, tr_a).unwrap();
        let more_lr = pm.total_power(32, 8, l_t, l_r + 1, tr_a).unwrap();
        prop_assert!(more_lt > base && more_lr > base);
    }

    #[test]
    fn consumption_never_exceeds_the_cap(
        tr_p in 0.0f64..=1.0,
        l_t in 0usize..=8,
        l_r in 0usize..=8,
    ) {
        let pm = PowerModel::default();
        let total = pm.total_power(32, 8, l_t, l_r, tr_p).unwrap();
        prop_assert!(total <= pm.power_budget_cap(32, 8, 8, 8) + 1e-12);
    }

    #[test]
    fn radiated_power_separates_exactly(
        p1 in 0.0f64..0.4,
        p2 in 0.0f64..0.4,
    ) {
        // Same active pattern with zeroed radiation differs by exactly β·Σp.
        let pm = PowerModel::default();
        prop_assume!(p1 > 0.0 && p2 > 0.0);
        let with_power = pm.tx_power(32, &[p1, p2]).unwrap();
        let active_overhead = 2.0 * (pm.p_rf + 32.0 * pm.p_ps);
        let zeroed = pm.p_cp + 32.0 * pm.p_t + active_overhead;
        prop_assert!((with_power - zeroed - pm.beta * (p1 + p2)).abs() <= 1e-12);
    }

    #[test]
    fn slope_always_exceeds_amplifier_inefficiency(n_tx in 1usize..=256) {
        let pm = PowerModel::default();
        prop_assert!(pm.beta_prime(n_tx) > pm.beta);
    }
}
