//! Property tests over random networks and gains.

mod common;

use afrelay::capacity::{mac_region, mac_sum_capacity, RatePoint};
use afrelay::channel::{
    bc_snrs, feasible_gain, mac_snrs, mac_snrs_unnormalized, ptp_snr, relay_output_power,
    BcChannel, MacChannel, PtpChannel, RelayGain,
};
use afrelay::duality::{alpha_from_power_split, dual_ptp, pareto_frontier, verify_mac_bc_duality};
use afrelay::multihop::{three_hop_duality_check, three_hop_feasible_gains, three_hop_mac_snrs};
use afrelay::oracle::{brute_force_ptp, OracleConfig};
use afrelay::relay::coupling_sums;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

fn coeff() -> impl Strategy<Value = f64> {
    -2.0..2.0f64
}

fn power() -> impl Strategy<Value = f64> {
    0.1..5.0f64
}

/// A nonzero relay gain direction of length `r`.
fn direction(r: usize) -> impl Strategy<Value = RelayGain> {
    prop::collection::vec(-1.0..1.0f64, r)
        .prop_filter("direction must not vanish", |v| {
            v.iter().map(|x| x * x).sum::<f64>() > 1e-2
        })
        .prop_map(|v| RelayGain::new(v).unwrap())
}

fn ptp_with_gain() -> impl Strategy<Value = (PtpChannel, RelayGain)> {
    (1usize..=3).prop_flat_map(|r| {
        (
            prop::collection::vec(coeff(), r),
            prop::collection::vec(coeff(), r),
            power(),
            power(),
            direction(r),
        )
            .prop_map(|(f, g, p, pr, d)| (PtpChannel::from_slices(&f, &g, p, pr).unwrap(), d))
    })
}

fn mac_with_gain() -> impl Strategy<Value = (MacChannel, RelayGain)> {
    (1usize..=3).prop_flat_map(|r| {
        (
            prop::collection::vec(coeff(), r),
            prop::collection::vec(coeff(), r),
            prop::collection::vec(coeff(), r),
            (power(), power(), power()),
            direction(r),
        )
            .prop_map(|(f1, f2, g, (p1, p2, pr), d)| {
                (
                    MacChannel::from_slices(&f1, &f2, &g, p1, p2, pr).unwrap(),
                    d,
                )
            })
    })
}

fn bc_with_gain() -> impl Strategy<Value = (BcChannel, RelayGain)> {
    (1usize..=3).prop_flat_map(|r| {
        (
            prop::collection::vec(coeff(), r),
            prop::collection::vec(coeff(), r),
            prop::collection::vec(coeff(), r),
            (power(), power()),
            direction(r),
        )
            .prop_map(|(g, f1, f2, (ps, pr), d)| {
                (BcChannel::from_slices(&g, &f1, &f2, ps, pr).unwrap(), d)
            })
    })
}

/// Power-of-two factors rescale a gain without rounding.
fn exact_factor() -> impl Strategy<Value = f64> {
    (-20i32..=20, any::<bool>())
        .prop_map(|(k, neg)| if neg { -(2f64.powi(k)) } else { 2f64.powi(k) })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn snrs_are_exactly_scale_invariant(
        (ptp, dp) in ptp_with_gain(),
        (mac, dm) in mac_with_gain(),
        (bc, db) in bc_with_gain(),
        c in exact_factor(),
    ) {
        prop_assert_eq!(ptp_snr(&ptp, &dp).unwrap(), ptp_snr(&ptp, &dp.scaled(c)).unwrap());
        prop_assert_eq!(mac_snrs(&mac, &dm).unwrap(), mac_snrs(&mac, &dm.scaled(c)).unwrap());
        prop_assert_eq!(bc_snrs(&bc, &db).unwrap(), bc_snrs(&bc, &db.scaled(c)).unwrap());
    }

    #[test]
    fn snrs_are_scale_invariant_for_real_factors(
        (mac, d) in mac_with_gain(),
        c in 1e-3..1e3f64,
    ) {
        let (a, b) = (mac_snrs(&mac, &d).unwrap(), mac_snrs(&mac, &d.scaled(c)).unwrap());
        prop_assert!(rel(a.snr1, b.snr1) <= 1e-10 && rel(a.snr2, b.snr2) <= 1e-10);
    }

    #[test]
    fn normalized_and_unnormalized_snrs_agree_on_budget((mac, dir) in mac_with_gain()) {
        let d = feasible_gain(&dir, &mac).unwrap();
        let (a, b) = (mac_snrs(&mac, &d).unwrap(), mac_snrs_unnormalized(&mac, &d).unwrap());
        prop_assert!(rel(a.snr1, b.snr1) <= 1e-12, "{a:?} vs {b:?}");
        prop_assert!(rel(a.snr2, b.snr2) <= 1e-12, "{a:?} vs {b:?}");
    }

    #[test]
    fn relay_power_is_quadratic_in_gain((mac, d) in mac_with_gain(), c in -10.0..10.0f64) {
        let p = relay_output_power(&mac, &d).unwrap();
        let pc = relay_output_power(&mac, &d.scaled(c)).unwrap();
        prop_assert!((pc - c * c * p).abs() <= 1e-12 * pc.max(c * c * p).max(1e-300));
    }

    #[test]
    fn more_relay_power_never_hurts((mac, dir) in mac_with_gain(), extra in 0.0..5.0f64) {
        let richer = MacChannel::from_slices(
            mac.f1(), mac.f2(), mac.g(), mac.p1(), mac.p2(), mac.p_relay() + extra,
        ).unwrap();
        let lo = mac_snrs(&mac, &feasible_gain(&dir, &mac).unwrap()).unwrap();
        let hi = mac_snrs(&richer, &feasible_gain(&dir, &richer).unwrap()).unwrap();
        prop_assert!(hi.snr1 >= lo.snr1 * (1.0 - 1e-12));
        prop_assert!(hi.snr2 >= lo.snr2 * (1.0 - 1e-12));
    }

    #[test]
    fn sum_capacity_bounds_every_feasible_gain((mac, dir) in mac_with_gain()) {
        let sum = mac_sum_capacity(&mac);
        let s = mac_snrs(&mac, &feasible_gain(&dir, &mac).unwrap()).unwrap();
        prop_assert!(sum.snr_star - (s.snr1 + s.snr2) >= -1e-9 * sum.snr_star.max(1.0));
    }

    #[test]
    fn sum_corners_add_up_to_capacity((mac, _d) in mac_with_gain()) {
        let sum = mac_sum_capacity(&mac);
        for c in [&sum.corner_1_then_2, &sum.corner_2_then_1] {
            prop_assert!((c.r1 + c.r2 - sum.capacity).abs() <= 1e-12 * sum.capacity.max(1.0));
        }
    }

    #[test]
    fn coupling_discriminant_is_nonnegative((mac, _d) in mac_with_gain()) {
        let a = coupling_sums(&mac);
        let (p1, p2) = (mac.p1(), mac.p2());
        let scale = (a.a11 * a.a22).max(f64::MIN_POSITIVE);
        prop_assert!(a.a11 * a.a22 - a.a12 * a.a12 >= -1e-12 * scale);
        let disc = (p1 * a.a11 + p2 * a.a22).powi(2) - 4.0 * p1 * p2 * (a.a11 * a.a22 - a.a12 * a.a12);
        prop_assert!(disc >= -1e-12 * (p1 * a.a11 + p2 * a.a22).powi(2));
    }

    #[test]
    fn region_boundary_is_monotone((mac, _d) in mac_with_gain()) {
        let r = mac_region(&mac, 20).unwrap();
        prop_assert!(r.is_monotone(1e-12));
        prop_assert_eq!(r.points.len(), 44);
    }

    #[test]
    fn ptp_duality_holds_for_every_feasible_gain((ptp, dir) in ptp_with_gain()) {
        let d = feasible_gain(&dir, &ptp).unwrap();
        let pair = dual_ptp(&ptp, &d).unwrap();
        let c = ptp_snr(&ptp, &d).unwrap().ln_1p();
        let cd = ptp_snr(&pair.dual, &pair.dual_gain).unwrap().ln_1p();
        prop_assert!(rel(c, cd) <= 1e-12);
    }

    #[test]
    fn mac_bc_duality_holds_for_every_feasible_gain((mac, dir) in mac_with_gain()) {
        let d = feasible_gain(&dir, &mac).unwrap();
        let r = verify_mac_bc_duality(&mac, &d).unwrap();
        prop_assert!(r.passed, "{r:?}");
        prop_assert!(r.corner_residual <= 1e-10);
        prop_assert!(r.alpha_residual <= 1e-12);
        prop_assert_eq!(r.containment_violations, 0);
    }

    #[test]
    fn alpha_ignores_gain_scale((mac, d) in mac_with_gain(), c in exact_factor()) {
        let a = alpha_from_power_split(&mac, &d).unwrap();
        let b = alpha_from_power_split(&mac, &d.scaled(c)).unwrap();
        prop_assert!((a - b).abs() <= 1e-14);
    }

    #[test]
    fn pareto_frontier_ignores_input_order(
        pts in prop::collection::vec((0.0..3.0f64, 0.0..3.0f64, 0u8..3), 1..60)
            .prop_flat_map(|v| Just(v.clone()).prop_shuffle().prop_map(move |s| (v.clone(), s)))
    ) {
        let to_points = |v: &[(f64, f64, u8)]| -> Vec<RatePoint> {
            v.iter().map(|&(a, b, l)| RatePoint::new(a, b, None, format!("s{l}"))).collect()
        };
        let (orig, shuffled) = pts;
        let f1 = pareto_frontier(&to_points(&orig));
        let f2 = pareto_frontier(&to_points(&shuffled));
        prop_assert_eq!(&f1, &f2);
        // no frontier point is dominated by an input point
        for p in &f1 {
            prop_assert!(!orig.iter().any(|&(a, b, _)| a >= p.r1 && b >= p.r2 && (a > p.r1 || b > p.r2)));
        }
    }

    #[test]
    fn three_hop_identity_and_stage_scaling(seed in any::<u64>(), ka in -8i32..8, kb in -8i32..8) {
        let mut rng = common::rng(seed);
        let net = common::random_three_hop(&mut rng);
        let (a, b) = afrelay::cli::random_block_gains(&net, seed, 0).unwrap();
        let (a, b) = three_hop_feasible_gains(&net, &a, &b).unwrap();
        let r = three_hop_duality_check(&net, &a, &b).unwrap();
        prop_assert!(r.deltas.identity_residual <= 1e-12);
        prop_assert!(r.passed, "{r:?}");
        let (s, _) = three_hop_mac_snrs(&net, &a, &b).unwrap();
        let (sc, _) = three_hop_mac_snrs(&net, &a.scaled(2f64.powi(ka)), &b.scaled(-(2f64.powi(kb)))).unwrap();
        prop_assert_eq!(s, sc);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn oracle_is_deterministic((ptp, _d) in ptp_with_gain(), seed in any::<u64>()) {
        let cfg = OracleConfig { n_samples: 2_000, seed, refine: true };
        prop_assert_eq!(brute_force_ptp(&ptp, &cfg), brute_force_ptp(&ptp, &cfg));
    }
}
