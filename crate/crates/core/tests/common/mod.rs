//! Seeded random networks shared by the integration tests.

#![allow(dead_code)]

use afrelay::channel::{BcChannel, MacChannel, PtpChannel};
use afrelay::multihop::ThreeHopNetwork;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn coeffs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
}

pub fn power(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.1..5.0)
}

pub fn relays(rng: &mut ChaCha8Rng) -> usize {
    rng.random_range(1..=3)
}

pub fn random_ptp(rng: &mut ChaCha8Rng) -> PtpChannel {
    let r = relays(rng);
    let (f, g) = (coeffs(rng, r), coeffs(rng, r));
    PtpChannel::from_slices(&f, &g, power(rng), power(rng)).unwrap()
}

pub fn random_mac_with(rng: &mut ChaCha8Rng, r: usize) -> MacChannel {
    let (f1, f2, g) = (coeffs(rng, r), coeffs(rng, r), coeffs(rng, r));
    MacChannel::from_slices(&f1, &f2, &g, power(rng), power(rng), power(rng)).unwrap()
}

pub fn random_mac(rng: &mut ChaCha8Rng) -> MacChannel {
    let r = relays(rng);
    random_mac_with(rng, r)
}

pub fn random_bc(rng: &mut ChaCha8Rng) -> BcChannel {
    let r = relays(rng);
    let (g, f1, f2) = (coeffs(rng, r), coeffs(rng, r), coeffs(rng, r));
    BcChannel::from_slices(&g, &f1, &f2, power(rng), power(rng)).unwrap()
}

/// Three-hop net whose relays carry a random mix of one and two antennas.
pub fn random_three_hop(rng: &mut ChaCha8Rng) -> ThreeHopNetwork {
    let blocks = |rng: &mut ChaCha8Rng| -> Vec<usize> {
        let k = rng.random_range(1..=3);
        (0..k).map(|_| rng.random_range(1..=2)).collect()
    };
    let blocks_a = blocks(rng);
    let blocks_b = blocks(rng);
    let n1: usize = blocks_a.iter().sum();
    let n2: usize = blocks_b.iter().sum();
    let f1 = DVector::from_vec(coeffs(rng, n1));
    let f2 = DVector::from_vec(coeffs(rng, n1));
    let g = DVector::from_vec(coeffs(rng, n2));
    let h = DMatrix::from_vec(n2, n1, coeffs(rng, n1 * n2));
    ThreeHopNetwork::new(
        f1,
        f2,
        g,
        h,
        blocks_a,
        blocks_b,
        power(rng),
        power(rng),
        power(rng),
        power(rng),
    )
    .unwrap()
}

/// The two-relay reference MAC with `A11 = A22 = 5/17`, `A12 = 4/17`.
pub fn asymmetric_mac() -> MacChannel {
    MacChannel::from_slices(&[1.0, 0.5], &[0.5, 1.0], &[1.0, 1.0], 1.0, 1.0, 2.0).unwrap()
}

/// One relay, all coefficients and powers equal to one.
pub fn symmetric_mac() -> MacChannel {
    MacChannel::from_slices(&[1.0], &[1.0], &[1.0], 1.0, 1.0, 1.0).unwrap()
}
