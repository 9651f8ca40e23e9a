//! Brute-force verification of the closed forms.
//!
//! Relay gain directions are drawn uniformly from the unit sphere (normalized
//! standard normal vectors, so every sign pattern is covered), scaled onto the
//! relay budget and evaluated directly. The best sample can be polished by a
//! derivative-free coordinate descent. Sample `i` is drawn from its own
//! ChaCha stream, so results do not depend on how the work is split across
//! threads.
//!
//! The module also holds an independent evaluator for three-hop networks that
//! propagates covariance matrices stage by stage instead of using the closed
//! Δ expressions.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{
    mac_corner_rates, mac_sum_capacity, mac_weighted_optimum, ptp_capacity, User,
};
use crate::channel::{
    feasible_gain, mac_snrs, power_mismatch, ptp_snr, relay_output_power, MacChannel, PtpChannel,
    RelayGain, RelayNetwork, SnrPair,
};
use crate::error::{AfError, Result};
use crate::multihop::{BlockGain, ThreeHopNetwork};
use crate::relay::{project_onto_family, FamilyFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Polish the best sample with coordinate descent.
    pub refine: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            seed: 0,
            refine: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_value: f64,
    pub best_gain: RelayGain,
    pub closed_form_value: f64,
    /// `closed_form_value − best_value`.
    pub gap: f64,
    /// Fit of the best gain onto the MAC gain family, where applicable.
    pub family_fit: Option<FamilyFit>,
}

const REFINE_CYCLES: usize = 200;

/// Standard normal direction number `index` of the stream family `seed`.
pub fn sample_direction(seed: u64, index: u64, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Best sampled value and the gain that reached it. Ties resolve to the
/// lowest sample index.
fn best_sample<N, F>(net: &N, cfg: &OracleConfig, objective: &F) -> (f64, RelayGain)
where
    N: RelayNetwork + Sync,
    F: Fn(&RelayGain) -> f64 + Sync,
{
    let r = net.num_relays();
    let eval = |i: usize| -> (f64, usize) {
        let dir = sample_direction(cfg.seed, i as u64, r);
        let value = RelayGain::new(dir)
            .ok()
            .and_then(|d| feasible_gain(&d, net).ok())
            .map(|d| objective(&d))
            .filter(|v| v.is_finite())
            .unwrap_or(f64::NEG_INFINITY);
        (value, i)
    };
    let pick = |a: (f64, usize), b: (f64, usize)| {
        if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
            b
        } else {
            a
        }
    };
    let (value, index) = (0..cfg.n_samples.max(1))
        .into_par_iter()
        .map(eval)
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), pick);
    let dir = sample_direction(cfg.seed, index as u64, r);
    let gain = feasible_gain(&RelayGain::new(dir).expect("finite sample"), net)
        .expect("sampled direction is nonzero");
    (value, gain)
}

/// Cyclic coordinate descent on feasible gains with a halving step.
fn refine<N, F>(net: &N, start: RelayGain, start_value: f64, objective: &F) -> (f64, RelayGain)
where
    N: RelayNetwork,
    F: Fn(&RelayGain) -> f64,
{
    let mut x = start;
    let mut fx = start_value;
    let mut step = 0.1 * x.norm();
    for _ in 0..REFINE_CYCLES {
        let mut improved = false;
        for i in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.as_slice().to_vec();
                y[i] += sign * step;
                let Ok(y) = RelayGain::new(y).and_then(|y| feasible_gain(&y, net)) else {
                    continue;
                };
                let fy = objective(&y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (fx, x)
}

fn search<N, F>(net: &N, cfg: &OracleConfig, objective: F) -> (f64, RelayGain)
where
    N: RelayNetwork + Sync,
    F: Fn(&RelayGain) -> f64 + Sync,
{
    let (value, gain) = best_sample(net, cfg, &objective);
    if cfg.refine && value.is_finite() {
        refine(net, gain, value, &objective)
    } else {
        (value, gain)
    }
}

/// Samples PTP gains and compares the best SNR against the closed-form
/// optimum `exp(C) − 1`. Values are SNRs, not rates.
pub fn brute_force_ptp(net: &PtpChannel, cfg: &OracleConfig) -> OracleResult {
    let objective = |d: &RelayGain| ptp_snr(net, d).unwrap_or(f64::NEG_INFINITY);
    let (best_value, best_gain) = search(net, cfg, objective);
    let closed = ptp_capacity(net).exp_m1();
    OracleResult {
        best_value,
        best_gain,
        closed_form_value: closed,
        gap: closed - best_value,
        family_fit: None,
    }
}

/// `max(μ1 R1 + μ2 R2)` over the two successive-decoding corners of the
/// pentagon for the given SNRs.
pub fn weighted_rate(s: SnrPair, mu1: f64, mu2: f64) -> f64 {
    let one_last = mu1 * s.snr1.ln_1p() + mu2 * (s.snr2 / (1.0 + s.snr1)).ln_1p();
    let two_last = mu1 * (s.snr1 / (1.0 + s.snr2)).ln_1p() + mu2 * s.snr2.ln_1p();
    one_last.max(two_last)
}

/// Samples MAC gains for the weighted sum rate `μ1 R1 + μ2 R2` (nats) and
/// compares against the closed-form optimum. The best gain is projected onto
/// the gain family to check that the optimum has the predicted structure.
pub fn brute_force_mac_weighted(
    net: &MacChannel,
    mu1: f64,
    mu2: f64,
    cfg: &OracleConfig,
) -> Result<OracleResult> {
    let valid = |m: f64| m.is_finite() && m >= 0.0;
    if !valid(mu1) || !valid(mu2) || mu1 + mu2 <= 0.0 {
        return Err(AfError::InvalidWeights { mu1, mu2 });
    }
    let objective = |d: &RelayGain| {
        mac_snrs(net, d)
            .map(|s| weighted_rate(s, mu1, mu2))
            .unwrap_or(f64::NEG_INFINITY)
    };
    let (best_value, best_gain) = search(net, cfg, objective);
    let closed = if mu1 == mu2 {
        mu1 * mac_sum_capacity(net).capacity
    } else if mu2 == 0.0 {
        mu1 * mac_corner_rates(net, User::One).0
    } else if mu1 == 0.0 {
        mu2 * mac_corner_rates(net, User::Two).0
    } else {
        mac_weighted_optimum(net, mu1, mu2)?.objective
    };
    let family_fit = project_onto_family(net, &best_gain).ok();
    Ok(OracleResult {
        best_value,
        best_gain,
        closed_form_value: closed,
        gap: closed - best_value,
        family_fit,
    })
}

/// Largest directional derivative of the weighted objective along the
/// tangent space of the relay power constraint at `d`.
///
/// Tangent directions are the coordinate axes with their component along the
/// constraint normal removed, scaled to `‖d‖`; derivatives are central
/// differences with relative step `1e-6`, re-feasibilizing both probes.
/// A single relay has no tangent directions, and the result is zero.
pub fn stationarity_check(net: &MacChannel, d: &RelayGain, mu1: f64, mu2: f64) -> Result<f64> {
    let valid = |m: f64| m.is_finite() && m >= 0.0;
    if !valid(mu1) || !valid(mu2) || mu1 + mu2 <= 0.0 {
        return Err(AfError::InvalidWeights { mu1, mu2 });
    }
    if d.is_zero() {
        return Err(AfError::DegenerateGain);
    }
    if power_mismatch(net, d)? > 1e-9 {
        return Err(AfError::Infeasible {
            used: relay_output_power(net, d)?,
            budget: net.relay_budget(),
        });
    }
    let r = net.num_relays();
    let x = d.as_slice();
    let normal: Vec<f64> = (0..r).map(|i| net.relay_input_power(i) * x[i]).collect();
    let nn: f64 = normal.iter().map(|v| v * v).sum();
    let objective = |y: Vec<f64>| -> Result<f64> {
        let g = feasible_gain(&RelayGain::new(y)?, net)?;
        Ok(weighted_rate(mac_snrs(net, &g)?, mu1, mu2))
    };
    let h = 1e-6;
    let dn = d.norm();
    let mut worst: f64 = 0.0;
    for i in 0..r {
        let mut t: Vec<f64> = normal.iter().map(|v| -v * normal[i] / nn).collect();
        t[i] += 1.0;
        let tn = t.iter().map(|v| v * v).sum::<f64>().sqrt();
        if tn <= 1e-12 {
            continue;
        }
        let t: Vec<f64> = t.iter().map(|v| v * dn / tn).collect();
        let plus: Vec<f64> = x.iter().zip(&t).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = x.iter().zip(&t).map(|(a, b)| a - h * b).collect();
        let deriv = (objective(plus)? - objective(minus)?) / (2.0 * h);
        worst = worst.max(deriv.abs());
    }
    Ok(worst)
}

/// Three-hop MAC SNRs and `Δ_m` obtained by scaling the stage gains onto their
/// budgets and propagating covariances through the chain.
pub fn covariance_chain_mac(net: &ThreeHopNetwork, a: &BlockGain, b: &BlockGain) -> (SnrPair, f64) {
    let (am, bm) = (a.to_matrix(), b.to_matrix());
    let (f1, f2, g, h) = (net.f1_bar(), net.f2_bar(), net.g_bar(), net.h());
    let n1 = am.nrows();
    let n2 = bm.nrows();
    let sigma1 = f1 * f1.transpose() * net.p1()
        + f2 * f2.transpose() * net.p2()
        + DMatrix::<f64>::identity(n1, n1);
    let q1 = (&am * &sigma1 * am.transpose()).trace();
    let sa = (net.p_r1() / q1).sqrt();
    let a_s = &am * sa;
    let sigma2 = h * &a_s * &sigma1 * a_s.transpose() * h.transpose() + DMatrix::identity(n2, n2);
    let q2 = (&bm * &sigma2 * bm.transpose()).trace();
    let sb = (net.p_r2() / q2).sqrt();
    let b_s = &bm * sb;
    let chain = &b_s * h * &a_s;
    let amp = |f: &DVector<f64>| g.dot(&(&chain * f));
    let relayed_noise = h * &a_s * a_s.transpose() * h.transpose() + DMatrix::identity(n2, n2);
    let bg = b_s.tr_mul(g);
    let noise = 1.0 + bg.dot(&(&relayed_noise * &bg));
    let snrs = SnrPair {
        snr1: net.p1() * amp(f1).powi(2) / noise,
        snr2: net.p2() * amp(f2).powi(2) / noise,
    };
    let delta = net.p_r1() * net.p_r2() * noise / (sa * sa * sb * sb);
    (snrs, delta)
}

/// Three-hop BC SNRs and `(Δ_b1, Δ_b2)` for BC-side gains, by covariance
/// propagation from the source (power `P_R2`) through `b_b` (budget `P_R1`)
/// and `a_b` (budget `P1 + P2`).
pub fn covariance_chain_bc(
    net: &ThreeHopNetwork,
    a_b: &BlockGain,
    b_b: &BlockGain,
) -> (SnrPair, f64, f64) {
    let (am, bm) = (a_b.to_matrix(), b_b.to_matrix());
    let (f1, f2, g, h) = (net.f1_bar(), net.f2_bar(), net.g_bar(), net.h());
    let ht = h.transpose();
    let n1 = am.nrows();
    let n2 = bm.nrows();
    let p = net.p_total();
    let sigma1 = g * g.transpose() * net.p_r2() + DMatrix::<f64>::identity(n2, n2);
    let q1 = (&bm * &sigma1 * bm.transpose()).trace();
    let sb = (net.p_r1() / q1).sqrt();
    let b_s = &bm * sb;
    let sigma2 = &ht * &b_s * &sigma1 * b_s.transpose() * h + DMatrix::identity(n1, n1);
    let q2 = (&am * &sigma2 * am.transpose()).trace();
    let sa = (p / q2).sqrt();
    let a_s = &am * sa;
    let chain = &a_s * &ht * &b_s;
    let relayed_noise = &ht * &b_s * b_s.transpose() * h + DMatrix::identity(n1, n1);
    let user = |f: &DVector<f64>| {
        let amp = f.dot(&(&chain * g));
        let fa = a_s.tr_mul(f);
        let noise = 1.0 + fa.dot(&(&relayed_noise * &fa));
        let snr = net.p_r2() * amp * amp / noise;
        let delta = p * net.p_r1() * noise / (sa * sa * sb * sb);
        (snr, delta)
    };
    let (s1, d1) = user(f1);
    let (s2, d2) = user(f2);
    (SnrPair { snr1: s1, snr2: s2 }, d1, d2)
}
