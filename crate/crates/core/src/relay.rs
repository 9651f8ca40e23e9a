//! Closed-form optimal relay amplification.
//!
//! The point-to-point optimum is a single vector. For the two-user MAC every
//! boundary point of the capacity region is reached by a member of the
//! one-parameter family
//!
//! ```text
//! D(θ) = γ G (P1 F1 sin θ + P2 F2 cos θ) (I + P1 F1² + P2 F2² + P_R G²)⁻¹
//! ```
//!
//! where γ rescales the member onto the relay power budget.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::{feasible_gain, MacChannel, PtpChannel, RelayGain};
use crate::error::{AfError, Result};

/// A feasible member of the MAC gain family together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaGain {
    pub theta: f64,
    pub gain: RelayGain,
    pub gamma: f64,
}

/// Channel coupling sums `A_uv = Σ g² f_u f_v / (1 + P1 f1² + P2 f2² + P_R g²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub a11: f64,
    pub a22: f64,
    pub a12: f64,
}

pub fn coupling_sums(net: &MacChannel) -> Coupling {
    let mut c = Coupling {
        a11: 0.0,
        a22: 0.0,
        a12: 0.0,
    };
    for i in 0..net.num_relays() {
        let (f1, f2, g) = (net.f1()[i], net.f2()[i], net.g()[i]);
        let w = net.full_weight(i);
        c.a11 += g * g * f1 * f1 / w;
        c.a22 += g * g * f2 * f2 / w;
        c.a12 += g * g * f1 * f2 / w;
    }
    c
}

/// Maps an angle to the representative of `±(sin θ, cos θ)` with a
/// non-negative cosine (ties broken towards a non-negative sine), so the result
/// lies in `[-π/2, π/2]`.
pub fn canonical_theta(theta: f64) -> f64 {
    let (s, c) = sin_cos_exact(theta);
    canonical_atan2(s, c)
}

/// `atan2(c1, c2)` after flipping `(c1, c2)` into the half-plane `c2 ≥ 0`.
pub fn canonical_atan2(c1: f64, c2: f64) -> f64 {
    let flip = c2 < 0.0 || (c2 == 0.0 && c1 < 0.0);
    let (c1, c2) = if flip { (-c1, -c2) } else { (c1, c2) };
    // -0.0 in c1 would give -0.0 here; normalise for stable output
    let t = c1.atan2(c2);
    if t == 0.0 {
        0.0
    } else {
        t
    }
}

/// `γ` of the point-to-point optimum.
pub fn ptp_gamma(net: &PtpChannel) -> Result<f64> {
    let (p, pr) = (net.p_source(), net.p_relay());
    let mut denom = 0.0;
    let mut connected = false;
    for (&f, &g) in net.f().iter().zip(net.g()) {
        if f * g != 0.0 {
            connected = true;
        }
        let den = 1.0 + p * f * f + pr * g * g;
        denom += f * f * g * g * (1.0 + p * f * f) / (den * den);
    }
    if !connected {
        return Err(AfError::Disconnected);
    }
    Ok((pr / denom).sqrt())
}

/// Optimal PTP relay gain `d_i = γ f_i g_i / (1 + P f_i² + P_R g_i²)`.
pub fn ptp_optimal_gain(net: &PtpChannel) -> Result<RelayGain> {
    let gamma = ptp_gamma(net)?;
    let (p, pr) = (net.p_source(), net.p_relay());
    let d = net
        .f()
        .iter()
        .zip(net.g())
        .map(|(&f, &g)| gamma * f * g / (1.0 + p * f * f + pr * g * g))
        .collect();
    RelayGain::new(d)
}

/// Unnormalized family member for coefficients `(c1, c2)` on the user terms.
pub(crate) fn family_direction(net: &MacChannel, c1: f64, c2: f64) -> Vec<f64> {
    (0..net.num_relays())
        .map(|i| {
            let (f1, f2, g) = (net.f1()[i], net.f2()[i], net.g()[i]);
            g * (c1 * net.p1() * f1 + c2 * net.p2() * f2) / net.full_weight(i)
        })
        .collect()
}

/// Whether a family direction is zero relative to the size of its two
/// basis vectors.
fn direction_vanishes(net: &MacChannel, dir: &[f64]) -> bool {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = norm(&family_direction(net, 1.0, 0.0)) + norm(&family_direction(net, 0.0, 1.0));
    norm(dir) <= 1e-12 * scale || scale == 0.0
}

fn sin_cos_exact(theta: f64) -> (f64, f64) {
    // sin/cos of ±π/2 and 0 are returned exactly so that the boundary
    // members drop the other user's term entirely
    if theta == FRAC_PI_2 {
        (1.0, 0.0)
    } else if theta == -FRAC_PI_2 {
        (-1.0, 0.0)
    } else {
        theta.sin_cos()
    }
}

/// Feasible member `D(θ)` of the MAC gain family.
///
/// `γ` is evaluated from its explicit radical; the returned gain is `γ` times
/// the unnormalized member and meets the relay budget exactly.
pub fn mac_gain_theta(net: &MacChannel, theta: f64) -> Result<ThetaGain> {
    let (s, c) = sin_cos_exact(theta);
    let dir = family_direction(net, s, c);
    if direction_vanishes(net, &dir) {
        return Err(AfError::DegenerateAngle { theta });
    }
    let (p1, p2) = (net.p1(), net.p2());
    let denom: f64 = (0..net.num_relays())
        .map(|i| {
            let (f1, f2) = (net.f1()[i], net.f2()[i]);
            dir[i] * dir[i] * (1.0 + p1 * f1 * f1 + p2 * f2 * f2)
        })
        .sum();
    let gamma = (net.p_relay() / denom).sqrt();
    let gain = RelayGain::new(dir.iter().map(|x| gamma * x).collect())?;
    debug_assert!({
        let reference = feasible_gain(&RelayGain::new(dir.clone())?, net)?;
        gain.as_slice()
            .iter()
            .zip(reference.as_slice())
            .all(|(a, b)| (a - b).abs() <= 1e-10 * b.abs().max(1e-300) + 1e-15)
    });
    Ok(ThetaGain { theta, gain, gamma })
}

/// How the sum-rate angle was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaBranch {
    /// `atan2(P_R P2 A12, SNR* − P_R P1 A11)`.
    Primary,
    /// Both arguments of the primary form vanish; the second row of the
    /// eigen-equation was used instead.
    Alternate,
    /// Every direction is sum-rate optimal (`A12 = 0`, `P1 A11 = P2 A22`);
    /// `θ = π/4` is reported.
    Isotropic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumRateAngle {
    pub theta: f64,
    pub branch: ThetaBranch,
    pub snr_star: f64,
}

/// Larger eigenvalue of `P_R · [[P1 A11, P1 A12], [P2 A12, P2 A22]]`, which
/// is the optimal sum SNR.
pub(crate) fn snr_star(net: &MacChannel, a: &Coupling) -> f64 {
    let (p1, p2, pr) = (net.p1(), net.p2(), net.p_relay());
    let tr = p1 * a.a11 + p2 * a.a22;
    let det = p1 * p2 * (a.a11 * a.a22 - a.a12 * a.a12);
    let disc = (tr * tr - 4.0 * det).max(0.0);
    0.5 * pr * (tr + disc.sqrt())
}

/// Sum-rate optimal angle together with the branch that produced it.
pub fn theta_sum_rate_detailed(net: &MacChannel) -> Result<SumRateAngle> {
    let a = coupling_sums(net);
    let s = snr_star(net, &a);
    if !(s > 0.0) {
        return Err(AfError::Disconnected);
    }
    let (p1, p2, pr) = (net.p1(), net.p2(), net.p_relay());
    let tiny = 1e-13 * s;
    let num = pr * p2 * a.a12;
    let den = s - pr * p1 * a.a11;
    if num.abs() > tiny || den.abs() > tiny {
        return Ok(SumRateAngle {
            theta: canonical_atan2(num, den),
            branch: ThetaBranch::Primary,
            snr_star: s,
        });
    }
    // second row of (P A − λ) u = 0, rescaled to family coefficients
    let c1 = s - pr * p2 * a.a22;
    let c2 = pr * p1 * a.a12;
    if c1.abs() > tiny || c2.abs() > tiny {
        return Ok(SumRateAngle {
            theta: canonical_atan2(c1, c2),
            branch: ThetaBranch::Alternate,
            snr_star: s,
        });
    }
    Ok(SumRateAngle {
        theta: std::f64::consts::FRAC_PI_4,
        branch: ThetaBranch::Isotropic,
        snr_star: s,
    })
}

/// Angle `θ¹¹` of the sum-rate optimal family member.
pub fn theta_sum_rate(net: &MacChannel) -> Result<f64> {
    Ok(theta_sum_rate_detailed(net)?.theta)
}

/// Least-squares fit of a gain onto the family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyFit {
    pub theta: f64,
    /// `‖d − fit‖ / ‖d‖`; `+∞` when `d` uses a relay whose `g_i` is zero.
    pub residual: f64,
}

/// Inverts the family parametrization: fits `d ≈ c1 u + c2 v` with
/// `u = g P1 f1 / W`, `v = g P2 f2 / W` and reports `θ = atan2(c1, c2)`
/// in canonical form together with the relative misfit.
pub fn project_onto_family(net: &MacChannel, d: &RelayGain) -> Result<FamilyFit> {
    let r = net.num_relays();
    if d.len() != r {
        return Err(AfError::Dimension {
            what: "relay gain",
            expected: r,
            found: d.len(),
        });
    }
    if d.is_zero() {
        return Err(AfError::DegenerateGain);
    }
    let dd = d.as_slice();
    let u = family_direction(net, 1.0, 0.0);
    let v = family_direction(net, 0.0, 1.0);
    let m = DMatrix::from_fn(r, 2, |i, j| if j == 0 { u[i] } else { v[i] });
    let rhs = DVector::from_column_slice(dd);
    let svd = m.clone().svd(true, true);
    let eps = 1e-14 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    let coef = svd
        .solve(&rhs, eps)
        .map_err(|e| AfError::InvalidNetwork(e.to_string()))?;
    let (c1, c2) = (coef[0], coef[1]);
    let structural_break = net
        .g()
        .iter()
        .zip(dd)
        .any(|(&g, &di)| g == 0.0 && di != 0.0);
    let residual = if structural_break {
        f64::INFINITY
    } else {
        (&rhs - &m * &coef).norm() / rhs.norm()
    };
    Ok(FamilyFit {
        theta: canonical_atan2(c1, c2),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{mac_snrs, ptp_snr, relay_output_power};
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn sym() -> MacChannel {
        MacChannel::from_slices(&[1.0], &[1.0], &[1.0], 1.0, 1.0, 1.0).unwrap()
    }

    fn asym() -> MacChannel {
        MacChannel::from_slices(&[1.0, 0.5], &[0.5, 1.0], &[1.0, 1.0], 1.0, 1.0, 2.0).unwrap()
    }

    fn three_relay() -> MacChannel {
        MacChannel::from_slices(
            &[0.9, -0.4, 1.3],
            &[0.2, 1.1, -0.7],
            &[1.2, 0.6, -0.8],
            1.5,
            0.7,
            2.2,
        )
        .unwrap()
    }

    #[test]
    fn ptp_optimum_examples() {
        let net = PtpChannel::from_slices(&[1.0], &[1.0], 1.0, 1.0).unwrap();
        assert_relative_eq!(ptp_gamma(&net).unwrap(), 3.0 / 2f64.sqrt(), epsilon = 1e-14);
        let d = ptp_optimal_gain(&net).unwrap();
        assert_relative_eq!(d.as_slice()[0], 1.0 / 2f64.sqrt(), epsilon = 1e-15);

        let two = PtpChannel::from_slices(&[1.0, 1.0], &[1.0, 1.0], 1.0, 1.0).unwrap();
        let d = ptp_optimal_gain(&two).unwrap();
        assert_relative_eq!(d.as_slice()[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(d.as_slice()[1], 0.5, epsilon = 1e-15);

        let half = PtpChannel::from_slices(&[1.0, 0.0], &[1.0, 1.0], 1.0, 1.0).unwrap();
        let d = ptp_optimal_gain(&half).unwrap();
        assert_eq!(d.as_slice()[1], 0.0);
        assert_relative_eq!(relay_output_power(&half, &d).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn ptp_optimum_rejects_disconnected() {
        let net = PtpChannel::from_slices(&[1.0, 0.0], &[0.0, 1.0], 1.0, 1.0).unwrap();
        assert_eq!(ptp_optimal_gain(&net).unwrap_err(), AfError::Disconnected);
    }

    #[test]
    fn ptp_optimum_beats_perturbations() {
        let net = PtpChannel::from_slices(&[0.3, -1.2, 0.8], &[1.1, 0.4, -0.9], 2.0, 0.5).unwrap();
        let d = ptp_optimal_gain(&net).unwrap();
        let best = ptp_snr(&net, &d).unwrap();
        for k in 0..30 {
            let mut p = d.as_slice().to_vec();
            p[k % 3] += 0.01 * ((k as f64) - 15.0);
            let q = feasible_gain(&RelayGain::new(p).unwrap(), &net).unwrap();
            assert!(ptp_snr(&net, &q).unwrap() <= best + 1e-12);
        }
    }

    #[test]
    fn family_member_is_feasible_and_gamma_matches_scaling() {
        let net = three_relay();
        for k in 0..20 {
            let theta = -FRAC_PI_2 + PI * (k as f64 + 0.5) / 20.0;
            let tg = mac_gain_theta(&net, theta).unwrap();
            assert!(tg.gamma > 0.0);
            let used = relay_output_power(&net, &tg.gain).unwrap();
            assert_relative_eq!(used, net.p_relay(), max_relative = 1e-12);
            let (s, c) = theta.sin_cos();
            let dir = RelayGain::new(family_direction(&net, s, c)).unwrap();
            let reference = feasible_gain(&dir, &net).unwrap();
            for (a, b) in tg.gain.as_slice().iter().zip(reference.as_slice()) {
                assert_relative_eq!(*a, *b, max_relative = 1e-12, epsilon = 1e-300);
            }
        }
    }

    #[test]
    fn family_examples_on_symmetric_net() {
        let net = sym();
        let g = mac_gain_theta(&net, FRAC_PI_4).unwrap();
        assert_relative_eq!(g.gain.as_slice()[0], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        let g = mac_gain_theta(&net, 1.2).unwrap();
        assert_relative_eq!(
            g.gain.as_slice()[0].abs(),
            1.0 / 3f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn family_endpoints_drop_the_other_user() {
        let net = asym();
        let top = mac_gain_theta(&net, FRAC_PI_2).unwrap();
        let u = family_direction(&net, 1.0, 0.0);
        let ratio = top.gain.as_slice()[0] / u[0];
        for (a, b) in top.gain.as_slice().iter().zip(&u) {
            assert_relative_eq!(*a, ratio * b, max_relative = 1e-14);
        }
        let bottom = mac_gain_theta(&net, 0.0).unwrap();
        let v = family_direction(&net, 0.0, 1.0);
        let ratio = bottom.gain.as_slice()[0] / v[0];
        for (a, b) in bottom.gain.as_slice().iter().zip(&v) {
            assert_relative_eq!(*a, ratio * b, max_relative = 1e-14);
        }
    }

    #[test]
    fn family_reports_degenerate_angle() {
        // f1 = f2 with equal powers: θ = -π/4 cancels the two user terms
        let net =
            MacChannel::from_slices(&[1.0, 2.0], &[1.0, 2.0], &[1.0, 1.0], 1.0, 1.0, 1.0).unwrap();
        let err = mac_gain_theta(&net, -FRAC_PI_4).unwrap_err();
        assert!(matches!(err, AfError::DegenerateAngle { .. }));
        let silent = MacChannel::from_slices(&[1.0], &[1.0], &[1.0], 1.0, 0.0, 1.0).unwrap();
        assert!(mac_gain_theta(&silent, 0.0).is_err());
    }

    #[test]
    fn theta11_examples() {
        assert_relative_eq!(theta_sum_rate(&sym()).unwrap(), FRAC_PI_4, epsilon = 1e-14);
        assert_relative_eq!(theta_sum_rate(&asym()).unwrap(), FRAC_PI_4, epsilon = 1e-14);
        let dead = MacChannel::from_slices(&[0.0], &[0.0], &[1.0], 1.0, 1.0, 1.0).unwrap();
        assert_eq!(theta_sum_rate(&dead).unwrap_err(), AfError::Disconnected);
    }

    #[test]
    fn theta11_without_user_two_is_a_user_one_direction() {
        let net =
            MacChannel::from_slices(&[1.0, 0.5], &[0.5, 1.0], &[1.0, 1.0], 1.0, 0.0, 2.0).unwrap();
        let t = theta_sum_rate_detailed(&net).unwrap();
        assert_eq!(t.branch, ThetaBranch::Alternate);
        let g = mac_gain_theta(&net, t.theta).unwrap();
        let top = mac_gain_theta(&net, FRAC_PI_2).unwrap();
        for (a, b) in g.gain.as_slice().iter().zip(top.gain.as_slice()) {
            assert_relative_eq!(a.abs(), b.abs(), max_relative = 1e-12);
        }
    }

    #[test]
    fn theta11_isotropic_case_is_flagged() {
        // A12 = 0 and equal diagonal terms: any direction is optimal
        let net =
            MacChannel::from_slices(&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0], 1.0, 1.0, 1.0).unwrap();
        let t = theta_sum_rate_detailed(&net).unwrap();
        assert_eq!(t.branch, ThetaBranch::Isotropic);
    }

    #[test]
    fn theta11_maximizes_sum_snr() {
        let net = three_relay();
        let t = theta_sum_rate_detailed(&net).unwrap();
        let g = mac_gain_theta(&net, t.theta).unwrap();
        let s = mac_snrs(&net, &g.gain).unwrap();
        assert_relative_eq!(s.snr1 + s.snr2, t.snr_star, max_relative = 1e-12);
        for k in 0..2000 {
            let th = -FRAC_PI_2 + PI * k as f64 / 2000.0;
            if let Ok(g) = mac_gain_theta(&net, th) {
                let s = mac_snrs(&net, &g.gain).unwrap();
                assert!(s.snr1 + s.snr2 <= t.snr_star * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn projection_round_trips() {
        let net = three_relay();
        let g = mac_gain_theta(&net, 0.7).unwrap();
        let fit = project_onto_family(&net, &g.gain).unwrap();
        assert_relative_eq!(fit.theta, 0.7, epsilon = 1e-10);
        assert!(fit.residual <= 1e-10);

        let flipped = g.gain.scaled(-3.0);
        let fit = project_onto_family(&net, &flipped).unwrap();
        assert_relative_eq!(fit.theta, 0.7, epsilon = 1e-10);
        assert!(fit.residual <= 1e-10);

        let off = RelayGain::new(vec![0.3, 0.9, -0.2]).unwrap();
        assert!(project_onto_family(&net, &off).unwrap().residual > 1e-3);
    }

    #[test]
    fn projection_flags_structural_break() {
        let net =
            MacChannel::from_slices(&[1.0, 1.0], &[0.5, 1.0], &[1.0, 0.0], 1.0, 1.0, 1.0).unwrap();
        let d = RelayGain::new(vec![0.3, 0.2]).unwrap();
        assert_eq!(
            project_onto_family(&net, &d).unwrap().residual,
            f64::INFINITY
        );
    }

    #[test]
    fn canonical_angle_half_plane() {
        assert_relative_eq!(canonical_theta(0.7 - PI), 0.7, epsilon = 1e-14);
        assert_relative_eq!(canonical_theta(-FRAC_PI_2), FRAC_PI_2, epsilon = 1e-15);
        assert_eq!(canonical_atan2(-0.0, 1.0), 0.0);
        assert_eq!(canonical_atan2(1.0, 0.0), FRAC_PI_2);
        assert_eq!(canonical_atan2(-1.0, 0.0), FRAC_PI_2);
    }
}
