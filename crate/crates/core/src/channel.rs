//! Channel and network descriptions for the two-hop parallel AF relay
//! point-to-point, multiple-access and broadcast channels.
//!
//! All noise variances are fixed at one. Every SNR here is evaluated in the
//! normalized form, where the relay sum-power constraint is folded into the
//! channel gain so that the result does not depend on the scale of the relay
//! gain vector `d`.

use serde::{Deserialize, Serialize};

use crate::error::{AfError, Result};

/// Diagonal channel matrix stored as its principal diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiagChannel(Vec<f64>);

impl DiagChannel {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(AfError::InvalidNetwork("channel has no relays".into()));
        }
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(AfError::InvalidNetwork(format!(
                "channel coefficient {bad} is not finite"
            )));
        }
        Ok(Self(coeffs))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }
}

impl TryFrom<Vec<f64>> for DiagChannel {
    type Error = AfError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DiagChannel> for Vec<f64> {
    fn from(c: DiagChannel) -> Self {
        c.0
    }
}

/// Per-relay amplification factors (the diagonal of `D`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RelayGain(Vec<f64>);

impl RelayGain {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if let Some(bad) = d.iter().find(|c| !c.is_finite()) {
            return Err(AfError::InvalidNetwork(format!(
                "relay gain entry {bad} is not finite"
            )));
        }
        Ok(Self(d))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|x| c * x).collect())
    }
}

impl TryFrom<Vec<f64>> for RelayGain {
    type Error = AfError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RelayGain> for Vec<f64> {
    fn from(g: RelayGain) -> Self {
        g.0
    }
}

/// Linear SNRs seen by the two users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrPair {
    pub snr1: f64,
    pub snr2: f64,
}

fn check_power(name: &str, p: f64, strictly_positive: bool) -> Result<()> {
    let ok = p.is_finite() && if strictly_positive { p > 0.0 } else { p >= 0.0 };
    if ok {
        Ok(())
    } else {
        let bound = if strictly_positive { "> 0" } else { ">= 0" };
        Err(AfError::InvalidNetwork(format!(
            "{name} = {p} must be finite and {bound}"
        )))
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(AfError::Dimension {
            what,
            expected,
            found,
        })
    }
}

/// Point-to-point relay channel `PTP(F, P, G, {D}, P_R)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PtpFile", into = "PtpFile")]
pub struct PtpChannel {
    f: DiagChannel,
    g: DiagChannel,
    p_source: f64,
    p_relay: f64,
}

impl PtpChannel {
    pub fn new(f: DiagChannel, g: DiagChannel, p_source: f64, p_relay: f64) -> Result<Self> {
        check_len("g", f.len(), g.len())?;
        check_power("p", p_source, false)?;
        check_power("p_relay", p_relay, true)?;
        Ok(Self {
            f,
            g,
            p_source,
            p_relay,
        })
    }

    /// Convenience constructor from raw slices.
    pub fn from_slices(f: &[f64], g: &[f64], p_source: f64, p_relay: f64) -> Result<Self> {
        Self::new(
            DiagChannel::new(f.to_vec())?,
            DiagChannel::new(g.to_vec())?,
            p_source,
            p_relay,
        )
    }

    pub fn f(&self) -> &[f64] {
        self.f.coeffs()
    }

    pub fn g(&self) -> &[f64] {
        self.g.coeffs()
    }

    pub fn p_source(&self) -> f64 {
        self.p_source
    }

    pub fn p_relay(&self) -> f64 {
        self.p_relay
    }

    pub fn num_relays(&self) -> usize {
        self.f.len()
    }
}

/// Two-user multiple-access channel `MAC(F1, P1, F2, P2, G, {D}, P_R)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MacFile", into = "MacFile")]
pub struct MacChannel {
    f1: DiagChannel,
    f2: DiagChannel,
    g: DiagChannel,
    p1: f64,
    p2: f64,
    p_relay: f64,
}

impl MacChannel {
    pub fn new(
        f1: DiagChannel,
        f2: DiagChannel,
        g: DiagChannel,
        p1: f64,
        p2: f64,
        p_relay: f64,
    ) -> Result<Self> {
        check_len("f2", f1.len(), f2.len())?;
        check_len("g", f1.len(), g.len())?;
        check_power("p1", p1, false)?;
        check_power("p2", p2, false)?;
        check_power("p_relay", p_relay, true)?;
        if p1 + p2 <= 0.0 {
            return Err(AfError::InvalidNetwork(
                "total user power p1 + p2 must be positive".into(),
            ));
        }
        Ok(Self {
            f1,
            f2,
            g,
            p1,
            p2,
            p_relay,
        })
    }

    pub fn from_slices(
        f1: &[f64],
        f2: &[f64],
        g: &[f64],
        p1: f64,
        p2: f64,
        p_relay: f64,
    ) -> Result<Self> {
        Self::new(
            DiagChannel::new(f1.to_vec())?,
            DiagChannel::new(f2.to_vec())?,
            DiagChannel::new(g.to_vec())?,
            p1,
            p2,
            p_relay,
        )
    }

    pub fn f1(&self) -> &[f64] {
        self.f1.coeffs()
    }

    pub fn f2(&self) -> &[f64] {
        self.f2.coeffs()
    }

    pub fn g(&self) -> &[f64] {
        self.g.coeffs()
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn p_relay(&self) -> f64 {
        self.p_relay
    }

    pub fn num_relays(&self) -> usize {
        self.g.len()
    }

    /// Same network with the user indices exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            f1: self.f2.clone(),
            f2: self.f1.clone(),
            g: self.g.clone(),
            p1: self.p2,
            p2: self.p1,
            p_relay: self.p_relay,
        }
    }

    /// Single-user channel seen by user 1 when user 2 is silent.
    pub fn user1_ptp(&self) -> Result<PtpChannel> {
        PtpChannel::new(self.f1.clone(), self.g.clone(), self.p1, self.p_relay)
    }

    /// Same network with new user powers.
    pub fn with_powers(&self, p1: f64, p2: f64) -> Result<Self> {
        Self::new(
            self.f1.clone(),
            self.f2.clone(),
            self.g.clone(),
            p1,
            p2,
            self.p_relay,
        )
    }

    /// Per-relay weight `1 + P1 f1^2 + P2 f2^2 + P_R g^2`.
    pub(crate) fn full_weight(&self, i: usize) -> f64 {
        let (f1, f2, g) = (self.f1()[i], self.f2()[i], self.g()[i]);
        1.0 + self.p1 * f1 * f1 + self.p2 * f2 * f2 + self.p_relay * g * g
    }
}

/// Two-user broadcast channel `BC(G, P_R, F1, F2, {D}, P)`: a source with
/// power `p_source` reaches the relays through `g`; the relays, with sum power
/// `p_relay`, reach user `j` through `fj`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BcFile", into = "BcFile")]
pub struct BcChannel {
    g: DiagChannel,
    f1: DiagChannel,
    f2: DiagChannel,
    p_source: f64,
    p_relay: f64,
}

impl BcChannel {
    pub fn new(
        g: DiagChannel,
        f1: DiagChannel,
        f2: DiagChannel,
        p_source: f64,
        p_relay: f64,
    ) -> Result<Self> {
        check_len("f1", g.len(), f1.len())?;
        check_len("f2", g.len(), f2.len())?;
        check_power("p_source", p_source, false)?;
        check_power("p_relay", p_relay, true)?;
        Ok(Self {
            g,
            f1,
            f2,
            p_source,
            p_relay,
        })
    }

    pub fn from_slices(
        g: &[f64],
        f1: &[f64],
        f2: &[f64],
        p_source: f64,
        p_relay: f64,
    ) -> Result<Self> {
        Self::new(
            DiagChannel::new(g.to_vec())?,
            DiagChannel::new(f1.to_vec())?,
            DiagChannel::new(f2.to_vec())?,
            p_source,
            p_relay,
        )
    }

    pub fn g(&self) -> &[f64] {
        self.g.coeffs()
    }

    pub fn f1(&self) -> &[f64] {
        self.f1.coeffs()
    }

    pub fn f2(&self) -> &[f64] {
        self.f2.coeffs()
    }

    pub fn p_source(&self) -> f64 {
        self.p_source
    }

    pub fn p_relay(&self) -> f64 {
        self.p_relay
    }

    pub fn num_relays(&self) -> usize {
        self.g.len()
    }
}

// On-disk layouts. Field names are part of the file contract.

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PtpFile {
    f: Vec<f64>,
    g: Vec<f64>,
    p: f64,
    p_relay: f64,
}

impl TryFrom<PtpFile> for PtpChannel {
    type Error = AfError;

    fn try_from(v: PtpFile) -> Result<Self> {
        PtpChannel::from_slices(&v.f, &v.g, v.p, v.p_relay)
    }
}

impl From<PtpChannel> for PtpFile {
    fn from(c: PtpChannel) -> Self {
        PtpFile {
            f: c.f.into(),
            g: c.g.into(),
            p: c.p_source,
            p_relay: c.p_relay,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MacFile {
    f1: Vec<f64>,
    f2: Vec<f64>,
    g: Vec<f64>,
    p1: f64,
    p2: f64,
    p_relay: f64,
}

impl TryFrom<MacFile> for MacChannel {
    type Error = AfError;

    fn try_from(v: MacFile) -> Result<Self> {
        MacChannel::from_slices(&v.f1, &v.f2, &v.g, v.p1, v.p2, v.p_relay)
    }
}

impl From<MacChannel> for MacFile {
    fn from(c: MacChannel) -> Self {
        MacFile {
            f1: c.f1.into(),
            f2: c.f2.into(),
            g: c.g.into(),
            p1: c.p1,
            p2: c.p2,
            p_relay: c.p_relay,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BcFile {
    g: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    p_source: f64,
    p_relay: f64,
}

impl TryFrom<BcFile> for BcChannel {
    type Error = AfError;

    fn try_from(v: BcFile) -> Result<Self> {
        BcChannel::from_slices(&v.g, &v.f1, &v.f2, v.p_source, v.p_relay)
    }
}

impl From<BcChannel> for BcFile {
    fn from(c: BcChannel) -> Self {
        BcFile {
            g: c.g.into(),
            f1: c.f1.into(),
            f2: c.f2.into(),
            p_source: c.p_source,
            p_relay: c.p_relay,
        }
    }
}

/// A two-hop network whose relays share one sum-power budget.
pub trait RelayNetwork {
    fn num_relays(&self) -> usize;

    /// Sum-power budget of the relays.
    fn relay_budget(&self) -> f64;

    /// Average power received at relay `i`, signal plus unit noise.
    fn relay_input_power(&self, i: usize) -> f64;
}

impl RelayNetwork for PtpChannel {
    fn num_relays(&self) -> usize {
        self.f.len()
    }

    fn relay_budget(&self) -> f64 {
        self.p_relay
    }

    fn relay_input_power(&self, i: usize) -> f64 {
        let f = self.f()[i];
        1.0 + self.p_source * f * f
    }
}

impl RelayNetwork for MacChannel {
    fn num_relays(&self) -> usize {
        self.g.len()
    }

    fn relay_budget(&self) -> f64 {
        self.p_relay
    }

    fn relay_input_power(&self, i: usize) -> f64 {
        let (f1, f2) = (self.f1()[i], self.f2()[i]);
        1.0 + self.p1 * f1 * f1 + self.p2 * f2 * f2
    }
}

impl RelayNetwork for BcChannel {
    fn num_relays(&self) -> usize {
        self.g.len()
    }

    fn relay_budget(&self) -> f64 {
        self.p_relay
    }

    fn relay_input_power(&self, i: usize) -> f64 {
        let g = self.g()[i];
        1.0 + self.p_source * g * g
    }
}

fn check_gain_len<N: RelayNetwork + ?Sized>(net: &N, d: &RelayGain) -> Result<()> {
    check_len("relay gain", net.num_relays(), d.len())
}

/// Total relay transmit power `sum_i d_i^2 * E[r_i^2]` used by gain `d`.
pub fn relay_output_power<N: RelayNetwork + ?Sized>(net: &N, d: &RelayGain) -> Result<f64> {
    check_gain_len(net, d)?;
    Ok(d.as_slice()
        .iter()
        .enumerate()
        .map(|(i, &di)| di * di * net.relay_input_power(i))
        .sum())
}

/// Scales `direction` by a positive factor so the relays use exactly their
/// budget.
pub fn feasible_gain<N: RelayNetwork + ?Sized>(
    direction: &RelayGain,
    net: &N,
) -> Result<RelayGain> {
    check_gain_len(net, direction)?;
    if direction.is_zero() {
        return Err(AfError::DegenerateDirection);
    }
    let used = relay_output_power(net, direction)?;
    let scale = (net.relay_budget() / used).sqrt();
    let mut d = direction.scaled(scale);
    // one correction step brings the power to within an ulp or two
    let used = relay_output_power(net, &d)?;
    let fix = (net.relay_budget() / used).sqrt();
    if fix != 1.0 {
        d = d.scaled(fix);
    }
    Ok(d)
}

/// Relative mismatch between the power used by `d` and the relay budget.
pub fn power_mismatch<N: RelayNetwork + ?Sized>(net: &N, d: &RelayGain) -> Result<f64> {
    let used = relay_output_power(net, d)?;
    Ok((used - net.relay_budget()).abs() / net.relay_budget())
}

fn weighted_sums(d: &[f64], gain_in: &[f64], gain_out: &[f64]) -> f64 {
    d.iter()
        .zip(gain_in)
        .zip(gain_out)
        .map(|((&di, &a), &b)| a * di * b)
        .sum()
}

/// Normalized MAC SNRs:
/// `snr_u = P_u P_R (sum g d f_u)^2 / sum d^2 (1 + P1 f1^2 + P2 f2^2 + P_R g^2)`.
pub fn mac_snrs(net: &MacChannel, d: &RelayGain) -> Result<SnrPair> {
    check_gain_len(net, d)?;
    if d.is_zero() {
        return Err(AfError::DegenerateGain);
    }
    let dd = d.as_slice();
    let s1 = weighted_sums(dd, net.g(), net.f1());
    let s2 = weighted_sums(dd, net.g(), net.f2());
    let denom: f64 = dd
        .iter()
        .enumerate()
        .map(|(i, &di)| di * di * net.full_weight(i))
        .sum();
    let pr = net.p_relay();
    Ok(SnrPair {
        snr1: net.p1() * pr * s1 * s1 / denom,
        snr2: net.p2() * pr * s2 * s2 / denom,
    })
}

/// Normalized BC SNRs. Unlike the MAC, each user has its own denominator:
/// `snr_j = P_src P_rel (sum f_j d g)^2 / sum d^2 (1 + P_rel f_j^2 + P_src g^2)`.
pub fn bc_snrs(net: &BcChannel, d: &RelayGain) -> Result<SnrPair> {
    check_gain_len(net, d)?;
    if d.is_zero() {
        return Err(AfError::DegenerateGain);
    }
    let dd = d.as_slice();
    let (ps, pr) = (net.p_source(), net.p_relay());
    let user = |f: &[f64]| {
        let s = weighted_sums(dd, f, net.g());
        let denom: f64 = dd
            .iter()
            .zip(f)
            .zip(net.g())
            .map(|((&di, &fi), &gi)| di * di * (1.0 + pr * fi * fi + ps * gi * gi))
            .sum();
        ps * pr * s * s / denom
    };
    Ok(SnrPair {
        snr1: user(net.f1()),
        snr2: user(net.f2()),
    })
}

/// Normalized PTP SNR `P P_R (sum g d f)^2 / sum d^2 (1 + P f^2 + P_R g^2)`.
pub fn ptp_snr(net: &PtpChannel, d: &RelayGain) -> Result<f64> {
    check_gain_len(net, d)?;
    if d.is_zero() {
        return Err(AfError::DegenerateGain);
    }
    let dd = d.as_slice();
    let (p, pr) = (net.p_source(), net.p_relay());
    let s = weighted_sums(dd, net.g(), net.f());
    let denom: f64 = dd
        .iter()
        .zip(net.f())
        .zip(net.g())
        .map(|((&di, &fi), &gi)| di * di * (1.0 + p * fi * fi + pr * gi * gi))
        .sum();
    Ok(p * pr * s * s / denom)
}

/// MAC SNRs in the unnormalized form `P_u (sum g d f_u)^2 / (1 + sum d^2 g^2)`.
/// Equal to [`mac_snrs`] only when `d` meets the relay budget exactly.
pub fn mac_snrs_unnormalized(net: &MacChannel, d: &RelayGain) -> Result<SnrPair> {
    check_gain_len(net, d)?;
    let dd = d.as_slice();
    let s1 = weighted_sums(dd, net.g(), net.f1());
    let s2 = weighted_sums(dd, net.g(), net.f2());
    let noise = 1.0
        + dd.iter()
            .zip(net.g())
            .map(|(&di, &gi)| di * di * gi * gi)
            .sum::<f64>();
    Ok(SnrPair {
        snr1: net.p1() * s1 * s1 / noise,
        snr2: net.p2() * s2 * s2 / noise,
    })
}
