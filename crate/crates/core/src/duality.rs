//! MAC/BC duality for two-hop AF relay networks.
//!
//! Reversing every link of a relay network and swapping the source and relay
//! power budgets leaves the capacity unchanged, provided the relay gain is
//! rescaled by a factor `κ` that makes it feasible for the reversed network.
//! For the MAC this maps every boundary point onto the boundary of the dual
//! BC, and the BC region is the union of MAC regions over all splits of the
//! total power between the two users.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{mac_region, pentagon_from_snrs, RatePoint, RegionBoundary, User};
use crate::channel::{
    bc_snrs, mac_snrs, power_mismatch, relay_output_power, BcChannel, MacChannel, PtpChannel,
    RelayGain, RelayNetwork,
};
use crate::error::{AfError, Result};

/// Relative tolerance on the relay budget for a gain to count as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Coordinate tolerance for a MAC corner to lie on the dual BC boundary.
pub const CORNER_TOL: f64 = 1e-10;
/// Tolerance for the two α expressions to agree.
pub const ALPHA_TOL: f64 = 1e-12;
/// Number of power splits sampled along the BC boundary for containment.
pub const CONTAINMENT_SAMPLES: usize = 1000;

/// A network, its dual and the rescaled dual gain `κ d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPair<O, D> {
    pub original: O,
    pub dual: D,
    pub kappa: f64,
    pub dual_gain: RelayGain,
}

fn ensure_feasible<N: RelayNetwork>(net: &N, d: &RelayGain) -> Result<()> {
    if d.is_zero() {
        return Err(AfError::DegenerateGain);
    }
    if power_mismatch(net, d)? > FEASIBILITY_TOL {
        return Err(AfError::Infeasible {
            used: relay_output_power(net, d)?,
            budget: net.relay_budget(),
        });
    }
    Ok(())
}

fn kappa_for<N: RelayNetwork>(dual: &N, d: &RelayGain) -> Result<f64> {
    let used = relay_output_power(dual, d)?;
    Ok((dual.relay_budget() / used).sqrt())
}

/// Dual of a point-to-point channel: `f ↔ g` and `P ↔ P_R`.
pub fn dual_ptp(net: &PtpChannel, d: &RelayGain) -> Result<DualPair<PtpChannel, PtpChannel>> {
    ensure_feasible(net, d)?;
    let dual = PtpChannel::from_slices(net.g(), net.f(), net.p_relay(), net.p_source())?;
    let kappa = kappa_for(&dual, d)?;
    Ok(DualPair {
        original: net.clone(),
        dual_gain: d.scaled(kappa),
        dual,
        kappa,
    })
}

/// Dual BC of a MAC: the destination becomes a source with the MAC relay
/// budget as its power, and the relays share `P1 + P2`.
pub fn dual_bc_of_mac(net: &MacChannel, d: &RelayGain) -> Result<DualPair<MacChannel, BcChannel>> {
    ensure_feasible(net, d)?;
    let dual = BcChannel::from_slices(
        net.g(),
        net.f1(),
        net.f2(),
        net.p_relay(),
        net.p1() + net.p2(),
    )?;
    let kappa = kappa_for(&dual, d)?;
    Ok(DualPair {
        original: net.clone(),
        dual_gain: d.scaled(kappa),
        dual,
        kappa,
    })
}

/// Traces used by both α expressions.
struct SplitTerms {
    /// `Σ d² (1 + P f_j² + P_R g²)` for each user `j`.
    t1: f64,
    t2: f64,
    /// `Σ d² (1 + P1 f1² + P2 f2² + P_R g²)`.
    tm: f64,
    /// `Σ f2 d g`.
    s2: f64,
}

fn split_terms(net: &MacChannel, d: &RelayGain) -> Result<SplitTerms> {
    if d.len() != net.num_relays() {
        return Err(AfError::Dimension {
            what: "relay gain",
            expected: net.num_relays(),
            found: d.len(),
        });
    }
    if d.is_zero() {
        return Err(AfError::DegenerateGain);
    }
    let p = net.p1() + net.p2();
    let pr = net.p_relay();
    let mut t = SplitTerms {
        t1: 0.0,
        t2: 0.0,
        tm: 0.0,
        s2: 0.0,
    };
    for (i, &di) in d.as_slice().iter().enumerate() {
        let (f1, f2, g) = (net.f1()[i], net.f2()[i], net.g()[i]);
        let d2 = di * di;
        t.t1 += d2 * (1.0 + p * f1 * f1 + pr * g * g);
        t.t2 += d2 * (1.0 + p * f2 * f2 + pr * g * g);
        t.tm += d2 * net.full_weight(i);
        t.s2 += f2 * di * g;
    }
    Ok(t)
}

/// Share of the dual BC relay power given to user 1 so that the MAC corner
/// with user 1 decoded first lands on the BC boundary. This is the form
/// obtained by matching user 1's rate.
pub fn alpha_from_power_split(net: &MacChannel, d: &RelayGain) -> Result<f64> {
    let t = split_terms(net, d)?;
    let p = net.p1() + net.p2();
    let den = p * t.tm + p * net.p2() * net.p_relay() * t.s2 * t.s2;
    Ok((net.p1() * t.t1 / den).clamp(0.0, 1.0))
}

/// The same α obtained by matching user 2's rate instead.
pub fn alpha_from_user2_rate(net: &MacChannel, d: &RelayGain) -> Result<f64> {
    let t = split_terms(net, d)?;
    let p = net.p1() + net.p2();
    let den = p * t.tm + p * net.p2() * net.p_relay() * t.s2 * t.s2;
    Ok(((p * t.tm - net.p2() * t.t2) / den).clamp(0.0, 1.0))
}

/// Which user the degraded BC decodes last (the one with the larger
/// full-power SNR); ties go to user 1.
pub fn stronger_bc_user(snr1: f64, snr2: f64) -> User {
    if snr1 >= snr2 {
        User::One
    } else {
        User::Two
    }
}

/// Boundary point of the degraded BC for full-power SNRs `(b1, b2)` when the
/// stronger user receives the power fraction `alpha`.
pub(crate) fn bc_point(b1: f64, b2: f64, alpha: f64) -> (f64, f64) {
    let strong_weak = |bs: f64, bw: f64| {
        let rs = (alpha * bs).ln_1p();
        let rw = ((1.0 - alpha) * bw / (1.0 + alpha * bw)).ln_1p();
        (rs, rw)
    };
    match stronger_bc_user(b1, b2) {
        User::One => strong_weak(b1, b2),
        User::Two => {
            let (r2, r1) = strong_weak(b2, b1);
            (r1, r2)
        }
    }
}

/// Rate pair on the boundary of the fixed-gain BC region; `alpha` is the
/// share of relay power devoted to the stronger user, who cancels the weaker
/// user's signal.
pub fn bc_boundary_fixed_gain(net: &BcChannel, d: &RelayGain, alpha: f64) -> Result<RatePoint> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(AfError::AlphaOutOfRange(alpha));
    }
    let b = bc_snrs(net, d)?;
    let (r1, r2) = bc_point(b.snr1, b.snr2, alpha);
    Ok(RatePoint::new(r1, r2, None, "BC"))
}

/// Outcome of a MAC→BC duality check at one relay gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub kappa: f64,
    /// Share of the stronger BC user.
    pub alpha: f64,
    /// The same share from the user-2-rate expression.
    pub alpha_alt: f64,
    pub stronger: User,
    pub mac_corner: (f64, f64),
    pub bc_point: (f64, f64),
    pub corner_residual: f64,
    pub alpha_residual: f64,
    pub containment_violations: usize,
    /// Largest amount by which a MAC pentagon point exceeds the BC boundary.
    pub max_containment_excess: f64,
    pub passed: bool,
}

/// Checks that the MAC corner matched by α lies on the dual BC boundary and
/// that the whole MAC pentagon is contained in the dual BC region.
///
/// When user 1 is stronger on the BC the corner with user 1 decoded first is
/// used; otherwise the roles of the users are exchanged.
pub fn verify_mac_bc_duality(net: &MacChannel, d: &RelayGain) -> Result<DualityReport> {
    let pair = dual_bc_of_mac(net, d)?;
    let b = bc_snrs(&pair.dual, &pair.dual_gain)?;
    let s = mac_snrs(net, d)?;
    let stronger = stronger_bc_user(b.snr1, b.snr2);

    let (alpha, alpha_alt, mac_corner) = match stronger {
        User::One => (
            alpha_from_power_split(net, d)?,
            alpha_from_user2_rate(net, d)?,
            ((s.snr1 / (1.0 + s.snr2)).ln_1p(), s.snr2.ln_1p()),
        ),
        User::Two => {
            let sw = net.swapped();
            (
                alpha_from_power_split(&sw, d)?,
                alpha_from_user2_rate(&sw, d)?,
                (s.snr1.ln_1p(), (s.snr2 / (1.0 + s.snr1)).ln_1p()),
            )
        }
    };
    let bcp = bc_point(b.snr1, b.snr2, alpha);
    let corner_residual = (bcp.0 - mac_corner.0)
        .abs()
        .max((bcp.1 - mac_corner.1).abs());
    let alpha_residual = (alpha - alpha_alt).abs();

    let pent = pentagon_from_snrs(s);
    let tol = CORNER_TOL;
    let mut violations = 0;
    let mut max_excess = f64::NEG_INFINITY;
    let mut record = |excess: f64| {
        max_excess = max_excess.max(excess);
        if excess > tol {
            violations += 1;
        }
    };
    // sampled BC boundary against the MAC upper boundary
    for k in 0..CONTAINMENT_SAMPLES {
        let a = k as f64 / (CONTAINMENT_SAMPLES - 1) as f64;
        let (x, y) = bc_point(b.snr1, b.snr2, a);
        if let Some(u) = pent.upper_r2(x) {
            record(u - y);
        }
    }
    // each pentagon vertex against the exact BC boundary
    for v in pent.vertices() {
        record(vertex_excess(b.snr1, b.snr2, v));
    }

    let passed = corner_residual <= CORNER_TOL && alpha_residual <= ALPHA_TOL && violations == 0;
    Ok(DualityReport {
        kappa: pair.kappa,
        alpha,
        alpha_alt,
        stronger,
        mac_corner,
        bc_point: bcp,
        corner_residual,
        alpha_residual,
        containment_violations: violations,
        max_containment_excess: max_excess,
        passed,
    })
}

/// How far a rate pair lies outside the fixed-gain BC region (negative when
/// strictly inside).
fn vertex_excess(b1: f64, b2: f64, v: (f64, f64)) -> f64 {
    let (bs, bw, vs, vw) = match stronger_bc_user(b1, b2) {
        User::One => (b1, b2, v.0, v.1),
        User::Two => (b2, b1, v.1, v.0),
    };
    let cap = bs.ln_1p();
    if vs > cap {
        return vs - cap;
    }
    let alpha = if bs > 0.0 {
        (vs.exp_m1() / bs).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let bound = ((1.0 - alpha) * bw / (1.0 + alpha * bw)).ln_1p();
    vw - bound
}

/// MAC region of one power split of the BC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitBoundary {
    pub p1: f64,
    pub p2: f64,
    pub boundary: RegionBoundary,
}

/// BC capacity region as the union of the dual MAC regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcRegion {
    pub per_split: Vec<SplitBoundary>,
    /// Pareto-maximal points of the union, sorted by `r1`.
    pub frontier: Vec<RatePoint>,
    /// Upper concave envelope of the frontier (time-sharing region).
    pub envelope: Vec<RatePoint>,
    /// Largest vertical gap between the envelope and the frontier.
    pub envelope_gap: f64,
    pub non_convex: bool,
}

pub const NON_CONVEX_TOL: f64 = 1e-9;

/// Builds the BC region from `n_splits` uniformly spaced splits of the relay
/// power between the users of the dual MAC.
///
/// The dual MAC of split `k` has user powers `P k/(K−1)` and
/// `P (K−1−k)/(K−1)`, where `P` is the BC relay power, and relay budget equal
/// to the BC source power.
pub fn bc_region(net: &BcChannel, n_splits: usize, n_curve_points: usize) -> Result<BcRegion> {
    if n_splits < 2 {
        return Err(AfError::InvalidParameter(format!(
            "need at least 2 power splits, got {n_splits}"
        )));
    }
    let p = net.p_relay();
    let last = (n_splits - 1) as f64;
    let per_split = (0..n_splits)
        .into_par_iter()
        .map(|k| {
            let p1 = p * k as f64 / last;
            let p2 = p * (n_splits - 1 - k) as f64 / last;
            let mac = MacChannel::from_slices(net.f1(), net.f2(), net.g(), p1, p2, net.p_source())?;
            Ok(SplitBoundary {
                p1,
                p2,
                boundary: mac_region(&mac, n_curve_points)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<RatePoint> = per_split
        .iter()
        .flat_map(|s| s.boundary.points.iter().cloned())
        .collect();
    let frontier = pareto_frontier(&all);
    let envelope = upper_envelope(&frontier);
    let envelope_gap = envelope_gap(&frontier, &envelope);
    Ok(BcRegion {
        per_split,
        frontier,
        envelope,
        envelope_gap,
        non_convex: envelope_gap > NON_CONVEX_TOL,
    })
}

fn total_order(a: &RatePoint, b: &RatePoint) -> std::cmp::Ordering {
    b.r1.total_cmp(&a.r1)
        .then(b.r2.total_cmp(&a.r2))
        .then_with(|| a.label.cmp(&b.label))
        .then_with(|| match (a.theta, b.theta) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (x, y) => x.is_some().cmp(&y.is_some()),
        })
}

/// Non-dominated subset of `points`, sorted by `r1` ascending.
///
/// Exact duplicates collapse to one representative chosen by a total order
/// on the points, so the output does not depend on the input order.
pub fn pareto_frontier(points: &[RatePoint]) -> Vec<RatePoint> {
    let mut sorted: Vec<&RatePoint> = points.iter().collect();
    sorted.sort_by(|a, b| total_order(a, b));
    let mut out: Vec<RatePoint> = Vec::new();
    let mut best_r2 = f64::NEG_INFINITY;
    for p in sorted {
        if p.r2 > best_r2 {
            best_r2 = p.r2;
            out.push(p.clone());
        }
    }
    out.reverse();
    out
}

/// Upper concave envelope of points sorted by `r1`.
pub fn upper_envelope(sorted: &[RatePoint]) -> Vec<RatePoint> {
    let mut hull: Vec<RatePoint> = Vec::new();
    for p in sorted {
        while hull.len() >= 2 {
            let a = &hull[hull.len() - 2];
            let b = &hull[hull.len() - 1];
            let cross = (b.r1 - a.r1) * (p.r2 - a.r2) - (b.r2 - a.r2) * (p.r1 - a.r1);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p.clone());
    }
    hull
}

/// Largest amount by which a frontier point lies below the envelope.
pub fn envelope_gap(frontier: &[RatePoint], envelope: &[RatePoint]) -> f64 {
    let mut gap: f64 = 0.0;
    for p in frontier {
        let seg = envelope
            .windows(2)
            .find(|w| w[0].r1 <= p.r1 && p.r1 <= w[1].r1);
        if let Some(w) = seg {
            let span = w[1].r1 - w[0].r1;
            let y = if span > 0.0 {
                w[0].r2 + (w[1].r2 - w[0].r2) * (p.r1 - w[0].r1) / span
            } else {
                w[0].r2.max(w[1].r2)
            };
            gap = gap.max(y - p.r2);
        }
    }
    gap
}
