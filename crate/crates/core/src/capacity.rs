//! Capacities and capacity-region boundaries.
//!
//! Point-to-point capacity, the single-user corner rates and the sum capacity
//! of the MAC are closed forms. Weighted-sum optima are found by a guarded
//! one-dimensional search over the gain family angle, cross-checked against a
//! root-finder on the stationarity equations. The full region boundary is
//! traced segment by segment:
//!
//! ```text
//! A ──── B            A = (0, C2⁰¹)
//!         ╲ curve     B→C: user 1 decoded first, θ from 0 to θ¹¹
//!          C
//!           ╲         C→D: time sharing between the sum-rate corners
//!            D
//!             ╲ curve D→E: user 2 decoded first, θ from θ¹¹ to ±π/2
//!              E
//!              │
//!              F      F = (C1¹⁰, 0)
//! ```

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{mac_snrs, MacChannel, PtpChannel, RelayGain, SnrPair};
use crate::error::{AfError, Result};
use crate::relay::{
    canonical_theta, coupling_sums, family_direction, mac_gain_theta, snr_star,
    theta_sum_rate_detailed, Coupling, ThetaBranch,
};

/// An achievable rate pair, in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub r1: f64,
    pub r2: f64,
    /// Gain family angle that achieves the point, if it lies on a curve.
    pub theta: Option<f64>,
    pub label: String,
}

impl RatePoint {
    pub fn new(r1: f64, r2: f64, theta: Option<f64>, label: impl Into<String>) -> Self {
        Self {
            r1,
            r2,
            theta,
            label: label.into(),
        }
    }

    pub fn with_label(&self, label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            ..self.clone()
        }
    }
}

/// Which user a single-user corner favors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum User {
    One,
    Two,
}

fn ln1p_clamped(x: f64) -> f64 {
    // rounding can leave values like -1e-17 where the exact answer is zero
    if x > -1e-14 {
        x.max(0.0).ln_1p()
    } else {
        x.ln_1p()
    }
}

/// `log(1 + P P_R Σ f² g² / (1 + P f² + P_R g²))`.
pub fn ptp_capacity(net: &PtpChannel) -> f64 {
    let (p, pr) = (net.p_source(), net.p_relay());
    let sum: f64 = net
        .f()
        .iter()
        .zip(net.g())
        .map(|(&f, &g)| f * f * g * g / (1.0 + p * f * f + pr * g * g))
        .sum();
    ln1p_clamped(p * pr * sum)
}

/// Corner of the region where the favored user transmits at its maximum rate,
/// returned as `(c_favored, c_other)`.
///
/// The favored user's gain `D(π/2)` (or `D(0)` for user 2) is interference
/// free; the other user is decoded first and sees it as noise. If the favored
/// user has no power or no working relay path, the whole budget serves the
/// other user and `(0, log(1 + P_o P_R A_oo))` is returned.
pub fn mac_corner_rates(net: &MacChannel, favored: User) -> (f64, f64) {
    let a = coupling_sums(net);
    let pr = net.p_relay();
    let (pf, po, aff, aoo) = match favored {
        User::One => (net.p1(), net.p2(), a.a11, a.a22),
        User::Two => (net.p2(), net.p1(), a.a22, a.a11),
    };
    if pf == 0.0 || aff == 0.0 {
        return (0.0, ln1p_clamped(po * pr * aoo));
    }
    let fav = ln1p_clamped(pf * pr * aff);
    let other = ln1p_clamped(po * pr * a.a12 * a.a12 / (aff + pf * pr * aff * aff));
    (fav, other)
}

/// Sum-rate optimum of the MAC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumRateSolution {
    /// `log(1 + SNR*)` in nats.
    pub capacity: f64,
    pub snr_star: f64,
    pub a11: f64,
    pub a22: f64,
    pub a12: f64,
    pub theta11: f64,
    /// Share of `SNR*` that user 1 receives at `D(θ¹¹)`.
    pub beta: f64,
    /// User 2 decoded first; user 1 interference free (point D).
    pub corner_2_then_1: RatePoint,
    /// User 1 decoded first; user 2 interference free (point C).
    pub corner_1_then_2: RatePoint,
    /// `None` when the network is disconnected and the capacity is zero.
    pub theta_branch: Option<ThetaBranch>,
}

fn sum_corners(snr_star: f64, beta: f64, theta: Option<f64>) -> (RatePoint, RatePoint) {
    let s1 = beta * snr_star;
    let s2 = (1.0 - beta) * snr_star;
    let two_then_one = RatePoint::new(ln1p_clamped(s1), ln1p_clamped(s2 / (1.0 + s1)), theta, "D");
    let one_then_two = RatePoint::new(ln1p_clamped(s1 / (1.0 + s2)), ln1p_clamped(s2), theta, "C");
    (two_then_one, one_then_two)
}

/// Sum capacity `C¹¹ = log(1 + SNR*)`, where `SNR*` is the larger root of
/// the quadratic `x² − P_R (P1 A11 + P2 A22) x + P_R² P1 P2 (A11 A22 − A12²)`
/// (the smaller root is the minimum of the sum SNR over the family).
pub fn mac_sum_capacity(net: &MacChannel) -> SumRateSolution {
    let a: Coupling = coupling_sums(net);
    let s = snr_star(net, &a);
    let angle = match theta_sum_rate_detailed(net) {
        Ok(angle) => angle,
        Err(_) => {
            let (c21, c12) = sum_corners(0.0, 0.5, None);
            return SumRateSolution {
                capacity: 0.0,
                snr_star: 0.0,
                a11: a.a11,
                a22: a.a22,
                a12: a.a12,
                theta11: 0.0,
                beta: 0.5,
                corner_2_then_1: c21,
                corner_1_then_2: c12,
                theta_branch: None,
            };
        }
    };
    let (p1, p2, pr) = (net.p1(), net.p2(), net.p_relay());
    let den = 2.0 * s - pr * (p1 * a.a11 + p2 * a.a22);
    let beta = if den > 1e-12 * s && angle.branch != ThetaBranch::Isotropic {
        (s - p2 * pr * a.a22) / den
    } else {
        // repeated eigenvalue: read the split off the chosen member directly
        let g = mac_gain_theta(net, angle.theta).expect("sum-rate member is nonzero");
        let snr = mac_snrs(net, &g.gain).expect("sum-rate member is nonzero");
        snr.snr1 / (snr.snr1 + snr.snr2)
    };
    let beta = beta.clamp(0.0, 1.0);
    let (c21, c12) = sum_corners(s, beta, Some(angle.theta));
    SumRateSolution {
        capacity: ln1p_clamped(s),
        snr_star: s,
        a11: a.a11,
        a22: a.a22,
        a12: a.a12,
        theta11: angle.theta,
        beta,
        corner_2_then_1: c21,
        corner_1_then_2: c12,
        theta_branch: Some(angle.branch),
    }
}

/// The three rate bounds of the MAC pentagon for a fixed relay gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pentagon {
    pub r1_max: f64,
    pub r2_max: f64,
    pub sum_max: f64,
}

impl Pentagon {
    /// Corner with user 1 decoded first (user 2 interference free).
    pub fn corner_1_then_2(&self) -> (f64, f64) {
        ((self.sum_max - self.r2_max).max(0.0), self.r2_max)
    }

    /// Corner with user 2 decoded first (user 1 interference free).
    pub fn corner_2_then_1(&self) -> (f64, f64) {
        (self.r1_max, (self.sum_max - self.r1_max).max(0.0))
    }

    /// The four non-origin vertices, from the `r2` axis to the `r1` axis.
    pub fn vertices(&self) -> [(f64, f64); 4] {
        [
            (0.0, self.r2_max),
            self.corner_1_then_2(),
            self.corner_2_then_1(),
            (self.r1_max, 0.0),
        ]
    }

    /// Largest `r2` inside the pentagon at a given `r1`, or `None` past its
    /// right edge.
    pub fn upper_r2(&self, r1: f64) -> Option<f64> {
        if r1 > self.r1_max {
            None
        } else {
            Some(self.r2_max.min(self.sum_max - r1).max(0.0))
        }
    }
}

pub fn mac_pentagon(net: &MacChannel, d: &RelayGain) -> Result<Pentagon> {
    let s = mac_snrs(net, d)?;
    Ok(pentagon_from_snrs(s))
}

pub(crate) fn pentagon_from_snrs(s: SnrPair) -> Pentagon {
    Pentagon {
        r1_max: ln1p_clamped(s.snr1),
        r2_max: ln1p_clamped(s.snr2),
        sum_max: ln1p_clamped(s.snr1 + s.snr2),
    }
}

/// Result of a weighted-sum maximization `max μ1 R1 + μ2 R2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedOptimum {
    pub point: RatePoint,
    pub objective: f64,
    pub theta: f64,
    /// Angular width of a flat optimum (zero for an isolated maximum).
    pub plateau_width: f64,
    /// Objective reached by the stationarity-equation solver, if it
    /// converged.
    pub equation_objective: Option<f64>,
    /// Set when the equation solver failed or disagrees with the angle scan
    /// by more than `WEIGHTED_AGREEMENT_TOL`. The scan result is returned
    /// regardless.
    pub diagnostic: Option<String>,
}

pub const WEIGHTED_AGREEMENT_TOL: f64 = 1e-7;

const SCAN_POINTS: usize = 1024;
const GOLDEN_TOL: f64 = 1e-10;

/// Objective `(μa − μb) log(1 + s1) + μb log(1 + s1 + s2)` in a frame where
/// the first user carries the larger weight and is decoded last.
fn oriented_objective(s: SnrPair, mu_hi: f64, mu_lo: f64) -> f64 {
    (mu_hi - mu_lo) * ln1p_clamped(s.snr1) + mu_lo * ln1p_clamped(s.snr1 + s.snr2)
}

/// Rates of the corner where the first user is decoded last.
fn oriented_rates(s: SnrPair) -> (f64, f64) {
    (ln1p_clamped(s.snr1), ln1p_clamped(s.snr2 / (1.0 + s.snr1)))
}

fn snrs_at(net: &MacChannel, theta: f64) -> Option<SnrPair> {
    let g = mac_gain_theta(net, theta).ok()?;
    mac_snrs(net, &g.gain).ok()
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        x1
    } else {
        x2
    }
}

struct ScanResult {
    theta: f64,
    objective: f64,
    snr: Option<SnrPair>,
    plateau_width: f64,
}

/// Coarse grid over `[-π/2, π/2]` followed by golden-section refinement
/// around the best grid point. `to_output` maps oriented angles to the
/// caller's frame; on a plateau the point with the smallest `|θ|` in that
/// frame wins.
fn theta_scan(
    net: &MacChannel,
    mu_hi: f64,
    mu_lo: f64,
    to_output: impl Fn(f64) -> f64,
) -> ScanResult {
    let objective = |th: f64| {
        snrs_at(net, th)
            .map(|s| oriented_objective(s, mu_hi, mu_lo))
            .unwrap_or(0.0)
    };
    let grid: Vec<f64> = (0..=SCAN_POINTS)
        .map(|j| -FRAC_PI_2 + PI * j as f64 / SCAN_POINTS as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&th| objective(th)).collect();
    let vmax = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * vmax.abs().max(1.0);
    let near: Vec<usize> = (0..grid.len())
        .filter(|&j| values[j] >= vmax - tol)
        .collect();

    if near.len() >= 2 {
        let width = near.len() as f64 * PI / SCAN_POINTS as f64;
        let pick = near
            .iter()
            .filter_map(|&j| snrs_at(net, grid[j]).map(|s| (j, s)))
            .min_by(|(a, _), (b, _)| {
                let (ta, tb) = (to_output(grid[*a]).abs(), to_output(grid[*b]).abs());
                ta.total_cmp(&tb).then(a.cmp(b))
            });
        return match pick {
            Some((j, s)) => ScanResult {
                theta: grid[j],
                objective: values[j],
                snr: Some(s),
                plateau_width: width,
            },
            None => ScanResult {
                theta: 0.0,
                objective: 0.0,
                snr: None,
                plateau_width: width,
            },
        };
    }

    let k = near[0];
    let lo = grid[k.saturating_sub(1)];
    let hi = grid[(k + 1).min(SCAN_POINTS)];
    let refined = golden_max(objective, lo, hi, GOLDEN_TOL);
    let fr = objective(refined);
    let (theta, obj) = if fr >= values[k] {
        (refined, fr)
    } else {
        (grid[k], values[k])
    };
    ScanResult {
        theta,
        objective: obj,
        snr: snrs_at(net, theta),
        plateau_width: 0.0,
    }
}

/// Residuals of the stationarity equations for the weighted objective,
/// in the unknowns `(φ, τ)` with `s1 = P1 sin²φ e^τ`, `s2 = P2 cos²φ e^τ`.
/// Returns the residual vector and a magnitude for relative convergence.
fn stationarity_residual(
    net: &MacChannel,
    a: &Coupling,
    mu1p: f64,
    mu2: f64,
    phi: f64,
    tau: f64,
) -> ([f64; 2], f64) {
    let (p1, p2, pr) = (net.p1(), net.p2(), net.p_relay());
    let t = tau.exp();
    let (sp, cp) = phi.sin_cos();
    let s1 = p1 * sp * sp * t;
    let s2 = p2 * cp * cp * t;
    let lhs = mu2 * (1.0 + s1) * (s1 + s2) + mu1p * (1.0 + s1 + s2) * s1;
    let r1a = mu2 * (1.0 + s1) * pr * (p1 * a.a11 * sp + p2 * a.a12 * cp);
    let r1b = mu1p * (1.0 + s1 + s2) * pr * p1 * a.a11 * sp;
    let r2a = mu2 * (1.0 + s1) * pr * (p1 * a.a12 * sp + p2 * a.a22 * cp);
    let r2b = mu1p * (1.0 + s1 + s2) * pr * p1 * a.a12 * sp;
    let f1 = lhs * sp - (r1a + r1b);
    let f2 = lhs * cp - (r2a + r2b);
    let scale = lhs.abs() + r1a.abs() + r1b.abs() + r2a.abs() + r2b.abs();
    ([f1, f2], scale)
}

fn newton_solve(
    net: &MacChannel,
    a: &Coupling,
    mu1p: f64,
    mu2: f64,
    mut x: [f64; 2],
) -> Option<[f64; 2]> {
    let eval = |x: [f64; 2]| stationarity_residual(net, a, mu1p, mu2, x[0], x[1]);
    let norm = |f: [f64; 2]| (f[0] * f[0] + f[1] * f[1]).sqrt();
    for _ in 0..200 {
        let (f, scale) = eval(x);
        let nf = norm(f);
        if !nf.is_finite() {
            return None;
        }
        if nf <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
            return Some(x);
        }
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let h = 1e-7 * x[k].abs().max(1.0);
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let (fp, _) = eval(xp);
            let (fm, _) = eval(xm);
            jac[0][k] = (fp[0] - fm[0]) / (2.0 * h);
            jac[1][k] = (fp[1] - fm[1]) / (2.0 * h);
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let step = [
            -(jac[1][1] * f[0] - jac[0][1] * f[1]) / det,
            -(-jac[1][0] * f[0] + jac[0][0] * f[1]) / det,
        ];
        let mut lambda = 1.0;
        loop {
            let trial = [
                x[0] + lambda * step[0],
                (x[1] + lambda * step[1]).clamp(-80.0, 80.0),
            ];
            let (ft, _) = eval(trial);
            if norm(ft) < (1.0 - 1e-4 * lambda) * nf {
                x = trial;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                // cannot decrease further; accept if already essentially converged
                return if nf <= 1e-10 * scale { Some(x) } else { None };
            }
        }
    }
    None
}

/// Solves the stationarity equations from several starting angles and
/// returns the best objective among the gains reconstructed from the roots.
fn equation_path(net: &MacChannel, mu_hi: f64, mu_lo: f64) -> Option<(f64, f64)> {
    let a = coupling_sums(net);
    let s_star = snr_star(net, &a);
    if !(s_star > 0.0) {
        return None;
    }
    let (p1, p2) = (net.p1(), net.p2());
    let mu1p = mu_hi - mu_lo;
    let mut best: Option<(f64, f64)> = None;
    for k in 0..16 {
        let phi0 = -FRAC_PI_2 + PI * (k as f64 + 0.5) / 16.0;
        let (sp, cp) = phi0.sin_cos();
        let denom = p1 * sp * sp + p2 * cp * cp;
        if !(denom > 0.0) {
            continue;
        }
        let Some(root) = newton_solve(net, &a, mu1p, mu_lo, [phi0, (s_star / denom).ln()]) else {
            continue;
        };
        let (phi, t) = (root[0], root[1].exp());
        let (sp, cp) = phi.sin_cos();
        let s1 = p1 * sp * sp * t;
        let m1 = mu1p * (1.0 + s1 + p2 * cp * cp * t) + mu_lo * (1.0 + s1);
        let m2 = mu_lo * (1.0 + s1);
        let (c1, c2) = (m1 * sp, m2 * cp);
        let dir = family_direction(net, c1, c2);
        let Ok(gain) = RelayGain::new(dir) else {
            continue;
        };
        let Ok(snr) = mac_snrs(net, &gain) else {
            continue;
        };
        if !(snr.snr1.is_finite() && snr.snr2.is_finite()) {
            continue;
        }
        let obj = oriented_objective(snr, mu_hi, mu_lo);
        let theta = canonical_theta(c1.atan2(c2));
        if best.is_none_or(|(b, _)| obj > b) {
            best = Some((obj, theta));
        }
    }
    best
}

/// Maximizes `μ1 R1 + μ2 R2` over the capacity region.
///
/// For `μ1 ≥ μ2` the optimum sits on a corner with user 1 decoded last, so
/// `R1 = log(1 + s1)` and `R2 = log(1 + s2 / (1 + s1))`; otherwise the roles
/// are exchanged. The angle scan is authoritative; the stationarity-equation
/// solver runs alongside and any disagreement beyond
/// [`WEIGHTED_AGREEMENT_TOL`] is reported in `diagnostic`.
pub fn mac_weighted_optimum(net: &MacChannel, mu1: f64, mu2: f64) -> Result<WeightedOptimum> {
    let valid = |m: f64| m.is_finite() && m >= 0.0;
    if !valid(mu1) || !valid(mu2) || mu1 + mu2 <= 0.0 {
        return Err(AfError::InvalidWeights { mu1, mu2 });
    }
    let swap = mu2 > mu1;
    let (oriented, mu_hi, mu_lo) = if swap {
        (net.swapped(), mu2, mu1)
    } else {
        (net.clone(), mu1, mu2)
    };
    // θ' in the swapped frame corresponds to π/2 − θ in the original one
    let to_output = |th: f64| {
        if swap {
            canonical_theta(FRAC_PI_2 - th)
        } else {
            canonical_theta(th)
        }
    };

    let scan = theta_scan(&oriented, mu_hi, mu_lo, to_output);
    let (ra, rb) = scan.snr.map(oriented_rates).unwrap_or((0.0, 0.0));
    let (r1, r2) = if swap { (rb, ra) } else { (ra, rb) };
    let theta = to_output(scan.theta);

    let eq = equation_path(&oriented, mu_hi, mu_lo);
    let diagnostic = match eq {
        None if scan.objective > 0.0 => {
            Some("stationarity-equation solver found no root; angle scan used".to_string())
        }
        Some((eq_obj, eq_theta)) if (eq_obj - scan.objective).abs() > WEIGHTED_AGREEMENT_TOL => {
            Some(format!(
                "solver disagreement: angle scan {:.12e} at theta {:.9}, equations {:.12e} at theta {:.9}",
                scan.objective,
                theta,
                eq_obj,
                to_output(eq_theta)
            ))
        }
        _ => None,
    };

    Ok(WeightedOptimum {
        point: RatePoint::new(r1, r2, Some(theta), "W"),
        objective: mu1 * r1 + mu2 * r2,
        theta,
        plateau_width: scan.plateau_width,
        equation_objective: eq.map(|(o, _)| o),
        diagnostic,
    })
}

/// Named corners of a traced region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCorners {
    pub a: RatePoint,
    pub b: RatePoint,
    pub c: RatePoint,
    pub d: RatePoint,
    pub e: RatePoint,
    pub f: RatePoint,
}

/// Boundary of the MAC capacity region, from the `r2` axis to the `r1` axis.
///
/// Rows are labelled by segment: `AB` (2 points), `BC` (curve), `DE` (curve),
/// `EF` (2 points). The straight `C→D` segment joins the last `BC` row to the
/// first `DE` row; its interior is reached only by time sharing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionBoundary {
    pub points: Vec<RatePoint>,
    pub corners: RegionCorners,
    pub sum_rate: SumRateSolution,
    pub corner_user1: (f64, f64),
    pub corner_user2: (f64, f64),
}

impl RegionBoundary {
    /// Whether `r1` never decreases and `r2` never increases along the
    /// boundary, up to `tol`.
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].r1 >= w[0].r1 - tol && w[1].r2 <= w[0].r2 + tol)
    }
}

/// Traces the MAC region boundary with `n_curve_points` samples per curved
/// segment, uniformly spaced in θ.
pub fn mac_region(net: &MacChannel, n_curve_points: usize) -> Result<RegionBoundary> {
    if n_curve_points < 2 {
        return Err(AfError::InvalidParameter(format!(
            "need at least 2 points per curved segment, got {n_curve_points}"
        )));
    }
    let (c2_fav, c1_other) = mac_corner_rates(net, User::Two);
    let (c1_fav, c2_other) = mac_corner_rates(net, User::One);
    let sum = mac_sum_capacity(net);
    let theta11 = sum.theta11;

    let a = RatePoint::new(0.0, c2_fav, None, "A");
    let b = RatePoint::new(c1_other, c2_fav, Some(0.0), "B");
    let e_theta = if theta11 >= 0.0 {
        FRAC_PI_2
    } else {
        -FRAC_PI_2
    };
    let e = RatePoint::new(c1_fav, c2_other, Some(e_theta), "E");
    let f = RatePoint::new(c1_fav, 0.0, None, "F");
    let c = sum.corner_1_then_2.clone();
    let d = sum.corner_2_then_1.clone();

    let last = (n_curve_points - 1) as f64;
    let curve_bc: Vec<RatePoint> = (0..n_curve_points)
        .into_par_iter()
        .map(|k| {
            let th = theta11 * k as f64 / last;
            match snrs_at(net, th) {
                Some(s) => RatePoint::new(
                    ln1p_clamped(s.snr1 / (1.0 + s.snr2)),
                    ln1p_clamped(s.snr2),
                    Some(th),
                    "BC",
                ),
                None => RatePoint::new(b.r1, b.r2, Some(th), "BC"),
            }
        })
        .collect();
    let curve_de: Vec<RatePoint> = (0..n_curve_points)
        .into_par_iter()
        .map(|k| {
            let th = if k + 1 == n_curve_points {
                e_theta
            } else {
                theta11 + (e_theta - theta11) * k as f64 / last
            };
            match snrs_at(net, th) {
                Some(s) => {
                    let (r1, r2) = oriented_rates(s);
                    RatePoint::new(r1, r2, Some(th), "DE")
                }
                None => RatePoint::new(e.r1, e.r2, Some(th), "DE"),
            }
        })
        .collect();

    let mut points = Vec::with_capacity(4 + 2 * n_curve_points);
    points.push(a.with_label("AB"));
    points.push(RatePoint::new(b.r1, b.r2, None, "AB"));
    points.extend(curve_bc);
    points.extend(curve_de);
    points.push(RatePoint::new(e.r1, e.r2, None, "EF"));
    points.push(f.with_label("EF"));

    Ok(RegionBoundary {
        points,
        corners: RegionCorners { a, b, c, d, e, f },
        sum_rate: sum,
        corner_user1: (c1_fav, c2_other),
        corner_user2: (c1_other, c2_fav),
    })
}
