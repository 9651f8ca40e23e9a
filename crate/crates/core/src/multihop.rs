//! Three-hop networks with two stages of multi-antenna AF relays.
//!
//! Sources reach the first relay stage through `F̄1`, `F̄2`; stage one reaches
//! stage two through `H`; stage two reaches the destination through `Ḡ`.
//! Each relay applies a square amplification block, so each stage's gain is a
//! block-diagonal matrix (`A` for stage one, `B` for stage two).
//!
//! SNRs are written with the two power constraints folded into the channel,
//! which makes them invariant under independent rescaling of `A` and `B`:
//!
//! ```text
//! snr_u = P_u P_R1 P_R2 (Ḡᵀ B H A F̄_u)² / Δ_m
//! ```
//!
//! The dual broadcast network uses `A_b = Aᵀ`, `B_b = Bᵀ`, source power
//! `P_R2`, second-stage power `P_R1` and first-stage power `P = P1 + P2`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::capacity::User;
use crate::channel::SnrPair;
use crate::duality::{bc_point, stronger_bc_user, ALPHA_TOL, CORNER_TOL};
use crate::error::{AfError, Result};

/// Relative tolerance of the `P Δ_m = P1 Δ_b1 + P2 Δ_b2` identity.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Block-diagonal gain of one relay stage; each block is one relay.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGain {
    blocks: Vec<DMatrix<f64>>,
}

impl BlockGain {
    pub fn new(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(AfError::InvalidNetwork("relay stage has no relays".into()));
        }
        for b in &blocks {
            if b.nrows() != b.ncols() || b.nrows() == 0 {
                return Err(AfError::InvalidNetwork(format!(
                    "relay block must be square and non-empty, got {}x{}",
                    b.nrows(),
                    b.ncols()
                )));
            }
            if b.iter().any(|x| !x.is_finite()) {
                return Err(AfError::InvalidNetwork(
                    "relay block has non-finite entries".into(),
                ));
            }
        }
        Ok(Self { blocks })
    }

    /// One scalar block per single-antenna relay.
    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(d.iter().map(|&x| DMatrix::from_element(1, 1, x)).collect())
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut at = 0;
        for b in &self.blocks {
            let k = b.nrows();
            m.view_mut((at, at), (k, k)).copy_from(b);
            at += k;
        }
        m
    }

    pub fn transpose(&self) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b.transpose()).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b * c).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|&x| x == 0.0))
    }
}

/// A two-user three-hop network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ThreeHopFile", into = "ThreeHopFile")]
pub struct ThreeHopNetwork {
    f1_bar: DVector<f64>,
    f2_bar: DVector<f64>,
    g_bar: DVector<f64>,
    h: DMatrix<f64>,
    blocks_a: Vec<usize>,
    blocks_b: Vec<usize>,
    p1: f64,
    p2: f64,
    p_r1: f64,
    p_r2: f64,
}

impl ThreeHopNetwork {
    /// `h` is `n2 × n1`, where `n1 = Σ blocks_a` antennas sit in stage one and
    /// `n2 = Σ blocks_b` in stage two.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        f1_bar: DVector<f64>,
        f2_bar: DVector<f64>,
        g_bar: DVector<f64>,
        h: DMatrix<f64>,
        blocks_a: Vec<usize>,
        blocks_b: Vec<usize>,
        p1: f64,
        p2: f64,
        p_r1: f64,
        p_r2: f64,
    ) -> Result<Self> {
        if blocks_a.is_empty()
            || blocks_b.is_empty()
            || blocks_a.contains(&0)
            || blocks_b.contains(&0)
        {
            return Err(AfError::InvalidNetwork(
                "each stage needs at least one relay and every relay at least one antenna".into(),
            ));
        }
        let n1: usize = blocks_a.iter().sum();
        let n2: usize = blocks_b.iter().sum();
        let dim = |what, expected, found| {
            if expected == found {
                Ok(())
            } else {
                Err(AfError::Dimension {
                    what,
                    expected,
                    found,
                })
            }
        };
        dim("f1_bar", n1, f1_bar.len())?;
        dim("f2_bar", n1, f2_bar.len())?;
        dim("g_bar", n2, g_bar.len())?;
        dim("h rows", n2, h.nrows())?;
        dim("h columns", n1, h.ncols())?;
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(f1_bar.as_slice())
            || !finite(f2_bar.as_slice())
            || !finite(g_bar.as_slice())
            || !finite(h.as_slice())
        {
            return Err(AfError::InvalidNetwork(
                "channel entries must be finite".into(),
            ));
        }
        for (name, p, strict) in [
            ("p1", p1, false),
            ("p2", p2, false),
            ("p_r1", p_r1, true),
            ("p_r2", p_r2, true),
        ] {
            let ok = p.is_finite() && if strict { p > 0.0 } else { p >= 0.0 };
            if !ok {
                return Err(AfError::InvalidNetwork(format!(
                    "{name} = {p} is out of range"
                )));
            }
        }
        if p1 + p2 <= 0.0 {
            return Err(AfError::InvalidNetwork(
                "total user power p1 + p2 must be positive".into(),
            ));
        }
        Ok(Self {
            f1_bar,
            f2_bar,
            g_bar,
            h,
            blocks_a,
            blocks_b,
            p1,
            p2,
            p_r1,
            p_r2,
        })
    }

    pub fn f1_bar(&self) -> &DVector<f64> {
        &self.f1_bar
    }

    pub fn f2_bar(&self) -> &DVector<f64> {
        &self.f2_bar
    }

    pub fn g_bar(&self) -> &DVector<f64> {
        &self.g_bar
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn blocks_a(&self) -> &[usize] {
        &self.blocks_a
    }

    pub fn blocks_b(&self) -> &[usize] {
        &self.blocks_b
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn p_r1(&self) -> f64 {
        self.p_r1
    }

    pub fn p_r2(&self) -> f64 {
        self.p_r2
    }

    /// Total user power, which becomes the first-stage budget of the dual.
    pub fn p_total(&self) -> f64 {
        self.p1 + self.p2
    }

    fn check_gains(&self, a: &BlockGain, b: &BlockGain) -> Result<()> {
        let sizes = |what, expected: &[usize], found: &BlockGain| {
            if found.sizes() == expected {
                Ok(())
            } else {
                Err(AfError::Dimension {
                    what,
                    expected: expected.iter().sum(),
                    found: found.dim(),
                })
            }
        };
        sizes("stage-one gain blocks", &self.blocks_a, a)?;
        sizes("stage-two gain blocks", &self.blocks_b, b)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThreeHopFile {
    f1_bar: Vec<f64>,
    f2_bar: Vec<f64>,
    g_bar: Vec<f64>,
    h: Vec<Vec<f64>>,
    blocks_a: Vec<usize>,
    blocks_b: Vec<usize>,
    p1: f64,
    p2: f64,
    p_r1: f64,
    p_r2: f64,
}

impl TryFrom<ThreeHopFile> for ThreeHopNetwork {
    type Error = AfError;

    fn try_from(v: ThreeHopFile) -> Result<Self> {
        let rows = v.h.len();
        let cols = v.h.first().map_or(0, |r| r.len());
        if let Some(bad) = v.h.iter().find(|r| r.len() != cols) {
            return Err(AfError::Dimension {
                what: "h row",
                expected: cols,
                found: bad.len(),
            });
        }
        let h = DMatrix::from_fn(rows, cols, |i, j| v.h[i][j]);
        ThreeHopNetwork::new(
            DVector::from_vec(v.f1_bar),
            DVector::from_vec(v.f2_bar),
            DVector::from_vec(v.g_bar),
            h,
            v.blocks_a,
            v.blocks_b,
            v.p1,
            v.p2,
            v.p_r1,
            v.p_r2,
        )
    }
}

impl From<ThreeHopNetwork> for ThreeHopFile {
    fn from(n: ThreeHopNetwork) -> Self {
        ThreeHopFile {
            f1_bar: n.f1_bar.as_slice().to_vec(),
            f2_bar: n.f2_bar.as_slice().to_vec(),
            g_bar: n.g_bar.as_slice().to_vec(),
            h: (0..n.h.nrows())
                .map(|i| n.h.row(i).iter().copied().collect())
                .collect(),
            blocks_a: n.blocks_a,
            blocks_b: n.blocks_b,
            p1: n.p1,
            p2: n.p2,
            p_r1: n.p_r1,
            p_r2: n.p_r2,
        }
    }
}

/// Normalized noise denominators of the MAC and its dual BC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub delta_m: f64,
    pub delta_b1: f64,
    pub delta_b2: f64,
    /// `|P Δ_m − P1 Δ_b1 − P2 Δ_b2| / (P Δ_m)`.
    pub identity_residual: f64,
}

/// Squared norms shared by the MAC and BC denominators, expressed through the
/// MAC-side gains `A`, `B`.
struct ChainTerms {
    /// `(Ḡᵀ B H A F̄_u)²`.
    num1: f64,
    num2: f64,
    /// `‖B H A F̄_u‖²`.
    bhaf1: f64,
    bhaf2: f64,
    /// `‖Ḡᵀ B H A‖²`.
    gbha: f64,
    /// `‖B H A‖²_F`.
    bha: f64,
    /// `‖A F̄_u‖²`.
    af1: f64,
    af2: f64,
    /// `‖A‖²_F`.
    a: f64,
    /// `‖Ḡᵀ B‖²`.
    gb: f64,
    /// `‖B‖²_F`.
    b: f64,
}

fn chain_terms(net: &ThreeHopNetwork, a: &DMatrix<f64>, b: &DMatrix<f64>) -> ChainTerms {
    let bha = b * &net.h * a;
    let v1 = &bha * &net.f1_bar;
    let v2 = &bha * &net.f2_bar;
    let gbha = bha.tr_mul(&net.g_bar);
    ChainTerms {
        num1: net.g_bar.dot(&v1).powi(2),
        num2: net.g_bar.dot(&v2).powi(2),
        bhaf1: v1.norm_squared(),
        bhaf2: v2.norm_squared(),
        gbha: gbha.norm_squared(),
        bha: bha.norm_squared(),
        af1: (a * &net.f1_bar).norm_squared(),
        af2: (a * &net.f2_bar).norm_squared(),
        a: a.norm_squared(),
        gb: b.tr_mul(&net.g_bar).norm_squared(),
        b: b.norm_squared(),
    }
}

fn delta_m(net: &ThreeHopNetwork, t: &ChainTerms) -> f64 {
    let (p1, p2, r1, r2) = (net.p1, net.p2, net.p_r1, net.p_r2);
    p1 * r1 * t.bhaf1
        + p2 * r1 * t.bhaf2
        + r1 * r2 * t.gbha
        + r1 * t.bha
        + (p1 * t.af1 + p2 * t.af2 + t.a) * (r2 * t.gb + t.b)
}

/// BC denominator for user `j`, written with the BC gains `A_b`, `B_b`.
fn delta_b(net: &ThreeHopNetwork, a_b: &DMatrix<f64>, b_b: &DMatrix<f64>, f: &DVector<f64>) -> f64 {
    let (p, r1, r2) = (net.p_total(), net.p_r1, net.p_r2);
    let m = a_b * net.h.transpose() * b_b;
    let mg = &m * &net.g_bar;
    let fa = a_b.tr_mul(f);
    let fm = m.tr_mul(f);
    let bg = b_b * &net.g_bar;
    r1 * r2 * mg.norm_squared()
        + r1 * m.norm_squared()
        + (a_b.norm_squared() + p * fa.norm_squared())
            * (r2 * bg.norm_squared() + b_b.norm_squared())
        + p * r1 * fm.norm_squared()
}

fn deltas(
    net: &ThreeHopNetwork,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    terms: &ChainTerms,
) -> DeltaReport {
    let dm = delta_m(net, terms);
    let (a_b, b_b) = (a.transpose(), b.transpose());
    let db1 = delta_b(net, &a_b, &b_b, &net.f1_bar);
    let db2 = delta_b(net, &a_b, &b_b, &net.f2_bar);
    let p = net.p_total();
    let lhs = p * dm;
    let identity_residual = (lhs - net.p1 * db1 - net.p2 * db2).abs() / lhs;
    DeltaReport {
        delta_m: dm,
        delta_b1: db1,
        delta_b2: db2,
        identity_residual,
    }
}

fn nonzero(g: &BlockGain) -> Result<()> {
    if g.is_zero() {
        Err(AfError::DegenerateGain)
    } else {
        Ok(())
    }
}

/// MAC SNRs for stage gains `a`, `b` together with the Δ denominators.
pub fn three_hop_mac_snrs(
    net: &ThreeHopNetwork,
    a: &BlockGain,
    b: &BlockGain,
) -> Result<(SnrPair, DeltaReport)> {
    net.check_gains(a, b)?;
    nonzero(a)?;
    nonzero(b)?;
    let (am, bm) = (a.to_matrix(), b.to_matrix());
    let t = chain_terms(net, &am, &bm);
    let rep = deltas(net, &am, &bm, &t);
    let k = net.p_r1 * net.p_r2 / rep.delta_m;
    Ok((
        SnrPair {
            snr1: net.p1 * k * t.num1,
            snr2: net.p2 * k * t.num2,
        },
        rep,
    ))
}

/// BC SNRs of the dual network for BC-side gains `a_b` (stage next to the
/// users) and `b_b` (stage next to the source).
pub fn three_hop_bc_snrs(
    net: &ThreeHopNetwork,
    a_b: &BlockGain,
    b_b: &BlockGain,
) -> Result<(SnrPair, DeltaReport)> {
    let (a, b) = (a_b.transpose(), b_b.transpose());
    net.check_gains(&a, &b)?;
    nonzero(a_b)?;
    nonzero(b_b)?;
    let (am, bm) = (a.to_matrix(), b.to_matrix());
    let t = chain_terms(net, &am, &bm);
    let rep = deltas(net, &am, &bm, &t);
    let k = net.p_total() * net.p_r1 * net.p_r2;
    Ok((
        SnrPair {
            snr1: k * t.num1 / rep.delta_b1,
            snr2: k * t.num2 / rep.delta_b2,
        },
        rep,
    ))
}

/// Transmit powers used by the two relay stages of the MAC.
pub fn three_hop_relay_powers(
    net: &ThreeHopNetwork,
    a: &BlockGain,
    b: &BlockGain,
) -> Result<(f64, f64)> {
    net.check_gains(a, b)?;
    let (am, bm) = (a.to_matrix(), b.to_matrix());
    let t = chain_terms(net, &am, &bm);
    let q1 = net.p1 * t.af1 + net.p2 * t.af2 + t.a;
    let q2 = net.p1 * t.bhaf1 + net.p2 * t.bhaf2 + t.bha + t.b;
    Ok((q1, q2))
}

/// Scales `a` onto the first-stage budget, then `b` onto the second-stage
/// budget given the scaled first stage.
pub fn three_hop_feasible_gains(
    net: &ThreeHopNetwork,
    a: &BlockGain,
    b: &BlockGain,
) -> Result<(BlockGain, BlockGain)> {
    let (q1, _) = three_hop_relay_powers(net, a, b)?;
    if !(q1 > 0.0) {
        return Err(AfError::DegenerateGain);
    }
    let a = a.scaled((net.p_r1 / q1).sqrt());
    let (_, q2) = three_hop_relay_powers(net, &a, b)?;
    if !(q2 > 0.0) || b.is_zero() {
        return Err(AfError::DegenerateGain);
    }
    let b = b.scaled((net.p_r2 / q2).sqrt());
    Ok((a, b))
}

/// Outcome of the three-hop duality check for one pair of stage gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeHopReport {
    pub deltas: DeltaReport,
    /// Rescaling of `Bᵀ` onto the dual's second-stage budget `P_R1`.
    pub kappa1: f64,
    /// Rescaling of `Aᵀ` onto the dual's first-stage budget `P`.
    pub kappa2: f64,
    pub mac_snrs: SnrPair,
    pub bc_snrs: SnrPair,
    pub stronger: User,
    pub alpha: f64,
    pub alpha_alt: f64,
    pub mac_corner: (f64, f64),
    pub bc_point: (f64, f64),
    pub corner_residual: f64,
    pub alpha_residual: f64,
    pub passed: bool,
}

/// Builds the dual BC from the transposed gains and checks that the Δ
/// identity holds and that the MAC corner decoded against the stronger BC
/// user lands on the BC boundary at the matching power split.
pub fn three_hop_duality_check(
    net: &ThreeHopNetwork,
    a: &BlockGain,
    b: &BlockGain,
) -> Result<ThreeHopReport> {
    let (mac, rep) = three_hop_mac_snrs(net, a, b)?;
    let (a_b, b_b) = (a.transpose(), b.transpose());
    let (bc, _) = three_hop_bc_snrs(net, &a_b, &b_b)?;

    let (am, bm) = (a.to_matrix(), b.to_matrix());
    let t = chain_terms(net, &am, &bm);
    let (p, r1, r2) = (net.p_total(), net.p_r1, net.p_r2);

    let stronger = stronger_bc_user(bc.snr1, bc.snr2);
    let (alpha, alpha_alt, mac_corner) = match stronger {
        User::One => {
            let den = p * rep.delta_m + p * net.p2 * r1 * r2 * t.num2;
            (
                rep.delta_b1 * net.p1 / den,
                (p * rep.delta_m - net.p2 * rep.delta_b2) / den,
                ((mac.snr1 / (1.0 + mac.snr2)).ln_1p(), mac.snr2.ln_1p()),
            )
        }
        User::Two => {
            let den = p * rep.delta_m + p * net.p1 * r1 * r2 * t.num1;
            (
                rep.delta_b2 * net.p2 / den,
                (p * rep.delta_m - net.p1 * rep.delta_b1) / den,
                (mac.snr1.ln_1p(), (mac.snr2 / (1.0 + mac.snr1)).ln_1p()),
            )
        }
    };
    let alpha = alpha.clamp(0.0, 1.0);
    let bcp = bc_point(bc.snr1, bc.snr2, alpha);
    let corner_residual = (bcp.0 - mac_corner.0)
        .abs()
        .max((bcp.1 - mac_corner.1).abs());
    let alpha_residual = (alpha - alpha_alt).abs();

    // power bookkeeping of the dual: source P_R2 → Bᵀ (budget P_R1) → Aᵀ (budget P)
    let bt = bm.transpose();
    let at = am.transpose();
    let stage_b_in =
        &net.g_bar * net.g_bar.transpose() * r2 + DMatrix::identity(bt.nrows(), bt.nrows());
    let kappa1 = (r1 / (&bt * &stage_b_in * bt.transpose()).trace()).sqrt();
    let bt_s = &bt * kappa1;
    let ht = net.h.transpose();
    let stage_a_in = &ht * &bt_s * &stage_b_in * bt_s.transpose() * &net.h
        + DMatrix::identity(at.nrows(), at.nrows());
    let kappa2 = (p / (&at * &stage_a_in * at.transpose()).trace()).sqrt();

    let passed = rep.identity_residual <= IDENTITY_TOL
        && corner_residual <= CORNER_TOL
        && alpha_residual <= ALPHA_TOL;
    Ok(ThreeHopReport {
        deltas: rep,
        kappa1,
        kappa2,
        mac_snrs: mac,
        bc_snrs: bc,
        stronger,
        alpha,
        alpha_alt,
        mac_corner,
        bc_point: bcp,
        corner_residual,
        alpha_residual,
        passed,
    })
}
