//! The `afrelay` command-line front end.
//!
//! Exit codes are a stable contract: 0 on success, 1 when a verification
//! run finds a violation, 2 for usage, config and I/O errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::capacity::{mac_region, ptp_capacity, User};
use crate::channel::{
    feasible_gain, power_mismatch, ptp_snr, BcChannel, MacChannel, PtpChannel, RelayGain,
};
use crate::duality::{bc_region, dual_ptp, verify_mac_bc_duality, CORNER_TOL};
use crate::io::{self, load_json, with_suffix, IoError, RateUnit, RunManifest};
use crate::multihop::{
    three_hop_duality_check, three_hop_feasible_gains, BlockGain, ThreeHopNetwork, IDENTITY_TOL,
};
use crate::oracle::{covariance_chain_bc, covariance_chain_mac, sample_direction};
use crate::relay::ptp_optimal_gain;
use crate::AfError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Largest relative capacity mismatch accepted between a point-to-point
/// channel and its dual.
pub const PTP_DUALITY_TOL: f64 = 1e-12;

/// Agreement required between the closed-form three-hop SNRs and the
/// covariance-propagation evaluation.
pub const CHAIN_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(
    name = "afrelay",
    version,
    about = "Capacity and duality tools for AF relay networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity and optimal relay gain of a point-to-point relay channel.
    Ptp {
        #[arg(long)]
        config: PathBuf,
        /// Where to write the gain vector (default: the config path with a
        /// `.gain.json` extension).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Boundary of the two-user MAC capacity region.
    MacRegion {
        #[arg(long)]
        config: PathBuf,
        /// Samples per curved segment.
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
        /// Report rates in bits instead of nats.
        #[arg(long)]
        bits: bool,
    },
    /// BC capacity region as a union of dual MAC regions.
    BcRegion {
        #[arg(long)]
        config: PathBuf,
        /// Number of power splits between the dual MAC users.
        #[arg(long, default_value_t = 51)]
        splits: usize,
        /// Samples per curved segment of each split.
        #[arg(long, default_value_t = 100)]
        points: usize,
        /// Output prefix.
        #[arg(long)]
        out: PathBuf,
        /// Also write the upper concave envelope of the frontier.
        #[arg(long)]
        time_sharing: bool,
        #[arg(long)]
        bits: bool,
    },
    /// Randomized duality checks.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: VerifyMode,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report path (default: the config path with a `.verify.json`
        /// extension).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyMode {
    Ptp,
    MacBc,
    ThreeHop,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Solver(#[from] AfError),
    #[error("{0}")]
    Usage(String),
}

/// Parses `args` (including the program name) and runs the command,
/// writing human-readable output to `stdout` and diagnostics to `stderr`.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    match execute(&cli.command, stdout) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VERIFY_FAILED,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

/// Configures the global thread pool from `AFRELAY_THREADS`.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("AFRELAY_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "AFRELAY_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}

/// Runs one command. `Ok(false)` means a verification failed.
fn execute(cmd: &Command, stdout: &mut dyn Write) -> Result<bool, CliError> {
    match cmd {
        Command::Ptp { config, out } => cmd_ptp(config, out.as_deref(), stdout).map(|_| true),
        Command::MacRegion {
            config,
            points,
            out,
            bits,
        } => cmd_mac_region(config, *points, out, unit(*bits), stdout).map(|_| true),
        Command::BcRegion {
            config,
            splits,
            points,
            out,
            time_sharing,
            bits,
        } => cmd_bc_region(
            config,
            *splits,
            *points,
            out,
            *time_sharing,
            unit(*bits),
            stdout,
        )
        .map(|_| true),
        Command::Verify {
            config,
            mode,
            trials,
            seed,
            out,
        } => cmd_verify(config, *mode, *trials, *seed, out.as_deref(), stdout),
    }
}

fn unit(bits: bool) -> RateUnit {
    if bits {
        RateUnit::Bits
    } else {
        RateUnit::Nats
    }
}

fn cmd_ptp(config: &Path, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let loaded = load_json::<PtpChannel>(config)?;
    let net = loaded.value;
    let capacity = ptp_capacity(&net);
    // a channel without a path has no meaningful optimum; report the
    // zero-power gain instead
    let gain = match ptp_optimal_gain(&net) {
        Ok(d) => d.as_slice().to_vec(),
        Err(AfError::Disconnected) => vec![0.0; net.num_relays()],
        Err(e) => return Err(e.into()),
    };
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.with_extension("gain.json"));

    let mut manifest = RunManifest::new("ptp", config, loaded.digest);
    manifest.emit_json(
        &out,
        &json!({
            "capacity_nats": capacity,
            "capacity_bits": RateUnit::Bits.convert(capacity),
            "gain": gain,
        }),
    )?;
    manifest.finish(&out)?;

    let _ = writeln!(stdout, "capacity_nats={capacity}");
    let _ = writeln!(stdout, "capacity_bits={}", RateUnit::Bits.convert(capacity));
    let _ = writeln!(stdout, "gain_file={}", out.display());
    Ok(())
}

fn cmd_mac_region(
    config: &Path,
    points: usize,
    out: &Path,
    unit: RateUnit,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    if points < 2 {
        return Err(CliError::Usage(format!(
            "--points must be at least 2, got {points}"
        )));
    }
    let loaded = load_json::<MacChannel>(config)?;
    let net = loaded.value;
    let region = mac_region(&net, points)?;
    let sum = &region.sum_rate;

    let mut manifest = RunManifest::new("mac-region", config, loaded.digest);
    manifest
        .param("points", points)
        .param("units", unit.suffix());
    manifest.emit(out, io::region_csv(&region, unit).as_bytes())?;
    let summary_path = out.with_extension("summary.json");
    let summary = json!({
        "units": unit.suffix(),
        "c1_10": unit.convert(region.corner_user1.0),
        "c2_10": unit.convert(region.corner_user1.1),
        "c1_01": unit.convert(region.corner_user2.0),
        "c2_01": unit.convert(region.corner_user2.1),
        "c11": unit.convert(sum.capacity),
        "snr_star": sum.snr_star,
        "theta11": sum.theta11,
        "beta": sum.beta,
        "theta_branch": sum.theta_branch,
        "rows": region.points.len(),
    });
    manifest.emit_json(&summary_path, &summary)?;
    manifest.finish(out)?;

    let _ = writeln!(stdout, "rows={}", region.points.len());
    let _ = writeln!(
        stdout,
        "c11_{}={}",
        unit.suffix(),
        unit.convert(sum.capacity)
    );
    let _ = writeln!(stdout, "theta11={}", sum.theta11);
    let _ = writeln!(stdout, "beta={}", sum.beta);
    Ok(())
}

fn cmd_bc_region(
    config: &Path,
    splits: usize,
    points: usize,
    prefix: &Path,
    time_sharing: bool,
    unit: RateUnit,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    if splits < 2 {
        return Err(CliError::Usage(format!(
            "--splits must be at least 2, got {splits}"
        )));
    }
    if points < 2 {
        return Err(CliError::Usage(format!(
            "--points must be at least 2, got {points}"
        )));
    }
    let loaded = load_json::<BcChannel>(config)?;
    let net = loaded.value;
    let region = bc_region(&net, splits, points)?;

    let mut manifest = RunManifest::new("bc-region", config, loaded.digest);
    manifest
        .param("splits", splits)
        .param("points", points)
        .param("time_sharing", time_sharing)
        .param("units", unit.suffix());
    manifest.emit(
        &with_suffix(prefix, ".splits.csv"),
        io::bc_splits_csv(&region, unit).as_bytes(),
    )?;
    manifest.emit(
        &with_suffix(prefix, ".frontier.csv"),
        io::points_csv(&region.frontier, unit).as_bytes(),
    )?;
    if time_sharing {
        manifest.emit(
            &with_suffix(prefix, ".envelope.csv"),
            io::points_csv(&region.envelope, unit).as_bytes(),
        )?;
    }
    manifest.emit_json(
        &with_suffix(prefix, ".summary.json"),
        &json!({
            "units": unit.suffix(),
            "splits": splits,
            "points": points,
            "frontier_points": region.frontier.len(),
            "envelope_points": region.envelope.len(),
            "envelope_gap": unit.convert(region.envelope_gap),
            "non_convex": region.non_convex,
        }),
    )?;
    manifest.finish(prefix)?;

    let _ = writeln!(stdout, "frontier_points={}", region.frontier.len());
    let _ = writeln!(stdout, "non_convex={}", region.non_convex);
    Ok(())
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    mode: VerifyMode,
    trials: u64,
    seed: u64,
    passed: bool,
    failures: u64,
    max_residuals: serde_json::Map<String, serde_json::Value>,
    per_trial: Vec<serde_json::Value>,
}

/// Running maxima of named residuals.
#[derive(Default)]
struct Maxima(serde_json::Map<String, serde_json::Value>);

impl Maxima {
    fn update(&mut self, name: &str, value: f64) {
        let cur = self.0.get(name).and_then(|v| v.as_f64()).unwrap_or(0.0);
        self.0.insert(name.to_string(), json!(cur.max(value)));
    }
}

fn cmd_verify(
    config: &Path,
    mode: VerifyMode,
    trials: u64,
    seed: u64,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<bool, CliError> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.with_extension("verify.json"));
    let (digest, per_trial) = match mode {
        VerifyMode::Ptp => {
            let loaded = load_json::<PtpChannel>(config)?;
            let t = verify_ptp(&loaded.value, trials, seed)?;
            (loaded.digest, t)
        }
        VerifyMode::MacBc => {
            let loaded = load_json::<MacChannel>(config)?;
            let t = verify_mac_bc(&loaded.value, trials, seed)?;
            (loaded.digest, t)
        }
        VerifyMode::ThreeHop => {
            let loaded = load_json::<ThreeHopNetwork>(config)?;
            let t = verify_three_hop(&loaded.value, trials, seed)?;
            (loaded.digest, t)
        }
    };

    let mut maxima = Maxima::default();
    let mut failures = 0;
    for t in &per_trial {
        if t["passed"] != json!(true) {
            failures += 1;
        }
        for (k, v) in t.as_object().into_iter().flatten() {
            if k.ends_with("residual") {
                maxima.update(k, v.as_f64().unwrap_or(f64::INFINITY));
            }
        }
    }
    let report = VerifyReport {
        mode,
        trials,
        seed,
        passed: failures == 0,
        failures,
        max_residuals: maxima.0,
        per_trial,
    };

    let mut manifest = RunManifest::new("verify", config, digest);
    manifest
        .param("mode", mode)
        .param("trials", trials)
        .param("seed", seed);
    manifest.emit_json(&out, &report)?;
    manifest.finish(&out)?;

    let _ = writeln!(
        stdout,
        "{} trials={} failures={}",
        if report.passed { "PASS" } else { "FAIL" },
        trials,
        failures
    );
    for (k, v) in &report.max_residuals {
        let _ = writeln!(stdout, "max_{k}={v}");
    }
    Ok(report.passed)
}

fn verify_ptp(
    net: &PtpChannel,
    trials: u64,
    seed: u64,
) -> Result<Vec<serde_json::Value>, CliError> {
    (0..trials)
        .map(|t| {
            let dir = RelayGain::new(sample_direction(seed, t, net.num_relays()))?;
            let d = feasible_gain(&dir, net)?;
            let pair = dual_ptp(net, &d)?;
            let c = ptp_snr(net, &d)?.ln_1p();
            let c_dual = ptp_snr(&pair.dual, &pair.dual_gain)?.ln_1p();
            let capacity_residual = if c > 0.0 {
                (c - c_dual).abs() / c
            } else {
                c_dual.abs()
            };
            let power_residual = power_mismatch(&pair.dual, &pair.dual_gain)?;
            Ok(json!({
                "trial": t,
                "kappa": pair.kappa,
                "capacity": c,
                "capacity_residual": capacity_residual,
                "power_residual": power_residual,
                "passed": capacity_residual <= PTP_DUALITY_TOL && power_residual <= PTP_DUALITY_TOL,
            }))
        })
        .collect()
}

fn verify_mac_bc(
    net: &MacChannel,
    trials: u64,
    seed: u64,
) -> Result<Vec<serde_json::Value>, CliError> {
    (0..trials)
        .map(|t| {
            let dir = RelayGain::new(sample_direction(seed, t, net.num_relays()))?;
            let d = feasible_gain(&dir, net)?;
            let r = verify_mac_bc_duality(net, &d)?;
            Ok(json!({
                "trial": t,
                "kappa": r.kappa,
                "alpha": r.alpha,
                "stronger": match r.stronger { User::One => 1, User::Two => 2 },
                "corner_residual": r.corner_residual,
                "alpha_residual": r.alpha_residual,
                "containment_violations": r.containment_violations,
                "max_containment_excess": r.max_containment_excess,
                "passed": r.passed && r.corner_residual <= CORNER_TOL,
            }))
        })
        .collect()
}

/// Random block-diagonal stage gains with standard normal entries.
pub fn random_block_gains(
    net: &ThreeHopNetwork,
    seed: u64,
    index: u64,
) -> Result<(BlockGain, BlockGain), AfError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut blocks = |sizes: &[usize]| {
        let b: Vec<DMatrix<f64>> = sizes
            .iter()
            .map(|&n| DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        BlockGain::new(b)
    };
    let a = blocks(net.blocks_a())?;
    let b = blocks(net.blocks_b())?;
    Ok((a, b))
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn verify_three_hop(
    net: &ThreeHopNetwork,
    trials: u64,
    seed: u64,
) -> Result<Vec<serde_json::Value>, CliError> {
    (0..trials)
        .map(|t| {
            let (a, b) = random_block_gains(net, seed, t)?;
            let (a, b) = three_hop_feasible_gains(net, &a, &b)?;
            let r = three_hop_duality_check(net, &a, &b)?;
            let (chain_mac, chain_dm) = covariance_chain_mac(net, &a, &b);
            let (chain_bc, chain_db1, chain_db2) =
                covariance_chain_bc(net, &a.transpose(), &b.transpose());
            let mac_chain_residual = rel(r.mac_snrs.snr1, chain_mac.snr1)
                .max(rel(r.mac_snrs.snr2, chain_mac.snr2))
                .max(rel(r.deltas.delta_m, chain_dm));
            let bc_chain_residual = rel(r.bc_snrs.snr1, chain_bc.snr1)
                .max(rel(r.bc_snrs.snr2, chain_bc.snr2))
                .max(rel(r.deltas.delta_b1, chain_db1))
                .max(rel(r.deltas.delta_b2, chain_db2));
            let identity_residual = r.deltas.identity_residual;
            Ok(json!({
                "trial": t,
                "kappa1": r.kappa1,
                "kappa2": r.kappa2,
                "alpha": r.alpha,
                "identity_residual": identity_residual,
                "corner_residual": r.corner_residual,
                "alpha_residual": r.alpha_residual,
                "mac_chain_residual": mac_chain_residual,
                "bc_chain_residual": bc_chain_residual,
                "passed": r.passed
                    && identity_residual <= IDENTITY_TOL
                    && mac_chain_residual <= CHAIN_TOL
                    && bc_chain_residual <= CHAIN_TOL,
            }))
        })
        .collect()
}
