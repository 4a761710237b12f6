//! Command-line surface: config parsing, subcommand dispatch, and data
//! emission for plots and verification pipelines.
//!
//! Every file output is paired with a `<file>.manifest.json` recording the
//! command, resolved configuration, parameters, tool version and timestamp, so
//! any artifact can be regenerated byte-for-byte from its manifest (given the
//! same build). Files are written atomically (temp file + rename). The
//! environment variable `MACAMP_THREADS` caps parallelism (0 = auto).

use crate::channel_model::{ChannelConfig, PowerSplit, ValidatedConfig};
use crate::monte_carlo::{estimate_dpc_rate, power_audit, simulate_distortion};
use crate::tradeoff_n_user::{check_submodular, distortion_bound_n};
use crate::tradeoff_two_user::{cross_section, surface_samples, RegionError};
use crate::weighted_sum::{converse_bound, evaluate_objective, grid_oracle, WeightVector};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Process outcome; maps onto the documented exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2: bad usage, unreadable or invalid configuration.
    Usage(String),
    /// Exit 3: well-formed but infeasible request.
    Infeasible(String),
    /// Exit 4: a verification check failed.
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Verification(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Infeasible(m) | CliError::Verification(m) => m,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

/// On-disk configuration: one file, one channel instance.
#[derive(Debug, Serialize, Deserialize)]
struct FileConfig {
    users: Vec<UserEntry>,
    state_var: f64,
    noise_var: f64,
    state_coupling: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct UserEntry {
    power: f64,
}

/// Reads and validates a channel configuration from a JSON file.
pub fn load_config(path: &Path) -> Result<ValidatedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let parsed: FileConfig = serde_json::from_str(&text).map_err(|e| {
        CliError::Usage(format!(
            "invalid config {} (line {}): {e}",
            path.display(),
            e.line()
        ))
    })?;
    ChannelConfig::new(
        parsed.users.iter().map(|u| u.power).collect(),
        parsed.state_var,
        parsed.noise_var,
        parsed.state_coupling,
    )
    .validate()
    .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

/// Formats a float with 12 significant digits, '.' separator, no locale.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = 11 - exp;
    if (0..=17).contains(&decimals) {
        format!("{:.*}", decimals as usize, x)
    } else {
        format!("{:.11e}", x)
    }
}

/// Writes `bytes` atomically: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::Usage(format!("cannot create temp file in {}: {e}", dir.display())))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.flush())
        .map_err(|e| CliError::Usage(format!("write failed: {e}")))?;
    tmp.persist(path)
        .map_err(|e| CliError::Usage(format!("cannot move output to {}: {e}", path.display())))?;
    Ok(())
}

/// Everything needed to reproduce an output file byte-for-byte.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: ChannelConfig,
    pub parameters: serde_json::Value,
    pub version: &'static str,
    pub timestamp_unix: u64,
}

impl RunManifest {
    fn new(command: &str, config: &ValidatedConfig, parameters: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            config: config.inner().clone(),
            parameters,
            version: env!("CARGO_PKG_VERSION"),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let mut path = out.as_os_str().to_owned();
    path.push(".manifest.json");
    let mut body = serde_json::to_vec_pretty(manifest).map_err(usage)?;
    body.push(b'\n');
    write_atomic(Path::new(&path), &body)
}

#[derive(Parser)]
#[command(
    name = "macamp",
    version,
    about = "Rate/state-estimation trade-off regions for state-dependent Gaussian MACs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the two-user rate/amplification surface onto a CSV grid
    Region2 {
        config: PathBuf,
        #[arg(long, default_value_t = 128)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit the Pareto boundary of the rate region at a fixed distortion
    Xsec {
        config: PathBuf,
        #[arg(long)]
        distortion: f64,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Maximize a weighted rate/amplification objective
    Optimize {
        config: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        mus: Vec<f64>,
        #[arg(long)]
        lambda: f64,
        /// Cross-check against an exhaustive grid of this resolution
        #[arg(long)]
        oracle_res: Option<usize>,
    },
    /// Monte Carlo distortion/power measurement at a power split
    Simulate {
        config: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        split: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the invariant suite and exit nonzero on any failure
    Verify {
        config: PathBuf,
        #[arg(long, default_value = "default")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Applies the `MACAMP_THREADS` cap before any parallel work runs.
pub fn init_threads() {
    if let Ok(v) = std::env::var("MACAMP_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                // ignore the error if a global pool already exists
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// Parses `args` (including argv[0]) and runs the chosen subcommand.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(usage)?;
    match cli.command {
        Command::Region2 { config, grid, out } => cmd_region2(&config, grid, &out),
        Command::Xsec {
            config,
            distortion,
            grid,
            out,
        } => cmd_xsec(&config, distortion, grid, &out),
        Command::Optimize {
            config,
            mus,
            lambda,
            oracle_res,
        } => cmd_optimize(&config, mus, lambda, oracle_res),
        Command::Simulate {
            config,
            split,
            n,
            seed,
        } => cmd_simulate(&config, split, n, seed),
        Command::Verify { config, suite, seed } => cmd_verify(&config, &suite, seed),
    }
}

fn region_error(e: RegionError) -> CliError {
    match e {
        RegionError::DistortionInfeasible { .. } | RegionError::NonPositiveDistortion => {
            CliError::Infeasible(e.to_string())
        }
        other => CliError::Usage(other.to_string()),
    }
}

fn cmd_region2(config_path: &Path, grid: usize, out: &Path) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    let region = surface_samples(&config, grid).map_err(region_error)?;
    let mut csv = String::from("gamma,beta,r1,r2,log2QoverD,tag\n");
    for s in &region.samples {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_sig12(s.gamma),
            format_sig12(s.beta),
            format_sig12(s.r1),
            format_sig12(s.r2),
            format_sig12(s.log2_q_over_d),
            s.tag.as_str()
        ));
    }
    write_atomic(out, csv.as_bytes())?;
    write_manifest(out, &RunManifest::new("region2", &config, json!({ "grid": grid })))
}

fn cmd_xsec(config_path: &Path, distortion: f64, grid: usize, out: &Path) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    let boundary = cross_section(&config, distortion, grid).map_err(region_error)?;
    let mut csv = String::from("r1,r2\n");
    for p in &boundary {
        csv.push_str(&format!(
            "{},{}\n",
            format_sig12(p.0),
            format_sig12(p.1)
        ));
    }
    write_atomic(out, csv.as_bytes())?;
    write_manifest(
        out,
        &RunManifest::new(
            "xsec",
            &config,
            json!({ "distortion": distortion, "grid": grid }),
        ),
    )
}

fn cmd_optimize(
    config_path: &Path,
    mus: Vec<f64>,
    lambda: f64,
    oracle_res: Option<usize>,
) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    let weights = WeightVector::new(mus, lambda);
    let report = converse_bound(&config, &weights).map_err(usage)?;
    let oracle = oracle_res
        .map(|res| grid_oracle(&config, &weights, res).map_err(usage))
        .transpose()?;
    let out = json!({
        "report": report,
        "oracle_value": oracle.as_ref().map(|o| o.value),
        "oracle_split": oracle.as_ref().map(|o| &o.split),
        "manifest": RunManifest::new(
            "optimize",
            &config,
            json!({ "mus": weights.mus, "lambda": lambda, "oracle_res": oracle_res }),
        ),
    });
    println!("{}", serde_json::to_string_pretty(&out).map_err(usage)?);
    Ok(())
}

fn cmd_simulate(config_path: &Path, split: Vec<f64>, n: usize, seed: u64) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    let split = PowerSplit::new(split);
    let report = simulate_distortion(&config, &split, n, seed).map_err(usage)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(usage)?);
    Ok(())
}

#[derive(Serialize)]
struct CheckResult {
    check: &'static str,
    pass: bool,
    detail: String,
}

fn cmd_verify(config_path: &Path, suite: &str, seed: u64) -> Result<(), CliError> {
    if suite != "default" {
        return Err(CliError::Usage(format!("unknown suite {suite:?}")));
    }
    let config = load_config(config_path)?;
    let checks = run_verify_suite(&config, seed);
    println!("{}", serde_json::to_string_pretty(&checks).map_err(usage)?);
    for c in &checks {
        eprintln!(
            "{:<24} {}  {}",
            c.check,
            if c.pass { "pass" } else { "FAIL" },
            c.detail
        );
    }
    if let Some(c) = checks.iter().find(|c| !c.pass) {
        return Err(CliError::Verification(format!(
            "check {} failed: {}",
            c.check, c.detail
        )));
    }
    Ok(())
}

fn run_verify_suite(config: &ValidatedConfig, seed: u64) -> Vec<CheckResult> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let n = config.n_users();
    let mut checks = Vec::new();

    // monotonicity of R_sum + (1/2) log2(Q/D) in each split coordinate
    let w = WeightVector::new(vec![1.0; n], 1.0);
    let mut worst = 0.0_f64;
    for _ in 0..500 {
        let mut g: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let f0 = evaluate_objective(config, &w, &PowerSplit::new(g.clone())).unwrap();
        let k = rng.gen_range(0..n);
        g[k] = rng.gen_range(g[k]..=1.0);
        let f1 = evaluate_objective(config, &w, &PowerSplit::new(g)).unwrap();
        worst = worst.max(f1 - f0);
    }
    checks.push(CheckResult {
        check: "monotonicity",
        pass: worst <= 1e-12,
        detail: format!("max increase {worst:.3e}"),
    });

    // midpoint concavity of the weighted objective for lambda in (0,1)
    let mut worst = f64::INFINITY;
    for _ in 0..500 {
        let mut mus: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..3.0)).collect();
        mus.sort_by(|a, b| b.total_cmp(a));
        let w = WeightVector::new(mus, rng.gen_range(0.05..0.95));
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        if x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-3) {
            continue;
        }
        let m: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        let fx = evaluate_objective(config, &w, &PowerSplit::new(x)).unwrap();
        let fy = evaluate_objective(config, &w, &PowerSplit::new(y)).unwrap();
        let fm = evaluate_objective(config, &w, &PowerSplit::new(m)).unwrap();
        worst = worst.min(fm - 0.5 * (fx + fy));
    }
    checks.push(CheckResult {
        check: "concavity",
        pass: worst > 0.0,
        detail: format!("min midpoint gap {worst:.3e}"),
    });

    // submodularity of the subset rate caps at random splits
    let sub = check_submodular(config, &PowerSplit::uniform(n, 0.5), 200, seed ^ 0x5eed).unwrap();
    checks.push(CheckResult {
        check: "submodularity",
        pass: sub.max_violation <= 1e-12,
        detail: format!("max violation {:.3e}", sub.max_violation),
    });

    // optimizer vs a coarse exhaustive grid
    if n <= 4 {
        let mut worst = 0.0_f64;
        for _ in 0..5 {
            let mus: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
            let w = WeightVector::new(mus, rng.gen_range(0.0..3.0));
            if let (Ok(opt), Ok(oracle)) = (
                converse_bound(config, &w),
                grid_oracle(config, &w, if n <= 2 { 257 } else { 65 }),
            ) {
                worst = worst.max((opt.value - oracle.value).abs());
                if oracle.value > opt.value + 1e-6 {
                    worst = f64::INFINITY;
                }
            }
        }
        checks.push(CheckResult {
            check: "oracle-equivalence",
            pass: worst <= 1e-2,
            detail: format!("max gap {worst:.3e}"),
        });
    }

    // uncoded-user reduction preserves log2(Q/D)
    let mut worst = 0.0_f64;
    if n >= 2 {
        if let Ok(reduced) = config.reduce_uncoded_user(n - 1) {
            for _ in 0..200 {
                let mut g: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
                g[n - 1] = 0.0;
                let d_full = distortion_bound_n(config, &PowerSplit::new(g.clone())).unwrap();
                g.pop();
                let d_red = distortion_bound_n(&reduced, &PowerSplit::new(g)).unwrap();
                let gap = ((config.state_var / d_full).log2()
                    - (reduced.state_var / d_red).log2())
                .abs();
                worst = worst.max(gap);
            }
        }
        checks.push(CheckResult {
            check: "uncoded-reduction",
            pass: worst <= 1e-9,
            detail: format!("max log2(Q/D) gap {worst:.3e}"),
        });
    }

    // Monte Carlo distortion against the closed form
    let split = PowerSplit::uniform(n, 0.5);
    match simulate_distortion(config, &split, 100_000, seed) {
        Ok(report) => {
            let gap = (report.empirical_distortion - report.distortion_target).abs();
            let pass = gap <= 4.0 * report.distortion_se && power_audit(&report);
            checks.push(CheckResult {
                check: "monte-carlo",
                pass,
                detail: format!("|gap| {gap:.3e} vs 4*SE {:.3e}", 4.0 * report.distortion_se),
            });
        }
        Err(e) => checks.push(CheckResult {
            check: "monte-carlo",
            pass: false,
            detail: e.to_string(),
        }),
    }

    // DPC rate estimates against closed forms (two-user dirty-paper only)
    if n == 2 && config.state_coupling == 1.0 {
        match estimate_dpc_rate(config, &PowerSplit::uniform(2, 1.0), [0, 1], 100_000, seed) {
            Ok(report) => {
                let pass = report
                    .rate_estimates
                    .iter()
                    .zip(&report.closed_form_targets)
                    .all(|(e, &t)| (e.value - t).abs() <= 4.0 * e.se);
                checks.push(CheckResult {
                    check: "dpc-rates",
                    pass,
                    detail: format!(
                        "estimates {:?}",
                        report.rate_estimates.iter().map(|e| e.value).collect::<Vec<_>>()
                    ),
                });
            }
            Err(e) => checks.push(CheckResult {
                check: "dpc-rates",
                pass: false,
                detail: e.to_string(),
            }),
        }
    }

    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_formatting() {
        assert_eq!(format_sig12(0.0), "0");
        assert_eq!(format_sig12(1.0), "1.00000000000");
        assert_eq!(format_sig12(0.263034405834), "0.263034405834");
        assert_eq!(format_sig12(-2.5), "-2.50000000000");
        assert!(format_sig12(1.23e-30).contains('e'));
        assert!(!format_sig12(123456.789).contains(','));
    }

    #[test]
    fn config_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fig3.json");
        std::fs::write(
            &path,
            r#"{"users":[{"power":2.0},{"power":2.0}],"state_var":1.0,"noise_var":1.0,"state_coupling":1.0}"#,
        )
        .unwrap();
        let c = load_config(&path).unwrap();
        assert_eq!(c.powers, vec![2.0, 2.0]);
    }

    #[test]
    fn missing_config_names_path() {
        let e = load_config(Path::new("/nonexistent/cfg.json")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.message().contains("/nonexistent/cfg.json"));
    }

    #[test]
    fn invalid_json_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{\n  \"users\": [\n").unwrap();
        let e = load_config(&path).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.message().contains("line"));
    }

    #[test]
    fn invalid_values_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("neg.json");
        std::fs::write(
            &path,
            r#"{"users":[{"power":-1.0}],"state_var":1.0,"noise_var":1.0,"state_coupling":1.0}"#,
        )
        .unwrap();
        let e = load_config(&path).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.message().contains("non-negative"));
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, b"first\n").unwrap();
        write_atomic(&path, b"second\n").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second\n");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 2);
        assert_eq!(CliError::Infeasible(String::new()).exit_code(), 3);
        assert_eq!(CliError::Verification(String::new()).exit_code(), 4);
    }
}
