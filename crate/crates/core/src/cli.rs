//! `frontier-lab` command line: estimate, allocate, frontier, rescale, verify.
//!
//! Exit codes: 0 success, 2 input error, 3 degenerate universe or critical
//! budget misuse, 4 output I/O failure, 5 verification failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Error;
use crate::frontier::{
    classify_budget, compute_coefficients, critical_relative_weights, minimum_variance_point,
    optimal_allocation, rescaled_allocation, sample_rescaled_frontier, variance_at_return,
    ACoefficients, BudgetClass, Convention,
};
use crate::linalg::norm_inf;
use crate::market_data::{
    estimate_universe_with, load_returns, universe_from_json, AssetUniverse, Validation,
};
use crate::oracle::{dominance_check, random_universe, solve_kkt};
use crate::render::{family_to_csv, family_to_svg, format_number, FrontierFamily};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;
pub const EXIT_IO: u8 = 4;
pub const EXIT_VERIFY: u8 = 5;

/// Budgets plotted by `frontier` when none are given.
pub const DEFAULT_BUDGETS: [f64; 5] = [2.0, 1.0, 0.0, -1.0, -2.0];

pub const SVG_WIDTH: u32 = 800;
pub const SVG_HEIGHT: u32 = 600;

/// Tolerance on oracle/closed-form allocation and variance agreement.
pub const VERIFY_TOL: f64 = 1e-8;
/// Number of random (universe, B, R) instances in a verify sweep.
pub const VERIFY_INSTANCES: usize = 500;
/// How many of those instances also get a dominance check.
pub const DOMINANCE_INSTANCES: usize = 50;
/// Size of the entry offset injected by `--perturb`.
pub const PERTURBATION: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(
    name = "frontier-lab",
    version,
    about = "Mean-variance frontiers for positive, zero and negative portfolio budgets",
    allow_negative_numbers = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a universe (means and sample covariance) from a returns CSV.
    Estimate {
        #[arg(long, value_name = "PATH")]
        returns: PathBuf,
        /// Accept expected returns that are zero or negative.
        #[arg(long)]
        allow_nonpositive_returns: bool,
    },
    /// Minimum-variance allocation for one budget and target return.
    Allocate {
        #[command(flatten)]
        source: UniverseSource,
        #[arg(long, allow_hyphen_values = true)]
        budget: f64,
        #[arg(long = "return", value_name = "R", allow_hyphen_values = true)]
        target_return: f64,
        #[command(flatten)]
        critical: CriticalBand,
    },
    /// Sample efficient frontiers for several budgets; writes CSV and SVG.
    Frontier {
        #[command(flatten)]
        source: UniverseSource,
        /// Comma-separated budgets.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            conflicts_with = "budget"
        )]
        budgets: Option<Vec<f64>>,
        /// Scale of the default budget family (2, 1, 0, -1, -2)·|B|/2.
        #[arg(long, allow_hyphen_values = true)]
        budget: Option<f64>,
        #[arg(long)]
        risk_max: Option<f64>,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, allow_hyphen_values = true)]
        guide_return: Option<f64>,
        #[arg(long, value_name = "DIR", default_value = "frontier-out")]
        out: PathBuf,
        #[command(flatten)]
        critical: CriticalBand,
    },
    /// Frontier and weights rescaled by the budget (or its magnitude).
    Rescale {
        #[command(flatten)]
        source: UniverseSource,
        #[arg(long, allow_hyphen_values = true)]
        budget: f64,
        /// Largest rescaled risk Σ/|B| on the grid.
        #[arg(long)]
        risk_max: Option<f64>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = ConventionArg::Budget)]
        convention: ConventionArg,
        #[command(flatten)]
        critical: CriticalBand,
    },
    /// Cross-check closed forms against the KKT oracle and dominance probes.
    Verify {
        #[command(flatten)]
        source: OptionalUniverseSource,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Add 1e-3 to one closed-form allocation entry (self-test).
        #[arg(long)]
        perturb: bool,
    },
}

#[derive(Debug, Args)]
pub struct UniverseSource {
    /// Universe JSON with labels, expected_returns and covariance.
    #[arg(
        long,
        value_name = "PATH",
        required_unless_present = "returns",
        conflicts_with = "returns"
    )]
    universe: Option<PathBuf>,
    /// Returns CSV; the universe is estimated from it.
    #[arg(long, value_name = "PATH")]
    returns: Option<PathBuf>,
    /// Accept expected returns that are zero or negative.
    #[arg(long)]
    allow_nonpositive_returns: bool,
}

#[derive(Debug, Args)]
pub struct OptionalUniverseSource {
    /// Universe JSON; random universes are drawn when no source is given.
    #[arg(long, value_name = "PATH", conflicts_with = "returns")]
    universe: Option<PathBuf>,
    /// Returns CSV; the universe is estimated from it.
    #[arg(long, value_name = "PATH")]
    returns: Option<PathBuf>,
    /// Accept expected returns that are zero or negative.
    #[arg(long)]
    allow_nonpositive_returns: bool,
}

#[derive(Debug, Args)]
pub struct CriticalBand {
    /// Treat budgets with |B| below this value as exactly zero.
    #[arg(long, value_name = "EPS")]
    treat_as_critical_below: Option<f64>,
}

impl CriticalBand {
    fn apply(&self, budget: f64) -> f64 {
        match self.treat_as_critical_below {
            Some(eps) if budget.abs() < eps && budget != 0.0 => {
                info!("budget {budget} treated as critical (|B| < {eps})");
                0.0
            }
            _ => budget,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Budget,
    AbsBudget,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Budget => Convention::BudgetNumeraire,
            ConventionArg::AbsBudget => Convention::AbsBudgetNumeraire,
        }
    }
}

/// A failed command: exit code plus diagnostic.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::DegenerateUniverse { .. }
            | Error::CriticalBudget
            | Error::SingularKkt { .. } => EXIT_DEGENERATE,
            Error::Io(_) => EXIT_IO,
            _ => EXIT_INPUT,
        };
        let message = match err {
            Error::CriticalBudget => {
                "critical budget: rescaling is ill-defined for B=0 (use the total-variable frontier instead)"
                    .to_string()
            }
            other => other.to_string(),
        };
        Failure::new(code, message)
    }
}

type CmdResult = std::result::Result<u8, Failure>;

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_OK
            };
            let text = err.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(failure) => {
            let _ = writeln!(stderr, "error: {}", failure.message);
            failure.code
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Estimate {
            returns,
            allow_nonpositive_returns,
        } => cmd_estimate(&returns, validation(allow_nonpositive_returns), out),
        Command::Allocate {
            source,
            budget,
            target_return,
            critical,
        } => {
            let universe = source.load()?;
            cmd_allocate(&universe, critical.apply(budget), target_return, out)
        }
        Command::Frontier {
            source,
            budgets,
            budget,
            risk_max,
            samples,
            guide_return,
            out: dir,
            critical,
        } => {
            let universe = source.load()?;
            let budgets: Vec<f64> = match (budgets, budget) {
                (Some(list), _) => list,
                (None, Some(b)) => DEFAULT_BUDGETS.iter().map(|k| k * b.abs() / 2.0).collect(),
                (None, None) => DEFAULT_BUDGETS.to_vec(),
            };
            let budgets: Vec<f64> = budgets.into_iter().map(|b| critical.apply(b)).collect();
            let request = FrontierRequest {
                label: source.label(),
                budgets,
                risk_max,
                samples,
                guide_return,
                out_dir: dir,
            };
            cmd_frontier(&universe, &request, out)
        }
        Command::Rescale {
            source,
            budget,
            risk_max,
            samples,
            convention,
            critical,
        } => {
            let universe = source.load()?;
            cmd_rescale(
                &universe,
                critical.apply(budget),
                risk_max,
                samples,
                convention.into(),
                out,
            )
        }
        Command::Verify {
            source,
            seed,
            trials,
            perturb,
        } => {
            let universe = source.load()?;
            cmd_verify(universe.as_ref(), seed, trials, perturb, out)
        }
    }
}

fn validation(allow_nonpositive_returns: bool) -> Validation {
    Validation {
        allow_nonpositive_returns,
    }
}

fn read_input(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))
}

fn load_universe(
    universe: Option<&Path>,
    returns: Option<&Path>,
    validation: Validation,
) -> std::result::Result<Option<AssetUniverse>, Failure> {
    if let Some(path) = universe {
        debug!("loading universe JSON {}", path.display());
        return Ok(Some(universe_from_json(&read_input(path)?, validation)?));
    }
    if let Some(path) = returns {
        debug!("estimating universe from {}", path.display());
        let series = load_returns(read_input(path)?.as_bytes())?;
        return Ok(Some(estimate_universe_with(&series, validation)?));
    }
    Ok(None)
}

fn file_label(path: Option<&PathBuf>) -> String {
    path.and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "universe".into())
}

impl UniverseSource {
    fn load(&self) -> std::result::Result<AssetUniverse, Failure> {
        load_universe(
            self.universe.as_deref(),
            self.returns.as_deref(),
            validation(self.allow_nonpositive_returns),
        )?
        .ok_or_else(|| Failure::new(EXIT_INPUT, "one of --universe or --returns is required"))
    }

    fn label(&self) -> String {
        file_label(self.universe.as_ref().or(self.returns.as_ref()))
    }
}

impl OptionalUniverseSource {
    fn load(&self) -> std::result::Result<Option<AssetUniverse>, Failure> {
        load_universe(
            self.universe.as_deref(),
            self.returns.as_deref(),
            validation(self.allow_nonpositive_returns),
        )
    }
}

fn io_failure(err: std::io::Error) -> Failure {
    Failure::new(EXIT_IO, format!("write failed: {err}"))
}

fn emit_json<T: Serialize>(value: &T, out: &mut dyn Write) -> CmdResult {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
    writeln!(out, "{text}").map_err(io_failure)?;
    Ok(EXIT_OK)
}

pub fn cmd_estimate(path: &Path, validation: Validation, out: &mut dyn Write) -> CmdResult {
    let series = load_returns(read_input(path)?.as_bytes())?;
    let universe = estimate_universe_with(&series, validation)?;
    info!(
        "estimated {} assets from {} periods",
        series.num_assets(),
        series.num_periods()
    );
    emit_json(&universe.to_json(), out)
}

#[derive(Debug, Serialize)]
struct AllocationReport<'a> {
    labels: &'a [String],
    amounts: &'a [f64],
    budget_class: BudgetClass,
    budget: f64,
    expected_return: f64,
    variance: f64,
    std_dev: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_weights: Option<Vec<f64>>,
}

pub fn cmd_allocate(
    universe: &AssetUniverse,
    budget: f64,
    target_return: f64,
    out: &mut dyn Write,
) -> CmdResult {
    let class = classify_budget(budget)?;
    let coeffs = compute_coefficients(universe)?;
    let allocation = optimal_allocation(universe, &coeffs, budget, target_return)?;
    let relative_weights = match class {
        BudgetClass::Critical => Some(critical_relative_weights(universe, &coeffs)?),
        _ => None,
    };
    emit_json(
        &AllocationReport {
            labels: universe.labels(),
            amounts: &allocation.amounts,
            budget_class: class,
            budget: allocation.budget,
            expected_return: allocation.expected_return,
            variance: allocation.variance,
            std_dev: allocation.std_dev,
            relative_weights,
        },
        out,
    )
}

#[derive(Debug, Clone)]
pub struct FrontierRequest {
    pub label: String,
    pub budgets: Vec<f64>,
    pub risk_max: Option<f64>,
    pub samples: usize,
    pub guide_return: Option<f64>,
    pub out_dir: PathBuf,
}

/// Default risk range: twice the largest apex, at least twice the unit-budget apex.
pub fn default_risk_max(coeffs: &ACoefficients, budgets: &[f64]) -> f64 {
    let largest = budgets.iter().fold(1.0f64, |m, b| m.max(b.abs()));
    2.0 * coeffs.minimum_risk(largest)
}

pub fn cmd_frontier(
    universe: &AssetUniverse,
    request: &FrontierRequest,
    out: &mut dyn Write,
) -> CmdResult {
    if request.budgets.is_empty() {
        return Err(Failure::new(EXIT_INPUT, "no budgets given"));
    }
    if request.samples < 2 {
        return Err(Failure::new(EXIT_INPUT, "--samples must be at least 2"));
    }
    for &b in &request.budgets {
        classify_budget(b)?;
    }
    let coeffs = compute_coefficients(universe)?;
    let risk_max = request
        .risk_max
        .unwrap_or_else(|| default_risk_max(&coeffs, &request.budgets));
    if !(risk_max > 0.0) {
        return Err(Failure::new(EXIT_INPUT, "--risk-max must be positive"));
    }
    let family = FrontierFamily::sample(
        request.label.clone(),
        &coeffs,
        &request.budgets,
        risk_max,
        request.samples,
        request.guide_return,
    )?;
    let csv = family_to_csv(&family);
    let svg = family_to_svg(&family, SVG_WIDTH, SVG_HEIGHT)?;

    fs::create_dir_all(&request.out_dir).map_err(io_failure)?;
    write_atomic(&request.out_dir.join("frontier.csv"), csv.as_bytes()).map_err(io_failure)?;
    write_atomic(&request.out_dir.join("frontier.svg"), svg.as_bytes()).map_err(io_failure)?;
    info!(
        "wrote frontier.csv and frontier.svg to {}",
        request.out_dir.display()
    );

    writeln!(out, "budget,class,apex_risk,apex_return").map_err(io_failure)?;
    for curve in family.curves() {
        let apex = minimum_variance_point(&coeffs, curve.budget);
        writeln!(
            out,
            "{},{},{},{}",
            format_number(curve.budget),
            classify_budget(curve.budget)?,
            format_number(apex.risk),
            format_number(apex.ret)
        )
        .map_err(io_failure)?;
    }
    Ok(EXIT_OK)
}

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "no file name"))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

pub fn cmd_rescale(
    universe: &AssetUniverse,
    budget: f64,
    risk_max: Option<f64>,
    samples: usize,
    convention: Convention,
    out: &mut dyn Write,
) -> CmdResult {
    classify_budget(budget)?;
    let coeffs = compute_coefficients(universe)?;
    let risk_max = risk_max.unwrap_or_else(|| default_risk_max(&coeffs, &[1.0]));
    let points = sample_rescaled_frontier(&coeffs, budget, risk_max, samples, convention)?;

    let mut header = String::from("convention,branch,risk,ret,weight_sum");
    for label in universe.labels() {
        header.push(',');
        header.push_str(label);
    }
    writeln!(out, "{header}").map_err(io_failure)?;
    for p in points {
        let weights = rescaled_allocation(universe, &coeffs, budget, p.ret, convention)?;
        let mut line = format!(
            "{},{},{},{},{}",
            p.convention,
            p.branch,
            format_number(p.risk),
            format_number(p.ret),
            format_number(weights.iter().sum())
        );
        for w in &weights {
            line.push(',');
            line.push_str(&format_number(*w));
        }
        writeln!(out, "{line}").map_err(io_failure)?;
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub instances: usize,
    pub max_alloc_diff: f64,
    pub max_var_diff: f64,
    pub violations: usize,
    pub dominance_instances: usize,
    pub trivial_null_space: bool,
    pub passed: bool,
}

/// Oracle agreement and dominance sweep. With a universe, every instance
/// draws a fresh (B, R); without one, each instance also draws a random
/// universe of 2 to 10 assets.
pub fn verify_sweep(
    universe: Option<&AssetUniverse>,
    seed: u64,
    trials: usize,
    perturb: bool,
) -> std::result::Result<VerifySummary, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = VerifySummary {
        instances: VERIFY_INSTANCES,
        max_alloc_diff: 0.0,
        max_var_diff: 0.0,
        violations: 0,
        dominance_instances: 0,
        trivial_null_space: false,
        passed: false,
    };
    let fixed = universe
        .map(|u| compute_coefficients(u).map(|c| (u, c)))
        .transpose()?;
    for i in 0..VERIFY_INSTANCES {
        let owned;
        let (u, coeffs) = match &fixed {
            Some((u, c)) => (*u, c.clone()),
            None => {
                let n = rng.gen_range(2..=10);
                owned = random_universe(&mut rng, n);
                let c = compute_coefficients(&owned)?;
                (&owned, c)
            }
        };
        let budget = rng.gen_range(-10.0..=10.0);
        let target = rng.gen_range(-10.0..=10.0);

        let mut closed = optimal_allocation(u, &coeffs, budget, target)?.amounts;
        if perturb && i == 0 {
            closed[0] += PERTURBATION;
        }
        let kkt = solve_kkt(u, budget, target)?;
        let scale = norm_inf(&kkt.amounts).max(1.0);
        let diff = closed
            .iter()
            .zip(&kkt.amounts)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale;
        summary.max_alloc_diff = summary.max_alloc_diff.max(diff);

        let v_formula = variance_at_return(&coeffs, budget, target)?;
        for v in [u.variance_of(&closed), u.variance_of(&kkt.amounts)] {
            let rel = (v - v_formula).abs() / v_formula.max(f64::MIN_POSITIVE);
            summary.max_var_diff = summary.max_var_diff.max(rel);
        }

        if i < DOMINANCE_INSTANCES {
            let report = dominance_check(
                u,
                &closed,
                trials,
                seed ^ (i as u64).wrapping_mul(0x9e37_79b9),
            );
            summary.dominance_instances += 1;
            summary.trivial_null_space |= report.is_trivial();
            summary.violations += report.violations.len();
        }
    }
    summary.passed = summary.max_alloc_diff <= VERIFY_TOL
        && summary.max_var_diff <= VERIFY_TOL
        && summary.violations == 0;
    Ok(summary)
}

pub fn cmd_verify(
    universe: Option<&AssetUniverse>,
    seed: u64,
    trials: usize,
    perturb: bool,
    out: &mut dyn Write,
) -> CmdResult {
    let summary = verify_sweep(universe, seed, trials, perturb)?;
    let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
    let mut lines = vec![
        format!(
            "oracle agreement: {} instances, max_alloc_diff={:e} [{}]",
            summary.instances,
            summary.max_alloc_diff,
            mark(summary.max_alloc_diff <= VERIFY_TOL)
        ),
        format!(
            "variance agreement: max_var_diff={:e} [{}]",
            summary.max_var_diff,
            mark(summary.max_var_diff <= VERIFY_TOL)
        ),
    ];
    if universe.is_some() && summary.trivial_null_space {
        lines.push(
            "dominance: null space dimension 0 (trivial): no constraint-preserving perturbations exist"
                .into(),
        );
    } else {
        lines.push(format!(
            "dominance: {} instances x {} trials, violations={} [{}]",
            summary.dominance_instances,
            trials,
            summary.violations,
            mark(summary.violations == 0)
        ));
    }
    for line in lines {
        writeln!(out, "{line}").map_err(io_failure)?;
    }
    let json = serde_json::json!({
        "instances": summary.instances,
        "max_alloc_diff": summary.max_alloc_diff,
        "max_var_diff": summary.max_var_diff,
        "violations": summary.violations,
    });
    writeln!(out, "{json}").map_err(io_failure)?;
    Ok(if summary.passed { EXIT_OK } else { EXIT_VERIFY })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (u8, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("frontier-lab").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("frontier"));
    }

    #[test]
    fn unknown_flag_is_input_error() {
        let (code, _, err) = run_args(&["allocate", "--bogus"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(!err.is_empty());
    }

    #[test]
    fn missing_file_is_input_error() {
        let (code, _, err) = run_args(&["estimate", "--returns", "/nonexistent/returns.csv"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("cannot read"));
    }

    #[test]
    fn failure_codes() {
        assert_eq!(Failure::from(Error::CriticalBudget).code, EXIT_DEGENERATE);
        assert_eq!(
            Failure::from(Error::DegenerateUniverse { d: 0.0 }).code,
            EXIT_DEGENERATE
        );
        assert_eq!(Failure::from(Error::Io("x".into())).code, EXIT_IO);
        assert_eq!(Failure::from(Error::DegenerateRange).code, EXIT_INPUT);
        assert!(Failure::from(Error::CriticalBudget)
            .message
            .contains("ill-defined for B=0"));
    }

    #[test]
    fn critical_band() {
        let band = CriticalBand {
            treat_as_critical_below: Some(1e-6),
        };
        assert_eq!(band.apply(5e-7), 0.0);
        assert_eq!(band.apply(-5e-7), 0.0);
        assert_eq!(band.apply(2e-6), 2e-6);
        let none = CriticalBand {
            treat_as_critical_below: None,
        };
        assert_eq!(none.apply(1e-300), 1e-300);
    }

    #[test]
    fn write_atomic_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
