//! The `seqnorm` command line.
//!
//! Exit codes: 0 success or terminal accept, 1 runtime error, 2 usage or
//! malformed input, 3 terminal reject, 4 more data needed.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrate::{calibrate_known, calibrate_unknown, CalibrationOptions, CalibrationResult};
use crate::error::Error;
use crate::json::{self, fmt17};
use crate::plan::{build_known_plan, build_unknown_plan, Design, PartitionOptions, Plan};
use crate::runner::{plan_from_json, Status, TestSession};
use crate::simulate::{simulate_plan, SimReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_REJECT: i32 = 3;
pub const EXIT_NEED_MORE: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Lib(_) => EXIT_ERROR,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "seqnorm", version, about = "Multistage tests for a normal mean")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build (and optionally calibrate) a plan.
    Design(DesignArgs),
    /// Tabulate operating-characteristic bounds.
    Oc(OcArgs),
    /// Tabulate bounds on Pr{n > n_l} for each non-final stage.
    Asn(AsnArgs),
    /// Monte Carlo run of a plan.
    Simulate(SimulateArgs),
    /// Feed a batch of observations into a persistent session.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Known,
    Unknown,
}

#[derive(Debug, Clone, Copy, Args, Serialize, Deserialize)]
pub struct BoundArgs {
    /// Probability mass left outside the truncated integration region.
    #[arg(long, default_value_t = 1e-4)]
    pub tail_mass: f64,
    /// Cells per stage partition.
    #[arg(long, default_value_t = 256)]
    pub cell_budget: usize,
}

impl BoundArgs {
    fn options(&self) -> PartitionOptions {
        PartitionOptions {
            tail_mass: self.tail_mass,
            cell_budget: self.cell_budget,
        }
    }
}

#[derive(Debug, Clone, Args)]
#[command(group(clap::ArgGroup::new("zeta_choice").required(true).args(["zeta", "calibrate"])))]
pub struct DesignArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    /// Indifference half-width in units of sigma.
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, required_if_eq("kind", "known"))]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    #[arg(long, default_value_t = 4)]
    pub tau: u32,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub calibrate: bool,
    #[arg(long, default_value_t = 1e-4)]
    pub zeta_tol: f64,
    #[command(flatten)]
    pub bounds: BoundArgs,
    /// Plan output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OcArgs {
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_max: f64,
    #[arg(long)]
    pub points: usize,
    /// Read and write the grid as means rather than standardized offsets.
    #[arg(long)]
    pub mu_units: bool,
    /// Scale for --mu-units with an unknown-variance plan.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[command(flatten)]
    pub bounds: BoundArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AsnArgs {
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, required = true, num_args = 1.., value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<f64>,
    #[arg(long)]
    pub mu_units: bool,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    /// Data scale; defaults to the plan's sigma for known-variance plans.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long)]
    pub session: PathBuf,
    /// One observation per line.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub allow_uncertified: bool,
}

/// Provenance stored next to the plan in design output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignMetadata {
    pub tool: String,
    pub version: String,
    pub rho: f64,
    pub tau: u32,
    pub zeta_source: String,
    pub zeta_tol: f64,
    pub tail_mass: f64,
    pub cell_budget: usize,
    pub bound_at_theta0: f64,
    pub mirror_bound_at_theta1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationResult>,
}

#[derive(Serialize, Deserialize)]
struct PlanFile {
    plan: Plan,
    metadata: DesignMetadata,
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    kind: crate::plan::PlanKind,
    mu: f64,
    sigma: f64,
    theta: f64,
    reps: u64,
    seed: u64,
    report: &'a SimReport,
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(p) => {
            let tmp = p.with_extension("tmp");
            fs::write(&tmp, text)?;
            fs::rename(&tmp, p)?;
        }
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Reads a plan written by `design`, or a bare plan record.
pub fn load_plan(path: &Path) -> CliResult<Plan> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read plan {}: {e}", path.display())))?;
    Ok(plan_from_json(&text)?)
}

fn summary(plan: &Plan) -> String {
    let mut s = String::new();
    let d = plan.design();
    let _ = writeln!(
        s,
        "{:?} variance plan: alpha={} beta={} epsilon={} gamma={} zeta={} certified={}",
        plan.kind(),
        d.alpha,
        d.beta,
        d.epsilon,
        d.gamma,
        fmt17(d.zeta),
        plan.certified()
    );
    let _ = writeln!(s, "{:>6} {:>8} {:>22} {:>22}", "stage", "n", "a", "b");
    for (i, st) in plan.stages().iter().enumerate() {
        let _ = writeln!(s, "{:>6} {:>8} {:>22} {:>22}", i + 1, st.n, fmt17(st.a), fmt17(st.b));
    }
    s
}

pub fn cmd_design(args: &DesignArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<i32> {
    let design = Design {
        alpha: args.alpha,
        beta: args.beta,
        epsilon: args.epsilon,
        gamma: args.gamma,
        zeta: args.zeta.unwrap_or(1.0 / args.tau.max(1) as f64),
        rho: args.rho,
        tau: args.tau,
    };
    let popts = args.bounds.options();
    popts.validate()?;
    let copts = CalibrationOptions {
        zeta_tol: args.zeta_tol,
        zeta_hi: None,
    };
    let (plan, p0, p1, calibration) = match (args.kind, args.sigma) {
        (KindArg::Known, None) => return Err(CliError::Usage("--sigma is required for --kind known".into())),
        (KindArg::Unknown, Some(_)) => {
            return Err(CliError::Usage("--sigma is not used by --kind unknown".into()))
        }
        (KindArg::Known, Some(sigma)) if args.calibrate => {
            let (p, r) = calibrate_known(&design, sigma, &copts)?;
            (Plan::Known(p), r.phi_at_theta0, r.phi_mirror_at_theta1, Some(r))
        }
        (KindArg::Unknown, None) if args.calibrate => {
            let (p, r) = calibrate_unknown(&design, &copts, &popts)?;
            (Plan::Unknown(p), r.phi_at_theta0, r.phi_mirror_at_theta1, Some(r))
        }
        (KindArg::Known, Some(sigma)) => {
            let mut plan = Plan::Known(build_known_plan(&design, sigma)?);
            let (p0, p1) = plan.certify(&popts)?;
            (plan, p0, p1, None)
        }
        (KindArg::Unknown, None) => {
            let mut plan = Plan::Unknown(build_unknown_plan(&design)?);
            let (p0, p1) = plan.certify(&popts)?;
            (plan, p0, p1, None)
        }
    };
    if !plan.certified() {
        log::warn!("plan does not meet its error targets: bounds {p0} and {p1}");
    }
    let metadata = DesignMetadata {
        tool: "seqnorm".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        rho: args.rho,
        tau: args.tau,
        zeta_source: if args.calibrate { "calibrated" } else { "given" }.into(),
        zeta_tol: args.zeta_tol,
        tail_mass: args.bounds.tail_mass,
        cell_budget: args.bounds.cell_budget,
        bound_at_theta0: p0,
        mirror_bound_at_theta1: p1,
        calibration,
    };
    let text = json::to_string(&PlanFile {
        plan: plan.clone(),
        metadata,
    })?;
    emit(args.out.as_deref(), &text, stdout)?;
    let table = summary(&plan);
    if args.out.is_some() {
        stdout.write_all(table.as_bytes())?;
    } else {
        stderr.write_all(table.as_bytes())?;
    }
    Ok(EXIT_OK)
}

/// `(scale, shift)` turning a grid value into `θ`, for `--mu-units`.
fn units(plan: &Plan, mu_units: bool, sigma: Option<f64>) -> CliResult<Option<(f64, f64)>> {
    if !mu_units {
        return Ok(None);
    }
    let sigma = match (plan.sigma(), sigma) {
        (Some(p), None) => p,
        (Some(p), Some(s)) if s == p => p,
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "--sigma conflicts with the sigma stored in the known-variance plan".into(),
            ))
        }
        (None, Some(s)) if s > 0.0 && s.is_finite() => s,
        (None, _) => {
            return Err(CliError::Usage(
                "--mu-units with an unknown-variance plan needs a positive --sigma".into(),
            ))
        }
    };
    Ok(Some((sigma, plan.design().gamma)))
}

fn to_theta(x: f64, u: Option<(f64, f64)>) -> f64 {
    u.map_or(x, |(s, g)| (x - g) / s)
}

pub fn cmd_oc(args: &OcArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    if args.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    if !(args.theta_min.is_finite() && args.theta_max.is_finite() && args.theta_min < args.theta_max) {
        return Err(CliError::Usage("need finite --theta-min < --theta-max".into()));
    }
    let plan = load_plan(&args.plan)?;
    let u = units(&plan, args.mu_units, args.sigma)?;
    let opts = args.bounds.options();
    opts.validate()?;
    let eps = plan.design().epsilon;
    let step = (args.theta_max - args.theta_min) / (args.points - 1) as f64;
    let grid: Vec<f64> = (0..args.points)
        .map(|i| {
            if i + 1 == args.points {
                args.theta_max
            } else {
                args.theta_min + i as f64 * step
            }
        })
        .collect();
    let rows = grid
        .par_iter()
        .map(|&x| -> CliResult<String> {
            let theta = to_theta(x, u);
            if theta > -eps && theta < eps {
                return Ok(format!("{},,\n", fmt17(x)));
            }
            let (lo, hi) = plan.oc_bounds(theta, &opts)?;
            Ok(format!("{},{},{}\n", fmt17(x), fmt17(lo.get()), fmt17(hi.get())))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut text = String::from(if u.is_some() { "mu,oc_lower,oc_upper\n" } else { "theta,oc_lower,oc_upper\n" });
    text.extend(rows);
    emit(args.out.as_deref(), &text, stdout)?;
    Ok(EXIT_OK)
}

pub fn cmd_asn(args: &AsnArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let plan = load_plan(&args.plan)?;
    let u = units(&plan, args.mu_units, args.sigma)?;
    let mut text = String::from(if u.is_some() { "mu,stage,n,bound\n" } else { "theta,stage,n,bound\n" });
    let s = plan.stages().len();
    for &x in &args.theta {
        if !x.is_finite() {
            return Err(CliError::Usage(format!("--theta value {x} is not finite")));
        }
        let theta = to_theta(x, u);
        for ell in 1..s {
            let b = plan.sample_tail(ell, theta)?;
            let _ = writeln!(text, "{},{},{},{}", fmt17(x), ell, plan.stages()[ell - 1].n, fmt17(b.get()));
        }
    }
    emit(args.out.as_deref(), &text, stdout)?;
    Ok(EXIT_OK)
}

pub fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let plan = load_plan(&args.plan)?;
    let sigma = match (args.sigma, plan.sigma()) {
        (Some(s), _) => s,
        (None, Some(p)) => p,
        (None, None) => {
            return Err(CliError::Usage("--sigma is required for unknown-variance plans".into()))
        }
    };
    let report = simulate_plan(&plan, args.mu, sigma, args.reps, args.seed)?;
    let out = SimulateOutput {
        kind: plan.kind(),
        mu: args.mu,
        sigma,
        theta: (args.mu - plan.design().gamma) / sigma,
        reps: args.reps,
        seed: args.seed,
        report: &report,
    };
    emit(args.out.as_deref(), &json::to_string(&out)?, stdout)?;
    Ok(EXIT_OK)
}

/// One finite real per line; blank lines are skipped.
pub fn parse_data(text: &str) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t.parse::<f64>() {
            Ok(x) if x.is_finite() => out.push(x),
            _ => {
                return Err(CliError::Usage(format!(
                    "data line {}: {t:?} is not a finite real",
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

pub fn cmd_run(args: &RunArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let plan = load_plan(&args.plan)?;
    let text = fs::read_to_string(&args.data)
        .map_err(|e| Error::Io(format!("cannot read data {}: {e}", args.data.display())))?;
    let batch = parse_data(&text)?;
    let mut session = if args.session.exists() {
        let s = TestSession::load(&args.session)?;
        if s.plan != plan {
            return Err(Error::Integrity("session was started with a different plan".into()).into());
        }
        s
    } else {
        TestSession::new(plan, args.allow_uncertified)?
    };
    let status = if batch.is_empty() {
        session.status
    } else {
        session.feed(&batch)?
    };
    session.save(&args.session)?;
    let last = session.history.last();
    let (line, code) = match status {
        Status::NeedMore { next_n } => (
            format!("need_more next_n={next_n} stage={}", session.current_stage + 1),
            EXIT_NEED_MORE,
        ),
        Status::Accepted { stage } => (
            format!("accepted stage={stage} statistic={}", fmt17(last.map_or(f64::NAN, |h| h.statistic))),
            EXIT_OK,
        ),
        Status::Rejected { stage } => (
            format!("rejected stage={stage} statistic={}", fmt17(last.map_or(f64::NAN, |h| h.statistic))),
            EXIT_REJECT,
        ),
    };
    writeln!(stdout, "{line}")?;
    Ok(code)
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("SEQNORM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("SEQNORM_THREADS = {v:?} is not a positive integer")))?;
    // a pool may already exist when the CLI is driven in-process
    if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
        log::debug!("global thread pool already initialized");
    }
    Ok(())
}

pub fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<i32> {
    configure_threads()?;
    match &cli.command {
        Command::Design(a) => cmd_design(a, stdout, stderr),
        Command::Oc(a) => cmd_oc(a, stdout),
        Command::Asn(a) => cmd_asn(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Run(a) => cmd_run(a, stdout),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
