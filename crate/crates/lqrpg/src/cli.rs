//! The `lqrpg` command line.
//!
//! Every command prints `key = value` lines in a fixed order. With `--out DIR`
//! the same pairs go to a CSV next to the command's other outputs.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | a suite or sweep failed, or an IO error |
//! | 2 | invalid input: bad flags, unparsable or inconsistent system file |
//! | 3 | a solver hit its iteration budget |
//! | 4 | the plant or the learner diverged; partial outputs are still written |

use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lqrpg_core::gd::step_size_admissible;
use lqrpg_core::lqr::{infinite_horizon_cost, solve_optimal, SolverOptions};
use lqrpg_core::online::{regret, run_on_system, ScheduleOverrides, Warning};
use lqrpg_core::rng::SeedStreams;
use lqrpg_core::simulator::rollout_fixed;
use lqrpg_core::{Error as CoreError, Matrix};
use nalgebra::DVector;

use crate::benchmarks::Benchmark;
use crate::config::{ConfigError, SystemConfig};
use crate::experiments::{
    corrupted_gd_bound_suite, emit_report, exploration_cost_scaling, geometric_grid, gradient_fidelity,
    regret_scaling, CostOracle, ExperimentError, ExplorationConfig, FidelityConfig, RegretSweep, Report,
};
use crate::export;
use crate::validate::{validate, ValidateOptions};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INVALID_INPUT: u8 = 2;
pub const EXIT_NO_CONVERGENCE: u8 = 3;
pub const EXIT_DIVERGED: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "lqrpg", version, about = "Online policy gradient for the linear quadratic regulator")]
pub struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal controller, regularity constants and the learner's schedule.
    Solve {
        #[arg(long, value_parser = existing_file)]
        system: PathBuf,
        /// Horizon for the schedule; defaults to the file's noise horizon.
        #[arg(long = "T", value_parser = positive_u64)]
        horizon: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Simulate a fixed controller.
    Rollout {
        #[arg(long, value_parser = existing_file)]
        system: PathBuf,
        #[arg(long = "T", value_parser = positive_u64, default_value_t = 1000)]
        horizon: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Policy::Initial)]
        controller: Policy,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the online learner once.
    Learn {
        #[arg(long, value_parser = existing_file)]
        system: PathBuf,
        #[arg(long = "T", value_parser = positive_u64)]
        horizon: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Run one of the reproduction experiments.
    Sweep {
        #[arg(long, value_enum, default_value_t = Experiment::Regret)]
        experiment: Experiment,
        /// System file; defaults to the scalar benchmark (all benchmarks for `exploration`).
        #[arg(long, value_parser = existing_file)]
        system: Option<PathBuf>,
        /// Comma separated horizons for `regret`.
        #[arg(long, value_delimiter = ',', value_parser = positive_u64)]
        horizons: Option<Vec<u64>>,
        /// Seeds per horizon for `regret`.
        #[arg(long, value_parser = positive_usize)]
        seeds: Option<usize>,
        /// Master seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Exploration radius for `fidelity`.
        #[arg(long, value_parser = positive_f64, default_value_t = 0.01)]
        radius: f64,
        /// Rounds per cost sample for `fidelity` and `exploration`; 0 uses exact costs.
        #[arg(long, default_value_t = 0)]
        tau: u64,
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Run every invariant suite.
    Validate {
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    /// `K₀` from the system file.
    Initial,
    /// `K★` from the Riccati equation.
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Regret,
    Exploration,
    Fidelity,
    GdBound,
}

/// Schedule multipliers, applied on top of the file's `[schedule]` preset.
#[derive(Debug, Clone, Default, Args)]
pub struct ScheduleArgs {
    #[arg(long, value_parser = positive_f64)]
    pub eta_mult: Option<f64>,
    #[arg(long, value_parser = positive_f64)]
    pub r0_mult: Option<f64>,
    #[arg(long, value_parser = positive_f64)]
    pub m0_mult: Option<f64>,
    #[arg(long, value_parser = positive_f64)]
    pub tau_mult: Option<f64>,
    /// Let the exploration radius exceed D₀.
    #[arg(long)]
    pub unclamped_radius: bool,
    /// Ignore the file's `[schedule]` preset.
    #[arg(long)]
    pub theory: bool,
}

impl ScheduleArgs {
    pub fn resolve(&self, cfg: &SystemConfig) -> Result<ScheduleOverrides, ConfigError> {
        let mut o = if self.theory { ScheduleOverrides::default() } else { cfg.overrides()? };
        o.eta_mult *= self.eta_mult.unwrap_or(1.0);
        o.r0_mult *= self.r0_mult.unwrap_or(1.0);
        o.m0_mult *= self.m0_mult.unwrap_or(1.0);
        o.tau_mult *= self.tau_mult.unwrap_or(1.0);
        o.unclamped_radius |= self.unclamped_radius;
        Ok(o)
    }
}

fn existing_file(s: &str) -> Result<PathBuf, String> {
    let p = PathBuf::from(s);
    if p.is_file() {
        Ok(p)
    } else {
        Err(format!("no such file: {s}"))
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got {s}")),
    }
}

fn positive_u64(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("expected a positive integer, got {s}")),
    }
}

fn positive_usize(s: &str) -> Result<usize, String> {
    positive_u64(s).map(|v| v as usize)
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match e {
            CoreError::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
            CoreError::NumericOverflow { .. } | CoreError::DivergenceDetected { .. } => EXIT_DIVERGED,
            CoreError::Unstable(_) | CoreError::InvalidArgument(_) | CoreError::DimensionMismatch(_) => {
                EXIT_INVALID_INPUT
            }
        };
        Self::new(code, e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Self::new(EXIT_FAILURE, e.to_string()),
            _ => Self::new(EXIT_INVALID_INPUT, e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Core(e) => e.into(),
            ExperimentError::Config(e) => e.into(),
            ExperimentError::Invalid(m) => Self::new(EXIT_INVALID_INPUT, m),
            ExperimentError::Fit(m) => Self::new(EXIT_FAILURE, format!("scaling fit: {m}")),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(EXIT_FAILURE, e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::new(EXIT_FAILURE, e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Writes one line to stdout. A closed pipe (`lqrpg ... | head`) is not an error.
fn say(line: &str) {
    use std::io::Write as _;
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

/// How a summary value is written. Floats use the shortest round-trip form,
/// switching to exponent notation for very large or small magnitudes.
trait SummaryValue {
    fn text(&self) -> String;
}

impl SummaryValue for f64 {
    fn text(&self) -> String {
        // `+ 0.0` turns −0 into 0
        format!("{:?}", self + 0.0)
    }
}

macro_rules! display_value {
    ($($t:ty),*) => {
        $(impl SummaryValue for $t {
            fn text(&self) -> String {
                self.to_string()
            }
        })*
    };
}

display_value!(u64, usize, bool, &str, String);

/// Ordered `key = value` pairs, printed and optionally mirrored to CSV.
#[derive(Debug, Default)]
struct Summary(Vec<(String, String)>);

impl Summary {
    fn put(&mut self, key: &str, value: impl SummaryValue) -> &mut Self {
        self.0.push((key.to_string(), value.text()));
        self
    }

    fn print(&self) {
        for (k, v) in &self.0 {
            say(&format!("{k} = {v}"));
        }
    }

    fn finish(&self, out: Option<&Path>, name: &str) -> CliResult {
        self.print();
        if let Some(dir) = out {
            export::write_key_values(&self.0, File::create(dir.join(name))?)?;
        }
        Ok(())
    }
}

fn matrix_text(m: &Matrix) -> String {
    let mut s = String::from("[");
    for r in 0..m.nrows() {
        if r > 0 {
            s.push_str(", ");
        }
        s.push('[');
        for c in 0..m.ncols() {
            if c > 0 {
                s.push_str(", ");
            }
            let _ = write!(s, "{:?}", m[(r, c)] + 0.0);
        }
        s.push(']');
    }
    s.push(']');
    s
}

fn warning_text(w: &Warning) -> String {
    match w {
        Warning::InitialCostAboveBudget { cost, budget } => {
            format!("J(K0) = {cost} exceeds the budget nu/4 = {budget}")
        }
        Warning::RadiusExceedsD0 { r0, d0 } => format!("exploration radius {r0} exceeds D0 = {d0}"),
    }
}

fn prepare_out(out: &Option<PathBuf>) -> CliResult<Option<&Path>> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    Ok(out.as_deref())
}

fn solve(system: &Path, horizon: Option<u64>, out: &Option<PathBuf>, args: &ScheduleArgs) -> CliResult {
    let cfg = SystemConfig::load(system)?;
    let horizon = horizon.unwrap_or_else(|| cfg.default_horizon());
    let sys = cfg.system(horizon)?;
    let (k_star, j_star) = solve_optimal(&sys, SolverOptions::default())?;
    let consts = cfg.constants(&sys)?;
    let schedule = cfg.schedule(&sys, horizon, args.resolve(&cfg)?)?;
    let out = prepare_out(out)?;
    let mut s = Summary::default();
    s.put("state_dim", sys.state_dim())
        .put("input_dim", sys.input_dim())
        .put("K_star", matrix_text(k_star.gain()))
        .put("J_star", j_star)
        .put("J_K0", infinite_horizon_cost(&sys, &cfg.k0))
        .put("nu", consts.nu)
        .put("alpha0", consts.alpha0)
        .put("psi", consts.psi)
        .put("sigma_sq", consts.sigma_sq)
        .put("W", sys.noise().bound_w())
        .put("kappa", consts.kappa)
        .put("gamma", consts.gamma)
        .put("D0", consts.d0)
        .put("G", consts.lipschitz)
        .put("beta", consts.smoothness)
        .put("mu", consts.pl)
        .put("T", horizon)
        .put("delta", schedule.delta)
        .put("theory_eta", schedule.theoretical.eta)
        .put("theory_tau", schedule.theoretical.tau)
        .put("theory_r0", schedule.theoretical.r0)
        .put("theory_m0", schedule.theoretical.m0)
        .put("eta", schedule.eta)
        .put("tau", schedule.tau)
        .put("r0", schedule.r0)
        .put("m0", schedule.m0)
        .put("rho", schedule.rho)
        .put("radius_clamped", schedule.radius_clamped)
        .put("theoretical_only", schedule.theoretical_only())
        .put(
            "step_size_admissible",
            step_size_admissible(schedule.eta, consts.smoothness, consts.pl, consts.d0, consts.lipschitz),
        );
    s.finish(out, "solve.csv")
}

fn rollout(system: &Path, horizon: u64, seed: u64, policy: Policy, out: &Option<PathBuf>) -> CliResult {
    let cfg = SystemConfig::load(system)?;
    let sys = cfg.system(horizon)?;
    let (k_star, j_star) = solve_optimal(&sys, SolverOptions::default())?;
    let k = match policy {
        Policy::Initial => cfg.k0.clone(),
        Policy::Optimal => k_star,
    };
    let x0 = DVector::zeros(sys.state_dim());
    let trajectory = rollout_fixed(&sys, &k, &x0, horizon as usize, &mut SeedStreams::new(seed).noise())?;
    let out = prepare_out(out)?;
    if let Some(dir) = out {
        export::write_rollout(&trajectory, File::create(dir.join("rollout.csv"))?)?;
    }
    let mean = trajectory.costs.iter().sum::<f64>() / trajectory.costs.len().max(1) as f64;
    let mut s = Summary::default();
    s.put("T", horizon)
        .put("seed", seed)
        .put("controller", matrix_text(k.gain()))
        .put("mean_cost", mean)
        .put("J_K", infinite_horizon_cost(&sys, &k))
        .put("J_star", j_star);
    s.finish(out, "rollout_summary.csv")
}

fn learn(system: &Path, horizon: Option<u64>, seed: u64, out: &Option<PathBuf>, args: &ScheduleArgs) -> CliResult {
    let cfg = SystemConfig::load(system)?;
    let horizon = horizon.unwrap_or_else(|| cfg.default_horizon());
    let sys = cfg.system(horizon)?;
    let consts = cfg.constants(&sys)?;
    let schedule = cfg.schedule(&sys, horizon, args.resolve(&cfg)?)?;
    if schedule.theoretical_only() {
        return Err(CliError::new(
            EXIT_INVALID_INPUT,
            format!(
                "the faithful schedule needs {:.3e} rounds before its first update but T = {horizon}; \
                 add a [schedule] section or scale with --m0-mult and --tau-mult",
                schedule.m0 * schedule.tau as f64
            ),
        ));
    }
    if !step_size_admissible(schedule.eta, consts.smoothness, consts.pl, consts.d0, consts.lipschitz) {
        eprintln!(
            "warning: step size {} is above the admissible bound min(1/beta, 4/mu, D0/2G) = {}",
            schedule.eta,
            (1.0 / consts.smoothness).min(4.0 / consts.pl).min(consts.d0 / (2.0 * consts.lipschitz))
        );
    }
    let started = Instant::now();
    let trace = run_on_system(&sys, &cfg.k0, &schedule, horizon, &SeedStreams::new(seed))?;
    log::info!("learner finished {} rounds in {:.2?}", trace.len(), started.elapsed());
    for w in &trace.warnings {
        eprintln!("warning: {}", warning_text(w));
    }
    let out = prepare_out(out)?;
    if let Some(dir) = out {
        export::write_trace(&trace, File::create(dir.join("trace.csv"))?)?;
        export::write_epochs(&trace, File::create(dir.join("epochs.csv"))?)?;
    }
    let j_last = infinite_horizon_cost(&sys, &trace.final_controller);
    let (status, reason) = match &trace.status {
        lqrpg_core::online::RunStatus::Completed => ("completed", String::new()),
        lqrpg_core::online::RunStatus::Diverged { reason, .. } => ("diverged", reason.clone()),
    };
    let mut s = Summary::default();
    s.put("T", horizon)
        .put("seed", seed)
        .put("rounds", trace.len())
        .put("epochs", trace.epoch_records.len())
        .put("eta", schedule.eta)
        .put("tau", schedule.tau)
        .put("r0", schedule.r0)
        .put("m0", schedule.m0)
        .put("status", status)
        .put("regret", regret(&trace))
        .put("J_star", trace.j_star)
        .put("J_K0", infinite_horizon_cost(&sys, &cfg.k0))
        .put("J_K_last", j_last)
        .put("gap_last", j_last - trace.j_star)
        .put("K_last", matrix_text(trace.final_controller.gain()))
        .put("warnings", trace.warnings.len());
    s.finish(out, "learn_summary.csv")?;
    if trace.diverged() {
        return Err(CliError::new(EXIT_DIVERGED, format!("learner diverged: {reason}")));
    }
    Ok(())
}

fn sweep_configs(system: &Option<PathBuf>, all_benchmarks: bool) -> CliResult<Vec<(String, SystemConfig)>> {
    Ok(match system {
        Some(p) => vec![(
            p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "system".into()),
            SystemConfig::load(p)?,
        )],
        None if all_benchmarks => Benchmark::ALL.iter().map(|b| (b.name().to_string(), b.config())).collect(),
        None => vec![(Benchmark::Scalar.name().to_string(), Benchmark::Scalar.config())],
    })
}

const DEFAULT_HORIZONS: [u64; 6] = [16_000, 32_000, 64_000, 128_000, 256_000, 512_000];
const QUICK_HORIZONS: [u64; 4] = [4_000, 8_000, 16_000, 32_000];

#[allow(clippy::too_many_arguments)]
fn sweep(
    experiment: Experiment,
    system: &Option<PathBuf>,
    horizons: &Option<Vec<u64>>,
    seeds: Option<usize>,
    seed: u64,
    radius: f64,
    tau: u64,
    quick: bool,
    out: &Option<PathBuf>,
    args: &ScheduleArgs,
) -> CliResult {
    let out = prepare_out(out)?;
    let mut s = Summary::default();
    let mut failed = false;
    let emit = |name: &str, report: &dyn Report| -> CliResult {
        if let Some(dir) = out {
            emit_report(&[(name, report)], dir)?;
        }
        Ok(())
    };
    match experiment {
        Experiment::Regret => {
            let (_, config) = sweep_configs(system, false)?.remove(0);
            let horizons =
                horizons.clone().unwrap_or_else(|| if quick { QUICK_HORIZONS.to_vec() } else { DEFAULT_HORIZONS.to_vec() });
            let result = regret_scaling(&RegretSweep {
                overrides: args.resolve(&config)?,
                baseline: Some(config.k0.clone()),
                config,
                seeds: seeds.unwrap_or(if quick { 3 } else { 10 }),
                horizons,
                master_seed: seed,
            })?;
            emit("regret_scaling", &result)?;
            let fit = result.fit.as_ref();
            let base = result.baseline_fit.as_ref();
            s.put("runs", result.runs.len())
                .put("diverged", result.diverged())
                .put("slope", export::num(fit.map(|f| f.slope)))
                .put("slope_se", export::num(fit.map(|f| f.slope_se)))
                .put("r_squared", export::num(fit.map(|f| f.r_squared)))
                .put("baseline_slope", export::num(base.map(|f| f.slope)))
                .put("baseline_slope_se", export::num(base.map(|f| f.slope_se)))
                .put("within_divergence_budget", result.within_divergence_budget());
            failed = !result.within_divergence_budget() || fit.is_none();
        }
        Experiment::Exploration => {
            for (name, config) in sweep_configs(system, true)? {
                let sys = config.system(config.default_horizon())?;
                let (k_star, _) = solve_optimal(&sys, SolverOptions::default())?;
                let result = exploration_cost_scaling(&ExplorationConfig {
                    system: sys,
                    controller: k_star,
                    radii: geometric_grid(0.01, 0.3, 6),
                    pairs: if quick { 100 } else { 500 },
                    tau,
                    seed,
                })?;
                emit(&format!("exploration_{name}"), &result)?;
                s.put(&format!("{name}_slope"), result.direct_fit.slope)
                    .put(&format!("{name}_slope_se"), result.direct_fit.slope_se)
                    .put(&format!("{name}_indirect_slope"), export::num(result.indirect_fit.as_ref().map(|f| f.slope)))
                    .put(&format!("{name}_excluded"), result.rows.iter().map(|r| r.excluded).sum::<usize>());
            }
        }
        Experiment::Fidelity => {
            let (_, config) = sweep_configs(system, false)?.remove(0);
            let result = gradient_fidelity(&FidelityConfig {
                system: config.system(config.default_horizon())?,
                controller: config.k0.clone(),
                radius,
                m_grid: if quick { vec![100, 1000, 10_000] } else { vec![100, 1000, 10_000, 100_000] },
                repetitions: if quick { 10 } else { 20 },
                oracle: if tau == 0 { CostOracle::Exact } else { CostOracle::Simulated { tau } },
                seed,
                gradient: lqrpg_core::lqr::exact_policy_gradient,
            })?;
            emit("gradient_fidelity", &result)?;
            s.put("radius", radius)
                .put("decay_slope", result.decay.slope)
                .put("decay_slope_se", result.decay.slope_se)
                .put("fitted_points", result.fitted_points)
                .put("bias_floor", result.bias_floor);
        }
        Experiment::GdBound => {
            let steps = if quick { 2000 } else { 10_000 };
            let result = corrupted_gd_bound_suite(steps, seed)?;
            emit("gd_bound", &result)?;
            s.put("cases", result.cases.len())
                .put("steps", steps)
                .put("violations", result.violations())
                .put("passed", result.passed());
            failed = !result.passed();
        }
    }
    s.finish(out, "sweep_summary.csv")?;
    if failed {
        return Err(CliError::new(EXIT_FAILURE, "sweep failed its acceptance rule"));
    }
    Ok(())
}

fn validate_cmd(quick: bool, seed: u64, out: &Option<PathBuf>) -> CliResult {
    let started = Instant::now();
    let report = validate(&ValidateOptions { quick, seed, ..Default::default() })?;
    log::info!("validation took {:.2?}", started.elapsed());
    let out = prepare_out(out)?;
    if let Some(dir) = out {
        report.write_csv(&dir.join("validate.csv"))?;
    }
    for suite in &report.suites {
        say(&format!(
            "{} = {} ({} checks, {} failures)",
            suite.name,
            if suite.passed() { "pass" } else { "FAIL" },
            suite.checks,
            suite.failures
        ));
        log::info!("{}: {}", suite.name, suite.detail);
    }
    say(&format!("passed = {}", report.passed()));
    if !report.passed() {
        return Err(CliError::new(EXIT_FAILURE, "validation failed"));
    }
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Solve { system, horizon, out, schedule } => solve(system, *horizon, out, schedule),
        Command::Rollout { system, horizon, seed, controller, out } => {
            rollout(system, *horizon, *seed, *controller, out)
        }
        Command::Learn { system, horizon, seed, out, schedule } => learn(system, *horizon, *seed, out, schedule),
        Command::Sweep { experiment, system, horizons, seeds, seed, radius, tau, quick, out, schedule } => {
            sweep(*experiment, system, horizons, *seeds, *seed, *radius, *tau, *quick, out, schedule)
        }
        Command::Validate { quick, seed, out } => validate_cmd(*quick, *seed, out),
    }
}

/// Parses the process arguments, runs the command and maps errors to exit codes.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_env("LQRPG_LOG").init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn non_positive_numbers_are_rejected() {
        assert!(positive_f64("0").is_err());
        assert!(positive_f64("-1.5").is_err());
        assert!(positive_f64("inf").is_err());
        assert_eq!(positive_f64("2.5"), Ok(2.5));
        assert!(positive_u64("0").is_err());
    }

    #[test]
    fn multipliers_stack_on_the_preset() {
        let cfg = Benchmark::Scalar.config();
        let base = cfg.overrides().unwrap();
        let args = ScheduleArgs { eta_mult: Some(2.0), ..Default::default() };
        let o = args.resolve(&cfg).unwrap();
        assert_eq!(o.eta_mult, 2.0 * base.eta_mult);
        assert_eq!(o.m0_mult, base.m0_mult);
        let theory = ScheduleArgs { theory: true, ..Default::default() }.resolve(&cfg).unwrap();
        assert_eq!(theory, ScheduleOverrides::default());
    }

    #[test]
    fn matrices_print_row_by_row() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, -0.5, -0.0, 2.0]);
        assert_eq!(matrix_text(&m), "[[1.0, -0.5], [0.0, 2.0]]");
    }

    #[test]
    fn error_codes_follow_the_table() {
        let nc: CliError = CoreError::NoConvergence { iterations: 1, residual: 1.0 }.into();
        assert_eq!(nc.code, EXIT_NO_CONVERGENCE);
        let parse: CliError = ConfigError::Parse { line: 1, column: 1, message: String::new() }.into();
        assert_eq!(parse.code, EXIT_INVALID_INPUT);
        let overflow: CliError = CoreError::NumericOverflow { step: 3, norm: 1e13 }.into();
        assert_eq!(overflow.code, EXIT_DIVERGED);
    }
}
