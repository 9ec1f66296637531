//! `dsrnet` command-line front end.
//!
//! Exit status: 0 on success, 1 for usage, input and I/O errors, 2 for
//! numerical failures (instability, divergence, solver breakdown) and 3 when
//! `reproduce-paper` reports a failing row.

use std::f64::consts::FRAC_PI_2;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::design::{
    beta_critical, default_beta_grid, default_gamma_grid, predict_ts_dsr, predict_ts_no_dsr,
    sweep_beta, sweep_gamma, GainGrid,
};
use crate::error::{Error, Result};
use crate::formation::{distortion, init_circle, max_speed_error, propagate};
use crate::graph::{fig2_fixture, parse_graph, ring_with_leader, GraphSpec, PinnedSystem};
use crate::sim::{
    default_steps, settling_time, simulate_continuous, simulate_dsr, simulate_first_order,
    simulate_second_order, SettlingBand, StepInput, Trajectory,
};
use crate::spectral::{eigenvalues, spectral_radius, Spectrum, REAL_TOL};
use crate::stability::{
    dsr_beta_range_real, dsr_perron, gamma_bound_general, gamma_bound_real, perron,
    second_order_perron,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_REPRODUCTION_FAIL: i32 = 3;

/// Built-in scenario: 31-agent ring, the source feeding agent 16.
pub const RING_AGENTS: usize = 31;
pub const RING_LEADER: usize = 16;
pub const DEFAULT_GAMMA: f64 = 0.471;
pub const DEFAULT_BETA: f64 = 0.8876;
pub const DEFAULT_DELTA_T: f64 = 0.01;
pub const DEFAULT_TILDE_DELTA_T: f64 = 8.8759e-5;
pub const DEFAULT_RK_STEP: f64 = 1e-3;
/// Settling band used for the built-in reports: ±0.02 in state units.
pub const DEFAULT_BAND: SettlingBand = SettlingBand::Absolute(0.02);

#[derive(Debug, Parser)]
#[command(
    name = "dsrnet",
    version,
    about = "Stability analysis, gain design and simulation of DSR consensus networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectrum, gain bounds and spectral radii at the chosen gains.
    Analyze(CommonArgs),
    /// Spectral radius over a grid of γ (plain update) or β (DSR update).
    Sweep {
        #[arg(value_enum)]
        which: SweepTarget,
        /// Grid as LO:HI:STEP; defaults to a fine grid over the stable range.
        #[arg(long, value_name = "LO:HI:STEP", value_parser = parse_grid)]
        grid: Option<GridSpec>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Step response of one engine; writes a trajectory CSV.
    Simulate {
        #[arg(long, value_enum, default_value_t = Mode::FirstOrder)]
        mode: Mode,
        /// Update interval of the second-order model.
        #[arg(long = "tilde-dt", default_value_t = DEFAULT_TILDE_DELTA_T)]
        tilde_dt: f64,
        /// Integrator step of the continuous model.
        #[arg(long = "rk-step", default_value_t = DEFAULT_RK_STEP)]
        rk_step: f64,
        #[arg(long, value_name = "abs:TOL|frac:F", default_value = "abs:0.02", value_parser = parse_band)]
        band: SettlingBand,
        /// Run even if the configuration is unstable.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Heading-driven formation runs with and without DSR.
    Formation {
        #[arg(long, value_name = "abs:TOL|frac:F", default_value = "abs:0.02", value_parser = parse_band)]
        band: SettlingBand,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Recomputes the reference results for the built-in ring and prints a verdict table.
    ReproducePaper {
        /// Override the update gain used by the simulation rows.
        #[arg(long)]
        gamma: Option<f64>,
    },
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// Graph document (JSON); the built-in ring when omitted.
    #[arg(long, value_name = "PATH")]
    graph: Option<PathBuf>,
    /// Update gain γ; chosen from the spectrum when omitted
    #[arg(long)]
    gamma: Option<f64>,
    /// DSR gain β; critical damping when omitted
    #[arg(long)]
    beta: Option<f64>,
    /// Update interval in seconds.
    #[arg(long = "dt", default_value_t = DEFAULT_DELTA_T)]
    dt: f64,
    /// Step magnitude; π/2 when omitted.
    #[arg(long)]
    step: Option<f64>,
    /// Simulated time in seconds.
    #[arg(long)]
    horizon: Option<f64>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepTarget {
    Gamma,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    FirstOrder,
    Dsr,
    SecondOrder,
    Continuous,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::FirstOrder => "first-order",
            Mode::Dsr => "dsr",
            Mode::SecondOrder => "second-order",
            Mode::Continuous => "continuous",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct GridSpec {
    lo: f64,
    hi: f64,
    step: f64,
}

fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected LO:HI:STEP, got '{s}'"));
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}"));
    let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if !(step > 0.0) || hi < lo {
        return Err(format!("grid needs LO ≤ HI and STEP > 0, got '{s}'"));
    }
    Ok(GridSpec { lo, hi, step })
}

fn parse_band(s: &str) -> std::result::Result<SettlingBand, String> {
    let (kind, value) = s
        .split_once(':')
        .ok_or_else(|| format!("expected abs:TOL or frac:F, got '{s}'"))?;
    let v: f64 = value.parse().map_err(|e| format!("'{value}': {e}"))?;
    if !(v > 0.0) {
        return Err(format!("band must be positive, got {v}"));
    }
    match kind {
        "abs" => Ok(SettlingBand::Absolute(v)),
        "frac" => Ok(SettlingBand::Fraction(v)),
        _ => Err(format!("unknown band kind '{kind}'")),
    }
}

/// Resolved run parameters shared by all subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub graph_path: Option<PathBuf>,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub delta_t: f64,
    pub step_magnitude: f64,
    pub horizon: Option<f64>,
    pub output_dir: PathBuf,
}

impl RunConfig {
    fn from_args(a: CommonArgs) -> Result<Self> {
        let cfg = RunConfig {
            graph_path: a.graph,
            gamma: a.gamma,
            beta: a.beta,
            delta_t: a.dt,
            step_magnitude: a.step.unwrap_or(FRAC_PI_2),
            horizon: a.horizon,
            output_dir: a.out,
        };
        if !(cfg.delta_t > 0.0) || !cfg.delta_t.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "--dt must be positive, got {}",
                cfg.delta_t
            )));
        }
        if let Some(h) = cfg.horizon {
            if !(h >= 0.0) || !h.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "--horizon must be ≥ 0, got {h}"
                )));
            }
        }
        if !cfg.step_magnitude.is_finite() {
            return Err(Error::InvalidArgument("--step must be finite".into()));
        }
        Ok(cfg)
    }

    fn steps_for(&self, interval: f64) -> Option<usize> {
        self.horizon
            .map(|h| (h / interval - 1e-9).ceil().max(0.0) as usize)
    }
}

/// Graph, pinned system and spectrum of one run.
struct Scenario {
    spec: GraphSpec,
    sys: PinnedSystem,
    spectrum: Spectrum,
    builtin: bool,
}

impl Scenario {
    fn load(cfg: &RunConfig) -> Result<Self> {
        let (spec, builtin) = match &cfg.graph_path {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| Error::ReadFile {
                    path: path.clone(),
                    source,
                })?;
                (parse_graph(&text)?, false)
            }
            None => (ring_with_leader(RING_AGENTS, RING_LEADER)?, true),
        };
        let sys = PinnedSystem::from_spec(&spec)?;
        let spectrum = eigenvalues(&sys.k)?;
        Ok(Scenario {
            spec,
            sys,
            spectrum,
            builtin,
        })
    }

    fn lambda_min(&self) -> f64 {
        self.spectrum.min_magnitude()
    }

    /// Explicit gain, else the built-in default, else the radius-optimal
    /// `2/(λ_min + λ_max)` (half the bound for complex spectra).
    fn gamma(&self, cfg: &RunConfig) -> Result<f64> {
        if let Some(g) = cfg.gamma {
            return Ok(g);
        }
        if self.builtin {
            return Ok(DEFAULT_GAMMA);
        }
        if self.spectrum.is_real() {
            Ok(2.0 / (self.spectrum.min_magnitude() + self.spectrum.max_magnitude()))
        } else {
            Ok(0.5 * gamma_bound_general(&self.spectrum)?.upper)
        }
    }

    fn beta(&self, cfg: &RunConfig, gamma: f64) -> f64 {
        cfg.beta.unwrap_or_else(|| {
            if self.builtin {
                DEFAULT_BETA
            } else {
                beta_critical(self.lambda_min(), gamma)
            }
        })
    }

    fn leader_labels(&self) -> Vec<String> {
        self.sys
            .leaders()
            .iter()
            .map(|&i| self.spec.labels()[i].clone())
            .collect()
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = stdout.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    let mut report = String::new();
    let outcome = dispatch(cli.command, &mut report);
    let _ = stdout.write_all(report.as_bytes());
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn dispatch(command: Command, out: &mut String) -> Result<i32> {
    match command {
        Command::Analyze(a) => cmd_analyze(&RunConfig::from_args(a)?, out),
        Command::Sweep {
            which,
            grid,
            common,
        } => cmd_sweep(&RunConfig::from_args(common)?, which, grid, out),
        Command::Simulate {
            mode,
            tilde_dt,
            rk_step,
            band,
            force,
            common,
        } => {
            let opts = SimulateOptions {
                mode,
                tilde_delta_t: tilde_dt,
                rk_step,
                band,
                force,
            };
            cmd_simulate(&RunConfig::from_args(common)?, &opts, out)
        }
        Command::Formation { band, common } => {
            cmd_formation(&RunConfig::from_args(common)?, band, out)
        }
        Command::ReproducePaper { gamma } => {
            let rows = reproduce_paper(gamma.unwrap_or(DEFAULT_GAMMA))?;
            out.push_str(&render_table(&rows));
            Ok(if rows.iter().all(|r| r.pass) {
                EXIT_OK
            } else {
                EXIT_REPRODUCTION_FAIL
            })
        }
    }
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn radius(m: &crate::linalg::Matrix) -> Result<f64> {
    Ok(spectral_radius(&eigenvalues(m)?))
}

fn verdict(r: f64) -> &'static str {
    if r < 1.0 {
        "stable"
    } else {
        "unstable"
    }
}

fn cmd_analyze(cfg: &RunConfig, out: &mut String) -> Result<i32> {
    let sc = Scenario::load(cfg)?;
    let n = sc.sys.n();
    let _ = writeln!(out, "agents: {n}");
    let _ = writeln!(out, "source: node {}", sc.spec.labels()[sc.spec.source()]);
    let _ = writeln!(out, "leaders: {}", sc.leader_labels().join(", "));
    let _ = writeln!(
        out,
        "spectrum of K: {}",
        if sc.spectrum.is_real() {
            "real"
        } else {
            "complex"
        }
    );
    let lo = sc.spectrum.sorted_by_magnitude()[0];
    let hi = sc.spectrum.sorted_by_magnitude()[n - 1];
    let _ = writeln!(out, "  lambda_min = {}", fmt_complex(lo.re, lo.im));
    let _ = writeln!(out, "  lambda_max = {}", fmt_complex(hi.re, hi.im));
    let general = gamma_bound_general(&sc.spectrum)?;
    let _ = writeln!(out, "gamma bound (general): {:.6}", general.upper);
    if sc.spectrum.is_real() {
        let real = gamma_bound_real(&sc.spectrum)?;
        let _ = writeln!(out, "gamma bound (real spectrum): {:.6}", real.upper);
    }
    let gamma = sc.gamma(cfg)?;
    let r = radius(&perron(&sc.sys, gamma))?;
    let _ = writeln!(
        out,
        "gamma = {gamma:.6}: radius(P) = {r:.6} ({})",
        verdict(r)
    );
    if sc.spectrum.is_real() {
        match dsr_beta_range_real(&sc.spectrum, gamma) {
            Ok(range) => {
                let _ = writeln!(
                    out,
                    "beta range: ({:.6}, {:.6})",
                    range.beta_lower, range.beta_upper
                );
            }
            Err(e) => {
                let _ = writeln!(out, "beta range: n/a ({e})");
            }
        }
    } else {
        let _ = writeln!(out, "beta range: n/a (complex spectrum)");
    }
    let beta = sc.beta(cfg, gamma);
    let r = radius(&dsr_perron(&sc.sys, gamma, beta))?;
    let _ = writeln!(
        out,
        "beta = {beta:.6}: radius(P_dsr) = {r:.6} ({})",
        verdict(r)
    );
    let lambda1 = sc.lambda_min();
    let beta_star = beta_critical(lambda1, gamma);
    let gamma_t = gamma / cfg.delta_t;
    let _ = writeln!(out, "beta* (critical damping) = {beta_star:.6}");
    let _ = writeln!(
        out,
        "predicted settling: {:.4} s without DSR, {:.4} s with beta*",
        predict_ts_no_dsr(lambda1, gamma_t),
        predict_ts_dsr(beta_star, cfg.delta_t, gamma_t, lambda1)
    );
    Ok(EXIT_OK)
}

fn cmd_sweep(
    cfg: &RunConfig,
    which: SweepTarget,
    grid: Option<GridSpec>,
    out: &mut String,
) -> Result<i32> {
    let sc = Scenario::load(cfg)?;
    let explicit = grid
        .map(|g| GainGrid::stepped(g.lo, g.hi, g.step))
        .transpose()?;
    let result = match which {
        SweepTarget::Gamma => {
            let grid = match explicit {
                Some(g) => g,
                None if sc.spectrum.is_real() => {
                    default_gamma_grid(&gamma_bound_real(&sc.spectrum)?)
                }
                None => default_gamma_grid(&gamma_bound_general(&sc.spectrum)?),
            };
            sweep_gamma(&sc.sys, &grid)?
        }
        SweepTarget::Beta => {
            let gamma = sc.gamma(cfg)?;
            let grid = match explicit {
                Some(g) => g,
                None => default_beta_grid(&dsr_beta_range_real(&sc.spectrum, gamma)?),
            };
            let _ = writeln!(out, "gamma = {gamma:.6}");
            sweep_beta(&sc.sys, gamma, &grid)?
        }
    };
    let path = write_output(&cfg.output_dir, "sweep.csv", &result.to_csv())?;
    let name = match which {
        SweepTarget::Gamma => "gamma",
        SweepTarget::Beta => "beta",
    };
    let _ = writeln!(out, "points: {}", result.grid.len());
    let _ = writeln!(out, "argmin {name} = {}", result.argmin);
    let _ = writeln!(out, "min radius = {:.6}", result.min_radius);
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(EXIT_OK)
}

struct SimulateOptions {
    mode: Mode,
    tilde_delta_t: f64,
    rk_step: f64,
    band: SettlingBand,
    force: bool,
}

fn cmd_simulate(cfg: &RunConfig, opts: &SimulateOptions, out: &mut String) -> Result<i32> {
    let sc = Scenario::load(cfg)?;
    let n = sc.sys.n();
    let gamma = sc.gamma(cfg)?;
    let beta = sc.beta(cfg, gamma);
    let dt = cfg.delta_t;
    let gamma_t = gamma / dt;
    let lambda1 = sc.lambda_min();
    let input = StepInput::step(cfg.step_magnitude);
    let zeros = vec![0.0; n];
    let ts_plain = predict_ts_no_dsr(lambda1, gamma_t);
    let ts_dsr = if beta > 0.0 {
        predict_ts_dsr(beta, dt, gamma_t, lambda1)
    } else {
        ts_plain
    };

    let (r, what) = match opts.mode {
        Mode::FirstOrder => (radius(&perron(&sc.sys, gamma))?, "plain update"),
        Mode::Dsr => (radius(&dsr_perron(&sc.sys, gamma, beta))?, "DSR update"),
        Mode::SecondOrder => (
            radius(&second_order_perron(
                &sc.sys,
                gamma_t,
                beta,
                dt,
                opts.tilde_delta_t,
            ))?,
            "second-order update",
        ),
        // the continuous model is stable whenever K has eigenvalues in the right half-plane
        Mode::Continuous => (0.0, "continuous model"),
    };
    let _ = writeln!(out, "mode: {}", opts.mode.name());
    match opts.mode {
        Mode::FirstOrder | Mode::Continuous => {
            let _ = writeln!(out, "gamma = {gamma:.6}, dt = {dt}");
        }
        _ => {
            let _ = writeln!(out, "gamma = {gamma:.6}, beta = {beta:.6}, dt = {dt}");
        }
    }
    if opts.mode != Mode::Continuous {
        let _ = writeln!(out, "spectral radius = {r:.6} ({})", verdict(r));
        if r >= 1.0 && !opts.force {
            return Err(Error::Unstable {
                what: what.into(),
                radius: r,
            });
        }
    }

    let traj: Trajectory = match opts.mode {
        Mode::FirstOrder => {
            let steps = cfg
                .steps_for(dt)
                .unwrap_or_else(|| default_steps(ts_plain, dt));
            simulate_first_order(&sc.sys, gamma, dt, input, steps, &zeros)?
        }
        Mode::Dsr => {
            let steps = cfg
                .steps_for(dt)
                .unwrap_or_else(|| default_steps(ts_dsr, dt));
            simulate_dsr(&sc.sys, gamma, beta, dt, input, steps, &zeros)?
        }
        Mode::SecondOrder => {
            let td = opts.tilde_delta_t;
            let steps = cfg
                .steps_for(td)
                .unwrap_or_else(|| default_steps(ts_dsr, td));
            simulate_second_order(&sc.sys, gamma_t, beta, dt, td, input, steps)?
        }
        Mode::Continuous => {
            let t_end = cfg.horizon.unwrap_or(5.0 * ts_plain);
            simulate_continuous(&sc.sys, gamma_t, input, t_end, opts.rk_step)?
        }
    };
    let file = format!("trajectory_{}.csv", opts.mode.name());
    let path = write_output(&cfg.output_dir, &file, &traj.to_csv())?;
    let _ = writeln!(
        out,
        "samples: {} (interval {} s)",
        traj.len(),
        traj.delta_t()
    );
    let _ = writeln!(out, "wrote {}", path.display());
    if traj.is_divergent() {
        let _ = writeln!(out, "diverged: partial trajectory kept");
        return Err(Error::Diverged {
            step: traj.len() - 1,
        });
    }
    let report = settling_time(&traj, cfg.step_magnitude, opts.band)?;
    match report.ts {
        Some(ts) => {
            let _ = writeln!(
                out,
                "settling time = {ts:.5} s (band ±{:.6})",
                report.half_width
            );
        }
        None => {
            let _ = writeln!(
                out,
                "not settled within the horizon (band ±{:.6})",
                report.half_width
            );
        }
    }
    Ok(EXIT_OK)
}

fn cmd_formation(cfg: &RunConfig, band: SettlingBand, out: &mut String) -> Result<i32> {
    let sc = Scenario::load(cfg)?;
    let n = sc.sys.n();
    let gamma = sc.gamma(cfg)?;
    let beta = sc.beta(cfg, gamma);
    let dt = cfg.delta_t;
    let input = StepInput::step(cfg.step_magnitude);
    let zeros = vec![0.0; n];
    let steps = match cfg.steps_for(dt) {
        Some(s) => s,
        None => {
            let probe_steps = default_steps(predict_ts_no_dsr(sc.lambda_min(), gamma / dt), dt);
            let probe = simulate_first_order(&sc.sys, gamma, dt, input, probe_steps, &zeros)?;
            if probe.is_divergent() {
                return Err(Error::Diverged {
                    step: probe.len() - 1,
                });
            }
            let ts = settling_time(&probe, cfg.step_magnitude, band)?
                .ts
                .ok_or_else(|| {
                    Error::InvalidArgument("plain update did not settle; pass --horizon".into())
                })?;
            (ts / dt).round() as usize
        }
    };
    let plain = simulate_first_order(&sc.sys, gamma, dt, input, steps, &zeros)?;
    let dsr = simulate_dsr(&sc.sys, gamma, beta, dt, input, steps, &zeros)?;
    for t in [&plain, &dsr] {
        if t.is_divergent() {
            return Err(Error::Diverged { step: t.len() - 1 });
        }
    }
    let initial = init_circle(n, 1.0);
    let plain_trace = propagate(&plain, &initial)?;
    let dsr_trace = propagate(&dsr, &initial)?;
    let d_plain = distortion(&plain_trace, steps)?;
    let d_dsr = distortion(&dsr_trace, steps)?;
    let p1 = write_output(
        &cfg.output_dir,
        "formation_no_dsr.csv",
        &plain_trace.to_csv(),
    )?;
    let p2 = write_output(&cfg.output_dir, "formation_dsr.csv", &dsr_trace.to_csv())?;
    let _ = writeln!(out, "gamma = {gamma:.6}, beta = {beta:.6}, dt = {dt}");
    let _ = writeln!(out, "horizon: {steps} steps ({:.4} s)", steps as f64 * dt);
    let _ = writeln!(out, "leaders: {}", sc.leader_labels().join(", "));
    let _ = writeln!(out, "distortion without DSR = {d_plain:.6}");
    let _ = writeln!(out, "distortion with DSR    = {d_dsr:.6}");
    let _ = writeln!(out, "wrote {}", p1.display());
    let _ = writeln!(out, "wrote {}", p2.display());
    Ok(EXIT_OK)
}

fn fmt_complex(re: f64, im: f64) -> String {
    if im.abs() <= REAL_TOL * re.abs().max(1.0) {
        format!("{re:.6}")
    } else {
        format!(
            "{re:.6} {} {:.6}i",
            if im < 0.0 { "-" } else { "+" },
            im.abs()
        )
    }
}

/// How a [`CheckRow`] compares its value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expectation {
    /// `|actual − value| ≤ tol`.
    Near { value: f64, tol: f64 },
    /// `actual ≥ value`.
    AtLeast(f64),
    /// `actual > value`.
    Above(f64),
}

impl Expectation {
    fn check(&self, actual: f64) -> bool {
        match *self {
            Expectation::Near { value, tol } => (actual - value).abs() <= tol,
            Expectation::AtLeast(v) => actual >= v,
            Expectation::Above(v) => actual > v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub quantity: String,
    pub expected: Expectation,
    pub actual: f64,
    pub pass: bool,
}

impl CheckRow {
    fn new(quantity: &str, expected: Expectation, actual: f64) -> Self {
        CheckRow {
            quantity: quantity.into(),
            expected,
            actual,
            pass: expected.check(actual),
        }
    }
}

fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x:.6}")
    }
}

/// Fixed-width verdict table, one row per check plus a summary line.
pub fn render_table(rows: &[CheckRow]) -> String {
    let mut s = format!(
        "{:<46} {:>12} {:>12} {:>11}  verdict\n",
        "quantity", "expected", "actual", "tolerance"
    );
    for r in rows {
        let (expected, tol) = match r.expected {
            Expectation::Near { value, tol } => (fmt_num(value), format!("±{}", fmt_num(tol))),
            Expectation::AtLeast(v) => (format!(">= {}", fmt_num(v)), "-".into()),
            Expectation::Above(v) => (format!("> {}", fmt_num(v)), "-".into()),
        };
        let _ = writeln!(
            s,
            "{:<46} {:>12} {:>12} {:>11}  {}",
            r.quantity,
            expected,
            fmt_num(r.actual),
            tol,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    let _ = writeln!(s, "{passed}/{} rows pass", rows.len());
    s
}

fn settled(traj: &Trajectory, final_value: f64) -> Result<f64> {
    if traj.is_divergent() {
        return Ok(f64::INFINITY);
    }
    Ok(settling_time(traj, final_value, DEFAULT_BAND)?
        .ts
        .unwrap_or(f64::INFINITY))
}

/// Recomputes the reference results of the built-in ring at update gain
/// `gamma` (nominally 0.471).
pub fn reproduce_paper(gamma: f64) -> Result<Vec<CheckRow>> {
    use Expectation::*;
    let near = |value, tol| Near { value, tol };

    let sys = PinnedSystem::from_spec(&ring_with_leader(RING_AGENTS, RING_LEADER)?)?;
    let n = sys.n();
    let spectrum = eigenvalues(&sys.k)?;
    let (lambda1, lambda_n) = (spectrum.min_magnitude(), spectrum.max_magnitude());
    let bound = gamma_bound_real(&spectrum)?;
    let dt = DEFAULT_DELTA_T;
    let gamma_t = gamma / dt;
    let beta = DEFAULT_BETA;
    let id = FRAC_PI_2;
    let input = StepInput::step(id);
    let zeros = vec![0.0; n];
    let mut rows = vec![
        CheckRow::new("smallest eigenvalue of K", near(0.0081, 5e-4), lambda1),
        CheckRow::new("largest eigenvalue of K", near(4.2361, 1e-3), lambda_n),
        CheckRow::new("gamma bound 2/lambda_max", near(0.47214, 2e-4), bound.upper),
    ];
    rows.push(CheckRow::new(
        "radius(P) at the gamma bound",
        near(1.0, 1e-6),
        radius(&perron(&sys, bound.upper))?,
    ));
    let gsweep = sweep_gamma(&sys, &GainGrid::stepped(1e-4, bound.upper, 1e-4)?)?;
    rows.push(CheckRow::new(
        "gamma sweep argmin (step 1e-4)",
        near(0.47119, 5e-4),
        gsweep.argmin,
    ));

    let plain = simulate_first_order(
        &sys,
        gamma,
        dt,
        input,
        default_steps(predict_ts_no_dsr(lambda1, gamma_t), dt),
        &zeros,
    )?;
    let ts_plain = settled(&plain, id)?;
    rows.push(CheckRow::new(
        "settling time without DSR [s]",
        near(12.04, 0.05),
        ts_plain,
    ));
    let cont = simulate_continuous(
        &sys,
        gamma_t,
        input,
        5.0 * predict_ts_no_dsr(lambda1, gamma_t),
        DEFAULT_RK_STEP,
    )?;
    rows.push(CheckRow::new(
        "settling time, continuous model [s]",
        near(12.07, 0.05),
        settled(&cont, id)?,
    ));
    rows.push(CheckRow::new(
        "predicted settling without DSR [s]",
        near(10.5, 0.1),
        predict_ts_no_dsr(lambda1, gamma_t),
    ));

    let range = dsr_beta_range_real(&spectrum, gamma)?;
    rows.push(CheckRow::new(
        "beta range lower end",
        near(-0.0024, 5e-4),
        range.beta_lower,
    ));
    rows.push(CheckRow::new(
        "beta range upper end",
        near(1.0, 0.0),
        range.beta_upper,
    ));
    rows.push(CheckRow::new(
        "radius(P_dsr) at beta lower end",
        near(1.0, 1e-3),
        radius(&dsr_perron(&sys, gamma, range.beta_lower))?,
    ));
    rows.push(CheckRow::new(
        "radius(P_dsr) at beta upper end",
        near(1.0, 1e-3),
        radius(&dsr_perron(&sys, gamma, range.beta_upper))?,
    ));
    let fine = sweep_beta(&sys, gamma, &default_beta_grid(&range))?;
    rows.push(CheckRow::new(
        "beta sweep argmin (step 1e-4)",
        near(0.8876, 5e-3),
        fine.argmin,
    ));
    let coarse = sweep_beta(
        &sys,
        gamma,
        &GainGrid::stepped(range.beta_lower, range.beta_upper - 1e-9, 0.01)?,
    )?;
    rows.push(CheckRow::new(
        "beta sweep argmin (step 0.01 from lower end)",
        near(0.8876, 5e-3),
        coarse.argmin,
    ));
    let beta_star = beta_critical(lambda1, gamma);
    rows.push(CheckRow::new(
        "critical-damping beta*",
        near(0.8840, 1e-3),
        beta_star,
    ));
    rows.push(CheckRow::new(
        "predicted settling with beta* [s]",
        near(0.9149, 0.01),
        predict_ts_dsr(beta_star, dt, gamma_t, lambda1),
    ));

    let ts_pred_dsr = predict_ts_dsr(beta, dt, gamma_t, lambda1);
    let dsr = simulate_dsr(
        &sys,
        gamma,
        beta,
        dt,
        input,
        default_steps(ts_pred_dsr, dt),
        &zeros,
    )?;
    let ts_dsr = settled(&dsr, id)?;
    rows.push(CheckRow::new(
        "settling time with DSR [s]",
        near(0.90, 0.05),
        ts_dsr,
    ));
    rows.push(CheckRow::new(
        "settling speed-up without/with DSR",
        AtLeast(13.0),
        ts_plain / ts_dsr,
    ));

    for (td, expected, tol) in [
        (1e-2, 1.7667, 1e-3),
        (DEFAULT_TILDE_DELTA_T, 0.9995, 5e-4),
        (8.8759e-4, 1.0032, 5e-4),
    ] {
        rows.push(CheckRow::new(
            &format!("radius(P_2nd) at update interval {td:e}"),
            near(expected, tol),
            radius(&second_order_perron(&sys, gamma_t, beta, dt, td))?,
        ));
    }
    let td = DEFAULT_TILDE_DELTA_T;
    let second = simulate_second_order(
        &sys,
        gamma_t,
        beta,
        dt,
        td,
        input,
        default_steps(ts_pred_dsr, td),
    )?;
    rows.push(CheckRow::new(
        "settling time, second-order model [s]",
        near(0.9399, 0.02),
        settled(&second, id)?,
    ));

    let mut fig2 = eigenvalues(&PinnedSystem::from_spec(&fig2_fixture())?.k)?.sorted_real_parts();
    fig2.sort_by(f64::total_cmp);
    let fig2_err = fig2
        .iter()
        .zip([1.0, 1.0, 1.0, 1.0, 3.0, 4.0])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    rows.push(CheckRow::new(
        "six-agent example spectrum max error",
        near(0.0, 1e-9),
        fig2_err,
    ));

    let steps = if ts_plain.is_finite() {
        (ts_plain / dt).round() as usize
    } else {
        plain.len() - 1
    };
    let initial = init_circle(n, 1.0);
    let trace_plain = propagate(
        &simulate_first_order(&sys, gamma, dt, input, steps, &zeros)?,
        &initial,
    )?;
    let trace_dsr = propagate(
        &simulate_dsr(&sys, gamma, beta, dt, input, steps, &zeros)?,
        &initial,
    )?;
    let speed_err = max_speed_error(&trace_plain).max(max_speed_error(&trace_dsr));
    rows.push(CheckRow::new(
        "formation unit-speed error",
        near(0.0, 1e-12),
        speed_err,
    ));
    rows.push(CheckRow::new(
        "formation distortion gap without - with DSR",
        Above(0.0),
        distortion(&trace_plain, steps)? - distortion(&trace_dsr, steps)?,
    ));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_band_parsing() {
        assert_eq!(
            parse_grid("0:1:0.5").unwrap(),
            GridSpec {
                lo: 0.0,
                hi: 1.0,
                step: 0.5
            }
        );
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert_eq!(
            parse_band("abs:0.02").unwrap(),
            SettlingBand::Absolute(0.02)
        );
        assert_eq!(
            parse_band("frac:0.05").unwrap(),
            SettlingBand::Fraction(0.05)
        );
        assert!(parse_band("rel:0.1").is_err());
        assert!(parse_band("abs:-1").is_err());
    }

    #[test]
    fn expectations() {
        assert!(Expectation::Near {
            value: 1.0,
            tol: 0.1
        }
        .check(1.05));
        assert!(!Expectation::Near {
            value: 1.0,
            tol: 0.1
        }
        .check(1.2));
        assert!(Expectation::AtLeast(13.0).check(13.0));
        assert!(!Expectation::Above(0.0).check(0.0));
        assert!(!Expectation::Near {
            value: 1.0,
            tol: 0.1
        }
        .check(f64::NAN));
    }

    #[test]
    fn table_layout() {
        let rows = vec![
            CheckRow::new(
                "a",
                Expectation::Near {
                    value: 1.0,
                    tol: 1e-6,
                },
                1.0,
            ),
            CheckRow::new("b", Expectation::AtLeast(13.0), 2.0),
        ];
        let t = render_table(&rows);
        assert!(t.lines().nth(1).unwrap().ends_with("PASS"));
        assert!(t.lines().nth(2).unwrap().ends_with("FAIL"));
        assert_eq!(t.lines().last().unwrap(), "1/2 rows pass");
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["dsrnet", "bogus"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(
            run(["dsrnet", "sweep", "gamma", "--grid", "x"], &mut o, &mut e),
            EXIT_USAGE
        );
        assert_eq!(
            run(["dsrnet", "analyze", "--dt", "0"], &mut o, &mut e),
            EXIT_USAGE
        );
        assert_eq!(run(["dsrnet", "--help"], &mut o, &mut e), EXIT_OK);
    }
}
