//! Simulation engines for the follower dynamics and settling-time measurement.
//!
//! All engines are single-threaded and deterministic. State rows are stored
//! flat, row `k` holding `I(k)` for the `n` agents.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::PinnedSystem;
use crate::linalg::{Matrix, Vector};
use crate::stability::perron;

/// Any state magnitude beyond this aborts the run as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;
/// Minimum default horizon, in steps.
pub const MIN_DEFAULT_STEPS: usize = 1000;

/// Step reference: `I_s(k) = 0` for `k < active_from_step`, `magnitude` after.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInput {
    pub magnitude: f64,
    pub active_from_step: usize,
}

impl StepInput {
    /// Source switches on at `k = 1`.
    pub fn step(magnitude: f64) -> Self {
        StepInput {
            magnitude,
            active_from_step: 1,
        }
    }

    pub fn at(&self, k: usize) -> f64 {
        if k >= self.active_from_step {
            self.magnitude
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    FirstOrder,
    Dsr,
    SecondOrder,
    Continuous,
}

impl fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrajectoryKind::FirstOrder => "first-order",
            TrajectoryKind::Dsr => "dsr",
            TrajectoryKind::SecondOrder => "second-order",
            TrajectoryKind::Continuous => "continuous",
        })
    }
}

/// Sampled agent states with the source signal, `t_k = k·δ_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    kind: TrajectoryKind,
    delta_t: f64,
    n: usize,
    states: Vec<f64>,
    source: Vec<f64>,
    divergent: bool,
}

impl Trajectory {
    /// Builds a trajectory from flat row-major `states` (one row per source sample).
    pub fn new(
        kind: TrajectoryKind,
        delta_t: f64,
        n: usize,
        states: Vec<f64>,
        source: Vec<f64>,
        divergent: bool,
    ) -> Result<Self> {
        if n == 0 || !(delta_t > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "trajectory needs n ≥ 1 and δt > 0 (n = {n}, δt = {delta_t})"
            )));
        }
        if states.len() != n * source.len() || source.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} state values do not form {} rows of {n}",
                states.len(),
                source.len()
            )));
        }
        Ok(Trajectory {
            kind,
            delta_t,
            n,
            states,
            source,
            divergent,
        })
    }

    pub fn kind(&self) -> TrajectoryKind {
        self.kind
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    /// Number of agents.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of samples, including `k = 0`.
    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    pub fn is_divergent(&self) -> bool {
        self.divergent
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.delta_t
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.n..(k + 1) * self.n]
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn source(&self) -> &[f64] {
        &self.source
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.n)
    }

    /// Largest `|x|` over all stored states.
    pub fn max_abs(&self) -> f64 {
        self.states.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// CSV with header `t,agent_1,…,agent_n,source`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.n {
            out.push_str(&format!(",agent_{i}"));
        }
        out.push_str(",source\n");
        for (k, row) in self.rows().enumerate() {
            out.push_str(&fmt_sig15(self.time(k)));
            for x in row {
                out.push(',');
                out.push_str(&fmt_sig15(*x));
            }
            out.push(',');
            out.push_str(&fmt_sig15(self.source[k]));
            out.push('\n');
        }
        out
    }

    /// Parses [`Trajectory::to_csv`] output; `δ_t` is read off the time column.
    pub fn from_csv(text: &str, kind: TrajectoryKind) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Csv("empty input".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        let n = cols.len().saturating_sub(2);
        if n == 0 || cols[0] != "t" || cols[cols.len() - 1] != "source" {
            return Err(Error::Csv(format!("unexpected header '{header}'")));
        }
        let (mut times, mut states, mut source) = (Vec::new(), Vec::new(), Vec::new());
        for (line_no, line) in lines.enumerate() {
            let values = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Csv(format!("line {}: {e}", line_no + 2)))?;
            if values.len() != n + 2 {
                return Err(Error::Csv(format!(
                    "line {}: expected {} fields, found {}",
                    line_no + 2,
                    n + 2,
                    values.len()
                )));
            }
            times.push(values[0]);
            states.extend_from_slice(&values[1..=n]);
            source.push(values[n + 1]);
        }
        if times.len() < 2 {
            return Err(Error::Csv("need at least two rows to infer δt".into()));
        }
        let divergent = states
            .iter()
            .any(|x| !x.is_finite() || x.abs() > DIVERGENCE_LIMIT);
        Trajectory::new(kind, times[1] - times[0], n, states, source, divergent)
    }
}

/// 15 significant digits, scientific notation; parses back with `str::parse`.
pub fn fmt_sig15(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.14e}")
    }
}

fn check_run(sys: &PinnedSystem, i0: &[f64]) -> Result<()> {
    if i0.len() != sys.n() {
        return Err(Error::InvalidArgument(format!(
            "initial state has {} entries, system has {} agents",
            i0.len(),
            sys.n()
        )));
    }
    Ok(())
}

fn blew_up(x: &Vector) -> bool {
    x.iter()
        .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
}

struct Recorder {
    states: Vec<f64>,
    source: Vec<f64>,
}

impl Recorder {
    fn new(n: usize, steps: usize) -> Self {
        Recorder {
            states: Vec::with_capacity(n * (steps + 1)),
            source: Vec::with_capacity(steps + 1),
        }
    }

    fn push(&mut self, x: &Vector, source: f64) {
        self.states.extend_from_slice(x.as_slice());
        self.source.push(source);
    }

    fn finish(self, kind: TrajectoryKind, delta_t: f64, n: usize, divergent: bool) -> Trajectory {
        Trajectory::new(kind, delta_t, n, self.states, self.source, divergent)
            .expect("recorder rows are consistent")
    }
}

/// `I(k+1) = P I(k) + γ B I_s(k)` for `steps` steps. `delta_t` only labels the
/// time axis.
pub fn simulate_first_order(
    sys: &PinnedSystem,
    gamma: f64,
    delta_t: f64,
    input: StepInput,
    steps: usize,
    i0: &[f64],
) -> Result<Trajectory> {
    run_dsr(
        sys,
        gamma,
        0.0,
        delta_t,
        input,
        steps,
        i0,
        TrajectoryKind::FirstOrder,
    )
}

/// `I(k+1) = P I(k) + γ B I_s(k) + β[I(k) − I(k−1)]` with `I(−1) = I(0)`.
pub fn simulate_dsr(
    sys: &PinnedSystem,
    gamma: f64,
    beta: f64,
    delta_t: f64,
    input: StepInput,
    steps: usize,
    i0: &[f64],
) -> Result<Trajectory> {
    run_dsr(
        sys,
        gamma,
        beta,
        delta_t,
        input,
        steps,
        i0,
        TrajectoryKind::Dsr,
    )
}

#[allow(clippy::too_many_arguments)]
fn run_dsr(
    sys: &PinnedSystem,
    gamma: f64,
    beta: f64,
    delta_t: f64,
    input: StepInput,
    steps: usize,
    i0: &[f64],
    kind: TrajectoryKind,
) -> Result<Trajectory> {
    check_run(sys, i0)?;
    let n = sys.n();
    let p = perron(sys, gamma);
    let mut rec = Recorder::new(n, steps);
    let mut prev = Vector::from_column_slice(i0);
    let mut cur = prev.clone();
    let mut next = Vector::zeros(n);
    rec.push(&cur, input.at(0));
    for k in 0..steps {
        next.gemv(1.0, &p, &cur, 0.0);
        next.axpy(gamma * input.at(k), &sys.b, 1.0);
        // skipping the term at β = 0 keeps the plain recursion bit-for-bit
        if beta != 0.0 {
            for i in 0..n {
                next[i] += beta * (cur[i] - prev[i]);
            }
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        rec.push(&cur, input.at(k + 1));
        if blew_up(&cur) {
            return Ok(rec.finish(kind, delta_t, n, true));
        }
    }
    Ok(rec.finish(kind, delta_t, n, false))
}

/// Sampled second-order dynamics over `[I; İ]`, zero initial state, update
/// interval `tilde_delta_t`:
///
/// ```text
/// I(k+1) = I(k) + δ̃ İ(k)
/// İ(k+1) = −(γ_t δ̃ / (β δ_t)) K I(k) + (1 − (1 − β) δ̃ / (β δ_t)) İ(k)
///          + δ̃ γ_t / (β δ_t) B I_s(k)
/// ```
///
/// Only `I` is recorded; the time axis uses `tilde_delta_t`.
pub fn simulate_second_order(
    sys: &PinnedSystem,
    gamma_t: f64,
    beta: f64,
    delta_t: f64,
    tilde_delta_t: f64,
    input: StepInput,
    steps: usize,
) -> Result<Trajectory> {
    if !(tilde_delta_t > 0.0) || !(delta_t > 0.0) || beta == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "second-order model needs δt, δ̃ > 0 and β ≠ 0 (δt = {delta_t}, δ̃ = {tilde_delta_t}, β = {beta})"
        )));
    }
    let n = sys.n();
    let stiffness = gamma_t * tilde_delta_t / (beta * delta_t);
    let damping = 1.0 - (1.0 - beta) * tilde_delta_t / (beta * delta_t);
    let drive = tilde_delta_t * gamma_t / (beta * delta_t);
    let mut rec = Recorder::new(n, steps);
    let mut pos = Vector::zeros(n);
    let mut vel = Vector::zeros(n);
    let mut ki = Vector::zeros(n);
    rec.push(&pos, input.at(0));
    for k in 0..steps {
        ki.gemv(1.0, &sys.k, &pos, 0.0);
        pos.axpy(tilde_delta_t, &vel, 1.0);
        vel *= damping;
        vel.axpy(-stiffness, &ki, 1.0);
        vel.axpy(drive * input.at(k), &sys.b, 1.0);
        rec.push(&pos, input.at(k + 1));
        if blew_up(&pos) || blew_up(&vel) {
            return Ok(rec.finish(TrajectoryKind::SecondOrder, tilde_delta_t, n, true));
        }
    }
    Ok(rec.finish(TrajectoryKind::SecondOrder, tilde_delta_t, n, false))
}

/// Classical RK4 on `İ = −γ_t K I + γ_t B I_s` from `I(0) = 0`, sampled every `h`.
///
/// The step is applied from `t = 0⁺` (the recorded source sample at `t = 0`
/// is 0); `input.active_from_step` is not used.
pub fn simulate_continuous(
    sys: &PinnedSystem,
    gamma_t: f64,
    input: StepInput,
    t_end: f64,
    h: f64,
) -> Result<Trajectory> {
    if !(h > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "continuous run needs h > 0 and t_end ≥ 0 (h = {h}, t_end = {t_end})"
        )));
    }
    let n = sys.n();
    let steps = (t_end / h - 1e-9).ceil().max(0.0) as usize;
    let a: Matrix = &sys.k * (-gamma_t);
    let forcing: Vector = &sys.b * (gamma_t * input.magnitude);
    let f = |x: &Vector| -> Vector { &a * x + &forcing };
    let mut rec = Recorder::new(n, steps);
    let mut x = Vector::zeros(n);
    rec.push(&x, 0.0);
    for _ in 0..steps {
        let k1 = f(&x);
        let k2 = f(&(&x + &k1 * (h / 2.0)));
        let k3 = f(&(&x + &k2 * (h / 2.0)));
        let k4 = f(&(&x + &k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        rec.push(&x, input.magnitude);
        if blew_up(&x) {
            return Ok(rec.finish(TrajectoryKind::Continuous, h, n, true));
        }
    }
    Ok(rec.finish(TrajectoryKind::Continuous, h, n, false))
}

/// Steps covering five predicted settling times, at least [`MIN_DEFAULT_STEPS`].
pub fn default_steps(predicted_ts: f64, delta_t: f64) -> usize {
    ((5.0 * predicted_ts / delta_t).ceil() as usize).max(MIN_DEFAULT_STEPS)
}

/// Half-width of the settling band around the final value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SettlingBand {
    /// Fraction of the step amplitude `max_i |final − I_i(0)|`.
    Fraction(f64),
    /// Fixed tolerance in state units.
    Absolute(f64),
}

impl SettlingBand {
    pub fn half_width(&self, amplitude: f64) -> f64 {
        match *self {
            SettlingBand::Fraction(f) => f * amplitude,
            SettlingBand::Absolute(tol) => tol,
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            SettlingBand::Fraction(f) => f,
            SettlingBand::Absolute(t) => t,
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "settling band must be positive, got {v}"
            )))
        }
    }
}

impl Default for SettlingBand {
    fn default() -> Self {
        SettlingBand::Fraction(0.02)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettlingReport {
    /// `None` when the run did not converge.
    pub ts: Option<f64>,
    pub band: SettlingBand,
    /// Band half-width in state units.
    pub half_width: f64,
    /// Time after which each agent stays in the band.
    pub per_agent_last_exit: Vec<f64>,
    /// Every agent is inside the band over the trailing 10% of samples.
    pub converged: bool,
}

/// Network-wide settling time: the earliest `t_k` after which every agent stays
/// within the band around `final_value`.
pub fn settling_time(
    traj: &Trajectory,
    final_value: f64,
    band: SettlingBand,
) -> Result<SettlingReport> {
    band.validate()?;
    let amplitude = traj
        .state(0)
        .iter()
        .fold(0.0f64, |m, &x| m.max((final_value - x).abs()));
    let hw = band.half_width(amplitude);
    let n = traj.n();
    let len = traj.len();
    if hw == 0.0 {
        // zero-amplitude step under a relative band
        let flat = traj.rows().all(|r| r.iter().all(|&x| x == final_value));
        return Ok(SettlingReport {
            ts: flat.then_some(0.0),
            band,
            half_width: 0.0,
            per_agent_last_exit: vec![0.0; n],
            converged: flat,
        });
    }
    // last_out[i] = one past the last sample index outside the band
    let mut last_out = vec![0usize; n];
    for (k, row) in traj.rows().enumerate() {
        for (i, &x) in row.iter().enumerate() {
            if !((x - final_value).abs() <= hw) {
                last_out[i] = k + 1;
            }
        }
    }
    let tail = len.div_ceil(10).max(1);
    let converged = !traj.is_divergent() && last_out.iter().all(|&k| k <= len - tail);
    let per_agent_last_exit: Vec<f64> = last_out.iter().map(|&k| traj.time(k)).collect();
    let ts = converged.then(|| per_agent_last_exit.iter().cloned().fold(0.0, f64::max));
    Ok(SettlingReport {
        ts,
        band,
        half_width: hw,
        per_agent_last_exit,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ring_with_leader, GraphSpec};
    use std::f64::consts::FRAC_PI_2;

    fn scalar() -> PinnedSystem {
        PinnedSystem::from_spec(&GraphSpec::new(2, 2, &[(2, 1, 1.0)], None).unwrap()).unwrap()
    }

    fn ring() -> PinnedSystem {
        PinnedSystem::from_spec(&ring_with_leader(31, 16).unwrap()).unwrap()
    }

    #[test]
    fn deadbeat_scalar() {
        let input = StepInput {
            magnitude: 5.0,
            active_from_step: 0,
        };
        let t = simulate_first_order(&scalar(), 1.0, 0.01, input, 3, &[0.0]).unwrap();
        assert_eq!(t.state(1), &[5.0]);
        assert_eq!(t.last_state(), &[5.0]);
    }

    #[test]
    fn source_switches_on_at_step_one() {
        let t =
            simulate_first_order(&scalar(), 0.5, 0.01, StepInput::step(1.0), 2, &[0.0]).unwrap();
        assert_eq!(t.source(), &[0.0, 1.0, 1.0]);
        assert_eq!(t.state(1), &[0.0]);
        assert_eq!(t.state(2), &[0.5]);
    }

    #[test]
    fn dsr_with_zero_beta_is_plain_recursion() {
        let sys = ring();
        let i0: Vec<f64> = (0..31).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = simulate_first_order(&sys, 0.3, 0.01, StepInput::step(2.0), 200, &i0).unwrap();
        let b = simulate_dsr(&sys, 0.3, 0.0, 0.01, StepInput::step(2.0), 200, &i0).unwrap();
        assert_eq!(a.rows().collect::<Vec<_>>(), b.rows().collect::<Vec<_>>());
    }

    #[test]
    fn divergence_is_flagged() {
        let sys = ring();
        let t = simulate_first_order(
            &sys,
            0.48,
            0.01,
            StepInput::step(FRAC_PI_2),
            100_000,
            &[0.0; 31],
        )
        .unwrap();
        assert!(t.is_divergent());
        assert!(t.len() < 100_001);
        let t = simulate_dsr(
            &sys,
            0.471,
            1.01,
            0.01,
            StepInput::step(FRAC_PI_2),
            100_000,
            &[0.0; 31],
        )
        .unwrap();
        assert!(t.is_divergent());
    }

    #[test]
    fn continuous_scalar_exponential() {
        let t = simulate_continuous(&scalar(), 1.0, StepInput::step(3.0), 1.0, 1e-3).unwrap();
        assert_eq!(t.len(), 1001);
        let exact = 3.0 * (1.0 - (-1.0f64).exp());
        assert!((t.last_state()[0] - exact).abs() < 1e-6);
    }

    #[test]
    fn continuous_richardson() {
        let sys = ring();
        let run = |h| simulate_continuous(&sys, 47.1, StepInput::step(FRAC_PI_2), 1.0, h).unwrap();
        let gap = |coarse: &Trajectory, fine: &Trajectory| {
            let mut g = 0.0f64;
            for k in 0..coarse.len() {
                for (a, b) in coarse.state(k).iter().zip(fine.state(2 * k)) {
                    g = g.max((a - b).abs());
                }
            }
            g
        };
        let (a, b, c) = (run(5e-4), run(2.5e-4), run(1.25e-4));
        let (g1, g2) = (gap(&a, &b), gap(&b, &c));
        assert!(g2 < 1e-8, "gap {g2}");
        assert!(g1 / g2 > 12.0, "order ratio {}", g1 / g2);
    }

    #[test]
    fn second_order_scalar_matches_hand_iteration() {
        let sys = scalar();
        let (gt, beta, dt, td) = (10.0, 0.5, 0.01, 0.001);
        let t = simulate_second_order(&sys, gt, beta, dt, td, StepInput::step(1.0), 3).unwrap();
        let (mut x, mut v) = (0.0f64, 0.0f64);
        for k in 0..3 {
            let is = if k >= 1 { 1.0 } else { 0.0 };
            let nx = x + td * v;
            let nv = -(gt * td / (beta * dt)) * x
                + (1.0 - (1.0 - beta) * td / (beta * dt)) * v
                + td * gt / (beta * dt) * is;
            x = nx;
            v = nv;
            assert!((t.state(k + 1)[0] - x).abs() < 1e-15);
        }
        assert_eq!(t.delta_t(), td);
    }

    #[test]
    fn settling_of_constant_and_exponential() {
        let c = Trajectory::new(
            TrajectoryKind::FirstOrder,
            0.1,
            2,
            vec![1.0; 20],
            vec![1.0; 10],
            false,
        )
        .unwrap();
        let r = settling_time(&c, 1.0, SettlingBand::Absolute(0.02)).unwrap();
        assert_eq!(r.ts, Some(0.0));
        let r = settling_time(&c, 1.0, SettlingBand::Fraction(0.02)).unwrap();
        assert_eq!(r.ts, Some(0.0));

        // x_k = 1 − 0.5^k: outside a 2% band until 0.5^k ≤ 0.02, i.e. k = 6
        let states: Vec<f64> = (0..40).map(|k| 1.0 - 0.5f64.powi(k)).collect();
        let t = Trajectory::new(
            TrajectoryKind::FirstOrder,
            0.1,
            1,
            states,
            vec![1.0; 40],
            false,
        )
        .unwrap();
        let r = settling_time(&t, 1.0, SettlingBand::Fraction(0.02)).unwrap();
        assert!(r.converged);
        assert!((r.ts.unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(r.half_width, 0.02);
    }

    #[test]
    fn unconverged_has_no_settling_time() {
        let states: Vec<f64> = (0..20).map(|k| k as f64).collect();
        let t = Trajectory::new(
            TrajectoryKind::FirstOrder,
            1.0,
            1,
            states,
            vec![1.0; 20],
            false,
        )
        .unwrap();
        let r = settling_time(&t, 100.0, SettlingBand::Fraction(0.02)).unwrap();
        assert!(!r.converged);
        assert_eq!(r.ts, None);
        assert!(settling_time(&t, 1.0, SettlingBand::Fraction(0.0)).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = simulate_dsr(
            &ring(),
            0.471,
            0.8876,
            0.01,
            StepInput::step(FRAC_PI_2),
            50,
            &[0.0; 31],
        )
        .unwrap();
        let text = t.to_csv();
        assert!(text.starts_with("t,agent_1,agent_2,"));
        assert!(text.lines().next().unwrap().ends_with(",agent_31,source"));
        let back = Trajectory::from_csv(&text, TrajectoryKind::Dsr).unwrap();
        assert_eq!(back.to_csv(), text);
        assert_eq!(back.len(), 51);
        for (a, b) in t.rows().zip(back.rows()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-14 * x.abs().max(1e-300));
            }
        }
        assert!(Trajectory::from_csv("t,agent_1,source\n0,1\n", TrajectoryKind::Dsr).is_err());
    }

    #[test]
    fn default_horizon() {
        assert_eq!(default_steps(0.5, 0.01), 1000);
        assert_eq!(default_steps(10.5, 0.01), 5250);
    }
}
