//! Gain selection: spectral-radius sweeps, the critical-damping DSR gain and
//! settling-time predictors from the continuous approximation.
//!
//! With `γ = γ_t δ_t`, the DSR recursion behaves for small `δ_t` like
//!
//! ```text
//! β δ_t² Ï + (1 − β) δ_t İ = −γ_t δ_t K I + γ_t δ_t B I_s
//! ```
//!
//! so mode `λ` has `ω² = γ_t λ / (β δ_t)` and `2ζω = (1 − β)/(β δ_t)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::PinnedSystem;
use crate::spectral::{eigenvalues, spectral_radius, Spectrum};
use crate::stability::{dsr_perron, perron, DsrGainRange, GainBound};

/// Number of points in the default γ sweep.
pub const DEFAULT_GAMMA_POINTS: usize = 2048;
/// Step of the default β sweep.
pub const DEFAULT_BETA_STEP: f64 = 1e-4;

/// A strictly increasing list of gains.
#[derive(Debug, Clone, PartialEq)]
pub struct GainGrid(Vec<f64>);

impl GainGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite grid value".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "grid must be strictly increasing".into(),
            ));
        }
        Ok(GainGrid(values))
    }

    /// `lo, lo + step, …` up to and including `hi` (within rounding).
    pub fn stepped(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("bad grid {lo}:{hi}:{step}")));
        }
        if hi < lo {
            return Err(Error::EmptyGrid);
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Self::new((0..count).map(|k| lo + k as f64 * step).collect())
    }

    /// `count` equally spaced points strictly inside `(lo, hi)`.
    pub fn open_uniform(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::EmptyGrid);
        }
        let h = (hi - lo) / (count + 1) as f64;
        Self::new((1..=count).map(|k| lo + k as f64 * h).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn step(&self) -> Option<f64> {
        self.0.windows(2).map(|w| w[1] - w[0]).reduce(f64::max)
    }
}

/// 2048 uniform points on `(0, γ̄)`.
pub fn default_gamma_grid(bound: &GainBound) -> GainGrid {
    GainGrid::open_uniform(bound.lower, bound.upper, DEFAULT_GAMMA_POINTS)
        .expect("bound interval is non-empty")
}

/// Step 1e-4 on `(β_lower + 1e-4, 1 − 1e-4)`.
pub fn default_beta_grid(range: &DsrGainRange) -> GainGrid {
    GainGrid::stepped(
        range.beta_lower + DEFAULT_BETA_STEP,
        range.beta_upper - DEFAULT_BETA_STEP,
        DEFAULT_BETA_STEP,
    )
    .expect("β range is non-empty")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub grid: Vec<f64>,
    pub radii: Vec<f64>,
    pub argmin: f64,
    pub min_radius: f64,
}

impl SweepResult {
    fn from_radii(grid: &GainGrid, radii: Vec<f64>) -> Self {
        // strict `<` keeps the smaller gain on ties
        let (mut best, mut best_r) = (0, f64::INFINITY);
        for (i, &r) in radii.iter().enumerate() {
            if r < best_r {
                best = i;
                best_r = r;
            }
        }
        SweepResult {
            grid: grid.values().to_vec(),
            argmin: grid.values()[best],
            min_radius: best_r,
            radii,
        }
    }

    /// CSV with header `gain,radius`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gain,radius\n");
        for (g, r) in self.grid.iter().zip(&self.radii) {
            out.push_str(&format!(
                "{},{}\n",
                crate::sim::fmt_sig15(*g),
                crate::sim::fmt_sig15(*r)
            ));
        }
        out
    }
}

fn sweep<F>(grid: &GainGrid, radius_at: F) -> Result<SweepResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let radii = grid
        .values()
        .par_iter()
        .map(|&g| radius_at(g))
        .collect::<Result<Vec<f64>>>()?;
    Ok(SweepResult::from_radii(grid, radii))
}

/// Spectral radius of `P = I − γK` at every grid point.
pub fn sweep_gamma(sys: &PinnedSystem, grid: &GainGrid) -> Result<SweepResult> {
    sweep(grid, |g| {
        Ok(spectral_radius(&eigenvalues(&perron(sys, g))?))
    })
}

/// Spectral radius of the DSR map `P̂(γ, β)` at every β on the grid.
pub fn sweep_beta(sys: &PinnedSystem, gamma: f64, grid: &GainGrid) -> Result<SweepResult> {
    sweep(grid, |b| {
        Ok(spectral_radius(&eigenvalues(&dsr_perron(sys, gamma, b))?))
    })
}

/// DSR gain that critically damps mode `λ` in the continuous approximation:
/// `β* = (1 + 2γλ) − √((1 + 2γλ)² − 1)`. Requires `λ > 0`, `γ > 0`.
pub fn beta_critical(lambda_k: f64, gamma: f64) -> f64 {
    debug_assert!(lambda_k > 0.0 && gamma > 0.0);
    let a = 1.0 + 2.0 * gamma * lambda_k;
    // rationalized to avoid cancellation when γλ is small
    1.0 / (a + (a * a - 1.0).sqrt())
}

/// `T_s ≈ 4 / (γ_t λ_1)` without DSR.
pub fn predict_ts_no_dsr(lambda_k1: f64, gamma_t: f64) -> f64 {
    4.0 / (gamma_t * lambda_k1)
}

/// `T̂_s ≈ 6 √(β* δ_t / (γ_t λ_1))` with critically damped DSR.
pub fn predict_ts_dsr(beta_star: f64, delta_t: f64, gamma_t: f64, lambda_k1: f64) -> f64 {
    6.0 * (beta_star * delta_t / (gamma_t * lambda_k1)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Damping {
    /// Natural frequency, rad/s.
    pub omega: f64,
    pub zeta: f64,
}

/// Natural frequency and damping ratio of mode `λ` under DSR gain `β`.
pub fn damping_of(lambda_k: f64, gamma_t: f64, delta_t: f64, beta: f64) -> Damping {
    let omega = (gamma_t * lambda_k / (beta * delta_t)).sqrt();
    let zeta = (1.0 - beta) / (beta * delta_t) / (2.0 * omega);
    Damping { omega, zeta }
}

/// Gains and predicted settling time of one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignPoint {
    pub gamma: f64,
    pub delta_t: f64,
    pub gamma_t: f64,
    pub beta: Option<f64>,
    pub predicted_ts: f64,
}

impl DesignPoint {
    /// Predicted settling from the slowest mode `lambda_k1`.
    pub fn new(gamma: f64, delta_t: f64, lambda_k1: f64, beta: Option<f64>) -> Self {
        let gamma_t = gamma / delta_t;
        let predicted_ts = match beta {
            Some(b) => predict_ts_dsr(b, delta_t, gamma_t, lambda_k1),
            None => predict_ts_no_dsr(lambda_k1, gamma_t),
        };
        DesignPoint {
            gamma,
            delta_t,
            gamma_t,
            beta,
            predicted_ts,
        }
    }

    /// Critically damps the slowest mode of `spectrum` with `β*`.
    pub fn critical(spectrum: &Spectrum, gamma: f64, delta_t: f64) -> Self {
        let lambda_k1 = spectrum.min_magnitude();
        Self::new(
            gamma,
            delta_t,
            lambda_k1,
            Some(beta_critical(lambda_k1, gamma)),
        )
    }
}
