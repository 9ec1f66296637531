//! Gain bounds and one-step maps of the plain and DSR consensus recursions.
//!
//! Plain update: `I(k+1) = P I(k) + γ B I_s(k)` with `P = I − γK`.
//! DSR update over the stacked state `[I(k−1); I(k)]`:
//!
//! ```text
//! P̂ = [  0     I     ]
//!     [ −βI   βI + P ]
//! ```
//!
//! For a real spectrum of `K` every eigenvalue `λ` contributes the two roots of
//! `z² + (γλ − β − 1) z + β = 0` to the spectrum of `P̂`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::PinnedSystem;
use crate::linalg::Matrix;
use crate::spectral::{eigenvalues, is_real_spectrum, spectral_radius, Spectrum, REAL_TOL};

/// Radii within this distance of 1 are flagged as marginal.
pub const MARGINAL_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    GeneralComplex,
    RealSpectrum,
}

/// Open interval `(lower, upper)` of stabilizing update gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainBound {
    pub lower: f64,
    pub upper: f64,
    pub kind: BoundKind,
    /// Position, in ascending-magnitude order, of the eigenvalue attaining the bound.
    pub binding_index: usize,
}

impl GainBound {
    pub fn contains(&self, gamma: f64) -> bool {
        gamma > self.lower && gamma < self.upper
    }
}

/// Open interval `(beta_lower, beta_upper)` of stabilizing DSR gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsrGainRange {
    pub beta_lower: f64,
    pub beta_upper: f64,
}

impl DsrGainRange {
    pub fn contains(&self, beta: f64) -> bool {
        beta > self.beta_lower && beta < self.beta_upper
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub gamma: f64,
    pub beta: Option<f64>,
    pub spectral_radius: f64,
    /// Strict `spectral_radius < 1`.
    pub stable: bool,
    /// Radius within [`MARGINAL_BAND`] of 1.
    pub marginal: bool,
    pub eigenvalues: Spectrum,
}

/// `P = I − γK`.
pub fn perron(sys: &PinnedSystem, gamma: f64) -> Matrix {
    let n = sys.n();
    Matrix::identity(n, n) - &sys.k * gamma
}

/// `min_i 2 cos(φ_i) / m_i` over the spectrum of `K`.
pub fn gamma_bound_general(spectrum: &Spectrum) -> Result<GainBound> {
    let mut best: Option<(usize, f64)> = None;
    for (pos, &i) in spectrum.ordered_by_magnitude().iter().enumerate() {
        let v = spectrum.values()[i];
        if v.re <= 0.0 {
            return Err(Error::NotSourceConnected {
                index: pos,
                real_part: v.re,
            });
        }
        let bound = 2.0 * spectrum.phases()[i].cos() / spectrum.magnitudes()[i];
        if best.is_none_or(|(_, b)| bound < b) {
            best = Some((pos, bound));
        }
    }
    let (binding_index, upper) =
        best.ok_or_else(|| Error::InvalidArgument("empty spectrum".into()))?;
    Ok(GainBound {
        lower: 0.0,
        upper,
        kind: BoundKind::GeneralComplex,
        binding_index,
    })
}

/// `2 / λ_max` for a real, positive spectrum of `K`.
pub fn gamma_bound_real(spectrum: &Spectrum) -> Result<GainBound> {
    ensure_real_positive(spectrum)?;
    let order = spectrum.ordered_by_magnitude();
    let last = order.len() - 1;
    let lambda_max = spectrum.values()[order[last]].re;
    // ties broken toward the smallest position
    let binding_index = order
        .iter()
        .position(|&i| spectrum.values()[i].re == lambda_max)
        .unwrap_or(last);
    Ok(GainBound {
        lower: 0.0,
        upper: 2.0 / lambda_max,
        kind: BoundKind::RealSpectrum,
        binding_index,
    })
}

fn ensure_real_positive(spectrum: &Spectrum) -> Result<()> {
    if spectrum.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    if !is_real_spectrum(spectrum, REAL_TOL) {
        let max_imag = spectrum
            .values()
            .iter()
            .map(|v| v.im.abs())
            .fold(0.0, f64::max);
        return Err(Error::NonRealSpectrum { max_imag });
    }
    for (pos, &i) in spectrum.ordered_by_magnitude().iter().enumerate() {
        let re = spectrum.values()[i].re;
        if re <= 0.0 {
            return Err(Error::NotSourceConnected {
                index: pos,
                real_part: re,
            });
        }
    }
    Ok(())
}

/// The `2n × 2n` DSR one-step map over `[I(k−1); I(k)]`.
pub fn dsr_perron(sys: &PinnedSystem, gamma: f64, beta: f64) -> Matrix {
    let n = sys.n();
    let p = perron(sys, gamma);
    let mut m = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, n + i)] = 1.0;
        m[(n + i, i)] = -beta;
        for j in 0..n {
            m[(n + i, n + j)] = p[(i, j)];
        }
        m[(n + i, n + i)] += beta;
    }
    m
}

/// `(−(1 − γλ_max/2), 1)`; requires `0 < γ < 2/λ_max`.
pub fn dsr_beta_range_real(spectrum: &Spectrum, gamma: f64) -> Result<DsrGainRange> {
    let bound = gamma_bound_real(spectrum)?;
    if !bound.contains(gamma) {
        return Err(Error::GainOutOfRange {
            gamma,
            upper: bound.upper,
        });
    }
    let lambda_max = 2.0 / bound.upper;
    Ok(DsrGainRange {
        beta_lower: -(1.0 - 0.5 * gamma * lambda_max),
        beta_upper: 1.0,
    })
}

/// Both roots of `z² + (γλ − β − 1) z + β = 0`, larger magnitude first for real pairs.
pub fn dsr_quadratic_roots(lambda_k: f64, gamma: f64, beta: f64) -> [Complex64; 2] {
    let b = gamma * lambda_k - beta - 1.0;
    let c = beta;
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        // cancellation-free form
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        }
        [Complex64::new(q, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -0.5 * b;
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// Jury necessary condition on the DSR characteristic polynomial: `|β| < 1`.
pub fn jury_necessary(beta: f64) -> bool {
    beta.abs() < 1.0
}

/// Builds `P` (or `P̂` when `beta` is given), its spectrum and the verdict.
pub fn assess(sys: &PinnedSystem, gamma: f64, beta: Option<f64>) -> Result<StabilityReport> {
    let m = match beta {
        Some(b) => dsr_perron(sys, gamma, b),
        None => perron(sys, gamma),
    };
    let spectrum = eigenvalues(&m)?;
    let radius = spectral_radius(&spectrum);
    Ok(StabilityReport {
        gamma,
        beta,
        spectral_radius: radius,
        stable: radius < 1.0,
        marginal: (radius - 1.0).abs() <= MARGINAL_BAND,
        eigenvalues: spectrum,
    })
}

/// One-step map of the explicitly second-order network
///
/// ```text
/// P̃ = [ I                  δ̃ I              ]
///     [ −γ_t δ̃/(β δ) K    (1 − (1−β) δ̃/(β δ)) I ]
/// ```
///
/// over the stacked state `[I; İ]` with update interval `δ̃`.
pub fn second_order_perron(
    sys: &PinnedSystem,
    gamma_t: f64,
    beta: f64,
    delta_t: f64,
    tilde_delta_t: f64,
) -> Matrix {
    let n = sys.n();
    let stiffness = gamma_t * tilde_delta_t / (beta * delta_t);
    let damping = 1.0 - (1.0 - beta) * tilde_delta_t / (beta * delta_t);
    let mut m = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, i)] = 1.0;
        m[(i, n + i)] = tilde_delta_t;
        m[(n + i, n + i)] = damping;
        for j in 0..n {
            m[(n + i, j)] = -stiffness * sys.k[(i, j)];
        }
    }
    m
}
