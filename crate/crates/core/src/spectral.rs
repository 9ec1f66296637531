//! Eigenvalues of dense real matrices.
//!
//! Symmetric inputs (‖A − Aᵀ‖_F < 1e-12) go through cyclic Jacobi and come out
//! exactly real. Everything else is reduced to upper Hessenberg form by
//! Householder reflections and then deflated with the Francis double-shift QR
//! iteration. Shifts are deterministic (including the exceptional shifts), so
//! repeated runs on one platform are bit-identical.

use std::cmp::Ordering;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, Matrix};

/// Default tolerance for deciding that a spectrum is real.
pub const REAL_TOL: f64 = 1e-9;

/// Symmetry threshold on ‖A − Aᵀ‖_F for the Jacobi path.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues of a real square matrix with polar bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<Complex64>,
    magnitudes: Vec<f64>,
    phases: Vec<f64>,
    order: Vec<usize>,
    is_real: bool,
}

impl Spectrum {
    pub fn from_values(values: Vec<Complex64>) -> Self {
        let magnitudes: Vec<f64> = values.iter().map(|v| v.norm()).collect();
        let phases: Vec<f64> = values.iter().map(|v| phase(*v)).collect();
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| {
            magnitudes[a]
                .total_cmp(&magnitudes[b])
                .then(phases[a].total_cmp(&phases[b]))
                .then(a.cmp(&b))
        });
        let is_real = values
            .iter()
            .all(|v| v.im.abs() <= REAL_TOL * v.norm().max(1.0));
        Spectrum {
            values,
            magnitudes,
            phases,
            order,
            is_real,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Eigenvalues in solver order.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    /// Arguments in (−π, π].
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Permutation sorting the values by ascending magnitude.
    pub fn ordered_by_magnitude(&self) -> &[usize] {
        &self.order
    }

    /// True when every imaginary part is below [`REAL_TOL`] (relative).
    pub fn is_real(&self) -> bool {
        self.is_real
    }

    /// Values sorted by ascending magnitude.
    pub fn sorted_by_magnitude(&self) -> Vec<Complex64> {
        self.order.iter().map(|&i| self.values[i]).collect()
    }

    /// Real parts sorted ascending.
    pub fn sorted_real_parts(&self) -> Vec<f64> {
        let mut re: Vec<f64> = self.values.iter().map(|v| v.re).collect();
        re.sort_by(f64::total_cmp);
        re
    }

    pub fn min_magnitude(&self) -> f64 {
        self.order.first().map_or(0.0, |&i| self.magnitudes[i])
    }

    pub fn max_magnitude(&self) -> f64 {
        self.order.last().map_or(0.0, |&i| self.magnitudes[i])
    }
}

fn phase(v: Complex64) -> f64 {
    // atan2 returns −π for (negative, −0.0); fold onto π
    let p = v.im.atan2(v.re);
    if p == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        p
    }
}

/// Largest eigenvalue magnitude.
pub fn spectral_radius(spectrum: &Spectrum) -> f64 {
    spectrum.max_magnitude()
}

/// True iff every `|im| ≤ tol · max(1, |λ|)`.
pub fn is_real_spectrum(spectrum: &Spectrum, tol: f64) -> bool {
    spectrum
        .values()
        .iter()
        .all(|v| v.im.abs() <= tol * v.norm().max(1.0))
}

/// All eigenvalues of `matrix`.
pub fn eigenvalues(matrix: &Matrix) -> Result<Spectrum> {
    if !matrix.is_square() || matrix.nrows() == 0 {
        return Err(Error::InvalidArgument(format!(
            "eigenvalues need a non-empty square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    let n = matrix.nrows();
    // row-major working copy
    let a: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| matrix[(i, j)])
        .collect();
    let values = if asymmetry(matrix) < SYMMETRY_TOL {
        jacobi(a, n)?
            .into_iter()
            .map(|re| Complex64::new(re, 0.0))
            .collect()
    } else {
        general(a, n)?
    };
    Ok(Spectrum::from_values(values))
}

/// Permutes out isolated eigenvalues, then runs Hessenberg + QR on the rest.
fn general(mut a: Vec<f64>, n: usize) -> Result<Vec<Complex64>> {
    let (low, end) = isolate(&mut a, n);
    let mut values: Vec<Complex64> = (0..low)
        .chain(end..n)
        .map(|i| Complex64::new(a[i * n + i], 0.0))
        .collect();
    let m = end - low;
    if m > 0 {
        let mut h: Vec<f64> = (low..end)
            .flat_map(|i| (low..end).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j])
            .collect();
        hessenberg(&mut h, m);
        values.extend(francis_qr(h, m)?);
    }
    Ok(values)
}

/// Symmetric row/column permutations that expose rows and columns with no
/// off-diagonal support in the active block, leaving
///
/// ```text
/// [ T1  X  Y ]
/// [ 0   A  Z ]
/// [ 0   0  T2]
/// ```
///
/// with `T1`, `T2` upper triangular. Returns the active range `low..end` of `A`.
fn isolate(a: &mut [f64], n: usize) -> (usize, usize) {
    let swap = |a: &mut [f64], p: usize, q: usize| {
        if p == q {
            return;
        }
        for j in 0..n {
            a.swap(p * n + j, q * n + j);
        }
        for i in 0..n {
            a.swap(i * n + p, i * n + q);
        }
    };
    let mut low = 0usize;
    let mut end = n;
    while let Some(j) = (low..end)
        .rev()
        .find(|&j| (low..end).all(|c| c == j || a[j * n + c] == 0.0))
    {
        swap(a, j, end - 1);
        end -= 1;
    }
    while let Some(j) = (low..end).find(|&j| (low..end).all(|r| r == j || a[r * n + j] == 0.0)) {
        swap(a, j, low);
        low += 1;
    }
    (low, end)
}

/// Cyclic Jacobi on a symmetric row-major matrix; returns the diagonal.
fn jacobi(mut a: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    let cap = 100 * n;
    let eps = f64::EPSILON;
    for _ in 0..cap {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                if apq == 0.0 || apq.abs() <= 0.5 * eps * (app.abs() + aqq.abs()) {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let new_p = c * akp - s * akq;
                    let new_q = s * akp + c * akq;
                    a[k * n + p] = new_p;
                    a[p * n + k] = new_p;
                    a[k * n + q] = new_q;
                    a[q * n + k] = new_q;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
        if !rotated {
            return Ok((0..n).map(|i| a[i * n + i]).collect());
        }
    }
    let off: f64 = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| a[i * n + j] * a[i * n + j])
        .sum();
    Err(Error::NoConvergence {
        iterations: cap,
        residual: off.sqrt(),
    })
}

/// Householder reduction to upper Hessenberg form, in place.
fn hessenberg(h: &mut [f64], n: usize) {
    if n < 3 {
        return;
    }
    let mut ort = vec![0.0; n];
    let high = n - 1;
    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| h[i * n + m - 1].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[i * n + m - 1] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;
        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h[i * n + j];
            }
            f /= hh;
            for i in m..=high {
                h[i * n + j] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h[i * n + j];
            }
            f /= hh;
            for j in m..=high {
                h[i * n + j] -= f * ort[j];
            }
        }
        h[m * n + m - 1] = scale * g;
        for i in (m + 1)..n {
            h[i * n + m - 1] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only).
fn francis_qr(mut h: Vec<f64>, nn: usize) -> Result<Vec<Complex64>> {
    let idx = |i: usize, j: usize| i * nn + j;
    let eps = f64::EPSILON;
    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];
    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[idx(i, j)].abs();
        }
    }

    let cap = 100 * nn;
    let mut total = 0usize;
    let mut n = nn as isize - 1;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut w, mut x, mut y);

    while n >= 0 {
        let nu = n as usize;
        // look for a single small subdiagonal element
        let mut l = n;
        while l > 0 {
            let lu = l as usize;
            s = h[idx(lu - 1, lu - 1)].abs() + h[idx(lu, lu)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[idx(lu, lu - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // one root
            h[idx(nu, nu)] += exshift;
            d[nu] = h[idx(nu, nu)];
            e[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // two roots
            w = h[idx(nu, nu - 1)] * h[idx(nu - 1, nu)];
            p = (h[idx(nu - 1, nu - 1)] - h[idx(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[idx(nu, nu)] += exshift;
            h[idx(nu - 1, nu - 1)] += exshift;
            x = h[idx(nu, nu)];
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = d[nu - 1];
                if z != 0.0 {
                    d[nu] = x - w / z;
                }
                e[nu - 1] = 0.0;
                e[nu] = 0.0;
            } else {
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            total += 1;
            if total > cap {
                return Err(Error::NoConvergence {
                    iterations: cap,
                    residual: h[idx(nu, nu - 1)].abs(),
                });
            }
            // form shift
            x = h[idx(nu, nu)];
            y = 0.0;
            w = 0.0;
            if l < n {
                y = h[idx(nu - 1, nu - 1)];
                w = h[idx(nu, nu - 1)] * h[idx(nu - 1, nu)];
            }
            if iter == 10 {
                // Wilkinson's exceptional shift
                exshift += x;
                for i in 0..=nu {
                    h[idx(i, i)] -= x;
                }
                s = h[idx(nu, nu - 1)].abs() + h[idx(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        h[idx(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;

            // look for two consecutive small subdiagonal elements
            let mut m = n - 2;
            loop {
                let mu = m as usize;
                z = h[idx(mu, mu)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[idx(mu + 1, mu)] + h[idx(mu, mu + 1)];
                q = h[idx(mu + 1, mu + 1)] - z - r - s;
                r = h[idx(mu + 2, mu + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[idx(mu, mu - 1)].abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs()
                            * (h[idx(mu - 1, mu - 1)].abs()
                                + z.abs()
                                + h[idx(mu + 1, mu + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            let mu = m as usize;
            for i in (mu + 2)..=nu {
                h[idx(i, i - 2)] = 0.0;
                if i > mu + 2 {
                    h[idx(i, i - 3)] = 0.0;
                }
            }

            // double QR step on rows l..=n and columns m..=n
            let mut k = mu;
            while k < nu {
                let notlast = k != nu - 1;
                if k != mu {
                    p = h[idx(k, k - 1)];
                    q = h[idx(k + 1, k - 1)];
                    r = if notlast { h[idx(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != mu {
                        h[idx(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[idx(k, k - 1)] = -h[idx(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    // row modification
                    for j in k..nn {
                        p = h[idx(k, j)] + q * h[idx(k + 1, j)];
                        if notlast {
                            p += r * h[idx(k + 2, j)];
                            h[idx(k + 2, j)] -= p * z;
                        }
                        h[idx(k, j)] -= p * x;
                        h[idx(k + 1, j)] -= p * y;
                    }
                    // column modification
                    for i in 0..=nu.min(k + 3) {
                        p = x * h[idx(i, k)] + y * h[idx(i, k + 1)];
                        if notlast {
                            p += z * h[idx(i, k + 2)];
                            h[idx(i, k + 2)] -= p * r;
                        }
                        h[idx(i, k)] -= p;
                        h[idx(i, k + 1)] -= p * q;
                    }
                }
                k += 1;
            }
        }
    }

    Ok(d.into_iter()
        .zip(e)
        .map(|(re, im)| Complex64::new(re, im))
        .collect())
}

/// Orders eigenvalue lists for multiset comparison.
pub fn sort_complex(values: &mut [Complex64]) {
    values.sort_by(|a, b| match a.re.total_cmp(&b.re) {
        Ordering::Equal => a.im.total_cmp(&b.im),
        o => o,
    });
}
