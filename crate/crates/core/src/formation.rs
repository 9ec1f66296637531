//! Planar unit-speed agents steered by heading trajectories, and a rigid-motion
//! invariant measure of how far the formation drifts from its initial shape.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::sim::{fmt_sig15, Trajectory};

pub type Point = [f64; 2];

/// `n` points evenly spaced on a circle about the origin, the first at `(r, 0)`.
pub fn init_circle(n: usize, radius: f64) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let a = TAU * i as f64 / n as f64;
            [radius * a.cos(), radius * a.sin()]
        })
        .collect()
}

/// Positions at every heading sample; row 0 is the initial formation.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationTrace {
    delta_t: f64,
    n: usize,
    positions: Vec<Point>,
}

impl FormationTrace {
    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored steps, including the initial one.
    pub fn len(&self) -> usize {
        self.positions.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn initial(&self) -> &[Point] {
        self.at(0)
    }

    pub fn at(&self, k: usize) -> &[Point] {
        &self.positions[k * self.n..(k + 1) * self.n]
    }

    /// CSV with header `t,x_1,y_1,…,x_n,y_n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.n {
            out.push_str(&format!(",x_{i},y_{i}"));
        }
        out.push('\n');
        for k in 0..self.len() {
            out.push_str(&fmt_sig15(k as f64 * self.delta_t));
            for p in self.at(k) {
                out.push(',');
                out.push_str(&fmt_sig15(p[0]));
                out.push(',');
                out.push_str(&fmt_sig15(p[1]));
            }
            out.push('\n');
        }
        out
    }
}

/// `x(k+1) = x(k) + δ_t cos I(k)`, `y(k+1) = y(k) + δ_t sin I(k)`.
pub fn propagate(headings: &Trajectory, initial: &[Point]) -> Result<FormationTrace> {
    let n = headings.n();
    if initial.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} initial positions for {n} agents",
            initial.len()
        )));
    }
    if headings.is_divergent() {
        return Err(Error::InvalidArgument("headings diverged".into()));
    }
    let dt = headings.delta_t();
    let mut positions = Vec::with_capacity(n * headings.len());
    positions.extend_from_slice(initial);
    for k in 0..headings.len() - 1 {
        let base = k * n;
        for (i, &h) in headings.state(k).iter().enumerate() {
            let [x, y] = positions[base + i];
            let (s, c) = h.sin_cos();
            positions.push([x + dt * c, y + dt * s]);
        }
    }
    Ok(FormationTrace {
        delta_t: dt,
        n,
        positions,
    })
}

/// RMS residual of step `at_step` against the best rotation + translation of
/// the initial formation (2-D Procrustes, no scaling).
pub fn distortion(trace: &FormationTrace, at_step: usize) -> Result<f64> {
    if at_step >= trace.len() {
        return Err(Error::InvalidArgument(format!(
            "step {at_step} beyond trace of {} steps",
            trace.len()
        )));
    }
    Ok(procrustes_rms(trace.initial(), trace.at(at_step)))
}

/// Largest deviation of any per-step displacement length from `δ_t`.
pub fn max_speed_error(trace: &FormationTrace) -> f64 {
    let dt = trace.delta_t();
    (1..trace.len())
        .flat_map(|k| trace.at(k).iter().zip(trace.at(k - 1)))
        .map(|(p, q)| ((p[0] - q[0]).hypot(p[1] - q[1]) - dt).abs())
        .fold(0.0, f64::max)
}

fn centroid(p: &[Point]) -> Point {
    let n = p.len() as f64;
    let (sx, sy) = p.iter().fold((0.0, 0.0), |(x, y), q| (x + q[0], y + q[1]));
    [sx / n, sy / n]
}

/// Residual after rotating and translating `a` onto `b`.
pub fn procrustes_rms(a: &[Point], b: &[Point]) -> f64 {
    let (ca, cb) = (centroid(a), centroid(b));
    let (mut dot, mut cross) = (0.0, 0.0);
    for (p, q) in a.iter().zip(b) {
        let (ax, ay) = (p[0] - ca[0], p[1] - ca[1]);
        let (bx, by) = (q[0] - cb[0], q[1] - cb[1]);
        dot += ax * bx + ay * by;
        cross += ax * by - ay * bx;
    }
    let (s, c) = cross.atan2(dot).sin_cos();
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| {
            let (ax, ay) = (p[0] - ca[0], p[1] - ca[1]);
            let rx = c * ax - s * ay - (q[0] - cb[0]);
            let ry = s * ax + c * ay - (q[1] - cb[1]);
            rx * rx + ry * ry
        })
        .sum();
    (sum / a.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::TrajectoryKind;
    use std::f64::consts::FRAC_PI_2;

    fn constant_headings(n: usize, heading: f64, steps: usize, dt: f64) -> Trajectory {
        Trajectory::new(
            TrajectoryKind::FirstOrder,
            dt,
            n,
            vec![heading; n * (steps + 1)],
            vec![heading; steps + 1],
            false,
        )
        .unwrap()
    }

    #[test]
    fn circle_points() {
        let c = init_circle(4, 1.0);
        let want = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (p, q) in c.iter().zip(want) {
            assert!((p[0] - q[0]).abs() < 1e-15 && (p[1] - q[1]).abs() < 1e-15);
        }
        assert_eq!(init_circle(1, 2.5), vec![[2.5, 0.0]]);
        for p in init_circle(31, 1.0) {
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn straight_line_motion() {
        let init = init_circle(3, 1.0);
        let t = propagate(&constant_headings(3, 0.0, 100, 0.01), &init).unwrap();
        assert_eq!(t.len(), 101);
        for (p, q) in t.at(100).iter().zip(&init) {
            assert!((p[0] - q[0] - 1.0).abs() < 1e-12);
            assert_eq!(p[1], q[1]);
        }
        let t = propagate(&constant_headings(3, FRAC_PI_2, 100, 0.01), &init).unwrap();
        for (p, q) in t.at(100).iter().zip(&init) {
            assert!((p[1] - q[1] - 1.0).abs() < 1e-12);
            assert!((p[0] - q[0]).abs() < 1e-12);
        }
        assert!(distortion(&t, 100).unwrap() < 1e-9);
        assert!(distortion(&t, 101).is_err());
    }

    #[test]
    fn rigid_motion_has_no_distortion() {
        let a = init_circle(7, 1.3);
        let (s, c) = 0.83f64.sin_cos();
        let b: Vec<Point> = a
            .iter()
            .map(|p| [c * p[0] - s * p[1] + 4.0, s * p[0] + c * p[1] - 2.5])
            .collect();
        assert!(procrustes_rms(&a, &b) < 1e-12);
    }

    #[test]
    fn known_distortion() {
        // stretching a square along x by 2: best rotation is identity
        let a = [[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]];
        let b = [[2.0, 1.0], [-2.0, 1.0], [-2.0, -1.0], [2.0, -1.0]];
        assert!((procrustes_rms(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_header() {
        let t = propagate(&constant_headings(2, 0.0, 1, 0.5), &init_circle(2, 1.0)).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv.lines().next().unwrap(), "t,x_1,y_1,x_2,y_2");
        assert_eq!(csv.lines().count(), 3);
    }
}
