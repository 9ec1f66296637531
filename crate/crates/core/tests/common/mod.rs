#![allow(dead_code)]

use dsrnet::graph::{GraphSpec, PinnedSystem};
use dsrnet::linalg::Matrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random source-connected graph with `agents` followers.
///
/// Every follower listens to an earlier node of a random order rooted at the
/// source, then `extra` more edges are added. With `symmetric`, every
/// follower-to-follower edge is mirrored with the same weight so `K` is
/// symmetric. The source slot is drawn at random to exercise relabeling.
pub fn random_graph(seed: u64, agents: usize, extra: usize, symmetric: bool) -> GraphSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = agents + 1;
    let source = rng.random_range(1..=nodes);
    let mut followers: Vec<usize> = (1..=nodes).filter(|&v| v != source).collect();
    followers.shuffle(&mut rng);

    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let push = |edges: &mut Vec<(usize, usize, f64)>, from: usize, to: usize, w: f64| {
        if from != to && !edges.iter().any(|e| e.0 == from && e.1 == to) {
            edges.push((from, to, w));
            if symmetric && from != source && to != source {
                edges.push((to, from, w));
            }
        }
    };
    let mut reached = vec![source];
    for &f in &followers {
        let from = reached[rng.random_range(0..reached.len())];
        let w = rng.random_range(0.2..3.0);
        push(&mut edges, from, f, w);
        reached.push(f);
    }
    for _ in 0..extra {
        let from = rng.random_range(1..=nodes);
        let to = followers[rng.random_range(0..followers.len())];
        let w = rng.random_range(0.2..3.0);
        push(&mut edges, from, to, w);
    }
    GraphSpec::new(nodes, source, &edges, None).expect("generated graph is valid")
}

pub fn random_system(seed: u64, agents: usize, extra: usize, symmetric: bool) -> PinnedSystem {
    PinnedSystem::from_spec(&random_graph(seed, agents, extra, symmetric)).unwrap()
}

/// Eigenvalues from nalgebra's Schur decomposition, used as an oracle.
pub fn reference_eigenvalues(m: &Matrix) -> Vec<Complex64> {
    m.clone().complex_eigenvalues().iter().cloned().collect()
}

/// Largest distance in a greedy nearest-neighbour matching of two multisets.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Characteristic polynomial coefficients `c[0] + c[1] x + … + x^n` by
/// Faddeev–LeVerrier.
pub fn char_poly(a: &Matrix) -> Vec<f64> {
    let n = a.nrows();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = Matrix::zeros(n, n);
    for k in 1..=n {
        let mut next = a * &m;
        for i in 0..n {
            next[(i, i)] += c[n - k + 1];
        }
        m = next;
        c[n - k] = -(a * &m).trace() / k as f64;
    }
    c
}

pub fn poly_eval(c: &[f64], z: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &ck| acc * z + ck)
}
