//! Random inputs for the verification suite. These build graphs and
//! operators straight from edge lists so that expected values never pass
//! through the code under test.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::graph::Graph;

/// Connected graph on `n` nodes: a random spanning tree plus each remaining
/// pair with probability `p`.
pub fn connected_graph<R: Rng>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut pairs = Vec::new();
    let mut present = vec![vec![false; n]; n];
    for i in 1..n {
        let u = order[i];
        let v = order[rng.random_range(0..i)];
        present[u][v] = true;
        present[v][u] = true;
        pairs.push((u.min(v), u.max(v)));
    }
    for (u, row) in present.iter().enumerate() {
        for (v, &linked) in row.iter().enumerate().skip(u + 1) {
            if !linked && rng.random_bool(p) {
                pairs.push((u, v));
            }
        }
    }
    Graph::unweighted(n, &pairs).expect("generated edges are valid")
}

/// `g` with one extra node attached to a random existing node.
pub fn with_pendant<R: Rng>(g: &Graph, rng: &mut R) -> Graph {
    let mut pairs: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.u, e.v)).collect();
    pairs.push((rng.random_range(0..g.n()), g.n()));
    Graph::unweighted(g.n() + 1, &pairs).expect("generated edges are valid")
}

pub fn cycle_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

pub fn complete_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

pub fn gaussian_vec<R: Rng>(n: usize, rng: &mut R) -> Array1<f64> {
    Array1::from_iter((0..n).map(|_| StandardNormal.sample(rng)))
}

pub fn gaussian_mat<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(rng))
}

pub fn permutation<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

fn dense_adjacency(g: &Graph) -> Array2<f64> {
    let mut a = Array2::zeros((g.n(), g.n()));
    for e in g.edges() {
        a[[e.u, e.v]] += e.weight;
        a[[e.v, e.u]] += e.weight;
    }
    a
}

/// `L = D - A`.
pub fn laplacian(g: &Graph) -> Array2<f64> {
    let a = dense_adjacency(g);
    let mut l = -&a;
    for u in 0..g.n() {
        l[[u, u]] = a.row(u).sum();
    }
    l
}

/// `D̃^ε Ã D̃^ε`.
pub fn base_operator(g: &Graph, eps: f64) -> Array2<f64> {
    let mut a = dense_adjacency(g);
    let n = g.n();
    for u in 0..n {
        a[[u, u]] += 1.0;
    }
    let scale: Vec<f64> = (0..n).map(|u| a.row(u).sum().powf(eps)).collect();
    Array2::from_shape_fn((n, n), |(u, v)| scale[u] * a[[u, v]] * scale[v])
}

/// `S = D̃^-1/2 Ã D̃^-1/2`.
pub fn gcn_operator(g: &Graph) -> Array2<f64> {
    base_operator(g, -0.5)
}

pub fn quad_form(m: &Array2<f64>, f: &Array1<f64>) -> f64 {
    f.dot(&m.dot(f))
}
