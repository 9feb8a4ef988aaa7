//! Brute-force reference computations shared by the integration tests.
//! Written directly from the definitions, without the library's evaluators.

#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use phs::domains::synth::SynthTree;

/// Path quantities of every node of a tree with `φ = η g / π`, in linear space.
pub struct Oracle {
    pub g: Vec<f64>,
    pub pi: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_plus: Vec<f64>,
}

impl Oracle {
    /// `eta(tree, node, g)` gives η for a node with path loss `g`.
    pub fn new(tree: &SynthTree, eta: impl Fn(&SynthTree, usize, f64) -> f64) -> Oracle {
        let n = tree.nodes.len();
        let mut o = Oracle {
            g: vec![0.0; n],
            pi: vec![1.0; n],
            phi: vec![0.0; n],
            phi_plus: vec![0.0; n],
        };
        for i in 0..n {
            let node = &tree.nodes[i];
            let (g0, pi0, plus0) = match node.parent {
                Some(p) => (o.g[p], o.pi[p], o.phi_plus[p]),
                None => (0.0, 1.0, 0.0),
            };
            o.g[i] = g0 + node.loss;
            o.pi[i] = if node.parent.is_some() {
                pi0 * node.cond
            } else {
                1.0
            };
            let e = eta(tree, i, o.g[i]);
            o.phi[i] = if o.pi[i] == 0.0 || e.is_infinite() {
                f64::INFINITY
            } else {
                e * o.g[i] / o.pi[i]
            };
            o.phi_plus[i] = plus0.max(o.phi[i]);
        }
        o
    }

    /// η read from the tree.
    pub fn phs(tree: &SynthTree) -> Oracle {
        Oracle::new(tree, |t, i, _| t.nodes[i].eta)
    }

    /// η = 1 + h/g.
    pub fn phs_h(tree: &SynthTree) -> Oracle {
        Oracle::new(tree, |t, i, g| {
            if g > 0.0 {
                1.0 + t.nodes[i].h / g
            } else {
                1.0 + t.nodes[i].h
            }
        })
    }

    pub fn min_solution_phi_plus(&self, tree: &SynthTree) -> Option<f64> {
        (0..tree.nodes.len())
            .filter(|&i| tree.nodes[i].solution)
            .map(|i| self.phi_plus[i])
            .min_by(f64::total_cmp)
    }

    /// Nodes with `φ⁺ ≤ φ⁺(n)` that have no child in that set.
    pub fn leaves(&self, tree: &SynthTree, n: usize) -> Vec<usize> {
        let t = self.phi_plus[n];
        (0..tree.nodes.len())
            .filter(|&i| {
                self.phi_plus[i] <= t
                    && tree.nodes[i].children.iter().all(|&c| self.phi_plus[c] > t)
            })
            .collect()
    }

    /// `φ⁺(n) Σ_{leaves} π/ĵ⁺` with `π/ĵ⁺ = g/φ⁺`.
    pub fn theorem1_rhs(&self, tree: &SynthTree, n: usize) -> f64 {
        let sum: f64 = self
            .leaves(tree, n)
            .iter()
            .map(|&i| self.g[i] / self.phi_plus[i])
            .sum();
        self.phi_plus[n] * sum
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

pub fn at_most(a: f64, b: f64, tol: f64) -> bool {
    a <= b || (a - b) <= tol * a.abs().max(b.abs())
}

/// Goal distance of every reachable state of the n×n puzzle, keyed by
/// tiles in row-major order with 0 as the blank.
pub fn tile_distances(n: usize) -> HashMap<Vec<u8>, u32> {
    let goal: Vec<u8> = (0..(n * n) as u8).collect();
    let mut dist = HashMap::new();
    dist.insert(goal.clone(), 0);
    let mut queue = VecDeque::from([goal]);
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        let b = s.iter().position(|&t| t == 0).unwrap();
        let (r, c) = (b / n, b % n);
        let mut next = Vec::new();
        if r > 0 {
            next.push(b - n);
        }
        if r + 1 < n {
            next.push(b + n);
        }
        if c > 0 {
            next.push(b - 1);
        }
        if c + 1 < n {
            next.push(b + 1);
        }
        for t in next {
            let mut s2 = s.clone();
            s2.swap(b, t);
            if !dist.contains_key(&s2) {
                dist.insert(s2.clone(), d + 1);
                queue.push_back(s2);
            }
        }
    }
    dist
}

/// Prints one acceptance line and returns the verdict.
pub fn report(id: u32, name: &str, pass: bool, detail: impl AsRef<str>) -> bool {
    println!(
        "criterion {id:>2} {name}: {} | {}",
        if pass { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    pass
}
