//! Converting an A*-admissible heuristic into a PHS-admissible `η_h`.

use super::{TreeQuantities, EPS};
use crate::domains::stp::{ExactDistances, SlidingTile, StpState};
use crate::domains::synth::SynthTree;
use crate::evaluators::EvaluatorKind;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    pub nodes: usize,
    /// `g(n) + h(n) ≤ g(n*)` for every descendant solution.
    pub h_admissible: bool,
    /// `φ_h(n) ≤ φ_h(n*)` for every descendant solution, and `η_h(n*) = 1`.
    pub eta_admissible: bool,
    /// Nodes violating the η condition.
    pub violations: usize,
}

/// Minimum loss from each node down to a solution below it, excluding the
/// node's own loss; infinite when no solution is below.
pub fn exact_solution_costs(tree: &SynthTree) -> Vec<f64> {
    let mut cost = vec![f64::INFINITY; tree.len()];
    for i in (0..tree.len()).rev() {
        let node = &tree.nodes[i];
        if node.solution {
            cost[i] = 0.0;
            continue;
        }
        for &c in &node.children {
            cost[i] = cost[i].min(tree.nodes[c].loss + cost[c]);
        }
    }
    cost
}

/// Checks both admissibility notions exhaustively, with `h` taken from the
/// tree's nodes.
pub fn check_admissibility_conversion(tree: &SynthTree) -> Result<AdmissibilityReport> {
    let cost = exact_solution_costs(tree);
    let h_admissible = tree
        .nodes
        .iter()
        .zip(&cost)
        .all(|(n, &c)| n.h <= c + EPS * c.max(1.0) || c.is_infinite());

    let q = TreeQuantities::compute(tree, EvaluatorKind::PhsH)?;
    // Minimum φ_h over solutions in each subtree.
    let mut min_below = vec![f64::INFINITY; tree.len()];
    let mut violations = 0;
    for i in (0..tree.len()).rev() {
        let node = &tree.nodes[i];
        if node.solution {
            min_below[i] = q.log_phi[i];
            if (q.eta[i] - 1.0).abs() > EPS {
                violations += 1;
            }
        }
        for &c in &node.children {
            min_below[i] = min_below[i].min(min_below[c]);
        }
        if q.log_phi[i] > min_below[i] + EPS {
            violations += 1;
        }
    }
    Ok(AdmissibilityReport {
        nodes: tree.len(),
        h_admissible,
        eta_admissible: violations == 0,
        violations,
    })
}

/// Sliding-tile tree from `start` truncated at `depth`, never undoing the
/// previous move, with `h` set to `scale` times the exact goal distance.
/// With `peak = Some(p)` the moves that reduce the distance share mass `p`;
/// otherwise the policy is uniform.
pub fn stp_truncated_tree(
    start: &StpState,
    depth: usize,
    exact: &ExactDistances,
    scale: f64,
    peak: Option<f64>,
    max_nodes: usize,
) -> Result<SynthTree> {
    let domain = SlidingTile::new(start.clone());
    let (mut tree, states) = SynthTree::unfold(&domain, depth, max_nodes, |grand, child| {
        grand != Some(child)
    })?;
    let dist: Vec<f64> = states
        .iter()
        .map(|s| {
            exact
                .get(s)
                .map(f64::from)
                .ok_or_else(|| Error::config("unsolvable start state"))
        })
        .collect::<Result<_>>()?;
    for (node, d) in tree.nodes.iter_mut().zip(&dist) {
        node.h = scale * d;
    }
    if let Some(p) = peak {
        for i in 0..tree.len() {
            let kids = tree.nodes[i].children.clone();
            let good: Vec<bool> = kids.iter().map(|&c| dist[c] < dist[i]).collect();
            let k_good = good.iter().filter(|&&g| g).count();
            let k_bad = kids.len() - k_good;
            if k_good == 0 || k_bad == 0 {
                continue;
            }
            for (&c, &g) in kids.iter().zip(&good) {
                tree.nodes[c].cond = if g {
                    p / k_good as f64
                } else {
                    (1.0 - p) / k_bad as f64
                };
            }
        }
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_heuristic_is_admissible() {
        let (mut tree, _) = SynthTree::example_one(4, 2);
        for n in tree.nodes.iter_mut() {
            n.eta = 1.0;
            n.h = 0.0;
        }
        let r = check_admissibility_conversion(&tree).unwrap();
        assert!(r.h_admissible && r.eta_admissible, "{r:?}");
    }

    #[test]
    fn solution_costs_exclude_own_loss() {
        let (tree, sol) = SynthTree::example_one(3, 5);
        let c = exact_solution_costs(&tree);
        assert_eq!(c[sol], 0.0);
        assert_eq!(c[0], 3.0);
    }
}
