//! Safe state pruning against the unpruned search and the exhaustive oracle.

use super::{check_returned_min, check_theorem1, oracle_min_phi_plus, BoundReport, TreeQuantities};
use crate::domains::synth::{SynthTree, TreeGuide};
use crate::evaluators::EvaluatorKind;
use crate::search::{BestFirstSearch, Pruning, SearchConfig, SearchResult};
use crate::Result;

fn run(tree: &SynthTree, kind: EvaluatorKind, pruning: Pruning) -> Result<SearchResult> {
    BestFirstSearch::new(SearchConfig::default().with_pruning(pruning)).run(tree, &TreeGuide, kind)
}

/// Reports, in order: the pruned run's `φ⁺` equals the oracle minimum, the
/// pruned and unpruned runs return equal `φ⁺`, and the first bound holds
/// for the pruned run. The tree must have at least one solution.
pub fn check_safe_pruning(
    tree: &SynthTree,
    kind: EvaluatorKind,
    instance: &str,
) -> Result<Vec<BoundReport>> {
    let q = TreeQuantities::compute(tree, kind)?;
    oracle_min_phi_plus(tree, &q)?;
    let pruned = run(tree, kind, Pruning::Safe)?;
    let plain = run(tree, kind, Pruning::None)?;
    let phi = |r: &SearchResult| r.solution.as_ref().map_or(f64::NAN, |s| s.eval_plus);
    let mut out = vec![check_returned_min(tree, &q, &pruned, instance)];
    let mut same = BoundReport::equal_log(
        "pruned_equals_unpruned",
        instance,
        phi(&pruned),
        phi(&plain),
    );
    if !pruned.solved() || !plain.solved() {
        same.pass = false;
        same.note = "a run did not find a solution".into();
    }
    out.push(same.with_note(format!(
        "expansions {} vs {}",
        pruned.expansions, plain.expansions
    )));
    out.push(check_theorem1(tree, &q, &pruned, instance));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::synth::{build_aliased_tree, AliasSpec};

    #[test]
    fn aliased_trees_pass() {
        let mut checked = 0;
        for seed in 0..20 {
            let tree = build_aliased_tree(&AliasSpec::default(), seed).unwrap();
            if tree.solutions().next().is_none() {
                continue;
            }
            for r in check_safe_pruning(&tree, EvaluatorKind::Phs, &seed.to_string()).unwrap() {
                assert!(r.pass, "{r:?}");
            }
            checked += 1;
        }
        assert!(checked > 10);
    }
}
