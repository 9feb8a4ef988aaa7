mod common;

use phs::domains::synth::{build_synth_tree, EtaSpec, PolicySpec, SynthSpec, SynthTree, TreeGuide};
use phs::evaluators::EvaluatorKind;
use phs::search::{
    bfs_search, bfs_search_safe_pruning, BestFirstSearch, Pruning, SearchBudget, SearchConfig,
    SearchStatus,
};

use common::Oracle;

const POLICY_KINDS: [EvaluatorKind; 4] = [
    EvaluatorKind::LevinTs,
    EvaluatorKind::PhsH,
    EvaluatorKind::PhsStar,
    EvaluatorKind::Phs,
];

fn run(tree: &SynthTree, kind: EvaluatorKind, pruning: Pruning) -> phs::search::SearchResult {
    let cfg = SearchConfig::default().with_pruning(pruning);
    BestFirstSearch::new(cfg)
        .run(tree, &TreeGuide, kind)
        .unwrap()
}

#[test]
fn three_node_chain_takes_three_expansions() {
    let mut tree = SynthTree::chains(&[1.0], 2, 1.0, 1.0);
    tree.nodes[2].solution = true;
    for kind in POLICY_KINDS
        .into_iter()
        .chain([EvaluatorKind::AStar, EvaluatorKind::Gbfs])
    {
        let r = run(&tree, kind, Pruning::Plain);
        assert!(r.solved());
        assert_eq!(r.expansions, 3, "{kind}");
        assert_eq!(r.solution_path, vec![0, 0]);
        assert_eq!(r.search_loss, 3.0);
    }
}

#[test]
fn solution_at_root_takes_one_expansion() {
    let mut tree = SynthTree::uniform(3, 2);
    tree.nodes[0].solution = true;
    let r = run(&tree, EvaluatorKind::LevinTs, Pruning::Plain);
    assert_eq!((r.expansions, r.solution_length), (1, 0));
}

#[test]
fn tree_without_solution_empties_the_frontier() {
    let tree = SynthTree::uniform(2, 3);
    let r = run(&tree, EvaluatorKind::LevinTs, Pruning::Plain);
    assert_eq!(r.status, SearchStatus::FrontierEmpty);
    assert_eq!(r.expansions, tree.len() as u64);
}

#[test]
fn budget_stops_the_search() {
    let tree = SynthTree::uniform(2, 6);
    let r = bfs_search(
        &tree,
        &TreeGuide,
        EvaluatorKind::LevinTs,
        SearchBudget::expansions(10),
        1,
    )
    .unwrap();
    assert_eq!(r.status, SearchStatus::BudgetExhausted);
    assert_eq!(r.expansions, 10);
}

fn random_tree(seed: u64) -> SynthTree {
    let spec = SynthSpec {
        max_depth: 7,
        branching: (1, 3),
        max_nodes: 2000,
        policy: PolicySpec::Random,
        proper: true,
        loss: (0.0, 2.0),
        eta: EtaSpec::Uniform(1.0, 3.0),
        solution_prob: 0.03,
    };
    build_synth_tree(&spec, seed).unwrap()
}

#[test]
fn injective_keys_never_prune() {
    for seed in 0..20 {
        let tree = random_tree(seed);
        for kind in POLICY_KINDS {
            let a = run(&tree, kind, Pruning::None);
            for p in [Pruning::Plain, Pruning::Safe] {
                assert!(
                    a.same_outcome(&run(&tree, kind, p)),
                    "seed {seed} {kind} {p:?}"
                );
            }
        }
    }
}

#[test]
fn batched_search_is_complete_and_deterministic() {
    for seed in 0..10 {
        let tree = random_tree(seed);
        let one = bfs_search(
            &tree,
            &TreeGuide,
            EvaluatorKind::PhsH,
            SearchBudget::unlimited(),
            1,
        )
        .unwrap();
        let many = bfs_search(
            &tree,
            &TreeGuide,
            EvaluatorKind::PhsH,
            SearchBudget::unlimited(),
            32,
        )
        .unwrap();
        let again = bfs_search(
            &tree,
            &TreeGuide,
            EvaluatorKind::PhsH,
            SearchBudget::unlimited(),
            32,
        )
        .unwrap();
        assert_eq!(one.solved(), many.solved(), "seed {seed}");
        assert!(many.same_outcome(&again), "seed {seed}");
        if many.solved() {
            assert!(tree.nodes[tree.follow(&many.solution_path).unwrap()].solution);
        }
    }
}

/// Two equally costly paths reach one state; the less likely visit is
/// dominated and safe pruning drops it.
#[test]
fn safe_pruning_drops_dominated_duplicates() {
    let mut tree = SynthTree::chains(&[0.8, 0.2], 2, 1.0, 1.0);
    // Branch nodes: 1,2 (cond 0.8) and 3,4 (cond 0.2). Alias 2 and 4.
    tree.nodes[4].state = tree.nodes[2].state;
    let safe = bfs_search_safe_pruning(
        &tree,
        &TreeGuide,
        EvaluatorKind::LevinTs,
        SearchBudget::unlimited(),
        1,
    )
    .unwrap();
    let none = run(&tree, EvaluatorKind::LevinTs, Pruning::None);
    assert_eq!(none.expansions, 5);
    assert_eq!(safe.expansions, 4);
}

#[test]
fn safe_pruning_keeps_undominated_duplicates() {
    // The later visit of the shared state is more likely but costlier, so
    // neither visit dominates the other.
    let mut tree = SynthTree::chains(&[0.3, 0.7], 2, 1.0, 1.0);
    tree.nodes[3].loss = 7.0;
    tree.nodes[4].state = tree.nodes[2].state;
    let safe = run(&tree, EvaluatorKind::Phs, Pruning::Safe);
    let plain = run(&tree, EvaluatorKind::Phs, Pruning::Plain);
    assert_eq!(safe.expansions, 5);
    assert_eq!(plain.expansions, 4);
}

#[test]
fn returned_solution_attains_the_oracle_minimum() {
    for seed in 0..30 {
        let tree = random_tree(seed);
        let oracle = Oracle::phs(&tree);
        let Some(best) = oracle.min_solution_phi_plus(&tree) else {
            continue;
        };
        let r = run(&tree, EvaluatorKind::Phs, Pruning::None);
        let node = tree.follow(&r.solution_path).unwrap();
        assert!(
            common::rel_close(oracle.phi_plus[node], best, 1e-9),
            "seed {seed}"
        );
    }
}
