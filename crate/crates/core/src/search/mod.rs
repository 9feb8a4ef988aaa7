//! Best-first search over trees induced by a [`Domain`].
//!
//! A search works on three ingredients: the domain (children, solution test,
//! canonical state keys and per-state losses), a [`Guide`] that supplies the
//! policy and heuristic for batches of states, and an
//! [`EvaluatorKind`](crate::evaluators::EvaluatorKind) that turns a node's
//! path quantities into a priority.

mod bfs;
mod frontier;
mod guide;

use std::time::Duration;

pub use bfs::{
    batch_evaluate, bfs_search, bfs_search_safe_pruning, child_log_conditionals, log_sum_exp,
    BestFirstSearch, Evaluated, PendingNode,
};
pub use frontier::Frontier;
pub use guide::{Guidance, Guide, HeuristicGuide, Uninformed};

/// Canonical byte encoding of a state. Equal states must have equal keys.
pub type StateKey = Vec<u8>;

/// One generated child of a state.
#[derive(Clone, Debug, PartialEq)]
pub struct Child<S> {
    /// Index of the action producing the child, in `0..Domain::num_actions()`.
    pub action: usize,
    pub state: S,
    /// Conditional probability fixed by the domain. When `None` the
    /// conditional comes from the guide's policy.
    pub conditional: Option<f64>,
}

impl<S> Child<S> {
    pub fn new(action: usize, state: S) -> Self {
        Child {
            action,
            state,
            conditional: None,
        }
    }

    pub fn with_conditional(action: usize, state: S, p: f64) -> Self {
        Child {
            action,
            state,
            conditional: Some(p),
        }
    }
}

/// A deterministic single-agent problem.
///
/// Every quantity except the path itself must be a function of the state:
/// `loss`, `is_solution`, the set of child states and the fixed conditionals.
pub trait Domain {
    type State: Clone;

    fn initial_state(&self) -> Self::State;

    /// Size of the action space the policy is defined over.
    fn num_actions(&self) -> usize;

    /// Children in a fixed action order.
    fn expand(&self, state: &Self::State) -> Vec<Child<Self::State>>;

    fn is_solution(&self, state: &Self::State) -> bool;

    fn state_key(&self, state: &Self::State) -> StateKey;

    /// Loss incurred when a node with this state is expanded.
    fn loss(&self, _state: &Self::State) -> f64 {
        1.0
    }
}

/// Replays `actions` from the initial state, returning every visited state
/// (initial state first). `None` if some action is not available.
pub fn replay<D: Domain>(domain: &D, actions: &[usize]) -> Option<Vec<D::State>> {
    let mut states = vec![domain.initial_state()];
    for &a in actions {
        let cur = states.last().unwrap();
        let next = domain.expand(cur).into_iter().find(|c| c.action == a)?;
        states.push(next.state);
    }
    Some(states)
}

/// Limits applied to one search. `None` means unlimited.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SearchBudget {
    pub max_expansions: Option<u64>,
    pub max_loss: Option<f64>,
}

impl SearchBudget {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn expansions(n: u64) -> Self {
        SearchBudget {
            max_expansions: Some(n),
            max_loss: None,
        }
    }

    pub fn loss(max: f64) -> Self {
        SearchBudget {
            max_expansions: None,
            max_loss: Some(max),
        }
    }

    /// True if one more expansion with loss `loss` would exceed the budget.
    pub fn would_exceed(&self, expansions: u64, search_loss: f64, loss: f64) -> bool {
        self.max_expansions.is_some_and(|m| expansions + 1 > m)
            || self.max_loss.is_some_and(|m| search_loss + loss > m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SearchStatus {
    Solved,
    BudgetExhausted,
    FrontierEmpty,
}

/// Path quantities of the returned solution node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolutionNode {
    pub depth: usize,
    pub g: f64,
    pub log_pi: f64,
    pub h: f64,
    /// Evaluator value of the node.
    pub eval: f64,
    /// Running maximum of the evaluator along the path.
    pub eval_plus: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub status: SearchStatus,
    pub solution_path: Vec<usize>,
    pub solution_length: usize,
    pub expansions: u64,
    pub generated: u64,
    pub search_loss: f64,
    pub elapsed: Duration,
    pub solution: Option<SolutionNode>,
    /// State keys of expanded nodes in expansion order, when recording.
    pub trace: Vec<StateKey>,
}

impl SearchResult {
    pub fn unsolved(status: SearchStatus) -> Self {
        SearchResult {
            status,
            solution_path: Vec::new(),
            solution_length: 0,
            expansions: 0,
            generated: 0,
            search_loss: 0.0,
            elapsed: Duration::ZERO,
            solution: None,
            trace: Vec::new(),
        }
    }

    pub fn solved(&self) -> bool {
        self.status == SearchStatus::Solved
    }

    /// Equality on everything except wall time.
    pub fn same_outcome(&self, other: &SearchResult) -> bool {
        self.status == other.status
            && self.solution_path == other.solution_path
            && self.expansions == other.expansions
            && self.generated == other.generated
            && self.search_loss.to_bits() == other.search_loss.to_bits()
            && self.solution == other.solution
            && self.trace == other.trace
    }
}

/// How repeated states are handled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pruning {
    /// Every extracted node is expanded.
    None,
    /// A node is skipped when its state was expanded before.
    Plain,
    /// A node is skipped only when a previous node at the same state had
    /// both a lower-or-equal value and a higher-or-equal probability.
    Safe,
}

/// When `is_solution` is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolutionTest {
    /// On extraction from the frontier; the node incurs its loss first.
    AtExtraction,
    /// As soon as a child is generated; the child incurs no loss.
    AtGeneration,
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub budget: SearchBudget,
    pub batch_size: usize,
    pub pruning: Pruning,
    pub solution_test: SolutionTest,
    pub record_trace: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            budget: SearchBudget::unlimited(),
            batch_size: 1,
            pruning: Pruning::Plain,
            solution_test: SolutionTest::AtExtraction,
            record_trace: false,
        }
    }
}

impl SearchConfig {
    pub fn with_budget(mut self, budget: SearchBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn with_pruning(mut self, pruning: Pruning) -> Self {
        self.pruning = pruning;
        self
    }

    pub fn with_solution_test(mut self, test: SolutionTest) -> Self {
        self.solution_test = test;
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_trace = true;
        self
    }
}
