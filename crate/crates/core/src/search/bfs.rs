use std::collections::{HashMap, HashSet};
use std::time::Instant;

use super::{
    Child, Domain, Frontier, Guidance, Guide, Pruning, SearchBudget, SearchConfig, SearchResult,
    SearchStatus, SolutionNode, SolutionTest, StateKey,
};
use crate::evaluators::{EvalContext, EvaluatorKind};
use crate::{Error, Result};

/// A generated node waiting for its model outputs.
#[derive(Clone, Debug)]
pub struct PendingNode<S> {
    pub state: S,
    pub parent: Option<usize>,
    pub action: usize,
    pub depth: usize,
    pub g: f64,
    pub log_pi: f64,
    pub parent_eval_plus: f64,
}

/// Output of [`batch_evaluate`] for one pending node.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluated {
    pub eval: f64,
    pub eval_plus: f64,
    pub h: f64,
    pub guidance: Guidance,
}

/// Queries the guide once for the whole batch and evaluates every node.
///
/// Each output depends only on its own node, so splitting or permuting a
/// batch permutes the outputs accordingly.
pub fn batch_evaluate<D, G>(
    domain: &D,
    guide: &G,
    evaluator: EvaluatorKind,
    pending: &[PendingNode<D::State>],
) -> Vec<Evaluated>
where
    D: Domain,
    G: Guide<D> + ?Sized,
{
    let states: Vec<&D::State> = pending.iter().map(|p| &p.state).collect();
    let guidance = guide.guide(domain, &states);
    debug_assert_eq!(guidance.len(), pending.len());
    pending
        .iter()
        .zip(guidance)
        .map(|(p, guidance)| {
            let ctx = EvalContext::new(p.g, p.depth, p.log_pi, guidance.h)
                .with_eta(guidance.eta)
                .with_parent_eval_plus(p.parent_eval_plus);
            let (eval, eval_plus) = evaluator.evaluate(&ctx);
            Evaluated {
                eval,
                eval_plus,
                h: ctx.h,
                guidance,
            }
        })
        .collect()
}

/// Log conditional probabilities of `children` given the parent's policy.
///
/// Domain-fixed conditionals are used as is. The remaining children share
/// the policy mass renormalized over their actions, so actions that are not
/// generated are masked out. Without a policy they are uniform.
pub fn child_log_conditionals<S>(log_probs: Option<&[f64]>, children: &[Child<S>]) -> Vec<f64> {
    let free: Vec<usize> = children
        .iter()
        .filter(|c| c.conditional.is_none())
        .map(|c| c.action)
        .collect();
    let norm = match log_probs {
        Some(lp) if !free.is_empty() => log_sum_exp(free.iter().map(|&a| lp[a])),
        _ => 0.0,
    };
    children
        .iter()
        .map(|c| match (c.conditional, log_probs) {
            (Some(p), _) => p.ln(),
            (None, Some(lp)) => {
                if norm == f64::NEG_INFINITY {
                    -(free.len() as f64).ln()
                } else {
                    lp[c.action] - norm
                }
            }
            (None, None) => -(free.len() as f64).ln(),
        })
        .collect()
}

pub fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

struct Node<S> {
    state: S,
    parent: Option<usize>,
    action: usize,
    depth: usize,
    g: f64,
    log_pi: f64,
    h: f64,
    eval: f64,
    eval_plus: f64,
    log_probs: Option<Vec<f64>>,
}

enum Visited {
    None,
    Plain(HashSet<StateKey>),
    // state -> (log φ, log π) of the node that last raised π for the state
    Safe(HashMap<StateKey, (f64, f64)>),
}

/// Best-first search with configurable pruning, batching and
/// solution-test timing.
#[derive(Clone, Debug, Default)]
pub struct BestFirstSearch {
    pub config: SearchConfig,
}

impl BestFirstSearch {
    pub fn new(config: SearchConfig) -> Self {
        BestFirstSearch { config }
    }

    pub fn run<D, G>(&self, domain: &D, guide: &G, evaluator: EvaluatorKind) -> Result<SearchResult>
    where
        D: Domain,
        G: Guide<D> + ?Sized,
    {
        let cfg = &self.config;
        if cfg.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        evaluator.validate()?;
        if cfg.pruning == Pruning::Safe && !evaluator.is_policy_guided() {
            return Err(Error::config(format!(
                "safe state pruning needs an evaluator of the form η·g/π, got {evaluator}"
            )));
        }
        Ok(Run::new(domain, guide, evaluator, cfg).search())
    }
}

struct Run<'a, D: Domain, G: ?Sized> {
    domain: &'a D,
    guide: &'a G,
    evaluator: EvaluatorKind,
    cfg: &'a SearchConfig,
    nodes: Vec<Node<D::State>>,
    frontier: Frontier,
    pending: Vec<PendingNode<D::State>>,
    visited: Visited,
    expansions: u64,
    generated: u64,
    search_loss: f64,
    trace: Vec<StateKey>,
    started: Instant,
}

impl<'a, D, G> Run<'a, D, G>
where
    D: Domain,
    G: Guide<D> + ?Sized,
{
    fn new(domain: &'a D, guide: &'a G, evaluator: EvaluatorKind, cfg: &'a SearchConfig) -> Self {
        let visited = match cfg.pruning {
            Pruning::None => Visited::None,
            Pruning::Plain => Visited::Plain(HashSet::new()),
            Pruning::Safe => Visited::Safe(HashMap::new()),
        };
        Run {
            domain,
            guide,
            evaluator,
            cfg,
            nodes: Vec::new(),
            frontier: Frontier::new(),
            pending: Vec::new(),
            visited,
            expansions: 0,
            generated: 0,
            search_loss: 0.0,
            trace: Vec::new(),
            started: Instant::now(),
        }
    }

    fn search(mut self) -> SearchResult {
        let root = self.domain.initial_state();
        let g = self.domain.loss(&root);
        self.pending.push(PendingNode {
            state: root,
            parent: None,
            action: 0,
            depth: 0,
            g,
            log_pi: 0.0,
            parent_eval_plus: f64::NEG_INFINITY,
        });
        self.flush();

        loop {
            let Some((idx, _)) = self.frontier.pop() else {
                if self.pending.is_empty() {
                    return self.finish(SearchStatus::FrontierEmpty, None);
                }
                self.flush();
                continue;
            };

            let key = self.domain.state_key(&self.nodes[idx].state);
            if self.should_prune(&key, idx) {
                continue;
            }

            let loss = self.domain.loss(&self.nodes[idx].state);
            if self
                .cfg
                .budget
                .would_exceed(self.expansions, self.search_loss, loss)
            {
                return self.finish(SearchStatus::BudgetExhausted, None);
            }
            self.expansions += 1;
            self.search_loss += loss;
            if self.cfg.record_trace {
                self.trace.push(key);
            }

            if self.cfg.solution_test == SolutionTest::AtExtraction
                && self.domain.is_solution(&self.nodes[idx].state)
            {
                return self.finish(SearchStatus::Solved, Some(idx));
            }

            if let Some(found) = self.expand(idx) {
                return self.finish(SearchStatus::Solved, Some(found));
            }

            if self.pending.len() >= self.cfg.batch_size || self.frontier.is_empty() {
                self.flush();
            }
        }
    }

    fn should_prune(&mut self, key: &StateKey, idx: usize) -> bool {
        match &mut self.visited {
            Visited::None => false,
            Visited::Plain(seen) => !seen.insert(key.clone()),
            Visited::Safe(table) => {
                let node = &self.nodes[idx];
                let (phi_s, log_pi_s) = table
                    .get(key)
                    .copied()
                    .unwrap_or((f64::INFINITY, f64::NEG_INFINITY));
                if phi_s <= node.eval && log_pi_s >= node.log_pi {
                    return true;
                }
                if log_pi_s <= node.log_pi {
                    table.insert(key.clone(), (node.eval, node.log_pi));
                }
                false
            }
        }
    }

    /// Generates the children of `idx` into the pending batch. Returns the
    /// index of a solution child when testing at generation.
    fn expand(&mut self, idx: usize) -> Option<usize> {
        let children = self.domain.expand(&self.nodes[idx].state);
        self.generated += children.len() as u64;
        let parent = &self.nodes[idx];
        let log_conds = child_log_conditionals(parent.log_probs.as_deref(), &children);
        let (depth, g, log_pi, eval_plus) =
            (parent.depth + 1, parent.g, parent.log_pi, parent.eval_plus);

        for (child, log_cond) in children.into_iter().zip(log_conds) {
            let pending = PendingNode {
                g: g + self.domain.loss(&child.state),
                state: child.state,
                parent: Some(idx),
                action: child.action,
                depth,
                log_pi: log_pi + log_cond,
                parent_eval_plus: eval_plus,
            };
            if self.cfg.solution_test == SolutionTest::AtGeneration
                && self.domain.is_solution(&pending.state)
            {
                let evaluated = batch_evaluate(
                    self.domain,
                    self.guide,
                    self.evaluator,
                    std::slice::from_ref(&pending),
                );
                return Some(self.insert_node(pending, evaluated.into_iter().next().unwrap()));
            }
            self.pending.push(pending);
        }
        None
    }

    fn flush(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        let pending = std::mem::take(&mut self.pending);
        let evaluated = batch_evaluate(self.domain, self.guide, self.evaluator, &pending);
        for (p, e) in pending.into_iter().zip(evaluated) {
            let (eval, g) = (e.eval, p.g);
            let idx = self.insert_node(p, e);
            self.frontier.push(idx, eval, g);
        }
    }

    fn insert_node(&mut self, p: PendingNode<D::State>, e: Evaluated) -> usize {
        self.nodes.push(Node {
            state: p.state,
            parent: p.parent,
            action: p.action,
            depth: p.depth,
            g: p.g,
            log_pi: p.log_pi,
            h: e.h,
            eval: e.eval,
            eval_plus: e.eval_plus,
            log_probs: e.guidance.log_probs,
        });
        self.nodes.len() - 1
    }

    fn finish(self, status: SearchStatus, solution: Option<usize>) -> SearchResult {
        let mut result = SearchResult::unsolved(status);
        if let Some(idx) = solution {
            let mut path = Vec::new();
            let mut cur = idx;
            while let Some(parent) = self.nodes[cur].parent {
                path.push(self.nodes[cur].action);
                cur = parent;
            }
            path.reverse();
            let n = &self.nodes[idx];
            result.solution_length = n.depth;
            result.solution = Some(SolutionNode {
                depth: n.depth,
                g: n.g,
                log_pi: n.log_pi,
                h: n.h,
                eval: n.eval,
                eval_plus: n.eval_plus,
            });
            result.solution_path = path;
        }
        result.expansions = self.expansions;
        result.generated = self.generated;
        result.search_loss = self.search_loss;
        result.trace = self.trace;
        result.elapsed = self.started.elapsed();
        result
    }
}

/// Best-first search with plain state pruning.
pub fn bfs_search<D, G>(
    domain: &D,
    guide: &G,
    evaluator: EvaluatorKind,
    budget: SearchBudget,
    batch_size: usize,
) -> Result<SearchResult>
where
    D: Domain,
    G: Guide<D> + ?Sized,
{
    let config = SearchConfig::default()
        .with_budget(budget)
        .with_batch_size(batch_size)
        .with_pruning(Pruning::Plain);
    BestFirstSearch::new(config).run(domain, guide, evaluator)
}

/// Best-first search with safe state pruning; needs a policy-guided evaluator.
pub fn bfs_search_safe_pruning<D, G>(
    domain: &D,
    guide: &G,
    evaluator: EvaluatorKind,
    budget: SearchBudget,
    batch_size: usize,
) -> Result<SearchResult>
where
    D: Domain,
    G: Guide<D> + ?Sized,
{
    let config = SearchConfig::default()
        .with_budget(budget)
        .with_batch_size(batch_size)
        .with_pruning(Pruning::Safe);
    BestFirstSearch::new(config).run(domain, guide, evaluator)
}
