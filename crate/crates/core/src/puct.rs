//! PUCT baseline: a Monte-Carlo tree whose leaves are collected in batches
//! using virtual loss and evaluated by the guide's heuristic and policy.
//!
//! Values are costs to go, so selection minimizes
//! `h̄(child) − c·π(child|n)·√(Σ N)/(1 + N(child))` where `h̄` is the
//! child's value plus its virtual loss, min-max normalized over the whole
//! tree. Every node that is evaluated counts as one expansion, including the
//! root, and the search stops as soon as a solution node is generated.

use std::collections::HashSet;
use std::str::FromStr;
use std::time::Instant;

use crate::search::{
    child_log_conditionals, Domain, Guide, SearchBudget, SearchResult, SearchStatus, SolutionNode,
    StateKey,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backup {
    /// Running mean of backed-up values.
    Mean,
    /// Minimum backed-up value.
    Min,
}

impl FromStr for Backup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Backup::Mean),
            "min" => Ok(Backup::Min),
            _ => Err(Error::config(format!(
                "unknown backup {s:?}; expected mean or min"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PuctConfig {
    pub c: f64,
    pub batch_size: usize,
    pub budget: SearchBudget,
    pub backup: Backup,
    /// Value backed up for repeated states and dead ends. Defaults to the
    /// budget's loss limit, then its expansion limit.
    pub l_max: Option<f64>,
    /// Record the state key of every evaluated node in creation order.
    pub record_trace: bool,
}

impl Default for PuctConfig {
    fn default() -> Self {
        PuctConfig {
            c: 1.0,
            batch_size: 32,
            budget: SearchBudget::unlimited(),
            backup: Backup::Mean,
            l_max: None,
            record_trace: false,
        }
    }
}

impl PuctConfig {
    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_budget(mut self, budget: SearchBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn with_backup(mut self, backup: Backup) -> Self {
        self.backup = backup;
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_trace = true;
        self
    }
}

/// Selection score of one child.
pub fn puct_score(hbar: f64, prior: f64, sum_visits: u64, visits: u64, c: f64) -> f64 {
    hbar - c * prior * (sum_visits as f64).sqrt() / (1.0 + visits as f64)
}

/// Index of the child with minimum score; ties go to the lowest index.
pub fn puct_select(hbars: &[f64], priors: &[f64], visits: &[u64], c: f64) -> usize {
    let sum: u64 = visits.iter().sum();
    let mut best = 0;
    let mut best_score = f64::INFINITY;
    for i in 0..hbars.len() {
        let s = puct_score(hbars[i], priors[i], sum, visits[i], c);
        if s < best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

/// Min-max range of every value observed in the tree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValueNormalizer {
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for ValueNormalizer {
    fn default() -> Self {
        ValueNormalizer {
            h_min: f64::INFINITY,
            h_max: f64::NEG_INFINITY,
        }
    }
}

impl ValueNormalizer {
    pub fn observe(&mut self, v: f64) {
        self.h_min = self.h_min.min(v);
        self.h_max = self.h_max.max(v);
    }

    /// `(v − h_min)/(h_max − h_min)`, or 0 when the range is empty.
    pub fn normalize(&self, v: f64) -> f64 {
        let range = self.h_max - self.h_min;
        if range > 0.0 && range.is_finite() {
            (v - self.h_min) / range
        } else {
            0.0
        }
    }
}

/// Search result plus tree diagnostics.
#[derive(Clone, Debug)]
pub struct PuctOutcome {
    pub result: SearchResult,
    /// Total virtual loss in the tree after each batch flush.
    pub virtual_loss_after_flush: Vec<f64>,
    /// Visits of the root at the end.
    pub root_visits: u64,
    /// Completed descents, including those stopped by a repeated state.
    pub descents: u64,
    pub normalizer: ValueNormalizer,
}

struct MNode<S> {
    state: S,
    key: StateKey,
    parent: Option<usize>,
    action: usize,
    depth: usize,
    loss: f64,
    g: f64,
    log_pi: f64,
    h: f64,
    log_probs: Option<Vec<f64>>,
    children: Option<Vec<usize>>,
    prior: f64,
    visits: u64,
    value_sum: f64,
    value_min: f64,
    virtual_loss: f64,
    pending: bool,
    dead: bool,
}

enum Descent {
    Leaf(Vec<usize>),
    /// The last node repeats a state already on the path.
    Repeat(Vec<usize>),
    /// Reached a leaf already collected in this batch.
    Pending,
    /// Some node had no live child; it is now dead.
    Dead,
}

struct Tree<'a, D: Domain, G: ?Sized> {
    domain: &'a D,
    guide: &'a G,
    cfg: &'a PuctConfig,
    nodes: Vec<MNode<D::State>>,
    norm: ValueNormalizer,
    expansions: u64,
    generated: u64,
    search_loss: f64,
    vl_log: Vec<f64>,
    descents: u64,
    trace: Vec<StateKey>,
}

enum Stop {
    Solved(usize),
    Exhausted,
}

impl<'a, D, G> Tree<'a, D, G>
where
    D: Domain,
    G: Guide<D> + ?Sized,
{
    fn q(&self, i: usize) -> f64 {
        let n = &self.nodes[i];
        match (n.visits, self.cfg.backup) {
            (0, _) => n.h,
            (v, Backup::Mean) => n.value_sum / v as f64,
            (_, Backup::Min) => n.value_min,
        }
    }

    fn l_max(&self) -> f64 {
        let b = &self.cfg.budget;
        self.cfg
            .l_max
            .or(b.max_loss)
            .or(b.max_expansions.map(|m| m as f64))
            .unwrap_or_else(|| self.norm.h_max.max(1.0))
    }

    /// Creates a node without evaluating it; fails if the budget forbids.
    fn create(
        &mut self,
        state: D::State,
        parent: Option<usize>,
        action: usize,
        log_cond: f64,
    ) -> Option<usize> {
        let loss = self.domain.loss(&state);
        if self
            .cfg
            .budget
            .would_exceed(self.expansions, self.search_loss, loss)
        {
            return None;
        }
        self.expansions += 1;
        self.search_loss += loss;
        let (depth, g, log_pi) = match parent {
            Some(p) => {
                let pn = &self.nodes[p];
                (pn.depth + 1, pn.g + loss, pn.log_pi + log_cond)
            }
            None => (0, loss, 0.0),
        };
        if parent.is_some() {
            self.generated += 1;
        }
        let key = self.domain.state_key(&state);
        if self.cfg.record_trace {
            self.trace.push(key.clone());
        }
        self.nodes.push(MNode {
            state,
            key,
            parent,
            action,
            depth,
            loss,
            g,
            log_pi,
            h: 0.0,
            log_probs: None,
            children: None,
            prior: log_cond.exp(),
            visits: 0,
            value_sum: 0.0,
            value_min: f64::INFINITY,
            virtual_loss: 0.0,
            pending: false,
            dead: false,
        });
        Some(self.nodes.len() - 1)
    }

    fn evaluate(&mut self, ids: &[usize]) {
        if ids.is_empty() {
            return;
        }
        let states: Vec<&D::State> = ids.iter().map(|&i| &self.nodes[i].state).collect();
        let out = self.guide.guide(self.domain, &states);
        for (&i, g) in ids.iter().zip(out) {
            let h = if g.h.is_nan() { 0.0 } else { g.h.max(0.0) };
            self.nodes[i].h = h;
            self.nodes[i].log_probs = g.log_probs;
            self.norm.observe(h);
        }
    }

    fn select(&self, i: usize) -> Option<usize> {
        let kids = self.nodes[i].children.as_ref()?;
        let sum: u64 = kids.iter().map(|&c| self.nodes[c].visits).sum();
        let mut best = None;
        let mut best_score = f64::INFINITY;
        for &c in kids {
            let n = &self.nodes[c];
            if n.dead {
                continue;
            }
            let hbar = self.norm.normalize(self.q(c) + n.virtual_loss);
            let s = puct_score(hbar, n.prior, sum, n.visits, self.cfg.c);
            if best.is_none() || s < best_score {
                best = Some(c);
                best_score = s;
            }
        }
        best
    }

    fn descend(&mut self) -> Descent {
        let mut path = vec![0];
        let mut keys: HashSet<StateKey> = HashSet::new();
        keys.insert(self.nodes[0].key.clone());
        loop {
            let cur = *path.last().unwrap();
            if self.nodes[cur].children.is_none() {
                return if self.nodes[cur].pending {
                    Descent::Pending
                } else {
                    Descent::Leaf(path)
                };
            }
            let Some(child) = self.select(cur) else {
                self.nodes[cur].dead = true;
                return Descent::Dead;
            };
            path.push(child);
            if !keys.insert(self.nodes[child].key.clone()) {
                return Descent::Repeat(path);
            }
        }
    }

    fn backup(&mut self, path: &[usize], mut v: f64) {
        for &i in path.iter().rev() {
            let n = &mut self.nodes[i];
            n.visits += 1;
            n.value_sum += v;
            n.value_min = n.value_min.min(v);
            let (q, loss) = (self.q(i), self.nodes[i].loss);
            self.norm.observe(q);
            v += loss;
        }
        self.descents += 1;
    }

    fn set_virtual_loss(&mut self, path: &[usize], delta: f64) {
        for &i in path {
            self.nodes[i].virtual_loss += delta;
        }
    }

    fn total_virtual_loss(&self) -> f64 {
        self.nodes.iter().map(|n| n.virtual_loss).sum()
    }

    /// `None` when the tree has no live leaf left.
    fn run(&mut self) -> Option<Stop> {
        let root = self.domain.initial_state();
        let Some(r) = self.create(root, None, 0, 0.0) else {
            return Some(Stop::Exhausted);
        };
        self.evaluate(&[r]);
        if self.domain.is_solution(&self.nodes[r].state) {
            return Some(Stop::Solved(r));
        }
        loop {
            let l_max = self.l_max();
            let mut leaves: Vec<Vec<usize>> = Vec::new();
            for _ in 0..self.cfg.batch_size.max(1) {
                if self.nodes[0].dead {
                    break;
                }
                match self.descend() {
                    Descent::Leaf(path) => {
                        self.set_virtual_loss(&path, 1.0);
                        self.nodes[*path.last().unwrap()].pending = true;
                        leaves.push(path);
                    }
                    Descent::Pending => break,
                    Descent::Repeat(path) => {
                        self.nodes[*path.last().unwrap()].dead = true;
                        self.backup(&path, l_max);
                    }
                    Descent::Dead => {}
                }
            }
            if leaves.is_empty() {
                if self.nodes[0].dead {
                    return None;
                }
                continue;
            }

            let mut created = Vec::new();
            let mut exhausted = false;
            'leaves: for path in &leaves {
                let leaf = *path.last().unwrap();
                let kids = self.domain.expand(&self.nodes[leaf].state);
                let log_conds =
                    child_log_conditionals(self.nodes[leaf].log_probs.as_deref(), &kids);
                let mut ids = Vec::with_capacity(kids.len());
                for (c, lc) in kids.into_iter().zip(log_conds) {
                    match self.create(c.state, Some(leaf), c.action, lc) {
                        Some(id) => {
                            ids.push(id);
                            created.push(id);
                        }
                        None => {
                            exhausted = true;
                            self.nodes[leaf].children = Some(ids);
                            break 'leaves;
                        }
                    }
                }
                self.nodes[leaf].children = Some(ids);
            }
            self.evaluate(&created);
            if let Some(&s) = created
                .iter()
                .find(|&&i| self.domain.is_solution(&self.nodes[i].state))
            {
                return Some(Stop::Solved(s));
            }
            if exhausted {
                return Some(Stop::Exhausted);
            }

            for path in &leaves {
                let leaf = *path.last().unwrap();
                let kids = self.nodes[leaf].children.clone().unwrap_or_default();
                let v = if kids.is_empty() {
                    self.nodes[leaf].dead = true;
                    l_max
                } else {
                    kids.iter()
                        .map(|&c| self.nodes[c].loss + self.nodes[c].h)
                        .fold(f64::INFINITY, f64::min)
                };
                self.set_virtual_loss(path, -1.0);
                self.nodes[leaf].pending = false;
                self.backup(path, v);
            }
            self.vl_log.push(self.total_virtual_loss());
        }
    }

    fn finish(
        &self,
        status: SearchStatus,
        solution: Option<usize>,
        start: Instant,
    ) -> SearchResult {
        let mut result = SearchResult::unsolved(status);
        result.expansions = self.expansions;
        result.generated = self.generated;
        result.search_loss = self.search_loss;
        result.trace = self.trace.clone();
        if let Some(s) = solution {
            let mut path = Vec::new();
            let mut cur = s;
            while let Some(p) = self.nodes[cur].parent {
                path.push(self.nodes[cur].action);
                cur = p;
            }
            path.reverse();
            let n = &self.nodes[s];
            result.solution_length = path.len();
            result.solution_path = path;
            result.solution = Some(SolutionNode {
                depth: n.depth,
                g: n.g,
                log_pi: n.log_pi,
                h: n.h,
                eval: n.h,
                eval_plus: n.h,
            });
        }
        result.elapsed = start.elapsed();
        result
    }
}

pub fn puct_search<D, G>(domain: &D, guide: &G, cfg: &PuctConfig) -> Result<PuctOutcome>
where
    D: Domain,
    G: Guide<D> + ?Sized,
{
    if cfg.batch_size == 0 {
        return Err(Error::config("batch size must be at least 1"));
    }
    if !(cfg.c >= 0.0) {
        return Err(Error::config(format!(
            "PUCT constant {} must be nonnegative",
            cfg.c
        )));
    }
    let start = Instant::now();
    let mut tree = Tree {
        domain,
        guide,
        cfg,
        nodes: Vec::new(),
        norm: ValueNormalizer::default(),
        expansions: 0,
        generated: 0,
        search_loss: 0.0,
        vl_log: Vec::new(),
        descents: 0,
        trace: Vec::new(),
    };
    let stop = tree.run();
    let result = match stop {
        Some(Stop::Solved(s)) => tree.finish(SearchStatus::Solved, Some(s), start),
        Some(Stop::Exhausted) => tree.finish(SearchStatus::BudgetExhausted, None, start),
        None => tree.finish(SearchStatus::FrontierEmpty, None, start),
    };
    Ok(PuctOutcome {
        result,
        virtual_loss_after_flush: tree.vl_log,
        root_visits: tree.nodes.first().map_or(0, |n| n.visits),
        descents: tree.descents,
        normalizer: tree.norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::synth::{SynthTree, TreeGuide};

    #[test]
    fn selection_examples() {
        assert_eq!(puct_select(&[0.5, 0.5], &[0.9, 0.1], &[0, 0], 1.0), 0);
        assert_eq!(puct_select(&[0.8, 0.2], &[0.5, 0.5], &[0, 0], 1.0), 1);
        assert_eq!(puct_select(&[0.5, 0.5], &[0.1, 0.9], &[2, 2], 1.0), 1);
        assert_eq!(puct_select(&[0.5, 0.5], &[0.9, 0.1], &[2, 2], 1.0), 0);
    }

    #[test]
    fn normalizer_degenerate_range() {
        let mut n = ValueNormalizer::default();
        n.observe(3.0);
        assert_eq!(n.normalize(3.0), 0.0);
        n.observe(5.0);
        assert_eq!(n.normalize(4.0), 0.5);
    }

    fn chain(len: usize) -> SynthTree {
        let mut t = SynthTree::uniform(1, len - 1);
        let last = t.len() - 1;
        t.nodes[last].solution = true;
        t
    }

    #[test]
    fn chain_of_three() {
        let out = puct_search(&chain(3), &TreeGuide, &PuctConfig::default()).unwrap();
        assert_eq!(out.result.status, SearchStatus::Solved);
        assert_eq!(out.result.expansions, 3);
        assert_eq!(out.result.solution_path, vec![0, 0]);
    }

    #[test]
    fn zero_budget() {
        let cfg = PuctConfig::default().with_budget(SearchBudget::expansions(0));
        let out = puct_search(&chain(3), &TreeGuide, &cfg).unwrap();
        assert_eq!(out.result.status, SearchStatus::BudgetExhausted);
        assert_eq!(out.result.expansions, 0);
    }

    #[test]
    fn no_solution_drains() {
        let t = SynthTree::uniform(2, 3);
        let out = puct_search(&t, &TreeGuide, &PuctConfig::default()).unwrap();
        assert_eq!(out.result.status, SearchStatus::FrontierEmpty);
        assert_eq!(out.result.expansions, 15);
        assert!(out.virtual_loss_after_flush.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backup_strings() {
        assert_eq!("mean".parse::<Backup>().unwrap(), Backup::Mean);
        assert_eq!("min".parse::<Backup>().unwrap(), Backup::Min);
        assert!("max".parse::<Backup>().is_err());
    }
}
