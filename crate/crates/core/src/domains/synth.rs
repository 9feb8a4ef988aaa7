//! Explicit finite trees with stored policy, losses, heuristic factors and
//! solutions. Used as exact test instances for the bounds.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::search::{Child, Domain, Guidance, Guide, StateKey};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthNode {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Position among the parent's children, used as the action index.
    pub action: usize,
    pub depth: usize,
    /// Conditional probability given the parent (1 at the root).
    pub cond: f64,
    pub loss: f64,
    pub eta: f64,
    pub h: f64,
    pub solution: bool,
    /// Canonical state; equal ids are treated as the same state.
    pub state: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthTree {
    pub nodes: Vec<SynthNode>,
}

/// How child conditionals are drawn.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolicySpec {
    Uniform,
    /// Random weights normalized to sum to 1.
    Random,
    /// Random weights normalized to the given total mass (< 1 is improper).
    Mass(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaSpec {
    One,
    Uniform(f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub max_depth: usize,
    /// Inclusive range of the number of children of internal nodes.
    pub branching: (usize, usize),
    pub max_nodes: usize,
    pub policy: PolicySpec,
    /// Reject policies whose conditionals do not sum to 1.
    pub proper: bool,
    /// Inclusive range of per-node losses.
    pub loss: (f64, f64),
    pub eta: EtaSpec,
    pub solution_prob: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            max_depth: 8,
            branching: (1, 3),
            max_nodes: 10_000,
            policy: PolicySpec::Random,
            proper: true,
            loss: (1.0, 1.0),
            eta: EtaSpec::One,
            solution_prob: 0.02,
        }
    }
}

/// Parameters of a state-aliased tree: a layered graph of states unfolded
/// into a tree, so several nodes share a state while every quantity except
/// the path loss depends on the state only.
#[derive(Clone, Debug, PartialEq)]
pub struct AliasSpec {
    pub layers: usize,
    pub width: usize,
    pub branching: (usize, usize),
    pub loss: (f64, f64),
    pub eta: EtaSpec,
    pub solution_prob: f64,
    pub max_nodes: usize,
}

impl Default for AliasSpec {
    fn default() -> Self {
        AliasSpec {
            layers: 6,
            width: 4,
            branching: (1, 3),
            loss: (0.0, 2.0),
            eta: EtaSpec::Uniform(1.0, 4.0),
            solution_prob: 0.15,
            max_nodes: 10_000,
        }
    }
}

fn sample_range(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

fn sample_eta(rng: &mut ChaCha8Rng, spec: EtaSpec) -> f64 {
    match spec {
        EtaSpec::One => 1.0,
        EtaSpec::Uniform(lo, hi) => sample_range(rng, (lo, hi)),
    }
}

fn sample_conditionals(rng: &mut ChaCha8Rng, policy: PolicySpec, k: usize) -> Vec<f64> {
    match policy {
        PolicySpec::Uniform => vec![1.0 / k as f64; k],
        PolicySpec::Random | PolicySpec::Mass(_) => {
            let mass = if let PolicySpec::Mass(m) = policy {
                m
            } else {
                1.0
            };
            let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| mass * x / total).collect()
        }
    }
}

impl SynthTree {
    fn root(loss: f64, eta: f64) -> SynthNode {
        SynthNode {
            parent: None,
            children: Vec::new(),
            action: 0,
            depth: 0,
            cond: 1.0,
            loss,
            eta,
            h: 0.0,
            solution: false,
            state: 0,
        }
    }

    fn push_child(&mut self, parent: usize, cond: f64, loss: f64, eta: f64) -> usize {
        let id = self.nodes.len();
        let action = self.nodes[parent].children.len();
        let depth = self.nodes[parent].depth + 1;
        self.nodes.push(SynthNode {
            parent: Some(parent),
            children: Vec::new(),
            action,
            depth,
            cond,
            loss,
            eta,
            h: 0.0,
            solution: false,
            state: id,
        });
        self.nodes[parent].children.push(id);
        id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Complete tree with `branching` children per internal node, uniform
    /// policy, unit losses and no solution.
    pub fn uniform(branching: usize, depth: usize) -> SynthTree {
        let mut tree = SynthTree {
            nodes: vec![Self::root(1.0, 1.0)],
        };
        let mut frontier = vec![0];
        for _ in 0..depth {
            let mut next = Vec::new();
            for &n in &frontier {
                for _ in 0..branching {
                    next.push(tree.push_child(n, 1.0 / branching as f64, 1.0, 1.0));
                }
            }
            frontier = next;
        }
        tree
    }

    /// Binary uniform-policy tree of the given depth with one solution at a
    /// random leaf; η is 1 on the root-to-solution path and infinite
    /// elsewhere. Returns the tree and the solution node.
    pub fn example_one(depth: usize, seed: u64) -> (SynthTree, usize) {
        let mut tree = Self::uniform(2, depth);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut node = 0;
        while !tree.nodes[node].children.is_empty() {
            node = tree.nodes[node].children[rng.gen_range(0..2)];
        }
        tree.nodes[node].solution = true;
        for n in tree.nodes.iter_mut() {
            n.eta = f64::INFINITY;
        }
        for n in tree.path_to(node) {
            tree.nodes[n].eta = 1.0;
        }
        (tree, node)
    }

    /// Root with one chain per entry of `conds`, each `chain_len` nodes long.
    /// Chain node `j` of branch `i` is `1 + i * chain_len + (j - 1)`. No
    /// node is a solution.
    pub fn chains(conds: &[f64], chain_len: usize, root_loss: f64, chain_loss: f64) -> SynthTree {
        let mut tree = SynthTree {
            nodes: vec![Self::root(root_loss, 1.0)],
        };
        for &p in conds {
            let mut cur = tree.push_child(0, p, chain_loss, 1.0);
            for _ in 1..chain_len {
                cur = tree.push_child(cur, 1.0, chain_loss, 1.0);
            }
        }
        tree
    }

    /// Branch index and position (1-based) of a chain node built by [`chains`](Self::chains).
    pub fn chain_position(node: usize, chain_len: usize) -> Option<(usize, usize)> {
        (node > 0).then(|| ((node - 1) / chain_len, (node - 1) % chain_len + 1))
    }

    /// Unfolds `domain` from its initial state down to `max_depth`, keeping
    /// children accepted by `keep(parent_state, child_state)`. Conditionals
    /// are uniform over kept children; h = 0, η = 1.
    pub fn unfold<D, F>(
        domain: &D,
        max_depth: usize,
        max_nodes: usize,
        keep: F,
    ) -> Result<(SynthTree, Vec<D::State>)>
    where
        D: Domain,
        F: Fn(Option<&D::State>, &D::State) -> bool,
    {
        let root = domain.initial_state();
        let mut ids: HashMap<StateKey, usize> = HashMap::new();
        let mut alias = |s: &D::State| {
            let k = domain.state_key(s);
            let next = ids.len();
            *ids.entry(k).or_insert(next)
        };
        let mut tree = SynthTree {
            nodes: vec![Self::root(domain.loss(&root), 1.0)],
        };
        tree.nodes[0].solution = domain.is_solution(&root);
        tree.nodes[0].state = alias(&root);
        let mut states = vec![root];
        let mut i = 0;
        while i < tree.nodes.len() {
            if tree.nodes[i].depth < max_depth && !tree.nodes[i].solution {
                let grand = tree.nodes[i].parent.map(|p| states[p].clone());
                let kids: Vec<_> = domain
                    .expand(&states[i])
                    .into_iter()
                    .filter(|c| keep(grand.as_ref(), &c.state))
                    .collect();
                let k = kids.len();
                for c in kids {
                    if tree.nodes.len() >= max_nodes {
                        return Err(Error::config(format!(
                            "unfolded tree exceeds {max_nodes} nodes"
                        )));
                    }
                    let id = tree.push_child(i, 1.0 / k as f64, domain.loss(&c.state), 1.0);
                    tree.nodes[id].solution = domain.is_solution(&c.state);
                    tree.nodes[id].state = alias(&c.state);
                    states.push(c.state);
                }
            }
            i += 1;
        }
        Ok((tree, states))
    }

    /// Node ids from the root to `node`, inclusive.
    pub fn path_to(&self, node: usize) -> Vec<usize> {
        let mut path = vec![node];
        let mut cur = node;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Action sequence from the root to `node`.
    pub fn actions_to(&self, node: usize) -> Vec<usize> {
        self.path_to(node)[1..]
            .iter()
            .map(|&n| self.nodes[n].action)
            .collect()
    }

    /// Node reached by following `actions` from the root.
    pub fn follow(&self, actions: &[usize]) -> Option<usize> {
        let mut cur = 0;
        for &a in actions {
            cur = *self.nodes[cur].children.get(a)?;
        }
        Some(cur)
    }

    pub fn solutions(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].solution)
    }

    /// True if the children's conditionals sum to 1 at every internal node.
    pub fn is_proper(&self) -> bool {
        self.nodes.iter().all(|n| {
            n.children.is_empty()
                || (n.children.iter().map(|&c| self.nodes[c].cond).sum::<f64>() - 1.0).abs() < 1e-9
        })
    }
}

/// Random tree from `spec`, reproducible from `seed`.
pub fn build_synth_tree(spec: &SynthSpec, seed: u64) -> Result<SynthTree> {
    if let PolicySpec::Mass(m) = spec.policy {
        if spec.proper && (m - 1.0).abs() > 1e-12 {
            return Err(Error::config(format!(
                "proper policy requested with mass {m}"
            )));
        }
        if !(0.0..=1.0).contains(&m) {
            return Err(Error::config(format!("policy mass {m} outside [0, 1]")));
        }
    }
    let (bmin, bmax) = spec.branching;
    if bmin == 0 || bmin > bmax {
        return Err(Error::config(format!(
            "bad branching range {:?}",
            spec.branching
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root_loss = sample_range(&mut rng, spec.loss);
    let root_eta = sample_eta(&mut rng, spec.eta);
    let mut tree = SynthTree {
        nodes: vec![SynthTree::root(root_loss, root_eta)],
    };
    let mut i = 0;
    while i < tree.nodes.len() {
        if tree.nodes[i].depth < spec.max_depth {
            let k = rng.gen_range(bmin..=bmax);
            if tree.nodes.len() + k > spec.max_nodes {
                break;
            }
            let conds = sample_conditionals(&mut rng, spec.policy, k);
            for cond in conds {
                let loss = sample_range(&mut rng, spec.loss);
                let eta = sample_eta(&mut rng, spec.eta);
                tree.push_child(i, cond, loss, eta);
            }
        }
        i += 1;
    }
    for n in 1..tree.nodes.len() {
        tree.nodes[n].solution = rng.gen_bool(spec.solution_prob.clamp(0.0, 1.0));
    }
    if tree.solutions().next().is_none() {
        let n = if tree.nodes.len() > 1 {
            rng.gen_range(1..tree.nodes.len())
        } else {
            0
        };
        tree.nodes[n].solution = true;
    }
    Ok(tree)
}

/// Random state-aliased tree from `spec`, reproducible from `seed`.
pub fn build_aliased_tree(spec: &AliasSpec, seed: u64) -> Result<SynthTree> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (bmin, bmax) = spec.branching;
    if bmin == 0 || bmin > bmax || spec.width == 0 || spec.layers == 0 {
        return Err(Error::config("bad aliased tree spec"));
    }

    // Layered state graph; edges go one or two layers down.
    let mut layers: Vec<Vec<usize>> = vec![vec![0]];
    let mut n_states = 1;
    for _ in 0..spec.layers {
        let w = rng.gen_range(1..=spec.width);
        layers.push((n_states..n_states + w).collect());
        n_states += w;
    }
    struct StateInfo {
        children: Vec<(usize, f64)>,
        loss: f64,
        eta: f64,
        solution: bool,
    }
    let mut info: Vec<StateInfo> = (0..n_states)
        .map(|s| StateInfo {
            children: Vec::new(),
            loss: sample_range(&mut rng, spec.loss),
            eta: sample_eta(&mut rng, spec.eta),
            solution: s != 0 && rng.gen_bool(spec.solution_prob),
        })
        .collect();
    for l in 0..spec.layers {
        let mut candidates: Vec<usize> = layers[l + 1].clone();
        if l + 2 <= spec.layers {
            candidates.extend(&layers[l + 2]);
        }
        for &s in &layers[l] {
            if info[s].solution {
                continue;
            }
            let k = rng.gen_range(bmin..=bmax).min(candidates.len());
            let mut pool = candidates.clone();
            let mut chosen = Vec::with_capacity(k);
            for _ in 0..k {
                chosen.push(pool.swap_remove(rng.gen_range(0..pool.len())));
            }
            let conds = sample_conditionals(&mut rng, PolicySpec::Random, k);
            info[s].children = chosen.into_iter().zip(conds).collect();
        }
    }

    let mut tree = SynthTree {
        nodes: vec![SynthTree::root(info[0].loss, info[0].eta)],
    };
    let mut i = 0;
    while i < tree.nodes.len() {
        let s = tree.nodes[i].state;
        for &(cs, cond) in &info[s].children {
            if tree.nodes.len() >= spec.max_nodes {
                return Err(Error::config(format!(
                    "aliased tree exceeds {} nodes",
                    spec.max_nodes
                )));
            }
            let id = tree.push_child(i, cond, info[cs].loss, info[cs].eta);
            tree.nodes[id].state = cs;
            tree.nodes[id].solution = info[cs].solution;
        }
        i += 1;
    }
    if tree.solutions().next().is_none() {
        // Mark the state of some deepest node as a solution everywhere.
        let deepest = (0..tree.nodes.len())
            .max_by_key(|&n| tree.nodes[n].depth)
            .unwrap();
        let s = tree.nodes[deepest].state;
        for n in tree.nodes.iter_mut().filter(|n| n.state == s) {
            n.solution = true;
        }
    }
    Ok(tree)
}

impl Domain for SynthTree {
    type State = usize;

    fn initial_state(&self) -> usize {
        0
    }

    fn num_actions(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.children.len())
            .max()
            .unwrap_or(0)
            .max(1)
    }

    fn expand(&self, &state: &usize) -> Vec<Child<usize>> {
        self.nodes[state]
            .children
            .iter()
            .map(|&c| Child::with_conditional(self.nodes[c].action, c, self.nodes[c].cond))
            .collect()
    }

    fn is_solution(&self, &state: &usize) -> bool {
        self.nodes[state].solution
    }

    fn state_key(&self, &state: &usize) -> StateKey {
        (self.nodes[state].state as u64).to_le_bytes().to_vec()
    }

    fn loss(&self, &state: &usize) -> f64 {
        self.nodes[state].loss
    }
}

/// Reads the stored `h` and η of each tree node.
#[derive(Clone, Copy, Debug, Default)]
pub struct TreeGuide;

impl Guide<SynthTree> for TreeGuide {
    fn guide(&self, tree: &SynthTree, states: &[&usize]) -> Vec<Guidance> {
        states
            .iter()
            .map(|&&s| Guidance {
                log_probs: None,
                h: tree.nodes[s].h,
                eta: tree.nodes[s].eta,
            })
            .collect()
    }
}
