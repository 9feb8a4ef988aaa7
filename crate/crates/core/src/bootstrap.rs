//! Bootstrap: repeated budgeted sweeps over a problem set. Training updates
//! the model after every batch of attempts and doubles the budget when an
//! iteration solves nothing new; testing never updates and always doubles.

use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::domains::Encode;
use crate::model::{sample_from_path, Model, ModelGuide, TrainSample};
use crate::search::{Domain, Guide, SearchBudget, SearchResult};
use crate::solver::Solver;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapConfig {
    pub initial_budget: u64,
    pub batch_problems: usize,
    /// Checked between attempts; an attempt is never interrupted.
    pub wall_time: Option<Duration>,
    pub max_iterations: Option<usize>,
    /// Testing stops once the budget would exceed this.
    pub max_budget: Option<u64>,
    /// Worker threads; 1 attempts problems sequentially.
    pub workers: usize,
    /// Adam steps per update pass.
    pub adam_steps: usize,
    /// Guide batch size inside each search.
    pub search_batch: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            initial_budget: 2000,
            batch_problems: 32,
            wall_time: None,
            max_iterations: None,
            max_budget: None,
            workers: 1,
            adam_steps: 1,
            search_batch: 1,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_budget == 0 {
            return Err(Error::config("initial budget must be at least 1"));
        }
        if self.batch_problems == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if self.workers == 0 || self.search_batch == 0 {
            return Err(Error::config("workers and search batch must be at least 1"));
        }
        if self.wall_time.is_none() && self.max_iterations.is_none() && self.max_budget.is_none() {
            return Err(Error::config(
                "no termination: set a wall time, iteration cap or budget cap",
            ));
        }
        Ok(())
    }
}

/// One row of the learning curve.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationLog {
    pub iteration: usize,
    pub budget: u64,
    pub new_solved: usize,
    pub total_solved: usize,
    pub cum_expansions: u64,
    pub cum_seconds: f64,
    /// Update passes performed; always 0 when testing.
    pub updates: usize,
    /// False when the wall time ran out mid-sweep.
    pub complete: bool,
}

pub const ITERATION_CSV_HEADER: &str =
    "iteration,budget,new_solved,total_solved,cum_expansions,cum_seconds";

impl IterationLog {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:.3}",
            self.iteration,
            self.budget,
            self.new_solved,
            self.total_solved,
            self.cum_expansions,
            self.cum_seconds
        )
    }
}

pub fn logs_to_csv(logs: &[IterationLog]) -> String {
    let mut s = String::from(ITERATION_CSV_HEADER);
    s.push('\n');
    for l in logs {
        s.push_str(&l.to_csv());
        s.push('\n');
    }
    s
}

/// Outcome of one attempt.
pub struct Attempt<S> {
    pub result: SearchResult,
    /// Training data; only meaningful for solved attempts.
    pub sample: Option<S>,
}

/// Something that attempts problems against a frozen snapshot and learns
/// from the solved ones.
pub trait Learner<P>: Sync {
    type Sample: Send;

    fn attempt(&self, problem: &P, budget: u64) -> Result<Attempt<Self::Sample>>;

    /// One update pass over the samples of one batch.
    fn update(&mut self, samples: &[Self::Sample]) -> Result<()>;
}

struct Clock {
    start: Instant,
    limit: Option<Duration>,
}

impl Clock {
    fn expired(&self) -> bool {
        self.limit.is_some_and(|l| self.start.elapsed() >= l)
    }
}

fn attempt_all<P, L>(
    learner: &L,
    problems: &[(usize, &P)],
    budget: u64,
    clock: &Clock,
    workers: usize,
) -> Result<Vec<(usize, Attempt<L::Sample>)>>
where
    P: Sync,
    L: Learner<P>,
{
    let one = |&(i, p): &(usize, &P)| -> Option<Result<(usize, Attempt<L::Sample>)>> {
        if clock.expired() {
            return None;
        }
        Some(learner.attempt(p, budget).map(|a| (i, a)))
    };
    if workers <= 1 {
        // Sequential: stop at the first expired check so order is preserved.
        let mut out = Vec::new();
        for job in problems {
            match one(job) {
                Some(r) => out.push(r?),
                None => break,
            }
        }
        return Ok(out);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(e.to_string()))?;
    let results: Vec<_> = pool.install(|| problems.par_iter().map(one).collect());
    results.into_iter().flatten().collect()
}

/// Training Bootstrap. Every iteration attempts all problems in order.
pub fn train<P, L>(
    problems: &[P],
    learner: &mut L,
    cfg: &BootstrapConfig,
) -> Result<Vec<IterationLog>>
where
    P: Sync,
    L: Learner<P>,
{
    cfg.validate()?;
    if problems.is_empty() {
        return Err(Error::config("no training problems"));
    }
    let clock = Clock {
        start: Instant::now(),
        limit: cfg.wall_time,
    };
    let mut ever = vec![false; problems.len()];
    let mut total_solved = 0;
    let mut cum_expansions = 0;
    let mut budget = cfg.initial_budget;
    let mut logs = Vec::new();
    for iteration in 1.. {
        if cfg.max_iterations.is_some_and(|m| iteration > m) || clock.expired() {
            break;
        }
        let mut new_solved = 0;
        let mut updates = 0;
        let mut complete = true;
        let indexed: Vec<(usize, &P)> = problems.iter().enumerate().collect();
        for batch in indexed.chunks(cfg.batch_problems) {
            let attempts = attempt_all(&*learner, batch, budget, &clock, cfg.workers)?;
            if attempts.len() < batch.len() {
                complete = false;
            }
            let mut samples = Vec::new();
            for (i, a) in attempts {
                cum_expansions += a.result.expansions;
                if a.result.solved() {
                    if !ever[i] {
                        ever[i] = true;
                        new_solved += 1;
                        total_solved += 1;
                    }
                    samples.extend(a.sample);
                }
            }
            if !samples.is_empty() {
                learner.update(&samples)?;
                updates += 1;
            }
            if !complete {
                break;
            }
        }
        logs.push(IterationLog {
            iteration,
            budget,
            new_solved,
            total_solved,
            cum_expansions,
            cum_seconds: clock.start.elapsed().as_secs_f64(),
            updates,
            complete,
        });
        if !complete {
            break;
        }
        if new_solved == 0 {
            budget = budget.saturating_mul(2);
        }
    }
    Ok(logs)
}

/// Per-problem results of a test campaign.
pub struct TestOutcome {
    /// First solving result per problem, in problem order.
    pub results: Vec<Option<SearchResult>>,
    pub logs: Vec<IterationLog>,
}

/// Aggregates over solved problems only.
#[derive(Clone, Debug, PartialEq)]
pub struct TestSummary {
    pub solved: usize,
    pub total: usize,
    pub mean_length: f64,
    pub mean_expansions: f64,
    pub mean_seconds: f64,
}

pub const SUMMARY_CSV_HEADER: &str = "solver,solved,mean_length,mean_expansions,mean_time_s";

impl TestSummary {
    pub fn to_csv(&self, solver: &str) -> String {
        format!(
            "{solver},{},{:.2},{:.2},{:.4}",
            self.solved, self.mean_length, self.mean_expansions, self.mean_seconds
        )
    }
}

impl fmt::Display for TestSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "solved {}/{}, length {:.1}, expansions {:.1}, time {:.3}s",
            self.solved, self.total, self.mean_length, self.mean_expansions, self.mean_seconds
        )
    }
}

impl TestOutcome {
    pub fn summary(&self) -> TestSummary {
        let solved: Vec<&SearchResult> = self.results.iter().flatten().collect();
        let n = solved.len();
        let mean = |f: &dyn Fn(&SearchResult) -> f64| {
            if n == 0 {
                0.0
            } else {
                solved.iter().map(|r| f(r)).sum::<f64>() / n as f64
            }
        };
        TestSummary {
            solved: n,
            total: self.results.len(),
            mean_length: mean(&|r| r.solution_length as f64),
            mean_expansions: mean(&|r| r.expansions as f64),
            mean_seconds: mean(&|r| r.elapsed.as_secs_f64()),
        }
    }
}

/// Testing Bootstrap: no updates, unconditional doubling, and solved
/// problems are not attempted again.
pub fn test<P, L>(problems: &[P], learner: &L, cfg: &BootstrapConfig) -> Result<TestOutcome>
where
    P: Sync,
    L: Learner<P>,
{
    cfg.validate()?;
    let clock = Clock {
        start: Instant::now(),
        limit: cfg.wall_time,
    };
    let mut results: Vec<Option<SearchResult>> = (0..problems.len()).map(|_| None).collect();
    let mut total_solved = 0;
    let mut cum_expansions = 0;
    let mut budget = cfg.initial_budget;
    let mut logs = Vec::new();
    for iteration in 1.. {
        if total_solved == problems.len()
            || cfg.max_iterations.is_some_and(|m| iteration > m)
            || cfg.max_budget.is_some_and(|m| budget > m)
            || clock.expired()
        {
            break;
        }
        let open: Vec<(usize, &P)> = problems
            .iter()
            .enumerate()
            .filter(|(i, _)| results[*i].is_none())
            .collect();
        let mut new_solved = 0;
        let mut complete = true;
        for batch in open.chunks(cfg.batch_problems) {
            let attempts = attempt_all(learner, batch, budget, &clock, cfg.workers)?;
            if attempts.len() < batch.len() {
                complete = false;
            }
            for (i, a) in attempts {
                cum_expansions += a.result.expansions;
                if a.result.solved() {
                    new_solved += 1;
                    total_solved += 1;
                    results[i] = Some(a.result);
                }
            }
            if !complete {
                break;
            }
        }
        logs.push(IterationLog {
            iteration,
            budget,
            new_solved,
            total_solved,
            cum_expansions,
            cum_seconds: clock.start.elapsed().as_secs_f64(),
            updates: 0,
            complete,
        });
        if !complete {
            break;
        }
        budget = budget.saturating_mul(2);
    }
    Ok(TestOutcome { results, logs })
}

/// Index of the run with the most problems solved; ties go to the earliest.
pub fn select_best_run(runs: &[Vec<IterationLog>]) -> Option<usize> {
    let solved = |logs: &Vec<IterationLog>| logs.last().map_or(0, |l| l.total_solved);
    let mut best: Option<usize> = None;
    for (i, r) in runs.iter().enumerate() {
        if best.is_none_or(|b| solved(r) > solved(&runs[b])) {
            best = Some(i);
        }
    }
    best
}

/// A fixed guide searched with a fixed solver; never learns.
pub struct GuideLearner<G> {
    pub guide: G,
    pub solver: Solver,
    pub search_batch: usize,
}

impl<D, G> Learner<D> for GuideLearner<G>
where
    D: Domain + Sync,
    G: Guide<D> + Sync,
{
    type Sample = ();

    fn attempt(&self, problem: &D, budget: u64) -> Result<Attempt<()>> {
        let result = self.solver.solve(
            problem,
            &self.guide,
            SearchBudget::expansions(budget),
            self.search_batch,
        )?;
        Ok(Attempt {
            result,
            sample: None,
        })
    }

    fn update(&mut self, _: &[()]) -> Result<()> {
        Ok(())
    }
}

/// A model searched with a fixed solver. Problems are domain instances.
#[derive(Clone, Debug)]
pub struct ModelLearner {
    pub model: Model,
    pub solver: Solver,
    pub adam_steps: usize,
    pub search_batch: usize,
}

impl ModelLearner {
    pub fn new(model: Model, solver: Solver, cfg: &BootstrapConfig) -> Self {
        ModelLearner {
            model,
            solver,
            adam_steps: cfg.adam_steps,
            search_batch: cfg.search_batch,
        }
    }

    /// Attempts `problem` once with the current parameters.
    pub fn solve<D: Encode>(&self, problem: &D, budget: SearchBudget) -> Result<SearchResult> {
        let guide = ModelGuide::new(&self.model.net, problem)?;
        self.solver
            .solve(problem, &guide, budget, self.search_batch)
    }
}

impl<D: Encode + Sync> Learner<D> for ModelLearner {
    type Sample = TrainSample;

    fn attempt(&self, problem: &D, budget: u64) -> Result<Attempt<TrainSample>> {
        let result = self.solve(problem, SearchBudget::expansions(budget))?;
        let sample = if result.solved() {
            Some(sample_from_path(
                problem,
                &result.solution_path,
                result.search_loss,
            )?)
        } else {
            None
        };
        Ok(Attempt { result, sample })
    }

    fn update(&mut self, samples: &[TrainSample]) -> Result<()> {
        let policy = self.solver.policy_loss();
        let heuristic = self.solver.uses_heuristic();
        self.model
            .update(samples, policy, heuristic, self.adam_steps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::SearchStatus;

    /// Problem `p` is solvable with budget ≥ `p`; samples are problem values.
    struct Threshold {
        updates: Vec<Vec<u64>>,
    }

    impl Learner<u64> for Threshold {
        type Sample = u64;

        fn attempt(&self, &p: &u64, budget: u64) -> Result<Attempt<u64>> {
            let mut result = SearchResult::unsolved(SearchStatus::BudgetExhausted);
            result.expansions = budget.min(p);
            if p <= budget {
                result.status = SearchStatus::Solved;
            }
            Ok(Attempt {
                result,
                sample: Some(p),
            })
        }

        fn update(&mut self, samples: &[u64]) -> Result<()> {
            self.updates.push(samples.to_vec());
            Ok(())
        }
    }

    fn cfg(iterations: usize, workers: usize) -> BootstrapConfig {
        BootstrapConfig {
            initial_budget: 2,
            batch_problems: 32,
            max_iterations: Some(iterations),
            workers,
            ..BootstrapConfig::default()
        }
    }

    #[test]
    fn train_doubles_only_without_progress() {
        let problems = vec![1, 8, 8, 20];
        let mut l = Threshold { updates: vec![] };
        let logs = train(&problems, &mut l, &cfg(6, 1)).unwrap();
        let budgets: Vec<u64> = logs.iter().map(|l| l.budget).collect();
        assert_eq!(budgets, vec![2, 2, 4, 8, 8, 16]);
        let new: Vec<usize> = logs.iter().map(|l| l.new_solved).collect();
        assert_eq!(new, vec![1, 0, 0, 2, 0, 0]);
        assert!(logs
            .windows(2)
            .all(|w| w[0].total_solved <= w[1].total_solved));
    }

    #[test]
    fn batches_define_update_passes() {
        let problems = vec![1u64; 64];
        let mut l = Threshold { updates: vec![] };
        let logs = train(&problems, &mut l, &cfg(1, 4)).unwrap();
        assert_eq!(logs[0].updates, 2);
        assert_eq!(l.updates.len(), 2);
        assert!(l.updates.iter().all(|u| u.len() == 32));
    }

    #[test]
    fn test_doubles_unconditionally_and_skips_solved() {
        let problems = vec![1, 3, 100];
        let l = Threshold { updates: vec![] };
        let c = BootstrapConfig {
            initial_budget: 2000,
            max_iterations: Some(3),
            ..BootstrapConfig::default()
        };
        let out = test(
            &problems,
            &l,
            &BootstrapConfig {
                initial_budget: 1,
                ..c.clone()
            },
        )
        .unwrap();
        let budgets: Vec<u64> = out.logs.iter().map(|l| l.budget).collect();
        assert_eq!(budgets, vec![1, 2, 4]);
        assert_eq!(
            out.logs.iter().map(|l| l.new_solved).collect::<Vec<_>>(),
            vec![1, 0, 1]
        );
        // Iteration 2 only attempts the two open problems.
        assert_eq!(
            out.logs[1].cum_expansions - out.logs[0].cum_expansions,
            2 + 2
        );
        let out = test(&[5u64, 5], &l, &c).unwrap();
        assert_eq!(out.logs.len(), 1);
        assert_eq!(out.summary().solved, 2);
    }

    #[test]
    fn best_run_is_first_maximum() {
        let run = |s| {
            vec![IterationLog {
                iteration: 1,
                budget: 1,
                new_solved: s,
                total_solved: s,
                cum_expansions: 0,
                cum_seconds: 0.0,
                updates: 0,
                complete: true,
            }]
        };
        let runs: Vec<_> = [900, 950, 940, 950, 910].into_iter().map(run).collect();
        assert_eq!(select_best_run(&runs), Some(1));
        assert_eq!(select_best_run(&runs[..1]), Some(0));
        assert_eq!(select_best_run(&[]), None);
    }

    #[test]
    fn csv_schema() {
        assert_eq!(ITERATION_CSV_HEADER.split(',').count(), 6);
        let out = TestOutcome {
            results: vec![None],
            logs: vec![],
        };
        assert_eq!(out.summary().solved, 0);
        assert_eq!(out.summary().mean_length, 0.0);
    }
}
