//! A solver is either a best-first search evaluator or PUCT.

use std::fmt;
use std::str::FromStr;

use crate::evaluators::EvaluatorKind;
use crate::model::PolicyLoss;
use crate::puct::{puct_search, Backup, PuctConfig};
use crate::search::{BestFirstSearch, Domain, Guide, SearchBudget, SearchConfig, SearchResult};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Solver {
    Bfs(EvaluatorKind),
    Puct { c: f64, backup: Backup },
}

impl Solver {
    pub fn solve<D, G>(
        &self,
        domain: &D,
        guide: &G,
        budget: SearchBudget,
        batch_size: usize,
    ) -> Result<SearchResult>
    where
        D: Domain,
        G: Guide<D> + ?Sized,
    {
        match *self {
            Solver::Bfs(kind) => {
                let cfg = SearchConfig::default()
                    .with_budget(budget)
                    .with_batch_size(batch_size);
                BestFirstSearch::new(cfg).run(domain, guide, kind)
            }
            Solver::Puct { c, backup } => {
                let cfg = PuctConfig::default()
                    .with_c(c)
                    .with_backup(backup)
                    .with_budget(budget)
                    .with_batch_size(batch_size);
                Ok(puct_search(domain, guide, &cfg)?.result)
            }
        }
    }

    /// Policy loss used to train this solver's model.
    pub fn policy_loss(&self) -> PolicyLoss {
        match self {
            Solver::Bfs(k) if k.uses_policy() => PolicyLoss::Levin,
            Solver::Bfs(_) => PolicyLoss::None,
            Solver::Puct { .. } => PolicyLoss::CrossEntropy,
        }
    }

    pub fn uses_heuristic(&self) -> bool {
        match self {
            Solver::Bfs(k) => k.uses_heuristic(),
            Solver::Puct { .. } => true,
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Solver::Bfs(k) => write!(f, "{k}"),
            Solver::Puct { c, .. } => write!(f, "puct:{c}"),
        }
    }
}

impl FromStr for Solver {
    type Err = Error;

    /// Evaluator names, or `puct` / `puct:C`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "puct" {
            return Ok(Solver::Puct {
                c: 1.0,
                backup: Backup::Mean,
            });
        }
        if let Some(c) = s.strip_prefix("puct:") {
            let c: f64 = c
                .parse()
                .map_err(|_| Error::config(format!("bad PUCT constant in {s:?}")))?;
            if !(c >= 0.0) {
                return Err(Error::config(format!(
                    "PUCT constant must be nonnegative, got {c}"
                )));
            }
            return Ok(Solver::Puct {
                c,
                backup: Backup::Mean,
            });
        }
        Ok(Solver::Bfs(s.parse()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        for s in [
            "astar",
            "wastar:1.5",
            "gbfs",
            "levints",
            "phs-h",
            "phs-star",
            "puct:2",
        ] {
            assert_eq!(s.parse::<Solver>().unwrap().to_string(), s);
        }
        assert_eq!("puct".parse::<Solver>().unwrap().to_string(), "puct:1");
        assert!("puct:x".parse::<Solver>().is_err());
        assert!("wastar:0.5".parse::<Solver>().is_err());
        assert!("dfs".parse::<Solver>().is_err());
    }

    #[test]
    fn training_losses() {
        assert_eq!(
            "phs-star".parse::<Solver>().unwrap().policy_loss(),
            PolicyLoss::Levin
        );
        assert_eq!(
            "astar".parse::<Solver>().unwrap().policy_loss(),
            PolicyLoss::None
        );
        assert_eq!(
            "puct:1".parse::<Solver>().unwrap().policy_loss(),
            PolicyLoss::CrossEntropy
        );
        assert!(!"levints".parse::<Solver>().unwrap().uses_heuristic());
    }
}
