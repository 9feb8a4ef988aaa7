//! Flags shared by the commands, optionally read from a TOML file. Flags
//! given on the command line win over the file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Stp,
    Sokoban,
    Witness,
    Synth,
}

impl DomainKind {
    pub fn tag(self) -> &'static str {
        match self {
            DomainKind::Stp => "stp",
            DomainKind::Sokoban => "sokoban",
            DomainKind::Witness => "witness",
            DomainKind::Synth => "synth",
        }
    }

    pub fn default_budget(self) -> u64 {
        match self {
            DomainKind::Stp => 7000,
            _ => 2000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchKind {
    Conv,
    Dense,
}

#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Common {
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub domain: Option<DomainKind>,
    /// Problem file.
    #[arg(long)]
    pub problems: Option<PathBuf>,
    /// Evaluator name (astar, wastar:W, gbfs, levints, phs-h, phs-star, phs) or puct[:C].
    #[arg(long)]
    pub solver: Option<String>,
    /// Expansion budget; the initial budget for train and test.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Wall-time budget in seconds.
    #[arg(long)]
    pub time_budget: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Problems per update pass.
    #[arg(long)]
    pub batch: Option<usize>,
    /// States per guide call inside a search.
    #[arg(long)]
    pub search_batch: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of training runs, with seeds `seed, seed+1, ...`.
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub adam_steps: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, value_enum)]
    pub arch: Option<ArchKind>,
    /// Output directory or file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Model checkpoint.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($a:expr, $b:expr, $($f:ident),*) => {
        Common { config: $a.config.clone(), $($f: $a.$f.clone().or($b.$f.clone())),* }
    };
}

impl Common {
    /// Fills unset flags from the config file, if one was given.
    pub fn resolve(&self) -> Result<Common> {
        let Some(path) = &self.config else {
            return Ok(self.clone());
        };
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: Common =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(merge_fields!(
            self,
            file,
            domain,
            problems,
            solver,
            budget,
            time_budget,
            max_iterations,
            batch,
            search_batch,
            workers,
            seed,
            runs,
            adam_steps,
            lr,
            arch,
            out,
            model
        ))
    }

    pub fn domain(&self) -> Result<DomainKind> {
        self.domain.context("--domain is required")
    }

    pub fn problems(&self) -> Result<&Path> {
        let p = self.problems.as_deref().context("--problems is required")?;
        if !p.exists() {
            bail!("problem file {} does not exist", p.display());
        }
        Ok(p)
    }

    pub fn solver(&self) -> Result<phs::solver::Solver> {
        let s = self.solver.as_deref().unwrap_or("phs-star");
        Ok(s.parse()?)
    }

    pub fn budget(&self) -> Result<u64> {
        Ok(self.budget.unwrap_or(self.domain()?.default_budget()))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out(&self) -> Result<&Path> {
        self.out.as_deref().context("--out is required")
    }

    pub fn model_path(&self) -> Result<Option<&Path>> {
        match self.model.as_deref() {
            Some(p) if !p.exists() => bail!("model {} does not exist", p.display()),
            other => Ok(other),
        }
    }
}
