//! `phs` command-line driver.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use config::{ArchKind, Common, DomainKind};
use phs::bootstrap::{
    self, BootstrapConfig, GuideLearner, IterationLog, Learner, ModelLearner, TestOutcome,
};
use phs::domains::sokoban::{parse_levels, SokobanLevel};
use phs::domains::stp::{self, SlidingTile, StpState};
use phs::domains::synth::{build_synth_tree, TreeGuide};
use phs::domains::witness::{self, parse_puzzles, WitnessPuzzle};
use phs::domains::Encode;
use phs::model::{checkpoint, Architecture, Model};
use phs::search::{Guide, HeuristicGuide, SearchBudget, SearchResult, Uninformed};
use phs::solver::Solver;
use phs::theory::{self, BoundReport};

#[derive(Parser)]
#[command(
    name = "phs",
    version,
    about = "Policy-guided heuristic search toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Split {
    Train,
    Test,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every problem of a file once at a fixed budget.
    Solve(Common),
    /// Train models with the Bootstrap procedure.
    Train(Common),
    /// Test a frozen model with budget doubling.
    Test(Common),
    /// Run several solvers once each at a fixed budget and print a summary table.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Comma-separated solver names.
        #[arg(long, value_delimiter = ',')]
        solvers: Vec<String>,
    },
    /// Generate a dataset file and its manifest.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "train")]
        split: Split,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Board side (sliding tiles) or cells per side (Witness).
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, default_value_t = 50)]
        walk_min: usize,
        #[arg(long, default_value_t = 1000)]
        walk_max: usize,
        /// Probability that a Witness cell keeps its color bullet.
        #[arg(long, default_value_t = 0.5)]
        bullet_prob: f64,
    },
    /// Check every bound on seeded random instances; one CSV row per check.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Random instances per suite.
        #[arg(long, default_value_t = 100)]
        count: u64,
        /// Make one instance's η inadmissible, to exercise the precondition check.
        #[arg(long)]
        inject_inadmissible: bool,
    },
}

/// Problems of one domain, with display ids in file order.
enum Problems {
    Stp(Vec<(String, SlidingTile)>),
    Sokoban(Vec<(String, SokobanLevel)>),
    Witness(Vec<(String, WitnessPuzzle)>),
}

fn load_problems(domain: DomainKind, path: &Path) -> Result<Problems> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(match domain {
        DomainKind::Stp => Problems::Stp(
            stp::parse_problems(&text)?
                .into_iter()
                .enumerate()
                .map(|(i, s)| ((i + 1).to_string(), SlidingTile::new(s)))
                .collect(),
        ),
        DomainKind::Sokoban => Problems::Sokoban(
            parse_levels(&text)?
                .into_iter()
                .map(|l| (l.id.clone(), l))
                .collect(),
        ),
        DomainKind::Witness => Problems::Witness(
            parse_puzzles(&text)?
                .into_iter()
                .map(|p| (p.id.clone(), p))
                .collect(),
        ),
        DomainKind::Synth => {
            bail!("synthetic trees are generated from --seed, not read from a file")
        }
    })
}

/// Runs `$body` with `$ps` bound to the typed problem list and `$h` to the
/// fallback heuristic guide of that domain.
macro_rules! with_problems {
    ($problems:expr, |$ps:ident, $h:ident| $body:expr) => {
        match $problems {
            Problems::Stp($ps) => {
                let $h = HeuristicGuide(|s: &StpState| s.manhattan() as f64);
                $body
            }
            Problems::Sokoban($ps) => {
                let $h = Uninformed;
                $body
            }
            Problems::Witness($ps) => {
                let $h = Uninformed;
                $body
            }
        }
    };
}

fn load_model(path: &Path, domain: DomainKind) -> Result<Model> {
    let model = checkpoint::load(path)?;
    if model.domain != domain.tag() {
        bail!(
            "model {} is for domain {:?}, not {}",
            path.display(),
            model.domain,
            domain.tag()
        );
    }
    Ok(model)
}

fn result_row(id: &str, r: &SearchResult) -> String {
    format!(
        "{id},{},{},{},{:.4}",
        r.solved(),
        r.solution_length,
        r.expansions,
        r.elapsed.as_secs_f64()
    )
}

const RESULT_HEADER: &str = "id,solved,length,expansions,time_s";

fn solve_all<D, G>(
    problems: &[(String, D)],
    solver: Solver,
    guide: &G,
    budget: u64,
    batch: usize,
) -> Result<Vec<SearchResult>>
where
    D: Encode,
    G: Guide<D> + ?Sized,
{
    problems
        .iter()
        .map(|(_, p)| Ok(solver.solve(p, guide, SearchBudget::expansions(budget), batch)?))
        .collect()
}

fn solve_with_model<D: Encode>(
    problems: &[(String, D)],
    solver: Solver,
    model: &Model,
    budget: u64,
    batch: usize,
) -> Result<Vec<SearchResult>> {
    let learner = ModelLearner {
        model: model.clone(),
        solver,
        adam_steps: 1,
        search_batch: batch,
    };
    problems
        .iter()
        .map(|(_, p)| Ok(learner.solve(p, SearchBudget::expansions(budget))?))
        .collect()
}

fn cmd_solve(c: &Common) -> Result<u8> {
    let domain = c.domain()?;
    let solver = c.solver()?;
    let budget = c.budget()?;
    let batch = c.search_batch.unwrap_or(1);
    let mut rows = vec![RESULT_HEADER.to_string()];
    let results: Vec<(String, SearchResult)> = if domain == DomainKind::Synth {
        let tree = build_synth_tree(&theory::suites::theorem1_spec(), c.seed())?;
        let r = solver.solve(&tree, &TreeGuide, SearchBudget::expansions(budget), batch)?;
        vec![(format!("synth-{}", c.seed()), r)]
    } else {
        let problems = load_problems(domain, c.problems()?)?;
        let model = c.model_path()?.map(|p| load_model(p, domain)).transpose()?;
        with_problems!(problems, |ps, h| {
            let rs = match &model {
                Some(m) => solve_with_model(&ps, solver, m, budget, batch)?,
                None => solve_all(&ps, solver, &h, budget, batch)?,
            };
            ps.into_iter().map(|(id, _)| id).zip(rs).collect()
        })
    };
    for (id, r) in &results {
        rows.push(result_row(id, r));
    }
    println!("{}", rows.join("\n"));
    Ok(if results.iter().all(|(_, r)| r.solved()) {
        0
    } else {
        1
    })
}

fn bootstrap_config(c: &Common) -> Result<BootstrapConfig> {
    let cfg = BootstrapConfig {
        initial_budget: c.budget()?,
        batch_problems: c.batch.unwrap_or(32),
        wall_time: c.time_budget.map(Duration::from_secs_f64),
        max_iterations: c.max_iterations,
        max_budget: None,
        workers: c.workers.unwrap_or(1),
        adam_steps: c.adam_steps.unwrap_or(1),
        search_batch: c.search_batch.unwrap_or(1),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn architecture<D: Encode>(c: &Common, example: &D) -> Architecture {
    let input = example.feature_shape();
    match c.arch.unwrap_or(ArchKind::Conv) {
        ArchKind::Conv => Architecture::conv(input, example.num_actions()),
        ArchKind::Dense => Architecture::dense(input, example.num_actions(), 128, 128),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn train_runs<D: Encode + Sync + Clone>(
    c: &Common,
    problems: &[(String, D)],
    cfg: &BootstrapConfig,
    out: &Path,
) -> Result<()> {
    let domain = c.domain()?;
    let solver = c.solver()?;
    let instances: Vec<D> = problems.iter().map(|(_, p)| p.clone()).collect();
    let first = instances.first().context("no problems")?;
    let arch = architecture(c, first);
    let mut logs: Vec<Vec<IterationLog>> = Vec::new();
    let mut paths = Vec::new();
    for run in 0..c.runs.unwrap_or(1) {
        let seed = c.seed() + run as u64;
        let mut model = Model::new(domain.tag(), arch, seed)?;
        if let Some(lr) = c.lr {
            model.adam = model.adam.clone().with_lr(lr);
        }
        let mut learner = ModelLearner::new(model, solver, cfg);
        let run_logs = bootstrap::train(&instances, &mut learner, cfg)?;
        let path = out.join(format!("model_seed{seed}.phsm"));
        checkpoint::save(&learner.model, &path)?;
        write(
            &out.join(format!("train_seed{seed}.csv")),
            &bootstrap::logs_to_csv(&run_logs),
        )?;
        let solved = run_logs.last().map_or(0, |l| l.total_solved);
        eprintln!(
            "run {run} (seed {seed}): {solved}/{} solved, {} iterations",
            instances.len(),
            run_logs.len()
        );
        logs.push(run_logs);
        paths.push((seed, path));
    }
    let best = bootstrap::select_best_run(&logs).context("no training runs")?;
    let (seed, path) = &paths[best];
    fs::copy(path, out.join("best.phsm")).context("copying best model")?;
    write(
        &out.join("best.txt"),
        &format!("seed={seed}\nfile={}\n", path.display()),
    )?;
    Ok(())
}

fn cmd_train(c: &Common) -> Result<u8> {
    let domain = c.domain()?;
    let cfg = bootstrap_config(c)?;
    let problems = load_problems(domain, c.problems()?)?;
    let out = c.out()?;
    fs::create_dir_all(out)?;
    with_problems!(problems, |ps, _h| train_runs(c, &ps, &cfg, out))?;
    Ok(0)
}

fn test_rows<D>(problems: &[(String, D)], outcome: &TestOutcome) -> String {
    let mut s = String::from(RESULT_HEADER);
    s.push('\n');
    for ((id, _), r) in problems.iter().zip(&outcome.results) {
        match r {
            Some(r) => s.push_str(&result_row(id, r)),
            None => {
                let _ = write!(s, "{id},false,0,0,0");
            }
        }
        s.push('\n');
    }
    s
}

fn run_test<D, L>(
    problems: &[(String, D)],
    learner: &L,
    cfg: &BootstrapConfig,
    solver: &str,
    out: &Path,
) -> Result<()>
where
    D: Sync + Clone,
    L: Learner<D>,
{
    let instances: Vec<D> = problems.iter().map(|(_, p)| p.clone()).collect();
    let outcome = bootstrap::test(&instances, learner, cfg)?;
    write(
        &out.join("test_log.csv"),
        &bootstrap::logs_to_csv(&outcome.logs),
    )?;
    write(
        &out.join("test_results.csv"),
        &test_rows(problems, &outcome),
    )?;
    let summary = outcome.summary();
    write(
        &out.join("summary.csv"),
        &format!(
            "{}\n{}\n",
            bootstrap::SUMMARY_CSV_HEADER,
            summary.to_csv(solver)
        ),
    )?;
    println!("{solver}: {summary}");
    Ok(())
}

fn cmd_test(c: &Common) -> Result<u8> {
    let domain = c.domain()?;
    let solver = c.solver()?;
    let cfg = bootstrap_config(c)?;
    let problems = load_problems(domain, c.problems()?)?;
    let out = c.out()?;
    fs::create_dir_all(out)?;
    let model = c.model_path()?.map(|p| load_model(p, domain)).transpose()?;
    let name = solver.to_string();
    with_problems!(problems, |ps, h| match &model {
        Some(m) => run_test(
            &ps,
            &ModelLearner::new(m.clone(), solver, &cfg),
            &cfg,
            &name,
            out
        ),
        None => {
            let learner = GuideLearner {
                guide: h,
                solver,
                search_batch: cfg.search_batch,
            };
            run_test(&ps, &learner, &cfg, &name, out)
        }
    })?;
    Ok(0)
}

fn cmd_bench(c: &Common, solvers: &[String]) -> Result<u8> {
    let domain = c.domain()?;
    let budget = c.budget()?;
    let batch = c.search_batch.unwrap_or(1);
    let solvers: Vec<Solver> = if solvers.is_empty() {
        vec![c.solver()?]
    } else {
        solvers
            .iter()
            .map(|s| s.parse())
            .collect::<phs::Result<_>>()?
    };
    let problems = load_problems(domain, c.problems()?)?;
    let model = c.model_path()?.map(|p| load_model(p, domain)).transpose()?;
    println!("{}", bootstrap::SUMMARY_CSV_HEADER);
    for solver in solvers {
        let results = with_problems!(&problems, |ps, h| match &model {
            Some(m) => solve_with_model(ps, solver, m, budget, batch)?,
            None => solve_all(ps, solver, &h, budget, batch)?,
        });
        let outcome = TestOutcome {
            results: results
                .into_iter()
                .map(|r| r.solved().then_some(r))
                .collect(),
            logs: Vec::new(),
        };
        println!("{}", outcome.summary().to_csv(&solver.to_string()));
    }
    Ok(0)
}

#[derive(Serialize)]
struct Manifest {
    domain: &'static str,
    split: String,
    seed: u64,
    count: usize,
    size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    walk_length: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bullet_prob: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    c: &Common,
    split: Split,
    count: usize,
    size: Option<usize>,
    walk: (usize, usize),
    bullet_prob: f64,
) -> Result<u8> {
    let domain = c.domain()?;
    let seed = c.seed();
    let out = c.out()?;
    let (text, manifest) = match domain {
        DomainKind::Stp => {
            let n = size.unwrap_or(5);
            if walk.0 > walk.1 {
                bail!("walk range {}..{} is empty", walk.0, walk.1);
            }
            let (states, walk_length) = match split {
                Split::Train => (stp::generate_train(n, count, walk, seed), Some(walk)),
                Split::Test => (stp::generate_test(n, count, seed), None),
            };
            let manifest = Manifest {
                domain: "stp",
                split: format!("{split:?}").to_lowercase(),
                seed,
                count,
                size: n,
                walk_length,
                bullet_prob: None,
            };
            (stp::serialize_problems(&states), manifest)
        }
        DomainKind::Witness => {
            let n = size.unwrap_or(4);
            let puzzles = witness::generate(n, (n, n / 2), count, bullet_prob, seed)?;
            let manifest = Manifest {
                domain: "witness",
                split: format!("{split:?}").to_lowercase(),
                seed,
                count,
                size: n,
                walk_length: None,
                bullet_prob: Some(bullet_prob),
            };
            (witness::serialize_puzzles(&puzzles), manifest)
        }
        DomainKind::Sokoban => bail!("Sokoban levels are not generated; use Boxoban level files"),
        DomainKind::Synth => bail!("synthetic trees are built on the fly from --seed"),
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write(out, &text)?;
    let mut manifest_path = out.as_os_str().to_owned();
    manifest_path.push(".manifest.json");
    write(
        Path::new(&manifest_path),
        &(serde_json::to_string_pretty(&manifest)? + "\n"),
    )?;
    Ok(0)
}

fn cmd_verify(c: &Common, count: u64, inject: bool) -> Result<u8> {
    let seed = c.seed();
    let mut reports: Vec<BoundReport> = theory::suites::full_suite(count, seed)?;
    if inject {
        reports.extend(theory::suites::corollary2_3(1, seed, true)?);
    }
    let mut csv = String::from(theory::CSV_HEADER);
    csv.push('\n');
    for r in &reports {
        csv.push_str(&r.to_csv());
        csv.push('\n');
    }
    match &c.out {
        Some(path) => write(path, &csv)?,
        None => print!("{csv}"),
    }
    let failed: Vec<&BoundReport> = reports.iter().filter(|r| !r.pass).collect();
    for r in &failed {
        eprintln!("FAILED {}", r.to_csv());
    }
    if failed.is_empty() {
        eprintln!("{} checks passed", reports.len());
        Ok(0)
    } else {
        eprintln!(
            "{} of {} checks failed; replay with: phs verify --seed {seed} --count {count}{}",
            failed.len(),
            reports.len(),
            if inject { " --inject-inadmissible" } else { "" }
        );
        Ok(1)
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve(c) => cmd_solve(&c.resolve()?),
        Command::Train(c) => cmd_train(&c.resolve()?),
        Command::Test(c) => cmd_test(&c.resolve()?),
        Command::Bench { common, solvers } => cmd_bench(&common.resolve()?, &solvers),
        Command::Gen {
            common,
            split,
            count,
            size,
            walk_min,
            walk_max,
            bullet_prob,
        } => cmd_gen(
            &common.resolve()?,
            split,
            count,
            size,
            (walk_min, walk_max),
            bullet_prob,
        ),
        Command::Verify {
            common,
            count,
            inject_inadmissible,
        } => cmd_verify(&common.resolve()?, count, inject_inadmissible),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
