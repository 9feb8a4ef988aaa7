use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn phs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phs"))
        .args(args)
        .output()
        .expect("run phs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn solving_a_goal_state_takes_one_expansion() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("goal.txt");
    fs::write(&file, "0 1 2 3 4 5 6 7 8\n").unwrap();
    let o = phs(&[
        "solve",
        "--domain",
        "stp",
        "--problems",
        p(&file),
        "--solver",
        "astar",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "id,solved,length,expansions,time_s");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&fields[..4], &["1", "true", "0", "1"]);
}

#[test]
fn unsolved_problem_gives_exit_one_and_rows_keep_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("three.txt");
    fs::write(
        &file,
        "1 0 2 3 4 5 6 7 8\n8 7 6 5 4 3 2 1 0\n0 1 2 3 4 5 6 7 8\n",
    )
    .unwrap();
    let o = phs(&[
        "solve",
        "--domain",
        "stp",
        "--problems",
        p(&file),
        "--solver",
        "gbfs",
        "--budget",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let rows: Vec<Vec<&str>> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        ["1", "2", "3"]
    );
    assert_eq!(
        rows.iter().map(|r| r[1]).collect::<Vec<_>>(),
        ["true", "false", "true"]
    );
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.txt");
    assert_eq!(
        phs(&["solve", "--domain", "stp", "--problems", p(&missing)])
            .status
            .code(),
        Some(2)
    );
    let file = dir.path().join("bad.txt");
    fs::write(&file, "0 1 2 3 4 5 6 7 7\n").unwrap();
    assert_eq!(
        phs(&["solve", "--domain", "stp", "--problems", p(&file)])
            .status
            .code(),
        Some(2)
    );
    fs::write(&file, "0 1 2 3 4 5 6 7 8\n").unwrap();
    assert_eq!(
        phs(&[
            "solve",
            "--domain",
            "stp",
            "--problems",
            p(&file),
            "--solver",
            "nope"
        ])
        .status
        .code(),
        Some(2)
    );
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "unknown_key = 1\n").unwrap();
    assert_eq!(
        phs(&[
            "solve",
            "--domain",
            "stp",
            "--problems",
            p(&file),
            "--config",
            p(&cfg)
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        phs(&["gen", "--domain", "sokoban", "--out", p(&file)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn config_file_supplies_unset_flags() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("goal.txt");
    fs::write(&file, "0 1 2 3 4 5 6 7 8\n").unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        format!(
            "domain = \"stp\"\nproblems = {:?}\nsolver = \"levints\"\n",
            p(&file)
        ),
    )
    .unwrap();
    let o = phs(&["solve", "--config", p(&cfg)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn gen_is_reproducible_and_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for f in [&a, &b] {
        let o = phs(&[
            "gen",
            "--domain",
            "stp",
            "--size",
            "4",
            "--count",
            "5",
            "--seed",
            "9",
            "--out",
            p(f),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 5);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.txt.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["count"], 5);
    assert_eq!(manifest["walk_length"], serde_json::json!([50, 1000]));
}

#[test]
fn generated_witness_puzzles_are_solvable() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.txt");
    assert_eq!(
        phs(&[
            "gen",
            "--domain",
            "witness",
            "--size",
            "3",
            "--count",
            "4",
            "--out",
            p(&w)
        ])
        .status
        .code(),
        Some(0)
    );
    let o = phs(&[
        "solve",
        "--domain",
        "witness",
        "--problems",
        p(&w),
        "--solver",
        "levints",
        "--budget",
        "20000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 5);
}

#[test]
fn test_command_writes_summary_without_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.txt");
    fs::write(&file, "1 0 2 3 4 5 6 7 8\n3 1 2 0 4 5 6 7 8\n").unwrap();
    let out = dir.path().join("out");
    let o = phs(&[
        "test",
        "--domain",
        "stp",
        "--problems",
        p(&file),
        "--solver",
        "astar",
        "--budget",
        "1",
        "--max-iterations",
        "10",
        "--out",
        p(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next(),
        Some("solver,solved,mean_length,mean_expansions,mean_time_s")
    );
    assert!(lines.next().unwrap().starts_with("astar,2,1.00,"));
    assert!(fs::read_dir(&out).unwrap().all(|e| !e
        .unwrap()
        .file_name()
        .to_string_lossy()
        .ends_with(".phsm")));
}

#[test]
fn train_without_a_stopping_rule_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.txt");
    fs::write(&file, "1 0 2 3 4 5 6 7 8\n").unwrap();
    let o = phs(&[
        "train",
        "--domain",
        "stp",
        "--problems",
        p(&file),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_writes_one_checkpoint_per_run_and_marks_the_best() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.txt");
    fs::write(
        &file,
        "1 0 2 3 4 5 6 7 8\n3 1 2 0 4 5 6 7 8\n1 2 0 3 4 5 6 7 8\n",
    )
    .unwrap();
    let out = dir.path().join("m");
    let o = phs(&[
        "train",
        "--domain",
        "stp",
        "--problems",
        p(&file),
        "--arch",
        "dense",
        "--runs",
        "2",
        "--seed",
        "4",
        "--max-iterations",
        "1",
        "--budget",
        "50",
        "--out",
        p(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for f in [
        "model_seed4.phsm",
        "model_seed5.phsm",
        "train_seed4.csv",
        "train_seed5.csv",
        "best.phsm",
        "best.txt",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let o = phs(&[
        "solve",
        "--domain",
        "stp",
        "--problems",
        p(&file),
        "--model",
        p(&out.join("best.phsm")),
        "--solver",
        "levints",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = phs(&[
        "solve",
        "--domain",
        "witness",
        "--problems",
        p(&file),
        "--model",
        p(&out.join("best.phsm")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passes_and_flags_injected_inadmissibility() {
    let o = phs(&["verify", "--count", "2", "--seed", "3"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = stdout(&o);
    assert!(out.starts_with("check,instance,kind,measured,bound,slack,pass,note\n"));
    assert!(out.lines().skip(1).all(|l| l.contains(",true,")));
    let o = phs(&[
        "verify",
        "--count",
        "2",
        "--seed",
        "3",
        "--inject-inadmissible",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed 3"));
}
