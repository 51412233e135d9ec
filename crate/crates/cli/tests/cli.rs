use std::fs;
use std::process::{Command, Output};

fn ercot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ercot")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

const FAST: [&str; 6] = ["--pop", "20", "--budget", "200", "--cv-folds", "20"];

#[test]
fn generate_is_reproducible() {
    let a = stdout(&ercot(&["generate", "syn1", "--seed", "4"]));
    let b = stdout(&ercot(&["generate", "--dataset", "syn1", "--seed", "4"]));
    assert_eq!(a.lines().count(), 2001);
    assert_eq!(a, b);
    let c = stdout(&ercot(&["generate", "syn1", "--seed", "5"]));
    assert_ne!(a, c);
}

#[test]
fn generate_bird_flocks() {
    let a = stdout(&ercot(&["generate", "bird_flocks"]));
    assert_eq!(a.lines().count(), 3001);
}

#[test]
fn run_writes_identical_results_for_the_same_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let mut args = vec!["run", "--dataset", "syn3", "--runs", "2", "--seed", "9", "--out", out.to_str().unwrap()];
        args.extend(FAST);
        let line = stdout(&ercot(&args));
        assert!(line.contains("mRI"));
        outs.push(out);
    }
    for f in ["run_0.json", "run_1_partitions.csv", "alpha.csv", "per_time.csv", "per_run.csv", "summary.csv"] {
        assert_eq!(fs::read(outs[0].join(f)).unwrap(), fs::read(outs[1].join(f)).unwrap(), "{f}");
    }
}

#[test]
fn score_reads_written_partitions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let mut args = vec!["run", "--dataset", "syn5", "--algorithm", "kmeanscot", "--k", "4", "--out", out.to_str().unwrap()];
    args.extend(FAST);
    stdout(&ercot(&args));
    let parts = out.join("run_0_partitions.csv");
    let scores = stdout(&ercot(&["score", "--dataset", "syn5", "--partitions", parts.to_str().unwrap()]));
    let lines: Vec<&str> = scores.lines().collect();
    assert_eq!(lines[0], "t,ri,nmi");
    assert_eq!(lines.len(), 12);
    assert!(lines[11].starts_with("mean,"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    let out = dir.path().join("o");
    fs::write(
        &cfg,
        format!("# quick\ndataset = syn1\nalgorithm = static\npop = 20\nbudget = 200\nout = {}\n", out.display()),
    )
    .unwrap();
    let line = stdout(&ercot(&["run", "--config", cfg.to_str().unwrap(), "--runs", "2"]));
    assert!(line.contains("2 run(s)"), "{line}");
    assert!(out.join("run_1.json").exists());
    assert!(!out.join("alpha.csv").exists());
}

#[test]
fn invalid_input_fails_with_one_line() {
    for args in [
        vec!["run", "--dataset", "syn1", "--budget", "10"],
        vec!["run", "--dataset", "syn9"],
        vec!["generate", "nope"],
        vec!["run", "--dataset", "syn1", "--reinit-p", "1.5"],
    ] {
        let o = ercot(&args);
        assert!(!o.status.success(), "{args:?}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
        assert!(err.starts_with("error: "));
    }
}

#[test]
fn bench_reports_each_size_and_budget() {
    let o = stdout(&ercot(&[
        "bench", "--sizes", "100,200", "--budgets", "200", "--pop", "20", "--cv-folds", "20", "--repeats", "1",
    ]));
    let lines: Vec<&str> = o.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("100,200,"));
}
