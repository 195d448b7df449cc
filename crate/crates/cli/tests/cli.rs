use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gnystrom"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const MOONS: &str = "data.kind = moons\ndata.n = 120\ndata.noise = 0.1\ndata.seed = 4\n\
                     m = 12\nlabeled_per_run = 10\nrepeats = 2\nseed = 3\nlambda_grid = 0.1, 10\n";

#[test]
fn generate_fit_embed_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "moons.cfg", MOONS);
    let data = dir.path().join("moons.csv");
    let o = run(&["generate", "--config", s(&cfg), "--out", s(&data)]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(std::fs::read_to_string(&data).unwrap().lines().count(), 120);

    let lm = dir.path().join("lm.csv");
    let o = run(&["landmarks", "--input", s(&data), "--format", "csv", "--m", "6", "--method", "random", "--seed", "2", "--out", s(&lm)]);
    assert!(o.status.success(), "{o:?}");
    let rows: Vec<String> = std::fs::read_to_string(&lm).unwrap().lines().map(String::from).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.split(',').count() == 2));

    let model = dir.path().join("model.gnm");
    let o = run(&["fit", "--input", s(&data), "--labels-per-class", "5", "--m", "12", "--lambda", "1", "--seed", "1", "--model-out", s(&model)]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("lambda 1"));

    let emb = dir.path().join("emb.csv");
    let o = run(&["embed", "--model", s(&model), "--input", s(&data), "--out", s(&emb)]);
    assert!(o.status.success(), "{o:?}");
    let text = std::fs::read_to_string(&emb).unwrap();
    assert_eq!(text.lines().count(), 120);
    let again = dir.path().join("emb2.csv");
    run(&["embed", "--model", s(&model), "--input", s(&data), "--out", s(&again)]);
    assert_eq!(text, std::fs::read_to_string(&again).unwrap());
}

#[test]
fn evaluate_and_select_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "moons.cfg", MOONS);
    let o = run(&["evaluate", "--config", s(&cfg), "--method", "baseline", "--report", "text"]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert!(out.contains("error (%)") && out.contains("time (s)"), "{out}");

    let o = run(&["evaluate", "--config", s(&cfg), "--method", "generalized", "--report", "csv"]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3);
    assert!(out.starts_with("repeat,error,lambda,rho_prior,rho_align"));

    let o = run(&["select-lambda", "--config", s(&cfg)]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert_eq!(out.matches("<- chosen").count(), 1, "{out}");
    assert!(out.contains("chosen lambda"));
}

#[test]
fn input_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.csv", "1,0.5\n0,oops\n");
    let o = run(&["landmarks", "--input", s(&bad), "--m", "1", "--out", s(&dir.path().join("o.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let cfg = write_config(dir.path(), "c.cfg", "m = 3\nsurprise = 1\n");
    let o = run(&["evaluate", "--config", s(&cfg), "--input", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));

    let junk = write_config(dir.path(), "junk.gnm", "not a model");
    let o = run(&["embed", "--model", s(&junk), "--input", s(&bad), "--out", s(&dir.path().join("e.csv"))]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["fit", "--input", s(&dir.path().join("missing.csv")), "--labels-per-class", "2", "--model-out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.csv"));

    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["landmarks", "--m", "2"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{MOONS}max_backtracks = 0\narmijo_a0 = 1e-12\n").replace("lambda_grid = 0.1, 10", "lambda = 0.01");
    let cfg = write_config(dir.path(), "hard.cfg", &body);
    let o = run(&["evaluate", "--config", s(&cfg), "--method", "generalized"]);
    assert_eq!(o.status.code(), Some(3), "{o:?}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("step search failed"));
}
