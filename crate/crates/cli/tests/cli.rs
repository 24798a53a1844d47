use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_evtestbed"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A temp dir holding a 150-snapshot corpus from the built-in model.
fn corpus() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.corpus");
    let o = run(&["gen", "--count", "150", "--out", s(&path)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    (dir, path)
}

#[test]
fn gen_is_reproducible_and_round_trips_the_model() {
    let (dir, first) = corpus();
    let again = dir.path().join("again.corpus");
    let model = dir.path().join("m.model");
    let rules = dir.path().join("m.rules");
    let o = run(&[
        "gen", "--count", "150", "--out", s(&again), "--model-out", s(&model), "--rules-out", s(&rules),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&again).unwrap());

    let from_file = dir.path().join("from-file.corpus");
    let o = run(&["gen", "--count", "150", "--model", s(&model), "--out", s(&from_file)]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&from_file).unwrap());

    let reseeded = stdout(&run(&["gen", "--count", "150", "--seed", "99"]));
    assert!(reseeded.starts_with("# evtestbed corpus v1"));
    assert_ne!(reseeded.as_bytes(), std::fs::read(&first).unwrap().as_slice());
}

#[test]
fn run_requires_seed() {
    let (_dir, c) = corpus();
    let o = run(&["run", "--corpus", s(&c), "--repetitions", "5"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
}

#[test]
fn exit_codes_separate_config_from_io() {
    let (dir, c) = corpus();
    let missing = dir.path().join("missing.corpus");
    assert_eq!(code(&run(&["run", "--corpus", s(&missing), "--seed", "1"])), 3);
    assert_eq!(code(&run(&["run", "--corpus", s(&c), "--seed", "1", "--confidence", "1.5"])), 2);
    assert_eq!(code(&run(&["run", "--corpus", s(&c), "--seed", "1", "--methods", "bayes"])), 2);
    assert_eq!(code(&run(&["run", "--corpus", s(&c), "--seed", "1", "--odds", "coin"])), 2);

    let garbled = dir.path().join("garbled.corpus");
    std::fs::write(&garbled, "# evtestbed corpus v1\nnot a record\n").unwrap();
    assert_eq!(code(&run(&["run", "--corpus", s(&garbled), "--seed", "1"])), 2);

    let unwritable = dir.path().join("no-such-dir").join("r.tsv");
    let o = run(&["run", "--corpus", s(&c), "--seed", "1", "--repetitions", "3", "--out", s(&unwritable)]);
    assert_eq!(code(&o), 3);

    let bad_config = dir.path().join("bad.json");
    std::fs::write(&bad_config, "{\"repetitions\": \"many\"}").unwrap();
    assert_eq!(code(&run(&["run", "--corpus", s(&c), "--seed", "1", "--config", s(&bad_config)])), 2);
}

#[test]
fn run_is_deterministic_per_seed() {
    let (dir, c) = corpus();
    let go = |name: &str, seed: &str| {
        let out = dir.path().join(format!("{name}.tsv"));
        let trace = dir.path().join(format!("{name}.jsonl"));
        let o = run(&[
            "run", "--corpus", s(&c), "--seed", seed, "--repetitions", "30", "--out", s(&out), "--trace", s(&trace),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read_to_string(out).unwrap(), std::fs::read_to_string(trace).unwrap())
    };
    let a = go("a", "4");
    let b = go("b", "4");
    let other = go("c", "5");
    assert_eq!(a, b);
    assert_ne!(a.1, other.1);
    let lines: Vec<&str> = a.0.lines().collect();
    assert!(lines[0].starts_with("subject\tdata\tnet\t%max\t%rel"));
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[1].split('\t').nth(4), Some("100"));
    assert_eq!(a.1.lines().count(), 30);
}

#[test]
fn config_file_and_flags_combine() {
    let (dir, c) = corpus();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"repetitions": 12, "methods": ["kyburg", "loui"], "odds": {"fixed": 0.3}}"#).unwrap();
    let o = run(&["run", "--corpus", s(&c), "--seed", "2", "--config", s(&cfg), "--methods", "kyburg(.7,.9),loui"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let subjects: Vec<&str> = out.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(subjects.len(), 2);
    assert!(subjects.contains(&"kyburg-adaptive") && subjects.contains(&"loui"));
}

#[test]
fn sweeps_produce_tables() {
    let (_dir, c) = corpus();
    let base = ["run", "--corpus", s(&c), "--seed", "3", "--repetitions", "20"];
    let cal = run(&[&base[..], &["--sweep", "calibration", "--odds", "average"]].concat());
    assert_eq!(code(&cal), 0);
    assert!(stdout(&cal).lines().last().unwrap().starts_with("pooled\t160\t"));
    assert!(String::from_utf8_lossy(&cal.stderr).contains("z "));

    let conf = stdout(&run(&[&base[..], &["--sweep", "confidence"]].concat()));
    assert!(conf.contains("kyburg(.7)") && conf.contains("kyburg(.9)") && conf.contains("kyburg-adaptive"));

    let ann = stdout(&run(&[&base[..], &["--sweep", "announced", "--counts", "1,2"]].concat()));
    assert!(ann.starts_with("method\t1 properties\t2 properties"));

    let sizes = stdout(&run(&[&base[..], &["--sweep", "data-size", "--sizes", "10,30"]].concat()));
    assert_eq!(sizes.lines().count(), 17);
}

#[test]
fn compare_marks_the_frontier() {
    let (dir, c) = corpus();
    let a = dir.path().join("a.tsv");
    let b = dir.path().join("b.tsv");
    for (out, n) in [(&a, "60"), (&b, "20")] {
        let o = run(&["run", "--corpus", s(&c), "--seed", "7", "--repetitions", "25", "--data-points", n, "--out", s(out)]);
        assert_eq!(code(&o), 0);
    }
    let o = run(&["compare", s(&a), s(&b)]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().ends_with("\tfrontier"));
    assert_eq!(text.lines().count(), 17);
    assert!(text.lines().any(|l| l.starts_with("a/") || l.starts_with("b/")));
    assert!(text.lines().skip(1).any(|l| l.ends_with("\thull")));

    let bogus = dir.path().join("bogus.tsv");
    std::fs::write(&bogus, "hello\n").unwrap();
    assert_eq!(code(&run(&["compare", s(&bogus)])), 2);
    assert_eq!(code(&run(&["compare", s(&dir.path().join("none.tsv"))])), 3);
}

#[test]
fn summarize_prints_statements_and_beliefs() {
    let (_dir, c) = corpus();
    let o = run(&[
        "summarize", "--corpus", s(&c), "--announced", "(weekday) (in-use 'castor)", "--target", "(logged-on 'jackson)",
        "--beliefs",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().starts_with("(s% ((always-true) (logged-on 'jackson))"));
    assert!(text.lines().any(|l| l.starts_with("kyburg\t(")));
    let o = run(&["summarize", "--corpus", s(&c), "--announced", "(weekday", "--target", "(logged-on 'jackson)"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn serve_reports_unreadable_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["serve", "--corpus", s(&dir.path().join("none.corpus"))]);
    assert_eq!(code(&o), 3);
}
