use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use stinespring_lab::channels::{random_channel, ChannelFile, KrausChannel};
use stinespring_lab::cli::{resolve_seed, DEFAULT_SEED, EXIT_FAIL, EXIT_OK, EXIT_USAGE, SEED_ENV};
use stinespring_lab::linalg::RngStream;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stinespring-lab"));
    c.env_remove(SEED_ENV);
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_channel(dir: &Path, name: &str, ch: &KrausChannel) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(&ChannelFile::from_kraus(ch)).unwrap()).unwrap();
    path
}

struct Fixture {
    dir: TempDir,
    a: PathBuf,
    b: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let mut rng = RngStream::new(31).rng();
        let a = write_channel(dir.path(), "a.json", &random_channel(2, 2, 2, &mut rng).unwrap());
        let b = write_channel(dir.path(), "b.json", &random_channel(2, 2, 1, &mut rng).unwrap());
        Self { dir, a, b }
    }

    fn s(p: &Path) -> &str {
        p.to_str().unwrap()
    }
}

#[test]
fn repro_example_exits_cleanly() {
    let out = run(&["repro", "example1", "--n-max", "4"]);
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&out);
    assert_eq!(rep["name"], "example1");
    let text = run(&["repro", "example1", "--n-max", "3", "--format", "text"]);
    assert_eq!(text.status.code(), Some(EXIT_OK));
    assert!(!text.stdout.is_empty());
}

#[test]
fn fidelity_of_a_channel_with_itself() {
    let f = Fixture::new();
    let out = run(&["fidelity", Fixture::s(&f.a), Fixture::s(&f.a)]);
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(v["gap"].as_f64().unwrap() <= 1e-6);
    let d = json(&run(&["diamond", Fixture::s(&f.a), Fixture::s(&f.b)]))["value"].as_f64().unwrap();
    let b = json(&run(&["bures", Fixture::s(&f.a), Fixture::s(&f.b)]))["value"].as_f64().unwrap();
    assert!(b * b <= d + 1e-6);
}

#[test]
fn seeded_runs_are_reproducible() {
    let f = Fixture::new();
    let args = ["minimize", Fixture::s(&f.a), Fixture::s(&f.b), "--seed", "0", "--restarts", "4"];
    let x = run(&args);
    let y = run(&args);
    assert_eq!(x.status.code(), Some(EXIT_OK));
    assert_eq!(x.stdout, y.stdout);
    let z = bin().args(&args[..3]).args(["--restarts", "4"]).env(SEED_ENV, "0").output().unwrap();
    assert_eq!(x.stdout, z.stdout);
}

#[test]
fn usage_errors_exit_with_two() {
    let f = Fixture::new();
    assert_eq!(run(&["fidelity", "--no-such-flag"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(run(&[]).status.code(), Some(EXIT_USAGE));
    let missing = f.dir.path().join("missing.json");
    let out = run(&["fidelity", Fixture::s(&f.a), Fixture::s(&missing)]);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
    let garbage = f.dir.path().join("garbage.json");
    std::fs::write(&garbage, "{not json").unwrap();
    assert_eq!(run(&["diamond", Fixture::s(&garbage), Fixture::s(&f.a)]).status.code(), Some(EXIT_USAGE));
    let wide = write_channel(f.dir.path(), "wide.json", &KrausChannel::identity(3));
    assert_eq!(run(&["fidelity", Fixture::s(&f.a), Fixture::s(&wide)]).status.code(), Some(EXIT_USAGE));
    let bad_seed = bin().args(["minimize", Fixture::s(&f.a), Fixture::s(&f.b)]).env(SEED_ENV, "x").output().unwrap();
    assert_eq!(bad_seed.status.code(), Some(EXIT_USAGE));
    assert_eq!(run(&["--help"]).status.code(), Some(EXIT_OK));
}

#[test]
fn dilate_emits_a_readable_isometry() {
    let f = Fixture::new();
    let rotated = f.dir.path().join("rotated.json");
    let out = run(&["dilate", Fixture::s(&f.a), Fixture::s(&f.b), "--emit-isometry", Fixture::s(&rotated)]);
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["dim_env"], 3);
    let dist = v["dist"].as_f64().unwrap();
    assert!((dist - v["bures"].as_f64().unwrap()).abs() < 1e-5);
    // the emitted file induces the second channel
    let f2 = json(&run(&["fidelity", Fixture::s(&f.b), Fixture::s(&rotated)]));
    assert!((f2["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    let f1 = json(&run(&["fidelity", Fixture::s(&f.a), Fixture::s(&rotated)]));
    assert!((f1["value"].as_f64().unwrap() - v["fidelity"]["value"].as_f64().unwrap()).abs() < 1e-6);
}

#[test]
fn check_conjecture_reports_every_check() {
    let f = Fixture::new();
    let out = run(&["check-conjecture", Fixture::s(&f.a), Fixture::s(&f.b), "--restarts", "4"]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v = json(&out);
    assert_eq!(v["checks"]["conjecture_bound"]["verdict"], "pass");
    assert_eq!(v["checks"].as_object().unwrap().len(), 9);
}

#[test]
fn fuzz_writes_json_lines() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("out.jsonl");
    let args = ["fuzz", "--trials", "4", "--seed", "3", "--n-max", "2", "--m-max", "4", "--restarts", "4"];
    let out = bin().args(args).args(["--out", Fixture::s(&path)]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["violations"], 0);
    let body = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<Value> = body.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4);
    assert!(lines.iter().enumerate().all(|(i, r)| r["trial"] == i as u64 && r.get("wall_time").is_none()));
    let stdout = run(&args);
    assert_eq!(stdout.stdout, body.as_bytes());
    assert_eq!(run(&["fuzz", "--trials", "0"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(run(&["fuzz", "--slice", "prop1", "--m-max", "1"]).status.code(), Some(EXIT_USAGE));
}

#[test]
fn seed_precedence() {
    assert_eq!(resolve_seed(Some(7), Some("9")).unwrap(), 7);
    assert_eq!(resolve_seed(None, Some("9")).unwrap(), 9);
    assert_eq!(resolve_seed(None, None).unwrap(), DEFAULT_SEED);
    assert_eq!(resolve_seed(None, Some("-1")).unwrap_err().code, EXIT_USAGE);
}

#[test]
fn solver_gap_above_tolerance_fails() {
    let f = Fixture::new();
    let out = run(&["diamond", Fixture::s(&f.a), Fixture::s(&f.b), "--gap-tol", "0"]);
    assert_eq!(out.status.code(), Some(EXIT_FAIL));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gap"));
    assert!(json(&out)["value"].as_f64().is_some());
}
