use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const INSTANCE: &str = "rmm 1\n2 2 2\na0 : p0@1 p1@2\na1 : p0@1\n";
const EVENTS: &str = "arrive a2 : p1@1\narrive p2 : a1@5 a2@1\narrive a3 :\n";

fn rmm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmm")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("inst.txt"), INSTANCE).unwrap();
    fs::write(dir.path().join("events.txt"), EVENTS).unwrap();
    fs::write(dir.path().join("prefs.txt"), "a0 : p0 p1\na1 : p0\n").unwrap();
    fs::write(dir.path().join("pref_events.txt"), "arrive a2 : p0\narrive p2 : a0@1\n").unwrap();
    dir
}

#[test]
fn solve_prints_matching_and_dumps_each_phase() {
    let dir = workspace();
    let out = rmm(&["solve", "inst.txt", "--dump-phases", "phases"], dir.path());
    assert!(out.status.success());
    assert!(stdout(&out).ends_with("signature: (1,1)\n"));
    let phase1 = fs::read_to_string(dir.path().join("phases/phase_1.txt")).unwrap();
    assert!(phase1.contains("match a1 p0") && phase1.contains("label p0 O"));
    assert!(dir.path().join("phases/phase_2.txt").exists());
}

#[test]
fn stream_verifies_and_emits_paths() {
    let dir = workspace();
    let out = rmm(&["stream", "inst.txt", "events.txt", "--emit-paths", "--verify", "--dump-phases", "after"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("path a2 p1 a0\n"));
    assert!(text.contains("path a3\n"));
    assert!(text.ends_with("signature: (2,1,0,0,0)\n"));
    assert!(dir.path().join("after/event_1/phase_5.txt").exists());
}

#[test]
fn check_only_reports_each_event() {
    let dir = workspace();
    let out = rmm(&["stream", "inst.txt", "events.txt", "--check-only"], dir.path());
    assert_eq!(stdout(&out), "event 0: improves\nevent 1: improves\nevent 2: unchanged\n");
}

#[test]
fn usage_and_input_errors_exit_one() {
    let dir = workspace();
    assert_eq!(rmm(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(rmm(&["solve"], dir.path()).status.code(), Some(1));
    fs::write(dir.path().join("bad.txt"), "rmm 1\n1 1 1\na0 : p7@1\n").unwrap();
    assert_eq!(rmm(&["solve", "bad.txt"], dir.path()).status.code(), Some(1));
    assert_eq!(rmm(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn popular_commands() {
    let dir = workspace();
    let out = rmm(&["popular", "prefs.txt"], dir.path());
    assert!(stdout(&out).starts_with("popular\n"));
    let out = rmm(&["popular-stream", "prefs.txt", "pref_events.txt"], dir.path());
    let text = stdout(&out);
    assert!(text.starts_with("event 0: popular (incremental)\nevent 1: popular (resolved)\n"), "{text}");
    fs::write(dir.path().join("tied.txt"), "a0 : (p0 p1)\n").unwrap();
    assert_eq!(rmm(&["popular", "tied.txt"], dir.path()).status.code(), Some(1));
}

#[test]
fn oracle_commands() {
    let dir = workspace();
    let out = rmm(&["oracle", "signature", "inst.txt"], dir.path());
    assert!(stdout(&out).ends_with("signature: (1,1)\n"));
    let out = rmm(&["oracle", "paths", "inst.txt", "events.txt"], dir.path());
    assert!(stdout(&out).lines().any(|l| l == "a2 p1 a0"));
}

#[test]
fn bench_writes_one_report_per_seed() {
    let dir = workspace();
    let args = ["bench", "--n", "20", "--posts", "20", "--r", "3", "--density", "0.2", "--events", "4"];
    let out = rmm(&[&args[..], &["--seed", "5", "--out", "one.csv"]].concat(), dir.path());
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("one.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("event_index,mode,wall_ns,edges_touched,signature"));
    assert_eq!(lines.count(), 8);
    let out = rmm(&[&args[..], &["--seed", "1,2", "--mode", "update", "--jobs", "2", "--out", "r.csv"]].concat(), dir.path());
    assert!(out.status.success());
    for seed in [1, 2] {
        let csv = fs::read_to_string(dir.path().join(format!("r.seed{seed}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 5);
    }
}
