use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tdldpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdldpc")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = tdldpc(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn construct_writes_alist_and_descriptor() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let s = ok(&["construct", "--q", "13", "--alphas", "1,4", "--out", path(&out)]);
    assert!(s.contains("girth = 6"), "{s}");
    let alist = fs::read_to_string(out.join("H.alist")).unwrap();
    assert!(alist.starts_with("169 52\n4 13\n"));
    let desc: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("code.json")).unwrap()).unwrap();
    assert_eq!(desc["girth"], 6);
    assert_eq!(desc["N"], 169);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn invalid_parameters_are_usage_errors_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    for args in [
        vec!["construct", "--q", "4", "--alphas", "1,2"],
        vec!["construct", "--q", "13", "--alphas", "1,1"],
        vec!["simulate", "--q", "13", "--alphas", "1,4", "--ebn0", "5", "--frames", "0"],
        vec!["derive", "--k", "4", "--candidate", "(9,9)"],
        vec!["classify", "--k", "9", "--t", "3"],
        vec!["construct", "--q", "13"],
    ] {
        let mut a = args.clone();
        a.extend(["--out", path(&out)]);
        let o = tdldpc(&a);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!out.exists(), "{args:?}");
    }
}

#[test]
fn other_exit_categories() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(tdldpc(&["replay", path(&missing)]).status.code(), Some(4));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"not\": \"a manifest\"}").unwrap();
    assert_eq!(tdldpc(&["replay", path(&bad)]).status.code(), Some(3));
}

#[test]
fn classify_counts() {
    assert!(ok(&["classify", "--k", "3", "--t", "6"]).starts_with("23 candidates"));
    assert!(ok(&["classify", "--k", "4", "--t", "6"]).starts_with("13 candidates"));
    assert!(ok(&["classify", "--k", "3", "--t", "2"]).starts_with("0 candidates"));
}

#[test]
fn analyze_reports() {
    let s = ok(&["analyze", "--q", "13", "--alphas", "1,4"]);
    assert!(s.contains("violated: C8, C20, C23, C24"), "{s}");
    for l in ["(4,4)", "(6,0)", "(6,2){1}", "(6,2){2}", "(6,2){3}", "(6,2){4}"] {
        assert!(s.lines().any(|x| x.trim_start().starts_with(l) && x.ends_with("absent")), "{l}\n{s}");
    }
    let s = ok(&["analyze", "--q", "13", "--alphas", "1,2"]);
    assert!(s.contains("violated: C2\n"));
    assert!(s.lines().any(|x| x.trim_start().starts_with("(4,4)") && x.contains("present")));
    let s = ok(&["analyze", "--q", "29", "--alphas", "1,12", "--constraints-only"]);
    assert!(s.contains("recommended: yes"), "{s}");
}

#[test]
fn derive_prints_constraints() {
    let s = ok(&["derive", "--k", "4", "--candidate", "(4,4)"]);
    assert!(s.contains(": C4\n"));
    for c in ["C1", "C2", "C3"] {
        assert!(s.contains(&format!(": {c}\n")), "{s}");
    }
    let s = ok(&["derive", "--k", "3", "--candidate", "(4,0)"]);
    assert!(s.contains("combined: char != 2"), "{s}");
    let s = ok(&["derive", "--k", "4", "--candidate", "(6,2){2}"]);
    assert!(s.contains("combined: true"), "{s}");
}

#[test]
fn simulation_replays_identically_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("t1");
    ok(&[
        "simulate",
        "--q",
        "7",
        "--alphas",
        "1,2",
        "--ebn0",
        "2,3",
        "--frames",
        "300",
        "--max-iters",
        "30",
        "--seed",
        "7",
        "--threads",
        "1",
        "--out",
        path(&first),
    ]);
    let csv = fs::read(first.join("sim.csv")).unwrap();
    let json = fs::read(first.join("reports.json")).unwrap();
    for t in ["1", "2", "8"] {
        let again = dir.path().join(format!("replay{t}"));
        ok(&["replay", path(&first.join("manifest.json")), "--out", path(&again), "--threads", t]);
        assert_eq!(fs::read(again.join("sim.csv")).unwrap(), csv, "threads {t}");
        assert_eq!(fs::read(again.join("reports.json")).unwrap(), json, "threads {t}");
    }
    let direct = dir.path().join("t8");
    ok(&[
        "simulate",
        "--q",
        "7",
        "--alphas",
        "1,2",
        "--ebn0",
        "2,3",
        "--frames",
        "300",
        "--max-iters",
        "30",
        "--seed",
        "7",
        "--threads",
        "8",
        "--out",
        path(&direct),
    ]);
    assert_eq!(fs::read(direct.join("sim.csv")).unwrap(), csv);
}
