use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tplan"))
        .args(args)
        .output()
        .expect("tplan runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn gen(dir: &Path, args: &[&str]) -> PathBuf {
    let out = dir.to_str().unwrap();
    let mut all = vec!["gen"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", out]);
    let o = tplan(&all);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    PathBuf::from(stdout(&o).trim())
}

fn files(inst: &Path) -> (String, String) {
    (
        inst.join("domain.pddl").to_str().unwrap().to_string(),
        inst.join("problem.pddl").to_str().unwrap().to_string(),
    )
}

fn summary(out: &str) -> serde_json::Value {
    let line = out.lines().find_map(|l| l.strip_prefix("; ")).expect("summary line");
    serde_json::from_str(line).unwrap()
}

#[test]
fn solve_then_validate_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = gen(tmp.path(), &["pour", "--p", "1", "--q", "2", "--litres", "3"]);
    let (d, p) = files(&inst);
    let o = tplan(&["solve", &d, &p]);
    assert!(o.status.success());
    let out = stdout(&o);
    let s = summary(&out);
    assert_eq!(s["bound"], 1);
    assert_eq!(s["solver_calls"], 1);
    assert_eq!(s["status"], "solved");
    assert_eq!(s["instance"], "pour-p1-q2-l3");

    let plan = tmp.path().join("plan.txt");
    fs::write(&plan, &out).unwrap();
    let v = tplan(&["validate", &d, &p, plan.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
}

#[test]
fn broken_plan_is_rejected_with_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = gen(tmp.path(), &["pour", "--litres", "2"]);
    let (d, p) = files(&inst);
    let plan = tmp.path().join("plan.txt");
    fs::write(&plan, "0.001: (uncap b1) [5]\n0.002: (pour b1 b2) [1]\n").unwrap();
    let report = tmp.path().join("report.json");
    let v = tplan(&["validate", &d, &p, plan.to_str().unwrap(), "--report-json", report.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(1));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(r["valid"], false);
    assert!(!r["violations"].as_array().unwrap().is_empty());

    fs::write(&plan, "not a plan\n").unwrap();
    let v = tplan(&["validate", &d, &p, plan.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(2));
}

#[test]
fn exit_codes_for_usage_and_missing_solver() {
    assert_eq!(tplan(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(tplan(&["solve"]).status.code(), Some(64));
    let tmp = tempfile::tempdir().unwrap();
    let inst = gen(tmp.path(), &["pour"]);
    let (d, p) = files(&inst);
    let o = tplan(&["solve", &d, &p, "--solver", "no-such-solver-binary"]);
    assert_eq!(o.status.code(), Some(69));
    let o = tplan(&["solve", &d, &p, "--epsilon", "-1"]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn unreachable_goal_exhausts_the_bounds() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = gen(tmp.path(), &["pour"]);
    let (d, p) = files(&inst);
    let text = fs::read_to_string(&p).unwrap().replace("(= (litres b1) 0)", "(= (litres b1) -1)");
    fs::write(&p, text).unwrap();
    let o = tplan(&["solve", &d, &p, "--max-bound", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let s = summary(&stdout(&o));
    assert_eq!(s["status"], "exhausted");
    assert_eq!(s["bound"], 3);
    assert_eq!(s["solver_calls"], 3);
}

#[test]
fn config_file_supplies_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = gen(tmp.path(), &["pour", "--litres", "5"]);
    let (d, p) = files(&inst);
    let cfg = tmp.path().join("tplan.conf");
    fs::write(&cfg, "# bound cap\nmax-bound = 1\npattern = starts-ends\n").unwrap();
    let o = tplan(&["solve", &d, &p, "--config", cfg.to_str().unwrap()]);
    assert_eq!(summary(&stdout(&o))["status"], "exhausted");
    let o = tplan(&["solve", &d, &p, "--config", cfg.to_str().unwrap(), "--max-bound", "2"]);
    assert_eq!(summary(&stdout(&o))["bound"], 2);
    fs::write(&cfg, "colour = blue\n").unwrap();
    let o = tplan(&["solve", &d, &p, "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn analyze_and_pattern_dumps_are_json() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = gen(tmp.path(), &["pour", "--p", "2", "--q", "4", "--litres", "3,3"]);
    let (d, p) = files(&inst);
    let a: serde_json::Value = serde_json::from_str(&stdout(&tplan(&["analyze", &d, &p]))).unwrap();
    let eligible: Vec<&str> = a["rolling_eligible"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(eligible.len(), 4);
    assert!(eligible.iter().all(|n| n.starts_with("pour")));
    let pat: serde_json::Value =
        serde_json::from_str(&stdout(&tplan(&["pattern", &d, &p, "--pattern", "starts-ends"]))).unwrap();
    assert_eq!(pat.as_array().unwrap().len(), 16);
    let dump = stdout(&tplan(&["dump-problem", &d, &p, "--summary"]));
    let s: serde_json::Value = serde_json::from_str(&dump).unwrap();
    assert_eq!(s["actions"], 8);
}

#[test]
fn gen_is_deterministic_and_batch_reports_each_instance() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let o = tplan(&["gen", "corpus", "--count", "5", "--seed", "3", "--out", dir.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 5);
    for n in &names {
        for f in ["domain.pddl", "problem.pddl"] {
            assert_eq!(
                fs::read(a.path().join(n).join(f)).unwrap(),
                fs::read(b.path().join(n).join(f)).unwrap()
            );
        }
    }
    let o = tplan(&["batch", a.path().to_str().unwrap(), "--jobs", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 6);
    for r in &lines[..5] {
        assert_eq!(r["status"], "solved");
        assert_eq!(r["solver_calls"], r["bound"]);
        assert_eq!(r["valid"], true);
    }
    assert_eq!(lines[5]["aggregate"]["coverage"], 1.0);
}

#[test]
fn smt_dump_is_written_per_call() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = gen(tmp.path(), &["pour", "--litres", "5"]);
    let (d, p) = files(&inst);
    let dump = tmp.path().join("smt");
    let o = tplan(&["solve", &d, &p, "--dump-smt", dump.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(dump.join("bound-1.smt2").exists());
    assert!(dump.join("bound-2.smt2").exists());
}
