use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hccov_core::experiments::{self, load_corpus, Settings};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hccov"))
        .current_dir(root())
        .env_remove("HCCOV_RESULTS")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn missing_file_exits_one() {
    let o = run(&["coverage", "missing.sl"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.sl"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["rq1", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn gap_on_p1() {
    let o = run(&["gap", "corpus/p1_add_abs.sl"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("SCC: 80.00\n"));
    assert!(text.contains("statement gap: 20.00 pp\n"));
    assert!(text.contains("gap statements: s4\n"));
}

#[test]
fn recommend_and_enrich_p1() {
    let o = run(&["recommend", "corpus/p1_add_abs.sl", "--top-k", "3"]);
    assert_eq!(stdout(&o), "rank,target,insertion_test,score,would_check_ids\n1,g,t1,1,s4\n");
    let o = run(&["enrich", "corpus/p1_add_abs.sl"]);
    assert!(stdout(&o).contains("assert g == 7;"));
}

#[test]
fn run_reports_red_tests() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("red.sl");
    fs::write(&f, "fn f() { return 1; } test t { x = f(); assert x == 2; }").unwrap();
    let o = run(&["run", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("t: "));
}

#[test]
fn smoke_fails_on_corrupted_program() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.sl");
    fs::write(&f, "fn broken( {").unwrap();
    let out = dir.path().join("out");
    let o = run(&["smoke", f.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("Trace file generated: FAIL"));
}

#[test]
fn env_overrides_out() {
    let dir = tempfile::tempdir().unwrap();
    let env_out = dir.path().join("env");
    let flag_out = dir.path().join("flag");
    let o = Command::new(env!("CARGO_BIN_EXE_hccov"))
        .current_dir(root())
        .env("HCCOV_RESULTS", &env_out)
        .args(["rq1", "corpus/p1_add_abs.sl", "--out"])
        .arg(&flag_out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(env_out.join("scc.csv").exists());
    assert!(!flag_out.exists());
}

#[test]
fn subcommands_match_library() {
    let corpus = load_corpus(&root().join("corpus")).unwrap();
    let s = Settings {
        seeds: vec![1, 2],
        ..Settings::default()
    };
    type Rq = fn(&[experiments::CorpusEntry], &Settings, &Path) -> bool;
    let cases: [(&str, Rq); 4] = [
        ("rq1", |c, s, o| experiments::rq1(c, s, o).is_ok()),
        ("rq2", |c, s, o| experiments::rq2(c, s, o).is_ok()),
        ("rq3", |c, s, o| experiments::rq3(c, s, o).is_ok()),
        ("rq4", |c, s, o| experiments::rq4(c, s, o).is_ok()),
    ];
    for (name, lib) in cases {
        let dir = tempfile::tempdir().unwrap();
        let cli_out = dir.path().join("cli");
        let lib_out = dir.path().join("lib");
        let o = run(&[name, "corpus", "--seeds", "1,2", "--out", cli_out.to_str().unwrap()]);
        assert!(o.status.success(), "{name}");
        assert!(lib(&corpus, &s, &lib_out), "{name}");
        assert_eq!(tree(&cli_out), tree(&lib_out), "{name}");
    }
}

#[test]
fn rq2_golden_correlation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rq2");
    assert!(run(&["rq2", "corpus", "--out", out.to_str().unwrap()]).status.success());
    let c = fs::read_to_string(out.join("correlation.csv")).unwrap();
    assert!(c.ends_with("\npooled,180,-0.9487,-0.9608\n"), "{c}");
}
