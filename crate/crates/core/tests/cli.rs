use std::process::Command;

use liquid_mini::corpus::{corpus_dir, corpus_manifest, Expected};

fn run(args: &[&str]) -> (String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_liquid-mini")).args(args).output().unwrap();
    (String::from_utf8(out.stdout).unwrap(), out.status.code().unwrap())
}

fn corpus(name: &str) -> String {
    corpus_dir().join(name).to_string_lossy().to_string()
}

#[test]
fn every_corpus_file_gets_its_verdict() {
    for c in corpus_manifest() {
        let path = c.path.to_string_lossy().to_string();
        let (out, code) = run(&[&path]);
        let last = out.lines().last().unwrap_or("");
        match c.verdict {
            Expected::Safe => {
                assert_eq!((last, code), ("SAFE", 0), "{path}\n{out}");
            }
            Expected::Unsafe => {
                assert_eq!((last, code), ("UNSAFE", 1), "{path}\n{out}");
                let (l, col) = c.location.unwrap();
                let first = out.lines().next().unwrap();
                assert!(first.starts_with(&format!("{path}:{l}:{col}: error:")), "{first}");
            }
        }
    }
}

#[test]
fn missing_file_is_a_tool_error() {
    let (out, code) = run(&["/nonexistent/file.lm"]);
    assert_eq!(code, 2);
    assert!(out.contains("error"), "{out}");
}

#[test]
fn syntax_error_is_a_tool_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.lm");
    std::fs::write(&p, "f x = = 1\n").unwrap();
    let (_, code) = run(&[&p.to_string_lossy()]);
    assert_eq!(code, 2);
}

#[test]
fn constraint_dump_shows_max_obligations() {
    let (out, code) = run(&["--dump-constraints", &corpus("max.lm")]);
    assert_eq!(code, 0);
    assert!(out.lines().any(|l| l.ends_with("x:Int, y:Int, x >= y |- v = x <: v >= x && v >= y")), "{out}");
    assert!(out.lines().any(|l| l.ends_with("x:Int, y:Int, not (x >= y) |- v = y <: v >= x && v >= y")), "{out}");
}

#[test]
fn smt_queries_are_written_per_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_string_lossy().to_string();
    let (_, code) = run(&["--dump-smt", &d, &corpus("max.lm")]);
    assert_eq!(code, 0);
    let files: Vec<_> = walk(dir.path());
    assert!(files.iter().any(|f| f.extension().is_some_and(|e| e == "smt2")), "{files:?}");
}

fn walk(p: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(p).unwrap() {
        let e = e.unwrap().path();
        if e.is_dir() {
            out.extend(walk(&e));
        } else {
            out.push(e);
        }
    }
    out
}

#[test]
fn parallel_run_matches_sequential() {
    let paths: Vec<String> = corpus_manifest().iter().map(|c| c.path.to_string_lossy().to_string()).collect();
    let mut seq = vec!["--dump-solution"];
    seq.extend(paths.iter().map(String::as_str));
    let mut par = vec!["--jobs", "4"];
    par.extend(seq.iter().copied());
    let a = run(&seq);
    let b = run(&par);
    assert_eq!(a, b);
    assert_eq!(a.1, 1);
}

#[test]
fn nonpositive_timeout_is_rejected() {
    let (_, code) = run(&["--timeout", "0", &corpus("max.lm")]);
    assert_eq!(code, 2);
}
