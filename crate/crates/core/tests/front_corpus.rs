use std::fs;

use liquid_mini::front::{self, parser, pretty};

fn corpus() -> Vec<(String, String)> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus");
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "lm") {
            out.push((p.display().to_string(), fs::read_to_string(&p).unwrap()));
        }
    }
    out.sort();
    assert!(out.len() >= 10);
    out
}

#[test]
fn every_corpus_file_elaborates() {
    for (path, text) in corpus() {
        if let Err(e) = front::load(&path, &text) {
            panic!("{e}");
        }
    }
}

#[test]
fn pretty_printing_round_trips_on_corpus() {
    for (path, text) in corpus() {
        let a = parser::parse_program(&path, &text).unwrap();
        let printed = pretty::pretty_file(&a);
        let b = parser::parse_program(&path, &printed).unwrap_or_else(|e| panic!("{path}: {e}\n{printed}"));
        assert_eq!(pretty::pretty_file(&b), printed, "{path}");
    }
}

#[test]
fn every_corpus_file_infers_shapes() {
    for (path, text) in corpus() {
        let p = front::load(&path, &text).unwrap();
        if let Err(e) = liquid_mini::hm::infer_program(&p) {
            panic!("{path}: {e}");
        }
    }
}
