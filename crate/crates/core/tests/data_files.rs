use std::path::PathBuf;

use lexschema::io::{read_bracketed, read_conll_dep, read_conll_ner, read_jsonl, write_jsonl};
use lexschema::synth::sample_corpus;
use lexschema::ReadOptions;

fn data(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect();
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn bundled_jsonl_is_the_generated_sample() {
    let text = data("sample.jsonl");
    assert_eq!(text, write_jsonl(&sample_corpus()));
    let records = read_jsonl(&text).unwrap();
    assert!(records.len() >= 200);
}

#[test]
fn bundled_treebank_matches_jsonl() {
    let corpus = sample_corpus();
    let read = read_bracketed(&data("sample.ptb"), &ReadOptions::default()).unwrap();
    assert!(read.dropped.is_empty());
    assert_eq!(read.records.len(), corpus.len());
    for (t, r) in read.records.iter().zip(&corpus) {
        assert_eq!(t.sentence, r.sentence);
        assert_eq!(Some(&t.tree), r.con.as_ref());
        assert_eq!(t.pos.as_ref(), r.pos.as_ref());
    }
}

#[test]
fn bundled_ner_columns_match_jsonl() {
    let corpus = sample_corpus();
    let read = read_conll_ner(&data("sample.ner.conll"), &ReadOptions::default()).unwrap();
    assert_eq!(read.records.len(), corpus.len());
    for ((sent, set), r) in read.records.iter().zip(&corpus) {
        assert_eq!(sent, &r.sentence);
        assert_eq!(Some(set), r.ner.as_ref());
    }
}

#[test]
fn bundled_dependency_columns_match_jsonl() {
    let corpus = sample_corpus();
    let read = read_conll_dep(&data("sample.dep.conll"), &ReadOptions::default()).unwrap();
    assert_eq!(read.records.len(), corpus.len());
    for (d, r) in read.records.iter().zip(&corpus) {
        assert_eq!(d.sentence, r.sentence);
        assert_eq!(Some(&d.tree), r.dep.as_ref());
        assert!(d.projective);
    }
}
