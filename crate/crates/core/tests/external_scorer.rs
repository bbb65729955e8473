use std::time::Duration;

use lexschema::decode::{decode, DecodeConfig, DecodeError, Mode, Strategy};
use lexschema::schema::{Codec, SchemaKind, SchemaOptions};
use lexschema::scorer::{ExternalScorer, ScoreRequest, Scorer, ScorerError};
use lexschema::synth::sample_corpus;
use lexschema::{Sentence, Task};

fn fixture(mode: &str) -> ExternalScorer {
    let script = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/scorer.py");
    ExternalScorer::spawn(&format!("python3 {script} {mode}"), Duration::from_secs(5)).unwrap()
}

fn strings(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

#[test]
fn uniform_scores_align_with_candidates() {
    let mut scorer = fixture("uniform");
    let tokens = strings("a b");
    let candidates = strings("X Y Z");
    let request = ScoreRequest {
        tokens: &tokens,
        prefix: &[],
        candidates: &candidates,
    };
    assert_eq!(scorer.score(&request).unwrap(), vec![0.0; 3]);
    // The same process keeps answering.
    let prefix = strings("X");
    let request = ScoreRequest {
        prefix: &prefix,
        ..request
    };
    assert_eq!(scorer.score(&request).unwrap().len(), 3);
}

#[test]
fn constrained_decodes_through_the_pipe_read_back() {
    let mut scorer = fixture("uniform");
    let corpus = sample_corpus();
    for task in [Task::Pos, Task::Ner, Task::Dep] {
        for kind in SchemaKind::ALL {
            let codec = Codec::new(task, SchemaOptions::new(kind)).unwrap();
            for record in corpus.iter().take(5) {
                let out = decode(&codec, &record.sentence, &mut scorer, &DecodeConfig::default()).unwrap();
                codec.delinearize(&record.sentence, &out, false).unwrap();
            }
        }
    }
}

#[test]
fn eos_preferring_scorer_stops_unconstrained_output_at_once() {
    let mut scorer = fixture("prefer-eos");
    let codec = Codec::new(Task::Ner, SchemaOptions::new(SchemaKind::Lt)).unwrap();
    let sent = Sentence::parse("John lives here").unwrap();
    let config = DecodeConfig::new(Mode::Unconstrained, Strategy::Greedy);
    let out = decode(&codec, &sent, &mut scorer, &config).unwrap();
    assert!(out.body().is_empty());
}

fn first_error(mode: &str) -> ScorerError {
    let mut scorer = fixture(mode);
    let codec = Codec::new(Task::Pos, SchemaOptions::new(SchemaKind::Ls)).unwrap();
    let sent = Sentence::parse("a b").unwrap();
    match decode(&codec, &sent, &mut scorer, &DecodeConfig::default()) {
        Err(DecodeError::Scorer(e)) => e,
        other => panic!("expected a scorer error, got {other:?}"),
    }
}

#[test]
fn short_reply_is_a_count_mismatch() {
    assert!(matches!(first_error("short"), ScorerError::WrongCount { .. }));
}

#[test]
fn non_json_reply_is_malformed() {
    match first_error("malformed") {
        ScorerError::Malformed { line, .. } => assert_eq!(line, "not json"),
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn error_object_is_passed_through() {
    match first_error("error") {
        ScorerError::Remote(message) => assert_eq!(message, "model unavailable"),
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn exiting_scorer_is_detected() {
    assert!(matches!(first_error("exit"), ScorerError::Exited));
}

#[test]
fn silent_scorer_times_out() {
    let script = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/scorer.py");
    let mut scorer =
        ExternalScorer::spawn(&format!("python3 {script} silent"), Duration::from_millis(300)).unwrap();
    let tokens = strings("a");
    let candidates = strings("X");
    let request = ScoreRequest {
        tokens: &tokens,
        prefix: &[],
        candidates: &candidates,
    };
    assert!(matches!(scorer.score(&request), Err(ScorerError::Timeout(_))));
}

#[test]
fn request_wire_format() {
    let tokens = strings("a b");
    let prefix = strings("X");
    let candidates = strings("Y </s>");
    let request = ScoreRequest {
        tokens: &tokens,
        prefix: &prefix,
        candidates: &candidates,
    };
    assert_eq!(
        serde_json::to_string(&request).unwrap(),
        r#"{"tokens":["a","b"],"prefix":["X"],"candidates":["Y","</s>"]}"#
    );
}
