//! Generation loop coupling a candidate-set automaton with a scorer.
//!
//! In constrained mode every step draws from the automaton's candidates. In
//! unconstrained mode the whole schema vocabulary is on offer at every step
//! and the output is only checked afterwards, by delinearization.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{Automaton, StepError, SymbolId, Vocabulary};
use crate::schema::Codec;
use crate::scorer::{check_scores, ScoreRequest, Scorer, ScorerError};
use crate::structure::{OutputSequence, Sentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Constrained,
    Unconstrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Highest score, lowest id on ties.
    Greedy,
    /// Draw from the softmax of the scores.
    Sample { seed: u64 },
    /// Keep the `width` best prefixes by summed score.
    Beam { width: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub mode: Mode,
    pub strategy: Strategy,
    /// Symbol budget including the end symbol; `None` means `16n + 32`.
    pub max_len: Option<usize>,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            mode: Mode::Constrained,
            strategy: Strategy::Greedy,
            max_len: None,
        }
    }
}

impl DecodeConfig {
    pub fn new(mode: Mode, strategy: Strategy) -> Self {
        DecodeConfig {
            mode,
            strategy,
            max_len: None,
        }
    }

    pub fn budget(&self, sent: &Sentence) -> usize {
        self.max_len.unwrap_or(16 * sent.len() + 32)
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if let Strategy::Beam { width: 0 } = self.strategy {
            return Err(DecodeError::Config("beam width must be at least 1".into()));
        }
        if self.max_len == Some(0) {
            return Err(DecodeError::Config("max_len must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("invalid decode configuration: {0}")]
    Config(String),
    #[error("automaton offered no candidates at step {step} before the end symbol")]
    NoCandidates { step: usize },
    #[error("no complete output within {max_len} symbols")]
    Budget { max_len: usize },
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Step(#[from] StepError),
}

/// Decodes `sent` under `codec`. Schemas without an automaton (constituency)
/// are always generated unconstrained.
pub fn decode(
    codec: &Codec,
    sent: &Sentence,
    scorer: &mut dyn Scorer,
    config: &DecodeConfig,
) -> Result<OutputSequence, DecodeError> {
    let automaton = match config.mode {
        Mode::Constrained => codec.automaton(sent),
        Mode::Unconstrained => None,
    };
    match automaton {
        Some(a) => decode_with(sent, Arc::clone(a.vocabulary()), Some(a), scorer, config),
        None => decode_with(sent, Arc::new(codec.vocabulary(sent)), None, scorer, config),
    }
}

/// Decodes with an explicit vocabulary and optional automaton. With no
/// automaton every vocabulary symbol is a candidate at every step.
pub fn decode_with(
    sent: &Sentence,
    vocab: Arc<Vocabulary>,
    automaton: Option<Box<dyn Automaton>>,
    scorer: &mut dyn Scorer,
    config: &DecodeConfig,
) -> Result<OutputSequence, DecodeError> {
    config.validate()?;
    let mut search = Search {
        sent,
        vocab,
        scorer,
        max_len: config.budget(sent),
    };
    let start = Hyp {
        ids: Vec::new(),
        automaton,
        score: 0.0,
    };
    let ids = match config.strategy {
        Strategy::Greedy => search.single(start, None)?,
        Strategy::Sample { seed } => search.single(start, Some(ChaCha8Rng::seed_from_u64(seed)))?,
        Strategy::Beam { width } => search.beam(start, width)?,
    };
    let symbols = ids.iter().map(|&id| search.vocab.symbol(id).to_string()).collect();
    Ok(OutputSequence::new(symbols).expect("decoding stops right after the end symbol"))
}

#[derive(Clone)]
struct Hyp {
    ids: Vec<SymbolId>,
    automaton: Option<Box<dyn Automaton>>,
    score: f64,
}

impl Hyp {
    fn finished(&self) -> bool {
        self.ids.last() == Some(&0)
    }

    fn push(&mut self, id: SymbolId, score: f64) -> Result<(), StepError> {
        if let Some(a) = self.automaton.as_mut() {
            a.advance(id)?;
        }
        self.ids.push(id);
        self.score += score;
        Ok(())
    }
}

struct Search<'a> {
    sent: &'a Sentence,
    vocab: Arc<Vocabulary>,
    scorer: &'a mut dyn Scorer,
    max_len: usize,
}

impl Search<'_> {
    fn candidates(&self, hyp: &Hyp) -> Result<Vec<SymbolId>, DecodeError> {
        let last_slot = hyp.ids.len() + 1 >= self.max_len;
        let ids = match &hyp.automaton {
            Some(a) => a.candidates(),
            // Unconstrained output is truncated at the budget.
            None if last_slot => vec![self.vocab.eos()],
            None => self.vocab.all_ids(),
        };
        if ids.is_empty() {
            return Err(DecodeError::NoCandidates { step: hyp.ids.len() });
        }
        Ok(ids)
    }

    fn scores(&mut self, hyp: &Hyp, candidates: &[SymbolId]) -> Result<Vec<f64>, DecodeError> {
        let prefix: Vec<String> = hyp.ids.iter().map(|&id| self.vocab.symbol(id).to_string()).collect();
        let names: Vec<String> = candidates.iter().map(|&id| self.vocab.symbol(id).to_string()).collect();
        let scores = self.scorer.score(&ScoreRequest {
            tokens: self.sent.tokens(),
            prefix: &prefix,
            candidates: &names,
        })?;
        check_scores(&names, &scores)?;
        Ok(scores)
    }

    fn single(&mut self, mut hyp: Hyp, mut rng: Option<ChaCha8Rng>) -> Result<Vec<SymbolId>, DecodeError> {
        while !hyp.finished() {
            if hyp.ids.len() >= self.max_len {
                return Err(DecodeError::Budget { max_len: self.max_len });
            }
            let cands = self.candidates(&hyp)?;
            let scores = self.scores(&hyp, &cands)?;
            let pick = match rng.as_mut() {
                None => argmax(&scores),
                Some(rng) => sample(&scores, rng),
            };
            hyp.push(cands[pick], scores[pick])?;
        }
        Ok(hyp.ids)
    }

    fn beam(&mut self, start: Hyp, width: usize) -> Result<Vec<SymbolId>, DecodeError> {
        let mut beam = vec![start];
        while beam.iter().any(|h| !h.finished()) {
            let mut pool: Vec<(f64, Vec<SymbolId>, usize, Option<SymbolId>)> = Vec::new();
            for (i, hyp) in beam.iter().enumerate() {
                if hyp.finished() {
                    pool.push((hyp.score, hyp.ids.clone(), i, None));
                    continue;
                }
                if hyp.ids.len() >= self.max_len {
                    continue;
                }
                let cands = self.candidates(hyp)?;
                let scores = self.scores(hyp, &cands)?;
                for (&c, &s) in cands.iter().zip(&scores) {
                    let mut ids = hyp.ids.clone();
                    ids.push(c);
                    pool.push((hyp.score + s, ids, i, Some(c)));
                }
            }
            if pool.is_empty() {
                return Err(DecodeError::Budget { max_len: self.max_len });
            }
            pool.sort_by(|a, b| rank(b.0, a.0).then_with(|| a.1.cmp(&b.1)));
            pool.truncate(width);
            let mut next = Vec::with_capacity(pool.len());
            for (score, _, parent, symbol) in pool {
                let mut hyp = beam[parent].clone();
                if let Some(c) = symbol {
                    hyp.push(c, score - hyp.score)?;
                    hyp.score = score;
                }
                next.push(hyp);
            }
            beam = next;
        }
        Ok(beam.swap_remove(0).ids)
    }
}

fn rank(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

/// Index of the highest score; the first one wins ties.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn sample(scores: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    WeightedIndex::new(&weights)
        .expect("the top score always has weight 1")
        .sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dict::Task;
    use crate::schema::{SchemaKind, SchemaOptions};
    use crate::scorer::{OracleScorer, RandomScorer};
    use crate::structure::{EntitySet, Entity, PosSequence, Structure};

    fn sent(s: &str) -> Sentence {
        Sentence::parse(s).unwrap()
    }

    /// Prefers whatever symbol has the highest id.
    struct Last;

    impl Scorer for Last {
        fn score(&mut self, r: &ScoreRequest<'_>) -> Result<Vec<f64>, ScorerError> {
            Ok((0..r.candidates.len()).map(|i| i as f64).collect())
        }
    }

    /// Scores everything the same.
    struct Flat;

    impl Scorer for Flat {
        fn score(&mut self, r: &ScoreRequest<'_>) -> Result<Vec<f64>, ScorerError> {
            Ok(vec![0.5; r.candidates.len()])
        }
    }

    #[test]
    fn oracle_reproduces_gold_pos() {
        let s = sent("It looks fine .");
        let gold = Structure::Pos(PosSequence::new(["PRP", "VBZ", "JJ", "."]));
        for kind in SchemaKind::ALL {
            let codec = Codec::new(Task::Pos, SchemaOptions::new(kind)).unwrap();
            let out = codec.linearize(&s, &gold).unwrap();
            let mut oracle = OracleScorer::new(out.clone());
            let got = decode(&codec, &s, &mut oracle, &DecodeConfig::default()).unwrap();
            assert_eq!(got, out, "{kind}");
        }
    }

    #[test]
    fn flat_scores_take_lowest_id() {
        let s = sent("a b");
        let codec = Codec::new(Task::Pos, SchemaOptions::new(SchemaKind::Ls)).unwrap();
        let out = decode(&codec, &s, &mut Flat, &DecodeConfig::default()).unwrap();
        let vocab = codec.vocabulary(&s);
        let first_tag = vocab.symbol(1).to_string();
        assert_eq!(out.body(), [first_tag.clone(), first_tag]);
    }

    #[test]
    fn random_constrained_ner_delinearizes() {
        let s = sent("John met Mary in New York");
        for kind in SchemaKind::ALL {
            let codec = Codec::new(Task::Ner, SchemaOptions::new(kind)).unwrap();
            for seed in 0..50 {
                let config = DecodeConfig::new(Mode::Constrained, Strategy::Sample { seed });
                let out = decode(&codec, &s, &mut RandomScorer::new(seed), &config).unwrap();
                codec.delinearize(&s, &out, false).unwrap();
            }
        }
    }

    #[test]
    fn unconstrained_truncates_at_budget() {
        let s = sent("a b");
        let codec = Codec::new(Task::Pos, SchemaOptions::new(SchemaKind::Ls)).unwrap();
        let config = DecodeConfig {
            mode: Mode::Unconstrained,
            strategy: Strategy::Greedy,
            max_len: Some(5),
        };
        let out = decode(&codec, &s, &mut Last, &config).unwrap();
        assert_eq!(out.len(), 5);
        assert!(codec.delinearize(&s, &out, false).is_err());
        assert!(codec.delinearize(&s, &out, true).is_ok());
    }

    #[test]
    fn constrained_budget_is_an_error() {
        let s = sent("a b c");
        let codec = Codec::new(Task::Pos, SchemaOptions::new(SchemaKind::Ls)).unwrap();
        let config = DecodeConfig {
            max_len: Some(2),
            ..DecodeConfig::default()
        };
        assert!(matches!(
            decode(&codec, &s, &mut Flat, &config),
            Err(DecodeError::Budget { max_len: 2 })
        ));
    }

    #[test]
    fn beam_one_matches_greedy() {
        let s = sent("Ann saw Bob in Paris");
        for task in [Task::Pos, Task::Ner, Task::Dep] {
            for kind in SchemaKind::ALL {
                let codec = Codec::new(task, SchemaOptions::new(kind)).unwrap();
                for seed in 0..10 {
                    let greedy = decode(&codec, &s, &mut RandomScorer::new(seed), &DecodeConfig::default()).unwrap();
                    let beam = DecodeConfig::new(Mode::Constrained, Strategy::Beam { width: 1 });
                    let b = decode(&codec, &s, &mut RandomScorer::new(seed), &beam).unwrap();
                    assert_eq!(greedy, b, "{task} {kind} seed {seed}");
                }
            }
        }
    }

    #[test]
    fn wide_beam_keeps_oracle_path() {
        let s = sent("Ann saw Bob");
        let codec = Codec::new(Task::Ner, SchemaOptions::new(SchemaKind::Pt)).unwrap();
        let gold = Structure::Ner(EntitySet::new(vec![Entity::new(0, 1, "PERSON"), Entity::new(2, 3, "PERSON")]));
        let out = codec.linearize(&s, &gold).unwrap();
        let config = DecodeConfig::new(Mode::Constrained, Strategy::Beam { width: 4 });
        let got = decode(&codec, &s, &mut OracleScorer::new(out.clone()), &config).unwrap();
        assert_eq!(got, out);
    }

    #[test]
    fn zero_width_is_rejected() {
        let config = DecodeConfig::new(Mode::Constrained, Strategy::Beam { width: 0 });
        assert!(config.validate().is_err());
    }

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
    }
}
