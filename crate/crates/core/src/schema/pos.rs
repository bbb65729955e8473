//! Part-of-speech schemas.
//!
//! * LS: one tag per token.
//! * LT: each token followed by its tag.
//! * PT: `` `` x '' is a description ; `` per token, the last phrase ending
//!   in `.` instead of `;`.

use std::sync::Arc;

use super::{loose_phrases, prompt_phrases, quoted, SchemaError, SchemaKind, Variant};
use crate::automaton::{guarded, normalize, Automaton, StepError, SymbolId, Vocabulary};
use crate::dict::DescriptionDict;
use crate::structure::{OutputSequence, PosSequence, Sentence, CLOSE_QUOTE, OPEN_QUOTE, SEP, STOP};
use crate::trie::{NodeId, Trie};

/// The word `is` that opens every POS and NER suffix.
pub const IS: &str = "is";

#[derive(Debug, Clone)]
pub struct PosCodec {
    dict: Arc<DescriptionDict>,
    kind: SchemaKind,
    variant: Variant,
    suffixes: Arc<Trie<String>>,
}

impl PosCodec {
    pub fn new(dict: Arc<DescriptionDict>, kind: SchemaKind, variant: Variant) -> Self {
        let mut suffixes = Trie::new();
        for (label, _) in dict.entries() {
            let phrase = suffix_words(&dict, variant, label);
            suffixes
                .insert(&phrase, label.to_string())
                .expect("suffixes are never empty");
        }
        PosCodec {
            dict,
            kind,
            variant,
            suffixes: Arc::new(suffixes),
        }
    }

    pub fn kind(&self) -> SchemaKind {
        self.kind
    }

    pub fn dict(&self) -> &DescriptionDict {
        &self.dict
    }

    /// Trie of `is <description> ;` suffixes keyed to tags.
    pub fn suffix_trie(&self) -> &Trie<String> {
        &self.suffixes
    }

    fn check_label(&self, label: &str) -> Result<(), SchemaError> {
        if self.dict.contains(label) {
            Ok(())
        } else {
            Err(SchemaError::UnknownLabel(label.to_string()))
        }
    }

    pub fn linearize(&self, sent: &Sentence, tags: &PosSequence) -> Result<OutputSequence, SchemaError> {
        if tags.tags.len() != sent.len() {
            return Err(SchemaError::InvalidStructure(format!(
                "{} tags for {} tokens",
                tags.tags.len(),
                sent.len()
            )));
        }
        let mut out: Vec<String> = Vec::new();
        for (i, tag) in tags.tags.iter().enumerate() {
            self.check_label(tag)?;
            match self.kind {
                SchemaKind::Ls => out.push(tag.clone()),
                SchemaKind::Lt => {
                    out.push(sent.token(i).to_string());
                    out.push(tag.clone());
                }
                SchemaKind::Pt => {
                    out.push(OPEN_QUOTE.into());
                    out.push(sent.token(i).to_string());
                    out.push(CLOSE_QUOTE.into());
                    let mut words = suffix_words(&self.dict, self.variant, tag);
                    if i + 1 == sent.len() {
                        *words.last_mut().expect("suffix ends with a separator") = STOP.to_string();
                    }
                    out.extend(words);
                }
            }
        }
        Ok(OutputSequence::from_body(out).expect("body has no end symbol"))
    }

    pub fn delinearize(&self, sent: &Sentence, out: &OutputSequence, lenient: bool) -> Result<PosSequence, SchemaError> {
        if lenient {
            return Ok(self.repair(sent, out));
        }
        let body = out.body();
        let n = sent.len();
        let mut tags = Vec::with_capacity(n);
        match self.kind {
            SchemaKind::Ls => {
                for (i, sym) in body.iter().enumerate() {
                    if i >= n {
                        return Err(SchemaError::malformed(i, "more tags than tokens"));
                    }
                    self.check_label(sym)
                        .map_err(|_| SchemaError::malformed(i, format!("{sym:?} is not a tag")))?;
                    tags.push(sym.clone());
                }
            }
            SchemaKind::Lt => {
                if body.len() > 2 * n {
                    return Err(SchemaError::malformed(2 * n, "more symbols than token/tag pairs"));
                }
                for (i, pair) in body.chunks(2).enumerate() {
                    if pair[0] != sent.token(i) {
                        return Err(SchemaError::malformed(
                            2 * i,
                            format!("expected token {:?}, found {:?}", sent.token(i), pair[0]),
                        ));
                    }
                    let Some(tag) = pair.get(1) else {
                        return Err(SchemaError::Incomplete(format!("token {i} has no tag")));
                    };
                    self.check_label(tag)
                        .map_err(|_| SchemaError::malformed(2 * i + 1, format!("{tag:?} is not a tag")))?;
                    tags.push(tag.clone());
                }
            }
            SchemaKind::Pt => {
                let phrases = prompt_phrases(body)?;
                for (k, (start, phrase)) in phrases.iter().enumerate() {
                    if k >= n {
                        return Err(SchemaError::malformed(*start, "more phrases than tokens"));
                    }
                    tags.push(self.parse_phrase(sent.token(k), *start, phrase)?);
                }
            }
        }
        if tags.len() != n {
            return Err(SchemaError::Incomplete(format!("{} of {} tokens tagged", tags.len(), n)));
        }
        Ok(PosSequence { tags })
    }

    fn parse_phrase(&self, token: &str, start: usize, phrase: &[String]) -> Result<String, SchemaError> {
        if phrase.len() < 4 || phrase[0] != OPEN_QUOTE || phrase[2] != CLOSE_QUOTE {
            return Err(SchemaError::malformed(start, "phrase must start with a quoted token"));
        }
        if phrase[1] != token {
            return Err(SchemaError::malformed(
                start + 1,
                format!("expected token {token:?}, found {:?}", phrase[1]),
            ));
        }
        let mut suffix: Vec<&str> = phrase[3..].iter().map(String::as_str).collect();
        suffix.push(SEP);
        self.suffixes
            .get(&suffix)
            .cloned()
            .ok_or_else(|| SchemaError::malformed(start + 3, format!("unknown description {:?}", phrase[3..].join(" "))))
    }

    /// Best-effort tags for a freely generated output: LS is padded or
    /// truncated; LT and PT are aligned by the tokens they mention, and any
    /// position left unaligned gets the dictionary's default tag.
    fn repair(&self, sent: &Sentence, out: &OutputSequence) -> PosSequence {
        let n = sent.len();
        let fallback = self.dict.default_label().to_string();
        let mut tags: Vec<Option<String>> = vec![None; n];
        let body = out.body();
        match self.kind {
            SchemaKind::Ls => {
                for (slot, sym) in tags.iter_mut().zip(body) {
                    if self.dict.contains(sym) {
                        *slot = Some(sym.clone());
                    }
                }
            }
            SchemaKind::Lt => {
                let mut k = 0;
                let mut i = 0;
                while i < body.len() && k < n {
                    if let Some(j) = (k..n).find(|&j| sent.token(j) == body[i]) {
                        if let Some(tag) = body.get(i + 1).filter(|t| self.dict.contains(t)) {
                            tags[j] = Some(tag.clone());
                            i += 1;
                        }
                        k = j + 1;
                    }
                    i += 1;
                }
            }
            SchemaKind::Pt => {
                let mut k = 0;
                for (_, phrase) in loose_phrases(body) {
                    let Some((inner, after)) = quoted(phrase) else { continue };
                    let Some(tok) = inner.first() else { continue };
                    let Some(j) = (k..n).find(|&j| sent.token(j) == tok) else { continue };
                    let mut suffix: Vec<&str> = phrase[after..].iter().map(String::as_str).collect();
                    suffix.push(SEP);
                    tags[j] = self.suffixes.get(&suffix).cloned();
                    k = j + 1;
                }
            }
        }
        PosSequence {
            tags: tags.into_iter().map(|t| t.unwrap_or_else(|| fallback.clone())).collect(),
        }
    }

    pub fn vocabulary(&self, sent: &Sentence) -> Vocabulary {
        let mut v = Vocabulary::new();
        if self.kind == SchemaKind::Pt {
            v.extend([SEP, STOP, OPEN_QUOTE, CLOSE_QUOTE, IS]);
        }
        if self.kind != SchemaKind::Pt || self.variant == Variant::DecLex {
            v.extend(self.dict.labels());
        }
        if self.kind == SchemaKind::Pt {
            for (label, _) in self.dict.entries() {
                v.extend(suffix_words(&self.dict, self.variant, label));
            }
        }
        if self.kind != SchemaKind::Ls {
            v.extend(sent.tokens());
        }
        v
    }

    pub fn automaton(&self, sent: &Sentence) -> PosAutomaton {
        let vocab = Arc::new(self.vocabulary(sent));
        let tokens = match self.kind {
            SchemaKind::Ls => vec![0; sent.len()],
            _ => sent.tokens().iter().map(|t| vocab.known(t)).collect(),
        };
        let labels = match self.kind {
            SchemaKind::Pt => Vec::new(),
            _ => normalize(self.dict.labels().iter().map(|l| vocab.known(l)).collect()),
        };
        PosAutomaton {
            kind: self.kind,
            trie: self.suffixes.clone(),
            tokens,
            labels,
            sep: vocab.id(SEP).unwrap_or(0),
            stop: vocab.id(STOP).unwrap_or(0),
            open: vocab.id(OPEN_QUOTE).unwrap_or(0),
            close: vocab.id(CLOSE_QUOTE).unwrap_or(0),
            vocab,
            i: 0,
            k: 0,
            phase: Phase::Open,
            done: false,
        }
    }
}

fn suffix_words(dict: &DescriptionDict, variant: Variant, label: &str) -> Vec<String> {
    let mut words = vec![IS.to_string()];
    if variant == Variant::DecLex {
        words.push("a".into());
        words.push(label.to_string());
    } else {
        let d = dict.get(label).expect("label is in the dictionary");
        words.push(d.article.clone());
        words.extend(d.words.iter().cloned());
    }
    words.push(SEP.into());
    words
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Open,
    Token,
    Close,
    Suffix(NodeId),
    End,
}

/// Candidate-set automaton for all three POS schemas.
#[derive(Debug, Clone)]
pub struct PosAutomaton {
    kind: SchemaKind,
    vocab: Arc<Vocabulary>,
    trie: Arc<Trie<String>>,
    tokens: Vec<SymbolId>,
    labels: Vec<SymbolId>,
    sep: SymbolId,
    stop: SymbolId,
    open: SymbolId,
    close: SymbolId,
    /// Symbols consumed.
    i: usize,
    /// Tokens already covered (PT phrases started).
    k: usize,
    phase: Phase,
    done: bool,
}

impl PosAutomaton {
    fn n(&self) -> usize {
        self.tokens.len()
    }

    fn pt_candidates(&self) -> Vec<SymbolId> {
        match self.phase {
            Phase::Open => vec![self.open],
            Phase::Token => vec![self.tokens[self.k]],
            Phase::Close => vec![self.close],
            Phase::End => vec![self.vocab.eos()],
            Phase::Suffix(node) => normalize(
                self.trie
                    .children(node)
                    .map(|w| {
                        if w == SEP && self.k == self.n() {
                            self.stop
                        } else {
                            self.vocab.known(w)
                        }
                    })
                    .collect(),
            ),
        }
    }

    fn pt_step(&mut self, sym: SymbolId) {
        self.phase = match self.phase {
            Phase::Open => Phase::Token,
            Phase::Token => {
                self.k += 1;
                Phase::Close
            }
            Phase::Close => Phase::Suffix(self.trie.root()),
            Phase::Suffix(node) => {
                let closing = self.trie.child(node, SEP).is_some();
                if closing && sym == self.stop {
                    Phase::End
                } else if closing && sym == self.sep {
                    Phase::Open
                } else {
                    let next = self.trie.child(node, self.vocab.symbol(sym)).expect("candidate is a child");
                    Phase::Suffix(next)
                }
            }
            Phase::End => {
                self.done = true;
                Phase::End
            }
        };
    }
}

impl Automaton for PosAutomaton {
    fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    fn candidates(&self) -> Vec<SymbolId> {
        if self.done {
            return Vec::new();
        }
        let n = self.n();
        match self.kind {
            SchemaKind::Ls => {
                if self.i < n {
                    self.labels.clone()
                } else {
                    vec![self.vocab.eos()]
                }
            }
            SchemaKind::Lt => {
                if self.i >= 2 * n {
                    vec![self.vocab.eos()]
                } else if self.i % 2 == 0 {
                    vec![self.tokens[self.i / 2]]
                } else {
                    self.labels.clone()
                }
            }
            SchemaKind::Pt => self.pt_candidates(),
        }
    }

    fn advance(&mut self, symbol: SymbolId) -> Result<(), StepError> {
        guarded(self, symbol, |a| {
            if symbol == a.vocab.eos() {
                a.done = true;
            } else if a.kind == SchemaKind::Pt {
                a.pt_step(symbol);
            }
            a.i += 1;
        })
    }

    fn is_finished(&self) -> bool {
        self.done
    }

    fn position(&self) -> usize {
        self.i
    }

    fn clone_box(&self) -> Box<dyn Automaton> {
        Box::new(self.clone())
    }
}
