//! Named-entity schemas.
//!
//! * LS: one BIEOS tag per token (`O`, `B-T`, `I-T`, `E-T`, `S-T`).
//! * LT: source tokens with `<T>` and `</T>` wrapped around each entity.
//! * PT: `` `` entity '' is a description ; `` per entity in order, the last
//!   phrase ending in `.`. A sentence without entities is `no entities .`.
//!   The verbose variant adds `` `` token '' isn't an entity `` for every
//!   token outside an entity.

use std::sync::Arc;

use super::pos::IS;
use super::{loose_phrases, quoted, SchemaError, SchemaKind, Variant};
use crate::automaton::{guarded, normalize, replay, Automaton, StepError, SymbolId, Vocabulary};
use crate::dict::DescriptionDict;
use crate::structure::{Entity, EntitySet, OutputSequence, Sentence, CLOSE_QUOTE, OPEN_QUOTE, SEP, STOP};
use crate::trie::{NodeId, Trie};

/// Words of the empty-prompt sentinel, followed by `.`.
pub const EMPTY_PROMPT: [&str; 2] = ["no", "entities"];
/// Suffix words for a token outside every entity in the verbose variant.
pub const NOT_ENTITY: [&str; 3] = ["isn't", "an", "entity"];

pub fn open_tag(label: &str) -> String {
    format!("<{label}>")
}

pub fn close_tag(label: &str) -> String {
    format!("</{label}>")
}

/// Splits a phrase into an entity and an `is`-suffix at the smallest
/// non-empty entity length whose remainder is a prefix of some suffix in
/// `suffixes`. Returns the entity, the remainder and the trie node the
/// remainder reaches.
pub fn segment<'p, V, S: AsRef<str>>(suffixes: &Trie<V>, p: &'p [S]) -> Option<(&'p [S], &'p [S], NodeId)> {
    (1..=p.len()).find_map(|i| suffixes.prefix_match(&p[i..]).map(|node| (&p[..i], &p[i..], node)))
}

#[derive(Debug, Clone)]
pub struct NerCodec {
    dict: Arc<DescriptionDict>,
    kind: SchemaKind,
    variant: Variant,
    /// `is <description> ;` to the type, plus `isn't an entity ;` to `None`
    /// in the verbose variant.
    suffixes: Arc<Trie<Option<String>>>,
}

impl NerCodec {
    pub fn new(dict: Arc<DescriptionDict>, kind: SchemaKind, variant: Variant) -> Self {
        let mut suffixes = Trie::new();
        for (label, d) in dict.entries() {
            let mut phrase = vec![IS.to_string(), d.article.clone()];
            phrase.extend(d.words.iter().cloned());
            phrase.push(SEP.into());
            suffixes.insert(&phrase, Some(label.to_string())).expect("non-empty");
        }
        if variant == Variant::IncVrb {
            let mut phrase: Vec<&str> = NOT_ENTITY.to_vec();
            phrase.push(SEP);
            suffixes.insert(&phrase, None).expect("non-empty");
        }
        NerCodec {
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

    pub fn suffix_trie(&self) -> &Trie<Option<String>> {
        &self.suffixes
    }

    fn suffix(&self, label: &str) -> Result<Vec<String>, SchemaError> {
        let d = self
            .dict
            .get(label)
            .ok_or_else(|| SchemaError::UnknownLabel(label.to_string()))?;
        let mut words = vec![IS.to_string(), d.article.clone()];
        words.extend(d.words.iter().cloned());
        Ok(words)
    }

    pub fn linearize(&self, sent: &Sentence, set: &EntitySet) -> Result<OutputSequence, SchemaError> {
        for e in &set.entities {
            if !self.dict.contains(&e.label) {
                return Err(SchemaError::UnknownLabel(e.label.clone()));
            }
        }
        let n = sent.len();
        let mut out: Vec<String> = Vec::new();
        match self.kind {
            SchemaKind::Ls => {
                let mut tags = vec!["O".to_string(); n];
                for e in &set.entities {
                    if e.len() == 1 {
                        tags[e.start] = format!("S-{}", e.label);
                    } else {
                        tags[e.start] = format!("B-{}", e.label);
                        for t in &mut tags[e.start + 1..e.end - 1] {
                            *t = format!("I-{}", e.label);
                        }
                        tags[e.end - 1] = format!("E-{}", e.label);
                    }
                }
                out = tags;
            }
            SchemaKind::Lt => {
                let mut entities = set.entities.iter().peekable();
                let mut open: Option<&Entity> = None;
                for (i, tok) in sent.tokens().iter().enumerate() {
                    if let Some(e) = entities.next_if(|e| e.start == i) {
                        out.push(open_tag(&e.label));
                        open = Some(e);
                    }
                    out.push(tok.clone());
                    if let Some(e) = open.filter(|e| e.end == i + 1) {
                        out.push(close_tag(&e.label));
                        open = None;
                    }
                }
            }
            SchemaKind::Pt => {
                let mut phrases: Vec<Vec<String>> = Vec::new();
                if self.variant == Variant::IncVrb {
                    let mut entities = set.entities.iter().peekable();
                    let mut i = 0;
                    while i < n {
                        if let Some(e) = entities.next_if(|e| e.start == i) {
                            phrases.push(self.entity_phrase(sent, e)?);
                            i = e.end;
                        } else {
                            let mut p = vec![OPEN_QUOTE.to_string(), sent.token(i).to_string(), CLOSE_QUOTE.into()];
                            p.extend(NOT_ENTITY.iter().map(|s| s.to_string()));
                            phrases.push(p);
                            i += 1;
                        }
                    }
                } else if set.entities.is_empty() {
                    phrases.push(EMPTY_PROMPT.iter().map(|s| s.to_string()).collect());
                } else {
                    for e in &set.entities {
                        phrases.push(self.entity_phrase(sent, e)?);
                    }
                }
                for (i, p) in phrases.into_iter().enumerate() {
                    if i > 0 {
                        out.push(SEP.into());
                    }
                    out.extend(p);
                }
                out.push(STOP.into());
            }
        }
        Ok(OutputSequence::from_body(out).expect("body has no end symbol"))
    }

    fn entity_phrase(&self, sent: &Sentence, e: &Entity) -> Result<Vec<String>, SchemaError> {
        let mut p = vec![OPEN_QUOTE.to_string()];
        p.extend(sent.tokens()[e.start..e.end].iter().cloned());
        p.push(CLOSE_QUOTE.into());
        p.extend(self.suffix(&e.label)?);
        Ok(p)
    }

    pub fn delinearize(&self, sent: &Sentence, out: &OutputSequence, lenient: bool) -> Result<EntitySet, SchemaError> {
        match (self.kind, lenient) {
            (SchemaKind::Ls, false) => self.parse_ls(sent, out.body()),
            (SchemaKind::Ls, true) => Ok(self.repair_ls(sent, out.body())),
            (SchemaKind::Lt, false) => self.parse_lt(sent, out.body()),
            (SchemaKind::Lt, true) => Ok(self.repair_lt(sent, out.body())),
            (SchemaKind::Pt, false) => {
                let mut a = self.automaton(sent);
                replay(&mut a, out)?;
                Ok(EntitySet::new(a.entities))
            }
            (SchemaKind::Pt, true) => Ok(self.repair_pt(sent, out.body())),
        }
    }

    fn split_tag<'t>(&self, tag: &'t str) -> Option<(char, &'t str)> {
        if tag == "O" {
            return Some(('O', ""));
        }
        let (prefix, label) = tag.split_once('-')?;
        let p = match prefix {
            "B" => 'B',
            "I" => 'I',
            "E" => 'E',
            "S" => 'S',
            _ => return None,
        };
        self.dict.contains(label).then_some((p, label))
    }

    fn parse_ls(&self, sent: &Sentence, body: &[String]) -> Result<EntitySet, SchemaError> {
        let n = sent.len();
        if body.len() > n {
            return Err(SchemaError::malformed(n, "more tags than tokens"));
        }
        let mut entities = Vec::new();
        let mut open: Option<(usize, &str)> = None;
        for (i, tag) in body.iter().enumerate() {
            let (p, label) = self
                .split_tag(tag)
                .ok_or_else(|| SchemaError::malformed(i, format!("{tag:?} is not a BIEOS tag")))?;
            match (p, open) {
                ('O' | 'B' | 'S', Some(_)) => {
                    return Err(SchemaError::malformed(i, "entity is not closed with E-"));
                }
                ('O', None) => {}
                ('B', None) => open = Some((i, label)),
                ('S', None) => entities.push(Entity::new(i, i + 1, label)),
                ('I', Some((_, t))) if t == label => {}
                ('E', Some((start, t))) if t == label => {
                    entities.push(Entity::new(start, i + 1, label));
                    open = None;
                }
                _ => return Err(SchemaError::malformed(i, format!("{tag:?} does not continue an open entity"))),
            }
        }
        if body.len() < n {
            return Err(SchemaError::Incomplete(format!("{} of {} tokens tagged", body.len(), n)));
        }
        if open.is_some() {
            return Err(SchemaError::Incomplete("entity is not closed".into()));
        }
        Ok(EntitySet::new(entities))
    }

    /// Pads with `O` or truncates to the sentence length. An entity left open
    /// is closed at the token before the interruption; `I-` or `E-` without
    /// a matching open entity starts a new one.
    fn repair_ls(&self, sent: &Sentence, body: &[String]) -> EntitySet {
        let n = sent.len();
        let mut entities = Vec::new();
        let mut open: Option<(usize, String)> = None;
        for i in 0..n {
            let (p, label) = body.get(i).and_then(|t| self.split_tag(t)).unwrap_or(('O', ""));
            let continues = matches!((p, &open), ('I' | 'E', Some((_, t))) if t == label);
            if !continues {
                if let Some((start, t)) = open.take() {
                    entities.push(Entity::new(start, i, t));
                }
            }
            match p {
                'B' | 'I' if !continues => open = Some((i, label.to_string())),
                'S' => entities.push(Entity::new(i, i + 1, label)),
                'E' => {
                    let start = open.take().map_or(i, |(s, _)| s);
                    entities.push(Entity::new(start, i + 1, label));
                }
                _ => {}
            }
        }
        if let Some((start, t)) = open {
            entities.push(Entity::new(start, n, t));
        }
        EntitySet::new(entities)
    }

    fn tag_kind<'t>(&self, sym: &'t str) -> Option<(bool, &'t str)> {
        let inner = sym.strip_prefix('<')?.strip_suffix('>')?;
        let (closing, label) = match inner.strip_prefix('/') {
            Some(l) => (true, l),
            None => (false, inner),
        };
        self.dict.contains(label).then_some((closing, label))
    }

    fn parse_lt(&self, sent: &Sentence, body: &[String]) -> Result<EntitySet, SchemaError> {
        let n = sent.len();
        let mut k = 0;
        let mut entities = Vec::new();
        let mut open: Option<(usize, &str)> = None;
        for (i, sym) in body.iter().enumerate() {
            match self.tag_kind(sym) {
                Some((false, label)) => {
                    if open.is_some() {
                        return Err(SchemaError::malformed(i, "entities cannot nest"));
                    }
                    if k == n {
                        return Err(SchemaError::malformed(i, "no token left to open an entity on"));
                    }
                    open = Some((k, label));
                }
                Some((true, label)) => match open {
                    Some((start, t)) if t == label && k > start => {
                        entities.push(Entity::new(start, k, label));
                        open = None;
                    }
                    _ => return Err(SchemaError::malformed(i, format!("unexpected closing tag {sym:?}"))),
                },
                None => {
                    if k == n || sent.token(k) != sym {
                        return Err(SchemaError::malformed(
                            i,
                            format!("expected {:?}, found {sym:?}", sent.tokens().get(k).map_or("end", |s| s)),
                        ));
                    }
                    k += 1;
                }
            }
        }
        if k < n || open.is_some() {
            return Err(SchemaError::Incomplete(format!("{k} of {n} tokens generated")));
        }
        Ok(EntitySet::new(entities))
    }

    /// Keeps only well-paired, non-empty tag pairs; tokens that do not match
    /// the next source token are ignored.
    fn repair_lt(&self, sent: &Sentence, body: &[String]) -> EntitySet {
        let n = sent.len();
        let mut k = 0;
        let mut entities = Vec::new();
        let mut open: Option<(usize, &str)> = None;
        for sym in body {
            match self.tag_kind(sym) {
                Some((false, label)) => open = Some((k, label)),
                Some((true, label)) => {
                    if let Some((start, t)) = open {
                        if t == label && k > start {
                            entities.push(Entity::new(start, k, label));
                            open = None;
                        }
                    }
                }
                None => {
                    if let Some(j) = (k..n).find(|&j| sent.token(j) == sym) {
                        k = j + 1;
                    }
                }
            }
        }
        EntitySet::new(entities)
    }

    /// Resolves every parseable phrase to an occurrence in the sentence,
    /// preferring the first one after the previous entity and discarding
    /// phrases that cannot be placed without overlap.
    fn repair_pt(&self, sent: &Sentence, body: &[String]) -> EntitySet {
        let toks = sent.tokens();
        let mut entities: Vec<Entity> = Vec::new();
        let mut prev_end = 0;
        for (_, phrase) in loose_phrases(body) {
            let (entity, suffix) = match quoted(phrase) {
                Some((inner, after)) => (inner, &phrase[after..]),
                None => match segment(&self.suffixes, phrase) {
                    Some((e, s, _)) => (e, s),
                    None => continue,
                },
            };
            let mut key: Vec<&str> = suffix.iter().map(String::as_str).collect();
            key.push(SEP);
            let Some(Some(label)) = self.suffixes.get(&key) else { continue };
            if entity.is_empty() {
                continue;
            }
            let m = entity.len();
            let free = |o: usize| entities.iter().all(|e| o + m <= e.start || o >= e.end);
            let occurs = |o: usize| o + m <= toks.len() && toks[o..o + m] == *entity;
            let Some(o) = (prev_end..toks.len())
                .find(|&o| occurs(o) && free(o))
                .or_else(|| (0..toks.len()).find(|&o| occurs(o) && free(o)))
            else {
                continue;
            };
            entities.push(Entity::new(o, o + m, label.clone()));
            prev_end = o + m;
        }
        entities.sort();
        EntitySet::new(entities)
    }

    pub fn vocabulary(&self, sent: &Sentence) -> Vocabulary {
        let mut v = Vocabulary::new();
        match self.kind {
            SchemaKind::Ls => {
                v.add("O");
                for p in ["B", "I", "E", "S"] {
                    for l in self.dict.labels() {
                        v.add(&format!("{p}-{l}"));
                    }
                }
            }
            SchemaKind::Lt => {
                for l in self.dict.labels() {
                    v.add(&open_tag(l));
                }
                for l in self.dict.labels() {
                    v.add(&close_tag(l));
                }
            }
            SchemaKind::Pt => {
                v.extend([SEP, STOP, OPEN_QUOTE, CLOSE_QUOTE, IS]);
                if self.variant == Variant::IncVrb {
                    v.extend(NOT_ENTITY);
                } else {
                    v.extend(EMPTY_PROMPT);
                }
                for (_, d) in self.dict.entries() {
                    v.add(&d.article);
                    v.extend(&d.words);
                }
            }
        }
        if self.kind != SchemaKind::Ls {
            v.extend(sent.tokens());
        }
        v
    }

    pub fn automaton(&self, sent: &Sentence) -> NerAutomaton {
        let vocab = Arc::new(self.vocabulary(sent));
        let tokens = match self.kind {
            SchemaKind::Ls => vec![0; sent.len()],
            _ => sent.tokens().iter().map(|t| vocab.known(t)).collect(),
        };
        let labels = self.dict.labels().to_vec();
        let mut ids = SymbolIds::default();
        match self.kind {
            SchemaKind::Ls => {
                ids.outside = vocab.known("O");
                for l in &labels {
                    ids.begin.push(vocab.known(&format!("B-{l}")));
                    ids.inside.push(vocab.known(&format!("I-{l}")));
                    ids.end.push(vocab.known(&format!("E-{l}")));
                    ids.single.push(vocab.known(&format!("S-{l}")));
                }
            }
            SchemaKind::Lt => {
                for l in &labels {
                    ids.begin.push(vocab.known(&open_tag(l)));
                    ids.end.push(vocab.known(&close_tag(l)));
                }
            }
            SchemaKind::Pt => {
                ids.sep = vocab.known(SEP);
                ids.stop = vocab.known(STOP);
                ids.open = vocab.known(OPEN_QUOTE);
                ids.close = vocab.known(CLOSE_QUOTE);
                ids.isnt = vocab.id(NOT_ENTITY[0]);
                if self.variant != Variant::IncVrb {
                    ids.empty = EMPTY_PROMPT.iter().map(|w| vocab.known(w)).collect();
                }
            }
        }
        NerAutomaton {
            kind: self.kind,
            verbose: self.variant == Variant::IncVrb,
            vocab,
            trie: self.suffixes.clone(),
            tokens,
            ids,
            i: 0,
            k: 0,
            open: None,
            fresh: false,
            phase: PtPhase::Start,
            entities: Vec::new(),
            done: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct SymbolIds {
    outside: SymbolId,
    begin: Vec<SymbolId>,
    inside: Vec<SymbolId>,
    end: Vec<SymbolId>,
    single: Vec<SymbolId>,
    sep: SymbolId,
    stop: SymbolId,
    open: SymbolId,
    close: SymbolId,
    isnt: Option<SymbolId>,
    empty: Vec<SymbolId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum PtPhase {
    /// Beginning of the prompt.
    Start,
    /// Inside the empty-prompt sentinel, after this many words.
    Empty(usize),
    /// After `;`.
    Open,
    /// After `` `` ``; the entity has these start positions so far and
    /// `len` tokens.
    Entity { starts: Vec<usize>, len: usize },
    /// Inside the suffix of the entity `start..end`.
    Suffix { node: NodeId, start: usize, end: usize },
    /// After `.`.
    End,
}

/// Candidate-set automaton for all three NER schemas.
#[derive(Debug, Clone)]
pub struct NerAutomaton {
    kind: SchemaKind,
    verbose: bool,
    vocab: Arc<Vocabulary>,
    trie: Arc<Trie<Option<String>>>,
    tokens: Vec<SymbolId>,
    ids: SymbolIds,
    i: usize,
    /// LS: tags emitted. LT: source tokens emitted. PT: end of the last
    /// completed phrase.
    k: usize,
    /// Type index of the open entity (LS and LT).
    open: Option<usize>,
    /// LT: an opening tag was just emitted.
    fresh: bool,
    phase: PtPhase,
    entities: Vec<Entity>,
    done: bool,
}

impl NerAutomaton {
    fn n(&self) -> usize {
        self.tokens.len()
    }

    /// Entities completed so far (PT only).
    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    fn ls_candidates(&self) -> Vec<SymbolId> {
        let n = self.n();
        if self.k == n {
            return vec![self.vocab.eos()];
        }
        let remaining = n - self.k;
        match self.open {
            Some(t) => {
                let mut c = vec![self.ids.end[t]];
                if remaining >= 2 {
                    c.push(self.ids.inside[t]);
                }
                normalize(c)
            }
            None => {
                let mut c = vec![self.ids.outside];
                c.extend(&self.ids.single);
                if remaining >= 2 {
                    c.extend(&self.ids.begin);
                }
                normalize(c)
            }
        }
    }

    fn ls_step(&mut self, sym: SymbolId) {
        if let Some(t) = self.ids.begin.iter().position(|&b| b == sym) {
            self.open = Some(t);
        } else if self.ids.end.contains(&sym) {
            self.open = None;
        }
        self.k += 1;
    }

    fn lt_candidates(&self) -> Vec<SymbolId> {
        let n = self.n();
        let mut c = Vec::new();
        match self.open {
            Some(_) if self.fresh => {}
            Some(t) => c.push(self.ids.end[t]),
            None if self.k < n => c.extend(&self.ids.begin),
            None => {}
        }
        if self.k < n {
            c.push(self.tokens[self.k]);
        } else if self.open.is_none() {
            c.push(self.vocab.eos());
        }
        normalize(c)
    }

    fn lt_step(&mut self, sym: SymbolId) {
        let is_open = self.open.is_none() || self.fresh;
        let open_idx = self.ids.begin.iter().position(|&b| b == sym);
        match (self.open, open_idx) {
            (None, Some(t)) => {
                self.open = Some(t);
                self.fresh = true;
            }
            (Some(t), _) if !self.fresh && sym == self.ids.end[t] => self.open = None,
            _ => {
                debug_assert!(is_open || self.k < self.n());
                self.k += 1;
                self.fresh = false;
            }
        }
    }

    fn occurrence_starts(&self) -> Vec<usize> {
        if self.verbose {
            vec![self.k]
        } else {
            (self.k..self.n()).collect()
        }
    }

    fn pt_candidates(&self) -> Vec<SymbolId> {
        let n = self.n();
        match &self.phase {
            PtPhase::Start => {
                let mut c = vec![self.ids.open];
                if let Some(&w) = self.ids.empty.first() {
                    c.push(w);
                }
                normalize(c)
            }
            PtPhase::Empty(i) => vec![self.ids.empty.get(*i).copied().unwrap_or(self.ids.stop)],
            PtPhase::Open => vec![self.ids.open],
            PtPhase::Entity { starts, len } => {
                let mut c: Vec<SymbolId> = starts
                    .iter()
                    .filter(|&&o| o + len < n)
                    .map(|&o| self.tokens[o + len])
                    .collect();
                if *len > 0 {
                    c.push(self.ids.close);
                }
                normalize(c)
            }
            PtPhase::Suffix { node, start, end } => {
                let mut c = Vec::new();
                for w in self.trie.children(*node) {
                    if w == SEP {
                        if self.verbose {
                            c.push(if *end < n { self.ids.sep } else { self.ids.stop });
                        } else {
                            c.push(self.ids.stop);
                            if *end < n {
                                c.push(self.ids.sep);
                            }
                        }
                    } else if w == NOT_ENTITY[0] && end - start != 1 {
                        continue;
                    } else {
                        c.push(self.vocab.known(w));
                    }
                }
                normalize(c)
            }
            PtPhase::End => vec![self.vocab.eos()],
        }
    }

    fn pt_step(&mut self, sym: SymbolId) {
        let phase = std::mem::replace(&mut self.phase, PtPhase::End);
        self.phase = match phase {
            PtPhase::Start if sym == self.ids.open => PtPhase::Entity {
                starts: self.occurrence_starts(),
                len: 0,
            },
            PtPhase::Start => PtPhase::Empty(1),
            PtPhase::Empty(i) if i < self.ids.empty.len() => PtPhase::Empty(i + 1),
            PtPhase::Empty(_) => PtPhase::End,
            PtPhase::Open => PtPhase::Entity {
                starts: self.occurrence_starts(),
                len: 0,
            },
            PtPhase::Entity { starts, len } if sym == self.ids.close => {
                let start = starts[0];
                PtPhase::Suffix {
                    node: self.trie.root(),
                    start,
                    end: start + len,
                }
            }
            PtPhase::Entity { starts, len } => {
                let n = self.n();
                let starts = starts
                    .into_iter()
                    .filter(|&o| o + len < n && self.tokens[o + len] == sym)
                    .collect();
                PtPhase::Entity { starts, len: len + 1 }
            }
            PtPhase::Suffix { node, start, end } => {
                if sym == self.ids.sep || sym == self.ids.stop {
                    let leaf = self.trie.child(node, SEP).expect("separator closes a suffix");
                    if let Some(Some(label)) = self.trie.value(leaf) {
                        self.entities.push(Entity::new(start, end, label.clone()));
                    }
                    self.k = end;
                    if sym == self.ids.sep {
                        PtPhase::Open
                    } else {
                        PtPhase::End
                    }
                } else {
                    let node = self.trie.child(node, self.vocab.symbol(sym)).expect("candidate is a child");
                    PtPhase::Suffix { node, start, end }
                }
            }
            PtPhase::End => {
                self.done = true;
                PtPhase::End
            }
        };
    }
}

impl Automaton for NerAutomaton {
    fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    fn candidates(&self) -> Vec<SymbolId> {
        if self.done {
            return Vec::new();
        }
        match self.kind {
            SchemaKind::Ls => self.ls_candidates(),
            SchemaKind::Lt => self.lt_candidates(),
            SchemaKind::Pt => self.pt_candidates(),
        }
    }

    fn advance(&mut self, symbol: SymbolId) -> Result<(), StepError> {
        guarded(self, symbol, |a| {
            if a.kind != SchemaKind::Pt && symbol == a.vocab.eos() {
                a.done = true;
            } else {
                match a.kind {
                    SchemaKind::Ls => a.ls_step(symbol),
                    SchemaKind::Lt => a.lt_step(symbol),
                    SchemaKind::Pt => a.pt_step(symbol),
                }
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dict::{Profile, Task};

    fn codec(kind: SchemaKind, variant: Variant) -> NerCodec {
        NerCodec::new(Arc::new(DescriptionDict::builtin(Task::Ner, Profile::Default)), kind, variant)
    }

    fn sent(s: &str) -> Sentence {
        Sentence::parse(s).unwrap()
    }

    fn feed(a: &mut NerAutomaton, text: &str) {
        for s in text.split_whitespace() {
            let id = a.vocabulary().id(s).unwrap();
            a.advance(id).unwrap();
        }
    }

    fn words(a: &NerAutomaton) -> Vec<String> {
        a.candidates().iter().map(|&i| a.vocabulary().symbol(i).to_string()).collect()
    }

    #[test]
    fn segmentation_takes_smallest_entity() {
        let c = codec(SchemaKind::Pt, Variant::Default);
        let p: Vec<&str> = "Disney World is an organization ;".split(' ').collect();
        let (e, s, node) = segment(c.suffix_trie(), &p).unwrap();
        assert_eq!(e, ["Disney", "World"]);
        assert_eq!(s.len(), 4);
        assert!(c.suffix_trie().is_terminal(node));
        let (e, s, node) = segment(c.suffix_trie(), &["Orlando"]).unwrap();
        assert_eq!((e, s.len(), node), (&["Orlando"][..], 0, c.suffix_trie().root()));
        assert!(segment(c.suffix_trie(), &[] as &[&str]).is_none());
    }

    #[test]
    fn lt_after_open_tag_only_offers_a_token() {
        let c = codec(SchemaKind::Lt, Variant::Default);
        let mut a = c.automaton(&sent("from Disney World"));
        feed(&mut a, "from <ORG>");
        assert_eq!(words(&a), ["Disney"]);
        feed(&mut a, "Disney");
        assert_eq!(words(&a), ["</ORG>", "World"]);
        feed(&mut a, "World");
        assert_eq!(words(&a), ["</ORG>"]);
        feed(&mut a, "</ORG>");
        assert_eq!(words(&a), ["</s>"]);
    }

    #[test]
    fn pt_entity_continuation() {
        let c = codec(SchemaKind::Pt, Variant::Default);
        let mut a = c.automaton(&sent("a gift from Disney World"));
        feed(&mut a, "`` Disney");
        assert_eq!(words(&a), ["''", "World"]);
        feed(&mut a, "World '' is an organization");
        assert_eq!(words(&a), ["."]);
        feed(&mut a, ".");
        assert_eq!(words(&a), ["</s>"]);
    }

    #[test]
    fn ls_blocks_unfinished_entities() {
        let c = codec(SchemaKind::Ls, Variant::Default);
        let mut a = c.automaton(&sent("a b"));
        feed(&mut a, "O");
        assert!(!words(&a).iter().any(|w| w.starts_with("B-")));
        let mut a = c.automaton(&sent("a b"));
        feed(&mut a, "B-ORG");
        assert_eq!(words(&a), ["E-ORG"]);
    }

    #[test]
    fn empty_prompt() {
        let c = codec(SchemaKind::Pt, Variant::Default);
        let s = sent("nothing here");
        let out = c.linearize(&s, &EntitySet::default()).unwrap();
        assert_eq!(out.to_text(), "no entities .");
        assert_eq!(c.delinearize(&s, &out, false).unwrap(), EntitySet::default());
    }

    #[test]
    fn verbose_prompt_round_trip() {
        let c = codec(SchemaKind::Pt, Variant::IncVrb);
        let s = sent("in Orlando today");
        let set = EntitySet::new(vec![Entity::new(1, 2, "GPE")]);
        let out = c.linearize(&s, &set).unwrap();
        assert_eq!(
            out.to_text(),
            "`` in '' isn't an entity ; `` Orlando '' is a geopolitical entity ; `` today '' isn't an entity ."
        );
        assert_eq!(c.delinearize(&s, &out, false).unwrap(), set);
    }

    #[test]
    fn art_work_phrase_resolves() {
        let c = codec(SchemaKind::Pt, Variant::Default);
        let s = sent("Large image of the Michael Jackson HIStory statue .");
        let out = OutputSequence::parse("`` HIStory '' is an art work .").unwrap();
        let set = c.delinearize(&s, &out, false).unwrap();
        assert_eq!(set.entities, vec![Entity::new(6, 7, "WORK_OF_ART")]);
    }

    #[test]
    fn lenient_lt_drops_unclosed() {
        let c = codec(SchemaKind::Lt, Variant::Default);
        let s = sent("in Orlando and Disney World");
        let out = OutputSequence::parse("in <GPE> Orlando </GPE> and <ORG> Disney World").unwrap();
        assert!(c.delinearize(&s, &out, false).is_err());
        let set = c.delinearize(&s, &out, true).unwrap();
        assert_eq!(set.entities, vec![Entity::new(1, 2, "GPE")]);
    }

    #[test]
    fn lenient_ls_repairs() {
        let c = codec(SchemaKind::Ls, Variant::Default);
        let s = sent("a b c d");
        let out = OutputSequence::parse("I-ORG E-ORG B-GPE O").unwrap();
        let set = c.delinearize(&s, &out, true).unwrap();
        assert_eq!(set.entities, vec![Entity::new(0, 2, "ORG"), Entity::new(2, 3, "GPE")]);
    }
}
