//! Corpus readers and writers: PTB bracketed trees, CoNLL NER columns,
//! CoNLL-X/CoNLL-U dependency columns and JSON lines.
//!
//! Readers refuse structures that break the invariants in
//! [`crate::structure`]. The exceptions are IOB repair (an `I-` tag that
//! cannot continue an entity starts one) and the optional removal of
//! non-projective dependency trees. Sentences longer than
//! [`ReadOptions::max_tokens`] are dropped and reported.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dict::Task;
use crate::structure::{
    validate_structure, ConChild, ConNode, ConTree, DepTree, Entity, EntitySet, PosSequence, Sentence,
    SentenceError, Structure, Violation, TOP,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: {source}")]
    Sentence {
        line: usize,
        #[source]
        source: SentenceError,
    },
    #[error("line {line}: {violation}")]
    Invalid { line: usize, violation: Violation },
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

impl IoError {
    fn syntax(line: usize, reason: impl Into<String>) -> Self {
        IoError::Syntax {
            line,
            reason: reason.into(),
        }
    }

    /// 1-based line the error points at.
    pub fn line(&self) -> usize {
        match self {
            IoError::Syntax { line, .. }
            | IoError::Sentence { line, .. }
            | IoError::Invalid { line, .. }
            | IoError::Json { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadOptions {
    pub max_tokens: usize,
    pub drop_non_projective: bool,
    /// Whether bracketed input still has its part-of-speech level, so that
    /// `(X word)` is a tag rather than a one-word constituent.
    pub preterminals: bool,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            max_tokens: 512,
            drop_non_projective: false,
            preterminals: true,
        }
    }
}

/// A record a reader skipped, with the line it started on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dropped {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Read<T> {
    pub records: Vec<T>,
    pub dropped: Vec<Dropped>,
}

impl<T> Default for Read<T> {
    fn default() -> Self {
        Read {
            records: Vec::new(),
            dropped: Vec::new(),
        }
    }
}

impl<T> Read<T> {
    /// Applies the token budget; returns false (after noting the drop) for
    /// oversized sentences.
    fn admit(&mut self, opts: &ReadOptions, line: usize, n: usize) -> bool {
        if n > opts.max_tokens {
            self.dropped.push(Dropped {
                line,
                reason: format!("{n} tokens exceed the budget of {}", opts.max_tokens),
            });
            return false;
        }
        true
    }
}

fn sentence_at(line: usize, tokens: Vec<String>) -> Result<Sentence, IoError> {
    Sentence::new(tokens).map_err(|source| IoError::Sentence { line, source })
}

fn check(line: usize, s: &Structure, sent: &Sentence) -> Result<(), IoError> {
    match validate_structure(s, sent).into_iter().find(|v| *v != Violation::NonProjective) {
        Some(violation) => Err(IoError::Invalid { line, violation }),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// Bracketed trees

/// A tree read from bracketed text. `pos` holds the removed pre-terminal
/// tags when every token had one.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketedTree {
    pub sentence: Sentence,
    pub tree: ConTree,
    pub pos: Option<PosSequence>,
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>, usize),
}

fn lex(text: &str) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut atom = String::new();
        for c in line.chars() {
            if c == '(' || c == ')' || c.is_whitespace() {
                if !atom.is_empty() {
                    out.push((std::mem::take(&mut atom), i + 1));
                }
                if !c.is_whitespace() {
                    out.push((c.to_string(), i + 1));
                }
            } else {
                atom.push(c);
            }
        }
        if !atom.is_empty() {
            out.push((atom, i + 1));
        }
    }
    out
}

fn parse_sexps(text: &str) -> Result<Vec<Sexp>, IoError> {
    let mut stack: Vec<(Vec<Sexp>, usize)> = Vec::new();
    let mut top = Vec::new();
    for (tok, line) in lex(text) {
        match tok.as_str() {
            "(" => stack.push((Vec::new(), line)),
            ")" => {
                let (items, start) = stack
                    .pop()
                    .ok_or_else(|| IoError::syntax(line, "unbalanced ')'"))?;
                let list = Sexp::List(items, start);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => top.push(list),
                }
            }
            _ => match stack.last_mut() {
                Some((parent, _)) => parent.push(Sexp::Atom(tok)),
                None => return Err(IoError::syntax(line, format!("token {tok:?} outside any tree"))),
            },
        }
    }
    if let Some((_, start)) = stack.last() {
        return Err(IoError::syntax(*start, "unclosed '('"));
    }
    Ok(top)
}

/// Drops function tags and indices (`NP-SBJ-1` becomes `NP`); labels that
/// start with `-` such as `-NONE-` are kept whole.
fn base_label(label: &str) -> &str {
    if label.starts_with('-') {
        return label;
    }
    let end = label.find(['-', '=']).unwrap_or(label.len());
    &label[..end]
}

struct TreeBuilder {
    preterminals: bool,
    tokens: Vec<String>,
    tags: Vec<Option<String>>,
}

impl TreeBuilder {
    /// Converts a labelled list to a node, or `None` when nothing but empty
    /// elements remain below it.
    fn node(&mut self, items: &[Sexp], line: usize) -> Result<Option<ConNode>, IoError> {
        let (label, rest) = match items.first() {
            Some(Sexp::Atom(l)) => (base_label(l).to_string(), &items[1..]),
            _ => return Err(IoError::syntax(line, "constituent without a label")),
        };
        if label.is_empty() {
            return Err(IoError::syntax(line, "empty label"));
        }
        let mut children = Vec::new();
        for item in rest {
            match item {
                Sexp::Atom(word) => {
                    children.push(ConChild::Terminal(self.tokens.len()));
                    self.tokens.push(word.clone());
                    self.tags.push(None);
                }
                Sexp::List(sub, l) => {
                    if let Some(child) = self.child(sub, *l)? {
                        children.push(child);
                    }
                }
            }
        }
        if children.is_empty() {
            return Ok(None);
        }
        Ok(Some(ConNode::new(label, children)))
    }

    fn child(&mut self, items: &[Sexp], line: usize) -> Result<Option<ConChild>, IoError> {
        if let [Sexp::Atom(tag), Sexp::Atom(word)] = items {
            if tag == "-NONE-" {
                return Ok(None);
            }
            if !self.preterminals {
                return Ok(self.node(items, line)?.map(ConChild::Node));
            }
            let i = self.tokens.len();
            self.tokens.push(word.clone());
            self.tags.push(Some(tag.clone()));
            return Ok(Some(ConChild::Terminal(i)));
        }
        Ok(self.node(items, line)?.map(ConChild::Node))
    }
}

fn tree_from_sexp(sexp: &Sexp, preterminals: bool) -> Result<BracketedTree, IoError> {
    let Sexp::List(items, line) = sexp else {
        unreachable!("parse_sexps only yields lists at the top level")
    };
    let line = *line;
    let mut b = TreeBuilder {
        preterminals,
        tokens: Vec::new(),
        tags: Vec::new(),
    };
    let root = match items.first() {
        // PTB's unlabelled outer bracket, or an explicit TOP.
        Some(Sexp::List(..)) | None => {
            let mut children = Vec::new();
            for item in items {
                match item {
                    Sexp::List(sub, l) => {
                        if let Some(c) = b.child(sub, *l)? {
                            children.push(c);
                        }
                    }
                    Sexp::Atom(a) => return Err(IoError::syntax(line, format!("bare token {a:?} under the root"))),
                }
            }
            ConNode::new(TOP, children)
        }
        Some(Sexp::Atom(l)) if l == TOP => b.node(items, line)?.unwrap_or_else(|| ConNode::new(TOP, Vec::new())),
        Some(Sexp::Atom(_)) => match b.child(items, line)? {
            Some(c) => ConNode::new(TOP, vec![c]),
            None => ConNode::new(TOP, Vec::new()),
        },
    };
    let sentence = sentence_at(line, b.tokens)?;
    let tree = ConTree::new(root);
    check(line, &Structure::Con(tree.clone()), &sentence)?;
    let pos = b
        .tags
        .into_iter()
        .collect::<Option<Vec<String>>>()
        .map(|t| PosSequence { tags: t });
    Ok(BracketedTree { sentence, tree, pos })
}

/// Reads PTB-style trees, removing the part-of-speech level and empty
/// elements. A tree whose root is not `TOP` is wrapped in one.
pub fn read_bracketed(text: &str, opts: &ReadOptions) -> Result<Read<BracketedTree>, IoError> {
    let mut out = Read::default();
    for sexp in parse_sexps(text)? {
        let t = tree_from_sexp(&sexp, opts.preterminals)?;
        let line = match sexp {
            Sexp::List(_, l) => l,
            Sexp::Atom(_) => 0,
        };
        if out.admit(opts, line, t.sentence.len()) {
            out.records.push(t);
        }
    }
    Ok(out)
}

/// One tree per line. With `pos`, every terminal is wrapped in its
/// pre-terminal tag.
pub fn write_bracketed(sent: &Sentence, tree: &ConTree, pos: Option<&PosSequence>) -> String {
    fn walk(node: &ConNode, sent: &Sentence, pos: Option<&PosSequence>, out: &mut String) {
        out.push('(');
        out.push_str(&node.label);
        for child in &node.children {
            out.push(' ');
            match child {
                ConChild::Terminal(i) => match pos {
                    Some(p) => {
                        out.push('(');
                        out.push_str(&p.tags[*i]);
                        out.push(' ');
                        out.push_str(sent.token(*i));
                        out.push(')');
                    }
                    None => out.push_str(sent.token(*i)),
                },
                ConChild::Node(n) => walk(n, sent, pos, out),
            }
        }
        out.push(')');
    }
    let mut out = String::new();
    walk(&tree.root, sent, pos, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Column formats

/// Blank-line separated blocks of non-comment lines, each line with its
/// 1-based number.
fn blocks(text: &str) -> Vec<Vec<(usize, Vec<&str>)>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            continue;
        }
        if trimmed.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = if trimmed.contains('\t') {
            trimmed.split('\t').collect()
        } else {
            trimmed.split_whitespace().collect()
        };
        cur.push((i + 1, cols));
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Reads token-per-line NER data, taking the first column as the token and
/// the last as an IOB1, IOB2 or BIEOS tag.
pub fn read_conll_ner(text: &str, opts: &ReadOptions) -> Result<Read<(Sentence, EntitySet)>, IoError> {
    let mut out = Read::default();
    for block in blocks(text) {
        if block[0].1.first() == Some(&"-DOCSTART-") {
            continue;
        }
        let line = block[0].0;
        let mut tokens = Vec::new();
        let mut entities: Vec<Entity> = Vec::new();
        // Open entity: (start, label).
        let mut open: Option<(usize, String)> = None;
        for (l, cols) in &block {
            if cols.len() < 2 {
                return Err(IoError::syntax(*l, "expected a token and a tag column"));
            }
            let i = tokens.len();
            tokens.push(cols[0].to_string());
            let tag = cols[cols.len() - 1];
            let (prefix, label) = match tag.split_once('-') {
                None if tag == "O" => ("O", ""),
                Some((p, t)) if !t.is_empty() => (p, t),
                _ => return Err(IoError::syntax(*l, format!("unknown tag {tag:?}"))),
            };
            let continues = matches!(&open, Some((_, t)) if t == label);
            let close = |open: &mut Option<(usize, String)>, entities: &mut Vec<Entity>, end: usize| {
                if let Some((s, t)) = open.take() {
                    entities.push(Entity::new(s, end, t));
                }
            };
            match prefix {
                "O" => close(&mut open, &mut entities, i),
                "B" | "S" => {
                    close(&mut open, &mut entities, i);
                    open = Some((i, label.to_string()));
                }
                "I" | "E" => {
                    if !continues {
                        close(&mut open, &mut entities, i);
                        open = Some((i, label.to_string()));
                    }
                }
                _ => return Err(IoError::syntax(*l, format!("unknown tag prefix {prefix:?} in {tag:?}"))),
            }
            if matches!(prefix, "E" | "S") {
                close(&mut open, &mut entities, i + 1);
            }
        }
        if let Some((s, t)) = open.take() {
            entities.push(Entity::new(s, tokens.len(), t));
        }
        if !out.admit(opts, line, tokens.len()) {
            continue;
        }
        let sentence = sentence_at(line, tokens)?;
        let set = EntitySet::new(entities);
        check(line, &Structure::Ner(set.clone()), &sentence)?;
        out.records.push((sentence, set));
    }
    Ok(out)
}

/// IOB2 columns, one sentence per block.
pub fn write_conll_ner(sent: &Sentence, set: &EntitySet) -> String {
    let mut tags = vec!["O".to_string(); sent.len()];
    for e in &set.entities {
        for (k, tag) in tags[e.start..e.end].iter_mut().enumerate() {
            *tag = format!("{}-{}", if k == 0 { "B" } else { "I" }, e.label);
        }
    }
    let mut out = String::new();
    for (tok, tag) in sent.tokens().iter().zip(tags) {
        out.push_str(tok);
        out.push('\t');
        out.push_str(&tag);
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepRecord {
    pub sentence: Sentence,
    pub tree: DepTree,
    pub pos: Option<PosSequence>,
    pub projective: bool,
}

/// Reads CoNLL-X or CoNLL-U (HEAD and DEPREL in columns 7 and 8) or a
/// four-column `ID FORM HEAD DEPREL` layout. CoNLL-U multiword and empty
/// node lines are skipped.
pub fn read_conll_dep(text: &str, opts: &ReadOptions) -> Result<Read<DepRecord>, IoError> {
    let mut out = Read::default();
    for block in blocks(text) {
        let line = block[0].0;
        let mut tokens = Vec::new();
        let mut heads = Vec::new();
        let mut rels = Vec::new();
        let mut tags = Vec::new();
        for (l, cols) in &block {
            let id = cols[0];
            if id.contains('-') || id.contains('.') {
                continue;
            }
            let (head, rel, tag) = match cols.len() {
                4 => (cols[2], cols[3], None),
                n if n >= 8 => (cols[6], cols[7], Some(cols[4])),
                n => return Err(IoError::syntax(*l, format!("expected 4 or at least 8 columns, found {n}"))),
            };
            if id.parse::<usize>().ok() != Some(tokens.len() + 1) {
                return Err(IoError::syntax(*l, format!("token id {id:?} out of sequence")));
            }
            let head: usize = head
                .parse()
                .map_err(|_| IoError::syntax(*l, format!("head {head:?} is not a number")))?;
            tokens.push(cols[1].to_string());
            heads.push(head);
            rels.push(rel.to_string());
            tags.push(tag.filter(|t| *t != "_").map(str::to_string));
        }
        if !out.admit(opts, line, tokens.len()) {
            continue;
        }
        let sentence = sentence_at(line, tokens)?;
        let tree = DepTree::new(heads, rels);
        check(line, &Structure::Dep(tree.clone()), &sentence)?;
        let projective = tree.is_projective();
        if !projective && opts.drop_non_projective {
            out.dropped.push(Dropped {
                line,
                reason: "non-projective tree".to_string(),
            });
            continue;
        }
        let pos = tags.into_iter().collect::<Option<Vec<_>>>().map(|tags| PosSequence { tags });
        out.records.push(DepRecord {
            sentence,
            tree,
            pos,
            projective,
        });
    }
    Ok(out)
}

/// Ten-column CoNLL-X block with `_` in unused columns.
pub fn write_conll_dep(sent: &Sentence, tree: &DepTree, pos: Option<&PosSequence>) -> String {
    let mut out = String::new();
    for i in 0..sent.len() {
        let tag = pos.map(|p| p.tags[i].as_str()).unwrap_or("_");
        out.push_str(&format!(
            "{}\t{}\t_\t{tag}\t{tag}\t_\t{}\t{}\t_\t_\n",
            i + 1,
            sent.token(i),
            tree.heads[i],
            tree.relations[i]
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// JSON lines

/// A sentence with whichever gold structures are known for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRecord", into = "RawRecord")]
pub struct CorpusRecord {
    pub id: String,
    pub sentence: Sentence,
    pub pos: Option<PosSequence>,
    pub ner: Option<EntitySet>,
    pub con: Option<ConTree>,
    pub dep: Option<DepTree>,
}

#[derive(Serialize, Deserialize)]
struct RawRecord {
    id: String,
    tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pos: Option<PosSequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ner: Option<EntitySet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    con: Option<ConTree>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dep: Option<DepTree>,
}

impl TryFrom<RawRecord> for CorpusRecord {
    type Error = String;

    fn try_from(r: RawRecord) -> Result<Self, String> {
        let record = CorpusRecord {
            id: r.id,
            sentence: Sentence::new(r.tokens).map_err(|e| e.to_string())?,
            pos: r.pos,
            ner: r.ner,
            con: r.con,
            dep: r.dep,
        };
        record.validate()?;
        Ok(record)
    }
}

impl From<CorpusRecord> for RawRecord {
    fn from(r: CorpusRecord) -> Self {
        RawRecord {
            id: r.id,
            tokens: r.sentence.tokens().to_vec(),
            pos: r.pos,
            ner: r.ner,
            con: r.con,
            dep: r.dep,
        }
    }
}

impl CorpusRecord {
    pub fn new(id: impl Into<String>, sentence: Sentence) -> Self {
        CorpusRecord {
            id: id.into(),
            sentence,
            pos: None,
            ner: None,
            con: None,
            dep: None,
        }
    }

    pub fn structure(&self, task: Task) -> Option<Structure> {
        match task {
            Task::Pos => self.pos.clone().map(Structure::Pos),
            Task::Ner => self.ner.clone().map(Structure::Ner),
            Task::Con => self.con.clone().map(Structure::Con),
            Task::Dep => self.dep.clone().map(Structure::Dep),
        }
    }

    /// Stores `s` in the slot for its task.
    pub fn set_structure(&mut self, s: Structure) {
        match s {
            Structure::Pos(p) => self.pos = Some(p),
            Structure::Ner(n) => self.ner = Some(n),
            Structure::Con(c) => self.con = Some(c),
            Structure::Dep(d) => self.dep = Some(d),
        }
    }

    /// Checks every present structure against the sentence. Non-projective
    /// trees are allowed here.
    pub fn validate(&self) -> Result<(), String> {
        for task in Task::ALL {
            if let Some(s) = self.structure(task) {
                if let Some(v) = validate_structure(&s, &self.sentence)
                    .into_iter()
                    .find(|v| *v != Violation::NonProjective)
                {
                    return Err(format!("{task}: {v}"));
                }
            }
        }
        Ok(())
    }
}

pub fn read_jsonl(text: &str) -> Result<Vec<CorpusRecord>, IoError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line).map_err(|source| IoError::Json { line: i + 1, source })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_jsonl(records: &[CorpusRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records always serialize"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> ReadOptions {
        ReadOptions::default()
    }

    #[test]
    fn strips_pos_level() {
        let r = read_bracketed("(TOP (S (NP (PRP It))))", &opts()).unwrap();
        let t = &r.records[0];
        assert_eq!(t.tree.to_bracketed(&t.sentence), "(TOP (S (NP It)))");
        assert_eq!(t.pos.as_ref().unwrap().tags, ["PRP"]);
    }

    #[test]
    fn ptb_wrapper_traces_and_function_tags() {
        let text = "( (S (NP-SBJ-1 (DT The) (NN cat))\n  (VP (VBD sat) (NP (-NONE- *T*-1)))\n (. .)) )\n";
        let r = read_bracketed(text, &opts()).unwrap();
        let t = &r.records[0];
        assert_eq!(t.tree.to_bracketed(&t.sentence), "(TOP (S (NP The cat) (VP sat) .))");
        assert_eq!(t.pos.as_ref().unwrap().tags, ["DT", "NN", "VBD", "."]);
        let back = write_bracketed(&t.sentence, &t.tree, t.pos.as_ref());
        let again = read_bracketed(&back, &opts()).unwrap();
        assert_eq!(again.records[0], *t);
    }

    #[test]
    fn stripped_input_keeps_one_word_constituents() {
        let o = ReadOptions {
            preterminals: false,
            ..opts()
        };
        let text = "(TOP (S (NP My friend) (VP (VP bought) (NP me))))";
        let r = read_bracketed(text, &o).unwrap();
        let t = &r.records[0];
        assert!(t.pos.is_none());
        assert_eq!(write_bracketed(&t.sentence, &t.tree, None), text);
    }

    #[test]
    fn bracket_errors_carry_lines() {
        assert!(read_bracketed("", &opts()).unwrap().records.is_empty());
        let e = read_bracketed("(TOP (S a)\n", &opts()).unwrap_err();
        assert_eq!(e.line(), 1);
        let e = read_bracketed("(TOP a)\n)", &opts()).unwrap_err();
        assert_eq!(e.line(), 2);
    }

    #[test]
    fn token_budget_drops() {
        let o = ReadOptions {
            max_tokens: 2,
            ..opts()
        };
        let r = read_bracketed("(TOP (S a b c))\n(TOP (S a))", &o).unwrap();
        assert_eq!(r.records.len(), 1);
        assert_eq!(r.dropped[0].line, 1);
    }

    #[test]
    fn conll_ner_conversion() {
        let text = "-DOCSTART- O\n\nEU B-ORG\nrejects O\nGerman I-MISC\ncall O\n\nNew B-LOC\nYork I-LOC\n\nall O\n";
        let r = read_conll_ner(text, &opts()).unwrap();
        assert_eq!(r.records.len(), 3);
        assert_eq!(
            r.records[0].1.entities,
            vec![Entity::new(0, 1, "ORG"), Entity::new(2, 3, "MISC")]
        );
        assert_eq!(r.records[1].1.entities, vec![Entity::new(0, 2, "LOC")]);
        assert!(r.records[2].1.entities.is_empty());
        let (s, e) = &r.records[1];
        let back = read_conll_ner(&write_conll_ner(s, e), &opts()).unwrap();
        assert_eq!(back.records[0], r.records[1]);
        assert!(read_conll_ner("a X-ORG\n", &opts()).is_err());
    }

    #[test]
    fn bieos_tags() {
        let r = read_conll_ner("a B-PER\nb E-PER\nc S-LOC\nd I-LOC\n", &opts()).unwrap();
        assert_eq!(
            r.records[0].1.entities,
            vec![Entity::new(0, 2, "PER"), Entity::new(2, 3, "LOC"), Entity::new(3, 4, "LOC")]
        );
    }

    #[test]
    fn conll_dep_reading() {
        let ok = "1\tHi\t_\tUH\tUH\t_\t2\tdiscourse\t_\t_\n2\tthere\t_\tRB\tRB\t_\t0\troot\t_\t_\n";
        let r = read_conll_dep(ok, &opts()).unwrap();
        assert!(r.records[0].projective);
        let rec = &r.records[0];
        assert_eq!(write_conll_dep(&rec.sentence, &rec.tree, rec.pos.as_ref()), ok);
        let crossing = "1 a 3 x\n2 b 4 x\n3 c 0 root\n4 d 3 x\n";
        let r = read_conll_dep(crossing, &opts()).unwrap();
        assert!(!r.records[0].projective);
        let drop = ReadOptions {
            drop_non_projective: true,
            ..opts()
        };
        assert!(read_conll_dep(crossing, &drop).unwrap().records.is_empty());
        assert!(read_conll_dep("1 a 5 x\n", &opts()).is_err());
        assert!(read_conll_dep("1 a 2 x\n2 b 1 x\n", &opts()).is_err());
    }

    #[test]
    fn jsonl_round_trip_and_errors() {
        assert!(read_jsonl("").unwrap().is_empty());
        let mut r = CorpusRecord::new("s1", Sentence::parse("a b").unwrap());
        r.pos = Some(PosSequence::new(["X", "Y"]));
        r.dep = Some(DepTree::new(vec![0, 1], ["root", "dep"]));
        let text = write_jsonl(&[r.clone()]);
        assert_eq!(read_jsonl(&text).unwrap(), vec![r]);
        assert_eq!(write_jsonl(&read_jsonl(&text).unwrap()), text);
        let bad = format!("{text}{{\"id\":\"x\",\"tokens\":[\"a\"],\"pos\":[\"X\",\"Y\"]}}\n");
        assert_eq!(read_jsonl(&bad).unwrap_err().line(), 2);
    }
}
