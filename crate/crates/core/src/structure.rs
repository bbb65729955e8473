//! Sentences, the four gold/predicted structures, and output sequences.
//!
//! Every structure has a canonical JSON form produced by serde; the field
//! names are part of the on-disk corpus format.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// End-of-sequence symbol. Every [`OutputSequence`] ends with it.
pub const EOS: &str = "</s>";
/// Separates the phrases of a prompt.
pub const SEP: &str = ";";
/// Terminates a prompt paragraph.
pub const STOP: &str = ".";
pub const OPEN_QUOTE: &str = "``";
pub const CLOSE_QUOTE: &str = "''";
/// Label of the artificial root constituent.
pub const TOP: &str = "TOP";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SentenceError {
    #[error("a sentence needs at least one token")]
    Empty,
    #[error("token {index} ({token:?}) is invalid: {reason}")]
    InvalidToken {
        index: usize,
        token: String,
        reason: &'static str,
    },
}

/// Why a token cannot be used as an input token, if it cannot.
pub fn token_problem(token: &str) -> Option<&'static str> {
    if token.is_empty() {
        return Some("empty token");
    }
    if token.chars().any(char::is_whitespace) {
        return Some("contains whitespace");
    }
    if token.contains(SEP) {
        return Some("contains the phrase separator ';'");
    }
    if token.contains(OPEN_QUOTE) || token.contains(CLOSE_QUOTE) {
        return Some("contains a reserved quote mark");
    }
    if token == EOS {
        return Some("is the end-of-sequence symbol");
    }
    if token == ")" {
        return Some("is the closing bracket symbol");
    }
    if token.len() > 1 && (token.starts_with('<') || token.starts_with('>') || token.starts_with('(')) {
        return Some("could be read as a label symbol");
    }
    None
}

/// A whitespace-free token list, the input shared by every task.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSentence", into = "RawSentence")]
pub struct Sentence {
    tokens: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawSentence {
    tokens: Vec<String>,
}

impl TryFrom<RawSentence> for Sentence {
    type Error = SentenceError;

    fn try_from(raw: RawSentence) -> Result<Self, Self::Error> {
        Sentence::new(raw.tokens)
    }
}

impl From<Sentence> for RawSentence {
    fn from(s: Sentence) -> Self {
        RawSentence { tokens: s.tokens }
    }
}

impl Sentence {
    pub fn new<I, S>(tokens: I) -> Result<Self, SentenceError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(SentenceError::Empty);
        }
        for (index, token) in tokens.iter().enumerate() {
            if let Some(reason) = token_problem(token) {
                return Err(SentenceError::InvalidToken {
                    index,
                    token: token.clone(),
                    reason,
                });
            }
        }
        Ok(Sentence { tokens })
    }

    /// Splits on whitespace.
    pub fn parse(text: &str) -> Result<Self, SentenceError> {
        Sentence::new(text.split_whitespace())
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

/// One tag per token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PosSequence {
    pub tags: Vec<String>,
}

impl PosSequence {
    pub fn new<I, S>(tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        PosSequence {
            tags: tags.into_iter().map(Into::into).collect(),
        }
    }
}

/// A typed token span. `start` is inclusive and `end` exclusive, both
/// 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Entity {
    pub start: usize,
    pub end: usize,
    #[serde(rename = "type")]
    pub label: String,
}

impl Entity {
    pub fn new(start: usize, end: usize, label: impl Into<String>) -> Self {
        Entity {
            start,
            end,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Flat, non-overlapping entities sorted by start.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntitySet {
    pub entities: Vec<Entity>,
}

impl EntitySet {
    pub fn new(entities: Vec<Entity>) -> Self {
        EntitySet { entities }
    }
}

/// A child of a constituent: a nested constituent or a terminal token index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConChild {
    Terminal(usize),
    Node(ConNode),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConNode {
    pub label: String,
    pub children: Vec<ConChild>,
}

impl ConNode {
    pub fn new(label: impl Into<String>, children: Vec<ConChild>) -> Self {
        ConNode {
            label: label.into(),
            children,
        }
    }

    /// True when every child is a terminal.
    pub fn is_flat(&self) -> bool {
        self.children.iter().all(|c| matches!(c, ConChild::Terminal(_)))
    }

    /// Terminal indices covered by this node, left to right.
    pub fn terminals(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_terminals(&mut out);
        out
    }

    fn collect_terminals(&self, out: &mut Vec<usize>) {
        for child in &self.children {
            match child {
                ConChild::Terminal(i) => out.push(*i),
                ConChild::Node(n) => n.collect_terminals(out),
            }
        }
    }

    /// Number of constituents in this subtree, self included.
    pub fn count_nodes(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(|c| match c {
                ConChild::Node(n) => n.count_nodes(),
                ConChild::Terminal(_) => 0,
            })
            .sum::<usize>()
    }
}

/// A constituency tree whose root is labelled `TOP`, with the part-of-speech
/// level already removed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConTree {
    pub root: ConNode,
}

impl ConTree {
    pub fn new(root: ConNode) -> Self {
        ConTree { root }
    }

    /// Constituents excluding `TOP`.
    pub fn num_constituents(&self) -> usize {
        self.root.count_nodes() - 1
    }

    /// Labelled spans `(label, start, end)` of every constituent except the
    /// root, in pre-order.
    pub fn spans(&self) -> Vec<(String, usize, usize)> {
        fn walk(node: &ConNode, out: &mut Vec<(String, usize, usize)>) -> (usize, usize) {
            let mut lo = usize::MAX;
            let mut hi = 0;
            let slot = out.len();
            out.push((node.label.clone(), 0, 0));
            for child in &node.children {
                let (a, b) = match child {
                    ConChild::Terminal(i) => (*i, *i + 1),
                    ConChild::Node(n) => walk(n, out),
                };
                lo = lo.min(a);
                hi = hi.max(b);
            }
            out[slot].1 = lo;
            out[slot].2 = hi;
            (lo, hi)
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out.remove(0);
        out
    }

    /// PTB-style bracketed rendering with the sentence tokens as leaves.
    pub fn to_bracketed(&self, sent: &Sentence) -> String {
        fn walk(node: &ConNode, sent: &Sentence, out: &mut String) {
            out.push('(');
            out.push_str(&node.label);
            for child in &node.children {
                out.push(' ');
                match child {
                    ConChild::Terminal(i) => out.push_str(sent.token(*i)),
                    ConChild::Node(n) => walk(n, sent, out),
                }
            }
            out.push(')');
        }
        let mut out = String::new();
        walk(&self.root, sent, &mut out);
        out
    }
}

/// Head indices are 1-based token ids with 0 for the artificial root, as in
/// CoNLL files.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DepTree {
    pub heads: Vec<usize>,
    pub relations: Vec<String>,
}

impl DepTree {
    pub fn new<S: Into<String>>(heads: Vec<usize>, relations: impl IntoIterator<Item = S>) -> Self {
        DepTree {
            heads,
            relations: relations.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    /// True when no two arcs cross (the root arc included).
    pub fn is_projective(&self) -> bool {
        let arcs: Vec<(usize, usize)> = self
            .heads
            .iter()
            .enumerate()
            .map(|(d, &h)| {
                let d = d + 1;
                (h.min(d), h.max(d))
            })
            .collect();
        for (i, &(a, b)) in arcs.iter().enumerate() {
            for &(c, d) in &arcs[i + 1..] {
                if (a < c && c < b && b < d) || (c < a && a < d && d < b) {
                    return false;
                }
            }
        }
        true
    }
}

/// The object a schema encodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Pos(PosSequence),
    Ner(EntitySet),
    Con(ConTree),
    Dep(DepTree),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("expected {expected} items, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("entity {index} has an empty or out-of-range span {start}..{end}")]
    BadSpan { index: usize, start: usize, end: usize },
    #[error("entities {first} and {second} overlap")]
    Overlap { first: usize, second: usize },
    #[error("entities {first} and {second} are out of order")]
    Unsorted { first: usize, second: usize },
    #[error("root is labelled {0:?}, expected TOP")]
    RootLabel(String),
    #[error("constituent {0:?} has no children")]
    EmptyConstituent(String),
    #[error("TOP appears below the root")]
    NestedTop,
    #[error("terminals are {found:?}, expected 0..{n} in order")]
    TerminalCover { found: Vec<usize>, n: usize },
    #[error("head {head} of token {dependent} is out of range")]
    HeadOutOfRange { dependent: usize, head: usize },
    #[error("{0} tokens attach to the root, expected exactly one")]
    RootCount(usize),
    #[error("token {0} is on a head cycle")]
    Cycle(usize),
    #[error("tree is not projective")]
    NonProjective,
}

/// Checks every structural invariant of `s` against `sent`. An empty result
/// means the structure is valid.
pub fn validate_structure(s: &Structure, sent: &Sentence) -> Vec<Violation> {
    let n = sent.len();
    let mut out = Vec::new();
    match s {
        Structure::Pos(p) => {
            if p.tags.len() != n {
                out.push(Violation::LengthMismatch {
                    expected: n,
                    found: p.tags.len(),
                });
            }
        }
        Structure::Ner(set) => {
            for (index, e) in set.entities.iter().enumerate() {
                if e.start >= e.end || e.end > n {
                    out.push(Violation::BadSpan {
                        index,
                        start: e.start,
                        end: e.end,
                    });
                }
            }
            for (i, pair) in set.entities.windows(2).enumerate() {
                if pair[1].start < pair[0].start {
                    out.push(Violation::Unsorted {
                        first: i,
                        second: i + 1,
                    });
                }
            }
            for i in 0..set.entities.len() {
                for j in i + 1..set.entities.len() {
                    let (a, b) = (&set.entities[i], &set.entities[j]);
                    if a.start < b.end && b.start < a.end {
                        out.push(Violation::Overlap { first: i, second: j });
                    }
                }
            }
        }
        Structure::Con(tree) => {
            if tree.root.label != TOP {
                out.push(Violation::RootLabel(tree.root.label.clone()));
            }
            fn walk(node: &ConNode, is_root: bool, out: &mut Vec<Violation>) {
                if node.children.is_empty() {
                    out.push(Violation::EmptyConstituent(node.label.clone()));
                }
                if !is_root && node.label == TOP {
                    out.push(Violation::NestedTop);
                }
                for child in &node.children {
                    if let ConChild::Node(c) = child {
                        walk(c, false, out);
                    }
                }
            }
            walk(&tree.root, true, &mut out);
            let found = tree.root.terminals();
            if found != (0..n).collect::<Vec<_>>() {
                out.push(Violation::TerminalCover { found, n });
            }
        }
        Structure::Dep(tree) => {
            if tree.heads.len() != n || tree.relations.len() != n {
                out.push(Violation::LengthMismatch {
                    expected: n,
                    found: tree.heads.len().max(tree.relations.len()),
                });
                return out;
            }
            let mut range_ok = true;
            for (d, &h) in tree.heads.iter().enumerate() {
                if h > n || h == d + 1 {
                    out.push(Violation::HeadOutOfRange {
                        dependent: d + 1,
                        head: h,
                    });
                    range_ok = false;
                }
            }
            let roots = tree.heads.iter().filter(|&&h| h == 0).count();
            if roots != 1 {
                out.push(Violation::RootCount(roots));
            }
            if range_ok {
                let mut on_cycle = BTreeSet::new();
                for start in 1..=n {
                    let mut seen = BTreeSet::new();
                    let mut cur = start;
                    while cur != 0 {
                        if !seen.insert(cur) {
                            on_cycle.insert(cur);
                            break;
                        }
                        cur = tree.heads[cur - 1];
                    }
                }
                out.extend(on_cycle.into_iter().map(Violation::Cycle));
                if out.is_empty() && !tree.is_projective() {
                    out.push(Violation::NonProjective);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SequenceError {
    #[error("sequence does not end with the end-of-sequence symbol")]
    MissingEos,
    #[error("end-of-sequence symbol at position {0} before the end")]
    EarlyEos(usize),
}

/// Symbols in the decoder vocabulary, terminated by exactly one [`EOS`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutputSequence {
    items: Vec<String>,
}

impl OutputSequence {
    pub fn new(items: Vec<String>) -> Result<Self, SequenceError> {
        match items.iter().position(|s| s == EOS) {
            None => Err(SequenceError::MissingEos),
            Some(p) if p + 1 != items.len() => Err(SequenceError::EarlyEos(p)),
            Some(_) => Ok(OutputSequence { items }),
        }
    }

    /// Appends [`EOS`] to a body that must not contain it.
    pub fn from_body<I, S>(body: I) -> Result<Self, SequenceError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut items: Vec<String> = body.into_iter().map(Into::into).collect();
        items.push(EOS.to_string());
        OutputSequence::new(items)
    }

    /// Parses whitespace-separated symbols; a missing trailing EOS is added.
    pub fn parse(text: &str) -> Result<Self, SequenceError> {
        let mut items: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        if items.last().map(String::as_str) != Some(EOS) {
            items.push(EOS.to_string());
        }
        OutputSequence::new(items)
    }

    pub fn symbols(&self) -> &[String] {
        &self.items
    }

    /// Everything before [`EOS`].
    pub fn body(&self) -> &[String] {
        &self.items[..self.items.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Space-joined symbols without the trailing [`EOS`].
    pub fn to_text(&self) -> String {
        self.body().join(" ")
    }
}

impl fmt::Display for OutputSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.items.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(s: &str) -> Sentence {
        Sentence::parse(s).unwrap()
    }

    #[test]
    fn rejects_reserved_tokens() {
        assert!(Sentence::new(Vec::<String>::new()).is_err());
        for bad in ["a;b", "``x", "x''", EOS, ")", "<ORG>", ">nsubj", "(NP"] {
            assert!(Sentence::new([bad]).is_err(), "{bad} accepted");
        }
        for ok in ["(", "<", "-LRB-", "don't", "."] {
            assert!(Sentence::new([ok]).is_ok(), "{ok} rejected");
        }
    }

    #[test]
    fn pos_length_checked() {
        let s = sent("a b c");
        assert!(validate_structure(&Structure::Pos(PosSequence::new(["X", "Y", "Z"])), &s).is_empty());
        assert_eq!(
            validate_structure(&Structure::Pos(PosSequence::new(["X"])), &s),
            vec![Violation::LengthMismatch { expected: 3, found: 1 }]
        );
    }

    #[test]
    fn overlapping_entities_reported() {
        let s = sent("a b c");
        let set = EntitySet::new(vec![Entity::new(0, 2, "ORG"), Entity::new(1, 3, "ORG")]);
        let v = validate_structure(&Structure::Ner(set), &s);
        assert_eq!(v, vec![Violation::Overlap { first: 0, second: 1 }]);
    }

    #[test]
    fn case_study_dependency_tree_is_valid() {
        let s = sent("It looks so out of place .");
        let tree = DepTree::new(
            vec![2, 0, 4, 2, 4, 5, 2],
            ["nsubj", "root", "advmod", "prep", "pcomp", "pobj", "punct"],
        );
        assert!(tree.is_projective());
        assert!(validate_structure(&Structure::Dep(tree), &s).is_empty());
    }

    #[test]
    fn dependency_violations() {
        let s = sent("a b c d");
        let two_roots = DepTree::new(vec![0, 0, 2, 2], ["x"; 4]);
        assert!(validate_structure(&Structure::Dep(two_roots), &s).contains(&Violation::RootCount(2)));
        let cycle = DepTree::new(vec![0, 3, 2, 1], ["x"; 4]);
        assert!(validate_structure(&Structure::Dep(cycle), &s)
            .iter()
            .any(|v| matches!(v, Violation::Cycle(_))));
        let crossing = DepTree::new(vec![3, 4, 0, 3], ["x"; 4]);
        assert_eq!(validate_structure(&Structure::Dep(crossing), &s), vec![Violation::NonProjective]);
    }

    #[test]
    fn constituency_cover() {
        let s = sent("a b");
        let good = ConTree::new(ConNode::new(
            TOP,
            vec![ConChild::Node(ConNode::new("NP", vec![ConChild::Terminal(0), ConChild::Terminal(1)]))],
        ));
        assert!(validate_structure(&Structure::Con(good.clone()), &s).is_empty());
        assert_eq!(good.to_bracketed(&s), "(TOP (NP a b))");
        assert_eq!(good.spans(), vec![("NP".to_string(), 0, 2)]);
        let bad = ConTree::new(ConNode::new(
            TOP,
            vec![ConChild::Terminal(1), ConChild::Node(ConNode::new("NP", vec![]))],
        ));
        let v = validate_structure(&Structure::Con(bad), &s);
        assert!(v.contains(&Violation::EmptyConstituent("NP".into())));
        assert!(v.iter().any(|x| matches!(x, Violation::TerminalCover { .. })));
    }

    #[test]
    fn output_sequence_requires_single_trailing_eos() {
        assert!(OutputSequence::new(vec!["a".into()]).is_err());
        assert!(OutputSequence::new(vec![EOS.into(), "a".into(), EOS.into()]).is_err());
        let seq = OutputSequence::parse("NN VB").unwrap();
        assert_eq!(seq.symbols(), ["NN", "VB", EOS]);
        assert_eq!(seq.to_text(), "NN VB");
    }

    #[test]
    fn canonical_json_shapes() {
        let tree = ConTree::new(ConNode::new(
            TOP,
            vec![ConChild::Node(ConNode::new("NP", vec![ConChild::Terminal(0)]))],
        ));
        let json = serde_json::to_string(&Structure::Con(tree.clone())).unwrap();
        assert_eq!(json, r#"{"con":{"label":"TOP","children":[{"label":"NP","children":[0]}]}}"#);
        let back: Structure = serde_json::from_str(&json).unwrap();
        assert_eq!(back, Structure::Con(tree));
        let ner = Structure::Ner(EntitySet::new(vec![Entity::new(1, 3, "ORG")]));
        assert_eq!(
            serde_json::to_string(&ner).unwrap(),
            r#"{"ner":[{"start":1,"end":3,"type":"ORG"}]}"#
        );
        assert!(serde_json::from_str::<Sentence>(r#"{"tokens":["a;"]}"#).is_err());
    }
}
