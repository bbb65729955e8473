//! Constituency prompts.
//!
//! A prompt is a sequence of descriptions `the X has m1 and m2 ...` joined
//! by `;` and closed by `.`. The first description is headed by `the
//! sentence`. A mention is one of
//!
//! * `` `` t1 t2 '' `` for a maximal run of terminal children,
//! * `the X `` t1 t2 ''` for a child whose children are all terminals,
//! * `the X , which has ...` for a last child with no earlier non-flat
//!   sibling, described in place (the verbose variant repeats `the X has`
//!   instead of `which has`),
//! * `a X` for any other child, described later by its own `the X has`.
//!
//! After a description the next one is the earliest pending child found by
//! walking from the most recently described node up to the root and
//! scanning each node's children left to right. The reverse parser resolves
//! `the X has` with the same walk restricted to label `X`.

use super::{SchemaError, Variant};
use crate::automaton::Vocabulary;
use crate::dict::DescriptionDict;
use crate::structure::{ConChild, ConNode, ConTree, Sentence, CLOSE_QUOTE, OPEN_QUOTE, SEP, STOP, TOP};
use crate::trie::Trie;

pub const THE: &str = "the";
pub const HAS: &str = "has";
pub const AND: &str = "and";
pub const COMMA: &str = ",";
pub const WHICH: &str = "which";
/// The label whose only-child position under `TOP` is described as the
/// sentence itself when the dictionary collapses the root.
pub const CLAUSE: &str = "S";

fn collapses(dict: &DescriptionDict, root: &ConNode) -> bool {
    dict.collapse_top()
        && matches!(root.children.as_slice(), [ConChild::Node(n)] if n.label == CLAUSE)
}

fn words<'d>(dict: &'d DescriptionDict, label: &str) -> &'d [String] {
    &dict.get(label).expect("labels are checked before linearizing").words
}

fn at<'t>(root: &'t ConNode, path: &[usize]) -> &'t ConNode {
    path.iter().fold(root, |node, &i| match &node.children[i] {
        ConChild::Node(n) => n,
        ConChild::Terminal(_) => unreachable!("paths only lead through constituents"),
    })
}

struct Writer<'a> {
    dict: &'a DescriptionDict,
    verbose: bool,
    sent: &'a Sentence,
    root: &'a ConNode,
    pending: Vec<Vec<usize>>,
    out: Vec<String>,
}

impl Writer<'_> {
    fn push(&mut self, s: &str) {
        self.out.push(s.to_string());
    }

    fn push_words(&mut self, label: &str) {
        let w = words(self.dict, label);
        self.out.extend(w.iter().cloned());
    }

    fn quote(&mut self, terminals: impl IntoIterator<Item = usize>) {
        self.push(OPEN_QUOTE);
        for t in terminals {
            let tok = self.sent.token(t).to_string();
            self.out.push(tok);
        }
        self.push(CLOSE_QUOTE);
    }

    /// Writes the mentions of the children of the node at `path` and
    /// returns the deepest node described in place.
    fn mentions(&mut self, path: &[usize]) -> Vec<usize> {
        let node = at(self.root, path);
        let mut deepest = path.to_vec();
        let children = &node.children;
        let mut i = 0;
        while i < children.len() {
            if i > 0 {
                self.push(AND);
            }
            match &children[i] {
                ConChild::Terminal(_) => {
                    let run: Vec<usize> = children[i..]
                        .iter()
                        .map_while(|c| match c {
                            ConChild::Terminal(t) => Some(*t),
                            ConChild::Node(_) => None,
                        })
                        .collect();
                    i += run.len();
                    self.quote(run);
                    continue;
                }
                ConChild::Node(c) if c.is_flat() => {
                    self.push(THE);
                    self.push_words(&c.label);
                    self.quote(c.terminals());
                }
                ConChild::Node(c) => {
                    let mut child = path.to_vec();
                    child.push(i);
                    let inline = i + 1 == children.len()
                        && children[..i]
                            .iter()
                            .all(|s| !matches!(s, ConChild::Node(n) if !n.is_flat()));
                    if inline {
                        self.push(THE);
                        self.push_words(&c.label);
                        self.push(COMMA);
                        if self.verbose {
                            self.push(THE);
                            self.push_words(&c.label);
                        } else {
                            self.push(WHICH);
                        }
                        self.push(HAS);
                        deepest = self.mentions(&child);
                    } else {
                        let article = self.dict.get(&c.label).expect("checked").article.clone();
                        self.out.push(article);
                        self.push_words(&c.label);
                        self.pending.push(child);
                    }
                }
            }
            i += 1;
        }
        deepest
    }

    /// Removes and returns the first pending node found walking from
    /// `cursor` to the root.
    fn next_target(&mut self, cursor: &[usize]) -> Option<Vec<usize>> {
        for k in (0..=cursor.len()).rev() {
            let base = &cursor[..k];
            let node = at(self.root, base);
            for i in 0..node.children.len() {
                let mut p = base.to_vec();
                p.push(i);
                if let Some(j) = self.pending.iter().position(|q| *q == p) {
                    return Some(self.pending.remove(j));
                }
            }
        }
        None
    }
}

pub fn linearize(dict: &DescriptionDict, variant: Variant, tree: &ConTree, sent: &Sentence) -> Vec<String> {
    let mut w = Writer {
        dict,
        verbose: variant == Variant::IncVrb,
        sent,
        root: &tree.root,
        pending: Vec::new(),
        out: Vec::new(),
    };
    let first = if collapses(dict, &tree.root) { vec![0] } else { vec![] };
    let mut target = Some(first);
    let mut head_label = TOP.to_string();
    while let Some(path) = target {
        if !w.out.is_empty() {
            w.push(SEP);
        }
        w.push(THE);
        w.push_words(&head_label);
        w.push(HAS);
        let cursor = w.mentions(&path);
        target = w.next_target(&cursor);
        if let Some(p) = &target {
            head_label = at(w.root, p).label.clone();
        }
    }
    debug_assert!(w.pending.is_empty(), "every pending constituent is described");
    w.push(STOP);
    w.out
}

pub fn vocabulary(dict: &DescriptionDict, variant: Variant, sent: &Sentence, v: &mut Vocabulary) {
    v.extend([SEP, STOP, OPEN_QUOTE, CLOSE_QUOTE, THE, HAS, AND, COMMA]);
    if variant != Variant::IncVrb {
        v.add(WHICH);
    }
    for (_, d) in dict.entries() {
        v.add(&d.article);
        v.extend(&d.words);
    }
    v.extend(sent.tokens());
}

/// Trie of `the <words>` (definite) and `<article> <words>` (indefinite)
/// label phrases.
pub fn label_trie(dict: &DescriptionDict) -> Trie<(String, bool)> {
    let mut t = Trie::new();
    for (label, d) in dict.entries() {
        let mut indefinite = vec![d.article.clone()];
        indefinite.extend(d.words.iter().cloned());
        t.insert(&indefinite, (label.to_string(), false)).expect("non-empty");
        let mut definite = vec![THE.to_string()];
        definite.extend(d.words.iter().cloned());
        t.insert(&definite, (label.to_string(), true)).expect("non-empty");
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Item<'a> {
    Label { label: &'a str, definite: bool },
    Word(&'a str),
    Quote(&'a [String]),
}

/// Splits a prompt into quoted runs, label phrases and single words. Quoted
/// content never takes part in label matching. A leading `The` is read as
/// `the`.
fn items<'a>(
    body: &'a [String],
    trie: &'a Trie<(String, bool)>,
    lenient: bool,
) -> Result<Vec<(usize, Item<'a>)>, SchemaError> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < body.len() {
        if body[i] == OPEN_QUOTE {
            let close = body[i + 1..].iter().position(|s| s == CLOSE_QUOTE).map(|j| i + 1 + j);
            let end = match close {
                Some(j) => j,
                None if lenient => body.len(),
                None => return Err(SchemaError::malformed(i, "quote is never closed")),
            };
            out.push((i, Item::Quote(&body[i + 1..end])));
            i = end + 1;
            continue;
        }
        let end = body[i..].iter().position(|s| s == OPEN_QUOTE).map_or(body.len(), |j| i + j);
        let run: Vec<&str> = body[i..end]
            .iter()
            .map(|s| if s == "The" { THE } else { s.as_str() })
            .collect();
        for span in trie.split(&run) {
            match span.value {
                Some((label, definite)) => out.push((
                    i + span.start,
                    Item::Label {
                        label,
                        definite: *definite,
                    },
                )),
                None => {
                    for k in span.start..span.end {
                        out.push((i + k, Item::Word(&body[i + k])));
                    }
                }
            }
        }
        i = end;
    }
    Ok(out)
}

#[derive(Debug)]
enum Child {
    Node(usize),
    Term(String),
}

#[derive(Debug)]
struct Node {
    label: String,
    children: Vec<Child>,
    parent: Option<usize>,
}

struct Reader<'a> {
    items: Vec<(usize, Item<'a>)>,
    pos: usize,
    end: usize,
    lenient: bool,
    verbose: bool,
    nodes: Vec<Node>,
    pending: Vec<usize>,
}

type Step<T> = Result<T, SchemaError>;

impl<'a> Reader<'a> {
    fn peek(&self) -> Option<Item<'a>> {
        self.items.get(self.pos).map(|(_, it)| *it)
    }

    fn peek_at(&self, k: usize) -> Option<Item<'a>> {
        self.items.get(self.pos + k).map(|(_, it)| *it)
    }

    fn here(&self) -> usize {
        self.items.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn fail<T>(&self, reason: impl Into<String>) -> Step<T> {
        Err(SchemaError::malformed(self.here(), reason))
    }

    fn add(&mut self, label: &str, parent: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node {
            label: label.to_string(),
            children: Vec::new(),
            parent: Some(parent),
        });
        self.nodes[parent].children.push(Child::Node(id));
        id
    }

    /// First pending node labelled `label` found walking from `cursor` to
    /// the root, scanning each node's children left to right.
    fn find_target(&self, cursor: usize, label: &str) -> Option<usize> {
        let mut cur = Some(cursor);
        while let Some(c) = cur {
            for child in &self.nodes[c].children {
                if let Child::Node(id) = child {
                    if self.nodes[*id].label == label && self.pending.contains(id) {
                        return Some(*id);
                    }
                }
            }
            cur = self.nodes[c].parent;
        }
        None
    }

    fn expect_word(&mut self, w: &str) -> Step<()> {
        if self.peek() == Some(Item::Word(w)) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(format!("expected {w:?}"))
        }
    }

    /// Reads `the X has` and returns `X`.
    fn head(&mut self) -> Step<&'a str> {
        match (self.peek(), self.peek_at(1)) {
            (Some(Item::Label { label, definite: true }), Some(Item::Word(HAS))) => {
                self.pos += 2;
                Ok(label)
            }
            _ => self.fail("expected a description head `the ... has`"),
        }
    }

    /// Reads one mention into `parent`. Returns the node that further
    /// mentions attach to, which is a new node right after `which has`.
    fn mention(&mut self, parent: usize) -> Step<usize> {
        match self.peek() {
            Some(Item::Quote(toks)) => {
                self.pos += 1;
                if toks.is_empty() && !self.lenient {
                    return self.fail("empty quotation");
                }
                self.nodes[parent]
                    .children
                    .extend(toks.iter().map(|t| Child::Term(t.clone())));
                Ok(parent)
            }
            Some(Item::Label { label, .. }) if label == TOP => self.fail("the sentence cannot be mentioned"),
            Some(Item::Label { label, definite: false }) => {
                self.pos += 1;
                let id = self.add(label, parent);
                self.pending.push(id);
                Ok(parent)
            }
            Some(Item::Label { label, definite: true }) => match self.peek_at(1) {
                Some(Item::Quote(toks)) => {
                    self.pos += 2;
                    if toks.is_empty() && !self.lenient {
                        return self.fail("empty quotation");
                    }
                    let id = self.add(label, parent);
                    self.nodes[id]
                        .children
                        .extend(toks.iter().map(|t| Child::Term(t.clone())));
                    Ok(parent)
                }
                Some(Item::Word(COMMA)) => {
                    self.pos += 2;
                    if self.verbose {
                        match self.peek() {
                            Some(Item::Label { label: l, definite: true }) if l == label => self.pos += 1,
                            _ => return self.fail(format!("expected the {label} again")),
                        }
                    } else {
                        self.expect_word(WHICH)?;
                    }
                    self.expect_word(HAS)?;
                    Ok(self.add(label, parent))
                }
                _ => {
                    self.pos += 1;
                    self.fail("expected a quotation or `, which has` after a definite mention")
                }
            },
            _ => self.fail("expected a mention"),
        }
    }

    fn paragraph(&mut self, collapse: bool) -> Step<()> {
        let mut cursor = 0;
        let mut first = true;
        loop {
            let head_at = self.pos;
            let target = match self.head() {
                Ok(label) if first => {
                    if label != TOP {
                        self.pos = head_at;
                        return self.fail("the first description must be about the sentence");
                    }
                    if collapse {
                        self.add(CLAUSE, 0)
                    } else {
                        0
                    }
                }
                Ok(label) => match self.find_target(cursor, label) {
                    Some(id) => {
                        self.pending.retain(|&p| p != id);
                        id
                    }
                    None if self.lenient => self.add(label, cursor),
                    None => {
                        self.pos = head_at;
                        return self.fail(format!("no pending {label} to describe"));
                    }
                },
                Err(_) if self.lenient => {
                    if !self.resync_head() {
                        return Ok(());
                    }
                    continue;
                }
                Err(e) => return Err(e),
            };
            first = false;
            let mut parent = target;
            loop {
                match self.mention(parent) {
                    Ok(p) if p != parent => {
                        parent = p;
                        continue;
                    }
                    Ok(_) => {}
                    Err(_) if self.lenient => {
                        if self.pos < self.items.len() && !self.at_connector() {
                            self.pos += 1;
                        }
                    }
                    Err(e) => return Err(e),
                }
                match self.peek() {
                    Some(Item::Word(AND)) => self.pos += 1,
                    Some(Item::Word(SEP)) => {
                        self.pos += 1;
                        cursor = parent;
                        break;
                    }
                    Some(Item::Word(STOP)) => {
                        self.pos += 1;
                        if self.pos < self.items.len() && !self.lenient {
                            return self.fail("text after the final period");
                        }
                        return Ok(());
                    }
                    None if self.lenient => return Ok(()),
                    None => return Err(SchemaError::Incomplete("prompt does not end with '.'".into())),
                    Some(_) if self.lenient => {
                        if self.at_head() {
                            cursor = parent;
                            break;
                        }
                    }
                    Some(_) => return self.fail("expected `and`, `;` or `.`"),
                }
            }
        }
    }

    fn at_connector(&self) -> bool {
        matches!(self.peek(), Some(Item::Word(AND | SEP | STOP)))
    }

    fn at_head(&self) -> bool {
        matches!(
            (self.peek(), self.peek_at(1)),
            (Some(Item::Label { definite: true, .. }), Some(Item::Word(HAS)))
        )
    }

    /// Skips to the next `the X has`; false when none is left.
    fn resync_head(&mut self) -> bool {
        while self.pos < self.items.len() {
            if self.at_head() {
                return true;
            }
            self.pos += 1;
        }
        false
    }

    fn build(&self, id: usize, terms: &mut dyn FnMut(&str) -> Option<usize>) -> Option<ConNode> {
        let mut children = Vec::new();
        for child in &self.nodes[id].children {
            match child {
                Child::Term(t) => {
                    if let Some(i) = terms(t) {
                        children.push(ConChild::Terminal(i));
                    }
                }
                Child::Node(c) => {
                    if let Some(n) = self.build(*c, terms) {
                        children.push(ConChild::Node(n));
                    }
                }
            }
        }
        (!children.is_empty()).then(|| ConNode::new(self.nodes[id].label.clone(), children))
    }

    fn yield_strings(&self, id: usize, out: &mut Vec<String>) {
        for child in &self.nodes[id].children {
            match child {
                Child::Term(t) => out.push(t.clone()),
                Child::Node(c) => self.yield_strings(*c, out),
            }
        }
    }
}

/// Puts every token missing from `root` right after its predecessor, inside
/// a new constituent labelled `default`.
fn insert_missing(root: &mut ConNode, n: usize, default: &str) {
    let mut present = vec![false; n];
    for t in root.terminals() {
        present[t] = true;
    }
    let run_after = |start: usize| -> Vec<ConChild> {
        (start..n).take_while(|&j| !present[j]).map(ConChild::Terminal).collect()
    };
    fn walk(node: &mut ConNode, run_after: &dyn Fn(usize) -> Vec<ConChild>, default: &str) {
        let mut i = 0;
        while i < node.children.len() {
            match &mut node.children[i] {
                ConChild::Terminal(t) => {
                    let run = run_after(*t + 1);
                    if !run.is_empty() {
                        node.children.insert(i + 1, ConChild::Node(ConNode::new(default, run)));
                        i += 1;
                    }
                }
                ConChild::Node(c) => walk(c, run_after, default),
            }
            i += 1;
        }
    }
    walk(root, &run_after, default);
    let lead = run_after(0);
    if !lead.is_empty() {
        root.children.insert(0, ConChild::Node(ConNode::new(default, lead)));
    }
}

pub fn reverse(
    dict: &DescriptionDict,
    variant: Variant,
    sent: &Sentence,
    body: &[String],
    lenient: bool,
) -> Result<ConTree, SchemaError> {
    let trie = label_trie(dict);
    let mut r = Reader {
        items: items(body, &trie, lenient)?,
        pos: 0,
        end: body.len(),
        lenient,
        verbose: variant == Variant::IncVrb,
        nodes: vec![Node {
            label: TOP.into(),
            children: Vec::new(),
            parent: None,
        }],
        pending: Vec::new(),
    };
    r.paragraph(dict.collapse_top())?;
    let toks = sent.tokens();
    if lenient {
        let mut k = 0;
        let mut align = |s: &str| {
            let j = (k..toks.len()).find(|&j| toks[j] == s)?;
            k = j + 1;
            Some(j)
        };
        let mut root = r
            .build(0, &mut align)
            .unwrap_or_else(|| ConNode::new(TOP, Vec::new()));
        insert_missing(&mut root, toks.len(), dict.default_label());
        return Ok(ConTree::new(root));
    }
    if let Some(&id) = r.pending.first() {
        return Err(SchemaError::Incomplete(format!("{} is never described", r.nodes[id].label)));
    }
    let mut found = Vec::new();
    r.yield_strings(0, &mut found);
    if found != toks {
        return Err(SchemaError::InvalidStructure(format!(
            "quoted tokens {found:?} do not spell the sentence"
        )));
    }
    let mut next = 0;
    let mut number = |_: &str| {
        next += 1;
        Some(next - 1)
    };
    let root = r.build(0, &mut number).expect("the sentence is non-empty");
    if root.count_nodes() != r.nodes.len() {
        return Err(SchemaError::InvalidStructure("a constituent has no children".into()));
    }
    Ok(ConTree::new(root))
}
