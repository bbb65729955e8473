//! Dependency schemas over the arc-standard transition system.
//!
//! The stack starts with the artificial root 0. `SH` pushes the next token,
//! a left arc makes the top `s1` the head of the item below it `s2` and pops
//! `s2`, and a right arc makes `s2` the head of `s1` and pops `s1`. LS writes
//! `SH`, `<rel` and `>rel` (or `LA-rel` and `RA-rel`); LT writes each token
//! in place of its shift. Dependency prompts are handled in
//! [`super::dep_pt`].

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::dep_pt::{self, DepPtAutomaton};
use super::{SchemaError, SchemaKind, Variant};
use crate::automaton::{guarded, normalize, replay, Automaton, StepError, SymbolId, Vocabulary};
use crate::dict::DescriptionDict;
use crate::structure::{DepTree, OutputSequence, Sentence};

pub const SHIFT: &str = "SH";
/// Relation of the token attached to the artificial root.
pub const ROOT: &str = "root";

/// Spelling of arc transitions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Notation {
    /// `<rel` and `>rel`.
    #[default]
    Arrows,
    /// `LA-rel` and `RA-rel`.
    Named,
}

impl Notation {
    pub fn left(self, rel: &str) -> String {
        match self {
            Notation::Arrows => format!("<{rel}"),
            Notation::Named => format!("LA-{rel}"),
        }
    }

    pub fn right(self, rel: &str) -> String {
        match self {
            Notation::Arrows => format!(">{rel}"),
            Notation::Named => format!("RA-{rel}"),
        }
    }

    fn read(self, sym: &str) -> Option<(Dir, &str)> {
        let (l, r) = match self {
            Notation::Arrows => ("<", ">"),
            Notation::Named => ("LA-", "RA-"),
        };
        if let Some(rel) = sym.strip_prefix(l) {
            Some((Dir::Left, rel))
        } else {
            sym.strip_prefix(r).map(|rel| (Dir::Right, rel))
        }
    }
}

impl fmt::Display for Notation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Notation::Arrows => "arrows",
            Notation::Named => "named",
        })
    }
}

impl FromStr for Notation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "arrows" => Ok(Notation::Arrows),
            "named" => Ok(Notation::Named),
            other => Err(format!("unknown notation {other:?} (expected arrows or named)")),
        }
    }
}

/// Direction of an arc: `Left` attaches `s2` to `s1`, `Right` attaches `s1`
/// to `s2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dir {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transition {
    Shift,
    Arc(Dir, String),
}

impl Transition {
    pub fn left(rel: impl Into<String>) -> Self {
        Transition::Arc(Dir::Left, rel.into())
    }

    pub fn right(rel: impl Into<String>) -> Self {
        Transition::Arc(Dir::Right, rel.into())
    }

    pub fn render(&self, notation: Notation) -> String {
        match self {
            Transition::Shift => SHIFT.into(),
            Transition::Arc(Dir::Left, r) => notation.left(r),
            Transition::Arc(Dir::Right, r) => notation.right(r),
        }
    }
}

/// Arc-standard configuration over tokens `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcStandard {
    stack: Vec<usize>,
    next: usize,
    n: usize,
    root_arc: bool,
    heads: Vec<Option<(usize, String)>>,
}

impl ArcStandard {
    /// With `root_arc` false the final attachment to the root is implicit:
    /// the system is terminal once only one token is left on the stack.
    pub fn new(n: usize, root_arc: bool) -> Self {
        ArcStandard {
            stack: vec![0],
            next: 1,
            n,
            root_arc,
            heads: vec![None; n],
        }
    }

    pub fn stack(&self) -> &[usize] {
        &self.stack
    }

    /// Next token in the buffer, 1-based; `n + 1` once the buffer is empty.
    pub fn next(&self) -> usize {
        self.next
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn root_arc(&self) -> bool {
        self.root_arc
    }

    /// Tokens still in the buffer.
    pub fn remaining(&self) -> usize {
        self.n + 1 - self.next
    }

    pub fn s1(&self) -> Option<usize> {
        self.stack.last().copied()
    }

    pub fn s2(&self) -> Option<usize> {
        self.stack.len().checked_sub(2).map(|i| self.stack[i])
    }

    pub fn is_terminal(&self) -> bool {
        self.next > self.n && (self.stack.len() == 1 || (!self.root_arc && self.stack.len() == 2))
    }

    /// Whether an arc in `dir` labelled `rel` is legal.
    pub fn arc_legal(&self, dir: Dir, rel: &str) -> bool {
        if self.is_terminal() || self.stack.len() < 2 {
            return false;
        }
        if self.stack.len() >= 3 {
            return rel != ROOT;
        }
        dir == Dir::Right && rel == ROOT && self.root_arc && self.next > self.n
    }

    pub fn is_legal(&self, t: &Transition) -> bool {
        match t {
            Transition::Shift => self.next <= self.n,
            Transition::Arc(dir, rel) => self.arc_legal(*dir, rel),
        }
    }

    pub fn apply(&mut self, t: &Transition) -> Result<(), &'static str> {
        if !self.is_legal(t) {
            return Err(match t {
                Transition::Shift => "buffer is empty",
                Transition::Arc(..) => "arc is not legal in this configuration",
            });
        }
        match t {
            Transition::Shift => {
                self.stack.push(self.next);
                self.next += 1;
            }
            Transition::Arc(dir, rel) => {
                let s1 = self.stack.pop().expect("legal arcs have two operands");
                let s2 = self.stack.pop().expect("legal arcs have two operands");
                let (head, dep) = match dir {
                    Dir::Left => (s1, s2),
                    Dir::Right => (s2, s1),
                };
                self.heads[dep - 1] = Some((head, rel.clone()));
                self.stack.push(head);
            }
        }
        Ok(())
    }

    /// Head and relation assigned to token `dep` so far.
    pub fn head_of(&self, dep: usize) -> Option<(usize, &str)> {
        self.heads[dep - 1].as_ref().map(|(h, r)| (*h, r.as_str()))
    }

    /// Shifts until `slot` (1 for the top of the stack, 2 for the item below)
    /// satisfies `pred`. Returns false, leaving the state untouched, when the
    /// buffer runs out first.
    pub fn recall_shift(&mut self, slot: usize, pred: impl Fn(usize) -> bool) -> bool {
        let mut probe = self.clone();
        loop {
            let top = probe.stack.len().checked_sub(slot).map(|i| probe.stack[i]);
            if top.is_some_and(&pred) {
                *self = probe;
                return true;
            }
            if probe.apply(&Transition::Shift).is_err() {
                return false;
            }
        }
    }

    /// The tree of a terminal configuration.
    pub fn tree(&self) -> Option<DepTree> {
        if !self.is_terminal() {
            return None;
        }
        let mut heads = self.heads.clone();
        if let [0, x] = self.stack[..] {
            heads[x - 1] = Some((0, ROOT.into()));
        }
        let (h, r): (Vec<usize>, Vec<String>) = heads
            .into_iter()
            .map(|a| a.expect("terminal configurations attach every token"))
            .unzip();
        Some(DepTree::new(h, r))
    }

    /// Completes any configuration by shifting the rest of the buffer and
    /// attaching each stack item to the one below with `default`.
    pub fn force_finish(mut self, default: &str) -> DepTree {
        while self.apply(&Transition::Shift).is_ok() {}
        while self.stack.len() > 2 {
            self.apply(&Transition::right(default)).expect("right arcs between tokens are legal");
        }
        if self.root_arc && self.stack.len() == 2 {
            self.apply(&Transition::right(ROOT)).expect("the root arc is legal on an empty buffer");
        }
        self.tree().expect("configuration is terminal")
    }
}

/// Checks that `tree` can be produced: relations come from `dict`, the root
/// token alone carries [`ROOT`].
pub(crate) fn check_tree(dict: &DescriptionDict, tree: &DepTree) -> Result<(), SchemaError> {
    for (i, (h, r)) in tree.heads.iter().zip(&tree.relations).enumerate() {
        if !dict.contains(r) {
            return Err(SchemaError::UnknownLabel(r.clone()));
        }
        if (*h == 0) != (r == ROOT) {
            return Err(SchemaError::InvalidStructure(format!(
                "token {} has relation {r:?} with head {h}; exactly the root token carries {ROOT:?}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Static oracle that attaches as soon as an arc is correct: a left arc
/// whenever `s2`'s head is `s1`, a right arc whenever `s1`'s head is `s2` and
/// `s1` has all its dependents.
pub fn oracle(tree: &DepTree, root_arc: bool) -> Result<Vec<Transition>, SchemaError> {
    let n = tree.len();
    let mut missing = vec![0usize; n + 1];
    for &h in &tree.heads {
        missing[h] += 1;
    }
    let head = |d: usize| tree.heads[d - 1];
    let rel = |d: usize| tree.relations[d - 1].clone();
    let mut state = ArcStandard::new(n, root_arc);
    let mut out = Vec::new();
    while !state.is_terminal() {
        let t = match (state.s2(), state.s1()) {
            (Some(s2), Some(s1)) if s2 != 0 && head(s2) == s1 => Transition::left(rel(s2)),
            (Some(s2), Some(s1)) if head(s1) == s2 && missing[s1] == 0 && (s2 != 0 || state.remaining() == 0) => {
                Transition::right(rel(s1))
            }
            _ if state.remaining() > 0 => Transition::Shift,
            _ => return Err(SchemaError::NonProjective),
        };
        if let Transition::Arc(dir, _) = &t {
            let h = if *dir == Dir::Left { state.s1() } else { state.s2() };
            missing[h.expect("arc has operands")] -= 1;
        }
        state
            .apply(&t)
            .map_err(|r| SchemaError::InvalidStructure(r.to_string()))?;
        out.push(t);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DepCodec {
    dict: Arc<DescriptionDict>,
    kind: SchemaKind,
    variant: Variant,
    notation: Notation,
}

impl DepCodec {
    pub fn new(dict: Arc<DescriptionDict>, kind: SchemaKind, variant: Variant, notation: Notation) -> Self {
        DepCodec {
            dict,
            kind,
            variant,
            notation,
        }
    }

    pub fn kind(&self) -> SchemaKind {
        self.kind
    }

    pub fn dict(&self) -> &DescriptionDict {
        &self.dict
    }

    pub fn notation(&self) -> Notation {
        self.notation
    }

    pub fn linearize(&self, sent: &Sentence, tree: &DepTree) -> Result<OutputSequence, SchemaError> {
        check_tree(&self.dict, tree)?;
        if !tree.is_projective() {
            return Err(SchemaError::NonProjective);
        }
        let transitions = oracle(tree, self.dict.root_arc())?;
        let body: Vec<String> = match self.kind {
            SchemaKind::Ls => transitions.iter().map(|t| t.render(self.notation)).collect(),
            SchemaKind::Lt => {
                let mut next = 0;
                transitions
                    .iter()
                    .map(|t| match t {
                        Transition::Shift => {
                            next += 1;
                            sent.token(next - 1).to_string()
                        }
                        t => t.render(self.notation),
                    })
                    .collect()
            }
            SchemaKind::Pt => dep_pt::linearize(&self.dict, self.variant, sent, &transitions),
        };
        Ok(OutputSequence::from_body(body).expect("body has no end symbol"))
    }

    fn read(&self, sym: &str, state: &ArcStandard, sent: &Sentence) -> Option<Transition> {
        if self.kind == SchemaKind::Lt {
            if state.next() <= state.len() && sent.token(state.next() - 1) == sym {
                return Some(Transition::Shift);
            }
        } else if sym == SHIFT {
            return Some(Transition::Shift);
        }
        let (dir, rel) = self.notation.read(sym)?;
        self.dict.contains(rel).then(|| Transition::Arc(dir, rel.to_string()))
    }

    pub fn delinearize(&self, sent: &Sentence, out: &OutputSequence, lenient: bool) -> Result<DepTree, SchemaError> {
        if self.kind == SchemaKind::Pt {
            if lenient {
                return Ok(dep_pt::repair(&self.dict, self.variant, sent, out.body()));
            }
            let mut a = self.pt_automaton(sent);
            replay(&mut a, out)?;
            return Ok(a.tree().expect("a finished automaton is terminal"));
        }
        let mut state = ArcStandard::new(sent.len(), self.dict.root_arc());
        for (i, sym) in out.body().iter().enumerate() {
            let result = match self.read(sym, &state, sent) {
                Some(t) => state.apply(&t).map_err(|r| SchemaError::malformed(i, r)),
                None => Err(SchemaError::malformed(i, format!("unexpected symbol {sym:?}"))),
            };
            if let Err(e) = result {
                if !lenient {
                    return Err(e);
                }
            }
        }
        if lenient {
            return Ok(state.force_finish(self.dict.default_label()));
        }
        state
            .tree()
            .ok_or_else(|| SchemaError::Incomplete("transition sequence stops before a terminal configuration".into()))
    }

    pub fn vocabulary(&self, sent: &Sentence) -> Vocabulary {
        match self.kind {
            SchemaKind::Pt => return dep_pt::vocabulary(&self.dict, self.variant, sent),
            SchemaKind::Ls => {
                let mut v = Vocabulary::new();
                v.add(SHIFT);
                self.add_arcs(&mut v);
                v
            }
            SchemaKind::Lt => {
                let mut v = Vocabulary::new();
                self.add_arcs(&mut v);
                v.extend(sent.tokens());
                v
            }
        }
    }

    fn add_arcs(&self, v: &mut Vocabulary) {
        for l in self.dict.labels().iter().filter(|l| *l != ROOT) {
            v.add(&self.notation.left(l));
        }
        for l in self.dict.labels() {
            v.add(&self.notation.right(l));
        }
    }

    pub fn pt_automaton(&self, sent: &Sentence) -> DepPtAutomaton {
        DepPtAutomaton::new(&self.dict, self.variant, sent, Arc::new(self.vocabulary(sent)))
    }

    pub fn automaton(&self, sent: &Sentence) -> Box<dyn Automaton> {
        if self.kind == SchemaKind::Pt {
            return Box::new(self.pt_automaton(sent));
        }
        let vocab = Arc::new(self.vocabulary(sent));
        let rels: Vec<&String> = self.dict.labels().iter().filter(|l| *l != ROOT).collect();
        let shift = match self.kind {
            SchemaKind::Ls => vec![vocab.known(SHIFT)],
            _ => sent.tokens().iter().map(|t| vocab.known(t)).collect(),
        };
        Box::new(DepAutomaton {
            lt: self.kind == SchemaKind::Lt,
            left: rels.iter().map(|l| vocab.known(&self.notation.left(l))).collect(),
            right: rels.iter().map(|l| vocab.known(&self.notation.right(l))).collect(),
            root: self.dict.contains(ROOT).then(|| vocab.known(&self.notation.right(ROOT))),
            rels: rels.into_iter().cloned().collect(),
            shift,
            vocab,
            state: ArcStandard::new(sent.len(), self.dict.root_arc()),
            i: 0,
            done: false,
        })
    }
}

/// Candidate-set automaton for dependency LS and LT.
#[derive(Debug, Clone)]
pub struct DepAutomaton {
    lt: bool,
    vocab: Arc<Vocabulary>,
    /// LS: the single `SH` id. LT: the id of every token in order.
    shift: Vec<SymbolId>,
    rels: Vec<String>,
    left: Vec<SymbolId>,
    right: Vec<SymbolId>,
    root: Option<SymbolId>,
    state: ArcStandard,
    i: usize,
    done: bool,
}

impl DepAutomaton {
    pub fn state(&self) -> &ArcStandard {
        &self.state
    }

    fn shift_id(&self) -> Option<SymbolId> {
        if self.state.remaining() == 0 {
            None
        } else if self.lt {
            Some(self.shift[self.state.next() - 1])
        } else {
            Some(self.shift[0])
        }
    }
}

impl Automaton for DepAutomaton {
    fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    fn candidates(&self) -> Vec<SymbolId> {
        if self.done {
            return Vec::new();
        }
        if self.state.is_terminal() {
            return vec![self.vocab.eos()];
        }
        let mut c: Vec<SymbolId> = self.shift_id().into_iter().collect();
        if self.state.stack().len() >= 3 {
            c.extend(&self.left);
            c.extend(&self.right);
        } else if let Some(root) = self.root.filter(|_| self.state.arc_legal(Dir::Right, ROOT)) {
            c.push(root);
        }
        normalize(c)
    }

    fn advance(&mut self, symbol: SymbolId) -> Result<(), StepError> {
        guarded(self, symbol, |a| {
            a.i += 1;
            let t = if symbol == a.vocab.eos() {
                a.done = true;
                return;
            } else if Some(symbol) == a.shift_id() {
                Transition::Shift
            } else if Some(symbol) == a.root {
                Transition::right(ROOT)
            } else if let Some(k) = a.left.iter().position(|&s| s == symbol) {
                Transition::left(a.rels[k].clone())
            } else {
                let k = a.right.iter().position(|&s| s == symbol).expect("candidate is an arc");
                Transition::right(a.rels[k].clone())
            };
            a.state.apply(&t).expect("candidates are legal");
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
