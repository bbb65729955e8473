//! Constituency schemas over a top-down shift-reduce system.
//!
//! The stack starts with the `TOP` constituent at depth 0 and the depth
//! counter at 1. `N-X` opens a constituent at the current depth, `SH` moves
//! the next token onto the stack, and `RE` closes the innermost open
//! constituent. LT writes `(X` for `N-X`, the token itself for `SH` and `)`
//! for `RE`. Constituency prompts live in [`super::con_pt`].

use std::sync::Arc;

use super::{con_pt, SchemaError, SchemaKind, Variant};
use crate::automaton::Vocabulary;
use crate::dict::DescriptionDict;
use crate::structure::{ConChild, ConNode, ConTree, OutputSequence, Sentence, TOP};

pub const SHIFT: &str = "SH";
pub const REDUCE: &str = "RE";
pub const CLOSE_BRACKET: &str = ")";

pub fn node_symbol(label: &str) -> String {
    format!("N-{label}")
}

pub fn open_bracket(label: &str) -> String {
    format!("({label}")
}

/// One transition of the top-down system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConOp {
    Node(String),
    Shift,
    Reduce,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Item {
    Open(String),
    Done(ConChild),
}

/// Parser state of the top-down system.
#[derive(Debug, Clone)]
pub struct ConState {
    stack: Vec<(Item, usize)>,
    depth: usize,
    next: usize,
    n: usize,
}

impl ConState {
    pub fn new(n: usize) -> Self {
        ConState {
            stack: vec![(Item::Open(TOP.into()), 0)],
            depth: 1,
            next: 0,
            n,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn remaining(&self) -> usize {
        self.n - self.next
    }

    fn group_len(&self) -> usize {
        self.stack.iter().rev().take_while(|(_, d)| *d == self.depth).count()
    }

    pub fn can_shift(&self) -> bool {
        self.next < self.n
    }

    pub fn can_reduce(&self) -> bool {
        self.depth >= 2 && self.group_len() > 0
    }

    pub fn can_finish(&self) -> bool {
        self.depth == 1 && self.next == self.n && self.group_len() > 0
    }

    /// Applies `op`, or explains why it is illegal.
    pub fn apply(&mut self, op: &ConOp) -> Result<(), &'static str> {
        match op {
            ConOp::Node(label) => {
                if label == TOP {
                    return Err("TOP cannot be opened");
                }
                self.stack.push((Item::Open(label.clone()), self.depth));
                self.depth += 1;
            }
            ConOp::Shift => {
                if !self.can_shift() {
                    return Err("buffer is empty");
                }
                self.stack.push((Item::Done(ConChild::Terminal(self.next)), self.depth));
                self.next += 1;
            }
            ConOp::Reduce => {
                if self.depth < 2 {
                    return Err("no open constituent to reduce");
                }
                if self.group_len() == 0 {
                    return Err("constituent has no children");
                }
                self.reduce();
            }
        }
        Ok(())
    }

    fn reduce(&mut self) {
        let k = self.group_len();
        let children = self
            .stack
            .split_off(self.stack.len() - k)
            .into_iter()
            .map(|(item, _)| match item {
                Item::Done(c) => c,
                Item::Open(_) => unreachable!("open items sit below their children"),
            })
            .collect();
        let (item, d) = self.stack.pop().expect("an open constituent is below the group");
        let Item::Open(label) = item else {
            unreachable!("the item below a group is open")
        };
        self.stack.push((Item::Done(ConChild::Node(ConNode::new(label, children))), d));
        self.depth -= 1;
    }

    /// Drops the innermost open constituent when it has no children.
    fn pop_empty(&mut self) {
        if let Some((Item::Open(_), _)) = self.stack.last() {
            self.stack.pop();
            self.depth -= 1;
        }
    }

    /// The finished tree, once [`ConState::can_finish`] holds.
    pub fn finish(self) -> Result<ConTree, &'static str> {
        if !self.can_finish() {
            return Err("tree is not complete");
        }
        let children = self
            .stack
            .into_iter()
            .skip(1)
            .map(|(item, _)| match item {
                Item::Done(c) => c,
                Item::Open(_) => unreachable!("depth 1 holds no open items"),
            })
            .collect();
        Ok(ConTree::new(ConNode::new(TOP, children)))
    }

    /// Completes any prefix: leftover tokens go into a new constituent
    /// labelled `default`, open constituents are closed and empty ones
    /// dropped.
    pub fn force_finish(mut self, default: &str) -> ConTree {
        if self.can_shift() {
            self.apply(&ConOp::Node(default.to_string())).expect("label is not TOP");
            while self.can_shift() {
                self.apply(&ConOp::Shift).expect("buffer is non-empty");
            }
        }
        while self.depth > 1 {
            if self.group_len() == 0 {
                self.pop_empty();
            } else {
                self.reduce();
            }
        }
        self.finish().expect("every token is shifted and every constituent closed")
    }
}

/// Top-down transition sequence of `tree`, without the implicit `TOP`.
pub fn oracle(tree: &ConTree) -> Vec<ConOp> {
    fn walk(node: &ConNode, out: &mut Vec<ConOp>) {
        for child in &node.children {
            match child {
                ConChild::Terminal(_) => out.push(ConOp::Shift),
                ConChild::Node(n) => {
                    out.push(ConOp::Node(n.label.clone()));
                    walk(n, out);
                    out.push(ConOp::Reduce);
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(&tree.root, &mut out);
    out
}

#[derive(Debug, Clone)]
pub struct ConCodec {
    dict: Arc<DescriptionDict>,
    kind: SchemaKind,
    variant: Variant,
}

impl ConCodec {
    pub fn new(dict: Arc<DescriptionDict>, kind: SchemaKind, variant: Variant) -> Self {
        ConCodec { dict, kind, variant }
    }

    pub fn kind(&self) -> SchemaKind {
        self.kind
    }

    pub fn dict(&self) -> &DescriptionDict {
        &self.dict
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    fn check_labels(&self, node: &ConNode) -> Result<(), SchemaError> {
        if !self.dict.contains(&node.label) {
            return Err(SchemaError::UnknownLabel(node.label.clone()));
        }
        for child in &node.children {
            if let ConChild::Node(n) = child {
                self.check_labels(n)?;
            }
        }
        Ok(())
    }

    pub fn linearize(&self, sent: &Sentence, tree: &ConTree) -> Result<OutputSequence, SchemaError> {
        self.check_labels(&tree.root)?;
        let body: Vec<String> = match self.kind {
            SchemaKind::Pt => con_pt::linearize(&self.dict, self.variant, tree, sent),
            kind => {
                let mut next = 0;
                oracle(tree)
                    .into_iter()
                    .map(|op| match (op, kind) {
                        (ConOp::Node(l), SchemaKind::Ls) => node_symbol(&l),
                        (ConOp::Node(l), _) => open_bracket(&l),
                        (ConOp::Shift, SchemaKind::Ls) => SHIFT.into(),
                        (ConOp::Shift, _) => {
                            next += 1;
                            sent.token(next - 1).to_string()
                        }
                        (ConOp::Reduce, SchemaKind::Ls) => REDUCE.into(),
                        (ConOp::Reduce, _) => CLOSE_BRACKET.into(),
                    })
                    .collect()
            }
        };
        Ok(OutputSequence::from_body(body).expect("body has no end symbol"))
    }

    /// Reads one LS or LT symbol. Tokens in LT are returned as shifts and
    /// checked against the buffer by the caller.
    fn read_op(&self, sym: &str) -> Option<ConOp> {
        let label = match self.kind {
            SchemaKind::Ls => {
                if sym == SHIFT {
                    return Some(ConOp::Shift);
                }
                if sym == REDUCE {
                    return Some(ConOp::Reduce);
                }
                sym.strip_prefix("N-")?
            }
            _ => {
                if sym == CLOSE_BRACKET {
                    return Some(ConOp::Reduce);
                }
                sym.strip_prefix('(')?
            }
        };
        (label != TOP && self.dict.contains(label)).then(|| ConOp::Node(label.to_string()))
    }

    pub fn delinearize(&self, sent: &Sentence, out: &OutputSequence, lenient: bool) -> Result<ConTree, SchemaError> {
        if self.kind == SchemaKind::Pt {
            return con_pt::reverse(&self.dict, self.variant, sent, out.body(), lenient);
        }
        let mut state = ConState::new(sent.len());
        for (i, sym) in out.body().iter().enumerate() {
            let op = match self.read_op(sym) {
                Some(op) => Some(op),
                None if self.kind == SchemaKind::Lt && state.can_shift() && sent.token(state.next) == sym => {
                    Some(ConOp::Shift)
                }
                None => None,
            };
            let result = match &op {
                Some(op) => state.apply(op).map_err(|r| SchemaError::malformed(i, r)),
                None => Err(SchemaError::malformed(i, format!("unexpected symbol {sym:?}"))),
            };
            if let Err(e) = result {
                if !lenient {
                    return Err(e);
                }
            }
        }
        if lenient {
            Ok(state.force_finish(self.dict.default_label()))
        } else {
            state.finish().map_err(|r| SchemaError::Incomplete(r.to_string()))
        }
    }

    pub fn vocabulary(&self, sent: &Sentence) -> Vocabulary {
        let mut v = Vocabulary::new();
        let labels = self.dict.labels().iter().filter(|l| *l != TOP);
        match self.kind {
            SchemaKind::Ls => {
                v.extend([SHIFT, REDUCE]);
                for l in labels {
                    v.add(&node_symbol(l));
                }
            }
            SchemaKind::Lt => {
                v.add(CLOSE_BRACKET);
                for l in labels {
                    v.add(&open_bracket(l));
                }
                v.extend(sent.tokens());
            }
            SchemaKind::Pt => con_pt::vocabulary(&self.dict, self.variant, sent, &mut v),
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dict::{Profile, Task};

    fn codec(kind: SchemaKind) -> ConCodec {
        ConCodec::new(Arc::new(DescriptionDict::builtin(Task::Con, Profile::Default)), kind, Variant::Default)
    }

    fn t(i: usize) -> ConChild {
        ConChild::Terminal(i)
    }

    fn n(label: &str, children: Vec<ConChild>) -> ConChild {
        ConChild::Node(ConNode::new(label, children))
    }

    fn small() -> (Sentence, ConTree) {
        let sent = Sentence::parse("My friend bought me").unwrap();
        let tree = ConTree::new(ConNode::new(
            TOP,
            vec![n("S", vec![n("NP", vec![t(0), t(1)]), n("VP", vec![t(2), n("NP", vec![t(3)])])])],
        ));
        (sent, tree)
    }

    #[test]
    fn ls_and_lt() {
        let (sent, tree) = small();
        let ls = codec(SchemaKind::Ls).linearize(&sent, &tree).unwrap();
        assert_eq!(ls.to_text(), "N-S N-NP SH SH RE N-VP SH N-NP SH RE RE RE");
        let lt = codec(SchemaKind::Lt).linearize(&sent, &tree).unwrap();
        assert_eq!(lt.to_text(), "(S (NP My friend ) (VP bought (NP me ) ) )");
        for (kind, out) in [(SchemaKind::Ls, ls), (SchemaKind::Lt, lt)] {
            assert_eq!(codec(kind).delinearize(&sent, &out, false).unwrap(), tree);
        }
    }

    #[test]
    fn strict_rejects_empty_reduce_and_top() {
        let (sent, _) = small();
        let c = codec(SchemaKind::Ls);
        for text in ["N-S RE", "N-TOP SH", "SH SH SH SH SH", "N-S SH SH SH SH"] {
            assert!(c.delinearize(&sent, &OutputSequence::parse(text).unwrap(), false).is_err(), "{text}");
        }
    }

    #[test]
    fn lenient_repairs_to_valid_tree() {
        let (sent, _) = small();
        let c = codec(SchemaKind::Ls);
        let out = OutputSequence::parse("N-S N-NP RE SH RE RE N-VP SH").unwrap();
        let tree = c.delinearize(&sent, &out, true).unwrap();
        assert!(crate::structure::validate_structure(&crate::structure::Structure::Con(tree.clone()), &sent).is_empty());
        assert_eq!(tree.to_bracketed(&sent), "(TOP (S (NP My)) (VP friend (X bought me)))");
    }

    #[test]
    fn lt_lenient_skips_hallucinated_tokens() {
        let (sent, tree) = small();
        let out = OutputSequence::parse("(S (NP My friend ) (VP bought (NP you me ) ) )").unwrap();
        let c = codec(SchemaKind::Lt);
        assert!(c.delinearize(&sent, &out, false).is_err());
        assert_eq!(c.delinearize(&sent, &out, true).unwrap(), tree);
    }
}
