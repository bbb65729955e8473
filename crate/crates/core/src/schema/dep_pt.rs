//! Dependency prompts.
//!
//! Every arc transition becomes one phrase naming its two operands:
//! `` `` dep '' is a description of `` head '' `` for a left arc and
//! `` `` head '' has a description `` dep '' `` for a right arc, with the
//! artificial root spelled `sentence`. Shifts are implicit: the automaton
//! tracks every number of shifts that could precede the next phrase and
//! resolves the phrase to the smallest one consistent with both operands.

use std::sync::Arc;

use super::dep::{ArcStandard, Dir, Transition, ROOT};
use super::{loose_phrases, quoted, Variant};
use crate::automaton::{guarded, normalize, Automaton, StepError, SymbolId, Vocabulary};
use crate::dict::DescriptionDict;
use crate::structure::{DepTree, Sentence, CLOSE_QUOTE, OPEN_QUOTE, SEP, STOP};
use crate::trie::{NodeId, Trie};

pub const IS: &str = "is";
pub const OF: &str = "of";
pub const HAS: &str = "has";
/// Surface of the artificial root node.
pub const ROOT_SURFACE: &str = "sentence";
/// Article used by the low-lexicality variant.
const PLAIN_ARTICLE: &str = "a";

/// Words between the two quoted operands of an arc phrase.
pub fn relation_words(dict: &DescriptionDict, variant: Variant, dir: Dir, rel: &str) -> Vec<String> {
    let mut w = vec![match dir {
        Dir::Left => IS.to_string(),
        Dir::Right => HAS.to_string(),
    }];
    if variant == Variant::DecLex {
        w.push(PLAIN_ARTICLE.into());
        w.push(rel.to_string());
    } else {
        let d = dict.get(rel).expect("relations are checked before linearizing");
        w.push(d.article.clone());
        w.extend(d.words.iter().cloned());
    }
    if dir == Dir::Left {
        w.push(OF.into());
    }
    w
}

pub fn relation_trie(dict: &DescriptionDict, variant: Variant) -> Trie<(Dir, String)> {
    let mut t = Trie::new();
    for rel in dict.labels() {
        if rel != ROOT {
            t.insert(&relation_words(dict, variant, Dir::Left, rel), (Dir::Left, rel.clone()))
                .expect("non-empty");
        }
        t.insert(&relation_words(dict, variant, Dir::Right, rel), (Dir::Right, rel.clone()))
            .expect("non-empty");
    }
    t
}

fn surface(sent: &Sentence, node: usize) -> &str {
    if node == 0 {
        ROOT_SURFACE
    } else {
        sent.token(node - 1)
    }
}

pub fn linearize(dict: &DescriptionDict, variant: Variant, sent: &Sentence, transitions: &[Transition]) -> Vec<String> {
    let mut state = ArcStandard::new(sent.len(), dict.root_arc());
    let mut out: Vec<String> = Vec::new();
    for t in transitions {
        if let Transition::Arc(dir, rel) = t {
            let s1 = state.s1().expect("arcs have operands");
            let s2 = state.s2().expect("arcs have operands");
            if !out.is_empty() {
                out.push(SEP.into());
            }
            out.extend([OPEN_QUOTE, surface(sent, s2), CLOSE_QUOTE].map(String::from));
            out.extend(relation_words(dict, variant, *dir, rel));
            out.extend([OPEN_QUOTE, surface(sent, s1), CLOSE_QUOTE].map(String::from));
        }
        state.apply(t).expect("oracle transitions are legal");
    }
    if !out.is_empty() {
        out.push(STOP.into());
    }
    out
}

pub fn vocabulary(dict: &DescriptionDict, variant: Variant, sent: &Sentence) -> Vocabulary {
    let mut v = Vocabulary::new();
    v.extend([SEP, STOP, OPEN_QUOTE, CLOSE_QUOTE, IS, OF, HAS, ROOT_SURFACE]);
    if variant == Variant::DecLex {
        v.add(PLAIN_ARTICLE);
        v.extend(dict.labels());
    } else {
        for (_, d) in dict.entries() {
            v.add(&d.article);
            v.extend(&d.words);
        }
    }
    v.extend(sent.tokens());
    v
}

/// Operands `(s2, s1)` the next arc would see after `m` implicit shifts.
pub fn operands_after(state: &ArcStandard, m: usize) -> Option<(usize, usize)> {
    let st = state.stack();
    let b = state.next();
    match m {
        0 => state.s2().zip(state.s1()),
        1 if b <= state.len() => Some((st[st.len() - 1], b)),
        _ if m >= 2 && b + m - 1 <= state.len() => Some((b + m - 2, b + m - 1)),
        _ => None,
    }
}

/// Whether an arc is legal after `m` implicit shifts.
pub fn arc_legal_after(state: &ArcStandard, m: usize, dir: Dir, rel: &str) -> bool {
    match operands_after(state, m) {
        None => false,
        Some((0, _)) => {
            dir == Dir::Right
                && rel == ROOT
                && state.root_arc()
                && m == state.remaining()
                && state.stack().len() + m == 2
        }
        Some(_) => rel != ROOT,
    }
}

/// Applies `m` shifts followed by the arc.
pub fn apply_after(state: &mut ArcStandard, m: usize, dir: Dir, rel: &str) {
    for _ in 0..m {
        state.apply(&Transition::Shift).expect("shift count is feasible");
    }
    state
        .apply(&Transition::Arc(dir, rel.to_string()))
        .expect("arc is legal after the shifts");
}

/// Smallest shift count under which the phrase `t1 rel t2` is a legal arc.
pub fn resolve(
    state: &ArcStandard,
    is_t1: impl Fn(usize) -> bool,
    dir: Dir,
    rel: &str,
    is_t2: impl Fn(usize) -> bool,
) -> Option<usize> {
    (0..=state.remaining()).find(|&m| {
        operands_after(state, m).is_some_and(|(s2, s1)| is_t1(s2) && is_t2(s1)) && arc_legal_after(state, m, dir, rel)
    })
}

/// Reads whatever phrases can be resolved and completes the tree with the
/// default relation.
pub fn repair(dict: &DescriptionDict, variant: Variant, sent: &Sentence, body: &[String]) -> DepTree {
    let trie = relation_trie(dict, variant);
    let mut state = ArcStandard::new(sent.len(), dict.root_arc());
    for (_, phrase) in loose_phrases(body) {
        let Some((t1, after)) = quoted(phrase) else { continue };
        let rest = &phrase[after..];
        let Some(open) = rest.iter().position(|s| s == OPEN_QUOTE) else { continue };
        let Some((dir, rel)) = trie.get(&rest[..open]) else { continue };
        let Some((t2, _)) = quoted(&rest[open..]) else { continue };
        let ([t1], [t2]) = (t1, t2) else { continue };
        if let Some(m) = resolve(&state, |x| surface(sent, x) == t1, *dir, rel, |x| surface(sent, x) == t2) {
            apply_after(&mut state, m, *dir, rel);
        }
    }
    state.force_finish(dict.default_label())
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Phase {
    Open1,
    T1,
    Close1 { t1: SymbolId },
    Rel { t1: SymbolId, node: NodeId },
    T2 { t1: SymbolId, dir: Dir, rel: String },
    Close2 { t1: SymbolId, dir: Dir, rel: String, t2: SymbolId },
    Sep,
    End,
}

/// Candidate-set automaton for dependency prompts.
#[derive(Debug, Clone)]
pub struct DepPtAutomaton {
    vocab: Arc<Vocabulary>,
    trie: Arc<Trie<(Dir, String)>>,
    /// Symbol id of each node's surface; index 0 is the root.
    surfaces: Vec<SymbolId>,
    open: SymbolId,
    close: SymbolId,
    sep: SymbolId,
    stop: SymbolId,
    state: ArcStandard,
    phase: Phase,
    i: usize,
    done: bool,
}

impl DepPtAutomaton {
    pub fn new(dict: &DescriptionDict, variant: Variant, sent: &Sentence, vocab: Arc<Vocabulary>) -> Self {
        let mut surfaces = vec![vocab.known(ROOT_SURFACE)];
        surfaces.extend(sent.tokens().iter().map(|t| vocab.known(t)));
        let state = ArcStandard::new(sent.len(), dict.root_arc());
        let mut a = DepPtAutomaton {
            trie: Arc::new(relation_trie(dict, variant)),
            surfaces,
            open: vocab.known(OPEN_QUOTE),
            close: vocab.known(CLOSE_QUOTE),
            sep: vocab.known(SEP),
            stop: vocab.known(STOP),
            vocab,
            state,
            phase: Phase::Open1,
            i: 0,
            done: false,
        };
        if a.shifted().is_terminal() {
            a.phase = Phase::End;
        }
        a
    }

    /// The configuration after the last completed phrase.
    pub fn state(&self) -> &ArcStandard {
        &self.state
    }

    fn shifted(&self) -> ArcStandard {
        let mut s = self.state.clone();
        while s.apply(&Transition::Shift).is_ok() {}
        s
    }

    /// The parsed tree once the prompt is complete.
    pub fn tree(&self) -> Option<DepTree> {
        if !self.done {
            return None;
        }
        self.shifted().tree()
    }

    fn shift_counts(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..=self.state.remaining()).filter_map(|m| operands_after(&self.state, m).map(|(s2, s1)| (m, s2, s1)))
    }

    fn any_arc_after(&self, m: usize, s2: usize) -> bool {
        s2 != 0 || arc_legal_after(&self.state, m, Dir::Right, ROOT)
    }

    /// Which kinds of arc can follow the first operand `t1`: left arcs,
    /// right arcs between tokens, and the root arc.
    fn arc_kinds(&self, t1: SymbolId) -> (bool, bool, bool) {
        let mut tokens = false;
        let mut root = false;
        for (m, s2, _) in self.shift_counts() {
            if self.surfaces[s2] != t1 {
                continue;
            }
            if s2 != 0 {
                tokens = true;
            } else if arc_legal_after(&self.state, m, Dir::Right, ROOT) {
                root = true;
            }
        }
        (tokens, tokens, root)
    }

    fn allowed(&self, kinds: (bool, bool, bool), dir: Dir, rel: &str) -> bool {
        match (dir, rel == ROOT) {
            (Dir::Left, false) => kinds.0,
            (Dir::Right, false) => kinds.1,
            (Dir::Right, true) => kinds.2,
            (Dir::Left, true) => false,
        }
    }

    fn subtree_allowed(&self, node: NodeId, kinds: (bool, bool, bool)) -> bool {
        if let Some((dir, rel)) = self.trie.value(node) {
            if self.allowed(kinds, *dir, rel) {
                return true;
            }
        }
        self.trie
            .children(node)
            .any(|w| self.subtree_allowed(self.trie.child(node, w).expect("listed child"), kinds))
    }
}

impl Automaton for DepPtAutomaton {
    fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    fn candidates(&self) -> Vec<SymbolId> {
        if self.done {
            return Vec::new();
        }
        match &self.phase {
            Phase::Open1 => vec![self.open],
            Phase::T1 => normalize(
                self.shift_counts()
                    .filter(|&(m, s2, _)| self.any_arc_after(m, s2))
                    .map(|(_, s2, _)| self.surfaces[s2])
                    .collect(),
            ),
            Phase::Close1 { .. } | Phase::Close2 { .. } => vec![self.close],
            Phase::Rel { t1, node } => {
                let kinds = self.arc_kinds(*t1);
                let mut c: Vec<SymbolId> = self
                    .trie
                    .children(*node)
                    .filter(|w| self.subtree_allowed(self.trie.child(*node, w).expect("listed child"), kinds))
                    .map(|w| self.vocab.known(w))
                    .collect();
                if let Some((dir, rel)) = self.trie.value(*node) {
                    if self.allowed(kinds, *dir, rel) {
                        c.push(self.open);
                    }
                }
                normalize(c)
            }
            Phase::T2 { t1, dir, rel } => normalize(
                self.shift_counts()
                    .filter(|&(m, s2, _)| self.surfaces[s2] == *t1 && arc_legal_after(&self.state, m, *dir, rel))
                    .map(|(_, _, s1)| self.surfaces[s1])
                    .collect(),
            ),
            Phase::Sep => vec![if self.state.is_terminal() { self.stop } else { self.sep }],
            Phase::End => vec![self.vocab.eos()],
        }
    }

    fn advance(&mut self, symbol: SymbolId) -> Result<(), StepError> {
        guarded(self, symbol, |a| {
            a.i += 1;
            let phase = std::mem::replace(&mut a.phase, Phase::End);
            a.phase = match phase {
                Phase::Open1 => Phase::T1,
                Phase::T1 => Phase::Close1 { t1: symbol },
                Phase::Close1 { t1 } => Phase::Rel {
                    t1,
                    node: a.trie.root(),
                },
                Phase::Rel { t1, node } if symbol == a.open => {
                    let (dir, rel) = a.trie.value(node).cloned().expect("operand quote follows a complete relation");
                    Phase::T2 { t1, dir, rel }
                }
                Phase::Rel { t1, node } => Phase::Rel {
                    t1,
                    node: a.trie.child(node, a.vocab.symbol(symbol)).expect("candidate is a child"),
                },
                Phase::T2 { t1, dir, rel } => Phase::Close2 { t1, dir, rel, t2: symbol },
                Phase::Close2 { t1, dir, rel, t2 } => {
                    let surfaces = &a.surfaces;
                    let m = resolve(&a.state, |x| surfaces[x] == t1, dir, &rel, |x| surfaces[x] == t2)
                        .expect("candidates guarantee a consistent shift count");
                    apply_after(&mut a.state, m, dir, &rel);
                    Phase::Sep
                }
                Phase::Sep if symbol == a.sep => Phase::Open1,
                Phase::Sep => Phase::End,
                Phase::End => {
                    a.done = true;
                    Phase::End
                }
            };
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
    use crate::schema::dep::DepCodec;
    use crate::schema::{Notation, SchemaKind};
    use crate::structure::OutputSequence;

    fn codec(profile: Profile, variant: Variant) -> DepCodec {
        DepCodec::new(
            Arc::new(DescriptionDict::builtin(Task::Dep, profile)),
            SchemaKind::Pt,
            variant,
            Notation::Arrows,
        )
    }

    fn looks() -> (Sentence, DepTree) {
        let sent = Sentence::parse("It looks so out of place .").unwrap();
        let tree = DepTree::new(
            vec![2, 0, 4, 2, 4, 5, 2],
            ["nsubj", "root", "advmod", "advmod", "prep", "pobj", "punct"],
        );
        (sent, tree)
    }

    fn words(a: &DepPtAutomaton) -> Vec<String> {
        a.candidates().iter().map(|&i| a.vocabulary().symbol(i).to_string()).collect()
    }

    fn feed(a: &mut DepPtAutomaton, text: &str) {
        for s in text.split_whitespace() {
            let id = a.vocabulary().id(s).unwrap();
            a.advance(id).unwrap();
        }
    }

    #[test]
    fn case_study_prompt() {
        let (sent, tree) = looks();
        let c = codec(Profile::Default, Variant::Default);
        let out = c.linearize(&sent, &tree).unwrap();
        assert!(out.to_text().starts_with("`` It '' is a nominal subject of `` looks '' ;"));
        assert!(out.to_text().ends_with("`` sentence '' has a root `` looks '' ."));
        assert_eq!(c.delinearize(&sent, &out, false).unwrap(), tree);
    }

    #[test]
    fn first_operand_candidates() {
        let (sent, _) = looks();
        let c = codec(Profile::Default, Variant::Default);
        let mut a = c.pt_automaton(&sent);
        feed(&mut a, "``");
        let mut got = words(&a);
        got.sort();
        let mut expected: Vec<String> = ["It", "looks", "so", "out", "of", "place"].map(String::from).to_vec();
        expected.sort();
        assert_eq!(got, expected);
    }

    #[test]
    fn phrase_applies_arc_and_removes_dependent() {
        let (sent, _) = looks();
        let c = codec(Profile::Default, Variant::Default);
        let mut a = c.pt_automaton(&sent);
        feed(&mut a, "`` It '' is a nominal subject of `` looks '' ;");
        assert_eq!(a.state().stack(), [0, 2]);
        assert_eq!(a.state().head_of(1), Some((2, "nsubj")));
        feed(&mut a, "``");
        assert!(!words(&a).contains(&"It".to_string()));
    }

    #[test]
    fn relation_choices_follow_legality() {
        let (sent, _) = looks();
        let c = codec(Profile::Default, Variant::Default);
        let mut a = c.pt_automaton(&sent);
        feed(&mut a, "`` It ''");
        assert_eq!(words(&a), ["is", "has"]);
        feed(&mut a, "has a");
        assert!(!words(&a).contains(&"root".to_string()));
    }

    #[test]
    fn recall_shift_places_operands() {
        let (sent, _) = looks();
        let mut s = ArcStandard::new(sent.len(), true);
        assert!(s.recall_shift(1, |x| x > 0 && sent.token(x - 1) == "looks"));
        assert!(s.recall_shift(2, |x| x > 0 && sent.token(x - 1) == "It"));
        assert_eq!((s.s2(), s.s1()), (Some(1), Some(2)));
    }

    #[test]
    fn single_token_without_root_arc_is_empty() {
        let c = codec(Profile::PaperTable1, Variant::Default);
        let sent = Sentence::parse("Hi").unwrap();
        let tree = DepTree::new(vec![0], ["root"]);
        let out = c.linearize(&sent, &tree).unwrap();
        assert_eq!(out.to_text(), "");
        let a = c.pt_automaton(&sent);
        assert_eq!(words(&a), ["</s>"]);
        assert_eq!(c.delinearize(&sent, &out, false).unwrap(), tree);
    }

    #[test]
    fn dec_lex_round_trip() {
        let (sent, tree) = looks();
        let c = codec(Profile::Default, Variant::DecLex);
        let out = c.linearize(&sent, &tree).unwrap();
        assert!(out.to_text().starts_with("`` It '' is a nsubj of `` looks ''"));
        assert_eq!(c.delinearize(&sent, &out, false).unwrap(), tree);
    }

    #[test]
    fn repeated_tokens_resolve_to_nearest() {
        let sent = Sentence::parse("the cat saw the dog").unwrap();
        let tree = DepTree::new(vec![2, 3, 0, 5, 3], ["det", "nsubj", "root", "det", "dobj"]);
        let c = codec(Profile::Default, Variant::Default);
        let out = c.linearize(&sent, &tree).unwrap();
        assert_eq!(c.delinearize(&sent, &out, false).unwrap(), tree);
    }

    #[test]
    fn lenient_skips_unresolvable_phrases() {
        let (sent, _) = looks();
        let c = codec(Profile::Default, Variant::Default);
        let out = OutputSequence::parse("`` It '' is a nominal subject of `` looks '' ; `` zebra '' has a root `` It '' .").unwrap();
        assert!(c.delinearize(&sent, &out, false).is_err());
        let tree = c.delinearize(&sent, &out, true).unwrap();
        assert_eq!(tree.heads[0], 2);
        assert_eq!(tree.relations[0], "nsubj");
    }
}
