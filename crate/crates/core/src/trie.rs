//! Token-level prefix tree.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrieError {
    #[error("cannot insert an empty phrase")]
    EmptyPhrase,
}

/// Handle to a node inside a [`Trie`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node<V> {
    children: BTreeMap<String, usize>,
    value: Option<V>,
    terminal: bool,
}

impl<V> Node<V> {
    fn new() -> Self {
        Node {
            children: BTreeMap::new(),
            value: None,
            terminal: false,
        }
    }
}

/// A labelled span produced by [`Trie::split`]: `start..end` over the input,
/// with the payload of the matched phrase or `None` for unmatched gaps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span<'a, V> {
    pub start: usize,
    pub end: usize,
    pub value: Option<&'a V>,
}

/// Prefix tree over token sequences. Nodes live in an arena and are
/// addressed by [`NodeId`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trie<V> {
    nodes: Vec<Node<V>>,
}

impl<V> Default for Trie<V> {
    fn default() -> Self {
        Trie::new()
    }
}

impl<V> Trie<V> {
    pub fn new() -> Self {
        Trie { nodes: vec![Node::new()] }
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    /// Adds `phrase`, storing `value` at its last node. Re-inserting a phrase
    /// overwrites the value and leaves the structure unchanged.
    pub fn insert<S: AsRef<str>>(&mut self, phrase: &[S], value: V) -> Result<NodeId, TrieError> {
        if phrase.is_empty() {
            return Err(TrieError::EmptyPhrase);
        }
        let mut cur = 0;
        for token in phrase {
            let token = token.as_ref();
            cur = match self.nodes[cur].children.get(token) {
                Some(&next) => next,
                None => {
                    let next = self.nodes.len();
                    self.nodes.push(Node::new());
                    self.nodes[cur].children.insert(token.to_string(), next);
                    next
                }
            };
        }
        self.nodes[cur].terminal = true;
        self.nodes[cur].value = Some(value);
        Ok(NodeId(cur))
    }

    pub fn child(&self, node: NodeId, token: &str) -> Option<NodeId> {
        self.nodes[node.0].children.get(token).map(|&i| NodeId(i))
    }

    /// Tokens that extend the path ending at `node`, in sorted order.
    pub fn children(&self, node: NodeId) -> impl Iterator<Item = &str> {
        self.nodes[node.0].children.keys().map(String::as_str)
    }

    pub fn has_children(&self, node: NodeId) -> bool {
        !self.nodes[node.0].children.is_empty()
    }

    pub fn is_terminal(&self, node: NodeId) -> bool {
        self.nodes[node.0].terminal
    }

    pub fn value(&self, node: NodeId) -> Option<&V> {
        self.nodes[node.0].value.as_ref()
    }

    /// Walks `prefix` from the root one token at a time, returning `None` as
    /// soon as a token has no child.
    pub fn prefix_match<S: AsRef<str>>(&self, prefix: &[S]) -> Option<NodeId> {
        self.walk_from(self.root(), prefix)
    }

    pub fn walk_from<S: AsRef<str>>(&self, start: NodeId, path: &[S]) -> Option<NodeId> {
        let mut node = start;
        for token in path {
            node = self.child(node, token.as_ref())?;
        }
        Some(node)
    }

    /// Exact lookup of a whole phrase.
    pub fn get<S: AsRef<str>>(&self, phrase: &[S]) -> Option<&V> {
        self.prefix_match(phrase).and_then(|n| self.value(n))
    }

    /// For every start position where some phrase with a value begins,
    /// the longest such phrase as `(start, end, value)` with `end`
    /// exclusive. Matches are reported left to right and may overlap.
    pub fn longest_prefix_match<S: AsRef<str>>(&self, x: &[S]) -> Vec<(usize, usize, &V)> {
        let mut matches = Vec::new();
        for i in 0..x.len() {
            let mut node = self.root();
            let mut best = None;
            for (k, token) in x.iter().enumerate().skip(i) {
                match self.child(node, token.as_ref()) {
                    Some(next) => node = next,
                    None => break,
                }
                if let Some(v) = self.value(node) {
                    best = Some((k + 1, v));
                }
            }
            if let Some((j, v)) = best {
                matches.push((i, j, v));
            }
        }
        matches
    }

    /// Partitions `x` into matched spans and unmatched gaps. A match is kept
    /// only if it starts at or after the end of the previously kept one.
    pub fn split<S: AsRef<str>>(&self, x: &[S]) -> Vec<Span<'_, V>> {
        let mut spans = Vec::new();
        let mut offset = 0;
        for (i, j, v) in self.longest_prefix_match(x) {
            if i < offset {
                continue;
            }
            if i > offset {
                spans.push(Span {
                    start: offset,
                    end: i,
                    value: None,
                });
            }
            spans.push(Span {
                start: i,
                end: j,
                value: Some(v),
            });
            offset = j;
        }
        if offset < x.len() {
            spans.push(Span {
                start: offset,
                end: x.len(),
                value: None,
            });
        }
        spans
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().filter(|n| n.terminal).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    fn label_trie() -> Trie<&'static str> {
        let mut t = Trie::new();
        for (phrase, v) in [
            ("the noun phrase", "NP"),
            ("a noun phrase", "NP"),
            ("the verb phrase", "VP"),
            ("a verb phrase", "VP"),
        ] {
            t.insert(&words(phrase), v).unwrap();
        }
        t
    }

    #[test]
    fn insert_and_lookup() {
        let mut t = Trie::new();
        t.insert(&["is", "a", "noun", ";"], "NN").unwrap();
        assert_eq!(t.get(&["is", "a", "noun", ";"]), Some(&"NN"));
        assert!(t.insert::<&str>(&[], "x").is_err());
    }

    #[test]
    fn articles_share_value() {
        let t = label_trie();
        assert_eq!(t.get(&words("the noun phrase")), Some(&"NP"));
        assert_eq!(t.get(&words("a noun phrase")), Some(&"NP"));
        assert_eq!(t.len(), 4);
    }

    #[test]
    fn double_insert_is_idempotent() {
        let mut a = label_trie();
        let b = label_trie();
        a.insert(&words("a noun phrase"), "NP").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn prefix_match_walks() {
        let mut t = Trie::new();
        t.insert(&["is", "a", "noun", ";"], 1).unwrap();
        t.insert(&["is", "a", "determiner", ";"], 2).unwrap();
        let node = t.prefix_match(&["is", "a"]).unwrap();
        assert_eq!(t.children(node).collect::<Vec<_>>(), ["determiner", "noun"]);
        assert!(t.prefix_match(&["World"]).is_none());
        assert_eq!(t.prefix_match::<&str>(&[]), Some(t.root()));
    }

    #[test]
    fn longest_match_on_prompt() {
        let t = label_trie();
        let x = words("the noun phrase has a noun phrase `` My friend ''");
        let m = t.longest_prefix_match(&x);
        assert_eq!(m, vec![(0, 3, &"NP"), (4, 7, &"NP")]);
        assert!(t.longest_prefix_match(&words("has `` My friend ''")).is_empty());
    }

    #[test]
    fn longer_phrase_wins() {
        let mut t = Trie::new();
        t.insert(&["a", "b"], "AB").unwrap();
        t.insert(&["a", "b", "c"], "ABC").unwrap();
        assert_eq!(t.longest_prefix_match(&["a", "b", "c", "d"]), vec![(0, 3, &"ABC")]);
    }

    #[test]
    fn split_gap_offsets() {
        let mut t = Trie::new();
        t.insert(&["a", "b"], "AB").unwrap();
        let spans = t.split(&["x", "a", "b", "y"]);
        let flat: Vec<_> = spans.iter().map(|s| (s.start, s.end, s.value.copied())).collect();
        assert_eq!(flat, vec![(0, 1, None), (1, 3, Some("AB")), (3, 4, None)]);
        let all = t.split(&["x", "y"]);
        assert_eq!(all.len(), 1);
        assert_eq!((all[0].start, all[0].end, all[0].value), (0, 2, None));
    }

    #[test]
    fn split_suppresses_overlaps() {
        let mut t = Trie::new();
        t.insert(&["a", "b"], "AB").unwrap();
        t.insert(&["b", "c"], "BC").unwrap();
        let flat: Vec<_> = t
            .split(&["a", "b", "c"])
            .iter()
            .map(|s| (s.start, s.end, s.value.copied()))
            .collect();
        assert_eq!(flat, vec![(0, 2, Some("AB")), (2, 3, None)]);
    }

    fn brute_longest(phrases: &[Vec<String>], x: &[String]) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for i in 0..x.len() {
            let mut best: Option<(usize, usize)> = None;
            for (id, p) in phrases.iter().enumerate() {
                if x[i..].starts_with(p) {
                    let end = i + p.len();
                    if best.map_or(true, |(e, _)| end > e) {
                        best = Some((end, id));
                    }
                }
            }
            if let Some((end, _)) = best {
                let id = phrases.iter().rposition(|p| x[i..].starts_with(p) && i + p.len() == end).unwrap();
                out.push((i, end, id));
            }
        }
        out
    }

    fn phrase_strategy() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 1..4)
            .prop_map(|v| v.into_iter().map(str::to_string).collect())
    }

    proptest! {
        #[test]
        fn longest_match_equals_brute_force(
            phrases in prop::collection::vec(phrase_strategy(), 1..50),
            x in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]), 0..20),
        ) {
            let x: Vec<String> = x.into_iter().map(str::to_string).collect();
            let mut t = Trie::new();
            for (id, p) in phrases.iter().enumerate() {
                t.insert(p, id).unwrap();
            }
            let got: Vec<_> = t.longest_prefix_match(&x).into_iter().map(|(i, j, &v)| (i, j, v)).collect();
            prop_assert_eq!(got, brute_longest(&phrases, &x));
        }

        #[test]
        fn prefix_match_iff_prefix_of_some_phrase(
            phrases in prop::collection::vec(phrase_strategy(), 1..20),
            p in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..5),
        ) {
            let p: Vec<String> = p.into_iter().map(str::to_string).collect();
            let mut t = Trie::new();
            for ph in &phrases {
                t.insert(ph, ()).unwrap();
            }
            let expected = phrases.iter().any(|ph| ph.starts_with(&p));
            prop_assert_eq!(t.prefix_match(&p).is_some(), expected);
        }

        #[test]
        fn split_is_a_partition(
            phrases in prop::collection::vec(phrase_strategy(), 1..20),
            x in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]), 0..20),
        ) {
            let mut t = Trie::new();
            for ph in &phrases {
                t.insert(ph, ()).unwrap();
            }
            let spans = t.split(&x);
            let mut pos = 0;
            for s in &spans {
                prop_assert_eq!(s.start, pos);
                prop_assert!(s.end > s.start);
                pos = s.end;
            }
            prop_assert_eq!(pos, x.len());
        }
    }
}
