//! Synthetic data: uniformly random structures for property tests, and a
//! small grammar that produces English sentences annotated for all four
//! tasks at once.
//!
//! Both generators keep the tokens of a sentence distinct. Prompt outputs
//! refer to tokens by their surface, so a repeated token makes some
//! structures indistinguishable.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dict::{DescriptionDict, Task};
use crate::io::CorpusRecord;
use crate::schema::dep::ROOT;
use crate::structure::{ConChild, ConNode, ConTree, DepTree, Entity, EntitySet, PosSequence, Sentence, Structure, TOP};

const WORDS: &[&str] = &[
    "apple", "river", "stone", "quick", "blue", "walks", "sings", "under", "over", "green", "table", "window",
    "paper", "light", "dark", "runs", "jumps", "slowly", "happy", "cold", "warm", "bread", "water", "music",
    "garden", "city", "road", "tree", "bird", "fish", "cloud", "rain", "snow", "fire", "wind", "moon", "sun",
    "star", "door", "wall", "floor", "chair", "cup", "plate", "knife", "fork", "spoon", "glass", "bottle",
    "box", "bag", "coat", "hat", "shoe", "shirt", "ring", "bell", "clock", "lamp", "key", "lock", "map",
    "Anna", "Boris", "Clara", "Paris", "Tokyo", "Lima", "Acme", "Orbit", ",", "!", "?", "-", "'s", "(", "<",
];

/// `n` distinct tokens.
pub fn random_sentence<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Sentence {
    let mut tokens: Vec<String> = WORDS.choose_multiple(rng, n.min(WORDS.len())).map(|w| w.to_string()).collect();
    for i in tokens.len()..n {
        tokens.push(format!("w{i}"));
    }
    tokens.shuffle(rng);
    Sentence::new(tokens).expect("word list holds valid tokens")
}

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, labels: &'a [String]) -> &'a str {
    labels.choose(rng).expect("label inventories are not empty")
}

pub fn random_pos<R: Rng + ?Sized>(rng: &mut R, labels: &[String], n: usize) -> PosSequence {
    PosSequence::new((0..n).map(|_| pick(rng, labels).to_string()))
}

/// Non-overlapping entities of up to three tokens.
pub fn random_entities<R: Rng + ?Sized>(rng: &mut R, labels: &[String], n: usize) -> EntitySet {
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if rng.gen_bool(0.3) {
            let len = rng.gen_range(1..=3.min(n - i));
            out.push(Entity::new(i, i + len, pick(rng, labels)));
            i += len;
        } else {
            i += 1;
        }
    }
    EntitySet::new(out)
}

/// Random cut of `lo..hi` into `parts` non-empty consecutive blocks.
fn cut<R: Rng + ?Sized>(rng: &mut R, lo: usize, hi: usize, parts: usize) -> Vec<(usize, usize)> {
    let mut points: Vec<usize> = rand::seq::index::sample(rng, hi - lo - 1, parts - 1)
        .into_iter()
        .map(|p| lo + p + 1)
        .collect();
    points.sort_unstable();
    let mut out = Vec::new();
    let mut start = lo;
    for p in points {
        out.push((start, p));
        start = p;
    }
    out.push((start, hi));
    out
}

/// A random tree over `n` terminals with labels from `labels` (which must
/// not include `TOP`). Every constituent has at least two children or only
/// terminal children.
pub fn random_con_tree<R: Rng + ?Sized>(rng: &mut R, labels: &[String], n: usize) -> ConTree {
    fn node<R: Rng + ?Sized>(rng: &mut R, labels: &[String], label: String, lo: usize, hi: usize) -> ConNode {
        let len = hi - lo;
        if len == 1 || rng.gen_bool(0.25) {
            return ConNode::new(label, (lo..hi).map(ConChild::Terminal).collect());
        }
        let parts = rng.gen_range(2..=len.min(4));
        let mut children = Vec::new();
        for (a, b) in cut(rng, lo, hi, parts) {
            if b - a == 1 && rng.gen_bool(0.5) {
                children.push(ConChild::Terminal(a));
            } else {
                let l = pick(rng, labels).to_string();
                children.push(ConChild::Node(node(rng, labels, l, a, b)));
            }
        }
        ConNode::new(label, children)
    }
    let root = if rng.gen_bool(0.5) {
        let l = pick(rng, labels).to_string();
        ConNode::new(TOP, vec![ConChild::Node(node(rng, labels, l, 0, n))])
    } else {
        node(rng, labels, TOP.to_string(), 0, n)
    };
    ConTree::new(root)
}

/// A random projective tree. `relations` must not include the root
/// relation, which goes to the single root token.
pub fn random_dep_tree<R: Rng + ?Sized>(rng: &mut R, relations: &[String], n: usize) -> DepTree {
    fn span<R: Rng + ?Sized>(rng: &mut R, lo: usize, hi: usize, heads: &mut [usize]) -> usize {
        let h = rng.gen_range(lo..hi);
        for (a, b) in [(lo, h), (h + 1, hi)] {
            if a == b {
                continue;
            }
            let parts = rng.gen_range(1..=(b - a).min(3));
            for (x, y) in cut(rng, a, b, parts) {
                let c = span(rng, x, y, heads);
                heads[c] = h + 1;
            }
        }
        h
    }
    let mut heads = vec![0; n];
    let root = span(rng, 0, n, &mut heads);
    let relations = (0..n)
        .map(|i| if i == root { ROOT.to_string() } else { pick(rng, relations).to_string() })
        .collect::<Vec<_>>();
    DepTree::new(heads, relations)
}

/// Labels a random structure for `task` may use under `dict`.
pub fn structure_labels(dict: &DescriptionDict) -> Vec<String> {
    dict.labels()
        .iter()
        .filter(|l| match dict.task() {
            Task::Con => l.as_str() != TOP,
            Task::Dep => l.as_str() != ROOT,
            _ => true,
        })
        .cloned()
        .collect()
}

/// A random sentence of `1..=max_len` tokens with a random structure for
/// `dict`'s task.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, dict: &DescriptionDict, max_len: usize) -> (Sentence, Structure) {
    let n = rng.gen_range(1..=max_len);
    let sent = random_sentence(rng, n);
    let labels = structure_labels(dict);
    let s = match dict.task() {
        Task::Pos => Structure::Pos(random_pos(rng, &labels, n)),
        Task::Ner => Structure::Ner(random_entities(rng, &labels, n)),
        Task::Con => Structure::Con(random_con_tree(rng, &labels, n)),
        Task::Dep => Structure::Dep(random_dep_tree(rng, &labels, n)),
    };
    (sent, s)
}

// ---------------------------------------------------------------------------
// Grammar corpus

/// Default size of [`sample_corpus`].
pub const SAMPLE_SIZE: usize = 240;

/// Seed of the bundled sample corpus.
pub const SAMPLE_SEED: u64 = 2022;

struct Lex {
    word: &'static str,
    tag: &'static str,
}

const fn lx(word: &'static str, tag: &'static str) -> Lex {
    Lex { word, tag }
}

const DETS: &[&str] = &["the", "a", "this", "every", "one"];
const ADJS: &[&str] = &["old", "young", "small", "famous", "quiet", "clever", "busy", "tired"];
const NORP_ADJS: &[&str] = &["French", "Brazilian", "Catholic", "Japanese"];
const NOUNS: &[&str] = &[
    "farmer", "teacher", "doctor", "painter", "student", "pilot", "baker", "singer", "lawyer", "nurse",
];
const THINGS: &[&str] = &["car", "book", "letter", "painting", "house", "ticket", "computer", "boat", "gift", "song"];
const FIRST: &[&str] = &["Maria", "John", "Aiko", "Pedro", "Fatima", "Lars", "Grace", "Omar"];
const LAST: &[&str] = &["Lopez", "Smith", "Tanaka", "Silva", "Haddad", "Berg"];
const PLACES: &[&[&str]] = &[
    &["Paris"],
    &["Berlin"],
    &["Lagos"],
    &["Kyoto"],
    &["Denver"],
    &["New", "York"],
    &["Buenos", "Aires"],
    &["Cape", "Town"],
];
const ORGS: &[&[&str]] = &[&["Google"], &["Acme", "Corp"], &["UNICEF"], &["Boeing"], &["Red", "Cross"]];
const DAYS: &[&str] = &["Monday", "Friday", "Sunday", "yesterday"];
const PREPS: &[&str] = &["from", "in", "near", "with"];
const SUBJ_PRON: &[&str] = &["She", "He", "They", "We"];
const OBJ_PRON: &[&str] = &["her", "him", "them", "us"];
const TRANSITIVE: &[&str] = &["bought", "saw", "visited", "painted", "found", "sold", "called", "hired", "met"];
const INTRANSITIVE: &[&str] = &["slept", "laughed", "waited", "arrived", "smiled", "left"];
const ADVERBS: &[&str] = &["quietly", "early", "outside", "again", "late"];
const MODALS: &[&str] = &["will", "could", "might", "should"];
const BASE: &[&str] = &["visit", "call", "hire", "meet", "help", "paint"];

/// Incrementally built annotated sentence. Heads are 0-based here, with
/// `usize::MAX` for the root.
#[derive(Default)]
struct Build {
    tokens: Vec<String>,
    tags: Vec<String>,
    heads: Vec<usize>,
    rels: Vec<String>,
    entities: Vec<Entity>,
}

type Np = (ConNode, usize);

impl Build {
    fn word(&mut self, l: Lex) -> usize {
        self.tokens.push(l.word.to_string());
        self.tags.push(l.tag.to_string());
        self.heads.push(usize::MAX);
        self.rels.push(String::new());
        self.tokens.len() - 1
    }

    fn attach(&mut self, dep: usize, head: usize, rel: &str) {
        self.heads[dep] = head;
        self.rels[dep] = rel.to_string();
    }

    fn flat(&self, label: &str, ids: &[usize]) -> ConNode {
        ConNode::new(label, ids.iter().map(|&i| ConChild::Terminal(i)).collect())
    }

    /// A multi-word proper name: every word modifies the last one.
    fn name(&mut self, words: &[&'static str], label: &str) -> Np {
        let ids: Vec<usize> = words.iter().map(|w| self.word(lx(w, "NNP"))).collect();
        let head = *ids.last().expect("names have words");
        for &i in &ids[..ids.len() - 1] {
            self.attach(i, head, "nn");
        }
        self.entities.push(Entity::new(ids[0], head + 1, label));
        (self.flat("NP", &ids), head)
    }

    fn common<R: Rng>(&mut self, rng: &mut R, nouns: &[&'static str]) -> Np {
        let det = self.word(lx(DETS.choose(rng).unwrap(), "DT"));
        let mut ids = vec![det];
        if rng.gen_bool(0.4) {
            let norp = rng.gen_bool(0.3);
            let adj = if norp { NORP_ADJS } else { ADJS }.choose(rng).unwrap();
            let a = self.word(lx(adj, "JJ"));
            if norp {
                self.entities.push(Entity::new(a, a + 1, "NORP"));
            }
            ids.push(a);
        }
        let noun = self.word(lx(nouns.choose(rng).unwrap(), "NN"));
        ids.push(noun);
        for &i in &ids[..ids.len() - 1] {
            let rel = if i == det { "det" } else { "amod" };
            self.attach(i, noun, rel);
        }
        (self.flat("NP", &ids), noun)
    }

    fn person<R: Rng>(&mut self, rng: &mut R) -> Np {
        let first = *FIRST.choose(rng).unwrap();
        if rng.gen_bool(0.5) {
            self.name(&[first, LAST.choose(rng).unwrap()], "PERSON")
        } else {
            self.name(&[first], "PERSON")
        }
    }

    fn pronoun(&mut self, word: &'static str) -> Np {
        let i = self.word(lx(word, "PRP"));
        (self.flat("NP", &[i]), i)
    }

    /// `(PP prep NP)` attached to `head`.
    fn pp<R: Rng>(&mut self, rng: &mut R, head: usize, prep: &'static str, object: Option<&[&'static str]>) -> ConNode {
        let p = self.word(lx(prep, "IN"));
        self.attach(p, head, "prep");
        let (np, h) = match object {
            Some(place) => self.name(place, "GPE"),
            None => self.common(rng, THINGS),
        };
        self.attach(h, p, "pobj");
        ConNode::new("PP", vec![ConChild::Terminal(p), ConChild::Node(np)])
    }

    fn subject<R: Rng>(&mut self, rng: &mut R) -> Np {
        match rng.gen_range(0..4) {
            0 => self.pronoun(SUBJ_PRON.choose(rng).unwrap()),
            1 => self.person(rng),
            2 => {
                let org = ORGS.choose(rng).unwrap();
                self.name(org, "ORG")
            }
            _ => {
                let (np, head) = self.common(rng, NOUNS);
                if rng.gen_bool(0.4) {
                    let place = PLACES.choose(rng).unwrap();
                    let prep = *["from", "in"].choose(rng).unwrap();
                    let pp = self.pp(rng, head, prep, Some(place));
                    (ConNode::new("NP", vec![ConChild::Node(np), ConChild::Node(pp)]), head)
                } else {
                    (np, head)
                }
            }
        }
    }

    fn object<R: Rng>(&mut self, rng: &mut R) -> Np {
        match rng.gen_range(0..5) {
            0 => self.pronoun(OBJ_PRON.choose(rng).unwrap()),
            1 => self.person(rng),
            2 => {
                let org = ORGS.choose(rng).unwrap();
                self.name(org, "ORG")
            }
            _ => self.common(rng, THINGS),
        }
    }

    /// Verb phrase children after the verb: object, then an optional place
    /// or date modifier.
    fn complements<R: Rng>(&mut self, rng: &mut R, verb: usize, children: &mut Vec<ConChild>) {
        let (obj, h) = self.object(rng);
        self.attach(h, verb, "dobj");
        children.push(ConChild::Node(obj));
        match rng.gen_range(0..4) {
            0 => {
                let place = PLACES.choose(rng).unwrap();
                let prep = *PREPS.choose(rng).unwrap();
                children.push(ConChild::Node(self.pp(rng, verb, prep, Some(place))));
            }
            1 => {
                let day = *DAYS.choose(rng).unwrap();
                let d = if day == "yesterday" {
                    let d = self.word(lx(day, "NN"));
                    self.attach(d, verb, "tmod");
                    self.entities.push(Entity::new(d, d + 1, "DATE"));
                    ConChild::Node(self.flat("NP", &[d]))
                } else {
                    let p = self.word(lx("on", "IN"));
                    self.attach(p, verb, "prep");
                    let d = self.word(lx(day, "NNP"));
                    self.attach(d, p, "pobj");
                    self.entities.push(Entity::new(d, d + 1, "DATE"));
                    ConChild::Node(ConNode::new(
                        "PP",
                        vec![ConChild::Terminal(p), ConChild::Node(self.flat("NP", &[d]))],
                    ))
                };
                children.push(d);
            }
            _ => {}
        }
    }

    fn predicate<R: Rng>(&mut self, rng: &mut R) -> Np {
        match rng.gen_range(0..4) {
            0 => {
                let v = self.word(lx(INTRANSITIVE.choose(rng).unwrap(), "VBD"));
                let mut children = vec![ConChild::Terminal(v)];
                if rng.gen_bool(0.7) {
                    let a = self.word(lx(ADVERBS.choose(rng).unwrap(), "RB"));
                    self.attach(a, v, "advmod");
                    children.push(ConChild::Node(self.flat("ADVP", &[a])));
                }
                (ConNode::new("VP", children), v)
            }
            1 => {
                let m = self.word(lx(MODALS.choose(rng).unwrap(), "MD"));
                let v = self.word(lx(BASE.choose(rng).unwrap(), "VB"));
                self.attach(m, v, "aux");
                let mut inner = vec![ConChild::Terminal(v)];
                self.complements(rng, v, &mut inner);
                let vp = ConNode::new("VP", inner);
                (ConNode::new("VP", vec![ConChild::Terminal(m), ConChild::Node(vp)]), v)
            }
            _ => {
                let v = self.word(lx(TRANSITIVE.choose(rng).unwrap(), "VBD"));
                let mut children = vec![ConChild::Terminal(v)];
                self.complements(rng, v, &mut children);
                (ConNode::new("VP", children), v)
            }
        }
    }

    fn finish(mut self, id: String, s: ConNode, root: usize) -> Option<CorpusRecord> {
        let mut seen = HashSet::new();
        if !self.tokens.iter().all(|t| seen.insert(t.clone())) {
            return None;
        }
        if let Some(first) = self.tokens.first_mut() {
            let mut c = first.chars();
            if let Some(h) = c.next() {
                *first = h.to_uppercase().chain(c).collect();
            }
        }
        self.heads[root] = usize::MAX;
        self.rels[root] = ROOT.to_string();
        let heads = self.heads.iter().map(|&h| if h == usize::MAX { 0 } else { h + 1 }).collect();
        let sentence = Sentence::new(self.tokens).ok()?;
        let mut r = CorpusRecord::new(id, sentence);
        r.pos = Some(PosSequence { tags: self.tags });
        r.ner = Some(EntitySet::new(self.entities));
        r.con = Some(ConTree::new(ConNode::new(TOP, vec![ConChild::Node(s)])));
        r.dep = Some(DepTree::new(heads, self.rels));
        r.validate().ok()?;
        Some(r)
    }
}

fn grammar_sentence<R: Rng>(rng: &mut R, id: String) -> Option<CorpusRecord> {
    let mut b = Build::default();
    let (subj, sh) = b.subject(rng);
    let (vp, vh) = b.predicate(rng);
    b.attach(sh, vh, "nsubj");
    let stop = b.word(lx(".", "."));
    b.attach(stop, vh, "punct");
    let s = ConNode::new(
        "S",
        vec![ConChild::Node(subj), ConChild::Node(vp), ConChild::Terminal(stop)],
    );
    b.finish(id, s, vh)
}

/// `size` distinct annotated sentences drawn from the grammar with `seed`.
pub fn grammar_corpus(seed: u64, size: usize) -> Vec<CorpusRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(size);
    let mut seen = HashSet::new();
    let mut attempts = 0;
    while out.len() < size && attempts < size * 100 {
        attempts += 1;
        let id = format!("s{:04}", out.len() + 1);
        if let Some(r) = grammar_sentence(&mut rng, id) {
            if seen.insert(r.sentence.tokens().to_vec()) {
                out.push(r);
            }
        }
    }
    out
}

/// The bundled sample corpus.
pub fn sample_corpus() -> Vec<CorpusRecord> {
    grammar_corpus(SAMPLE_SEED, SAMPLE_SIZE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dict::Profile;
    use crate::structure::validate_structure;

    #[test]
    fn random_structures_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for task in Task::ALL {
            let dict = DescriptionDict::builtin(task, Profile::Default);
            for _ in 0..300 {
                let (sent, s) = random_instance(&mut rng, &dict, 12);
                let v = validate_structure(&s, &sent);
                assert!(v.is_empty(), "{task}: {v:?} for {s:?}");
                let distinct: HashSet<_> = sent.tokens().iter().collect();
                assert_eq!(distinct.len(), sent.len());
            }
        }
    }

    #[test]
    fn long_sentences_stay_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_sentence(&mut rng, 200);
        let distinct: HashSet<_> = s.tokens().iter().collect();
        assert_eq!(distinct.len(), 200);
    }

    #[test]
    fn sample_corpus_is_full_and_deterministic() {
        let a = sample_corpus();
        assert_eq!(a.len(), SAMPLE_SIZE);
        assert_eq!(a, sample_corpus());
        for r in &a {
            for task in Task::ALL {
                assert!(r.structure(task).is_some());
            }
            assert!(r.dep.as_ref().unwrap().is_projective());
        }
        assert!(a.iter().any(|r| !r.ner.as_ref().unwrap().entities.is_empty()));
        assert!(a.iter().any(|r| r.ner.as_ref().unwrap().entities.is_empty()));
    }
}
