//! Task metrics and stratified reports.
//!
//! Every metric is computed from per-sentence [`Counts`] that are summed
//! before dividing, so corpus scores are micro averages. Percentages are in
//! `[0, 100]`; a ratio with a zero denominator is reported as 0.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dict::Task;
use crate::schema::structure_task;
use crate::structure::{ConTree, DepTree, EntitySet, PosSequence, Sentence, Structure};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("gold has {gold} items, prediction has {pred}")]
    CorpusLength { gold: usize, pred: usize },
    #[error("item {item}: gold covers {gold} tokens, prediction covers {pred}")]
    TokenCount { item: usize, gold: usize, pred: usize },
    #[error("item {item}: expected a {expected} structure, found {found}")]
    WrongTask { item: usize, expected: Task, found: Task },
    #[error("no tokens to score")]
    Empty,
    #[error("factor {factor} does not apply to {task}")]
    Factor { factor: FactorKind, task: Task },
}

/// Match counts. `correct` is exact matches (POS tags, entities, brackets,
/// heads); `labeled` is head-and-relation matches for dependencies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub correct: u64,
    pub labeled: u64,
    pub gold: u64,
    pub pred: u64,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        self.correct += o.correct;
        self.labeled += o.labeled;
        self.gold += o.gold;
        self.pred += o.pred;
    }
}

pub fn percent(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_counts(c: Counts) -> Self {
        let precision = percent(c.correct, c.pred);
        let recall = percent(c.correct, c.gold);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf { precision, recall, f1 }
    }
}

pub fn pos_counts(gold: &PosSequence, pred: &PosSequence) -> Result<Counts, EvalError> {
    if gold.tags.len() != pred.tags.len() {
        return Err(EvalError::TokenCount {
            item: 0,
            gold: gold.tags.len(),
            pred: pred.tags.len(),
        });
    }
    let n = gold.tags.len() as u64;
    let correct = gold.tags.iter().zip(&pred.tags).filter(|(g, p)| g == p).count() as u64;
    Ok(Counts {
        correct,
        labeled: correct,
        gold: n,
        pred: n,
    })
}

pub fn ner_counts(gold: &EntitySet, pred: &EntitySet) -> Counts {
    let gold_set: HashSet<_> = gold.entities.iter().collect();
    let pred_set: HashSet<_> = pred.entities.iter().collect();
    let correct = gold_set.intersection(&pred_set).count() as u64;
    Counts {
        correct,
        labeled: correct,
        gold: gold_set.len() as u64,
        pred: pred_set.len() as u64,
    }
}

/// Labelled brackets matched as multisets, `TOP` excluded.
pub fn bracket_counts(gold: &ConTree, pred: &ConTree) -> Counts {
    let mut g = gold.spans();
    let mut p = pred.spans();
    g.sort();
    p.sort();
    let (mut i, mut j, mut correct) = (0, 0, 0u64);
    while i < g.len() && j < p.len() {
        match g[i].cmp(&p[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                correct += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Counts {
        correct,
        labeled: correct,
        gold: g.len() as u64,
        pred: p.len() as u64,
    }
}

/// Attachment counts over the tokens selected by `keep` (0-based).
pub fn dep_counts_where(gold: &DepTree, pred: &DepTree, keep: impl Fn(usize) -> bool) -> Result<Counts, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::TokenCount {
            item: 0,
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let mut c = Counts::default();
    for i in (0..gold.len()).filter(|&i| keep(i)) {
        c.gold += 1;
        c.pred += 1;
        if gold.heads[i] == pred.heads[i] {
            c.correct += 1;
            if gold.relations[i] == pred.relations[i] {
                c.labeled += 1;
            }
        }
    }
    Ok(c)
}

pub fn dep_counts(gold: &DepTree, pred: &DepTree) -> Result<Counts, EvalError> {
    dep_counts_where(gold, pred, |_| true)
}

fn check_len<T>(gold: &[T], pred: &[T]) -> Result<(), EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::CorpusLength {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    Ok(())
}

fn at_item(item: usize) -> impl Fn(EvalError) -> EvalError {
    move |e| match e {
        EvalError::TokenCount { gold, pred, .. } => EvalError::TokenCount { item, gold, pred },
        other => other,
    }
}

/// Token accuracy.
pub fn pos_accuracy(gold: &[PosSequence], pred: &[PosSequence]) -> Result<f64, EvalError> {
    check_len(gold, pred)?;
    let mut total = Counts::default();
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        total += pos_counts(g, p).map_err(at_item(i))?;
    }
    if total.gold == 0 {
        return Err(EvalError::Empty);
    }
    Ok(percent(total.correct, total.gold))
}

/// Exact (start, end, type) micro precision, recall and F1.
pub fn ner_span_f1(gold: &[EntitySet], pred: &[EntitySet]) -> Result<Prf, EvalError> {
    check_len(gold, pred)?;
    let mut total = Counts::default();
    for (g, p) in gold.iter().zip(pred) {
        total += ner_counts(g, p);
    }
    Ok(Prf::from_counts(total))
}

pub fn bracket_f1(gold: &[ConTree], pred: &[ConTree]) -> Result<Prf, EvalError> {
    check_len(gold, pred)?;
    let mut total = Counts::default();
    for (g, p) in gold.iter().zip(pred) {
        total += bracket_counts(g, p);
    }
    Ok(Prf::from_counts(total))
}

/// Unlabeled and labeled attachment scores, punctuation included.
pub fn uas_las(gold: &[DepTree], pred: &[DepTree]) -> Result<(f64, f64), EvalError> {
    check_len(gold, pred)?;
    let mut total = Counts::default();
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        total += dep_counts(g, p).map_err(at_item(i))?;
    }
    if total.gold == 0 {
        return Err(EvalError::Empty);
    }
    Ok((percent(total.correct, total.gold), percent(total.labeled, total.gold)))
}

/// Counts for one gold/prediction pair of any task.
pub fn structure_counts(gold: &Structure, pred: &Structure) -> Result<Counts, EvalError> {
    match (gold, pred) {
        (Structure::Pos(g), Structure::Pos(p)) => pos_counts(g, p),
        (Structure::Ner(g), Structure::Ner(p)) => Ok(ner_counts(g, p)),
        (Structure::Con(g), Structure::Con(p)) => Ok(bracket_counts(g, p)),
        (Structure::Dep(g), Structure::Dep(p)) => dep_counts(g, p),
        (g, p) => Err(EvalError::WrongTask {
            item: 0,
            expected: structure_task(g),
            found: structure_task(p),
        }),
    }
}

/// Named metric values for `task` computed from summed counts.
pub fn metrics(task: Task, c: Counts) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    match task {
        Task::Pos => {
            m.insert("accuracy".to_string(), percent(c.correct, c.gold));
        }
        Task::Ner | Task::Con => {
            let prf = Prf::from_counts(c);
            m.insert("precision".to_string(), prf.precision);
            m.insert("recall".to_string(), prf.recall);
            m.insert("f1".to_string(), prf.f1);
        }
        Task::Dep => {
            m.insert("uas".to_string(), percent(c.correct, c.gold));
            m.insert("las".to_string(), percent(c.labeled, c.gold));
        }
    }
    m
}

/// One evaluated sentence.
#[derive(Debug, Clone, Copy)]
pub struct Pair<'a> {
    pub sentence: &'a Sentence,
    pub gold: &'a Structure,
    pub pred: &'a Structure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    /// Share of tokens (percent) missing from a training vocabulary.
    Oov,
    /// Share of gold entities (percent) whose surface is missing from a
    /// training entity list.
    Unseen,
    /// Sentence length in tokens.
    Length,
    /// Distance between each token and its gold head; the root counts as
    /// position 0. Buckets hold tokens rather than sentences.
    Distance,
}

impl FactorKind {
    pub fn name(self) -> &'static str {
        match self {
            FactorKind::Oov => "oov",
            FactorKind::Unseen => "unseen",
            FactorKind::Length => "length",
            FactorKind::Distance => "distance",
        }
    }

    pub fn task(self) -> Task {
        match self {
            FactorKind::Oov => Task::Pos,
            FactorKind::Unseen => Task::Ner,
            FactorKind::Length => Task::Con,
            FactorKind::Distance => Task::Dep,
        }
    }

    /// The task a factor is meant for, plus `length`, which applies to all.
    pub fn applies_to(self, task: Task) -> bool {
        self == FactorKind::Length || self.task() == task
    }

    pub fn default_edges(self) -> Vec<f64> {
        match self {
            FactorKind::Oov | FactorKind::Unseen => vec![10.0, 25.0, 50.0],
            FactorKind::Length => vec![10.0, 20.0, 30.0, 40.0, 50.0],
            FactorKind::Distance => vec![2.0, 3.0, 4.0, 5.0, 7.0, 10.0],
        }
    }

    /// Whether the factor needs a training list (vocabulary or entities).
    pub fn needs_reference(self) -> bool {
        matches!(self, FactorKind::Oov | FactorKind::Unseen)
    }
}

impl fmt::Display for FactorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FactorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oov" => Ok(FactorKind::Oov),
            "unseen" => Ok(FactorKind::Unseen),
            "length" => Ok(FactorKind::Length),
            "distance" => Ok(FactorKind::Distance),
            other => Err(format!("unknown factor {other:?} (expected oov, unseen, length or distance)")),
        }
    }
}

/// A factor with its bucket edges and, for `oov` and `unseen`, the training
/// reference list (tokens, or space-joined entity surfaces).
#[derive(Debug, Clone, PartialEq)]
pub struct Stratifier {
    pub factor: FactorKind,
    pub edges: Vec<f64>,
    pub reference: HashSet<String>,
}

impl Stratifier {
    pub fn new(factor: FactorKind) -> Self {
        Stratifier {
            factor,
            edges: factor.default_edges(),
            reference: HashSet::new(),
        }
    }

    pub fn with_edges(mut self, mut edges: Vec<f64>) -> Self {
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        self.edges = edges;
        self
    }

    pub fn with_reference<I, S>(mut self, items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.reference = items.into_iter().map(Into::into).collect();
        self
    }

    /// Bucket index of `value`: bucket `k` holds `edges[k-1] <= value <
    /// edges[k]`.
    pub fn bucket(&self, value: f64) -> usize {
        self.edges.iter().take_while(|&&e| e <= value).count()
    }

    pub fn labels(&self) -> Vec<String> {
        let e = &self.edges;
        if e.is_empty() {
            return vec!["all".to_string()];
        }
        let mut out = vec![format!("<{}", e[0])];
        for w in e.windows(2) {
            out.push(format!("[{},{})", w[0], w[1]));
        }
        out.push(format!(">={}", e[e.len() - 1]));
        out
    }

    /// `(factor value, counts)` for every unit the pair contributes.
    fn units(&self, pair: &Pair<'_>) -> Result<Vec<(f64, Counts)>, EvalError> {
        let tokens = pair.sentence.tokens();
        let whole = |value: f64| -> Result<Vec<(f64, Counts)>, EvalError> {
            Ok(vec![(value, structure_counts(pair.gold, pair.pred)?)])
        };
        match (self.factor, pair.gold, pair.pred) {
            (FactorKind::Length, _, _) => whole(tokens.len() as f64),
            (FactorKind::Oov, Structure::Pos(_), _) => {
                let oov = tokens.iter().filter(|t| !self.reference.contains(*t)).count();
                whole(percent(oov as u64, tokens.len() as u64))
            }
            (FactorKind::Unseen, Structure::Ner(g), _) => {
                let unseen = g
                    .entities
                    .iter()
                    .filter(|e| !self.reference.contains(&tokens[e.start..e.end].join(" ")))
                    .count();
                whole(percent(unseen as u64, g.entities.len() as u64))
            }
            (FactorKind::Distance, Structure::Dep(g), Structure::Dep(p)) => (0..g.len())
                .map(|i| {
                    let distance = (i + 1).abs_diff(g.heads[i]) as f64;
                    Ok((distance, dep_counts_where(g, p, |j| j == i)?))
                })
                .collect(),
            (factor, gold, _) => Err(EvalError::Factor {
                factor,
                task: structure_task(gold),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub bucket: String,
    /// Sentences in the bucket, or tokens for the `distance` factor.
    pub count: usize,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub sentences: usize,
    pub overall: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<FactorKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub strata: Vec<Stratum>,
}

fn check_pairs(task: Task, pairs: &[Pair<'_>]) -> Result<Counts, EvalError> {
    let mut total = Counts::default();
    for (item, pair) in pairs.iter().enumerate() {
        for s in [pair.gold, pair.pred] {
            let found = structure_task(s);
            if found != task {
                return Err(EvalError::WrongTask {
                    item,
                    expected: task,
                    found,
                });
            }
        }
        total += structure_counts(pair.gold, pair.pred).map_err(at_item(item))?;
    }
    if matches!(task, Task::Pos | Task::Dep) && total.gold == 0 {
        return Err(EvalError::Empty);
    }
    Ok(total)
}

/// Overall metrics for a corpus.
pub fn evaluate(task: Task, pairs: &[Pair<'_>]) -> Result<EvalReport, EvalError> {
    let total = check_pairs(task, pairs)?;
    Ok(EvalReport {
        task,
        sentences: pairs.len(),
        overall: metrics(task, total),
        factor: None,
        strata: Vec::new(),
    })
}

/// Overall metrics plus one row per bucket of `stratifier`'s factor.
pub fn stratify(task: Task, pairs: &[Pair<'_>], stratifier: &Stratifier) -> Result<EvalReport, EvalError> {
    if !stratifier.factor.applies_to(task) {
        return Err(EvalError::Factor {
            factor: stratifier.factor,
            task,
        });
    }
    let mut report = evaluate(task, pairs)?;
    let labels = stratifier.labels();
    let mut buckets = vec![(0usize, Counts::default()); labels.len()];
    for pair in pairs {
        for (value, counts) in stratifier.units(pair)? {
            let b = &mut buckets[stratifier.bucket(value)];
            b.0 += 1;
            b.1 += counts;
        }
    }
    report.factor = Some(stratifier.factor);
    report.strata = labels
        .into_iter()
        .zip(buckets)
        .map(|(bucket, (count, counts))| Stratum {
            bucket,
            count,
            metrics: metrics(task, counts),
        })
        .collect();
    Ok(report)
}

impl EvalReport {
    /// Aligned-column text rendering.
    pub fn to_text(&self) -> String {
        let names: Vec<&String> = self.overall.keys().collect();
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["bucket".to_string(), "count".to_string()];
        header.extend(names.iter().map(|n| n.to_string()));
        rows.push(header);
        let row = |label: &str, count: usize, m: &BTreeMap<String, f64>| {
            let mut r = vec![label.to_string(), count.to_string()];
            r.extend(names.iter().map(|n| format!("{:.2}", m[*n])));
            r
        };
        rows.push(row("overall", self.sentences, &self.overall));
        for s in &self.strata {
            rows.push(row(&s.bucket, s.count, &s.metrics));
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = format!("task: {}\n", self.task);
        if let Some(f) = self.factor {
            out.push_str(&format!("factor: {f}\n"));
        }
        for r in rows {
            let cells: Vec<String> = r
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, w))| if c == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{ConChild, ConNode, Entity};

    fn pos(tags: &str) -> PosSequence {
        PosSequence::new(tags.split_whitespace())
    }

    #[test]
    fn accuracy_examples() {
        let g = vec![pos("A B C D")];
        assert_eq!(pos_accuracy(&g, &g).unwrap(), 100.0);
        assert_eq!(pos_accuracy(&g, &[pos("X X X X")]).unwrap(), 0.0);
        assert_eq!(pos_accuracy(&g, &[pos("A B C X")]).unwrap(), 75.0);
        assert!(matches!(
            pos_accuracy(&g, &[pos("A")]),
            Err(EvalError::TokenCount { item: 0, gold: 4, pred: 1 })
        ));
    }

    #[test]
    fn span_f1_examples() {
        let gold = vec![EntitySet::new(vec![Entity::new(0, 1, "PER"), Entity::new(2, 4, "ORG")])];
        let sub = vec![EntitySet::new(vec![Entity::new(0, 1, "PER")])];
        let f = ner_span_f1(&gold, &gold).unwrap();
        assert_eq!(f.f1, 100.0);
        let f = ner_span_f1(&gold, &sub).unwrap();
        assert_eq!((f.precision, f.recall), (100.0, 50.0));
        assert!((f.f1 - 200.0 / 3.0).abs() < 1e-9);
        let wrong = vec![EntitySet::new(vec![Entity::new(0, 1, "LOC")])];
        let c = ner_counts(&sub[0], &wrong[0]);
        assert_eq!((c.correct, c.gold, c.pred), (0, 1, 1));
        let none = vec![EntitySet::default()];
        assert_eq!(ner_span_f1(&none, &none).unwrap().f1, 0.0);
    }

    fn flat(label: &str, ids: &[usize]) -> ConChild {
        ConChild::Node(ConNode::new(label, ids.iter().map(|&i| ConChild::Terminal(i)).collect()))
    }

    #[test]
    fn brackets_exclude_top_and_count_duplicates() {
        let unary = ConTree::new(ConNode::new(
            "TOP",
            vec![ConChild::Node(ConNode::new("NP", vec![flat("NP", &[0, 1])]))],
        ));
        let single = ConTree::new(ConNode::new("TOP", vec![flat("NP", &[0, 1])]));
        let c = bracket_counts(&unary, &single);
        assert_eq!((c.correct, c.gold, c.pred), (1, 2, 1));
        let f = bracket_f1(&[unary.clone()], &[unary]).unwrap();
        assert_eq!(f.f1, 100.0);
    }

    #[test]
    fn attachment_examples() {
        let g = DepTree::new(vec![2, 0, 2, 5, 3], ["a", "root", "b", "c", "d"]);
        let p = DepTree::new(vec![2, 0, 2, 5, 3], ["a", "root", "b", "c", "x"]);
        assert_eq!(uas_las(&[g.clone()], &[g.clone()]).unwrap(), (100.0, 100.0));
        assert_eq!(uas_las(&[g], &[p]).unwrap(), (100.0, 80.0));
        assert_eq!(uas_las(&[], &[]), Err(EvalError::Empty));
    }

    #[test]
    fn buckets_and_labels() {
        let s = Stratifier::new(FactorKind::Length).with_edges(vec![5.0, 10.0]);
        assert_eq!(s.labels(), ["<5", "[5,10)", ">=10"]);
        assert_eq!((s.bucket(4.0), s.bucket(5.0), s.bucket(12.0)), (0, 1, 2));
        assert_eq!(Stratifier::new(FactorKind::Length).with_edges(vec![]).labels(), ["all"]);
    }

    #[test]
    fn length_split_by_hand() {
        let short = Sentence::parse("a b").unwrap();
        let long = Sentence::parse("a b c d e f").unwrap();
        let g1 = Structure::Pos(pos("X Y"));
        let p1 = Structure::Pos(pos("X X"));
        let g2 = Structure::Pos(pos("X X X X X X"));
        let pairs = [
            Pair { sentence: &short, gold: &g1, pred: &p1 },
            Pair { sentence: &long, gold: &g2, pred: &g2 },
        ];
        let s = Stratifier::new(FactorKind::Length).with_edges(vec![5.0]);
        let r = stratify(Task::Pos, &pairs, &s).unwrap();
        assert_eq!(r.strata[0].count, 1);
        assert_eq!(r.strata[0].metrics["accuracy"], 50.0);
        assert_eq!(r.strata[1].metrics["accuracy"], 100.0);
        assert_eq!(r.overall["accuracy"], 87.5);
        assert!(r.to_text().contains("[5") || r.to_text().contains(">=5"));
    }

    #[test]
    fn oov_with_full_vocabulary_is_all_zero() {
        let s = Sentence::parse("a b c").unwrap();
        let g = Structure::Pos(pos("X Y Z"));
        let pairs = [Pair { sentence: &s, gold: &g, pred: &g }];
        let st = Stratifier::new(FactorKind::Oov).with_reference(["a", "b", "c"]);
        let r = stratify(Task::Pos, &pairs, &st).unwrap();
        assert_eq!(r.strata[0].count, 1);
        assert!(r.strata[1..].iter().all(|b| b.count == 0));
    }

    #[test]
    fn distance_counts_tokens() {
        let s = Sentence::parse("a b c").unwrap();
        let g = Structure::Dep(DepTree::new(vec![2, 0, 2], ["x", "root", "y"]));
        let pairs = [Pair { sentence: &s, gold: &g, pred: &g }];
        let r = stratify(Task::Dep, &pairs, &Stratifier::new(FactorKind::Distance)).unwrap();
        assert_eq!(r.strata.iter().map(|b| b.count).sum::<usize>(), 3);
        assert_eq!(r.strata[0].count, 2);
        assert!(stratify(Task::Dep, &pairs, &Stratifier::new(FactorKind::Oov)).is_err());
    }
}
