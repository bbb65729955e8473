//! Label inventories and the description dictionaries that turn labels into
//! words for the prompt schemas.
//!
//! A dictionary is a TOML document:
//!
//! ```toml
//! task = "pos"
//! inventory = "ptb"      # optional, defaults to the task's first inventory
//! default = "NN"         # label used when lenient repair has to invent one
//!
//! [labels]
//! "PRP$" = "a possessive pronoun"
//! ```
//!
//! The first word of every description is its article.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::structure::{CLOSE_QUOTE, EOS, OPEN_QUOTE, SEP, STOP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Pos,
    Ner,
    Con,
    Dep,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Pos, Task::Ner, Task::Con, Task::Dep];

    pub fn name(self) -> &'static str {
        match self {
            Task::Pos => "pos",
            Task::Ner => "ner",
            Task::Con => "con",
            Task::Dep => "dep",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pos" => Ok(Task::Pos),
            "ner" => Ok(Task::Ner),
            "con" => Ok(Task::Con),
            "dep" => Ok(Task::Dep),
            other => Err(format!("unknown task {other:?} (expected pos, ner, con or dep)")),
        }
    }
}

/// Named bundle of built-in dictionaries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    #[default]
    Default,
    /// Short glosses matching the worked example sentence.
    PaperTable1,
    /// CoNLL-2003 entity types for NER; identical to `Default` elsewhere.
    Conll03,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Default => "default",
            Profile::PaperTable1 => "paper-table-1",
            Profile::Conll03 => "conll03",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(Profile::Default),
            "paper-table-1" | "example" => Ok(Profile::PaperTable1),
            "conll03" => Ok(Profile::Conll03),
            other => Err(format!(
                "unknown dictionary profile {other:?} (expected default, paper-table-1 or conll03)"
            )),
        }
    }
}

const POS_PTB: &[&str] = &[
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNS", "NNP", "NNPS", "PDT",
    "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ",
    "WDT", "WP", "WP$", "WRB", "#", "$", ".", ",", ":", "-LRB-", "-RRB-", "HYPH", "NFP", "ADD", "AFX", "XX",
];

const NER_ONTONOTES: &[&str] = &[
    "PERSON", "NORP", "FAC", "ORG", "GPE", "LOC", "PRODUCT", "EVENT", "WORK_OF_ART", "LAW", "LANGUAGE", "DATE",
    "TIME", "PERCENT", "MONEY", "QUANTITY", "ORDINAL", "CARDINAL",
];

const NER_CONLL03: &[&str] = &["PER", "ORG", "LOC", "MISC"];

const CON_PTB: &[&str] = &[
    "TOP", "S", "SBAR", "SBARQ", "SINV", "SQ", "ADJP", "ADVP", "CONJP", "FRAG", "INTJ", "LST", "NAC", "NML", "NP",
    "NX", "PP", "PRN", "PRT", "QP", "RRC", "UCP", "VP", "WHADJP", "WHADVP", "WHNP", "WHPP", "X",
];

const DEP_STANFORD: &[&str] = &[
    "root", "acomp", "advcl", "advmod", "agent", "amod", "appos", "aux", "auxpass", "cc", "ccomp", "conj", "cop",
    "csubj", "csubjpass", "dep", "det", "discourse", "dobj", "expl", "iobj", "mark", "mwe", "neg", "nn",
    "npadvmod", "nsubj", "nsubjpass", "num", "number", "parataxis", "pcomp", "pobj", "poss", "possessive",
    "preconj", "predet", "prep", "prt", "punct", "quantmod", "rcmod", "ref", "tmod", "vmod", "xcomp",
];

const DEP_UD: &[&str] = &[
    "root", "acl", "advcl", "advmod", "amod", "appos", "aux", "case", "cc", "ccomp", "clf", "compound", "conj",
    "cop", "csubj", "dep", "det", "discourse", "dislocated", "expl", "fixed", "flat", "goeswith", "iobj", "list",
    "mark", "nmod", "nsubj", "nummod", "obj", "obl", "orphan", "parataxis", "poss", "punct", "relcl",
    "reparandum", "vocative", "xcomp",
];

/// The labels a dictionary for `task` must describe, by inventory name.
pub fn inventory(task: Task, name: &str) -> Option<&'static [&'static str]> {
    match (task, name) {
        (Task::Pos, "ptb") => Some(POS_PTB),
        (Task::Ner, "ontonotes") => Some(NER_ONTONOTES),
        (Task::Ner, "conll03") => Some(NER_CONLL03),
        (Task::Con, "ptb") => Some(CON_PTB),
        (Task::Dep, "stanford") => Some(DEP_STANFORD),
        (Task::Dep, "ud") => Some(DEP_UD),
        _ => None,
    }
}

fn default_inventory(task: Task) -> &'static str {
    match task {
        Task::Pos | Task::Con => "ptb",
        Task::Ner => "ontonotes",
        Task::Dep => "stanford",
    }
}

/// Words of a label description without its article.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Description {
    pub article: String,
    pub words: Vec<String>,
}

impl Description {
    pub fn surface(&self) -> String {
        self.words.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DictError {
    #[error("dictionary is not valid TOML: {0}")]
    Parse(String),
    #[error("dictionary is for task {found}, expected {expected}")]
    TaskMismatch { expected: Task, found: String },
    #[error("unknown inventory {inventory:?} for task {task}")]
    UnknownInventory { task: Task, inventory: String },
    #[error("label {0:?} is missing from the dictionary")]
    MissingLabel(String),
    #[error("label {0:?} is not in the inventory")]
    UnknownLabel(String),
    #[error("description of {0:?} must be a string")]
    NotAString(String),
    #[error("description of {0:?} needs an article (a or an) followed by at least one word")]
    BadArticle(String),
    #[error("description of {label:?} contains the reserved symbol {symbol:?}")]
    ReservedSymbol { label: String, symbol: String },
    #[error("labels {first:?} and {second:?} share the description {surface:?}")]
    DuplicateSurface { first: String, second: String, surface: String },
    #[error("description of {shorter:?} is a prefix of the description of {longer:?}")]
    PrefixCollision { shorter: String, longer: String },
    #[error("default label {0:?} is not in the dictionary")]
    BadDefault(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDict {
    task: String,
    inventory: Option<String>,
    default: Option<String>,
    root_arc: Option<bool>,
    collapse_top: Option<bool>,
    labels: toml::Table,
}

/// Validated mapping from labels to descriptions for one task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescriptionDict {
    task: Task,
    inventory: String,
    labels: Vec<String>,
    descriptions: Vec<Description>,
    index: HashMap<String, usize>,
    default_label: String,
    root_arc: bool,
    collapse_top: bool,
}

fn reserved(word: &str) -> bool {
    [SEP, STOP, ",", OPEN_QUOTE, CLOSE_QUOTE, EOS].contains(&word) || word.contains(SEP)
}

impl DescriptionDict {
    /// Parses and validates a dictionary document for `task`.
    pub fn load(task: Task, source: &str) -> Result<Self, DictError> {
        let raw: RawDict = toml::from_str(source).map_err(|e| DictError::Parse(e.message().to_string()))?;
        if raw.task.parse::<Task>().ok() != Some(task) {
            return Err(DictError::TaskMismatch {
                expected: task,
                found: raw.task,
            });
        }
        let inventory_name = raw.inventory.unwrap_or_else(|| default_inventory(task).to_string());
        let inv = inventory(task, &inventory_name).ok_or_else(|| DictError::UnknownInventory {
            task,
            inventory: inventory_name.clone(),
        })?;

        let mut labels = Vec::new();
        let mut descriptions = Vec::new();
        let mut index = HashMap::new();
        for (label, value) in &raw.labels {
            if !inv.contains(&label.as_str()) {
                return Err(DictError::UnknownLabel(label.clone()));
            }
            let text = value.as_str().ok_or_else(|| DictError::NotAString(label.clone()))?;
            let mut words = text.split_whitespace().map(str::to_string);
            let article = match words.next() {
                Some(a) if a == "a" || a == "an" => a,
                _ => return Err(DictError::BadArticle(label.clone())),
            };
            let words: Vec<String> = words.collect();
            if words.is_empty() {
                return Err(DictError::BadArticle(label.clone()));
            }
            if let Some(w) = words.iter().find(|w| reserved(w)) {
                return Err(DictError::ReservedSymbol {
                    label: label.clone(),
                    symbol: w.clone(),
                });
            }
            index.insert(label.clone(), labels.len());
            labels.push(label.clone());
            descriptions.push(Description { article, words });
        }
        for &label in inv {
            if !index.contains_key(label) {
                return Err(DictError::MissingLabel(label.to_string()));
            }
        }
        for i in 0..labels.len() {
            for j in 0..labels.len() {
                if i == j {
                    continue;
                }
                let (a, b) = (&descriptions[i].words, &descriptions[j].words);
                if a == b && i < j {
                    return Err(DictError::DuplicateSurface {
                        first: labels[i].clone(),
                        second: labels[j].clone(),
                        surface: a.join(" "),
                    });
                }
                if a.len() < b.len() && b.starts_with(a) {
                    return Err(DictError::PrefixCollision {
                        shorter: labels[i].clone(),
                        longer: labels[j].clone(),
                    });
                }
            }
        }
        let default_label = raw.default.unwrap_or_else(|| labels[0].clone());
        if !index.contains_key(&default_label) {
            return Err(DictError::BadDefault(default_label));
        }
        Ok(DescriptionDict {
            task,
            inventory: inventory_name,
            labels,
            descriptions,
            index,
            default_label,
            root_arc: raw.root_arc.unwrap_or(true),
            collapse_top: raw.collapse_top.unwrap_or(false),
        })
    }

    /// One of the dictionaries compiled into the library.
    pub fn builtin(task: Task, profile: Profile) -> DescriptionDict {
        let source = builtin_source(task, profile);
        DescriptionDict::load(task, source).expect("built-in dictionaries are valid")
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn inventory_name(&self) -> &str {
        &self.inventory
    }

    /// Labels in document order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    pub fn get(&self, label: &str) -> Option<&Description> {
        self.index.get(label).map(|&i| &self.descriptions[i])
    }

    /// Iterates `(label, description)` in document order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &Description)> {
        self.labels.iter().map(String::as_str).zip(self.descriptions.iter())
    }

    /// Label used to pad or fill in during lenient repair.
    pub fn default_label(&self) -> &str {
        &self.default_label
    }

    /// Whether dependency prompts and transition sequences end with the
    /// attachment of the sentence head to the root.
    pub fn root_arc(&self) -> bool {
        self.root_arc
    }

    /// Whether a constituency root with a single `S` child is described as
    /// the sentence itself.
    pub fn collapse_top(&self) -> bool {
        self.collapse_top
    }
}

/// Raw text of a built-in dictionary.
pub fn builtin_source(task: Task, profile: Profile) -> &'static str {
    match (task, profile) {
        (Task::Pos, Profile::PaperTable1) => include_str!("../dicts/pos_example.toml"),
        (Task::Pos, _) => include_str!("../dicts/pos.toml"),
        (Task::Ner, Profile::PaperTable1) => include_str!("../dicts/ner_example.toml"),
        (Task::Ner, Profile::Conll03) => include_str!("../dicts/ner_conll03.toml"),
        (Task::Ner, Profile::Default) => include_str!("../dicts/ner.toml"),
        (Task::Con, Profile::PaperTable1) => include_str!("../dicts/con_example.toml"),
        (Task::Con, _) => include_str!("../dicts/con.toml"),
        (Task::Dep, Profile::PaperTable1) => include_str!("../dicts/dep_example.toml"),
        (Task::Dep, _) => include_str!("../dicts/dep.toml"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_loads() {
        for task in Task::ALL {
            for profile in [Profile::Default, Profile::PaperTable1, Profile::Conll03] {
                let d = DescriptionDict::builtin(task, profile);
                assert_eq!(d.task(), task);
                assert!(d.contains(d.default_label()));
            }
        }
    }

    #[test]
    fn default_glosses() {
        let pos = DescriptionDict::builtin(Task::Pos, Profile::Default);
        let d = pos.get("PRP$").unwrap();
        assert_eq!((d.surface().as_str(), d.article.as_str()), ("possessive pronoun", "a"));
        let dep = DescriptionDict::builtin(Task::Dep, Profile::Default);
        let d = dep.get("poss").unwrap();
        assert_eq!((d.surface().as_str(), d.article.as_str()), ("possessive modifier", "a"));
        let ner = DescriptionDict::builtin(Task::Ner, Profile::Default);
        assert_eq!(ner.get("NORP").unwrap().surface(), "nationality, religious or political group");
        let ner1 = DescriptionDict::builtin(Task::Ner, Profile::PaperTable1);
        assert_eq!(ner1.get("NORP").unwrap().surface(), "geopolitical entity");
    }

    #[test]
    fn shared_surface_rejected() {
        let src = include_str!("../dicts/pos.toml").replace("\"a plural noun\"", "\"a singular noun\"");
        assert!(matches!(
            DescriptionDict::load(Task::Pos, &src),
            Err(DictError::DuplicateSurface { .. })
        ));
    }

    #[test]
    fn prefix_collision_rejected() {
        let src = include_str!("../dicts/pos.toml").replace("\"a plural noun\"", "\"a singular noun phrase\"");
        assert_eq!(
            DescriptionDict::load(Task::Pos, &src),
            Err(DictError::PrefixCollision {
                shorter: "NN".into(),
                longer: "NNS".into()
            })
        );
    }

    #[test]
    fn missing_label_named() {
        let src: String = include_str!("../dicts/pos.toml")
            .lines()
            .filter(|l| !l.starts_with("\"WP$\""))
            .collect::<Vec<_>>()
            .join("\n");
        assert_eq!(DescriptionDict::load(Task::Pos, &src), Err(DictError::MissingLabel("WP$".into())));
    }

    #[test]
    fn structural_errors() {
        let base = include_str!("../dicts/ner_conll03.toml");
        assert!(matches!(
            DescriptionDict::load(Task::Pos, base),
            Err(DictError::TaskMismatch { .. })
        ));
        let bad = base.replace("\"a person\"", "\"the person\"");
        assert_eq!(DescriptionDict::load(Task::Ner, &bad), Err(DictError::BadArticle("PER".into())));
        let bad = base.replace("\"a person\"", "\"a per ; son\"");
        assert!(matches!(
            DescriptionDict::load(Task::Ner, &bad),
            Err(DictError::ReservedSymbol { .. })
        ));
        let bad = format!("{base}\"GPE\" = \"a place\"\n");
        assert_eq!(DescriptionDict::load(Task::Ner, &bad), Err(DictError::UnknownLabel("GPE".into())));
    }

    #[test]
    fn load_is_deterministic() {
        let src = builtin_source(Task::Dep, Profile::Default);
        assert_eq!(
            DescriptionDict::load(Task::Dep, src).unwrap(),
            DescriptionDict::load(Task::Dep, src).unwrap()
        );
    }
}
