//! Linearization schemas. Each task has a codec that converts its structure
//! to and from an [`OutputSequence`] under one of three schema kinds, and
//! (except constituency) builds the constrained-decoding automaton.

pub mod con;
pub mod con_pt;
pub mod dep;
pub mod dep_pt;
pub mod ner;
pub mod pos;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{Automaton, StepError, Vocabulary};
use crate::dict::{DescriptionDict, Profile, Task};
use crate::structure::{validate_structure, OutputSequence, Sentence, Structure};

pub use con::ConCodec;
pub use dep::{DepCodec, Notation};
pub use ner::NerCodec;
pub use pos::PosCodec;

/// How much source text an output carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaKind {
    /// Labels only.
    Ls,
    /// Labels interleaved with source tokens.
    Lt,
    /// Natural-language prompt.
    Pt,
}

impl SchemaKind {
    pub const ALL: [SchemaKind; 3] = [SchemaKind::Ls, SchemaKind::Lt, SchemaKind::Pt];

    pub fn name(self) -> &'static str {
        match self {
            SchemaKind::Ls => "ls",
            SchemaKind::Lt => "lt",
            SchemaKind::Pt => "pt",
        }
    }
}

impl fmt::Display for SchemaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemaKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ls" => Ok(SchemaKind::Ls),
            "lt" => Ok(SchemaKind::Lt),
            "pt" => Ok(SchemaKind::Pt),
            other => Err(format!("unknown schema {other:?} (expected ls, lt or pt)")),
        }
    }
}

/// Prompt variants. `DecLex` replaces descriptions with raw labels (POS and
/// DEP prompts); `IncVrb` spells out every token or reference (NER and CON
/// prompts).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    #[default]
    Default,
    DecLex,
    IncVrb,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Default => "default",
            Variant::DecLex => "dec-lex",
            Variant::IncVrb => "inc-vrb",
        }
    }

    /// Whether the variant applies to `task` under `kind`.
    pub fn supports(self, task: Task, kind: SchemaKind) -> bool {
        match self {
            Variant::Default => true,
            Variant::DecLex => kind == SchemaKind::Pt && matches!(task, Task::Pos | Task::Dep),
            Variant::IncVrb => kind == SchemaKind::Pt && matches!(task, Task::Ner | Task::Con),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(Variant::Default),
            "dec-lex" => Ok(Variant::DecLex),
            "inc-vrb" => Ok(Variant::IncVrb),
            other => Err(format!("unknown variant {other:?} (expected default, dec-lex or inc-vrb)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("label {0:?} is not in the dictionary")]
    UnknownLabel(String),
    #[error("structure is invalid for the sentence: {0}")]
    InvalidStructure(String),
    #[error("structure is for task {found}, codec is for {expected}")]
    WrongTask { expected: Task, found: Task },
    #[error("dependency tree is not projective")]
    NonProjective,
    #[error("variant {variant} is not available for {task} {kind}")]
    UnsupportedVariant { task: Task, kind: SchemaKind, variant: Variant },
    #[error("symbol {position}: {reason}")]
    Malformed { position: usize, reason: String },
    #[error("output ended before the structure was complete: {0}")]
    Incomplete(String),
    #[error(transparent)]
    Step(#[from] StepError),
}

impl SchemaError {
    pub(crate) fn malformed(position: usize, reason: impl Into<String>) -> Self {
        SchemaError::Malformed {
            position,
            reason: reason.into(),
        }
    }
}

/// Everything that selects a concrete schema besides the task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchemaOptions {
    pub kind: SchemaKind,
    pub variant: Variant,
    pub profile: Profile,
    pub notation: Notation,
}

impl SchemaOptions {
    pub fn new(kind: SchemaKind) -> Self {
        SchemaOptions {
            kind,
            variant: Variant::Default,
            profile: Profile::Default,
            notation: Notation::Arrows,
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_profile(mut self, profile: Profile) -> Self {
        self.profile = profile;
        self
    }

    pub fn with_notation(mut self, notation: Notation) -> Self {
        self.notation = notation;
        self
    }
}

/// A codec for any task, dispatching on the structure type.
#[derive(Debug, Clone)]
pub enum Codec {
    Pos(PosCodec),
    Ner(NerCodec),
    Con(ConCodec),
    Dep(DepCodec),
}

impl Codec {
    /// Codec with the built-in dictionary for `options.profile`.
    pub fn new(task: Task, options: SchemaOptions) -> Result<Self, SchemaError> {
        let dict = DescriptionDict::builtin(task, options.profile);
        Codec::with_dict(dict, options)
    }

    pub fn with_dict(dict: DescriptionDict, options: SchemaOptions) -> Result<Self, SchemaError> {
        let task = dict.task();
        if !options.variant.supports(task, options.kind) {
            return Err(SchemaError::UnsupportedVariant {
                task,
                kind: options.kind,
                variant: options.variant,
            });
        }
        let dict = Arc::new(dict);
        Ok(match task {
            Task::Pos => Codec::Pos(PosCodec::new(dict, options.kind, options.variant)),
            Task::Ner => Codec::Ner(NerCodec::new(dict, options.kind, options.variant)),
            Task::Con => Codec::Con(ConCodec::new(dict, options.kind, options.variant)),
            Task::Dep => Codec::Dep(DepCodec::new(dict, options.kind, options.variant, options.notation)),
        })
    }

    pub fn task(&self) -> Task {
        match self {
            Codec::Pos(_) => Task::Pos,
            Codec::Ner(_) => Task::Ner,
            Codec::Con(_) => Task::Con,
            Codec::Dep(_) => Task::Dep,
        }
    }

    pub fn kind(&self) -> SchemaKind {
        match self {
            Codec::Pos(c) => c.kind(),
            Codec::Ner(c) => c.kind(),
            Codec::Con(c) => c.kind(),
            Codec::Dep(c) => c.kind(),
        }
    }

    pub fn dict(&self) -> &DescriptionDict {
        match self {
            Codec::Pos(c) => c.dict(),
            Codec::Ner(c) => c.dict(),
            Codec::Con(c) => c.dict(),
            Codec::Dep(c) => c.dict(),
        }
    }

    pub fn linearize(&self, sent: &Sentence, structure: &Structure) -> Result<OutputSequence, SchemaError> {
        let violations = validate_structure(structure, sent);
        if let Some(v) = violations.first() {
            if matches!(v, crate::structure::Violation::NonProjective) {
                return Err(SchemaError::NonProjective);
            }
            return Err(SchemaError::InvalidStructure(v.to_string()));
        }
        match (self, structure) {
            (Codec::Pos(c), Structure::Pos(s)) => c.linearize(sent, s),
            (Codec::Ner(c), Structure::Ner(s)) => c.linearize(sent, s),
            (Codec::Con(c), Structure::Con(s)) => c.linearize(sent, s),
            (Codec::Dep(c), Structure::Dep(s)) => c.linearize(sent, s),
            (codec, s) => Err(SchemaError::WrongTask {
                expected: codec.task(),
                found: structure_task(s),
            }),
        }
    }

    pub fn delinearize(&self, sent: &Sentence, out: &OutputSequence, lenient: bool) -> Result<Structure, SchemaError> {
        Ok(match self {
            Codec::Pos(c) => Structure::Pos(c.delinearize(sent, out, lenient)?),
            Codec::Ner(c) => Structure::Ner(c.delinearize(sent, out, lenient)?),
            Codec::Con(c) => Structure::Con(c.delinearize(sent, out, lenient)?),
            Codec::Dep(c) => Structure::Dep(c.delinearize(sent, out, lenient)?),
        })
    }

    /// Every symbol this schema can produce for `sent`, in tie-break order.
    pub fn vocabulary(&self, sent: &Sentence) -> Vocabulary {
        match self {
            Codec::Pos(c) => c.vocabulary(sent),
            Codec::Ner(c) => c.vocabulary(sent),
            Codec::Con(c) => c.vocabulary(sent),
            Codec::Dep(c) => c.vocabulary(sent),
        }
    }

    /// Fresh constrained-decoding automaton, or `None` for constituency
    /// schemas, which are generated freely.
    pub fn automaton(&self, sent: &Sentence) -> Option<Box<dyn Automaton>> {
        match self {
            Codec::Pos(c) => Some(Box::new(c.automaton(sent))),
            Codec::Ner(c) => Some(Box::new(c.automaton(sent))),
            Codec::Con(_) => None,
            Codec::Dep(c) => Some(c.automaton(sent)),
        }
    }
}

pub fn structure_task(s: &Structure) -> Task {
    match s {
        Structure::Pos(_) => Task::Pos,
        Structure::Ner(_) => Task::Ner,
        Structure::Con(_) => Task::Con,
        Structure::Dep(_) => Task::Dep,
    }
}

/// Splits a prompt body into phrases on `;`, with the final phrase required
/// to end in `.`. Returns each phrase with the index of its first symbol.
pub(crate) fn prompt_phrases(body: &[String]) -> Result<Vec<(usize, &[String])>, SchemaError> {
    use crate::structure::{SEP, STOP};
    let Some(last) = body.last() else {
        return Ok(Vec::new());
    };
    if last != STOP {
        return Err(SchemaError::malformed(body.len() - 1, "prompt must end with '.'"));
    }
    let body = &body[..body.len() - 1];
    let mut out = Vec::new();
    let mut start = 0;
    for (i, s) in body.iter().enumerate() {
        if s == SEP {
            out.push((start, &body[start..i]));
            start = i + 1;
        }
    }
    out.push((start, &body[start..]));
    Ok(out)
}

/// Lenient counterpart of [`prompt_phrases`]: splits on `;` and `.` outside
/// quotes wherever they occur and drops empty phrases.
pub(crate) fn loose_phrases(body: &[String]) -> Vec<(usize, &[String])> {
    use crate::structure::{CLOSE_QUOTE, OPEN_QUOTE, SEP, STOP};
    let mut out = Vec::new();
    let mut start = 0;
    let mut quoted = false;
    for (i, s) in body.iter().enumerate() {
        if s == OPEN_QUOTE {
            quoted = true;
        } else if s == CLOSE_QUOTE {
            quoted = false;
        } else if !quoted && (s == SEP || s == STOP) {
            if i > start {
                out.push((start, &body[start..i]));
            }
            start = i + 1;
        }
    }
    if start < body.len() {
        out.push((start, &body[start..]));
    }
    out
}

/// Tokens between the first `` `` `` and the following `''` of a phrase,
/// and the index just past the closing quote.
pub(crate) fn quoted(phrase: &[String]) -> Option<(&[String], usize)> {
    use crate::structure::{CLOSE_QUOTE, OPEN_QUOTE};
    let open = phrase.iter().position(|s| s == OPEN_QUOTE)?;
    let close = open + 1 + phrase[open + 1..].iter().position(|s| s == CLOSE_QUOTE)?;
    Some((&phrase[open + 1..close], close + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_availability() {
        assert!(Variant::DecLex.supports(Task::Pos, SchemaKind::Pt));
        assert!(!Variant::DecLex.supports(Task::Ner, SchemaKind::Pt));
        assert!(!Variant::IncVrb.supports(Task::Con, SchemaKind::Ls));
        assert!(Codec::new(Task::Dep, SchemaOptions::new(SchemaKind::Pt).with_variant(Variant::IncVrb)).is_err());
    }

    #[test]
    fn phrase_splitting() {
        let body: Vec<String> = "a b ; c .".split(' ').map(String::from).collect();
        let p = prompt_phrases(&body).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[1].0, 3);
        assert!(prompt_phrases(&body[..4]).is_err());
        assert_eq!(loose_phrases(&body[..4]).len(), 2);
    }

    mod properties {
        use proptest::prelude::*;
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        use super::*;
        use crate::automaton::replay;
        use crate::synth::{random_instance, random_sentence};

        fn every_codec() -> Vec<Codec> {
            let mut out = Vec::new();
            for task in Task::ALL {
                for kind in SchemaKind::ALL {
                    for variant in [Variant::Default, Variant::DecLex, Variant::IncVrb] {
                        if variant.supports(task, kind) {
                            out.push(Codec::new(task, SchemaOptions::new(kind).with_variant(variant)).unwrap());
                        }
                    }
                }
            }
            out
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn delinearize_inverts_linearize(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for codec in every_codec() {
                    let (sent, s) = random_instance(&mut rng, codec.dict(), 10);
                    let out = codec.linearize(&sent, &s).unwrap();
                    prop_assert_eq!(codec.delinearize(&sent, &out, false).unwrap(), s);
                }
            }

            #[test]
            fn automata_accept_gold_sequences(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for codec in every_codec() {
                    let (sent, s) = random_instance(&mut rng, codec.dict(), 10);
                    let out = codec.linearize(&sent, &s).unwrap();
                    if let Some(mut a) = codec.automaton(&sent) {
                        prop_assert!(replay(a.as_mut(), &out).is_ok(), "{} rejected", out);
                    }
                }
            }

            #[test]
            fn any_candidate_walk_reads_back(seed in any::<u64>(), n in 1usize..9) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let sent = random_sentence(&mut rng, n);
                for codec in every_codec() {
                    let Some(mut a) = codec.automaton(&sent) else { continue };
                    let mut symbols = Vec::new();
                    while !a.is_finished() {
                        let c = a.candidates();
                        prop_assert!(!c.is_empty());
                        let pick = c[rng.gen_range(0..c.len())];
                        symbols.push(a.vocabulary().symbol(pick).to_string());
                        a.advance(pick).unwrap();
                    }
                    let out = OutputSequence::new(symbols).unwrap();
                    prop_assert!(codec.delinearize(&sent, &out, false).is_ok(), "{} does not read back", out);
                }
            }
        }
    }
}
