//! Linearization schemas for part-of-speech tagging, named-entity
//! recognition, constituency parsing and dependency parsing, with the
//! constrained-decoding automata that keep generated sequences well formed.

pub mod automaton;
pub mod decode;
pub mod dict;
pub mod eval;
pub mod io;
pub mod schema;
pub mod scorer;
pub mod structure;
pub mod synth;
pub mod trie;

pub use automaton::{Automaton, StepError, SymbolId, Vocabulary};
pub use decode::{decode, DecodeConfig, DecodeError, Mode, Strategy};
pub use io::{CorpusRecord, IoError, ReadOptions};
pub use eval::{EvalError, EvalReport, FactorKind, Prf, Stratifier};
pub use dict::{DescriptionDict, DictError, Profile, Task};
pub use schema::{Codec, SchemaError, SchemaKind, SchemaOptions, Variant};
pub use scorer::{ExternalScorer, OracleScorer, RandomScorer, ScoreRequest, Scorer, ScorerError};
pub use structure::{
    ConChild, ConNode, ConTree, DepTree, Entity, EntitySet, OutputSequence, PosSequence, Sentence, Structure,
};
