//! The per-sentence symbol vocabulary and the candidate-set automaton
//! interface shared by every constrained schema.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::structure::{OutputSequence, EOS};

/// Index of a symbol in a [`Vocabulary`]. Lower ids win score ties.
pub type SymbolId = u32;

/// Frozen, ordered symbol table for one (schema, sentence) pair. Id 0 is
/// always [`EOS`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    symbols: Vec<String>,
    index: HashMap<String, SymbolId>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        let mut v = Vocabulary {
            symbols: Vec::new(),
            index: HashMap::new(),
        };
        v.add(EOS);
        v
    }

    /// Adds `symbol` unless present; returns its id either way.
    pub fn add(&mut self, symbol: &str) -> SymbolId {
        if let Some(&id) = self.index.get(symbol) {
            return id;
        }
        let id = self.symbols.len() as SymbolId;
        self.symbols.push(symbol.to_string());
        self.index.insert(symbol.to_string(), id);
        id
    }

    pub fn extend<I, S>(&mut self, symbols: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for s in symbols {
            self.add(s.as_ref());
        }
    }

    pub fn id(&self, symbol: &str) -> Option<SymbolId> {
        self.index.get(symbol).copied()
    }

    /// Id of a symbol the schema itself registered.
    pub(crate) fn known(&self, symbol: &str) -> SymbolId {
        match self.index.get(symbol) {
            Some(&id) => id,
            None => panic!("symbol {symbol:?} missing from the schema vocabulary"),
        }
    }

    pub fn symbol(&self, id: SymbolId) -> &str {
        &self.symbols[id as usize]
    }

    pub fn eos(&self) -> SymbolId {
        0
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn all_ids(&self) -> Vec<SymbolId> {
        (0..self.symbols.len() as SymbolId).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("symbol {position} ({symbol:?}) is not allowed here; expected one of {expected:?}")]
    NotAllowed {
        position: usize,
        symbol: String,
        expected: Vec<String>,
    },
    #[error("symbol {position} ({symbol:?}) is not in the schema vocabulary")]
    UnknownSymbol { position: usize, symbol: String },
    #[error("sequence ended at symbol {position} before the automaton finished")]
    Unfinished { position: usize },
}

/// A deterministic automaton that yields, for its current prefix, every
/// symbol that may legally come next.
pub trait Automaton: Send {
    fn vocabulary(&self) -> &Arc<Vocabulary>;

    /// Legal next symbols, sorted by id. Empty only once finished.
    fn candidates(&self) -> Vec<SymbolId>;

    /// Consumes one symbol. Callers must pass a member of
    /// [`Automaton::candidates`]; anything else is reported as an error and
    /// leaves the state unchanged.
    fn advance(&mut self, symbol: SymbolId) -> Result<(), StepError>;

    /// True once [`EOS`] has been consumed.
    fn is_finished(&self) -> bool;

    /// Number of symbols consumed so far.
    fn position(&self) -> usize;

    fn clone_box(&self) -> Box<dyn Automaton>;
}

impl Clone for Box<dyn Automaton> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Builds a [`StepError::NotAllowed`] for `symbol` at the automaton's
/// current position.
pub(crate) fn reject(a: &dyn Automaton, symbol: SymbolId) -> StepError {
    let vocab = a.vocabulary();
    StepError::NotAllowed {
        position: a.position(),
        symbol: vocab.symbol(symbol).to_string(),
        expected: a
            .candidates()
            .into_iter()
            .map(|c| vocab.symbol(c).to_string())
            .collect(),
    }
}

/// Feeds every symbol of `seq` through `automaton`, checking membership at
/// each step.
pub fn replay<A: Automaton + ?Sized>(automaton: &mut A, seq: &OutputSequence) -> Result<(), StepError> {
    for (position, symbol) in seq.symbols().iter().enumerate() {
        let id = automaton
            .vocabulary()
            .id(symbol)
            .ok_or_else(|| StepError::UnknownSymbol {
                position,
                symbol: symbol.clone(),
            })?;
        automaton.advance(id)?;
    }
    if !automaton.is_finished() {
        return Err(StepError::Unfinished {
            position: seq.len(),
        });
    }
    Ok(())
}

/// Applies `advance` after checking `symbol` against `candidates`.
pub(crate) fn guarded<A, F>(a: &mut A, symbol: SymbolId, step: F) -> Result<(), StepError>
where
    A: Automaton,
    F: FnOnce(&mut A),
{
    if a.candidates().binary_search(&symbol).is_err() {
        return Err(reject(a, symbol));
    }
    step(a);
    Ok(())
}

/// Sorts and deduplicates candidate ids.
pub(crate) fn normalize(mut ids: Vec<SymbolId>) -> Vec<SymbolId> {
    ids.sort_unstable();
    ids.dedup();
    ids
}
