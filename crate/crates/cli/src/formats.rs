//! Corpus file formats the commands read and write.

use std::str::FromStr;

use lexschema::io::{
    read_bracketed, read_conll_dep, read_conll_ner, read_jsonl, write_bracketed, write_conll_dep, write_conll_ner,
    write_jsonl,
};
use lexschema::{CorpusRecord, IoError, ReadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// One JSON record per line.
    Jsonl,
    /// Bracketed constituency trees, one per line.
    Ptb,
    /// Token and entity tag columns, blank line between sentences.
    ConllNer,
    /// CoNLL-X or CoNLL-U dependency columns.
    ConllDep,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "ptb" => Ok(Format::Ptb),
            "conll-ner" => Ok(Format::ConllNer),
            "conll-dep" => Ok(Format::ConllDep),
            other => Err(format!(
                "unknown format {other:?} (expected jsonl, ptb, conll-ner or conll-dep)"
            )),
        }
    }
}

/// Records parsed from `text`, plus notes on anything the reader skipped.
pub fn read(text: &str, format: Format) -> Result<(Vec<CorpusRecord>, Vec<String>), IoError> {
    let opts = ReadOptions::default();
    let numbered = |i: usize| format!("{}", i + 1);
    match format {
        Format::Jsonl => Ok((read_jsonl(text)?, Vec::new())),
        Format::Ptb => {
            let read = read_bracketed(text, &opts)?;
            let records = read
                .records
                .into_iter()
                .enumerate()
                .map(|(i, t)| {
                    let mut r = CorpusRecord::new(numbered(i), t.sentence);
                    r.con = Some(t.tree);
                    r.pos = t.pos;
                    r
                })
                .collect();
            Ok((records, notes(&read.dropped)))
        }
        Format::ConllNer => {
            let read = read_conll_ner(text, &opts)?;
            let records = read
                .records
                .into_iter()
                .enumerate()
                .map(|(i, (sentence, set))| {
                    let mut r = CorpusRecord::new(numbered(i), sentence);
                    r.ner = Some(set);
                    r
                })
                .collect();
            Ok((records, notes(&read.dropped)))
        }
        Format::ConllDep => {
            let read = read_conll_dep(text, &opts)?;
            let records = read
                .records
                .into_iter()
                .enumerate()
                .map(|(i, d)| {
                    let mut r = CorpusRecord::new(numbered(i), d.sentence);
                    r.dep = Some(d.tree);
                    r.pos = d.pos;
                    r
                })
                .collect();
            Ok((records, notes(&read.dropped)))
        }
    }
}

fn notes(dropped: &[lexschema::io::Dropped]) -> Vec<String> {
    dropped
        .iter()
        .map(|d| format!("skipped sentence at line {}: {}", d.line, d.reason))
        .collect()
}

/// Renders `records` in `format`. Records missing the structure a column
/// format needs are reported by id.
pub fn write(records: &[CorpusRecord], format: Format) -> Result<String, String> {
    if format == Format::Jsonl {
        return Ok(write_jsonl(records));
    }
    let mut out = String::new();
    for r in records {
        let missing = || format!("record {} has no structure for {format:?}", r.id);
        match format {
            Format::Jsonl => unreachable!(),
            Format::Ptb => {
                out.push_str(&write_bracketed(&r.sentence, r.con.as_ref().ok_or_else(missing)?, r.pos.as_ref()));
                out.push('\n');
            }
            Format::ConllNer => {
                out.push_str(&write_conll_ner(&r.sentence, r.ner.as_ref().ok_or_else(missing)?));
                out.push('\n');
            }
            Format::ConllDep => {
                out.push_str(&write_conll_dep(&r.sentence, r.dep.as_ref().ok_or_else(missing)?, r.pos.as_ref()));
                out.push('\n');
            }
        }
    }
    Ok(out)
}
