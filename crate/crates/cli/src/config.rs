//! Run settings assembled from a TOML config file and command-line flags.
//! Flags win over the file; the file wins over built-in defaults.

use std::path::{Path, PathBuf};

use lexschema::{FactorKind, Mode, Profile, SchemaKind, SchemaOptions, Strategy, Task, Variant};
use lexschema::schema::Notation;
use serde::Deserialize;

use crate::CliError;

/// Every key a config file may set. Names mirror the long flags with `-`
/// replaced by `_`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub task: Option<String>,
    pub schema: Option<String>,
    pub variant: Option<String>,
    pub profile: Option<String>,
    pub notation: Option<String>,
    pub constrained: Option<bool>,
    pub scorer: Option<String>,
    pub strategy: Option<String>,
    pub beam_width: Option<usize>,
    pub max_len: Option<usize>,
    pub seed: Option<u64>,
    pub lenient: Option<bool>,
    pub stratify: Option<String>,
    pub edges: Option<Vec<f64>>,
    pub reference: Option<PathBuf>,
    pub input_format: Option<String>,
    pub timeout_secs: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Picks the flag value, then the file value, and parses it.
pub fn pick<T: std::str::FromStr<Err = String>>(
    key: &str,
    flag: Option<&String>,
    file: Option<&String>,
) -> Result<Option<T>, CliError> {
    match flag.or(file) {
        None => Ok(None),
        Some(s) => s.parse().map(Some).map_err(|e| CliError::Config(format!("--{key}: {e}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemaChoice {
    pub task: Task,
    pub kind: SchemaKind,
    pub variant: Variant,
    pub profile: Profile,
    pub notation: Notation,
}

impl SchemaChoice {
    pub fn options(&self) -> SchemaOptions {
        SchemaOptions::new(self.kind)
            .with_variant(self.variant)
            .with_profile(self.profile)
            .with_notation(self.notation)
    }

    pub fn resolve(flags: &crate::SchemaArgs, file: &FileConfig) -> Result<Self, CliError> {
        let task: Task =
            pick("task", flags.task.as_ref(), file.task.as_ref())?.ok_or(CliError::Missing("task"))?;
        let kind: SchemaKind =
            pick("schema", flags.schema.as_ref(), file.schema.as_ref())?.ok_or(CliError::Missing("schema"))?;
        let mut profile: Profile = pick("profile", flags.profile.as_ref(), file.profile.as_ref())?.unwrap_or_default();
        // The worked-example glosses are selectable as a variant as well as a
        // profile.
        let variant = match flags.variant.as_ref().or(file.variant.as_ref()).map(String::as_str) {
            None => Variant::Default,
            Some("paper-table-1") => {
                profile = Profile::PaperTable1;
                Variant::Default
            }
            Some(v) => v.parse().map_err(|e| CliError::Config(format!("--variant: {e}")))?,
        };
        if !variant.supports(task, kind) {
            return Err(CliError::Config(format!("variant {variant} does not apply to {task}-{kind}")));
        }
        let notation = match flags.notation.as_ref().or(file.notation.as_ref()).map(String::as_str) {
            None | Some("arrows") => Notation::Arrows,
            Some("named") => Notation::Named,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "--notation: unknown notation {other:?} (expected arrows or named)"
                )))
            }
        };
        Ok(SchemaChoice {
            task,
            kind,
            variant,
            profile,
            notation,
        })
    }
}

/// Where next-symbol scores come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScorerChoice {
    Oracle,
    Random,
    External(String),
}

impl std::str::FromStr for ScorerChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "oracle" => Ok(ScorerChoice::Oracle),
            "random" => Ok(ScorerChoice::Random),
            _ => match s.strip_prefix("external:") {
                Some(cmd) if !cmd.trim().is_empty() => Ok(ScorerChoice::External(cmd.to_string())),
                _ => Err(format!("unknown scorer {s:?} (expected oracle, random or external:<command>)")),
            },
        }
    }
}

pub fn mode(flags: &crate::DecodeArgs, file: &FileConfig) -> Mode {
    let constrained = if flags.constrained {
        true
    } else if flags.unconstrained {
        false
    } else {
        file.constrained.unwrap_or(true)
    };
    if constrained {
        Mode::Constrained
    } else {
        Mode::Unconstrained
    }
}

/// Decoding strategy; sampling seeds are derived per record by the caller.
pub fn strategy(flags: &crate::DecodeArgs, file: &FileConfig) -> Result<StrategyKind, CliError> {
    let width = flags.beam_width.or(file.beam_width).unwrap_or(4);
    match flags.strategy.as_ref().or(file.strategy.as_ref()).map(String::as_str) {
        None | Some("greedy") => Ok(StrategyKind::Greedy),
        Some("sample") => Ok(StrategyKind::Sample),
        Some("beam") if width > 0 => Ok(StrategyKind::Beam(width)),
        Some("beam") => Err(CliError::Config("--beam-width must be at least 1".into())),
        Some(other) => Err(CliError::Config(format!(
            "--strategy: unknown strategy {other:?} (expected greedy, sample or beam)"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    Greedy,
    Sample,
    Beam(usize),
}

impl StrategyKind {
    pub fn for_record(self, seed: u64) -> Strategy {
        match self {
            StrategyKind::Greedy => Strategy::Greedy,
            StrategyKind::Sample => Strategy::Sample { seed },
            StrategyKind::Beam(width) => Strategy::Beam { width },
        }
    }
}

pub fn factor(flag: Option<&String>, file: &FileConfig) -> Result<Option<FactorKind>, CliError> {
    pick("stratify", flag, file.stratify.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scorer_names() {
        assert_eq!("oracle".parse(), Ok(ScorerChoice::Oracle));
        assert_eq!(
            "external:python3 s.py --x".parse(),
            Ok(ScorerChoice::External("python3 s.py --x".into()))
        );
        assert!("external:".parse::<ScorerChoice>().is_err());
        assert!("bart".parse::<ScorerChoice>().is_err());
    }

    #[test]
    fn flag_beats_file() {
        let flag = "ner".to_string();
        let file = "pos".to_string();
        let t: Option<Task> = pick("task", Some(&flag), Some(&file)).unwrap();
        assert_eq!(t, Some(Task::Ner));
        let t: Option<Task> = pick("task", None, Some(&file)).unwrap();
        assert_eq!(t, Some(Task::Pos));
        assert!(pick::<Task>("task", Some(&"xyz".to_string()), None).is_err());
    }

    #[test]
    fn table_variant_sets_the_profile() {
        let flags = crate::SchemaArgs {
            task: Some("pos".into()),
            schema: Some("pt".into()),
            variant: Some("paper-table-1".into()),
            profile: None,
            notation: None,
        };
        let choice = SchemaChoice::resolve(&flags, &FileConfig::default()).unwrap();
        assert_eq!(choice.profile, Profile::PaperTable1);
        assert_eq!(choice.variant, Variant::Default);
    }

    #[test]
    fn file_config_rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("task = \"pos\"\nseed = 3").is_ok());
        assert!(toml::from_str::<FileConfig>("sede = 3").is_err());
    }
}
