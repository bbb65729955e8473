//! Next-symbol scorers. A scorer sees the sentence, the generated prefix and
//! the candidate symbols, and returns one real score per candidate.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::structure::OutputSequence;

/// Default time an external scorer gets to answer one request.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// One scoring step, serialized verbatim onto the external-scorer pipe.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScoreRequest<'a> {
    pub tokens: &'a [String],
    pub prefix: &'a [String],
    pub candidates: &'a [String],
}

/// The external scorer's reply. `error` lets a scorer reject a request
/// without dying.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScoreResponse {
    #[serde(default)]
    pub scores: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("step {step}: gold symbol {symbol:?} is not among the candidates {candidates:?}")]
    NotACandidate {
        step: usize,
        symbol: String,
        candidates: Vec<String>,
    },
    #[error("step {step}: prefix runs past the end of the gold sequence")]
    PastGold { step: usize },
    #[error("scorer returned {got} scores for {expected} candidates")]
    WrongCount { expected: usize, got: usize },
    #[error("scorer returned a non-finite score for candidate {0:?}")]
    NonFinite(String),
    #[error("malformed scorer response {line:?}: {reason}")]
    Malformed { line: String, reason: String },
    #[error("scorer reported an error: {0}")]
    Remote(String),
    #[error("scorer process exited")]
    Exited,
    #[error("scorer did not answer within {0:?}")]
    Timeout(Duration),
    #[error("could not start scorer {command:?}: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scorer pipe failed: {0}")]
    Io(#[from] std::io::Error),
}

pub trait Scorer: Send {
    fn score(&mut self, request: &ScoreRequest<'_>) -> Result<Vec<f64>, ScorerError>;
}

/// Checks that `scores` lines up with `candidates` and is finite.
pub fn check_scores(candidates: &[String], scores: &[f64]) -> Result<(), ScorerError> {
    if scores.len() != candidates.len() {
        return Err(ScorerError::WrongCount {
            expected: candidates.len(),
            got: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(ScorerError::NonFinite(candidates[i].clone()));
    }
    Ok(())
}

/// Scores 1 for the gold continuation of the prefix and 0 for everything
/// else. A prefix that still agrees with the gold sequence whose next gold
/// symbol is not offered is an error, which makes the oracle double as a
/// membership check.
#[derive(Debug, Clone)]
pub struct OracleScorer {
    gold: OutputSequence,
}

impl OracleScorer {
    pub fn new(gold: OutputSequence) -> Self {
        OracleScorer { gold }
    }
}

impl Scorer for OracleScorer {
    fn score(&mut self, request: &ScoreRequest<'_>) -> Result<Vec<f64>, ScorerError> {
        let gold = self.gold.symbols();
        let step = request.prefix.len();
        let on_track = gold.get(..step) == Some(request.prefix);
        if !on_track {
            return Ok(vec![0.0; request.candidates.len()]);
        }
        let Some(next) = gold.get(step) else {
            return Err(ScorerError::PastGold { step });
        };
        if !request.candidates.contains(next) {
            return Err(ScorerError::NotACandidate {
                step,
                symbol: next.clone(),
                candidates: request.candidates.to_vec(),
            });
        }
        Ok(request
            .candidates
            .iter()
            .map(|c| if c == next { 1.0 } else { 0.0 })
            .collect())
    }
}

/// Independent uniform scores from a seeded stream.
#[derive(Debug, Clone)]
pub struct RandomScorer {
    rng: ChaCha8Rng,
}

impl RandomScorer {
    pub fn new(seed: u64) -> Self {
        RandomScorer {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Scorer for RandomScorer {
    fn score(&mut self, request: &ScoreRequest<'_>) -> Result<Vec<f64>, ScorerError> {
        Ok(request.candidates.iter().map(|_| self.rng.gen::<f64>()).collect())
    }
}

/// A child process speaking the JSON-lines protocol: one [`ScoreRequest`]
/// per line on its stdin, one [`ScoreResponse`] per line on its stdout.
pub struct ExternalScorer {
    command: String,
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl std::fmt::Debug for ExternalScorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalScorer")
            .field("command", &self.command)
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl ExternalScorer {
    /// Starts `command` under `sh -c`.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, ScorerError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| ScorerError::Spawn {
                command: command.to_string(),
                source,
            })?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let failed = line.is_err();
                if tx.send(line).is_err() || failed {
                    break;
                }
            }
        });
        Ok(ExternalScorer {
            command: command.to_string(),
            child,
            stdin,
            lines: rx,
            timeout,
        })
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn read_line(&mut self) -> Result<String, ScorerError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(ScorerError::Io(e)),
            Err(RecvTimeoutError::Timeout) => Err(ScorerError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(ScorerError::Exited),
        }
    }
}

impl Scorer for ExternalScorer {
    fn score(&mut self, request: &ScoreRequest<'_>) -> Result<Vec<f64>, ScorerError> {
        let mut line = serde_json::to_string(request).expect("requests always serialize");
        line.push('\n');
        if let Err(e) = self.stdin.write_all(line.as_bytes()).and_then(|_| self.stdin.flush()) {
            return Err(match e.kind() {
                std::io::ErrorKind::BrokenPipe => ScorerError::Exited,
                _ => ScorerError::Io(e),
            });
        }
        let reply = loop {
            let reply = self.read_line()?;
            if !reply.trim().is_empty() {
                break reply;
            }
        };
        let response: ScoreResponse = serde_json::from_str(&reply).map_err(|e| ScorerError::Malformed {
            line: reply.clone(),
            reason: e.to_string(),
        })?;
        if let Some(message) = response.error {
            return Err(ScorerError::Remote(message));
        }
        let scores = response.scores.ok_or_else(|| ScorerError::Malformed {
            line: reply.clone(),
            reason: "missing \"scores\"".to_string(),
        })?;
        check_scores(request.candidates, &scores)?;
        Ok(scores)
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn oracle_scores_gold_symbol() {
        let mut o = OracleScorer::new(OutputSequence::parse("A B").unwrap());
        let tokens = strings("x y");
        let cands = strings("A B");
        let req = ScoreRequest {
            tokens: &tokens,
            prefix: &[],
            candidates: &cands,
        };
        assert_eq!(o.score(&req).unwrap(), vec![1.0, 0.0]);
        let prefix = strings("B");
        let off = ScoreRequest { prefix: &prefix, ..req };
        assert_eq!(o.score(&off).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn oracle_names_the_missing_step() {
        let mut o = OracleScorer::new(OutputSequence::parse("A B").unwrap());
        let tokens = strings("x y");
        let prefix = strings("A");
        let cands = strings("A C");
        let err = o
            .score(&ScoreRequest {
                tokens: &tokens,
                prefix: &prefix,
                candidates: &cands,
            })
            .unwrap_err();
        assert!(matches!(err, ScorerError::NotACandidate { step: 1, ref symbol, .. } if symbol == "B"));
    }

    #[test]
    fn random_is_seeded() {
        let tokens = strings("x");
        let cands = strings("a b c");
        let req = ScoreRequest {
            tokens: &tokens,
            prefix: &[],
            candidates: &cands,
        };
        let a = RandomScorer::new(7).score(&req).unwrap();
        let b = RandomScorer::new(7).score(&req).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, RandomScorer::new(8).score(&req).unwrap());
    }

    #[test]
    fn request_wire_format() {
        let tokens = strings("x");
        let prefix = strings("A");
        let cands = strings("</s>");
        let req = ScoreRequest {
            tokens: &tokens,
            prefix: &prefix,
            candidates: &cands,
        };
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"tokens":["x"],"prefix":["A"],"candidates":["</s>"]}"#
        );
    }

    #[test]
    fn score_checks() {
        let c = strings("a b");
        assert!(check_scores(&c, &[1.0]).is_err());
        assert!(check_scores(&c, &[1.0, f64::NAN]).is_err());
        assert!(check_scores(&c, &[1.0, -3.0]).is_ok());
    }
}
