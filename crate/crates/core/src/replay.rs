//! Hashed replay logs and the tape the engine records to or replays from.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::certs::{write_witness, Checker};
use crate::engine::{EngineConfig, Outcome, Pdr};
use crate::frontend::{AigerCircuit, TransitionSystem};
use crate::logic::{Clause, Lit};
use crate::metrics::jaccard_distance;

pub const TOOL_VERSION: &str = concat!("capdr ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("replay log ended before the run did (at record {0})")]
    LogExhausted(u64),
    #[error("record {0} does not match")]
    DigestMismatch(u64),
    #[error("guard outcome at record {0} does not match")]
    GuardOutcomeMismatch(u64),
    #[error("log was written by {found}, this is {expected}")]
    VersionMismatch { expected: String, found: String },
    #[error("replay log, line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Config,
    Seed,
    CtiCube,
    PredCube,
    UnsatCore,
    CandidateSet,
    ActionAttempt,
    GuardOutcome,
    ContextHash,
    Certificate,
}

impl RecordKind {
    /// Kinds whose payload comes from the solver and can be reused in place
    /// of a query.
    pub fn is_artifact(self) -> bool {
        matches!(
            self,
            RecordKind::CtiCube | RecordKind::PredCube | RecordKind::UnsatCore
        )
    }
}

/// SHA-256 over the compact JSON form of a payload. Object keys serialize
/// in sorted order, so equal payloads hash equally.
pub fn payload_digest(payload: &Value) -> String {
    let bytes = serde_json::to_vec(payload).expect("json values serialize");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub seq: u64,
    pub kind: RecordKind,
    pub payload: Value,
    pub digest: String,
}

impl ReplayRecord {
    pub fn new(seq: u64, kind: RecordKind, payload: Value) -> Self {
        let digest = payload_digest(&payload);
        ReplayRecord {
            seq,
            kind,
            payload,
            digest,
        }
    }

    pub fn digest_ok(&self) -> bool {
        payload_digest(&self.payload) == self.digest
    }
}

/// An append-only sequence of records.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReplayLog {
    pub records: Vec<ReplayRecord>,
}

impl ReplayLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    /// Parse without integrity checks; see [`ReplayLog::verify`].
    pub fn from_jsonl(text: &str) -> Result<Self, ReplayError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: ReplayRecord = serde_json::from_str(line).map_err(|e| ReplayError::Malformed {
                line: i + 1,
                msg: e.to_string(),
            })?;
            records.push(r);
        }
        Ok(ReplayLog { records })
    }

    /// Sequence numbers must count up from zero and every digest must match
    /// its payload. Reports the first offending record.
    pub fn verify(&self) -> Result<(), ReplayError> {
        for (i, r) in self.records.iter().enumerate() {
            if r.seq != i as u64 || !r.digest_ok() {
                return Err(ReplayError::DigestMismatch(i as u64));
            }
        }
        Ok(())
    }

    /// The payload of the leading config record, after checking the tool
    /// version it names.
    pub fn config(&self) -> Result<&Value, ReplayError> {
        let first = self.records.first().ok_or(ReplayError::LogExhausted(0))?;
        if first.kind != RecordKind::Config {
            return Err(ReplayError::DigestMismatch(0));
        }
        let found = first.payload["tool_version"].as_str().unwrap_or("").to_string();
        if found != TOOL_VERSION {
            return Err(ReplayError::VersionMismatch {
                expected: TOOL_VERSION.to_string(),
                found,
            });
        }
        Ok(&first.payload)
    }

    pub fn certificate(&self) -> Option<&ReplayRecord> {
        self.records
            .iter()
            .rev()
            .find(|r| r.kind == RecordKind::Certificate)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TapeMode {
    Record,
    /// Consume recorded solver artifacts instead of querying.
    Reuse,
    /// Recompute solver artifacts and compare them with the log.
    Strict,
}

/// The engine's view of the log. In record mode it appends; in replay
/// modes it walks the recorded sequence and reports the first divergence.
#[derive(Clone, Debug)]
pub struct Tape {
    mode: TapeMode,
    records: Vec<ReplayRecord>,
    pos: usize,
}

impl Tape {
    pub fn recorder() -> Self {
        Tape {
            mode: TapeMode::Record,
            records: Vec::new(),
            pos: 0,
        }
    }

    /// A replaying tape over a verified log.
    pub fn replayer(log: ReplayLog, strict: bool) -> Result<Self, ReplayError> {
        log.verify()?;
        log.config()?;
        Ok(Tape {
            mode: if strict { TapeMode::Strict } else { TapeMode::Reuse },
            records: log.records,
            pos: 0,
        })
    }

    pub fn mode(&self) -> TapeMode {
        self.mode
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.records.len().saturating_sub(self.pos)
    }

    pub fn into_log(self) -> ReplayLog {
        ReplayLog {
            records: self.records,
        }
    }

    pub fn log(&self) -> &[ReplayRecord] {
        &self.records
    }

    fn expect_next(&self, kind: RecordKind) -> Result<&ReplayRecord, ReplayError> {
        let seq = self.pos as u64;
        let r = self.records.get(self.pos).ok_or(ReplayError::LogExhausted(seq))?;
        if r.kind != kind {
            return Err(ReplayError::DigestMismatch(seq));
        }
        Ok(r)
    }

    /// Record a decision, or check it against the log.
    pub fn note(&mut self, kind: RecordKind, payload: Value) -> Result<(), ReplayError> {
        if self.mode == TapeMode::Record {
            let seq = self.records.len() as u64;
            self.records.push(ReplayRecord::new(seq, kind, payload));
            return Ok(());
        }
        let seq = self.pos as u64;
        let r = self.expect_next(kind)?;
        if r.digest != payload_digest(&payload) {
            return Err(if kind == RecordKind::GuardOutcome {
                ReplayError::GuardOutcomeMismatch(seq)
            } else {
                ReplayError::DigestMismatch(seq)
            });
        }
        self.pos += 1;
        Ok(())
    }

    /// Obtain a solver artifact. Record mode computes and appends; reuse
    /// mode returns the logged payload without calling `compute`; strict
    /// mode computes and requires the digest to match the log.
    pub fn artifact<E: From<ReplayError>>(
        &mut self,
        kind: RecordKind,
        compute: impl FnOnce() -> Result<Value, E>,
    ) -> Result<Value, E> {
        debug_assert!(kind.is_artifact());
        match self.mode {
            TapeMode::Record => {
                let payload = compute()?;
                self.note(kind, payload.clone())?;
                Ok(payload)
            }
            TapeMode::Reuse => {
                let payload = self.expect_next(kind)?.payload.clone();
                self.pos += 1;
                Ok(payload)
            }
            TapeMode::Strict => {
                self.expect_next(kind)?;
                let payload = compute()?;
                self.note(kind, payload.clone())?;
                Ok(payload)
            }
        }
    }

    /// Take the next record if it is a certificate; replay compares these
    /// softly instead of by digest.
    pub fn take_certificate(&mut self) -> Result<Value, ReplayError> {
        let payload = self.expect_next(RecordKind::Certificate)?.payload.clone();
        self.pos += 1;
        Ok(payload)
    }
}

/// What a replay found.
#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceReport {
    /// First divergence, if any.
    pub divergence: Option<ReplayError>,
    pub records_consumed: usize,
    pub records_total: usize,
    pub recorded_verdict: Option<String>,
    pub replayed_verdict: Option<String>,
    /// Jaccard distance between recorded and replayed invariants.
    pub invariant_distance: Option<f64>,
    /// Byte equality of recorded and replayed witnesses.
    pub trace_identical: Option<bool>,
    /// Solver models and cores extracted during the replay.
    pub model_extractions: u64,
    pub core_extractions: u64,
}

impl DivergenceReport {
    pub fn is_exact(&self) -> bool {
        self.divergence.is_none()
    }
}

fn invariant_of(payload: &Value) -> Vec<Clause> {
    payload["invariant"]
        .as_array()
        .map(|cs| {
            cs.iter()
                .map(|c| {
                    Clause::new(
                        c.as_array()
                            .map(|ls| {
                                ls.iter()
                                    .filter_map(|l| l.as_i64().and_then(Lit::from_dimacs))
                                    .collect()
                            })
                            .unwrap_or_default(),
                    )
                })
                .collect()
        })
        .unwrap_or_default()
}

/// Re-execute the run recorded in `log` on the given instance. Reuse mode
/// feeds recorded solver artifacts back to the engine; strict mode
/// recomputes them and compares digests. Timing is never compared.
///
/// Errors are reserved for logs that cannot be replayed at all (malformed,
/// tampered, wrong version); divergence during the run is reported.
pub fn replay(
    circuit: &AigerCircuit,
    sys: &TransitionSystem,
    checker: &Checker,
    log: &ReplayLog,
    strict: bool,
) -> Result<(Option<Outcome>, DivergenceReport), ReplayError> {
    let tape = Tape::replayer(log.clone(), strict)?;
    let cfg: EngineConfig =
        serde_json::from_value(log.config()?["config"].clone()).map_err(|e| ReplayError::Malformed {
            line: 1,
            msg: e.to_string(),
        })?;
    let recorded = log.certificate().map(|r| r.payload.clone());
    let mut report = DivergenceReport {
        divergence: None,
        records_consumed: 0,
        records_total: log.records.len(),
        recorded_verdict: recorded
            .as_ref()
            .and_then(|p| p["verdict"].as_str().map(str::to_string)),
        replayed_verdict: None,
        invariant_distance: None,
        trace_identical: None,
        model_extractions: 0,
        core_extractions: 0,
    };
    let engine = Pdr::with_tape(circuit, sys, checker, cfg, tape);
    let (result, mut tape) = match engine.run_with_tape() {
        Ok(x) => x,
        Err((e, consumed, stats)) => {
            report.divergence = Some(e);
            report.records_consumed = consumed;
            report.model_extractions = stats.model_extractions;
            report.core_extractions = stats.core_extractions;
            return Ok((None, report));
        }
    };
    report.model_extractions = result.stats.model_extractions;
    report.core_extractions = result.stats.core_extractions;
    report.replayed_verdict = Some(result.outcome.verdict().to_string());
    let cert_seq = tape.position() as u64;
    match tape.take_certificate() {
        Err(e) => report.divergence = Some(e),
        Ok(payload) => {
            let same_verdict = payload["verdict"].as_str() == Some(result.outcome.verdict());
            let same_artifact = match &result.outcome {
                Outcome::Safe(_) => {
                    let d = jaccard_distance(&invariant_of(&payload), result.outcome.invariant().unwrap());
                    report.invariant_distance = Some(d);
                    d == 0.0
                }
                Outcome::Unsafe(_) => {
                    let same = payload["witness"].as_str()
                        == Some(write_witness(result.outcome.trace().unwrap()).as_str());
                    report.trace_identical = Some(same);
                    same
                }
                Outcome::Fail(r) => payload["reason"] == serde_json::to_value(r).unwrap(),
            };
            if !(same_verdict && same_artifact) {
                report.divergence = Some(ReplayError::DigestMismatch(cert_seq));
            } else if tape.remaining() > 0 {
                report.divergence = Some(ReplayError::DigestMismatch(tape.position() as u64));
            }
        }
    }
    report.records_consumed = tape.position();
    Ok((Some(result.outcome), report))
}
