//! Record a run, then replay it in both modes and against tampered logs.

mod common;

use capdr::replay::ReplayRecord;
use capdr::{load, replay, Checker, EngineConfig, ReplayError, ReplayLog};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

fn record(text: &str, cfg: EngineConfig) -> (String, ReplayLog) {
    let (_, r) = run_text(text, cfg);
    (r.outcome.verdict().to_string(), r.log)
}

fn replay_text(text: &str, log: &ReplayLog, strict: bool) -> capdr::DivergenceReport {
    let (c, s) = load(text).unwrap();
    let ck = Checker::from_aiger_text(text).unwrap();
    replay(&c, &s, &ck, log, strict).unwrap().1
}

#[test]
fn every_fixture_replays_exactly_in_both_modes() {
    for (name, text) in fixture_corpus() {
        for seed in [0u64, 9] {
            let cfg = EngineConfig {
                seed,
                ranker: capdr::Ranker::Random { seed },
                ..EngineConfig::default()
            };
            let (verdict, log) = record(&text, cfg);
            // the log must survive serialization untouched
            let log = ReplayLog::from_jsonl(&log.to_jsonl()).unwrap();
            log.verify().unwrap();
            for strict in [false, true] {
                let rep = replay_text(&text, &log, strict);
                assert!(rep.is_exact(), "{name} strict={strict}: {:?}", rep.divergence);
                assert_eq!(rep.replayed_verdict.as_deref(), Some(verdict.as_str()), "{name}");
                assert_eq!(rep.records_consumed, rep.records_total, "{name}");
                match verdict.as_str() {
                    "SAFE" => assert_eq!(rep.invariant_distance, Some(0.0), "{name}"),
                    "UNSAFE" => assert_eq!(rep.trace_identical, Some(true), "{name}"),
                    v => panic!("{name}: unexpected {v}"),
                }
                if !strict {
                    assert_eq!((rep.model_extractions, rep.core_extractions), (0, 0), "{name}");
                }
            }
        }
    }
}

#[test]
fn random_circuits_replay_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..60 {
        let nl = rng.gen_range(1..=5);
        let ni = rng.gen_range(0..=2);
        let ng = rng.gen_range(1..=10);
        let text = random_aag(&mut rng, nl, ni, ng);
        let (_, log) = record(&text, EngineConfig::default());
        for strict in [false, true] {
            let rep = replay_text(&text, &log, strict);
            assert!(rep.is_exact(), "{text}\nstrict={strict}: {:?}", rep.divergence);
        }
    }
}

fn reseal(rec: &ReplayRecord) -> ReplayRecord {
    ReplayRecord::new(rec.seq, rec.kind, rec.payload.clone())
}

#[test]
fn tampered_payloads_are_flagged_at_their_sequence_number() {
    let text = std::fs::read_to_string(fixtures_dir().join("counter3_bad.aag")).unwrap();
    let (_, log) = record(&text, EngineConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..25 {
        let j = rng.gen_range(0..log.records.len());
        let mut bad = log.clone();
        bad.records[j].payload = json!({"tampered": j});
        assert_eq!(bad.verify(), Err(ReplayError::DigestMismatch(j as u64)));
        let (c, s) = load(&text).unwrap();
        let ck = Checker::from_aiger_text(&text).unwrap();
        assert_eq!(
            replay(&c, &s, &ck, &bad, true).unwrap_err(),
            ReplayError::DigestMismatch(j as u64)
        );
    }
}

#[test]
fn resealed_edits_surface_as_divergence() {
    // Digest recomputed after the edit: the log verifies but the run diverges.
    let text = std::fs::read_to_string(fixtures_dir().join("mod6_counter3_safe.aag")).unwrap();
    let (_, log) = record(&text, EngineConfig::default());
    let j = log
        .records
        .iter()
        .position(|r| r.kind.is_artifact())
        .expect("some artifact");
    let mut bad = log.clone();
    bad.records[j].payload = json!({"tampered": true});
    bad.records[j] = reseal(&bad.records[j]);
    bad.verify().unwrap();
    let rep = replay_text(&text, &bad, true);
    assert_eq!(rep.divergence, Some(ReplayError::DigestMismatch(j as u64)));
}

#[test]
fn truncated_logs_run_dry() {
    let text = std::fs::read_to_string(fixtures_dir().join("counter4_bad.aag")).unwrap();
    let (_, mut log) = record(&text, EngineConfig::default());
    let keep = log.records.len() / 2;
    log.records.truncate(keep);
    let rep = replay_text(&text, &log, false);
    assert_eq!(rep.divergence, Some(ReplayError::LogExhausted(keep as u64)));
}

#[test]
fn replay_on_another_circuit_is_refused_at_the_first_record() {
    let a = std::fs::read_to_string(fixtures_dir().join("counter3_bad.aag")).unwrap();
    let b = std::fs::read_to_string(fixtures_dir().join("counter4_bad.aag")).unwrap();
    let (_, log) = record(&a, EngineConfig::default());
    for strict in [false, true] {
        let rep = replay_text(&b, &log, strict);
        assert_eq!(rep.divergence, Some(ReplayError::DigestMismatch(0)));
    }
}

#[test]
fn foreign_tool_version_is_rejected() {
    let text = std::fs::read_to_string(fixtures_dir().join("toy_a_safe.aag")).unwrap();
    let (_, mut log) = record(&text, EngineConfig::default());
    log.records[0].payload["tool_version"] = json!("capdr 0.0.0-other");
    log.records[0] = reseal(&log.records[0]);
    let (c, s) = load(&text).unwrap();
    let ck = Checker::from_aiger_text(&text).unwrap();
    assert!(matches!(
        replay(&c, &s, &ck, &log, false),
        Err(ReplayError::VersionMismatch { .. })
    ));
}
