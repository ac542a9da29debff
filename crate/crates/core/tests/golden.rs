//! Frozen transcript of one centralized trial; any change to instance
//! generation, channel draws, graph construction or tie-breaking shows here.

use securecast::central::{format_transcript, parse_transcript, RecoveryOptions, Variant};
use securecast::galois::FieldSpec;
use securecast::harness::{run_central_trial, CentralTrialSpec};

const GOLDEN: &str = include_str!("golden/central_n20_r10_p03_seed42.txt");

fn spec() -> CentralTrialSpec {
    CentralTrialSpec {
        n: 20,
        r: 10,
        field: FieldSpec::gf256(),
        m_len: 32,
        p: 0.3,
        variant: Variant::Basic,
    }
}

#[test]
fn central_transcript_matches_golden() {
    let metrics = run_central_trial(&spec(), 42, &RecoveryOptions::default()).unwrap();
    assert_eq!(format_transcript(&metrics.transcript), GOLDEN);
}

#[test]
fn golden_transcript_round_trips() {
    let parsed = parse_transcript(GOLDEN).unwrap();
    assert_eq!(parsed.len(), 20);
    assert_eq!(format_transcript(&parsed), GOLDEN);
    let metrics = run_central_trial(&spec(), 42, &RecoveryOptions::default()).unwrap();
    assert_eq!(parsed, metrics.transcript);
}
