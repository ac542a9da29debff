//! Replays the checked-in fuzz corpus through the same round-trip checks the
//! fuzz targets make, so the seeds stay meaningful under plain `cargo test`.

use std::path::Path;

use securecast::central::{format_transcript, parse_transcript};
use securecast::codec::Instance;
use securecast::galois::FieldSpec;
use securecast::harness::ExperimentConfig;
use securecast::idnc::BitGraph;

fn seeds(target: &str) -> Vec<String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| std::fs::read_to_string(e.unwrap().path()).unwrap())
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn instance_seeds_round_trip() {
    for text in seeds("instance") {
        let inst = Instance::parse(&text).unwrap();
        assert_eq!(Instance::parse(&inst.dump()).unwrap(), inst);
    }
}

#[test]
fn config_seeds_are_valid() {
    for text in seeds("config") {
        ExperimentConfig::from_toml(&text).unwrap().validate().unwrap();
    }
}

#[test]
fn transcript_seeds_round_trip() {
    for text in seeds("transcript") {
        let records = parse_transcript(&text).unwrap();
        assert_eq!(parse_transcript(&format_transcript(&records)).unwrap(), records);
    }
}

#[test]
fn edge_list_seeds_round_trip() {
    for text in seeds("edge_list") {
        let g = BitGraph::parse_edge_list(&text).unwrap();
        let again = BitGraph::parse_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(again.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }
}

#[test]
fn field_spec_seeds_round_trip() {
    for text in seeds("field_spec") {
        let spec = FieldSpec::parse(&text).unwrap();
        assert_eq!(FieldSpec::parse(&spec.to_string()).unwrap(), spec);
    }
}
