#![no_main]
use libfuzzer_sys::fuzz_target;
use securecast::idnc::BitGraph;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(graph) = BitGraph::parse_edge_list(text) {
        assert!(graph.is_symmetric());
        let again = BitGraph::parse_edge_list(&graph.to_edge_list()).expect("edge list round-trips");
        assert_eq!(again.edges().collect::<Vec<_>>(), graph.edges().collect::<Vec<_>>());
    }
});
