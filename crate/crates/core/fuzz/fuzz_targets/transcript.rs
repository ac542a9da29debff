#![no_main]
use libfuzzer_sys::fuzz_target;
use securecast::central::{format_transcript, parse_transcript};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_transcript(text) {
        let again = parse_transcript(&format_transcript(&records)).expect("formatted transcript parses");
        assert_eq!(again, records);
    }
});
