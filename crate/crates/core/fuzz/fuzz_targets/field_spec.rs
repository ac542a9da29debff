#![no_main]
use libfuzzer_sys::fuzz_target;
use securecast::galois::{Field, FieldSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = FieldSpec::parse(text) {
        assert_eq!(FieldSpec::parse(&spec.to_string()), Ok(spec));
        let field = Field::new(spec);
        for a in field.nonzero().take(64) {
            assert_eq!(field.mul(a, field.inv(a).unwrap()).0, 1);
        }
    }
});
