#![no_main]
use libfuzzer_sys::fuzz_target;
use securecast::codec::Instance;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(instance) = Instance::parse(text) {
        let again = Instance::parse(&instance.dump()).expect("dump of a parsed instance parses");
        assert_eq!(again, instance);
    }
});
