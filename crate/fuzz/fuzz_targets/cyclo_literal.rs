#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // the parser must never panic, and every accepted value must round-trip
    // through the canonical printer
    if let Ok(value) = gencliff::parse_cyclo(text) {
        let printed = value.to_string();
        let reparsed = gencliff::parse_cyclo(&printed).expect("printer output reparses");
        assert_eq!(value, reparsed, "print/parse round trip");
    }
});
