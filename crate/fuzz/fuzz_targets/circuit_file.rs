#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // structural parse of untrusted circuit files must never panic
    let _ = gencliff::io::parse_circuit_file(text);
});
