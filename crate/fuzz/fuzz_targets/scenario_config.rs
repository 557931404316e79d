#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(s) = thinspec_cli::parse_scenario(text) {
            let again = serde_json::to_string(&s).unwrap();
            thinspec_cli::parse_scenario(&again).unwrap();
        }
    }
});
