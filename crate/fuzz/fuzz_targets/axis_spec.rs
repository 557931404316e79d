#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(axis) = thinspec_cli::parse_axis(text) {
            let _ = axis.resolve();
        }
    }
});
