#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = thinspec_cli::parse_sweep(text) {
            if let Ok(points) = spec.points() {
                assert!(points.len() <= spec.max_points);
            }
        }
    }
});
