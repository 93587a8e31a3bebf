#![no_main]

use causal_abstraction::abstraction::check_homogeneity;
use causal_abstraction::io::parse_channel_file;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = parse_channel_file(text) {
        let _ = check_homogeneity(&file.f, &file.tau_x, &file.tau_y, 1e-9);
    }
});
