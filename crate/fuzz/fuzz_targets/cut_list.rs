#![no_main]

use causal_abstraction::io::{parse_cut_list, parse_model_file};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let micro = parse_model_file(include_str!("../../samples/heart/micro.json")).unwrap();
    let _ = parse_cut_list(text, &micro.dag);
});
