#![no_main]

use causal_abstraction::io::{parse_hom_file, parse_model_file};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(hom) = parse_hom_file(text) else { return };
    let micro = parse_model_file(include_str!("../../samples/heart/micro.json")).unwrap();
    let target = parse_model_file(include_str!("../../samples/heart/macro-schema.json")).unwrap();
    if let Ok(h) = hom.resolve(&micro.dag, &target.dag) {
        let _ = h.validate();
    }
});
