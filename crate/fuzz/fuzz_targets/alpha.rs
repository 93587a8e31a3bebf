#![no_main]

use causal_abstraction::io::{parse_alpha_file, parse_hom_file, parse_model_file};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(alpha) = parse_alpha_file(text) else { return };
    let micro = parse_model_file(include_str!("../../samples/heart/micro.json")).unwrap();
    let target = parse_model_file(include_str!("../../samples/heart/macro-schema.json")).unwrap();
    let hom = parse_hom_file(include_str!("../../samples/heart/hom.json"))
        .unwrap()
        .resolve(&micro.dag, &target.dag)
        .unwrap();
    if alpha.taus.is_some() {
        let _ = alpha.resolve_taus(&micro.variables, &hom, &target.variables);
    } else {
        let _ = alpha.resolve_components(&hom);
    }
});
