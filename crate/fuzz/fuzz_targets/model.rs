#![no_main]

use causal_abstraction::io::{model_to_json, parse_model, parse_model_file};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = parse_model_file(text) else { return };
    let Ok(model) = file.into_model() else { return };
    if !model.validate(1e-9).is_valid() {
        return;
    }
    let _ = model.joint_distribution(4096);
    // a valid model survives a save/load round trip unchanged
    let saved = model_to_json(&model);
    let reloaded = parse_model(&saved).expect("saved model parses");
    assert_eq!(model_to_json(&reloaded), saved);
});
