#![no_main]

use causal_abstraction::io::{parse_intervention, parse_model};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(arg) = std::str::from_utf8(data) else { return };
    let model = parse_model(include_str!("../../samples/heart/micro.json")).unwrap();
    if let Ok((var, dist)) = parse_intervention(arg, &model, 1e-9) {
        let cut = model.intervene(&[(var, dist)].into_iter().collect()).expect("parsed intervention applies");
        let _ = cut.joint_distribution(4096);
    }
});
