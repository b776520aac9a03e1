#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(suite) = fault2flow::verify::suite_from_json(text) {
        let json = fault2flow::verify::suite_to_json(&suite);
        let back = fault2flow::verify::suite_from_json(&json).expect("own output must parse");
        assert_eq!(back, suite, "round trip changed the suite");
    }
});
