#![no_main]

use libfuzzer_sys::fuzz_target;

// The PASTA parser must never panic, and anything it accepts must survive a
// canonical round trip.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(tree) = fault2flow::pasta::parse_pasta(text) {
        let canonical = fault2flow::pasta::emit_pasta(&tree);
        let reparsed = fault2flow::pasta::parse_pasta(&canonical)
            .expect("canonical form of an accepted tree must parse");
        assert!(reparsed.structurally_equal(&tree), "round trip changed the tree");
        assert_eq!(fault2flow::pasta::emit_pasta(&reparsed), canonical, "emit not idempotent");
    }
});
