#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(map) = fault2flow::mindmap::parse_plantuml(text) {
        let canonical = fault2flow::mindmap::emit_plantuml(&map);
        let reparsed = fault2flow::mindmap::parse_plantuml(&canonical)
            .expect("canonical form of an accepted map must parse");
        assert_eq!(reparsed, map, "round trip changed the map");
    }
});
