#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(workflow) = fault2flow::workflow::import_n8n(text) {
        // Accepted documents may still fail validation (foreign node types,
        // missing branches); only valid ones are exportable, and those must
        // hit the export∘import∘export fixpoint.
        if let Ok(doc) = fault2flow::workflow::export_n8n(&workflow) {
            let back = fault2flow::workflow::import_n8n(&doc).expect("own export must import");
            assert_eq!(back, workflow, "round trip changed the workflow");
            assert_eq!(
                fault2flow::workflow::export_n8n(&back).expect("still valid"),
                doc,
                "export not a fixpoint"
            );
        }
    }
});
