//! fault2flow turns fault-diagnosis logic written in a PASTA-style fault-tree
//! DSL (optionally imported from PlantUML mind maps) into n8n-compatible
//! workflow documents, then verifies, measures and evolutionarily optimizes
//! those artifacts.
//!
//! The pipeline, end to end:
//!
//! 1. [`mindmap`]: parse/emit PlantUML mind maps carrying gate and
//!    threshold annotations; a pluggable generator hook produces maps from
//!    regulation outlines.
//! 2. [`translate`]: deterministically convert an annotated mind map into a
//!    fault tree (with a pluggable correction hook).
//! 3. [`pasta`]: the fault-tree DSL itself: parser, canonical serializer,
//!    self-check and direct evaluation (the oracle semantics).
//! 4. [`compiler`]: lower a fault tree into a workflow graph by post-order
//!    traversal; every workflow node carries provenance back to the tree.
//! 5. [`workflow`]: the workflow IR and its bit-exact n8n JSON document
//!    serialization.
//! 6. [`executor`]: deterministic interpreter for workflow graphs,
//!    producing full execution traces.
//! 7. [`verify`]: synthesize test suites from the tree, run them against
//!    the workflow, iterate with a regeneration hook until green.
//! 8. [`metrics`]: topological consistency, end-to-end reachability
//!    coverage, exhaustive semantic fidelity and a readability score.
//! 9. [`evolve`]: multi-island evolutionary optimizer over tree genomes
//!    with an elite archive and deterministic rewrite mutators.





pub mod mindmap;
pub mod compiler;
pub mod evolve;
pub mod executor;
pub mod metrics;
pub mod pasta;
pub mod regions;
pub mod workflow;

pub mod rng;
pub mod testkit;
pub mod verify;
pub mod translate;


