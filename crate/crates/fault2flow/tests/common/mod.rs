//! Shared integration-test support: fixture paths, a cartesian brute-force
//! oracle independent of the library's region enumerator, and golden-file
//! helpers with a bless mode (`FAULT2FLOW_BLESS=1` rewrites goldens).

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use fault2flow::executor::execute;
use fault2flow::pasta::{evaluate, Assignment, FaultTree, ParamKind};
use fault2flow::workflow::Workflow;

pub fn fixture_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_path(rel: &str) -> PathBuf {
    fixture_root().join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    let path = fixture_path(rel);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

pub fn load_tree(name: &str) -> FaultTree {
    fault2flow::pasta::parse_pasta(&read_fixture(&format!("trees/{name}.pasta")))
        .unwrap_or_else(|e| panic!("fixture {name} must parse: {e}"))
}

pub const ALL_FIXTURES: [&str; 16] = [
    "three_ratio",
    "ratio_minimal",
    "ratio_pd_vs_discharge",
    "ratio_overheat_bands",
    "ratio_kofn_screen",
    "ratio_shared_screen",
    "ratio_chain_depth",
    "ratio_degenerate_wrap",
    "ratio_mixed_gates",
    "characteristic_gas",
    "gas_minimal",
    "gas_h2_discharge",
    "gas_co_aging",
    "gas_kofn_alarm",
    "gas_or_screen",
    "gas_nested",
];

/// Compare against a golden file; `FAULT2FLOW_BLESS=1` rewrites it instead.
pub fn assert_golden(rel: &str, actual: &str) {
    let path = fixture_path(rel);
    if std::env::var_os("FAULT2FLOW_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("golden {} missing ({e}); run with FAULT2FLOW_BLESS=1", rel));
    assert_eq!(actual, expected, "golden mismatch for {rel}");
}

/// Brute-force input grid, built independently of the library's region
/// realizer: for every measured parameter, candidate values derived from
/// every threshold that mentions it in any role (directly, as a ratio
/// numerator with unit denominator, or as a denominator), and the full
/// cartesian product is enumerated.
pub fn oracle_grid(tree: &FaultTree) -> Vec<Assignment> {
    const DELTA: f64 = 1e-4;
    let measured: Vec<&str> =
        tree.schema().iter().filter(|p| p.is_measured()).map(|p| p.name.as_str()).collect();

    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for name in &measured {
        let mut values = vec![1.0];
        for (_, cond) in tree.basics() {
            match tree.param(&cond.parameter).map(|p| &p.kind) {
                Some(ParamKind::Measured) if cond.parameter == *name => {
                    values.extend([
                        cond.threshold - DELTA,
                        cond.threshold,
                        cond.threshold + DELTA,
                    ]);
                }
                Some(ParamKind::Derived { numerator, denominator }) => {
                    if numerator == name {
                        values.extend([
                            cond.threshold - DELTA,
                            cond.threshold,
                            cond.threshold + DELTA,
                        ]);
                    }
                    if denominator == name {
                        values.extend([0.5, 2.0]);
                    }
                }
                _ => {}
            }
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        candidates.push(values);
    }

    let total: usize = candidates.iter().map(Vec::len).product();
    assert!(total <= 2_000_000, "oracle grid too large: {total}");
    let mut out = Vec::with_capacity(total);
    for mut index in 0..total {
        let mut input = Assignment::new();
        let mut valid = true;
        for (values, name) in candidates.iter().zip(&measured) {
            let v = values[index % values.len()];
            index /= values.len();
            if input.set(name.to_string(), v).is_err() {
                valid = false;
            }
        }
        if valid {
            out.push(input);
        }
    }
    out
}

/// Signature of a leaf-truth region: the truth value of every basic event
/// under an input, or `None` when evaluation errors (zero denominators).
pub fn region_signature(tree: &FaultTree, input: &Assignment) -> Option<Vec<bool>> {
    tree.leaf_ids()
        .iter()
        .map(|id| {
            let cond = match tree.node(id) {
                Some(fault2flow::pasta::Node::BasicEvent { condition }) => condition,
                _ => unreachable!(),
            };
            let value = param_value(tree, input, &cond.parameter)?;
            Some(cond.op.test(value, cond.threshold))
        })
        .collect()
}

fn param_value(tree: &FaultTree, input: &Assignment, name: &str) -> Option<f64> {
    match &tree.param(name)?.kind {
        ParamKind::Measured => input.get(name),
        ParamKind::Derived { numerator, denominator } => {
            let den = input.get(denominator)?;
            if den == 0.0 {
                return None;
            }
            Some(input.get(numerator)? / den)
        }
    }
}

/// Assert the evaluator and the executor agree on every grid input, and
/// report how many distinct leaf regions the grid exercised.
pub fn assert_oracle_agreement(tree: &FaultTree, w: &Workflow) -> usize {
    let grid = oracle_grid(tree);
    let mut regions: BTreeSet<Vec<bool>> = BTreeSet::new();
    for input in &grid {
        let expected = evaluate(tree, input);
        let actual = execute(w, input);
        match (&expected, &actual) {
            (Ok(e), Ok(t)) => {
                assert_eq!(
                    *e, t.triggered,
                    "oracle disagreement on {:?} (tree {})",
                    input,
                    tree.name()
                );
            }
            (Err(_), Err(_)) => {}
            (e, a) => panic!(
                "route error mismatch on {:?} (tree {}): evaluate={e:?} execute={a:?}",
                input,
                tree.name()
            ),
        }
        if let Some(sig) = region_signature(tree, input) {
            regions.insert(sig);
        }
    }
    regions.len()
}
