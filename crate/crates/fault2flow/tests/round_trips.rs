//! Round-trip and algebraic properties over generated artifacts.

mod common;

use fault2flow::mindmap::{emit_plantuml, parse_plantuml};
use fault2flow::pasta::{
    emit_pasta, evaluate, parse_pasta, Assignment, FaultTree, GateKind, Node,
};
use fault2flow::rng::DetRng;
use fault2flow::testkit::{random_mindmap, random_tree, TreeGenConfig};
use proptest::prelude::*;

#[test]
fn pasta_round_trip_on_seeded_random_trees() {
    let mut rng = DetRng::new(500);
    let cfg = TreeGenConfig::default();
    for _ in 0..200 {
        let tree = random_tree(&mut rng, &cfg);
        let emitted = emit_pasta(&tree);
        let reparsed = parse_pasta(&emitted).unwrap();
        assert!(reparsed.structurally_equal(&tree));
        assert_eq!(emit_pasta(&reparsed), emitted);
    }
}

#[test]
fn plantuml_round_trip_on_seeded_random_maps() {
    let mut rng = DetRng::new(501);
    for _ in 0..200 {
        let map = random_mindmap(&mut rng, 6, 5);
        let emitted = emit_plantuml(&map);
        let reparsed = parse_plantuml(&emitted).unwrap();
        assert_eq!(reparsed, map);
        assert_eq!(emit_plantuml(&reparsed), emitted);
    }
}

fn seeded_inputs(tree: &FaultTree, count: usize, seed: u64) -> Vec<Assignment> {
    let mut rng = DetRng::new(seed);
    let measured: Vec<String> = tree
        .schema()
        .iter()
        .filter(|p| p.is_measured())
        .map(|p| p.name.clone())
        .collect();
    (0..count)
        .map(|_| {
            measured
                .iter()
                .map(|p| (p.clone(), rng.next_range(-10.0, 200.0)))
                .collect()
        })
        .collect()
}

fn shuffle_children(tree: &FaultTree, seed: u64) -> FaultTree {
    // Fisher-Yates per gate, rebuilt through the public parser path.
    let mut rng = DetRng::new(seed);
    let src = emit_pasta(tree);
    let mut lines: Vec<String> = Vec::new();
    for line in src.lines() {
        if let Some(rest) = line.strip_prefix("gate ") {
            if let Some((head, list)) = rest.split_once('(') {
                let inner = list.trim_end_matches(')');
                // kofn keeps its leading `k;` intact.
                let (prefix, items) = match inner.split_once(';') {
                    Some((k, items)) => (format!("{k};"), items),
                    None => (String::new(), inner),
                };
                let mut ids: Vec<&str> = items.split(',').map(str::trim).collect();
                for i in (1..ids.len()).rev() {
                    ids.swap(i, rng.next_index(i + 1));
                }
                lines.push(format!("gate {}({}{})", head.trim(), prefix, ids.join(", ")));
                continue;
            }
        }
        lines.push(line.to_string());
    }
    parse_pasta(&(lines.join("\n") + "\n")).expect("shuffled source stays valid")
}

#[test]
fn evaluation_is_invariant_under_child_reorder() {
    let mut rng = DetRng::new(77);
    let cfg = TreeGenConfig::default();
    for round in 0..20 {
        let tree = random_tree(&mut rng, &cfg);
        let shuffled = shuffle_children(&tree, 9000 + round);
        for input in seeded_inputs(&tree, 100, 31 + round) {
            let a = evaluate(&tree, &input);
            let b = evaluate(&shuffled, &input);
            assert_eq!(a.ok(), b.ok());
        }
    }
}

#[test]
fn or_only_trees_are_monotone() {
    // Enlarging the set of true basic events never removes a triggered
    // fault class. Exercised on the bundled OR-only tree by point-wise
    // domination: raising values of `>=`-style leaves only adds faults.
    let tree = common::load_tree("gas_or_screen");
    let low: Assignment =
        [("h2", 100.0), ("ch4", 50.0), ("c2h2", 20.0)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let mut rng = DetRng::new(11);
    for _ in 0..100 {
        let bumped: Assignment = low
            .iter()
            .map(|(k, v)| (k.to_string(), v + rng.next_range(0.0, 500.0)))
            .collect();
        let before = evaluate(&tree, &low).unwrap();
        let after = evaluate(&tree, &bumped).unwrap();
        assert!(before.is_subset(&after), "monotonicity violated: {before:?} ⊄ {after:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pasta_round_trip_proptest(seed in any::<u64>()) {
        let mut rng = DetRng::new(seed);
        let tree = random_tree(&mut rng, &TreeGenConfig::default());
        let reparsed = parse_pasta(&emit_pasta(&tree)).unwrap();
        prop_assert!(reparsed.structurally_equal(&tree));
    }

    #[test]
    fn plantuml_round_trip_proptest(seed in any::<u64>()) {
        let mut rng = DetRng::new(seed);
        let map = random_mindmap(&mut rng, 6, 5);
        prop_assert_eq!(parse_plantuml(&emit_plantuml(&map)).unwrap(), map);
    }

    #[test]
    fn n8n_round_trip_proptest(seed in any::<u64>()) {
        use fault2flow::compiler::{compile, CompileOptions};
        use fault2flow::workflow::{export_n8n, import_n8n};
        let mut rng = DetRng::new(seed);
        let tree = random_tree(&mut rng, &TreeGenConfig::default());
        if let Ok(w) = compile(&tree, &CompileOptions::default()) {
            let doc = export_n8n(&w).unwrap();
            let back = import_n8n(&doc).unwrap();
            prop_assert_eq!(&back, &w);
            prop_assert_eq!(export_n8n(&back).unwrap(), doc);
        }
    }

    #[test]
    fn kofn_threshold_semantics(k in 1usize..4, truths in proptest::collection::vec(any::<bool>(), 4)) {
        // Direct check of the k-of-n counting semantics against a literal count.
        let mut src = String::from("tree d\nparam x1 unit \"\"\nparam x2 unit \"\"\nparam x3 unit \"\"\nparam x4 unit \"\"\n");
        for i in 1..=4 {
            src.push_str(&format!("basic b{i} : x{i} > 0\n"));
        }
        src.push_str(&format!("gate g = kofn({k}; b1, b2, b3, b4)\ntop f = g\n"));
        let tree = parse_pasta(&src).unwrap();
        let input: Assignment = truths
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("x{}", i + 1), if *t { 1.0 } else { -1.0 }))
            .collect();
        let fired = evaluate(&tree, &input).unwrap().contains("f");
        let count = truths.iter().filter(|t| **t).count();
        prop_assert_eq!(fired, count >= k);
    }
}

#[test]
fn dag_shared_children_are_permitted_and_stable() {
    let tree = common::load_tree("ratio_shared_screen");
    // discharge_signature is referenced by a top event and by another gate.
    let references = tree
        .nodes()
        .filter(|(_, n)| match n {
            Node::TopEvent { child, .. } => child == "discharge_signature",
            Node::Gate { children, .. } => children.iter().any(|c| c == "discharge_signature"),
            _ => false,
        })
        .count();
    assert_eq!(references, 2);
    let reparsed = parse_pasta(&emit_pasta(&tree)).unwrap();
    assert!(reparsed.structurally_equal(&tree));
}

#[test]
fn kofn_gate_kind_survives_round_trips() {
    let tree = common::load_tree("gas_kofn_alarm");
    match tree.node("gas_vote").unwrap() {
        Node::Gate { kind: GateKind::KofN(3), children } => assert_eq!(children.len(), 4),
        other => panic!("unexpected {other:?}"),
    }
}
