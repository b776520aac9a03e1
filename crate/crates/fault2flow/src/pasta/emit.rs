//! Canonical serializer for fault trees.
//!
//! Layout: `tree` header, measured parameters in declaration order, ratios in
//! declaration order, then per top event (declaration order) the definitions
//! of its subtree in post-order (so every node is defined before first use)
//! followed by the `top` line. Nodes unreachable from any top event are
//! appended afterwards so emission is lossless even for trees the self-check
//! would reject. Output is LF-terminated and byte-deterministic.

use std::collections::HashSet;

use crate::pasta::ast::{FaultTree, GateKind, Node, ParamKind};

fn fmt_number(x: f64) -> String {
    // Rust's shortest round-trip formatting; parse(emit(x)) == x.
    format!("{x}")
}

fn emit_node_defs(tree: &FaultTree, id: &str, done: &mut HashSet<String>, out: &mut String) {
    if done.contains(id) {
        return;
    }
    match tree.node(id).expect("validated tree") {
        Node::TopEvent { .. } => unreachable!("top events are emitted separately"),
        Node::BasicEvent { condition } => {
            out.push_str(&format!(
                "basic {id} : {} {} {}\n",
                condition.parameter,
                condition.op,
                fmt_number(condition.threshold)
            ));
        }
        Node::Gate { kind, children } => {
            for child in children {
                if !matches!(tree.node(child), Some(Node::TopEvent { .. })) {
                    emit_node_defs(tree, child, done, out);
                }
            }
            let list = children.join(", ");
            match kind {
                GateKind::And => out.push_str(&format!("gate {id} = and({list})\n")),
                GateKind::Or => out.push_str(&format!("gate {id} = or({list})\n")),
                GateKind::KofN(k) => {
                    out.push_str(&format!("gate {id} = kofn({k}; {list})\n"))
                }
            }
        }
    }
    done.insert(id.to_string());
}

/// Serialize a fault tree to canonical PASTA source.
pub fn emit_pasta(tree: &FaultTree) -> String {
    let mut out = String::new();
    out.push_str(&format!("tree {}\n", tree.name()));

    for p in tree.schema() {
        if let ParamKind::Measured = p.kind {
            out.push_str(&format!("param {} unit \"{}\"\n", p.name, p.unit));
        }
    }
    for p in tree.schema() {
        if let ParamKind::Derived { numerator, denominator } = &p.kind {
            out.push_str(&format!("ratio {} = {} / {}\n", p.name, numerator, denominator));
        }
    }

    let mut done: HashSet<String> = HashSet::new();
    for (top_id, label, child) in tree.tops() {
        emit_node_defs(tree, child, &mut done, &mut out);
        out.push_str(&format!("top {label} = {child}\n"));
        done.insert(top_id.to_string());
    }

    // Orphans (anything the top events do not reach), declaration order.
    let ids: Vec<String> = tree.node_ids().map(str::to_string).collect();
    for id in ids {
        if !done.contains(&id) {
            emit_node_defs(tree, &id, &mut done, &mut out);
        }
    }
    out
}
