//! Deterministic random generators for trees and mind maps. Test support:
//! round-trip and property suites in this workspace drive these with fixed
//! seeds so failures replay exactly.

use crate::mindmap::{Annotation, MapGate, MapNode, MindMap};
use crate::pasta::{CmpOp, Condition, FaultTree, GateKind, Node, NodeId, ParamSpec};
use crate::rng::DetRng;

const UNITS: [&str; 4] = ["µL/L", "°C", "kV", ""];
const THRESHOLDS: [f64; 8] = [0.1, 0.5, 1.0, 3.0, 5.0, 10.0, 150.0, 500.0];
const OPS: [CmpOp; 4] = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

/// Bounds for [`random_tree`]. Defaults match the round-trip property
/// envelope: depth ≤ 6, leaves ≤ 12.
#[derive(Debug, Clone, Copy)]
pub struct TreeGenConfig {
    pub max_depth: usize,
    pub max_leaves: usize,
    pub max_tops: usize,
    pub max_fanout: usize,
}

impl Default for TreeGenConfig {
    fn default() -> Self {
        TreeGenConfig { max_depth: 6, max_leaves: 12, max_tops: 3, max_fanout: 4 }
    }
}

struct TreeGen<'r> {
    rng: &'r mut DetRng,
    cfg: TreeGenConfig,
    schema: Vec<ParamSpec>,
    nodes: Vec<(NodeId, Node)>,
    counter: usize,
    leaves_left: usize,
}

impl TreeGen<'_> {
    fn fresh(&mut self, prefix: &str) -> String {
        self.counter += 1;
        format!("{prefix}{}", self.counter)
    }

    fn basic(&mut self) -> NodeId {
        self.leaves_left = self.leaves_left.saturating_sub(1);
        let spec = &self.schema[self.rng.next_index(self.schema.len())];
        let condition = Condition {
            parameter: spec.name.clone(),
            op: OPS[self.rng.next_index(OPS.len())],
            threshold: THRESHOLDS[self.rng.next_index(THRESHOLDS.len())],
        };
        let id = self.fresh("b");
        self.nodes.push((id.clone(), Node::BasicEvent { condition }));
        id
    }

    fn subtree(&mut self, depth_left: usize) -> NodeId {
        let leaf = depth_left == 0 || self.leaves_left <= 1 || self.rng.next_index(3) == 0;
        if leaf {
            return self.basic();
        }
        let fanout = (1 + self.rng.next_index(self.cfg.max_fanout)).min(self.leaves_left);
        let mut children = Vec::with_capacity(fanout);
        for i in 0..fanout.max(1) {
            // Nested gates may have consumed the budget mid-list.
            if i > 0 && self.leaves_left == 0 {
                break;
            }
            children.push(self.subtree(depth_left - 1));
        }
        let kind = match self.rng.next_index(3) {
            0 => GateKind::And,
            1 => GateKind::Or,
            _ => GateKind::KofN(1 + self.rng.next_index(children.len())),
        };
        let id = self.fresh("g");
        self.nodes.push((id.clone(), Node::Gate { kind, children }));
        id
    }
}

/// Generate a structurally valid, self-check-clean fault tree: every node
/// reachable, gate arities within bounds, unique fault class labels.
pub fn random_tree(rng: &mut DetRng, cfg: &TreeGenConfig) -> FaultTree {
    let n_params = 2 + rng.next_index(3);
    let mut schema: Vec<ParamSpec> = (0..n_params)
        .map(|i| ParamSpec::measured(format!("p{}", i + 1), UNITS[rng.next_index(UNITS.len())]))
        .collect();
    if n_params >= 2 && rng.next_index(2) == 0 {
        let a = rng.next_index(n_params);
        let b = (a + 1 + rng.next_index(n_params - 1)) % n_params;
        let (num, den) = (schema[a].name.clone(), schema[b].name.clone());
        schema.push(ParamSpec::ratio("r1", num, den));
    }

    let mut g = TreeGen {
        rng,
        cfg: *cfg,
        schema,
        nodes: Vec::new(),
        counter: 0,
        leaves_left: cfg.max_leaves,
    };
    let n_tops = 1 + g.rng.next_index(g.cfg.max_tops);
    let mut tops = Vec::new();
    for i in 0..n_tops {
        if g.leaves_left == 0 {
            break;
        }
        let depth = 1 + g.rng.next_index(g.cfg.max_depth.saturating_sub(1).max(1));
        let child = g.subtree(depth);
        tops.push((format!("fault_{}", i + 1), child));
    }
    for (label, child) in tops {
        g.nodes.push((label.clone(), Node::TopEvent { label, child }));
    }
    FaultTree::new("generated", g.schema, g.nodes).expect("generator emits valid trees")
}

const WORDS: [&str; 10] = [
    "winding", "bushing", "core", "tap changer", "oil duct", "radiator", "gasket", "breather",
    "conservator", "relay",
];

fn random_map_node(rng: &mut DetRng, depth_left: usize, fanout: usize) -> MapNode {
    let text = WORDS[rng.next_index(WORDS.len())].to_string();
    if depth_left == 0 || rng.next_index(3) == 0 {
        // Leaf; most carry a condition annotation.
        if rng.next_index(10) < 7 {
            let param = ["h2", "ch4", "c2h2"][rng.next_index(3)];
            let op = OPS[rng.next_index(OPS.len())];
            let t = THRESHOLDS[rng.next_index(THRESHOLDS.len())];
            return MapNode::with_annotation(
                text,
                Annotation::Condition(format!("{param} {} {t}", op.as_str())),
            );
        }
        return MapNode::new(text);
    }
    let mut node = MapNode::new(text);
    node.annotation = match rng.next_index(4) {
        0 => Some(Annotation::Gate(MapGate::And)),
        1 => Some(Annotation::Gate(MapGate::Or)),
        _ => None,
    };
    let children = 1 + rng.next_index(fanout);
    node.children =
        (0..children).map(|_| random_map_node(rng, depth_left - 1, fanout)).collect();
    node
}

/// Generate a mind map with depth ≤ `max_depth` and fanout ≤ `max_fanout`.
pub fn random_mindmap(rng: &mut DetRng, max_depth: usize, max_fanout: usize) -> MindMap {
    MindMap { root: random_map_node(rng, max_depth.saturating_sub(1), max_fanout.max(1)) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pasta::{emit_pasta, parse_pasta};

    #[test]
    fn generated_trees_are_valid_and_bounded() {
        let mut rng = DetRng::new(1);
        for _ in 0..50 {
            let t = random_tree(&mut rng, &TreeGenConfig::default());
            assert!(t.leaf_ids().len() <= 12);
            assert!(crate::pasta::self_check(&t).passed());
            let round = parse_pasta(&emit_pasta(&t)).unwrap();
            assert!(round.structurally_equal(&t));
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let mut a = DetRng::new(9);
        let mut b = DetRng::new(9);
        let cfg = TreeGenConfig::default();
        assert_eq!(
            emit_pasta(&random_tree(&mut a, &cfg)),
            emit_pasta(&random_tree(&mut b, &cfg))
        );
    }
}
