//! Deterministic mind-map → fault-tree translation, plus the hook-driven
//! variant used where the production pipeline consults a language model.
//!
//! Mapping: the root's direct children become top events (fault classes,
//! label = normalized node text); internal nodes become gates of their
//! annotated kind (default AND when unannotated); condition-annotated leaves
//! become basic events. Leaves without a condition annotation are rejected;
//! free-text interpretation is exactly the part that stays behind the hook.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::mindmap::{parse_condition_parts, Annotation, MapGate, MapNode, MindMap};
use crate::pasta::{
    self_check, CheckReport, Condition, FaultTree, GateKind, Node, NodeId, ParamKind, ParamSpec,
    PastaError,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TranslateError {
    #[error("leaf `{path}` has no condition annotation")]
    UnannotatedLeaf { path: String },
    #[error("unknown parameter `{name}` at `{path}`")]
    UnknownParameter { name: String, path: String },
    #[error("fault class `{label}` has no descendant condition")]
    EmptyFaultClass { label: String },
    #[error("condition-annotated node `{path}` has children")]
    ConditionNotLeaf { path: String },
    #[error("invalid tree produced during translation: {0}")]
    Tree(#[from] PastaError),
    #[error("hook exhausted after {attempts} attempts")]
    HookExhausted { attempts: usize, findings: Vec<String> },
}

/// Options for the deterministic translation.
#[derive(Debug, Clone)]
pub struct TranslateOptions {
    /// Gate kind assumed for internal nodes without a `[AND]`/`[OR]`
    /// annotation. Diagnostic criteria are conjunctive by default.
    pub default_gate: MapGate,
}

impl Default for TranslateOptions {
    fn default() -> Self {
        TranslateOptions { default_gate: MapGate::And }
    }
}

/// Normalize free node text into a DSL identifier: lowercase, spaces to
/// underscores, everything else non-alphanumeric stripped.
pub fn normalize_label(text: &str) -> String {
    let mut out = String::new();
    for c in text.to_lowercase().chars() {
        if c.is_ascii_lowercase() || c.is_ascii_digit() {
            out.push(c);
        } else if (c == ' ' || c == '_' || c == '-') && !out.ends_with('_') && !out.is_empty() {
            out.push('_');
        }
    }
    let out = out.trim_matches('_').to_string();
    if out.is_empty() || out.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        format!("n_{out}")
    } else {
        out
    }
}

struct Translator {
    schema: Vec<ParamSpec>,
    nodes: Vec<(NodeId, Node)>,
    used_ids: std::collections::HashSet<String>,
    default_gate: MapGate,
}

impl Translator {
    fn alloc_id(&mut self, base: &str) -> NodeId {
        let mut candidate = base.to_string();
        let mut n = 1;
        while self.used_ids.contains(&candidate) {
            n += 1;
            candidate = format!("{base}_{n}");
        }
        self.used_ids.insert(candidate.clone());
        candidate
    }

    /// Resolve a condition annotation's parameter part. Ratios written `a/b`
    /// are auto-declared as derived parameters named `a_over_b` (reusing an
    /// existing derived parameter with the same formula when present).
    fn resolve_parameter(&mut self, raw: &str, path: &str) -> Result<String, TranslateError> {
        if let Some((num, den)) = raw.split_once('/') {
            for part in [num, den] {
                let known = self
                    .schema
                    .iter()
                    .any(|p| p.name == part && p.is_measured());
                if !known {
                    return Err(TranslateError::UnknownParameter {
                        name: part.to_string(),
                        path: path.to_string(),
                    });
                }
            }
            if let Some(existing) = self.schema.iter().find(|p| {
                matches!(&p.kind, ParamKind::Derived { numerator, denominator }
                    if numerator == num && denominator == den)
            }) {
                return Ok(existing.name.clone());
            }
            let name = format!("{num}_over_{den}");
            let name = if self.schema.iter().any(|p| p.name == name) {
                // Same name, different formula: uniquify.
                let mut n = 2;
                loop {
                    let candidate = format!("{name}_{n}");
                    if !self.schema.iter().any(|p| p.name == candidate) {
                        break candidate;
                    }
                    n += 1;
                }
            } else {
                name
            };
            self.schema.push(ParamSpec::ratio(name.clone(), num, den));
            Ok(name)
        } else {
            if !self.schema.iter().any(|p| p.name == raw) {
                return Err(TranslateError::UnknownParameter {
                    name: raw.to_string(),
                    path: path.to_string(),
                });
            }
            Ok(raw.to_string())
        }
    }

    fn lower(
        &mut self,
        node: &MapNode,
        path: &str,
        base_hint: Option<&str>,
    ) -> Result<NodeId, TranslateError> {
        let here = format!("{path}/{}", node.text);
        let base = base_hint.map(str::to_string).unwrap_or_else(|| normalize_label(&node.text));
        match (&node.annotation, node.children.is_empty()) {
            (Some(Annotation::Condition(src)), true) => {
                let (param_raw, op, threshold) =
                    parse_condition_parts(src).expect("parser accepted this annotation");
                let parameter = self.resolve_parameter(&param_raw, &here)?;
                let id = self.alloc_id(&base);
                self.nodes.push((
                    id.clone(),
                    Node::BasicEvent { condition: Condition { parameter, op, threshold } },
                ));
                Ok(id)
            }
            (Some(Annotation::Condition(_)), false) => {
                Err(TranslateError::ConditionNotLeaf { path: here })
            }
            (_, true) => Err(TranslateError::UnannotatedLeaf { path: here }),
            (annotation, false) => {
                let gate = match annotation {
                    Some(Annotation::Gate(g)) => *g,
                    _ => self.default_gate,
                };
                let kind = match gate {
                    MapGate::And => GateKind::And,
                    MapGate::Or => GateKind::Or,
                };
                let mut children = Vec::with_capacity(node.children.len());
                for child in &node.children {
                    children.push(self.lower(child, &here, None)?);
                }
                let id = self.alloc_id(&base);
                self.nodes.push((id.clone(), Node::Gate { kind, children }));
                Ok(id)
            }
        }
    }
}

/// Convert a validated mind map into a fault tree over `schema`.
pub fn mindmap_to_faulttree(
    map: &MindMap,
    schema: &[ParamSpec],
) -> Result<FaultTree, TranslateError> {
    mindmap_to_faulttree_with(map, schema, &TranslateOptions::default())
}

pub fn mindmap_to_faulttree_with(
    map: &MindMap,
    schema: &[ParamSpec],
    opts: &TranslateOptions,
) -> Result<FaultTree, TranslateError> {
    if map.root.children.is_empty() {
        return Err(TranslateError::EmptyFaultClass {
            label: normalize_label(&map.root.text),
        });
    }
    let mut tr = Translator {
        schema: schema.to_vec(),
        nodes: Vec::new(),
        used_ids: schema.iter().map(|p| p.name.clone()).collect(),
        default_gate: opts.default_gate,
    };
    tr.used_ids.insert(normalize_label(&map.root.text));
    // Fault class labels double as top-event node ids; reserve them before
    // any generated id can shadow one.
    for class_node in &map.root.children {
        tr.used_ids.insert(normalize_label(&class_node.text));
    }

    let mut tops: Vec<(String, NodeId)> = Vec::new();
    for class_node in &map.root.children {
        let label = normalize_label(&class_node.text);
        if class_node.children.is_empty() && class_node.annotation.is_none() {
            return Err(TranslateError::EmptyFaultClass { label });
        }
        let path = format!("/{}", map.root.text);
        let base = format!("{label}_criteria");
        let child = tr.lower(class_node, &path, Some(&base))?;
        tops.push((label, child));
    }
    for (label, child) in tops {
        tr.nodes.push((label.clone(), Node::TopEvent { label: label.clone(), child }));
    }

    let tree = FaultTree::new(normalize_label(&map.root.text), tr.schema, tr.nodes)?;
    Ok(tree)
}

/// Seam for the LLM-backed translation step: `(source, feedback) → candidate
/// PASTA text`. Candidates must parse and pass the self-check or they are
/// rejected and the hook is retried with the findings as feedback.
pub trait TranslatorHook {
    fn candidate(&mut self, source: &str, feedback: &str) -> String;
}

impl<F: FnMut(&str, &str) -> String> TranslatorHook for F {
    fn candidate(&mut self, source: &str, feedback: &str) -> String {
        self(source, feedback)
    }
}

/// Outcome of a successful hook translation.
#[derive(Debug)]
pub struct HookedTranslation {
    pub tree: FaultTree,
    pub attempts: usize,
    /// Self-check report of the accepted candidate (may carry warnings).
    pub report: CheckReport,
}

/// Drive a [`TranslatorHook`] until its candidate parses and self-checks
/// clean, retrying with rendered findings as feedback, up to `retries`
/// attempts.
pub fn translate_with_hook(
    source: &str,
    hook: &mut dyn TranslatorHook,
    retries: usize,
) -> Result<HookedTranslation, TranslateError> {
    assert!(retries >= 1, "retries must be at least 1");
    let mut feedback = String::new();
    let mut all_findings = Vec::new();
    for attempt in 1..=retries {
        let candidate = hook.candidate(source, &feedback);
        match crate::pasta::parse_pasta(&candidate) {
            Ok(tree) => {
                let report = self_check(&tree);
                if report.passed() {
                    return Ok(HookedTranslation { tree, attempts: attempt, report });
                }
                feedback = report.render();
                all_findings.push(feedback.clone());
            }
            Err(e) => {
                feedback = format!("error parse {e}\n");
                all_findings.push(feedback.clone());
            }
        }
    }
    Err(TranslateError::HookExhausted { attempts: retries, findings: all_findings })
}

/// Derive a measured-parameter schema from a map's condition annotations:
/// every plain or ratio-component identifier becomes a measured parameter
/// with an empty unit, in first-reference order. Used by callers that have
/// no schema on hand (the CLI's default path).
pub fn schema_from_annotations(map: &MindMap) -> Vec<ParamSpec> {
    let mut seen = BTreeMap::new();
    let mut order = Vec::new();
    fn walk(node: &MapNode, seen: &mut BTreeMap<String, ()>, order: &mut Vec<String>) {
        if let Some(Annotation::Condition(src)) = &node.annotation {
            if let Some((lhs, _, _)) = parse_condition_parts(src) {
                for part in lhs.split('/') {
                    if seen.insert(part.to_string(), ()).is_none() {
                        order.push(part.to_string());
                    }
                }
            }
        }
        for c in &node.children {
            walk(c, seen, order);
        }
    }
    walk(&map.root, &mut seen, &mut order);
    order.into_iter().map(|name| ParamSpec::measured(name, "")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mindmap::parse_plantuml;
    use crate::pasta::{emit_pasta, evaluate, Assignment};

    fn gas_schema() -> Vec<ParamSpec> {
        ["h2", "ch4", "c2h2", "c2h4", "c2h6"]
            .iter()
            .map(|g| ParamSpec::measured(*g, "µL/L"))
            .collect()
    }

    const MAP: &str = "\
@startmindmap
* transformer faults
** partial discharge
*** low acetylene [c2h2/c2h4 < 0.1]
*** low methane [ch4/h2 < 0.1]
** arcing discharge [OR]
*** acetylene high [c2h2/c2h4 >= 3]
*** hydrogen rich [ch4/h2 < 0.1]
@endmindmap
";

    #[test]
    fn leaves_map_one_to_one_to_basic_events() {
        let map = parse_plantuml(MAP).unwrap();
        let tree = mindmap_to_faulttree(&map, &gas_schema()).unwrap();
        assert_eq!(tree.basics().count(), 4);
        assert_eq!(tree.tops().count(), 2);
        let labels: Vec<&str> = tree.tops().map(|(_, l, _)| l).collect();
        assert_eq!(labels, vec!["partial_discharge", "arcing_discharge"]);
    }

    #[test]
    fn unannotated_internal_nodes_default_to_and() {
        let map = parse_plantuml(MAP).unwrap();
        let tree = mindmap_to_faulttree(&map, &gas_schema()).unwrap();
        let (_, _, child) = tree.tops().next().unwrap();
        match tree.node(child).unwrap() {
            Node::Gate { kind, children } => {
                assert_eq!(*kind, GateKind::And);
                assert_eq!(children.len(), 2);
            }
            other => panic!("expected gate, got {other:?}"),
        }
    }

    #[test]
    fn or_annotation_respected() {
        let map = parse_plantuml(MAP).unwrap();
        let tree = mindmap_to_faulttree(&map, &gas_schema()).unwrap();
        let (_, _, child) = tree.tops().nth(1).unwrap();
        assert!(matches!(
            tree.node(child),
            Some(Node::Gate { kind: GateKind::Or, children }) if children.len() == 2
        ));
    }

    #[test]
    fn ratios_are_auto_declared_once() {
        let map = parse_plantuml(MAP).unwrap();
        let tree = mindmap_to_faulttree(&map, &gas_schema()).unwrap();
        let derived: Vec<&str> = tree
            .schema()
            .iter()
            .filter(|p| !p.is_measured())
            .map(|p| p.name.as_str())
            .collect();
        // ch4/h2 appears twice in the map but is declared once.
        assert_eq!(derived, vec!["c2h2_over_c2h4", "ch4_over_h2"]);
    }

    #[test]
    fn translation_is_deterministic() {
        let map = parse_plantuml(MAP).unwrap();
        let a = mindmap_to_faulttree(&map, &gas_schema()).unwrap();
        let b = mindmap_to_faulttree(&map, &gas_schema()).unwrap();
        assert_eq!(emit_pasta(&a), emit_pasta(&b));
    }

    #[test]
    fn translated_tree_evaluates() {
        let map = parse_plantuml(MAP).unwrap();
        let tree = mindmap_to_faulttree(&map, &gas_schema()).unwrap();
        let input: Assignment = [
            ("h2", 100.0),
            ("ch4", 5.0),
            ("c2h2", 0.5),
            ("c2h4", 10.0),
            ("c2h6", 10.0),
        ]
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
        let fired = evaluate(&tree, &input).unwrap();
        // c2h2/c2h4 = 0.05 < 0.1 and ch4/h2 = 0.05 < 0.1: both tops fire
        // (arcing via its hydrogen-rich OR arm).
        assert!(fired.contains("partial_discharge"));
        assert!(fired.contains("arcing_discharge"));
    }

    #[test]
    fn unannotated_leaf_rejected_with_path() {
        let src = "@startmindmap\n* r\n** class\n*** vague leaf\n@endmindmap\n";
        let map = parse_plantuml(src).unwrap();
        match mindmap_to_faulttree(&map, &gas_schema()) {
            Err(TranslateError::UnannotatedLeaf { path }) => {
                assert!(path.contains("vague leaf"), "path was {path}");
            }
            other => panic!("expected UnannotatedLeaf, got {other:?}"),
        }
    }

    #[test]
    fn unknown_parameter_rejected() {
        let src = "@startmindmap\n* r\n** class\n*** leaf [mystery > 4]\n@endmindmap\n";
        let map = parse_plantuml(src).unwrap();
        assert!(matches!(
            mindmap_to_faulttree(&map, &gas_schema()),
            Err(TranslateError::UnknownParameter { name, .. }) if name == "mystery"
        ));
    }

    #[test]
    fn childless_root_is_empty_fault_class() {
        let map = parse_plantuml("@startmindmap\n* r\n@endmindmap\n").unwrap();
        assert!(matches!(
            mindmap_to_faulttree(&map, &gas_schema()),
            Err(TranslateError::EmptyFaultClass { .. })
        ));
    }

    #[test]
    fn top_level_condition_leaf_is_a_direct_basic_event() {
        let src = "@startmindmap\n* r\n** overload [h2 >= 150]\n@endmindmap\n";
        let map = parse_plantuml(src).unwrap();
        let tree = mindmap_to_faulttree(&map, &gas_schema()).unwrap();
        let (_, label, child) = tree.tops().next().unwrap();
        assert_eq!(label, "overload");
        assert!(matches!(tree.node(child), Some(Node::BasicEvent { .. })));
    }

    #[test]
    fn label_normalization() {
        assert_eq!(normalize_label("Low-temperature Overheating"), "low_temperature_overheating");
        assert_eq!(normalize_label("Arcing  (high energy)"), "arcing_high_energy");
        assert_eq!(normalize_label("3-phase"), "n_3_phase");
    }

    #[test]
    fn hook_identity_on_valid_source_takes_one_attempt() {
        let src = "tree d\nparam x unit \"\"\nbasic b : x < 1\ntop f = b\n";
        let mut hook = |source: &str, _feedback: &str| source.to_string();
        let out = translate_with_hook(src, &mut hook, 3).unwrap();
        assert_eq!(out.attempts, 1);
        assert_eq!(out.tree.name(), "d");
    }

    #[test]
    fn hook_garbage_exhausts_with_findings() {
        let mut hook = |_: &str, _: &str| "not a tree".to_string();
        match translate_with_hook("ignored", &mut hook, 3) {
            Err(TranslateError::HookExhausted { attempts, findings }) => {
                assert_eq!(attempts, 3);
                assert_eq!(findings.len(), 3);
            }
            other => panic!("expected HookExhausted, got {other:?}"),
        }
    }

    #[test]
    fn hook_failure_then_success_records_two_attempts() {
        let good = "tree d\nparam x unit \"\"\nbasic b : x < 1\ntop f = b\n";
        let mut calls = 0;
        let mut hook = move |_: &str, feedback: &str| {
            calls += 1;
            if calls == 1 {
                // First attempt self-checks dirty: orphan gate.
                "tree d\nparam x unit \"\"\nbasic b : x < 1\nbasic o : x > 2\ngate orphan = and(o)\ntop f = b\n"
                    .to_string()
            } else {
                assert!(feedback.contains("unreachable"));
                good.to_string()
            }
        };
        let out = translate_with_hook("src", &mut hook, 5).unwrap();
        assert_eq!(out.attempts, 2);
    }

    #[test]
    fn schema_derivation_from_annotations() {
        let map = parse_plantuml(MAP).unwrap();
        let schema = schema_from_annotations(&map);
        let names: Vec<&str> = schema.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, vec!["c2h2", "c2h4", "ch4", "h2"]);
    }
}
