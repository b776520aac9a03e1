//! Deterministic, semantics-preserving genome rewrites.
//!
//! These stand in for the language-model mutation step: each rewrite parses
//! the genome, transforms the tree structure, garbage-collects anything left
//! unreachable and re-emits canonical source. Preservation is asserted
//! downstream (every candidate is re-checked for exhaustive equivalence to
//! the seed before it may enter the archive), so a buggy rewrite loses the
//! candidate, never the run.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::metrics::subtree_hashes;
use crate::pasta::{emit_pasta, parse_pasta, FaultTree, GateKind, Node, NodeId, ParamSpec};
use crate::rng::DetRng;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MutatorError {
    #[error("no applicable rewrite site")]
    NotApplicable,
    #[error("mutation failed: {0}")]
    Failed(String),
}

/// Pluggable mutation seam: `(parent genome, inspiration genomes, rng) →
/// child genome`. The bundled [`DefaultMutator`] ignores the inspirations;
/// a model-backed hook receives them verbatim, composed the way the elite
/// archive sampled them.
pub trait Mutator {
    fn mutate(
        &self,
        parent: &str,
        inspirations: &[&str],
        rng: &mut DetRng,
    ) -> Result<String, MutatorError>;
}

impl<F> Mutator for F
where
    F: Fn(&str, &[&str], &mut DetRng) -> Result<String, MutatorError>,
{
    fn mutate(
        &self,
        parent: &str,
        inspirations: &[&str],
        rng: &mut DetRng,
    ) -> Result<String, MutatorError> {
        self(parent, inspirations, rng)
    }
}

type Parts = (String, Vec<ParamSpec>, Vec<(NodeId, Node)>);

fn parts_of(tree: &FaultTree) -> Parts {
    tree.clone().into_parts()
}

/// Drop nodes no longer reachable from any top event, keeping declaration
/// order for the survivors.
fn gc_unreachable(nodes: Vec<(NodeId, Node)>) -> Vec<(NodeId, Node)> {
    let map: HashMap<&str, &Node> = nodes.iter().map(|(id, n)| (id.as_str(), n)).collect();
    let mut reachable: HashSet<String> = HashSet::new();
    let mut stack: Vec<&str> = nodes
        .iter()
        .filter(|(_, n)| matches!(n, Node::TopEvent { .. }))
        .map(|(id, _)| id.as_str())
        .collect();
    while let Some(id) = stack.pop() {
        if !reachable.insert(id.to_string()) {
            continue;
        }
        match map.get(id) {
            Some(Node::TopEvent { child, .. }) => stack.push(child),
            Some(Node::Gate { children, .. }) => stack.extend(children.iter().map(String::as_str)),
            _ => {}
        }
    }
    nodes.into_iter().filter(|(id, _)| reachable.contains(id)).collect()
}

fn rebuild(name: String, schema: Vec<ParamSpec>, nodes: Vec<(NodeId, Node)>) -> Result<FaultTree, MutatorError> {
    FaultTree::new(name, schema, gc_unreachable(nodes)).map_err(|e| MutatorError::Failed(e.to_string()))
}

/// Replace every reference to `from` with `to` (gate children and top-event
/// children alike).
fn redirect(nodes: &mut [(NodeId, Node)], from: &str, to: &str) {
    for (_, node) in nodes.iter_mut() {
        match node {
            Node::TopEvent { child, .. } => {
                if child == from {
                    *child = to.to_string();
                }
            }
            Node::Gate { children, .. } => {
                for c in children.iter_mut() {
                    if c == from {
                        *c = to.to_string();
                    }
                }
            }
            Node::BasicEvent { .. } => {}
        }
    }
}

/// Collapse a same-kind gate nested directly under a gate:
/// `and(and(a, b), c)` becomes `and(a, b, c)`.
pub fn gate_flatten(tree: &FaultTree, rng: &mut DetRng) -> Result<FaultTree, MutatorError> {
    let (name, schema, mut nodes) = parts_of(tree);
    let kind_of: HashMap<String, GateKind> = nodes
        .iter()
        .filter_map(|(id, n)| match n {
            Node::Gate { kind, .. } => Some((id.clone(), *kind)),
            _ => None,
        })
        .collect();

    let mut sites = Vec::new(); // (parent index, child position)
    for (i, (_, node)) in nodes.iter().enumerate() {
        let Node::Gate { kind, children } = node else { continue };
        if matches!(kind, GateKind::KofN(_)) {
            continue;
        }
        for (pos, child) in children.iter().enumerate() {
            if kind_of.get(child) == Some(kind) {
                sites.push((i, pos));
            }
        }
    }
    if sites.is_empty() {
        return Err(MutatorError::NotApplicable);
    }
    let (i, pos) = sites[rng.next_index(sites.len())];

    let child_id = match &nodes[i].1 {
        Node::Gate { children, .. } => children[pos].clone(),
        _ => unreachable!(),
    };
    let grandchildren = match nodes.iter().find(|(id, _)| *id == child_id) {
        Some((_, Node::Gate { children, .. })) => children.clone(),
        _ => unreachable!("site selection checked the child is a gate"),
    };
    if let Node::Gate { children, .. } = &mut nodes[i].1 {
        children.splice(pos..=pos, grandchildren);
    }
    rebuild(name, schema, nodes)
}

/// Merge structurally identical subtrees into one shared child (DAG
/// sharing; gate arity is preserved).
pub fn dedupe_subtrees(tree: &FaultTree, rng: &mut DetRng) -> Result<FaultTree, MutatorError> {
    let hashes = subtree_hashes(tree);
    let (name, schema, mut nodes) = parts_of(tree);
    let mut classes: HashMap<u64, Vec<String>> = HashMap::new();
    for (id, node) in &nodes {
        if matches!(node, Node::TopEvent { .. }) {
            continue;
        }
        classes.entry(hashes[id]).or_default().push(id.clone());
    }
    let mut duplicate_classes: Vec<Vec<String>> =
        classes.into_values().filter(|ids| ids.len() > 1).collect();
    if duplicate_classes.is_empty() {
        return Err(MutatorError::NotApplicable);
    }
    duplicate_classes.sort_by(|a, b| a.iter().min().cmp(&b.iter().min()));
    let mut class = duplicate_classes[rng.next_index(duplicate_classes.len())].clone();
    class.sort();
    let keep = class[0].clone();
    for other in &class[1..] {
        redirect(&mut nodes, other, &keep);
    }
    rebuild(name, schema, nodes)
}

/// Remove a one-child gate, wiring its parent straight to the child.
pub fn strip_degenerate(tree: &FaultTree, rng: &mut DetRng) -> Result<FaultTree, MutatorError> {
    let (name, schema, mut nodes) = parts_of(tree);
    let sites: Vec<(String, String)> = nodes
        .iter()
        .filter_map(|(id, n)| match n {
            Node::Gate { children, .. } if children.len() == 1 => {
                Some((id.clone(), children[0].clone()))
            }
            _ => None,
        })
        .collect();
    if sites.is_empty() {
        return Err(MutatorError::NotApplicable);
    }
    let (gate, child) = sites[rng.next_index(sites.len())].clone();
    redirect(&mut nodes, &gate, &child);
    nodes.retain(|(id, _)| *id != gate);
    rebuild(name, schema, nodes)
}

fn is_clean_identifier(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('_')
        && !id.ends_with('_')
        && !id.contains("__")
        && id.chars().next().is_some_and(|c| c.is_ascii_lowercase())
}

fn clean_identifier(id: &str) -> String {
    let mut out = String::new();
    for c in id.chars() {
        if c == '_' {
            if !out.is_empty() && !out.ends_with('_') {
                out.push('_');
            }
        } else {
            out.push(c);
        }
    }
    let out = out.trim_matches('_').to_string();
    if out.is_empty() {
        "n".to_string()
    } else {
        out
    }
}

/// Canonicalize internal identifiers (gate and basic-event ids, derived
/// parameter names) to tidy snake_case. Measured parameter names, fault
/// class labels and the tree name are interface and never touched.
pub fn rename_normalize(tree: &FaultTree, _rng: &mut DetRng) -> Result<FaultTree, MutatorError> {
    let (name, mut schema, mut nodes) = parts_of(tree);

    let mut taken: HashSet<String> = HashSet::new();
    taken.insert(name.clone());
    for p in &schema {
        taken.insert(p.name.clone());
    }
    for (id, _) in &nodes {
        taken.insert(id.clone());
    }

    let mut renames: Vec<(String, String)> = Vec::new();
    let plan = |old: &str, taken: &mut HashSet<String>| {
        if is_clean_identifier(old) {
            return None;
        }
        let base = clean_identifier(old);
        let mut candidate = base.clone();
        let mut n = 1;
        while taken.contains(&candidate) {
            n += 1;
            candidate = format!("{base}_{n}");
        }
        taken.remove(old);
        taken.insert(candidate.clone());
        Some(candidate)
    };

    for p in &mut schema {
        if p.is_measured() {
            continue;
        }
        if let Some(new) = plan(&p.name.clone(), &mut taken) {
            renames.push((p.name.clone(), new.clone()));
            p.name = new;
        }
    }
    let node_ids: Vec<String> = nodes.iter().map(|(id, _)| id.clone()).collect();
    for id in &node_ids {
        // Top-event ids are the fault class labels; leave them alone.
        let is_top = nodes
            .iter()
            .any(|(nid, n)| nid == id && matches!(n, Node::TopEvent { .. }));
        if is_top {
            continue;
        }
        if let Some(new) = plan(id, &mut taken) {
            renames.push((id.clone(), new));
        }
    }
    if renames.is_empty() {
        return Err(MutatorError::NotApplicable);
    }

    for (old, new) in &renames {
        redirect(&mut nodes, old, new);
        for (id, node) in nodes.iter_mut() {
            if id == old {
                *id = new.clone();
            }
            if let Node::BasicEvent { condition } = node {
                if &condition.parameter == old {
                    condition.parameter = new.clone();
                }
            }
        }
    }
    rebuild(name, schema, nodes)
}

/// Sort every gate's children by subtree hash (ties by id). Idempotent.
pub fn reorder_canonical(tree: &FaultTree, _rng: &mut DetRng) -> Result<FaultTree, MutatorError> {
    let hashes = subtree_hashes(tree);
    let (name, schema, mut nodes) = parts_of(tree);
    let mut changed = false;
    for (_, node) in nodes.iter_mut() {
        if let Node::Gate { children, .. } = node {
            let mut sorted = children.clone();
            sorted.sort_by(|a, b| (hashes[a], a).cmp(&(hashes[b], b)));
            if sorted != *children {
                *children = sorted;
                changed = true;
            }
        }
    }
    if !changed {
        return Err(MutatorError::NotApplicable);
    }
    rebuild(name, schema, nodes)
}

/// Names of the built-in rewrites, in their rotation order.
pub const DEFAULT_REWRITES: [&str; 5] = [
    "gate_flatten",
    "dedupe_subtrees",
    "strip_degenerate",
    "rename_normalize",
    "reorder_canonical",
];

/// The default mutation operator: pick a rewrite at random and rotate
/// through the rest until one applies.
#[derive(Debug, Default, Clone, Copy)]
pub struct DefaultMutator;

impl DefaultMutator {
    fn apply_named(
        name: &str,
        tree: &FaultTree,
        rng: &mut DetRng,
    ) -> Result<FaultTree, MutatorError> {
        match name {
            "gate_flatten" => gate_flatten(tree, rng),
            "dedupe_subtrees" => dedupe_subtrees(tree, rng),
            "strip_degenerate" => strip_degenerate(tree, rng),
            "rename_normalize" => rename_normalize(tree, rng),
            "reorder_canonical" => reorder_canonical(tree, rng),
            other => Err(MutatorError::Failed(format!("unknown rewrite `{other}`"))),
        }
    }
}

impl Mutator for DefaultMutator {
    fn mutate(
        &self,
        parent: &str,
        _inspirations: &[&str],
        rng: &mut DetRng,
    ) -> Result<String, MutatorError> {
        let tree = parse_pasta(parent).map_err(|e| MutatorError::Failed(e.to_string()))?;
        let start = rng.next_index(DEFAULT_REWRITES.len());
        for offset in 0..DEFAULT_REWRITES.len() {
            let name = DEFAULT_REWRITES[(start + offset) % DEFAULT_REWRITES.len()];
            match Self::apply_named(name, &tree, rng) {
                Ok(out) => return Ok(emit_pasta(&out)),
                Err(MutatorError::NotApplicable) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(MutatorError::NotApplicable)
    }
}
