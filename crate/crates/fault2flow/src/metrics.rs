//! Conformance metrics between a fault tree and a workflow graph.
//!
//! * Topological consistency (TC): the fraction of tree parent→child edges
//!   preserved in the workflow. A tree edge (u, v) counts as covered when,
//!   after contracting all provenance-free workflow nodes, some u-tagged
//!   node reaches some v-tagged node with no provenance tag in between.
//! * End-to-end reachability coverage (E2ERC): the fraction of
//!   top-event→leaf tree paths witnessed, in order, by the provenance
//!   projection of at least one execution trace.
//! * Exhaustive semantic fidelity: agreement between the tree evaluator and
//!   the workflow executor on one representative input per satisfiable
//!   leaf-truth region. This replaces judged fidelity with an exact check
//!   and is reported as `SF(exhaustive)`.
//! * Readability: a deterministic structural score in [0, 1] (also the
//!   evolution fitness term); penalizes excess depth, duplicated subtrees
//!   and degenerate one-child gates, and rewards consistent snake_case
//!   naming. Reported as `LRM(readability)`.

use std::collections::{HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::executor::{execute, ExecutionTrace};
use crate::pasta::{evaluate, FaultTree, GateKind, Node};
use crate::regions::{enumerate_regions, measured_params, tree_atoms, RegionOptions};
use crate::workflow::Workflow;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricsError {
    #[error("tree has no edges; ratio undefined")]
    EmptyTree,
    #[error("tree has {leaves} leaves, over the exhaustive cap of {cap}")]
    LeafCapExceeded { leaves: usize, cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeCounts {
    pub pasta_edges: usize,
    pub covered_edges: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathCounts {
    pub ref_paths: usize,
    pub covered_paths: usize,
}

/// All four metric values plus their underlying counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub tc: f64,
    pub e2erc: f64,
    pub sf: f64,
    pub readability: f64,
    pub edge_counts: EdgeCounts,
    pub path_counts: PathCounts,
}

/// Provenance projection: tagged-node adjacency after contracting untagged
/// nodes. Returns the set of (from-tag, to-tag) pairs.
fn provenance_projection(w: &Workflow) -> HashSet<(String, String)> {
    let mut adjacency: HashMap<&str, Vec<&str>> = HashMap::new();
    for c in w.connections() {
        adjacency.entry(c.from_node.as_str()).or_default().push(c.to_node.as_str());
    }
    let tag = |name: &str| w.node(name).and_then(|n| n.provenance.as_deref());

    let mut edges = HashSet::new();
    for node in w.nodes() {
        let Some(from_tag) = node.provenance.as_deref() else { continue };
        // Walk forward through untagged nodes only.
        let mut stack: Vec<&str> =
            adjacency.get(node.name.as_str()).cloned().unwrap_or_default();
        let mut seen: HashSet<&str> = HashSet::new();
        while let Some(next) = stack.pop() {
            if !seen.insert(next) {
                continue;
            }
            match tag(next) {
                Some(to_tag) => {
                    edges.insert((from_tag.to_string(), to_tag.to_string()));
                }
                None => {
                    stack.extend(adjacency.get(next).cloned().unwrap_or_default());
                }
            }
        }
    }
    edges
}

/// TC = |E_pasta ∩ E_workflow| / |E_pasta|.
pub fn topological_consistency(tree: &FaultTree, w: &Workflow) -> Result<f64, MetricsError> {
    Ok(edge_coverage(tree, w)?.ratio())
}

struct Coverage {
    covered: usize,
    total: usize,
}

impl Coverage {
    fn ratio(&self) -> f64 {
        self.covered as f64 / self.total as f64
    }
}

fn edge_coverage(tree: &FaultTree, w: &Workflow) -> Result<Coverage, MetricsError> {
    let tree_edges = tree.edges();
    if tree_edges.is_empty() {
        return Err(MetricsError::EmptyTree);
    }
    let projected = provenance_projection(w);
    let covered = tree_edges
        .iter()
        .filter(|(u, v)| projected.contains(&(u.clone(), v.clone())))
        .count();
    Ok(Coverage { covered, total: tree_edges.len() })
}

/// True when `needle` occurs as a (not necessarily contiguous) subsequence
/// of `haystack`.
fn is_subsequence(needle: &[String], haystack: &[String]) -> bool {
    let mut it = haystack.iter();
    needle.iter().all(|n| it.by_ref().any(|h| h == n))
}

/// E2ERC = covered top→leaf paths / all top→leaf paths.
pub fn e2e_reachability(
    tree: &FaultTree,
    _w: &Workflow,
    traces: &[ExecutionTrace],
) -> Result<f64, MetricsError> {
    Ok(path_coverage(tree, traces)?.ratio())
}

fn path_coverage(tree: &FaultTree, traces: &[ExecutionTrace]) -> Result<Coverage, MetricsError> {
    let paths = tree.root_leaf_paths();
    if paths.is_empty() {
        return Err(MetricsError::EmptyTree);
    }
    let covered = paths
        .iter()
        .filter(|p| traces.iter().any(|t| is_subsequence(p, &t.provenance_visited)))
        .count();
    Ok(Coverage { covered, total: paths.len() })
}

/// Exhaustive agreement between `evaluate(tree, ·)` and `execute(w, ·)` over
/// one representative per satisfiable leaf-truth region.
pub fn semantic_fidelity(
    tree: &FaultTree,
    w: &Workflow,
    leaf_cap: usize,
) -> Result<f64, MetricsError> {
    let leaves = tree.leaf_ids().len();
    if leaves > leaf_cap {
        return Err(MetricsError::LeafCapExceeded { leaves, cap: leaf_cap });
    }
    let atoms = tree_atoms(tree);
    let opts = RegionOptions::default();
    let regions = enumerate_regions(&atoms, &measured_params(tree), &opts, usize::MAX);
    if regions.is_empty() {
        return Err(MetricsError::EmptyTree);
    }
    let mut agree = 0usize;
    for input in &regions {
        let expected = evaluate(tree, input).ok();
        let actual = execute(w, input).ok().map(|t| t.triggered);
        if expected.is_some() && expected == actual {
            agree += 1;
        }
    }
    Ok(agree as f64 / regions.len() as f64)
}

/// Weights of the readability score terms; defaults sum to 1.
#[derive(Debug, Clone, Copy)]
pub struct ReadabilityWeights {
    pub depth: f64,
    pub redundancy: f64,
    pub degenerate: f64,
    pub naming: f64,
}

impl Default for ReadabilityWeights {
    fn default() -> Self {
        ReadabilityWeights { depth: 0.25, redundancy: 0.25, degenerate: 0.3, naming: 0.2 }
    }
}

fn structural_hash(tree: &FaultTree, id: &str, memo: &mut HashMap<String, u64>) -> u64 {
    if let Some(h) = memo.get(id) {
        return *h;
    }
    const PRIME: u64 = 0x100_0000_01b3;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut mix = |x: u64| {
        h ^= x;
        h = h.wrapping_mul(PRIME);
    };
    match tree.node(id).expect("validated tree") {
        Node::BasicEvent { condition } => {
            mix(1);
            for b in condition.parameter.bytes() {
                mix(b as u64);
            }
            mix(condition.op as u64 + 10);
            mix(condition.threshold.to_bits());
        }
        Node::Gate { kind, children } => {
            mix(2);
            mix(match kind {
                GateKind::And => 100,
                GateKind::Or => 101,
                GateKind::KofN(k) => 200 + *k as u64,
            });
            // Order-insensitive: gate semantics do not depend on child order.
            let mut hs: Vec<u64> =
                children.iter().map(|c| structural_hash(tree, c, memo)).collect();
            hs.sort_unstable();
            for x in hs {
                mix(x);
            }
        }
        Node::TopEvent { label, child } => {
            mix(3);
            for b in label.bytes() {
                mix(b as u64);
            }
            mix(structural_hash(tree, child, memo));
        }
    }
    memo.insert(id.to_string(), h);
    h
}

pub(crate) fn subtree_hashes(tree: &FaultTree) -> HashMap<String, u64> {
    let mut memo = HashMap::new();
    for id in tree.node_ids() {
        structural_hash(tree, id, &mut memo);
    }
    memo
}

fn is_snake_case(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('_')
        && !id.ends_with('_')
        && !id.contains("__")
        && id.chars().next().is_some_and(|c| c.is_ascii_lowercase())
}

/// Readability score with default weights.
pub fn readability_score(tree: &FaultTree) -> f64 {
    readability_score_with(tree, &ReadabilityWeights::default())
}

pub fn readability_score_with(tree: &FaultTree, w: &ReadabilityWeights) -> f64 {
    let leaves = tree.leaf_ids().len().max(1);
    let max_depth = tree
        .root_leaf_paths()
        .iter()
        .map(|p| p.len().saturating_sub(1))
        .max()
        .unwrap_or(1)
        .max(1);
    // Ideal depth of a balanced decomposition: one top edge plus a binary
    // fanout over the leaves.
    let ideal = ((leaves.max(2) as f64).log2().ceil() as usize) + 1;
    let excess = max_depth.saturating_sub(ideal);
    let f_depth = excess as f64 / (excess as f64 + 4.0);

    let hashes = subtree_hashes(tree);
    let non_top: Vec<&str> = tree
        .nodes()
        .filter(|(_, n)| !matches!(n, Node::TopEvent { .. }))
        .map(|(id, _)| id)
        .collect();
    let mut class_counts: HashMap<u64, usize> = HashMap::new();
    for id in &non_top {
        *class_counts.entry(hashes[*id]).or_insert(0) += 1;
    }
    let duplicates: usize = class_counts.values().map(|c| c - 1).sum();
    let f_dup = if non_top.is_empty() { 0.0 } else { duplicates as f64 / non_top.len() as f64 };

    let gates: Vec<&Node> = tree
        .nodes()
        .filter(|(_, n)| matches!(n, Node::Gate { .. }))
        .map(|(_, n)| n)
        .collect();
    let degenerate = gates
        .iter()
        .filter(|n| matches!(n, Node::Gate { children, .. } if children.len() == 1))
        .count();
    let f_degen =
        if gates.is_empty() { 0.0 } else { degenerate as f64 / gates.len() as f64 };

    let mut ids: Vec<&str> = tree.node_ids().collect();
    ids.push(tree.name());
    let mut param_names: Vec<&str> = tree.schema().iter().map(|p| p.name.as_str()).collect();
    ids.append(&mut param_names);
    let bad = ids.iter().filter(|id| !is_snake_case(id)).count();
    let f_naming = bad as f64 / ids.len() as f64;

    let score =
        1.0 - w.depth * f_depth - w.redundancy * f_dup - w.degenerate * f_degen - w.naming * f_naming;
    score.clamp(0.0, 1.0)
}

/// Compute all four metrics in one report.
pub fn full_report(
    tree: &FaultTree,
    w: &Workflow,
    traces: &[ExecutionTrace],
    leaf_cap: usize,
) -> Result<MetricReport, MetricsError> {
    let edges = edge_coverage(tree, w)?;
    let paths = path_coverage(tree, traces)?;
    let sf = semantic_fidelity(tree, w, leaf_cap)?;
    Ok(MetricReport {
        tc: edges.ratio(),
        e2erc: paths.ratio(),
        sf,
        readability: readability_score(tree),
        edge_counts: EdgeCounts { pasta_edges: edges.total, covered_edges: edges.covered },
        path_counts: PathCounts { ref_paths: paths.total, covered_paths: paths.covered },
    })
}

/// One row of the rendered comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct MetricRow {
    pub name: String,
    #[serde(flatten)]
    pub report: MetricReport,
    pub succeeded: usize,
    pub failed: usize,
}

fn fmt_ratio(x: f64) -> String {
    // Whole ratios keep one decimal (the familiar "1.0"); everything else
    // rounds to three.
    if x.fract() == 0.0 {
        format!("{x:.1}")
    } else {
        format!("{}", (x * 1000.0).round() / 1000.0)
    }
}

/// Plain-text table with the familiar column names, suffixed with what the
/// deterministic stand-ins actually compute.
pub fn render_table(rows: &[MetricRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<24}  {:<16}  {:<14}  {:<6}  {:<6}  {}\n",
        "Tree", "LRM(readability)", "SF(exhaustive)", "TC", "E2ERC", "Succ./Fail."
    ));
    for row in rows {
        out.push_str(&format!(
            "{:<24}  {:<16}  {:<14}  {:<6}  {:<6}  {}/{}\n",
            row.name,
            fmt_ratio(row.report.readability),
            fmt_ratio(row.report.sf),
            fmt_ratio(row.report.tc),
            fmt_ratio(row.report.e2erc),
            row.succeeded,
            row.failed
        ));
    }
    out
}

/// Machine-readable report document (same JSON conventions as the workflow
/// export), with a trailing newline.
pub fn render_json(rows: &[MetricRow]) -> String {
    let mut text = serde_json::to_string_pretty(&serde_json::json!({ "rows": rows }))
        .expect("serializable");
    text.push('\n');
    text
}
