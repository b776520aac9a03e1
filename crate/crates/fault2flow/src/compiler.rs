//! Lower a fault tree into a workflow graph.
//!
//! The lowering walks each top event's subtree in post-order and emits a
//! short-circuit branch chain:
//!
//! * every basic event becomes one Condition node (provenance = the basic
//!   event id);
//! * AND gates chain true-branches through their children in stored order;
//!   any false branch short-circuits to the enclosing alternative or, at the
//!   outermost level, onward to the next fault class;
//! * OR gates chain false-branches; any true branch short-circuits toward
//!   the fault side;
//! * k-of-n gates expand to an OR over all size-k AND combinations in
//!   lexicographic order (arity capped at 8);
//! * every top event becomes one Output node labeled with its fault class.
//!
//! Fault classes are evaluated in sequence in a single run: each stage's
//! exits (fault output and false side alike) continue into the next stage,
//! and the shared no-fault Output is the terminal sink. The trace therefore
//! collects every triggered fault class, matching the evaluator's set
//! semantics.
//!
//! A Join marker tagged with the gate's id is placed in front of every
//! lowered child, and one tagged with the top event's id opens each stage.
//! In the provenance projection of the finished graph each tree edge (u, v)
//! is then witnessed by a u-tagged node wired straight into a v-tagged node,
//! which is what makes the topology metric exact.

use std::collections::HashMap;

use thiserror::Error;

use crate::pasta::{
    self_check, CheckReport, Condition, FaultTree, GateKind, Node, ParamKind,
};
use crate::workflow::{
    Connection, FormField, Operand, WfCondition, WfKind, WfNode, Workflow, WorkflowError,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CompileError {
    #[error("tree failed self-check:\n{}", report.render())]
    SelfCheckFailed { report: CheckReport },
    #[error("kofn gate `{gate}` too wide: arity {arity} exceeds the expansion bound of 8")]
    KofnTooWide { gate: String, arity: usize },
    #[error("no-fault label `{label}` collides with a fault class")]
    NoFaultLabelClash { label: String },
    #[error("compiled graph rejected: {0}")]
    Workflow(#[from] WorkflowError),
}

/// Compilation knobs.
#[derive(Debug, Clone)]
pub struct CompileOptions {
    /// Label of the shared terminal Output reached when no further fault
    /// class is checked. Must differ from every fault class label.
    pub no_fault_label: String,
    /// Merge structurally identical condition steps (same basic event, same
    /// continuations). Off by default: duplication per referencing path is
    /// the simplest shape to review.
    pub share_condition_nodes: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { no_fault_label: "no_fault".into(), share_condition_nodes: false }
    }
}

/// One numeric trigger form field per measured parameter referenced,
/// directly or through a ratio, by any basic event, in first-reference
/// order, with unit labels from the schema.
pub fn leaf_input_params(tree: &FaultTree) -> Vec<FormField> {
    let mut seen = std::collections::HashSet::new();
    let mut fields = Vec::new();
    let mut push = |name: &str, tree: &FaultTree| {
        if seen.insert(name.to_string()) {
            let unit = tree.param(name).map(|p| p.unit.clone()).unwrap_or_default();
            fields.push(FormField { name: name.to_string(), unit });
        }
    };
    for (_, cond) in tree.basics() {
        match tree.param(&cond.parameter).map(|p| &p.kind) {
            Some(ParamKind::Measured) => push(&cond.parameter, tree),
            Some(ParamKind::Derived { numerator, denominator }) => {
                push(numerator, tree);
                push(denominator, tree);
            }
            None => {}
        }
    }
    fields
}

struct Builder<'t> {
    tree: &'t FaultTree,
    share: bool,
    nodes: Vec<WfNode>,
    connections: Vec<Connection>,
    name_counts: HashMap<String, usize>,
    // (site kind, tree id, true target, false target) → existing node name
    memo: HashMap<(u8, String, String, String), String>,
}

impl<'t> Builder<'t> {
    fn alloc_name(&mut self, base: &str) -> String {
        let n = self.name_counts.entry(base.to_string()).or_insert(0);
        *n += 1;
        if *n == 1 {
            base.to_string()
        } else {
            format!("{base}_{n}")
        }
    }

    fn connect(&mut self, from: &str, branch: usize, to: &str) {
        self.connections.push(Connection::new(from, branch, to));
    }

    fn operand_for(&self, condition: &Condition) -> Operand {
        match self.tree.param(&condition.parameter).map(|p| &p.kind) {
            Some(ParamKind::Derived { numerator, denominator }) => {
                Operand::Ratio(numerator.clone(), denominator.clone())
            }
            _ => Operand::Field(condition.parameter.clone()),
        }
    }

    fn condition_step(
        &mut self,
        basic_id: &str,
        condition: &Condition,
        true_to: &str,
        false_to: &str,
    ) -> String {
        if self.share {
            let key = (0u8, basic_id.to_string(), true_to.to_string(), false_to.to_string());
            if let Some(existing) = self.memo.get(&key) {
                return existing.clone();
            }
        }
        let name = self.alloc_name(basic_id);
        self.nodes.push(
            WfNode::new(
                name.clone(),
                WfKind::Condition(WfCondition {
                    operand: self.operand_for(condition),
                    op: condition.op,
                    threshold: condition.threshold,
                }),
            )
            .with_provenance(basic_id),
        );
        self.connect(&name, 0, true_to);
        self.connect(&name, 1, false_to);
        if self.share {
            let key = (0u8, basic_id.to_string(), true_to.to_string(), false_to.to_string());
            self.memo.insert(key, name.clone());
        }
        name
    }

    /// Pass-through Join carrying `tagged` as provenance, wired into `to`.
    fn marker(&mut self, tagged: &str, to: &str) -> String {
        if self.share {
            let key = (1u8, tagged.to_string(), to.to_string(), String::new());
            if let Some(existing) = self.memo.get(&key) {
                return existing.clone();
            }
        }
        let name = self.alloc_name(&format!("via_{tagged}"));
        self.nodes.push(WfNode::new(name.clone(), WfKind::Join).with_provenance(tagged));
        self.connect(&name, 0, to);
        if self.share {
            let key = (1u8, tagged.to_string(), to.to_string(), String::new());
            self.memo.insert(key, name.clone());
        }
        name
    }

    fn lower(
        &mut self,
        id: &str,
        true_to: &str,
        false_to: &str,
    ) -> Result<String, CompileError> {
        match self.tree.node(id).expect("validated tree") {
            Node::BasicEvent { condition } => {
                let condition = condition.clone();
                Ok(self.condition_step(id, &condition, true_to, false_to))
            }
            Node::Gate { kind: GateKind::And, children } => {
                let children = children.clone();
                let mut cur_true = true_to.to_string();
                for child in children.iter().rev() {
                    let entry = self.lower(child, &cur_true, false_to)?;
                    cur_true = self.marker(id, &entry);
                }
                Ok(cur_true)
            }
            Node::Gate { kind: GateKind::Or, children } => {
                let children = children.clone();
                let mut cur_false = false_to.to_string();
                for child in children.iter().rev() {
                    let entry = self.lower(child, true_to, &cur_false)?;
                    cur_false = self.marker(id, &entry);
                }
                Ok(cur_false)
            }
            Node::Gate { kind: GateKind::KofN(k), children } => {
                let (k, children) = (*k, children.clone());
                if children.len() > 8 {
                    return Err(CompileError::KofnTooWide {
                        gate: id.to_string(),
                        arity: children.len(),
                    });
                }
                let combos = combinations(children.len(), k);
                // OR over combos; within a combo, an AND chain of its members.
                let mut cur_false = false_to.to_string();
                for combo in combos.iter().rev() {
                    let mut cur_true = true_to.to_string();
                    for &member in combo.iter().rev() {
                        let entry = self.lower(&children[member], &cur_true, &cur_false)?;
                        cur_true = self.marker(id, &entry);
                    }
                    cur_false = cur_true;
                }
                Ok(cur_false)
            }
            Node::TopEvent { child, .. } => {
                // A top event referenced as an operand contributes its own
                // truth; mark it and continue through its child.
                let child = child.clone();
                let entry = self.lower(&child, true_to, false_to)?;
                Ok(self.marker(id, &entry))
            }
        }
    }
}

/// Size-`k` index combinations of `0..n` in lexicographic order. For `k` of
/// 0 (or k > n, which the self-check rejects) this yields the shapes that
/// make the OR-expansion trivially true resp. false.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            if n - i < k - current.len() {
                break;
            }
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

/// Compile a fault tree into a workflow. The tree must pass the self-check.
pub fn compile(tree: &FaultTree, opts: &CompileOptions) -> Result<Workflow, CompileError> {
    let report = self_check(tree);
    if !report.passed() {
        return Err(CompileError::SelfCheckFailed { report });
    }
    if tree.tops().any(|(_, label, _)| label == opts.no_fault_label) {
        return Err(CompileError::NoFaultLabelClash { label: opts.no_fault_label.clone() });
    }

    let mut b = Builder {
        tree,
        share: opts.share_condition_nodes,
        nodes: Vec::new(),
        connections: Vec::new(),
        name_counts: HashMap::new(),
        memo: HashMap::new(),
    };

    let trigger_name = b.alloc_name("input");
    b.nodes.push(WfNode::new(
        trigger_name.clone(),
        WfKind::Trigger { fields: leaf_input_params(tree) },
    ));
    let terminal = b.alloc_name(&format!("out_{}", opts.no_fault_label));
    b.nodes.push(WfNode::new(
        terminal.clone(),
        WfKind::Output { label: opts.no_fault_label.clone(), no_fault: true },
    ));

    // Stages are built back to front: each stage needs the next one's entry.
    let tops: Vec<(String, String, String)> = tree
        .tops()
        .map(|(id, label, child)| (id.to_string(), label.to_string(), child.to_string()))
        .collect();
    let mut next = terminal.clone();
    for (top_id, label, child) in tops.iter().rev() {
        let out_name = b.alloc_name(&format!("out_{label}"));
        b.nodes.push(
            WfNode::new(out_name.clone(), WfKind::Output { label: label.clone(), no_fault: false })
                .with_provenance(top_id),
        );
        b.connect(&out_name, 0, &next);
        let chain = b.lower(child, &out_name, &next)?;
        let enter = b.alloc_name(&format!("enter_{label}"));
        b.nodes.push(WfNode::new(enter.clone(), WfKind::Join).with_provenance(top_id));
        b.connect(&enter, 0, &chain);
        next = enter;
    }
    b.connect(&trigger_name, 0, &next);

    let (nodes, connections) = layout(b.nodes, &b.connections, &trigger_name);
    let workflow = Workflow::new(tree.name(), nodes, connections)?;
    debug_assert!(
        crate::workflow::validate_workflow(&workflow).passed(),
        "compiler must produce valid workflows"
    );
    Ok(workflow)
}

/// Order nodes by longest-path depth from the trigger and assign layered
/// canvas positions (depth × 240, breadth × 160).
fn layout(
    nodes: Vec<WfNode>,
    connections: &[Connection],
    trigger: &str,
) -> (Vec<WfNode>, Vec<Connection>) {
    let index: HashMap<&str, usize> =
        nodes.iter().enumerate().map(|(i, n)| (n.name.as_str(), i)).collect();
    let mut indegree = vec![0usize; nodes.len()];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for c in connections {
        let (f, t) = (index[c.from_node.as_str()], index[c.to_node.as_str()]);
        adj[f].push(t);
        indegree[t] += 1;
    }
    let mut depth = vec![0usize; nodes.len()];
    let mut queue: Vec<usize> = vec![index[trigger]];
    // Other roots (there should be none in compiled graphs) start at depth 0.
    for (i, d) in indegree.iter().enumerate() {
        if *d == 0 && i != index[trigger] {
            queue.push(i);
        }
    }
    let mut head = 0;
    while head < queue.len() {
        let n = queue[head];
        head += 1;
        for &m in &adj[n] {
            depth[m] = depth[m].max(depth[n] + 1);
            indegree[m] -= 1;
            if indegree[m] == 0 {
                queue.push(m);
            }
        }
    }

    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by_key(|&i| depth[i]); // stable: creation order within a layer
    let mut breadth_at: HashMap<usize, i64> = HashMap::new();
    let mut out_nodes = Vec::with_capacity(nodes.len());
    let mut nodes = nodes;
    for &i in &order {
        let b = breadth_at.entry(depth[i]).or_insert(0);
        let mut node = std::mem::replace(
            &mut nodes[i],
            WfNode::new(String::new(), WfKind::Join),
        );
        node.position = (depth[i] as i64 * 240, *b * 160);
        *b += 1;
        out_nodes.push(node);
    }

    // Normalize connection order to the grouping the document form uses
    // (source node order, then port), so a compiled workflow equals its own
    // re-import exactly.
    let node_rank: HashMap<&str, usize> =
        out_nodes.iter().enumerate().map(|(i, n)| (n.name.as_str(), i)).collect();
    let mut out_connections = connections.to_vec();
    out_connections
        .sort_by_key(|c| (node_rank[c.from_node.as_str()], c.branch));
    (out_nodes, out_connections)
}
