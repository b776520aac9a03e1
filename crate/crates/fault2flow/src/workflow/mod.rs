//! Workflow graph IR: typed nodes, branch-indexed connections, provenance
//! tags back to the fault tree, and the bit-exact n8n document form.
//!
//! The graph is a DAG rooted at a single trigger. Condition nodes have two
//! outgoing branch ports (0 = true, 1 = false, matching the host convention
//! for IF nodes); all other node kinds use port 0 only.

mod n8n;

pub use n8n::{export_n8n, import_n8n};

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::pasta::{CheckReport, CmpOp, Finding, Severity};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum WorkflowError {
    #[error("connection references unknown node `{name}`")]
    UnknownNode { name: String },
    #[error("workflow connection set is cyclic (through `{name}`)")]
    CyclicConnections { name: String },
    #[error("workflow failed validation:\n{}", report.render())]
    ValidationFailed { report: CheckReport },
    #[error("schema error at {path}: {message}")]
    SchemaError { path: String, message: String },
}

/// Numeric input field exposed by the trigger form.
#[derive(Debug, Clone, PartialEq)]
pub struct FormField {
    pub name: String,
    /// Unit label shown to the operator; empty when the schema has none.
    pub unit: String,
}

/// What a workflow condition tests: a trigger-declared field or a ratio of
/// two declared fields.
#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Field(String),
    Ratio(String, String),
}

impl Operand {
    /// Field names this operand reads.
    pub fn fields(&self) -> Vec<&str> {
        match self {
            Operand::Field(f) => vec![f],
            Operand::Ratio(a, b) => vec![a, b],
        }
    }
}

/// A threshold test attached to a Condition node.
#[derive(Debug, Clone, PartialEq)]
pub struct WfCondition {
    pub operand: Operand,
    pub op: CmpOp,
    pub threshold: f64,
}

/// Node kind with its kind-specific parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum WfKind {
    Trigger { fields: Vec<FormField> },
    Condition(WfCondition),
    Output { label: String, no_fault: bool },
    /// Pass-through used to merge control flow (serialized as a NoOp node).
    Join,
    /// Imported node of a type outside the supported subset. Kept so that
    /// externally produced documents can still be measured; rejected by
    /// validation, so it can never be executed or re-exported.
    Foreign { node_type: String },
}

/// One workflow node.
#[derive(Debug, Clone, PartialEq)]
pub struct WfNode {
    pub name: String,
    pub kind: WfKind,
    /// Fault-tree node id this node implements, when known.
    pub provenance: Option<String>,
    /// Canvas position, assigned by layered layout for human inspection.
    pub position: (i64, i64),
}

impl WfNode {
    pub fn new(name: impl Into<String>, kind: WfKind) -> Self {
        WfNode { name: name.into(), kind, provenance: None, position: (0, 0) }
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = Some(provenance.into());
        self
    }
}

/// Directed connection out of `from_node`'s port `branch` into `to_node`.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub from_node: String,
    pub branch: usize,
    pub to_node: String,
}

impl Connection {
    pub fn new(from: impl Into<String>, branch: usize, to: impl Into<String>) -> Self {
        Connection { from_node: from.into(), branch, to_node: to.into() }
    }
}

/// A workflow graph. Construction rejects connections to unknown nodes and
/// cyclic connection sets; everything else is reported by
/// [`validate_workflow`].
#[derive(Debug, Clone, PartialEq)]
pub struct Workflow {
    pub name: String,
    nodes: Vec<WfNode>,
    connections: Vec<Connection>,
}

impl Workflow {
    pub fn new(
        name: impl Into<String>,
        nodes: Vec<WfNode>,
        connections: Vec<Connection>,
    ) -> Result<Workflow, WorkflowError> {
        let known: HashSet<&str> = nodes.iter().map(|n| n.name.as_str()).collect();
        for c in &connections {
            for endpoint in [&c.from_node, &c.to_node] {
                if !known.contains(endpoint.as_str()) {
                    return Err(WorkflowError::UnknownNode { name: endpoint.clone() });
                }
            }
        }
        let w = Workflow { name: name.into(), nodes, connections };
        w.check_acyclic()?;
        Ok(w)
    }

    fn check_acyclic(&self) -> Result<(), WorkflowError> {
        // Kahn's algorithm over node names; duplicate names collapse into one
        // vertex, which is fine for cycle detection.
        let mut indegree: HashMap<&str, usize> =
            self.nodes.iter().map(|n| (n.name.as_str(), 0)).collect();
        let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
        for c in &self.connections {
            adj.entry(c.from_node.as_str()).or_default().push(c.to_node.as_str());
            *indegree.get_mut(c.to_node.as_str()).expect("validated endpoint") += 1;
        }
        let mut queue: Vec<&str> =
            indegree.iter().filter(|(_, d)| **d == 0).map(|(n, _)| *n).collect();
        let mut seen = 0;
        while let Some(n) = queue.pop() {
            seen += 1;
            for next in adj.get(n).into_iter().flatten() {
                let d = indegree.get_mut(next).expect("validated endpoint");
                *d -= 1;
                if *d == 0 {
                    queue.push(next);
                }
            }
        }
        if seen < indegree.len() {
            let stuck = indegree
                .iter()
                .filter(|(_, d)| **d > 0)
                .map(|(n, _)| *n)
                .min()
                .unwrap_or("?");
            return Err(WorkflowError::CyclicConnections { name: stuck.to_string() });
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[WfNode] {
        &self.nodes
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    pub fn node(&self, name: &str) -> Option<&WfNode> {
        self.nodes.iter().find(|n| n.name == name)
    }

    /// Outgoing connections of `name` on port `branch`, in stored order.
    pub fn outgoing(&self, name: &str, branch: usize) -> Vec<&Connection> {
        self.connections
            .iter()
            .filter(|c| c.from_node == name && c.branch == branch)
            .collect()
    }

    pub fn trigger(&self) -> Option<&WfNode> {
        self.nodes.iter().find(|n| matches!(n.kind, WfKind::Trigger { .. }))
    }

    /// Names reachable from the trigger, trigger included.
    fn reachable_from_trigger(&self) -> HashSet<&str> {
        let mut seen: HashSet<&str> = HashSet::new();
        let mut stack: Vec<&str> = self.trigger().map(|t| t.name.as_str()).into_iter().collect();
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            for c in &self.connections {
                if c.from_node == n {
                    stack.push(c.to_node.as_str());
                }
            }
        }
        seen
    }

    /// Mutate a node in place. Test and mutation machinery only; the caller
    /// is responsible for keeping the graph sane.
    pub fn node_mut(&mut self, name: &str) -> Option<&mut WfNode> {
        self.nodes.iter_mut().find(|n| n.name == name)
    }

    /// Remove a set of nodes and rewire every connection that targeted them
    /// to `retarget`. Used by metric tests that excise a provenance subgraph.
    pub fn excise_nodes(
        &self,
        names: &HashSet<String>,
        retarget: &str,
    ) -> Result<Workflow, WorkflowError> {
        let nodes: Vec<WfNode> =
            self.nodes.iter().filter(|n| !names.contains(&n.name)).cloned().collect();
        let mut connections = Vec::new();
        for c in &self.connections {
            if names.contains(&c.from_node) {
                continue;
            }
            let mut c = c.clone();
            if names.contains(&c.to_node) {
                c.to_node = retarget.to_string();
            }
            // Collapse duplicate edges produced by the rewiring.
            if !connections.contains(&c) {
                connections.push(c);
            }
        }
        Workflow::new(self.name.clone(), nodes, connections)
    }
}

/// Validate the workflow's type invariants. Violations are error findings;
/// unreachable output labels and missing provenance draw warnings.
pub fn validate_workflow(w: &Workflow) -> CheckReport {
    let mut findings = Vec::new();
    fn err(findings: &mut Vec<Finding>, node: &str, message: String) {
        findings.push(Finding { severity: Severity::Error, node: node.to_string(), message });
    }

    let mut seen = HashSet::new();
    for n in w.nodes() {
        if !seen.insert(n.name.as_str()) {
            err(&mut findings, &n.name, "duplicate node name".into());
        }
    }

    let triggers: Vec<&WfNode> =
        w.nodes().iter().filter(|n| matches!(n.kind, WfKind::Trigger { .. })).collect();
    if triggers.len() != 1 {
        err(
            &mut findings,
            triggers.first().map(|n| n.name.as_str()).unwrap_or("workflow"),
            format!("expected exactly one trigger node, found {}", triggers.len()),
        );
    }

    for n in w.nodes() {
        let max_port = match n.kind {
            WfKind::Condition(_) => 1,
            _ => 0,
        };
        for c in w.connections() {
            if c.from_node == n.name && c.branch > max_port {
                err(&mut findings, &n.name, format!("connection out of unsupported port {}", c.branch));
            }
        }
        match &n.kind {
            WfKind::Condition(_) => {
                for port in [0usize, 1] {
                    if w.outgoing(&n.name, port).is_empty() {
                        err(
                            &mut findings,
                            &n.name,
                            format!(
                                "missing branch: no outgoing connection on port {port} ({})",
                                if port == 0 { "true" } else { "false" }
                            ),
                        );
                    }
                }
            }
            WfKind::Foreign { node_type } => {
                err(&mut findings, &n.name, format!("unsupported node type `{node_type}`"));
            }
            _ => {}
        }
    }

    let reachable = w.reachable_from_trigger();
    for n in w.nodes() {
        if !matches!(n.kind, WfKind::Trigger { .. }) && !reachable.contains(n.name.as_str()) {
            err(&mut findings, &n.name, "not reachable from the trigger".into());
            if let WfKind::Output { label, .. } = &n.kind {
                findings.push(Finding {
                    severity: Severity::Warning,
                    node: n.name.clone(),
                    message: format!("output label `{label}` is unreachable"),
                });
            }
        }
    }

    for n in w.nodes() {
        if let WfKind::Output { label, no_fault: false } = &n.kind {
            if n.provenance.is_none() {
                findings.push(Finding {
                    severity: Severity::Warning,
                    node: n.name.clone(),
                    message: format!(
                        "output `{label}` carries no provenance; topology metrics will not count it"
                    ),
                });
            }
        }
    }

    CheckReport::new(findings)
}
