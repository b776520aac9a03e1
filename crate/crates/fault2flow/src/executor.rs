//! Deterministic workflow interpreter, the stand-in for running the
//! exported document on a live host.
//!
//! Exactly the supported node kinds are interpreted: the trigger starts the
//! single control token, Condition nodes route it out of port 0 (true) or 1
//! (false), Join and Output nodes pass it along port 0, and the walk ends at
//! the first node without an outgoing connection on the taken port. Ratios
//! in conditions are computed from the input exactly as the tree evaluator
//! computes derived parameters.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::pasta::Assignment;
use crate::workflow::{Operand, WfKind, Workflow};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExecError {
    #[error("missing input field `{field}`")]
    MissingField { field: String },
    #[error("division by zero evaluating `{numerator}/{denominator}` at node `{node}`")]
    DivisionByZero { node: String, numerator: String, denominator: String },
    #[error("dangling branch: node `{node}` has no connection on taken port {branch}")]
    DanglingBranch { node: String, branch: usize },
    #[error("ambiguous branch: node `{node}` fans out on port {branch}; sequential execution supports one connection per taken port")]
    AmbiguousBranch { node: String, branch: usize },
    #[error("workflow has no trigger node")]
    NoTrigger,
    #[error("workflow failed validation; refusing to execute")]
    Invalid,
}

/// Full record of one run: the input, every node visited in order, the
/// fault classes triggered, and the projection of the visit sequence onto
/// fault-tree provenance tags.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionTrace {
    pub input: Assignment,
    pub visited: Vec<String>,
    pub triggered: BTreeSet<String>,
    pub provenance_visited: Vec<String>,
}

impl ExecutionTrace {
    /// Line-oriented dump: one visited node per line as `name [provenance]`,
    /// final line `TRIGGERED: <comma list>|none`.
    pub fn render(&self, w: &Workflow) -> String {
        let mut out = String::new();
        for name in &self.visited {
            match w.node(name).and_then(|n| n.provenance.as_deref()) {
                Some(p) => out.push_str(&format!("{name} [{p}]\n")),
                None => out.push_str(&format!("{name}\n")),
            }
        }
        if self.triggered.is_empty() {
            out.push_str("TRIGGERED: none\n");
        } else {
            let list: Vec<&str> = self.triggered.iter().map(String::as_str).collect();
            out.push_str(&format!("TRIGGERED: {}\n", list.join(", ")));
        }
        out
    }
}

/// Execute the workflow on one input. The workflow must pass validation and
/// the input must cover every trigger form field.
pub fn execute(w: &Workflow, input: &Assignment) -> Result<ExecutionTrace, ExecError> {
    if !crate::workflow::validate_workflow(w).passed() {
        return Err(ExecError::Invalid);
    }
    let trigger = w.trigger().ok_or(ExecError::NoTrigger)?;
    if let WfKind::Trigger { fields } = &trigger.kind {
        for f in fields {
            if input.get(&f.name).is_none() {
                return Err(ExecError::MissingField { field: f.name.clone() });
            }
        }
    }

    let mut visited = Vec::new();
    let mut provenance_visited = Vec::new();
    let mut triggered = BTreeSet::new();
    let mut current = trigger.name.clone();
    loop {
        let node = w.node(&current).expect("connections validated at construction");
        visited.push(node.name.clone());
        if let Some(p) = &node.provenance {
            provenance_visited.push(p.clone());
        }

        let taken = match &node.kind {
            WfKind::Trigger { .. } | WfKind::Join => 0,
            WfKind::Output { label, no_fault } => {
                if !no_fault {
                    triggered.insert(label.clone());
                }
                0
            }
            WfKind::Condition(c) => {
                let value = match &c.operand {
                    Operand::Field(f) => input
                        .get(f)
                        .ok_or_else(|| ExecError::MissingField { field: f.clone() })?,
                    Operand::Ratio(a, b) => {
                        let num = input
                            .get(a)
                            .ok_or_else(|| ExecError::MissingField { field: a.clone() })?;
                        let den = input
                            .get(b)
                            .ok_or_else(|| ExecError::MissingField { field: b.clone() })?;
                        if den == 0.0 {
                            return Err(ExecError::DivisionByZero {
                                node: node.name.clone(),
                                numerator: a.clone(),
                                denominator: b.clone(),
                            });
                        }
                        num / den
                    }
                };
                if c.op.test(value, c.threshold) {
                    0
                } else {
                    1
                }
            }
            WfKind::Foreign { .. } => return Err(ExecError::Invalid),
        };

        let next = w.outgoing(&node.name, taken);
        match next.len() {
            0 => {
                if matches!(node.kind, WfKind::Condition(_)) {
                    return Err(ExecError::DanglingBranch {
                        node: node.name.clone(),
                        branch: taken,
                    });
                }
                break; // terminal
            }
            1 => current = next[0].to_node.clone(),
            _ => {
                return Err(ExecError::AmbiguousBranch { node: node.name.clone(), branch: taken })
            }
        }
    }

    Ok(ExecutionTrace { input: input.clone(), visited, triggered, provenance_visited })
}

/// Execute many inputs, collecting per-item results in input order.
/// Individual failures do not abort the batch.
pub fn batch_execute(
    w: &Workflow,
    inputs: &[Assignment],
) -> Vec<Result<ExecutionTrace, ExecError>> {
    inputs.iter().map(|i| execute(w, i)).collect()
}
