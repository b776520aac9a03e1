//! Structural and logical self-check of a parsed fault tree.
//!
//! Hard defects become error findings: unreachable nodes, empty gates,
//! k-of-n bound violations, duplicate fault classes. Suspicious-but-legal
//! shapes become warnings: unsatisfiable AND siblings, unreferenced
//! parameters, thresholds outside a declared plausible range.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::pasta::ast::{CmpOp, Condition, FaultTree, GateKind, Node};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => f.write_str("error"),
            Severity::Warning => f.write_str("warning"),
        }
    }
}

/// One finding of a check run, anchored to a node (or parameter) id.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub severity: Severity,
    pub node: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.severity, self.node, self.message)
    }
}

/// Outcome of a self-check or workflow validation run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    findings: Vec<Finding>,
}

impl CheckReport {
    pub fn new(findings: Vec<Finding>) -> Self {
        CheckReport { findings }
    }

    /// True iff there are zero error-severity findings.
    pub fn passed(&self) -> bool {
        self.findings.iter().all(|f| f.severity != Severity::Error)
    }

    pub fn findings(&self) -> &[Finding] {
        &self.findings
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Warning)
    }

    /// One finding per line, `severity node message`. This is also the
    /// feedback format handed to translation hooks.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for f in &self.findings {
            out.push_str(&f.to_string());
            out.push('\n');
        }
        out
    }
}

/// Optional knobs for the self-check.
#[derive(Debug, Clone, Default)]
pub struct SelfCheckOptions {
    /// Plausible `(low, high)` range per measured parameter; thresholds of
    /// conditions on a ranged parameter outside it draw a warning.
    pub plausible_ranges: BTreeMap<String, (f64, f64)>,
}

/// Run the self-check with default options.
pub fn self_check(tree: &FaultTree) -> CheckReport {
    self_check_with(tree, &SelfCheckOptions::default())
}

pub fn self_check_with(tree: &FaultTree, opts: &SelfCheckOptions) -> CheckReport {
    let mut findings = Vec::new();

    let reachable = tree.reachable();
    for (id, _) in tree.nodes() {
        if !reachable.contains(id) {
            findings.push(Finding {
                severity: Severity::Error,
                node: id.to_string(),
                message: "unreachable from every top event".into(),
            });
        }
    }

    let mut labels_seen: HashMap<&str, &str> = HashMap::new();
    for (id, node) in tree.nodes() {
        match node {
            Node::Gate { kind, children } => {
                if children.is_empty() {
                    findings.push(Finding {
                        severity: Severity::Error,
                        node: id.to_string(),
                        message: "gate has no children (arity must be >= 1)".into(),
                    });
                }
                if let GateKind::KofN(k) = kind {
                    if *k < 1 || (!children.is_empty() && *k > children.len()) {
                        findings.push(Finding {
                            severity: Severity::Error,
                            node: id.to_string(),
                            message: format!(
                                "kofn bound violated: k={} with {} children",
                                k,
                                children.len()
                            ),
                        });
                    }
                }
            }
            Node::TopEvent { label, .. } => {
                if let Some(first) = labels_seen.insert(label.as_str(), id) {
                    findings.push(Finding {
                        severity: Severity::Error,
                        node: id.to_string(),
                        message: format!(
                            "duplicate fault class `{label}` (first declared by `{first}`)"
                        ),
                    });
                }
            }
            Node::BasicEvent { .. } => {}
        }
    }

    unsatisfiable_and_siblings(tree, &mut findings);
    unreferenced_parameters(tree, &mut findings);
    out_of_range_thresholds(tree, opts, &mut findings);

    CheckReport { findings }
}

/// A pair of truth intervals is unsatisfiable when their intersection is
/// empty, e.g. `x < 1` and `x > 2`.
fn conditions_conflict(a: &Condition, b: &Condition) -> bool {
    if a.parameter != b.parameter {
        return false;
    }
    // Closed/open bounds as (value, inclusive).
    let upper = |c: &Condition| match c.op {
        CmpOp::Lt => Some((c.threshold, false)),
        CmpOp::Le => Some((c.threshold, true)),
        _ => None,
    };
    let lower = |c: &Condition| match c.op {
        CmpOp::Gt => Some((c.threshold, false)),
        CmpOp::Ge => Some((c.threshold, true)),
        _ => None,
    };
    for (lo, hi) in [(lower(a), upper(b)), (lower(b), upper(a))] {
        if let (Some((lo, lo_inc)), Some((hi, hi_inc))) = (lo, hi) {
            if lo > hi || (lo == hi && !(lo_inc && hi_inc)) {
                return true;
            }
        }
    }
    false
}

fn unsatisfiable_and_siblings(tree: &FaultTree, findings: &mut Vec<Finding>) {
    for (id, node) in tree.nodes() {
        let Node::Gate { kind: GateKind::And, children } = node else { continue };
        let conds: Vec<(&str, &Condition)> = children
            .iter()
            .filter_map(|c| match tree.node(c) {
                Some(Node::BasicEvent { condition }) => Some((c.as_str(), condition)),
                _ => None,
            })
            .collect();
        for i in 0..conds.len() {
            for j in (i + 1)..conds.len() {
                if conditions_conflict(conds[i].1, conds[j].1) {
                    findings.push(Finding {
                        severity: Severity::Warning,
                        node: id.to_string(),
                        message: format!(
                            "unsatisfiable conjunction: `{}` and `{}` cannot both hold",
                            conds[i].0, conds[j].0
                        ),
                    });
                }
            }
        }
    }
}

fn unreferenced_parameters(tree: &FaultTree, findings: &mut Vec<Finding>) {
    let mut referenced: HashSet<&str> = HashSet::new();
    for (_, cond) in tree.basics() {
        referenced.insert(cond.parameter.as_str());
        if let Some(spec) = tree.param(&cond.parameter) {
            if let crate::pasta::ParamKind::Derived { numerator, denominator } = &spec.kind {
                referenced.insert(numerator.as_str());
                referenced.insert(denominator.as_str());
            }
        }
    }
    for p in tree.schema() {
        if !referenced.contains(p.name.as_str()) {
            findings.push(Finding {
                severity: Severity::Warning,
                node: p.name.clone(),
                message: "parameter is never referenced by a basic event".into(),
            });
        }
    }
}

fn out_of_range_thresholds(
    tree: &FaultTree,
    opts: &SelfCheckOptions,
    findings: &mut Vec<Finding>,
) {
    if opts.plausible_ranges.is_empty() {
        return;
    }
    for (id, cond) in tree.basics() {
        if let Some((lo, hi)) = opts.plausible_ranges.get(&cond.parameter) {
            if cond.threshold < *lo || cond.threshold > *hi {
                findings.push(Finding {
                    severity: Severity::Warning,
                    node: id.to_string(),
                    message: format!(
                        "threshold {} outside plausible range [{lo}, {hi}] of `{}`",
                        cond.threshold, cond.parameter
                    ),
                });
            }
        }
    }
}
