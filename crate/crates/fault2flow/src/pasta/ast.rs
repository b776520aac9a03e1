//! Typed fault-tree AST: parameter schema, threshold conditions, gates and
//! top events. Trees are immutable once constructed; `FaultTree::new` rejects
//! anything that would make the structure ill-defined (duplicate ids, dangling
//! references, cycles). The softer logical rules live in the self-check.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::pasta::PastaError;

/// Node identifier inside a fault tree. Identifiers are `[a-z_][a-z0-9_]*`.
pub type NodeId = String;

/// Comparison operator of a threshold condition. Equality on reals is
/// deliberately not representable; interval tests are written as a
/// conjunction of two inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<CmpOp> {
        match s {
            "<" => Some(CmpOp::Lt),
            "<=" => Some(CmpOp::Le),
            ">" => Some(CmpOp::Gt),
            ">=" => Some(CmpOp::Ge),
            _ => None,
        }
    }

    /// IEEE comparison, no epsilon: `x = t` satisfies only `<=` and `>=`.
    pub fn test(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }

    /// Logical negation: `<` becomes `>=` and so on.
    pub fn negated(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a schema parameter gets its value.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamKind {
    /// Supplied directly in an input assignment.
    Measured,
    /// Quotient of two measured parameters, computed on demand.
    Derived { numerator: String, denominator: String },
}

/// One declared parameter of the tree's input schema.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    /// Free-text unit label, e.g. `µL/L` or `°C`. Empty is allowed.
    pub unit: String,
    pub kind: ParamKind,
}

impl ParamSpec {
    pub fn measured(name: impl Into<String>, unit: impl Into<String>) -> Self {
        ParamSpec { name: name.into(), unit: unit.into(), kind: ParamKind::Measured }
    }

    pub fn ratio(
        name: impl Into<String>,
        numerator: impl Into<String>,
        denominator: impl Into<String>,
    ) -> Self {
        ParamSpec {
            name: name.into(),
            unit: String::new(),
            kind: ParamKind::Derived {
                numerator: numerator.into(),
                denominator: denominator.into(),
            },
        }
    }

    pub fn is_measured(&self) -> bool {
        matches!(self.kind, ParamKind::Measured)
    }
}

/// A threshold test over a schema parameter (measured or derived).
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub parameter: String,
    pub op: CmpOp,
    pub threshold: f64,
}

impl Condition {
    pub fn new(parameter: impl Into<String>, op: CmpOp, threshold: f64) -> Self {
        Condition { parameter: parameter.into(), op, threshold }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.parameter, self.op, self.threshold)
    }
}

/// Logic gate kind. `KofN(k)` is true when at least `k` children are true.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    And,
    Or,
    KofN(usize),
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateKind::And => f.write_str("and"),
            GateKind::Or => f.write_str("or"),
            GateKind::KofN(k) => write!(f, "kofn({k})"),
        }
    }
}

/// One node of the fault tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Root fault class; true when its child is true.
    TopEvent { label: String, child: NodeId },
    Gate { kind: GateKind, children: Vec<NodeId> },
    BasicEvent { condition: Condition },
}

/// Input vector: one finite value per measured parameter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    values: BTreeMap<String, f64>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    /// Insert a value; non-finite values are rejected.
    pub fn set(&mut self, name: impl Into<String>, value: f64) -> Result<(), PastaError> {
        let name = name.into();
        if !value.is_finite() {
            return Err(PastaError::NonFiniteValue { name });
        }
        self.values.insert(name, value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl FromIterator<(String, f64)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (String, f64)>>(iter: T) -> Self {
        let mut a = Assignment::new();
        for (k, v) in iter {
            // Non-finite entries are dropped here; use `set` for checked inserts.
            if v.is_finite() {
                a.values.insert(k, v);
            }
        }
        a
    }
}

/// A validated fault tree: declaration-ordered schema and nodes, acyclic,
/// with every reference resolved and all identifiers unique.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultTree {
    name: String,
    schema: Vec<ParamSpec>,
    order: Vec<NodeId>,
    nodes: HashMap<NodeId, Node>,
}

impl FaultTree {
    /// Build and validate a tree. `nodes` is taken in declaration order.
    ///
    /// Rejected here: duplicate identifiers (one namespace across the tree
    /// name, parameters and nodes), unresolved references, derived parameters
    /// over anything but two measured parameters, and cycles. Logical defects
    /// such as unreachable nodes are reported by `self_check`, not here.
    pub fn new(
        name: impl Into<String>,
        schema: Vec<ParamSpec>,
        nodes: Vec<(NodeId, Node)>,
    ) -> Result<FaultTree, PastaError> {
        let name = name.into();
        let mut seen: HashSet<&str> = HashSet::new();
        seen.insert(name.as_str());
        for p in &schema {
            if !seen.insert(p.name.as_str()) {
                return Err(PastaError::DuplicateId { id: p.name.clone() });
            }
        }
        for (id, _) in &nodes {
            if !seen.insert(id.as_str()) {
                return Err(PastaError::DuplicateId { id: id.clone() });
            }
        }

        let by_name: HashMap<&str, &ParamSpec> =
            schema.iter().map(|p| (p.name.as_str(), p)).collect();
        for p in &schema {
            if let ParamKind::Derived { numerator, denominator } = &p.kind {
                for part in [numerator, denominator] {
                    match by_name.get(part.as_str()) {
                        None => {
                            return Err(PastaError::UnresolvedReference {
                                id: part.clone(),
                                referrer: p.name.clone(),
                            })
                        }
                        Some(spec) if !spec.is_measured() => {
                            return Err(PastaError::DerivedOverDerived {
                                id: p.name.clone(),
                                via: part.clone(),
                            })
                        }
                        Some(_) => {}
                    }
                }
            }
        }

        let order: Vec<NodeId> = nodes.iter().map(|(id, _)| id.clone()).collect();
        let node_map: HashMap<NodeId, Node> = nodes.into_iter().collect();

        for (id, node) in &node_map {
            match node {
                Node::TopEvent { child, .. } => {
                    if !node_map.contains_key(child) {
                        return Err(PastaError::UnresolvedReference {
                            id: child.clone(),
                            referrer: id.clone(),
                        });
                    }
                }
                Node::Gate { children, .. } => {
                    for c in children {
                        if !node_map.contains_key(c) {
                            return Err(PastaError::UnresolvedReference {
                                id: c.clone(),
                                referrer: id.clone(),
                            });
                        }
                    }
                }
                Node::BasicEvent { condition } => {
                    if !by_name.contains_key(condition.parameter.as_str()) {
                        return Err(PastaError::UnresolvedReference {
                            id: condition.parameter.clone(),
                            referrer: id.clone(),
                        });
                    }
                    if !condition.threshold.is_finite() {
                        return Err(PastaError::NonFiniteValue { name: id.clone() });
                    }
                }
            }
        }

        let tree = FaultTree { name, schema, order, nodes: node_map };
        tree.check_acyclic()?;
        Ok(tree)
    }

    fn check_acyclic(&self) -> Result<(), PastaError> {
        // Iterative three-colour DFS; recursion depth is attacker-controlled
        // for parsed input so the stack stays on the heap.
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Grey,
            Black,
        }
        let mut marks: HashMap<&str, Mark> =
            self.nodes.keys().map(|k| (k.as_str(), Mark::White)).collect();
        for start in &self.order {
            if marks[start.as_str()] != Mark::White {
                continue;
            }
            // (node, next child index)
            let mut stack: Vec<(&str, usize)> = vec![(start.as_str(), 0)];
            marks.insert(start.as_str(), Mark::Grey);
            while let Some((id, idx)) = stack.pop() {
                let children = self.children_of(id);
                if idx < children.len() {
                    stack.push((id, idx + 1));
                    let child = children[idx];
                    match marks[child] {
                        Mark::Grey => {
                            return Err(PastaError::CycleDetected { id: child.to_string() })
                        }
                        Mark::White => {
                            marks.insert(child, Mark::Grey);
                            stack.push((child, 0));
                        }
                        Mark::Black => {}
                    }
                } else {
                    marks.insert(id, Mark::Black);
                }
            }
        }
        Ok(())
    }

    fn children_of(&self, id: &str) -> Vec<&str> {
        match &self.nodes[id] {
            Node::TopEvent { child, .. } => vec![child.as_str()],
            Node::Gate { children, .. } => children.iter().map(|c| c.as_str()).collect(),
            Node::BasicEvent { .. } => vec![],
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &[ParamSpec] {
        &self.schema
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.schema.iter().find(|p| p.name == name)
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    /// Node ids in declaration order.
    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.order.iter().map(|s| s.as_str())
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&str, &Node)> {
        self.order.iter().map(move |id| (id.as_str(), &self.nodes[id]))
    }

    pub fn node_count(&self) -> usize {
        self.order.len()
    }

    /// Top events `(node id, fault class label, child)` in declaration order.
    pub fn tops(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.nodes().filter_map(|(id, n)| match n {
            Node::TopEvent { label, child } => Some((id, label.as_str(), child.as_str())),
            _ => None,
        })
    }

    /// Basic events `(node id, condition)` in declaration order.
    pub fn basics(&self) -> impl Iterator<Item = (&str, &Condition)> {
        self.nodes().filter_map(|(id, n)| match n {
            Node::BasicEvent { condition } => Some((id, condition)),
            _ => None,
        })
    }

    /// Parent→child edge set of the tree, in declaration order, deduplicated.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for (id, _) in self.nodes() {
            for child in self.children_of(id) {
                let e = (id.to_string(), child.to_string());
                if seen.insert(e.clone()) {
                    out.push(e);
                }
            }
        }
        out
    }

    /// All root-to-leaf node-id paths (TopEvent through gates to BasicEvent),
    /// tops in declaration order, children in stored order.
    pub fn root_leaf_paths(&self) -> Vec<Vec<NodeId>> {
        let mut paths = Vec::new();
        for (top_id, _, child) in self.tops() {
            let mut prefix = vec![top_id.to_string()];
            self.collect_paths(child, &mut prefix, &mut paths);
        }
        paths
    }

    fn collect_paths(&self, id: &str, prefix: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
        prefix.push(id.to_string());
        match &self.nodes[id] {
            Node::BasicEvent { .. } => out.push(prefix.clone()),
            Node::Gate { children, .. } => {
                for c in children {
                    self.collect_paths(c, prefix, out);
                }
            }
            Node::TopEvent { child, .. } => self.collect_paths(child, prefix, out),
        }
        prefix.pop();
    }

    /// Ids reachable from any top event.
    pub fn reachable(&self) -> HashSet<NodeId> {
        let mut seen: HashSet<NodeId> = HashSet::new();
        let mut stack: Vec<&str> = self.tops().map(|(id, _, _)| id).collect();
        while let Some(id) = stack.pop() {
            if !seen.insert(id.to_string()) {
                continue;
            }
            stack.extend(self.children_of(id));
        }
        seen
    }

    /// Distinct basic-event node ids, declaration order. This is the tree's
    /// leaf set for region enumeration and caps.
    pub fn leaf_ids(&self) -> Vec<NodeId> {
        self.basics().map(|(id, _)| id.to_string()).collect()
    }

    /// Equality up to declaration order: same name, same schema and same
    /// node map. `emit_pasta` normalizes definition order, so round-trips of
    /// non-canonical sources compare with this instead of `==`.
    pub fn structurally_equal(&self, other: &FaultTree) -> bool {
        if self.name != other.name || self.nodes != other.nodes {
            return false;
        }
        let schema_map = |t: &FaultTree| -> BTreeMap<String, ParamSpec> {
            t.schema.iter().map(|p| (p.name.clone(), p.clone())).collect()
        };
        schema_map(self) == schema_map(other)
    }

    /// Decompose into parts for structural rewriting. The parts must be fed
    /// back through `FaultTree::new`, which re-validates everything.
    pub(crate) fn into_parts(self) -> (String, Vec<ParamSpec>, Vec<(NodeId, Node)>) {
        let FaultTree { name, schema, order, mut nodes } = self;
        let ordered = order
            .into_iter()
            .map(|id| {
                let node = nodes.remove(&id).expect("order and nodes agree");
                (id, node)
            })
            .collect();
        (name, schema, ordered)
    }
}
