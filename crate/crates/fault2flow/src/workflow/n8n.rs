//! Bit-exact n8n document serialization.
//!
//! One UTF-8 JSON document `{name, nodes, connections}`; each node is
//! `{id, name, type, typeVersion, position, parameters, meta?}` with two-space
//! indentation, keys in exactly that order, LF endings and a trailing
//! newline. Node types: trigger → `n8n-nodes-base.formTrigger`, condition →
//! `n8n-nodes-base.if`, output → `n8n-nodes-base.set`, join →
//! `n8n-nodes-base.noOp`. `connections` maps node name →
//! `{"main": [[{node, type: "main", index}], ...]}` with the outer array
//! indexed by branch port. Provenance lives under
//! `meta.fault2flow.provenance`, invisible to the workflow host.

use serde_json::{json, Map, Value};

use super::{
    validate_workflow, Connection, FormField, Operand, WfCondition, WfKind, WfNode, Workflow,
    WorkflowError,
};
use crate::pasta::CmpOp;

const TYPE_TRIGGER: &str = "n8n-nodes-base.formTrigger";
const TYPE_IF: &str = "n8n-nodes-base.if";
const TYPE_SET: &str = "n8n-nodes-base.set";
const TYPE_NOOP: &str = "n8n-nodes-base.noOp";

fn op_to_operation(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Lt => "smaller",
        CmpOp::Le => "smallerEqual",
        CmpOp::Gt => "larger",
        CmpOp::Ge => "largerEqual",
    }
}

fn operation_to_op(s: &str) -> Option<CmpOp> {
    match s {
        "smaller" => Some(CmpOp::Lt),
        "smallerEqual" => Some(CmpOp::Le),
        "larger" => Some(CmpOp::Gt),
        "largerEqual" => Some(CmpOp::Ge),
        _ => None,
    }
}

fn operand_expression(operand: &Operand) -> String {
    match operand {
        Operand::Field(f) => format!("={{{{$json.{f}}}}}"),
        Operand::Ratio(a, b) => format!("={{{{$json.{a} / $json.{b}}}}}"),
    }
}

fn parse_operand_expression(expr: &str) -> Option<Operand> {
    let inner = expr.strip_prefix("={{")?.strip_suffix("}}")?.trim();
    let field = |s: &str| -> Option<String> {
        let name = s.trim().strip_prefix("$json.")?;
        (!name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
            .then(|| name.to_string())
    };
    match inner.split_once('/') {
        Some((a, b)) => Some(Operand::Ratio(field(a)?, field(b)?)),
        None => Some(Operand::Field(field(inner)?)),
    }
}

fn node_parameters(node: &WfNode, workflow_name: &str) -> Value {
    match &node.kind {
        WfKind::Trigger { fields } => {
            let values: Vec<Value> = fields
                .iter()
                .map(|f| {
                    json_ordered(vec![
                        ("fieldLabel", Value::String(f.name.clone())),
                        ("fieldType", Value::String("number".into())),
                        ("placeholder", Value::String(f.unit.clone())),
                    ])
                })
                .collect();
            json_ordered(vec![
                ("formTitle", Value::String(workflow_name.to_string())),
                ("formFields", json_ordered(vec![("values", Value::Array(values))])),
            ])
        }
        WfKind::Condition(c) => {
            let entry = json_ordered(vec![
                ("value1", Value::String(operand_expression(&c.operand))),
                ("operation", Value::String(op_to_operation(c.op).into())),
                ("value2", json!(c.threshold)),
            ]);
            json_ordered(vec![(
                "conditions",
                json_ordered(vec![("number", Value::Array(vec![entry]))]),
            )])
        }
        WfKind::Output { label, .. } => {
            let entry = json_ordered(vec![
                ("name", Value::String("fault_class".into())),
                ("value", Value::String(label.clone())),
            ]);
            json_ordered(vec![(
                "values",
                json_ordered(vec![("string", Value::Array(vec![entry]))]),
            )])
        }
        WfKind::Join => Value::Object(Map::new()),
        WfKind::Foreign { .. } => Value::Object(Map::new()),
    }
}

fn json_ordered(entries: Vec<(&str, Value)>) -> Value {
    let mut map = Map::new();
    for (k, v) in entries {
        map.insert(k.to_string(), v);
    }
    Value::Object(map)
}

fn node_meta(node: &WfNode) -> Option<Value> {
    let mut inner = Map::new();
    if let Some(p) = &node.provenance {
        inner.insert("provenance".into(), Value::String(p.clone()));
    }
    if matches!(node.kind, WfKind::Output { no_fault: true, .. }) {
        inner.insert("role".into(), Value::String("no_fault".into()));
    }
    if inner.is_empty() {
        return None;
    }
    let mut meta = Map::new();
    meta.insert("fault2flow".into(), Value::Object(inner));
    Some(Value::Object(meta))
}

/// Serialize a workflow to the n8n document form. The workflow must pass
/// validation. Output is byte-deterministic with a trailing newline.
pub fn export_n8n(w: &Workflow) -> Result<String, WorkflowError> {
    let report = validate_workflow(w);
    if !report.passed() {
        return Err(WorkflowError::ValidationFailed { report });
    }

    let nodes: Vec<Value> = w
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let type_str = match &n.kind {
                WfKind::Trigger { .. } => TYPE_TRIGGER,
                WfKind::Condition(_) => TYPE_IF,
                WfKind::Output { .. } => TYPE_SET,
                WfKind::Join => TYPE_NOOP,
                WfKind::Foreign { node_type } => node_type.as_str(),
            };
            let mut entries = vec![
                ("id", Value::String(format!("n{}", i + 1))),
                ("name", Value::String(n.name.clone())),
                ("type", Value::String(type_str.into())),
                ("typeVersion", json!(1)),
                ("position", json!([n.position.0, n.position.1])),
                ("parameters", node_parameters(n, &w.name)),
            ];
            if let Some(meta) = node_meta(n) {
                entries.push(("meta", meta));
            }
            json_ordered(entries)
        })
        .collect();

    // Connections grouped by source node in node-list order, outer array
    // indexed by branch port, inner arrays in stored connection order.
    let mut connections = Map::new();
    for n in w.nodes() {
        let outgoing: Vec<&Connection> =
            w.connections().iter().filter(|c| c.from_node == n.name).collect();
        if outgoing.is_empty() {
            continue;
        }
        let max_port = outgoing.iter().map(|c| c.branch).max().unwrap_or(0);
        let mut ports: Vec<Value> = Vec::with_capacity(max_port + 1);
        for port in 0..=max_port {
            let targets: Vec<Value> = outgoing
                .iter()
                .filter(|c| c.branch == port)
                .map(|c| {
                    json_ordered(vec![
                        ("node", Value::String(c.to_node.clone())),
                        ("type", Value::String("main".into())),
                        ("index", json!(0)),
                    ])
                })
                .collect();
            ports.push(Value::Array(targets));
        }
        connections.insert(
            n.name.clone(),
            json_ordered(vec![("main", Value::Array(ports))]),
        );
    }

    let doc = json_ordered(vec![
        ("name", Value::String(w.name.clone())),
        ("nodes", Value::Array(nodes)),
        ("connections", Value::Object(connections)),
    ]);
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable value");
    text.push('\n');
    Ok(text)
}

fn schema_err(path: impl Into<String>, message: impl Into<String>) -> WorkflowError {
    WorkflowError::SchemaError { path: path.into(), message: message.into() }
}

fn as_object<'v>(v: &'v Value, path: &str) -> Result<&'v Map<String, Value>, WorkflowError> {
    v.as_object().ok_or_else(|| schema_err(path, "expected an object"))
}

fn as_array<'v>(v: &'v Value, path: &str) -> Result<&'v Vec<Value>, WorkflowError> {
    v.as_array().ok_or_else(|| schema_err(path, "expected an array"))
}

fn as_str<'v>(v: &'v Value, path: &str) -> Result<&'v str, WorkflowError> {
    v.as_str().ok_or_else(|| schema_err(path, "expected a string"))
}

fn get<'v>(obj: &'v Map<String, Value>, key: &str, path: &str) -> Result<&'v Value, WorkflowError> {
    obj.get(key).ok_or_else(|| schema_err(format!("{path}/{key}"), "missing required field"))
}

fn parse_trigger_params(params: &Map<String, Value>, path: &str) -> Result<WfKind, WorkflowError> {
    let mut fields = Vec::new();
    if let Some(ff) = params.get("formFields") {
        let values = get(as_object(ff, &format!("{path}/formFields"))?, "values", path)?;
        for (i, v) in as_array(values, &format!("{path}/formFields/values"))?.iter().enumerate() {
            let p = format!("{path}/formFields/values/{i}");
            let obj = as_object(v, &p)?;
            let name = as_str(get(obj, "fieldLabel", &p)?, &p)?.to_string();
            let unit = obj.get("placeholder").and_then(Value::as_str).unwrap_or("").to_string();
            fields.push(FormField { name, unit });
        }
    }
    Ok(WfKind::Trigger { fields })
}

fn parse_condition_params(
    params: &Map<String, Value>,
    path: &str,
) -> Result<WfKind, WorkflowError> {
    let conditions = get(params, "conditions", path)?;
    let number = get(as_object(conditions, &format!("{path}/conditions"))?, "number", path)?;
    let arr = as_array(number, &format!("{path}/conditions/number"))?;
    let p = format!("{path}/conditions/number/0");
    let first = arr.first().ok_or_else(|| schema_err(&p, "expected one condition entry"))?;
    let obj = as_object(first, &p)?;
    let expr = as_str(get(obj, "value1", &p)?, &p)?;
    let operand = parse_operand_expression(expr)
        .ok_or_else(|| schema_err(format!("{p}/value1"), format!("unparseable expression `{expr}`")))?;
    let operation = as_str(get(obj, "operation", &p)?, &p)?;
    let op = operation_to_op(operation)
        .ok_or_else(|| schema_err(format!("{p}/operation"), format!("unknown operation `{operation}`")))?;
    let threshold = get(obj, "value2", &p)?
        .as_f64()
        .ok_or_else(|| schema_err(format!("{p}/value2"), "expected a number"))?;
    Ok(WfKind::Condition(WfCondition { operand, op, threshold }))
}

fn parse_output_params(
    params: &Map<String, Value>,
    no_fault: bool,
    path: &str,
) -> Result<WfKind, WorkflowError> {
    let values = get(params, "values", path)?;
    let string = get(as_object(values, &format!("{path}/values"))?, "string", path)?;
    let arr = as_array(string, &format!("{path}/values/string"))?;
    let p = format!("{path}/values/string/0");
    let first = arr.first().ok_or_else(|| schema_err(&p, "expected one set entry"))?;
    let label = as_str(get(as_object(first, &p)?, "value", &p)?, &p)?.to_string();
    Ok(WfKind::Output { label, no_fault })
}

/// Parse an n8n document back into a workflow. Provenance is restored from
/// the vendored `meta.fault2flow` field when present, absent otherwise.
pub fn import_n8n(document: &str) -> Result<Workflow, WorkflowError> {
    let root: Value = serde_json::from_str(document)
        .map_err(|e| schema_err("/", format!("invalid JSON: {e}")))?;
    let root = as_object(&root, "/")?;
    let name = as_str(get(root, "name", "")?, "/name")?.to_string();
    let nodes_val = get(root, "nodes", "")?;
    let connections_val = get(root, "connections", "")?;

    let mut nodes = Vec::new();
    for (i, v) in as_array(nodes_val, "/nodes")?.iter().enumerate() {
        let path = format!("/nodes/{i}");
        let obj = as_object(v, &path)?;
        let node_name = as_str(get(obj, "name", &path)?, &path)?.to_string();
        let node_type = as_str(get(obj, "type", &path)?, &path)?;
        let position = as_array(get(obj, "position", &path)?, &format!("{path}/position"))?;
        if position.len() != 2 {
            return Err(schema_err(format!("{path}/position"), "expected [x, y]"));
        }
        let pos_num = |idx: usize| -> Result<i64, WorkflowError> {
            position[idx]
                .as_f64()
                .map(|f| f as i64)
                .ok_or_else(|| schema_err(format!("{path}/position/{idx}"), "expected a number"))
        };
        let position = (pos_num(0)?, pos_num(1)?);
        let params_path = format!("{path}/parameters");
        let params = as_object(get(obj, "parameters", &path)?, &params_path)?;

        let meta = obj
            .get("meta")
            .and_then(|m| m.get("fault2flow"))
            .and_then(Value::as_object);
        let provenance = meta
            .and_then(|m| m.get("provenance"))
            .and_then(Value::as_str)
            .map(str::to_string);
        let no_fault = meta
            .and_then(|m| m.get("role"))
            .and_then(Value::as_str)
            .is_some_and(|r| r == "no_fault");

        let kind = match node_type {
            TYPE_TRIGGER => parse_trigger_params(params, &params_path)?,
            TYPE_IF => parse_condition_params(params, &params_path)?,
            TYPE_SET => parse_output_params(params, no_fault, &params_path)?,
            TYPE_NOOP => WfKind::Join,
            other => WfKind::Foreign { node_type: other.to_string() },
        };
        nodes.push(WfNode { name: node_name, kind, provenance, position });
    }

    let mut connections = Vec::new();
    let conn_obj = as_object(connections_val, "/connections")?;
    for (from, groups) in conn_obj {
        let path = format!("/connections/{from}");
        let main = get(as_object(groups, &path)?, "main", &path)?;
        for (port, targets) in as_array(main, &format!("{path}/main"))?.iter().enumerate() {
            for (j, t) in as_array(targets, &format!("{path}/main/{port}"))?.iter().enumerate() {
                let tp = format!("{path}/main/{port}/{j}");
                let to = as_str(get(as_object(t, &tp)?, "node", &tp)?, &tp)?.to_string();
                connections.push(Connection { from_node: from.clone(), branch: port, to_node: to });
            }
        }
    }

    Workflow::new(name, nodes, connections)
}
