//! PlantUML mind maps carrying qualitative structure plus machine-readable
//! quantitative annotations.
//!
//! Only the `*`-marker mindmap dialect is supported; `+`/`-` side markers are
//! normalized to `*` on parse. A trailing bracketed segment on a node label
//! is an annotation when its content is `AND`, `OR` or a threshold condition
//! (`<param> <op> <number>`, where the parameter may be a ratio written
//! `a/b`); any other trailing bracket stays part of the label text.
//!
//! ```text
//! @startmindmap
//! * transformer faults
//! ** partial discharge
//! *** gas ratios [AND]
//! **** low acetylene [c2h2/c2h4 < 0.1]
//! @endmindmap
//! ```

use std::fmt;

use thiserror::Error;

/// Gate kinds expressible as mind-map annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapGate {
    And,
    Or,
}

/// A node annotation: a gate kind for internal nodes or the raw source text
/// of a threshold condition for leaves.
#[derive(Debug, Clone, PartialEq)]
pub enum Annotation {
    Gate(MapGate),
    Condition(String),
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Annotation::Gate(MapGate::And) => f.write_str("AND"),
            Annotation::Gate(MapGate::Or) => f.write_str("OR"),
            Annotation::Condition(src) => f.write_str(src),
        }
    }
}

/// One node of a mind map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapNode {
    pub text: String,
    pub annotation: Option<Annotation>,
    pub children: Vec<MapNode>,
}

impl MapNode {
    pub fn new(text: impl Into<String>) -> Self {
        MapNode { text: text.into(), annotation: None, children: Vec::new() }
    }

    pub fn with_annotation(text: impl Into<String>, annotation: Annotation) -> Self {
        MapNode { text: text.into(), annotation: Some(annotation), children: Vec::new() }
    }

    fn count(&self) -> usize {
        1 + self.children.iter().map(MapNode::count).sum::<usize>()
    }
}

/// A parsed mind map: exactly one root.
#[derive(Debug, Clone, PartialEq)]
pub struct MindMap {
    pub root: MapNode,
}

impl MindMap {
    pub fn node_count(&self) -> usize {
        self.root.count()
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MindmapError {
    #[error("mindmap syntax error at line {line}: {message}")]
    SyntaxError { line: usize, message: String },
    #[error("depth jump at line {line}: node at depth {depth} under parent at depth {parent}")]
    DepthJump { line: usize, depth: usize, parent: usize },
    #[error("multiple roots: second top-level node at line {line}")]
    MultipleRoots { line: usize },
}

/// True when `content` looks like a condition annotation:
/// `ident[/ident] op number`.
fn is_condition_annotation(content: &str) -> bool {
    parse_condition_parts(content).is_some()
}

/// Split a condition annotation into `(parameter-or-ratio, op, number)`.
/// The parameter part is `ident` or `ident/ident`.
pub(crate) fn parse_condition_parts(content: &str) -> Option<(String, crate::pasta::CmpOp, f64)> {
    let ops = ["<=", ">=", "<", ">"]; // two-char ops matched first
    let (op_idx, op_str) = ops
        .iter()
        .filter_map(|op| content.find(op).map(|i| (i, *op)))
        .min_by_key(|(i, op)| (*i, op.len() == 1))?;
    let lhs = content[..op_idx].trim();
    let rhs = content[op_idx + op_str.len()..].trim();
    let ident_ok = |s: &str| {
        !s.is_empty()
            && s.chars().next().is_some_and(|c| c.is_ascii_lowercase() || c == '_')
            && s.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
    };
    let lhs = match lhs.split_once('/') {
        Some((a, b)) => {
            let (a, b) = (a.trim(), b.trim());
            if !ident_ok(a) || !ident_ok(b) {
                return None;
            }
            format!("{a}/{b}")
        }
        None => {
            if !ident_ok(lhs) {
                return None;
            }
            lhs.to_string()
        }
    };
    let value: f64 = rhs.parse().ok()?;
    if !value.is_finite() {
        return None;
    }
    let op = crate::pasta::CmpOp::from_symbol(op_str)?;
    Some((lhs, op, value))
}

/// Split a label into `(text, annotation)`: the trailing `[...]` segment is
/// an annotation iff its content parses as one.
fn split_annotation(label: &str) -> (String, Option<Annotation>) {
    let trimmed = label.trim_end();
    if !trimmed.ends_with(']') {
        return (label.trim().to_string(), None);
    }
    let Some(open) = trimmed.rfind('[') else {
        return (label.trim().to_string(), None);
    };
    let content = &trimmed[open + 1..trimmed.len() - 1];
    let annotation = match content.trim() {
        "AND" => Some(Annotation::Gate(MapGate::And)),
        "OR" => Some(Annotation::Gate(MapGate::Or)),
        c if is_condition_annotation(c) => Some(Annotation::Condition(c.to_string())),
        _ => None,
    };
    match annotation {
        Some(a) => (trimmed[..open].trim().to_string(), Some(a)),
        None => (label.trim().to_string(), None),
    }
}

fn is_style_directive(line: &str) -> bool {
    let lower = line.to_ascii_lowercase();
    lower.starts_with("skinparam")
        || lower.starts_with("title")
        || lower.starts_with("caption")
        || lower.starts_with('!')
        || lower.starts_with("scale")
}

/// Parse a PlantUML mindmap document.
pub fn parse_plantuml(text: &str) -> Result<MindMap, MindmapError> {
    let mut in_body = false;
    let mut in_style_block = false;
    let mut saw_end = false;
    let mut saw_root = false;
    // Stack of (depth, node); nodes fold into their parent when popped.
    let mut stack: Vec<(usize, MapNode)> = Vec::new();
    let mut root: Option<MapNode> = None;

    fn fold_to(stack: &mut Vec<(usize, MapNode)>, depth: usize, root: &mut Option<MapNode>) {
        while let Some((d, _)) = stack.last() {
            if *d < depth {
                break;
            }
            let (_, node) = stack.pop().expect("nonempty");
            match stack.last_mut() {
                Some((_, parent)) => parent.children.push(node),
                None => *root = Some(node),
            }
        }
    }

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('\'') {
            continue;
        }
        if !in_body {
            if line == "@startmindmap" {
                in_body = true;
            }
            // Anything before the start delimiter is ignored.
            continue;
        }
        if in_style_block {
            if line.eq_ignore_ascii_case("</style>") {
                in_style_block = false;
            }
            continue;
        }
        if line.eq_ignore_ascii_case("<style>") {
            in_style_block = true;
            continue;
        }
        if line == "@endmindmap" {
            saw_end = true;
            break;
        }
        if is_style_directive(line) {
            continue;
        }

        let marker = line.chars().next().expect("nonempty line");
        if !matches!(marker, '*' | '+' | '-') {
            return Err(MindmapError::SyntaxError {
                line: line_no,
                message: format!("expected a node marker, found `{line}`"),
            });
        }
        let depth = line.chars().take_while(|c| *c == marker).count();
        let rest = &line[depth..];
        if !rest.is_empty() && !rest.starts_with(' ') && !rest.starts_with('\t') {
            return Err(MindmapError::SyntaxError {
                line: line_no,
                message: "node marker must be followed by whitespace".into(),
            });
        }
        let (text, annotation) = split_annotation(rest.trim());
        if text.is_empty() && annotation.is_none() {
            return Err(MindmapError::SyntaxError {
                line: line_no,
                message: "empty node label".into(),
            });
        }

        if depth == 1 {
            if saw_root {
                return Err(MindmapError::MultipleRoots { line: line_no });
            }
            saw_root = true;
        }
        let parent_depth = stack.last().map(|(d, _)| *d).unwrap_or(0);
        if depth > parent_depth + 1 {
            return Err(MindmapError::DepthJump { line: line_no, depth, parent: parent_depth });
        }
        fold_to(&mut stack, depth, &mut root);
        stack.push((depth, MapNode { text, annotation, children: Vec::new() }));
    }

    if !in_body {
        return Err(MindmapError::SyntaxError {
            line: 1,
            message: "missing @startmindmap".into(),
        });
    }
    if !saw_end {
        return Err(MindmapError::SyntaxError {
            line: text.lines().count(),
            message: "missing @endmindmap".into(),
        });
    }
    fold_to(&mut stack, 1, &mut root);
    match root {
        Some(root) => Ok(MindMap { root }),
        None => Err(MindmapError::SyntaxError {
            line: text.lines().count(),
            message: "document contains no nodes".into(),
        }),
    }
}

fn emit_node(node: &MapNode, depth: usize, out: &mut String) {
    out.push_str(&"*".repeat(depth));
    out.push(' ');
    out.push_str(&node.text);
    if let Some(a) = &node.annotation {
        out.push_str(&format!(" [{a}]"));
    }
    out.push('\n');
    for child in &node.children {
        emit_node(child, depth + 1, out);
    }
}

/// Serialize a mind map to canonical PlantUML (LF endings, `*` markers).
/// `parse_plantuml(emit_plantuml(m))` equals `m`.
pub fn emit_plantuml(map: &MindMap) -> String {
    let mut out = String::from("@startmindmap\n");
    emit_node(&map.root, 1, &mut out);
    out.push_str("@endmindmap\n");
    out
}

/// Seam for the mind-map generation stage. The production system puts a
/// language model behind this; the bundled [`OutlineGenerator`] is a
/// deterministic stand-in that reads an indented outline.
pub trait GeneratorHook {
    /// Produce PlantUML mindmap text from regulation source text.
    /// `feedback` carries findings from a failed previous attempt, one per
    /// line, empty on the first call.
    fn generate(&mut self, source: &str, feedback: &str) -> String;
}

impl<F: FnMut(&str, &str) -> String> GeneratorHook for F {
    fn generate(&mut self, source: &str, feedback: &str) -> String {
        self(source, feedback)
    }
}

/// Deterministic generator: turns a Markdown-style outline into a mind map.
/// The first `#` heading becomes the root; `-` list items nest by two-space
/// indentation; trailing `[...]` segments pass through as annotations.
#[derive(Debug, Default, Clone, Copy)]
pub struct OutlineGenerator;

impl GeneratorHook for OutlineGenerator {
    fn generate(&mut self, source: &str, _feedback: &str) -> String {
        let mut out = String::from("@startmindmap\n");
        let mut saw_root = false;
        for raw in source.lines() {
            let line = raw.trim_end();
            let trimmed = line.trim_start();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(heading) = trimmed.strip_prefix('#') {
                if !saw_root {
                    out.push_str(&format!("* {}\n", heading.trim_start_matches('#').trim()));
                    saw_root = true;
                }
                continue;
            }
            if let Some(item) = trimmed.strip_prefix("- ") {
                let indent = line.len() - trimmed.len();
                let depth = 2 + indent / 2;
                out.push_str(&format!("{} {}\n", "*".repeat(depth), item.trim()));
            }
        }
        out.push_str("@endmindmap\n");
        out
    }
}
