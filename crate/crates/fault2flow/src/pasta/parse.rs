//! Recursive-descent parser for the PASTA DSL.
//!
//! Parsing is two-phase: every line is tokenized and collected first, then
//! the whole declaration set is handed to `FaultTree::new`, which resolves
//! references and rejects duplicates and cycles. Forward references are
//! therefore legal in any source; the canonical emitter normalizes order.

use crate::pasta::ast::{CmpOp, Condition, GateKind, Node, NodeId, ParamSpec};
use crate::pasta::{FaultTree, PastaError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Quoted(String),
    Punct(char),
    Op(CmpOp),
}

struct Line {
    number: usize,
    toks: Vec<(usize, Tok)>, // (1-based column, token)
    pos: usize,
}

impl Line {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn next(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn col(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(c, _)| *c)
            .unwrap_or(1)
    }

    fn err(&self, message: impl Into<String>) -> PastaError {
        PastaError::SyntaxError {
            line: self.number,
            column: self.col(),
            message: message.into(),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<String, PastaError> {
        match self.next() {
            Some((_, Tok::Ident(s))) => Ok(s),
            Some((c, t)) => Err(PastaError::SyntaxError {
                line: self.number,
                column: c,
                message: format!("expected {what}, found {t:?}"),
            }),
            None => Err(self.err(format!("expected {what}, found end of line"))),
        }
    }

    fn expect_punct(&mut self, ch: char) -> Result<(), PastaError> {
        match self.next() {
            Some((_, Tok::Punct(c))) if c == ch => Ok(()),
            Some((c, t)) => Err(PastaError::SyntaxError {
                line: self.number,
                column: c,
                message: format!("expected `{ch}`, found {t:?}"),
            }),
            None => Err(self.err(format!("expected `{ch}`, found end of line"))),
        }
    }

    fn expect_end(&self) -> Result<(), PastaError> {
        if self.pos < self.toks.len() {
            let (c, t) = &self.toks[self.pos];
            return Err(PastaError::SyntaxError {
                line: self.number,
                column: *c,
                message: format!("unexpected trailing {t:?}"),
            });
        }
        Ok(())
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_lowercase() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_'
}

fn tokenize(line: &str, number: usize) -> Result<Line, PastaError> {
    let mut toks = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let col = i + 1;
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '#' => break, // comment to end of line
            '"' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' {
                    j += 1;
                }
                if j >= chars.len() {
                    return Err(PastaError::SyntaxError {
                        line: number,
                        column: col,
                        message: "unterminated string".into(),
                    });
                }
                toks.push((col, Tok::Quoted(chars[start..j].iter().collect())));
                i = j + 1;
            }
            '<' | '>' => {
                if i + 1 < chars.len() && chars[i + 1] == '=' {
                    let op = if c == '<' { CmpOp::Le } else { CmpOp::Ge };
                    toks.push((col, Tok::Op(op)));
                    i += 2;
                } else {
                    let op = if c == '<' { CmpOp::Lt } else { CmpOp::Gt };
                    toks.push((col, Tok::Op(op)));
                    i += 1;
                }
            }
            '=' | ':' | '(' | ')' | ',' | ';' | '/' => {
                toks.push((col, Tok::Punct(c)));
                i += 1;
            }
            _ if is_ident_start(c) => {
                let mut j = i + 1;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                toks.push((col, Tok::Ident(chars[i..j].iter().collect())));
                i = j;
            }
            _ if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let mut j = i + 1;
                while j < chars.len()
                    && (chars[j].is_ascii_digit()
                        || matches!(chars[j], '.' | 'e' | 'E')
                        || (matches!(chars[j], '+' | '-')
                            && matches!(chars[j - 1], 'e' | 'E')))
                {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                let value: f64 = text.parse().map_err(|_| PastaError::SyntaxError {
                    line: number,
                    column: col,
                    message: format!("invalid number `{text}`"),
                })?;
                if !value.is_finite() {
                    return Err(PastaError::SyntaxError {
                        line: number,
                        column: col,
                        message: format!("number `{text}` is not finite"),
                    });
                }
                toks.push((col, Tok::Number(value)));
                i = j;
            }
            _ => {
                return Err(PastaError::SyntaxError {
                    line: number,
                    column: col,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(Line { number, toks, pos: 0 })
}

fn parse_id_list(line: &mut Line) -> Result<Vec<NodeId>, PastaError> {
    let mut ids = vec![line.expect_ident("identifier")?];
    while line.peek() == Some(&Tok::Punct(',')) {
        line.next();
        ids.push(line.expect_ident("identifier")?);
    }
    Ok(ids)
}

/// Parse PASTA source text into a validated fault tree.
pub fn parse_pasta(text: &str) -> Result<FaultTree, PastaError> {
    let mut tree_name: Option<String> = None;
    let mut schema: Vec<ParamSpec> = Vec::new();
    let mut nodes: Vec<(NodeId, Node)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let mut line = tokenize(raw, idx + 1)?;
        let Some((_, head)) = line.next() else { continue };
        let keyword = match head {
            Tok::Ident(s) => s,
            _ => return Err(line.err("expected statement keyword")),
        };
        match keyword.as_str() {
            "tree" => {
                let name = line.expect_ident("tree name")?;
                line.expect_end()?;
                if tree_name.is_some() {
                    return Err(line.err("duplicate `tree` header"));
                }
                tree_name = Some(name);
            }
            "param" => {
                let name = line.expect_ident("parameter name")?;
                let unit_kw = line.expect_ident("`unit`")?;
                if unit_kw != "unit" {
                    return Err(line.err("expected keyword `unit`"));
                }
                let unit = match line.next() {
                    Some((_, Tok::Quoted(u))) => u,
                    _ => return Err(line.err("expected quoted unit text")),
                };
                line.expect_end()?;
                schema.push(ParamSpec { name, unit, kind: crate::pasta::ParamKind::Measured });
            }
            "ratio" => {
                let name = line.expect_ident("ratio name")?;
                line.expect_punct('=')?;
                let numerator = line.expect_ident("numerator")?;
                line.expect_punct('/')?;
                let denominator = line.expect_ident("denominator")?;
                line.expect_end()?;
                schema.push(ParamSpec {
                    name,
                    unit: String::new(),
                    kind: crate::pasta::ParamKind::Derived { numerator, denominator },
                });
            }
            "basic" => {
                let id = line.expect_ident("basic event id")?;
                line.expect_punct(':')?;
                let parameter = line.expect_ident("parameter")?;
                let op = match line.next() {
                    Some((_, Tok::Op(op))) => op,
                    _ => return Err(line.err("expected comparison operator")),
                };
                let threshold = match line.next() {
                    Some((_, Tok::Number(n))) => n,
                    _ => return Err(line.err("expected threshold number")),
                };
                line.expect_end()?;
                nodes.push((
                    id,
                    Node::BasicEvent { condition: Condition { parameter, op, threshold } },
                ));
            }
            "gate" => {
                let id = line.expect_ident("gate id")?;
                line.expect_punct('=')?;
                let kind_word = line.expect_ident("gate kind")?;
                line.expect_punct('(')?;
                let (kind, children) = match kind_word.as_str() {
                    "and" => (GateKind::And, parse_id_list(&mut line)?),
                    "or" => (GateKind::Or, parse_id_list(&mut line)?),
                    "kofn" => {
                        let k = match line.next() {
                            Some((_, Tok::Number(n))) if n.fract() == 0.0 && n >= 0.0 => {
                                n as usize
                            }
                            _ => return Err(line.err("expected integer k")),
                        };
                        line.expect_punct(';')?;
                        (GateKind::KofN(k), parse_id_list(&mut line)?)
                    }
                    other => {
                        return Err(line.err(format!(
                            "unknown gate kind `{other}` (expected and, or, kofn)"
                        )))
                    }
                };
                line.expect_punct(')')?;
                line.expect_end()?;
                nodes.push((id, Node::Gate { kind, children }));
            }
            "top" => {
                let label = line.expect_ident("fault class id")?;
                line.expect_punct('=')?;
                let child = line.expect_ident("child id")?;
                line.expect_end()?;
                nodes.push((label.clone(), Node::TopEvent { label, child }));
            }
            other => {
                return Err(line.err(format!("unknown statement `{other}`")));
            }
        }
    }

    let name = tree_name.ok_or(PastaError::SyntaxError {
        line: 1,
        column: 1,
        message: "missing `tree <id>` header".into(),
    })?;
    FaultTree::new(name, schema, nodes)
}
