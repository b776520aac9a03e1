//! Direct evaluation of a fault tree on an input assignment. This is the
//! oracle semantics the compiled workflow is checked against.

use std::collections::BTreeSet;

use crate::pasta::ast::{Assignment, FaultTree, GateKind, Node, ParamKind};
use crate::pasta::PastaError;

/// Value of a schema parameter under `input`; derived parameters are
/// computed on demand.
pub(crate) fn param_value(
    tree: &FaultTree,
    input: &Assignment,
    name: &str,
) -> Result<f64, PastaError> {
    let spec = tree
        .param(name)
        .ok_or_else(|| PastaError::MissingParameter { param: name.to_string() })?;
    match &spec.kind {
        ParamKind::Measured => input
            .get(name)
            .ok_or_else(|| PastaError::MissingParameter { param: name.to_string() }),
        ParamKind::Derived { numerator, denominator } => {
            let num = input
                .get(numerator)
                .ok_or_else(|| PastaError::MissingParameter { param: numerator.clone() })?;
            let den = input
                .get(denominator)
                .ok_or_else(|| PastaError::MissingParameter { param: denominator.clone() })?;
            if den == 0.0 {
                return Err(PastaError::DivisionByZero { param: name.to_string() });
            }
            Ok(num / den)
        }
    }
}

fn node_truth(tree: &FaultTree, input: &Assignment, id: &str) -> Result<bool, PastaError> {
    match tree.node(id).expect("validated tree") {
        Node::BasicEvent { condition } => {
            let value = param_value(tree, input, &condition.parameter)?;
            Ok(condition.op.test(value, condition.threshold))
        }
        Node::Gate { kind, children } => {
            // No short-circuiting: errors (division by zero, missing input)
            // must surface regardless of sibling truth values.
            let mut truths = Vec::with_capacity(children.len());
            for c in children {
                truths.push(node_truth(tree, input, c)?);
            }
            Ok(match kind {
                GateKind::And => truths.iter().all(|t| *t),
                GateKind::Or => truths.iter().any(|t| *t),
                GateKind::KofN(k) => truths.iter().filter(|t| **t).count() >= *k,
            })
        }
        Node::TopEvent { child, .. } => node_truth(tree, input, child),
    }
}

/// Evaluate the tree: the result contains a fault class label iff its top
/// event's child is true under standard gate semantics.
///
/// The input must be total over the schema's measured parameters.
pub fn evaluate(tree: &FaultTree, input: &Assignment) -> Result<BTreeSet<String>, PastaError> {
    for p in tree.schema() {
        if p.is_measured() && input.get(&p.name).is_none() {
            return Err(PastaError::MissingParameter { param: p.name.clone() });
        }
    }
    let mut triggered = BTreeSet::new();
    for (_, label, child) in tree.tops() {
        if node_truth(tree, input, child)? {
            triggered.insert(label.to_string());
        }
    }
    Ok(triggered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pasta::parse_pasta;

    fn assign(pairs: &[(&str, f64)]) -> Assignment {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn single_condition_fires() {
        let t = parse_pasta("tree d\nparam x unit \"\"\nbasic b : x < 10\ntop f = b\n").unwrap();
        assert_eq!(
            evaluate(&t, &assign(&[("x", 5.0)])).unwrap(),
            BTreeSet::from(["f".to_string()])
        );
        assert!(evaluate(&t, &assign(&[("x", 10.0)])).unwrap().is_empty());
    }

    #[test]
    fn threshold_ties_are_strict() {
        let t = parse_pasta(
            "tree d\nparam x unit \"\"\nbasic lt : x < 1\nbasic le : x <= 1\nbasic gt : x > 1\nbasic ge : x >= 1\ntop a = lt\ntop b = le\ntop c = gt\ntop e = ge\n",
        )
        .unwrap();
        let got = evaluate(&t, &assign(&[("x", 1.0)])).unwrap();
        assert_eq!(got, BTreeSet::from(["b".to_string(), "e".to_string()]));
    }

    #[test]
    fn ratio_division_by_zero_is_an_error() {
        let t = parse_pasta(
            "tree d\nparam a unit \"\"\nparam b unit \"\"\nratio r = a / b\nbasic c : r < 0.5\ntop f = c\n",
        )
        .unwrap();
        match evaluate(&t, &assign(&[("a", 1.0), ("b", 0.0)])) {
            Err(PastaError::DivisionByZero { param }) => assert_eq!(param, "r"),
            other => panic!("expected DivisionByZero, got {other:?}"),
        }
    }

    #[test]
    fn missing_parameter_is_an_error() {
        let t = parse_pasta("tree d\nparam x unit \"\"\nbasic b : x < 10\ntop f = b\n").unwrap();
        match evaluate(&t, &Assignment::new()) {
            Err(PastaError::MissingParameter { param }) => assert_eq!(param, "x"),
            other => panic!("expected MissingParameter, got {other:?}"),
        }
    }

    #[test]
    fn kofn_counts_true_children() {
        let t = parse_pasta(
            "tree d\nparam x unit \"\"\nparam y unit \"\"\nparam z unit \"\"\nbasic a : x > 0\nbasic b : y > 0\nbasic c : z > 0\ngate g = kofn(2; a, b, c)\ntop f = g\n",
        )
        .unwrap();
        assert!(!evaluate(&t, &assign(&[("x", 1.0), ("y", -1.0), ("z", -1.0)]))
            .unwrap()
            .contains("f"));
        assert!(evaluate(&t, &assign(&[("x", 1.0), ("y", 1.0), ("z", -1.0)]))
            .unwrap()
            .contains("f"));
        assert!(evaluate(&t, &assign(&[("x", 1.0), ("y", 1.0), ("z", 1.0)]))
            .unwrap()
            .contains("f"));
    }

    #[test]
    fn all_false_means_empty_set() {
        let t = parse_pasta(
            "tree d\nparam x unit \"\"\nbasic a : x > 10\nbasic b : x < -10\ngate g = or(a, b)\ntop f = g\n",
        )
        .unwrap();
        assert!(evaluate(&t, &assign(&[("x", 0.0)])).unwrap().is_empty());
    }
}
