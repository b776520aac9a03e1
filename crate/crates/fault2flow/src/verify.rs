//! Test synthesis and the verification loop.
//!
//! Suites are generated from the fault tree in three deterministic layers:
//! boundary probes at each threshold (t−ε, t, t+ε), one representative per
//! satisfiable leaf-truth region, and seeded-uniform random draws. Expected
//! results always come from the tree evaluator, never from anything
//! stochastic. Verification runs the suite against the workflow; on failure
//! it can feed the failing traces to a regeneration hook and retry, up to a
//! capped number of iterations.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::{execute, ExecutionTrace};
use crate::metrics::e2e_reachability;
use crate::pasta::{evaluate, Assignment, FaultTree};
use crate::regions::{enumerate_regions, measured_params, tree_atoms, Atom, RegionOptions, Var};
use crate::rng::DetRng;
use crate::workflow::Workflow;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum VerifyError {
    #[error("region enumeration found zero satisfiable leaf-truth combinations")]
    UnsatisfiableStrategy,
}

/// Where a test case came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Boundary,
    Region,
    Random,
}

/// One synthesized test: an input with its oracle-expected fault classes.
#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub input: Assignment,
    pub expected: BTreeSet<String>,
    pub origin: Origin,
}

/// Suite generation knobs.
#[derive(Debug, Clone)]
pub struct GenStrategy {
    /// Distance of boundary probes from each threshold, in parameter units.
    /// Thresholds in the bundled diagnosis tables have at most two decimals,
    /// so 1e-3 separates regions safely.
    pub boundary_epsilon: f64,
    /// Maximum number of region cases.
    pub region_cap: usize,
    /// Number of seeded random cases.
    pub random_count: usize,
    pub seed: u64,
    /// Plausible `(low, high)` ranges per measured parameter; random draws
    /// stay inside them, and neutral values sit at their midpoint.
    pub ranges: std::collections::BTreeMap<String, (f64, f64)>,
}

impl Default for GenStrategy {
    fn default() -> Self {
        GenStrategy {
            boundary_epsilon: 1e-3,
            region_cap: 4096,
            random_count: 16,
            seed: 42,
            ranges: Default::default(),
        }
    }
}

impl GenStrategy {
    fn region_options(&self) -> RegionOptions {
        RegionOptions {
            epsilon: self.boundary_epsilon,
            ranges: self.ranges.clone(),
            // Both-edged intervals get a witness at each threshold, which is
            // what makes small threshold perturbations detectable in every
            // combination context.
            edge_profiles: true,
            ..RegionOptions::default()
        }
    }

    fn neutral(&self, param: &str) -> f64 {
        match self.ranges.get(param) {
            Some((lo, hi)) => (lo + hi) / 2.0,
            None => 1.0,
        }
    }

    fn random_range(&self, param: &str) -> (f64, f64) {
        self.ranges.get(param).copied().unwrap_or((0.0, 1000.0))
    }
}

/// A boundary probe: every measured parameter neutral except the probed
/// variable. Ratio thresholds are realized by fixing the denominator to one
/// unit and setting the numerator.
fn boundary_input(
    tree: &FaultTree,
    strategy: &GenStrategy,
    var: &Var,
    value: f64,
) -> Option<Assignment> {
    let mut input = Assignment::new();
    for p in measured_params(tree) {
        let v = strategy.neutral(&p);
        input.set(p, if v == 0.0 { 1.0 } else { v }).ok()?;
    }
    match var {
        Var::Param(p) => input.set(p.clone(), value).ok()?,
        Var::Ratio(num, den) => {
            input.set(den.clone(), 1.0).ok()?;
            input.set(num.clone(), value).ok()?;
        }
    }
    Some(input)
}

/// Generate a deterministic suite. Boundary cases come first (in atom
/// first-reference order), then region cases (ascending truth-mask order),
/// then random cases.
pub fn generate_tests(
    tree: &FaultTree,
    strategy: &GenStrategy,
) -> Result<Vec<TestCase>, VerifyError> {
    let atoms: Vec<Atom> = tree_atoms(tree);
    let measured = measured_params(tree);
    let mut cases = Vec::new();

    let push = |input: Assignment, origin: Origin, cases: &mut Vec<TestCase>| {
        // Expected values come from the oracle; inputs the oracle rejects
        // (zero denominators from unlucky draws) are skipped.
        if let Ok(expected) = evaluate(tree, &input) {
            cases.push(TestCase { input, expected, origin });
        }
    };

    for atom in &atoms {
        let eps = strategy.boundary_epsilon;
        for value in [atom.threshold - eps, atom.threshold, atom.threshold + eps] {
            if let Some(input) = boundary_input(tree, strategy, &atom.var, value) {
                push(input, Origin::Boundary, &mut cases);
            }
        }
    }

    let regions =
        enumerate_regions(&atoms, &measured, &strategy.region_options(), strategy.region_cap);
    if regions.is_empty() && !atoms.is_empty() {
        return Err(VerifyError::UnsatisfiableStrategy);
    }
    for input in regions {
        push(input, Origin::Region, &mut cases);
    }

    let mut rng = DetRng::new(strategy.seed);
    for _ in 0..strategy.random_count {
        let mut input = Assignment::new();
        let mut ok = true;
        for p in &measured {
            let (lo, hi) = strategy.random_range(p);
            if input.set(p.clone(), rng.next_range(lo, hi)).is_err() {
                ok = false;
            }
        }
        if ok {
            push(input, Origin::Random, &mut cases);
        }
    }

    Ok(cases)
}

/// One mismatch between the workflow and the oracle.
#[derive(Debug, Clone)]
pub struct VerifyFailure {
    pub case: TestCase,
    /// Triggered set the workflow actually produced (empty on execution
    /// error).
    pub actual: BTreeSet<String>,
    /// Trace of the failing run when execution completed.
    pub trace: Option<ExecutionTrace>,
    /// Execution error text when the run did not complete.
    pub error: Option<String>,
}

/// Outcome of a verification run.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub passed: bool,
    pub iterations_used: usize,
    pub failures: Vec<VerifyFailure>,
    /// End-to-end reachability coverage of the final iteration's traces.
    pub coverage: f64,
    /// Workflow of the final iteration (regenerated when a hook ran).
    pub final_workflow: Workflow,
    pub tests_run: usize,
}

/// Hook that produces a replacement workflow from the tree and the failing
/// cases, e.g. recompilation.
pub type Regenerator<'a> = &'a mut dyn FnMut(&FaultTree, &[VerifyFailure]) -> Workflow;

/// Run `tests` against `w`; on failure, regenerate (when a hook is given)
/// and retry, up to `max_iterations` suite runs.
pub fn verify(
    tree: &FaultTree,
    w: &Workflow,
    tests: &[TestCase],
    max_iterations: usize,
    mut regenerator: Option<Regenerator<'_>>,
) -> VerifyReport {
    assert!(max_iterations >= 1, "max_iterations must be at least 1");
    let mut current = w.clone();
    let mut iterations_used = 0;
    loop {
        iterations_used += 1;
        let mut failures = Vec::new();
        let mut traces = Vec::new();
        for case in tests {
            match execute(&current, &case.input) {
                Ok(trace) => {
                    if trace.triggered != case.expected {
                        failures.push(VerifyFailure {
                            case: case.clone(),
                            actual: trace.triggered.clone(),
                            trace: Some(trace.clone()),
                            error: None,
                        });
                    }
                    traces.push(trace);
                }
                Err(e) => failures.push(VerifyFailure {
                    case: case.clone(),
                    actual: BTreeSet::new(),
                    trace: None,
                    error: Some(e.to_string()),
                }),
            }
        }
        let coverage = e2e_reachability(tree, &current, &traces).unwrap_or(0.0);
        let passed = failures.is_empty();
        if passed || iterations_used >= max_iterations {
            return VerifyReport {
                passed,
                iterations_used,
                failures,
                coverage,
                final_workflow: current,
                tests_run: tests.len(),
            };
        }
        match regenerator.as_mut() {
            Some(hook) => current = hook(tree, &failures),
            None => {
                return VerifyReport {
                    passed: false,
                    iterations_used,
                    failures,
                    coverage,
                    final_workflow: current,
                    tests_run: tests.len(),
                }
            }
        }
    }
}

// --- Suite file form (`.suite.json`) ---------------------------------------

#[derive(Serialize, Deserialize)]
struct SuiteCaseDoc {
    input: std::collections::BTreeMap<String, f64>,
    expected: Vec<String>,
    origin: Origin,
}

#[derive(Serialize, Deserialize)]
struct SuiteDoc {
    tests: Vec<SuiteCaseDoc>,
}

/// Serialize a suite in the same document conventions as the workflow
/// export: two-space indentation, LF, trailing newline.
pub fn suite_to_json(tests: &[TestCase]) -> String {
    let doc = SuiteDoc {
        tests: tests
            .iter()
            .map(|t| SuiteCaseDoc {
                input: t.input.iter().map(|(k, v)| (k.to_string(), v)).collect(),
                expected: t.expected.iter().cloned().collect(),
                origin: t.origin,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    text
}

/// Parse a `.suite.json` document.
pub fn suite_from_json(text: &str) -> Result<Vec<TestCase>, String> {
    let doc: SuiteDoc = serde_json::from_str(text).map_err(|e| e.to_string())?;
    doc.tests
        .into_iter()
        .map(|c| {
            let mut input = Assignment::new();
            for (k, v) in c.input {
                input.set(k, v).map_err(|e| e.to_string())?;
            }
            Ok(TestCase { input, expected: c.expected.into_iter().collect(), origin: c.origin })
        })
        .collect()
}
