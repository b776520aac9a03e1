//! Subcommand implementations. Every command is deterministic given the
//! project files and flags (the push client excepted), never mutates its
//! inputs, and writes only to explicitly named output paths.

use std::path::Path;

use fault2flow::compiler::{compile, CompileOptions};
use fault2flow::executor::{execute, ExecutionTrace};
use fault2flow::metrics::{full_report, render_json, render_table, MetricRow};
use fault2flow::mindmap::{parse_plantuml, GeneratorHook, OutlineGenerator};
use fault2flow::pasta::{parse_pasta, self_check, Assignment, FaultTree};
use fault2flow::translate::{mindmap_to_faulttree, schema_from_annotations};
use fault2flow::verify::{
    generate_tests, suite_from_json, suite_to_json, verify, GenStrategy, TestCase,
};
use fault2flow::workflow::{export_n8n, import_n8n, validate_workflow, Workflow};

use crate::client::{N8nClient, DEFAULT_TIMEOUT};
use crate::config::Config;
use crate::error::CliError;

/// Output of a command: text for stdout plus the process exit code.
pub struct CmdOut {
    pub stdout: String,
    pub code: i32,
}

impl CmdOut {
    fn ok(stdout: impl Into<String>) -> Self {
        CmdOut { stdout: stdout.into(), code: 0 }
    }

    fn with_code(stdout: impl Into<String>, code: i32) -> Self {
        CmdOut { stdout: stdout.into(), code }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn write(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::Io {
                path: parent.display().to_string(),
                message: e.to_string(),
            })?;
        }
    }
    std::fs::write(path, content)
        .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn load_tree(path: &Path) -> Result<FaultTree, CliError> {
    parse_pasta(&read(path)?).map_err(CliError::Pasta)
}

fn load_workflow(path: &Path) -> Result<Workflow, CliError> {
    import_n8n(&read(path)?).map_err(CliError::Workflow)
}

fn strategy_from(config: &Config, seed: Option<u64>) -> GenStrategy {
    GenStrategy {
        boundary_epsilon: config.boundary_epsilon,
        region_cap: config.region_cap,
        random_count: config.random_count,
        seed: seed.unwrap_or(config.seed),
        ranges: Default::default(),
    }
}

fn self_check_line(report: &fault2flow::pasta::CheckReport) -> String {
    format!(
        "self-check: {} ({} errors, {} warnings)",
        if report.passed() { "passed" } else { "failed" },
        report.errors().count(),
        report.warnings().count()
    )
}

pub fn lint(tree_path: &Path) -> Result<CmdOut, CliError> {
    let tree = load_tree(tree_path)?;
    let report = self_check(&tree);
    let mut out = report.render();
    out.push_str(&self_check_line(&report));
    out.push('\n');
    Ok(CmdOut::with_code(out, if report.passed() { 0 } else { 2 }))
}

pub fn mindmap(regulation: &Path, out: &Path) -> Result<CmdOut, CliError> {
    let source = read(regulation)?;
    let text = OutlineGenerator.generate(&source, "");
    // The generator must produce a well-formed document; surface the parse
    // error if the outline defeated it.
    parse_plantuml(&text).map_err(CliError::Mindmap)?;
    write(out, &text)?;
    Ok(CmdOut::ok(format!("wrote {}\n", out.display())))
}

pub fn translate(map_path: &Path, out: &Path, schema: Option<&Path>) -> Result<CmdOut, CliError> {
    let map = parse_plantuml(&read(map_path)?).map_err(CliError::Mindmap)?;
    let schema = match schema {
        Some(path) => load_tree(path)?
            .schema()
            .iter()
            .filter(|p| p.is_measured())
            .cloned()
            .collect(),
        None => schema_from_annotations(&map),
    };
    let tree = mindmap_to_faulttree(&map, &schema).map_err(CliError::Translate)?;
    write(out, &fault2flow::pasta::emit_pasta(&tree))?;
    Ok(CmdOut::ok(format!(
        "wrote {} ({} fault classes, {} basic events)\n",
        out.display(),
        tree.tops().count(),
        tree.basics().count()
    )))
}

pub fn compile_cmd(
    tree_path: &Path,
    out: &Path,
    share_conditions: bool,
    no_fault_label: Option<String>,
) -> Result<CmdOut, CliError> {
    let tree = load_tree(tree_path)?;
    let mut opts = CompileOptions { share_condition_nodes: share_conditions, ..Default::default() };
    if let Some(label) = no_fault_label {
        opts.no_fault_label = label;
    }
    let w = compile(&tree, &opts).map_err(CliError::Compile)?;
    write(out, &export_n8n(&w).map_err(CliError::Workflow)?)?;
    Ok(CmdOut::ok(format!(
        "wrote {} ({} nodes, {} connections)\n",
        out.display(),
        w.nodes().len(),
        w.connections().len()
    )))
}

pub fn exec_cmd(wf_path: &Path, inputs: &[(String, f64)]) -> Result<CmdOut, CliError> {
    let w = load_workflow(wf_path)?;
    let report = validate_workflow(&w);
    if !report.passed() {
        return Err(CliError::Validation { report });
    }
    let mut assignment = Assignment::new();
    for (k, v) in inputs {
        assignment.set(k.clone(), *v).map_err(CliError::Pasta)?;
    }
    let trace = execute(&w, &assignment).map_err(CliError::Exec)?;
    Ok(CmdOut::ok(trace.render(&w)))
}

pub fn gen_tests_cmd(
    tree_path: &Path,
    out: &Path,
    seed: Option<u64>,
    config: &Config,
) -> Result<CmdOut, CliError> {
    let tree = load_tree(tree_path)?;
    let suite = generate_tests(&tree, &strategy_from(config, seed)).map_err(CliError::Verify)?;
    write(out, &suite_to_json(&suite))?;
    Ok(CmdOut::ok(format!("wrote {} ({} tests)\n", out.display(), suite.len())))
}

fn verify_summary(report: &fault2flow::verify::VerifyReport, max_iterations: usize) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "verify: {} (iteration {} of {}, {} tests, {} failures)\n",
        if report.passed { "passed" } else { "failed" },
        report.iterations_used,
        max_iterations,
        report.tests_run,
        report.failures.len()
    ));
    for failure in report.failures.iter().take(5) {
        let expected: Vec<&str> = failure.case.expected.iter().map(String::as_str).collect();
        let actual: Vec<&str> = failure.actual.iter().map(String::as_str).collect();
        out.push_str(&format!(
            "counterexample: input {:?} expected [{}] got [{}]{}\n",
            failure.case.input.iter().collect::<Vec<_>>(),
            expected.join(", "),
            actual.join(", "),
            failure.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default()
        ));
    }
    out
}

pub fn verify_cmd(
    tree_path: &Path,
    wf_path: &Path,
    max_iter: Option<usize>,
    regenerate: bool,
    config: &Config,
) -> Result<CmdOut, CliError> {
    let tree = load_tree(tree_path)?;
    let w = load_workflow(wf_path)?;
    let suite = generate_tests(&tree, &strategy_from(config, None)).map_err(CliError::Verify)?;
    let max_iterations = max_iter.unwrap_or(config.max_iterations);
    let mut recompile =
        |tree: &FaultTree, _f: &[fault2flow::verify::VerifyFailure]| -> Workflow {
            compile(tree, &CompileOptions::default()).expect("tree already compiled once")
        };
    let report = verify(
        &tree,
        &w,
        &suite,
        max_iterations,
        if regenerate { Some(&mut recompile) } else { None },
    );
    let passed = report.passed;
    let mut out = verify_summary(&report, max_iterations);
    out.push_str(&format!("coverage: {}\n", report.coverage));
    Ok(CmdOut::with_code(out, if passed { 0 } else { 4 }))
}

fn suite_traces(w: &Workflow, suite: &[TestCase]) -> Vec<ExecutionTrace> {
    suite.iter().filter_map(|case| execute(w, &case.input).ok()).collect()
}

pub fn metrics_cmd(
    tree_path: &Path,
    wf_path: &Path,
    suite_path: Option<&Path>,
    json_out: Option<&Path>,
    config: &Config,
) -> Result<CmdOut, CliError> {
    let tree = load_tree(tree_path)?;
    let w = load_workflow(wf_path)?;
    let suite = match suite_path {
        Some(path) => suite_from_json(&read(path)?)
            .map_err(|message| CliError::Suite { path: path.display().to_string(), message })?,
        None => generate_tests(&tree, &strategy_from(config, None)).map_err(CliError::Verify)?,
    };
    let verify_report = verify(&tree, &w, &suite, 1, None);
    let traces = suite_traces(&w, &suite);
    let report = full_report(&tree, &w, &traces, 12).map_err(CliError::Metrics)?;
    let row = MetricRow {
        name: tree.name().to_string(),
        report,
        succeeded: usize::from(verify_report.passed),
        failed: usize::from(!verify_report.passed),
    };
    if let Some(path) = json_out {
        write(path, &render_json(std::slice::from_ref(&row)))?;
    }
    Ok(CmdOut::ok(render_table(std::slice::from_ref(&row))))
}

#[allow(clippy::too_many_arguments)]
pub fn evolve_cmd(
    tree_path: &Path,
    out: Option<&Path>,
    iters: Option<usize>,
    seed: Option<u64>,
    islands: Option<usize>,
    population: Option<usize>,
    checkpoint_out: Option<&Path>,
    resume_from: Option<&Path>,
    config: &Config,
) -> Result<CmdOut, CliError> {
    use fault2flow::evolve::{DefaultMutator, EvolveConfig, EvolveEngine};

    let mut engine = match resume_from {
        Some(path) => EvolveEngine::restore(&read(path)?).map_err(CliError::Evolve)?,
        None => {
            let cfg = EvolveConfig {
                iterations: iters.unwrap_or(200),
                seed: seed.unwrap_or(config.seed),
                islands: islands.unwrap_or(4),
                population_per_island: population.unwrap_or(16),
                ..EvolveConfig::default()
            };
            EvolveEngine::new(&read(tree_path)?, &cfg).map_err(CliError::Evolve)?
        }
    };
    engine.run(&DefaultMutator);
    let result = engine.result();
    if let Some(path) = checkpoint_out {
        write(path, &engine.checkpoint())?;
    }
    if let Some(path) = out {
        write(path, &result.best.genome)?;
    }
    Ok(CmdOut::ok(format!(
        "best id {} readability {} size {} after {} iterations ({} mutations discarded)\n",
        result.best.id,
        result.best.fitness.readability,
        result.best.fitness.size,
        engine.iteration(),
        result.discarded
    )))
}

pub fn push_cmd(
    wf_path: &Path,
    endpoint: Option<String>,
    config: &Config,
) -> Result<CmdOut, CliError> {
    let document = read(wf_path)?;
    // Reject documents we would not stand behind before they leave the box.
    let w = import_n8n(&document).map_err(CliError::Workflow)?;
    let report = validate_workflow(&w);
    if !report.passed() {
        return Err(CliError::Validation { report });
    }
    let endpoint = endpoint
        .or_else(|| config.n8n_endpoint.clone())
        .ok_or_else(|| CliError::Usage("no endpoint: pass --endpoint or set n8n_endpoint".into()))?;
    let api_key = std::env::var(&config.n8n_api_key_env).unwrap_or_default();
    let client = N8nClient::new(&endpoint, &api_key, DEFAULT_TIMEOUT);
    let id = client.push_workflow(&document).map_err(CliError::Push)?;
    Ok(CmdOut::ok(format!("{id}\n")))
}

/// compile → gen-tests → verify → metrics, one report.
pub fn pipeline_cmd(
    tree_path: &Path,
    report_out: Option<&Path>,
    config: &Config,
) -> Result<CmdOut, CliError> {
    let tree = load_tree(tree_path)?;
    let check = self_check(&tree);
    if !check.passed() {
        return Err(CliError::Validation { report: check });
    }
    let w = compile(&tree, &CompileOptions::default()).map_err(CliError::Compile)?;
    let suite = generate_tests(&tree, &strategy_from(config, None)).map_err(CliError::Verify)?;
    let verify_report = verify(&tree, &w, &suite, config.max_iterations, None);
    let traces = suite_traces(&w, &suite);
    let metric_report = full_report(&tree, &w, &traces, 12).map_err(CliError::Metrics)?;

    let counts = |origin: fault2flow::verify::Origin| {
        suite.iter().filter(|t| t.origin == origin).count()
    };
    let mut out = String::new();
    out.push_str("fault2flow pipeline report\n");
    out.push_str(&format!("tree: {}\n", tree.name()));
    out.push_str(&self_check_line(&check));
    out.push('\n');
    out.push_str(&format!(
        "workflow: {} nodes, {} connections\n",
        w.nodes().len(),
        w.connections().len()
    ));
    out.push_str(&format!(
        "suite: {} tests ({} boundary, {} region, {} random)\n",
        suite.len(),
        counts(fault2flow::verify::Origin::Boundary),
        counts(fault2flow::verify::Origin::Region),
        counts(fault2flow::verify::Origin::Random)
    ));
    out.push_str(&format!(
        "verify: {} (iteration {} of {}, {} failures)\n",
        if verify_report.passed { "passed" } else { "failed" },
        verify_report.iterations_used,
        config.max_iterations,
        verify_report.failures.len()
    ));
    out.push('\n');
    let row = MetricRow {
        name: tree.name().to_string(),
        report: metric_report,
        succeeded: usize::from(verify_report.passed),
        failed: usize::from(!verify_report.passed),
    };
    out.push_str(&render_table(std::slice::from_ref(&row)));
    if let Some(path) = report_out {
        write(path, &out)?;
    }
    Ok(CmdOut::with_code(out, if verify_report.passed { 0 } else { 4 }))
}

/// Parse a repeated `--input key=value` argument.
pub fn parse_input_pair(raw: &str) -> Result<(String, f64), CliError> {
    let Some((key, value)) = raw.split_once('=') else {
        return Err(CliError::Usage(format!("--input expects key=value, found `{raw}`")));
    };
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|e| CliError::Usage(format!("--input {key}: {e}")))?;
    Ok((key.trim().to_string(), value))
}
