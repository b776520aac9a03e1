//! End-to-end runs of the `fault2flow` binary over the bundled project.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fault2flow"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fault2flow-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn lint_passes_on_bundled_trees() {
    let out = bin(&["lint", "trees/three_ratio.pasta"], &fixtures());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("self-check: passed"));
}

#[test]
fn lint_on_cyclic_tree_exits_two_with_kind() {
    let dir = tmpdir("lint-cycle");
    let path = dir.join("cyclic.pasta");
    std::fs::write(&path, "tree bad\nparam x unit \"\"\nbasic b : x < 1\ngate g = and(g, b)\ntop f = g\n")
        .unwrap();
    let out = bin(&["lint", path.to_str().unwrap()], &dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("CycleDetected"), "stderr: {}", stderr(&out));
}

#[test]
fn translate_compile_exec_round() {
    let dir = tmpdir("translate");
    let map = fixtures().join("mindmaps/three_ratio.puml");
    let tree_out = dir.join("three_ratio.pasta");
    let out = bin(
        &["translate", map.to_str().unwrap(), "-o", tree_out.to_str().unwrap()],
        &fixtures(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("5 fault classes"));

    let wf_out = dir.join("three_ratio.json");
    let out = bin(
        &["compile", tree_out.to_str().unwrap(), "-o", wf_out.to_str().unwrap()],
        &fixtures(),
    );
    assert!(out.status.success(), "{}", stderr(&out));

    let out = bin(
        &[
            "exec",
            wf_out.to_str().unwrap(),
            "--input",
            "h2=10",
            "--input",
            "ch4=20",
            "--input",
            "c2h2=0.5",
            "--input",
            "c2h4=10",
            "--input",
            "c2h6=20",
        ],
        &fixtures(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).ends_with("TRIGGERED: low_temperature_overheating\n"));
}

#[test]
fn exec_with_missing_field_exits_three() {
    let dir = tmpdir("exec-missing");
    let wf = dir.join("wf.json");
    let tree = fixtures().join("trees/gas_minimal.pasta");
    bin(&["compile", tree.to_str().unwrap(), "-o", wf.to_str().unwrap()], &fixtures());
    let out = bin(&["exec", wf.to_str().unwrap()], &fixtures());
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("MissingField") && err.contains("h2"), "stderr: {err}");
}

#[test]
fn gen_tests_is_seed_stable() {
    let dir = tmpdir("gentests");
    let tree = fixtures().join("trees/gas_minimal.pasta");
    let a = dir.join("a.suite.json");
    let b = dir.join("b.suite.json");
    for out_path in [&a, &b] {
        let out = bin(
            &["gen-tests", tree.to_str().unwrap(), "-o", out_path.to_str().unwrap(), "--seed", "42"],
            &fixtures(),
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap());
    // And matches the checked-in golden generated with the same seed.
    assert_eq!(
        bytes_a,
        std::fs::read(fixtures().join("golden/suites/gas_minimal.suite.json")).unwrap()
    );
}

#[test]
fn verify_passes_compiled_and_fails_mutant() {
    let dir = tmpdir("verify");
    let tree = fixtures().join("trees/gas_h2_discharge.pasta");
    let wf = dir.join("wf.json");
    bin(&["compile", tree.to_str().unwrap(), "-o", wf.to_str().unwrap()], &fixtures());

    let out = bin(&["verify", tree.to_str().unwrap(), wf.to_str().unwrap()], &fixtures());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("verify: passed (iteration 1 of 5"));

    // Flip one operator in the document by hand.
    let mutated = std::fs::read_to_string(&wf).unwrap().replacen("largerEqual", "smaller", 1);
    let bad = dir.join("mutant.json");
    std::fs::write(&bad, mutated).unwrap();
    let out = bin(&["verify", tree.to_str().unwrap(), bad.to_str().unwrap()], &fixtures());
    assert_eq!(out.status.code(), Some(4));
    assert!(stdout(&out).contains("counterexample"));

    // The regeneration loop recovers on the second iteration.
    let out = bin(
        &["verify", tree.to_str().unwrap(), bad.to_str().unwrap(), "--regenerate"],
        &fixtures(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("verify: passed (iteration 2 of 5"));
}

#[test]
fn metrics_prints_the_table() {
    let dir = tmpdir("metrics");
    let tree = fixtures().join("trees/characteristic_gas.pasta");
    let wf = dir.join("wf.json");
    bin(&["compile", tree.to_str().unwrap(), "-o", wf.to_str().unwrap()], &fixtures());
    let json = dir.join("report.json");
    let out = bin(
        &[
            "metrics",
            tree.to_str().unwrap(),
            wf.to_str().unwrap(),
            "--json",
            json.to_str().unwrap(),
        ],
        &fixtures(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("LRM(readability)"));
    assert!(text.contains("1/0"));
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(parsed["rows"][0]["tc"], 1.0);
    assert_eq!(parsed["rows"][0]["e2erc"], 1.0);
    assert_eq!(parsed["rows"][0]["sf"], 1.0);
}

#[test]
fn pipeline_report_is_byte_stable_and_leaves_inputs_untouched() {
    let tree = fixtures().join("trees/gas_minimal.pasta");
    let before = std::fs::read(&tree).unwrap();
    let run = || {
        let out = bin(&["pipeline", "trees/gas_minimal.pasta"], &fixtures());
        assert!(out.status.success(), "{}", stderr(&out));
        stdout(&out)
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
    assert!(a.contains("verify: passed (iteration 1 of 5"));
    assert!(a.contains("1/0"));
    assert_eq!(std::fs::read(&tree).unwrap(), before, "pipeline must not mutate inputs");
    // Golden pinned report.
    let golden = fixtures().join("golden/reports/gas_minimal.report.txt");
    if std::env::var_os("FAULT2FLOW_BLESS").is_some() {
        std::fs::create_dir_all(golden.parent().unwrap()).unwrap();
        std::fs::write(&golden, &a).unwrap();
    } else {
        assert_eq!(a, std::fs::read_to_string(&golden).unwrap());
    }
}

#[test]
fn evolve_smoke_writes_an_equivalent_genome() {
    let dir = tmpdir("evolve");
    let tree = fixtures().join("trees/ratio_degenerate_wrap.pasta");
    let out_path = dir.join("optimized.pasta");
    let out = bin(
        &[
            "evolve",
            tree.to_str().unwrap(),
            "-o",
            out_path.to_str().unwrap(),
            "--iters",
            "30",
            "--seed",
            "42",
            "--islands",
            "2",
            "--population",
            "4",
        ],
        &fixtures(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let optimized = std::fs::read_to_string(&out_path).unwrap();
    // The degenerate one-child wrappers are gone: no gate has a single child.
    let one_child_gates = optimized
        .lines()
        .filter(|l| l.starts_with("gate") && !l.contains(','))
        .count();
    assert_eq!(one_child_gates, 0, "optimized genome:\n{optimized}");
    // Still lints clean.
    let lint = bin(&["lint", out_path.to_str().unwrap()], &fixtures());
    assert!(lint.status.success());
}

#[test]
fn mindmap_generation_feeds_translate() {
    let dir = tmpdir("mindmap");
    let map_out = dir.join("generated.puml");
    let out = bin(
        &["mindmap", "regulations/three_ratio.md", "-o", map_out.to_str().unwrap()],
        &fixtures(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let tree_out = dir.join("generated.pasta");
    let out = bin(
        &["translate", map_out.to_str().unwrap(), "-o", tree_out.to_str().unwrap()],
        &fixtures(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("3 fault classes"));
}

#[test]
fn unknown_config_key_fails_loudly() {
    let dir = tmpdir("config");
    std::fs::write(dir.join("bad.config"), "sedd = 42\n").unwrap();
    let tree = fixtures().join("trees/gas_minimal.pasta");
    let out = bin(
        &["--config", "bad.config", "lint", tree.to_str().unwrap()],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ConfigError"));
}
