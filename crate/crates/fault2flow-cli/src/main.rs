use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fault2flow_cli::commands::{self, CmdOut};
use fault2flow_cli::config::load_config;
use fault2flow_cli::CliError;

/// Fault-tree toolchain: PASTA DSL in, verified n8n workflows out.
#[derive(Parser)]
#[command(name = "fault2flow", version, about, max_term_width = 100)]
struct Cli {
    /// Project configuration file (default: ./fault2flow.config if present).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a tree and run the self-check; exit 0 iff it passes.
    Lint { tree: PathBuf },
    /// Generate a PlantUML mind map from a regulation outline (Markdown).
    Mindmap {
        regulation: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Translate an annotated mind map into a fault tree.
    Translate {
        map: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Take the measured-parameter schema (names, units) from a tree
        /// file instead of deriving bare parameters from the annotations.
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Compile a fault tree into an n8n workflow document.
    Compile {
        tree: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Merge identical condition steps instead of duplicating per path.
        #[arg(long)]
        share_conditions: bool,
        /// Label of the shared no-fault output.
        #[arg(long)]
        no_fault_label: Option<String>,
    },
    /// Execute a workflow document on one input and dump the trace.
    Exec {
        workflow: PathBuf,
        /// Input field, repeatable: --input h2=150 --input ch4=40
        #[arg(long = "input", value_name = "KEY=VALUE")]
        inputs: Vec<String>,
    },
    /// Synthesize a test suite from a fault tree.
    GenTests {
        tree: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the generated suite against a workflow; exit 0 iff it passes.
    Verify {
        tree: PathBuf,
        workflow: PathBuf,
        #[arg(long)]
        max_iter: Option<usize>,
        /// On failure, recompile from the tree and retry (the regeneration
        /// loop).
        #[arg(long)]
        regenerate: bool,
    },
    /// Compute conformance metrics between a tree and a workflow.
    Metrics {
        tree: PathBuf,
        workflow: PathBuf,
        /// Execute this suite for path coverage instead of generating one.
        #[arg(long)]
        suite: Option<PathBuf>,
        /// Also write the machine-readable report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Evolve a tree genome toward better readability at equal semantics.
    Evolve {
        tree: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        islands: Option<usize>,
        #[arg(long)]
        population: Option<usize>,
        /// Write a resumable checkpoint after the run.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Resume from a checkpoint instead of starting fresh.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Create and activate a workflow on an n8n host.
    Push {
        workflow: PathBuf,
        #[arg(long)]
        endpoint: Option<String>,
    },
    /// compile → gen-tests → verify → metrics, one report.
    Pipeline {
        tree: PathBuf,
        /// Also write the report here (e.g. under reports/).
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<CmdOut, CliError> {
    let config = load_config(cli.config.as_deref()).map_err(CliError::Config)?;
    match cli.command {
        Command::Lint { tree } => commands::lint(&tree),
        Command::Mindmap { regulation, output } => commands::mindmap(&regulation, &output),
        Command::Translate { map, output, schema } => {
            commands::translate(&map, &output, schema.as_deref())
        }
        Command::Compile { tree, output, share_conditions, no_fault_label } => {
            commands::compile_cmd(&tree, &output, share_conditions, no_fault_label)
        }
        Command::Exec { workflow, inputs } => {
            let pairs = inputs
                .iter()
                .map(|raw| commands::parse_input_pair(raw))
                .collect::<Result<Vec<_>, _>>()?;
            commands::exec_cmd(&workflow, &pairs)
        }
        Command::GenTests { tree, output, seed } => {
            commands::gen_tests_cmd(&tree, &output, seed, &config)
        }
        Command::Verify { tree, workflow, max_iter, regenerate } => {
            commands::verify_cmd(&tree, &workflow, max_iter, regenerate, &config)
        }
        Command::Metrics { tree, workflow, suite, json } => {
            commands::metrics_cmd(&tree, &workflow, suite.as_deref(), json.as_deref(), &config)
        }
        Command::Evolve { tree, output, iters, seed, islands, population, checkpoint, resume } => {
            commands::evolve_cmd(
                &tree,
                output.as_deref(),
                iters,
                seed,
                islands,
                population,
                checkpoint.as_deref(),
                resume.as_deref(),
                &config,
            )
        }
        Command::Push { workflow, endpoint } => commands::push_cmd(&workflow, endpoint, &config),
        Command::Pipeline { tree, report } => {
            commands::pipeline_cmd(&tree, report.as_deref(), &config)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {}: {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
