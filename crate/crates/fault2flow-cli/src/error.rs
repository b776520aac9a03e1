//! CLI error envelope: every failure maps to a short machine-readable kind
//! (printed on stderr as `error: <Kind>: <message>`) and a documented exit
//! code.
//!
//! Exit codes: 0 success; 1 usage or I/O; 2 parse/validation/lint failure;
//! 3 execution error; 4 verification failed; 5 network; 6 authentication;
//! 7 document rejected by the remote host.

use fault2flow::compiler::CompileError;
use fault2flow::evolve::EvolveError;
use fault2flow::executor::ExecError;
use fault2flow::metrics::MetricsError;
use fault2flow::mindmap::MindmapError;
use fault2flow::pasta::{CheckReport, PastaError};
use fault2flow::translate::TranslateError;
use fault2flow::verify::VerifyError;
use fault2flow::workflow::WorkflowError;
use thiserror::Error;

use crate::client::PushError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Pasta(PastaError),
    #[error("{0}")]
    Mindmap(MindmapError),
    #[error("{0}")]
    Translate(TranslateError),
    #[error("{0}")]
    Workflow(WorkflowError),
    #[error("{0}")]
    Compile(CompileError),
    #[error("{0}")]
    Exec(ExecError),
    #[error("{0}")]
    Verify(VerifyError),
    #[error("{0}")]
    Metrics(MetricsError),
    #[error("{0}")]
    Evolve(EvolveError),
    #[error("{0}")]
    Push(PushError),
    #[error("validation failed:\n{}", report.render())]
    Validation { report: CheckReport },
    #[error("{path}: {message}")]
    Suite { path: String, message: String },
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "Io",
            CliError::Usage(_) => "Usage",
            CliError::Pasta(e) => match e {
                PastaError::SyntaxError { .. } => "SyntaxError",
                PastaError::DuplicateId { .. } => "DuplicateId",
                PastaError::UnresolvedReference { .. } => "UnresolvedReference",
                PastaError::CycleDetected { .. } => "CycleDetected",
                PastaError::DerivedOverDerived { .. } => "DerivedOverDerived",
                PastaError::NonFiniteValue { .. } => "NonFiniteValue",
                PastaError::DivisionByZero { .. } => "DivisionByZero",
                PastaError::MissingParameter { .. } => "MissingParameter",
            },
            CliError::Mindmap(e) => match e {
                MindmapError::SyntaxError { .. } => "SyntaxError",
                MindmapError::DepthJump { .. } => "DepthJump",
                MindmapError::MultipleRoots { .. } => "MultipleRoots",
            },
            CliError::Translate(e) => match e {
                TranslateError::UnannotatedLeaf { .. } => "UnannotatedLeaf",
                TranslateError::UnknownParameter { .. } => "UnknownParameter",
                TranslateError::EmptyFaultClass { .. } => "EmptyFaultClass",
                TranslateError::ConditionNotLeaf { .. } => "ConditionNotLeaf",
                TranslateError::Tree(_) => "InvalidTree",
                TranslateError::HookExhausted { .. } => "HookExhausted",
            },
            CliError::Workflow(e) => match e {
                WorkflowError::UnknownNode { .. } => "UnknownNode",
                WorkflowError::CyclicConnections { .. } => "CyclicConnections",
                WorkflowError::ValidationFailed { .. } => "ValidationFailed",
                WorkflowError::SchemaError { .. } => "SchemaError",
            },
            CliError::Compile(e) => match e {
                CompileError::SelfCheckFailed { .. } => "SelfCheckFailed",
                CompileError::KofnTooWide { .. } => "KofnTooWide",
                CompileError::NoFaultLabelClash { .. } => "NoFaultLabelClash",
                CompileError::Workflow(_) => "ValidationFailed",
            },
            CliError::Exec(e) => match e {
                ExecError::MissingField { .. } => "MissingField",
                ExecError::DivisionByZero { .. } => "DivisionByZero",
                ExecError::DanglingBranch { .. } => "DanglingBranch",
                ExecError::AmbiguousBranch { .. } => "AmbiguousBranch",
                ExecError::NoTrigger => "NoTrigger",
                ExecError::Invalid => "InvalidWorkflow",
            },
            CliError::Verify(VerifyError::UnsatisfiableStrategy) => "UnsatisfiableStrategy",
            CliError::Metrics(e) => match e {
                MetricsError::EmptyTree => "EmptyTree",
                MetricsError::LeafCapExceeded { .. } => "LeafCapExceeded",
            },
            CliError::Evolve(e) => match e {
                EvolveError::SeedInvalid { .. } => "SeedInvalid",
                EvolveError::BadConfig { .. } => "BadConfig",
                EvolveError::BadCheckpoint { .. } => "BadCheckpoint",
            },
            CliError::Push(e) => match e {
                PushError::Network(_) => "NetworkError",
                PushError::Auth { .. } => "AuthError",
                PushError::SchemaRejected { .. } => "SchemaRejected",
                PushError::BadResponse(_) => "BadResponse",
            },
            CliError::Validation { .. } => "ValidationFailed",
            CliError::Suite { .. } => "SuiteError",
            CliError::Config(_) => "ConfigError",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Usage(_) => 1,
            CliError::Pasta(_)
            | CliError::Mindmap(_)
            | CliError::Translate(_)
            | CliError::Workflow(_)
            | CliError::Compile(_)
            | CliError::Verify(_)
            | CliError::Metrics(_)
            | CliError::Evolve(_)
            | CliError::Validation { .. }
            | CliError::Suite { .. }
            | CliError::Config(_) => 2,
            CliError::Exec(_) => 3,
            CliError::Push(PushError::Network(_)) => 5,
            CliError::Push(PushError::Auth { .. }) => 6,
            CliError::Push(PushError::SchemaRejected { .. })
            | CliError::Push(PushError::BadResponse(_)) => 7,
        }
    }
}
