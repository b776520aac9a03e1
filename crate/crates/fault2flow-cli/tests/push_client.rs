//! Push client behaviour against recorded stub transcripts. No live n8n
//! host is involved anywhere in the suite.

mod stub_server;

use std::path::Path;
use std::process::Command;
use std::time::Duration;

use fault2flow_cli::client::{N8nClient, PushError};
use stub_server::{load_transcript, StubServer};

fn workflow_doc() -> String {
    let path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/golden/workflows/gas_minimal.json");
    std::fs::read_to_string(path).unwrap()
}

fn client(endpoint: &str) -> N8nClient {
    N8nClient::new(endpoint, "test-key-123", Duration::from_secs(2))
}

#[test]
fn push_and_activate_succeed_against_recording() {
    let server = StubServer::start(load_transcript("push_ok.json"));
    let id = client(&server.endpoint).push_workflow(&workflow_doc()).unwrap();
    assert_eq!(id, "w123");
    assert_eq!(server.finish(), Vec::<String>::new());
}

#[test]
fn wrong_api_key_surfaces_as_auth_error() {
    let server = StubServer::start(load_transcript("push_auth_fail.json"));
    let err = client(&server.endpoint).push_workflow(&workflow_doc()).unwrap_err();
    assert_eq!(err, PushError::Auth { status: 401 });
    server.finish();
}

#[test]
fn rejected_document_surfaces_body_verbatim() {
    let server = StubServer::start(load_transcript("push_schema_reject.json"));
    let err = client(&server.endpoint).push_workflow(&workflow_doc()).unwrap_err();
    match err {
        PushError::SchemaRejected { status: 400, body } => {
            assert!(body.contains("required property"));
        }
        other => panic!("expected SchemaRejected, got {other:?}"),
    }
    server.finish();
}

#[test]
fn activation_rejection_also_surfaces() {
    let server = StubServer::start(load_transcript("push_activate_reject.json"));
    let err = client(&server.endpoint).push_workflow(&workflow_doc()).unwrap_err();
    assert!(matches!(err, PushError::SchemaRejected { status: 400, .. }));
    server.finish();
}

#[test]
fn unreachable_endpoint_is_a_network_error_within_the_timeout() {
    // Bind-then-drop leaves a port with no listener.
    let port = {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        listener.local_addr().unwrap().port()
    };
    let start = std::time::Instant::now();
    let err = client(&format!("http://127.0.0.1:{port}"))
        .push_workflow(&workflow_doc())
        .unwrap_err();
    assert!(matches!(err, PushError::Network(_)), "got {err:?}");
    assert!(start.elapsed() < Duration::from_secs(10));
}

// --- The CLI binary over the same transcripts -------------------------------

fn push_via_cli(endpoint: &str) -> std::process::Output {
    let doc_path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/golden/workflows/gas_minimal.json");
    Command::new(env!("CARGO_BIN_EXE_fault2flow"))
        .args(["push", doc_path.to_str().unwrap(), "--endpoint", endpoint])
        .env("FAULT2FLOW_N8N_KEY", "test-key-123")
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .unwrap()
}

#[test]
fn cli_push_prints_the_remote_id() {
    let server = StubServer::start(load_transcript("push_ok.json"));
    let out = push_via_cli(&server.endpoint);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "w123\n");
    assert_eq!(server.finish(), Vec::<String>::new());
}

#[test]
fn cli_push_exit_codes_map_the_error_paths() {
    let auth = StubServer::start(load_transcript("push_auth_fail.json"));
    let out = push_via_cli(&auth.endpoint);
    assert_eq!(out.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&out.stderr).contains("AuthError"));
    auth.finish();

    let schema = StubServer::start(load_transcript("push_schema_reject.json"));
    let out = push_via_cli(&schema.endpoint);
    assert_eq!(out.status.code(), Some(7));
    assert!(String::from_utf8_lossy(&out.stderr).contains("SchemaRejected"));
    schema.finish();

    let port = {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        listener.local_addr().unwrap().port()
    };
    let out = push_via_cli(&format!("http://127.0.0.1:{port}"));
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NetworkError"));
}
