//! Replay server for recorded HTTP transcripts. Serves the scripted
//! exchanges in order on a loopback port, checks each incoming request
//! against the recording, and reports mismatches back to the test thread.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::thread::JoinHandle;

use serde::Deserialize;

#[derive(Deserialize)]
pub struct Transcript {
    pub exchanges: Vec<Exchange>,
}

#[derive(Deserialize)]
pub struct Exchange {
    pub expect: Expect,
    pub respond: Respond,
}

#[derive(Deserialize)]
pub struct Expect {
    pub method: String,
    pub path: String,
    #[serde(default)]
    pub headers: std::collections::BTreeMap<String, String>,
    #[serde(default)]
    pub body_contains: Option<String>,
}

#[derive(Deserialize)]
pub struct Respond {
    pub status: u16,
    pub body: String,
}

pub struct StubServer {
    pub endpoint: String,
    handle: JoinHandle<Vec<String>>,
}

struct Request {
    method: String,
    path: String,
    headers: Vec<(String, String)>,
    body: String,
}

fn read_request(stream: &mut TcpStream) -> Option<Request> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line).ok()?;
    let mut parts = request_line.split_whitespace();
    let method = parts.next()?.to_string();
    let path = parts.next()?.to_string();

    let mut headers = Vec::new();
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).ok()?;
        let line = line.trim_end().to_string();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            let name = name.trim().to_ascii_lowercase();
            let value = value.trim().to_string();
            if name == "content-length" {
                content_length = value.parse().unwrap_or(0);
            }
            headers.push((name, value));
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body).ok()?;
    Some(Request { method, path, headers, body: String::from_utf8_lossy(&body).into_owned() })
}

impl StubServer {
    /// Start serving `transcript`; the listener closes after the final
    /// exchange. `finish` returns every recorded mismatch.
    pub fn start(transcript: Transcript) -> StubServer {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback");
        let endpoint = format!("http://{}", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let mut mismatches = Vec::new();
            for (i, exchange) in transcript.exchanges.iter().enumerate() {
                let Ok((mut stream, _)) = listener.accept() else {
                    mismatches.push(format!("exchange {i}: accept failed"));
                    break;
                };
                let Some(request) = read_request(&mut stream) else {
                    mismatches.push(format!("exchange {i}: unreadable request"));
                    break;
                };
                let expect = &exchange.expect;
                if request.method != expect.method || request.path != expect.path {
                    mismatches.push(format!(
                        "exchange {i}: got {} {}, recorded {} {}",
                        request.method,
                        request.path,
                        expect.method, expect.path
                    ));
                }
                for (name, want) in &expect.headers {
                    let found = request
                        .headers
                        .iter()
                        .find(|(n, _)| n == &name.to_ascii_lowercase())
                        .map(|(_, v)| v.as_str());
                    if found != Some(want.as_str()) {
                        mismatches.push(format!(
                            "exchange {i}: header {name} = {found:?}, recorded {want:?}"
                        ));
                    }
                }
                if let Some(fragment) = &expect.body_contains {
                    if !request.body.contains(fragment) {
                        mismatches
                            .push(format!("exchange {i}: body does not contain {fragment:?}"));
                    }
                }
                let respond = &exchange.respond;
                let reason = match respond.status {
                    200 => "OK",
                    400 => "Bad Request",
                    401 => "Unauthorized",
                    403 => "Forbidden",
                    _ => "Status",
                };
                let payload = format!(
                    "HTTP/1.1 {} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    respond.status,
                    respond.body.len(),
                    respond.body
                );
                let _ = stream.write_all(payload.as_bytes());
            }
            mismatches
        });
        StubServer { endpoint, handle }
    }

    pub fn finish(self) -> Vec<String> {
        self.handle.join().expect("stub thread")
    }
}

pub fn load_transcript(name: &str) -> Transcript {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/transcripts")
        .join(name);
    serde_json::from_str(&std::fs::read_to_string(&path).expect("transcript exists"))
        .expect("transcript parses")
}
