//! Scripted completion endpoint for tests and offline runs.
//!
//! Speaks the same wire format as [`super::client`]. Every request path is
//! accepted; only the JSON body matters.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use tiny_http::{Header, Response, Server};

use super::client::{Choice, CompletionRequest, CompletionResponse};
use super::prompt::extract_input;
use crate::dataset::Corpus;
use crate::error::{Error, Result};

pub const GIBBERISH: &str = "zxqv blorp fnord";

#[derive(Debug, Clone)]
pub enum MockBehavior {
    /// Always answers with the same text.
    Constant(String),
    /// Looks up the prompt's `INPUT:` text and answers with its true label.
    EchoOracle(HashMap<String, String>),
    /// Answers with text naming no label.
    Gibberish,
    /// Returns HTTP 500 for the first `fail_first` requests, then delegates.
    Flaky {
        fail_first: usize,
        then: Box<MockBehavior>,
    },
    /// Answers `n` lines, each a marked copy of the prompt's input text.
    Paraphrase,
}

impl MockBehavior {
    /// Echo oracle answering with each text's label name in `corpus`.
    pub fn oracle_for(corpus: &Corpus) -> Self {
        let names = corpus.label_map().names();
        MockBehavior::EchoOracle(
            corpus
                .samples()
                .iter()
                .map(|s| (s.text.clone(), names[s.label].clone()))
                .collect(),
        )
    }

    fn respond(&self, request: &CompletionRequest, seen: usize) -> Option<CompletionResponse> {
        let n = request.n.unwrap_or(1).max(1);
        let text = match self {
            MockBehavior::Constant(answer) => answer.clone(),
            MockBehavior::Gibberish => GIBBERISH.to_string(),
            MockBehavior::EchoOracle(table) => {
                let input = extract_input(&request.prompt).unwrap_or_default();
                table
                    .get(&input)
                    .cloned()
                    .unwrap_or_else(|| "unknown".into())
            }
            MockBehavior::Flaky { fail_first, then } => {
                if seen < *fail_first {
                    return None;
                }
                return then.respond(request, seen);
            }
            MockBehavior::Paraphrase => {
                let input =
                    extract_input(&request.prompt).unwrap_or_else(|| request.prompt.clone());
                let one_line = input.replace(['\n', '\r'], " ");
                let lines: Vec<String> = (1..=n)
                    .map(|i| format!("{one_line} (variant {i})"))
                    .collect();
                return Some(CompletionResponse {
                    choices: vec![Choice {
                        text: lines.join("\n"),
                    }],
                });
            }
        };
        Some(CompletionResponse {
            choices: vec![Choice { text }; n],
        })
    }
}

/// A running mock endpoint on a background thread; stops on drop.
pub struct MockServer {
    server: Arc<Server>,
    addr: SocketAddr,
    requests: Arc<AtomicUsize>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Bind an ephemeral localhost port.
    pub fn start(behavior: MockBehavior) -> Result<Self> {
        Self::bind("127.0.0.1:0", behavior)
    }

    pub fn bind(addr: &str, behavior: MockBehavior) -> Result<Self> {
        let server =
            Server::http(addr).map_err(|e| Error::Remote(format!("cannot bind {addr}: {e}")))?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| Error::Remote("mock server is not on an IP socket".into()))?;
        let server = Arc::new(server);
        let requests = Arc::new(AtomicUsize::new(0));
        let behavior = Arc::new(behavior);
        let handle = {
            let server = Arc::clone(&server);
            let requests = Arc::clone(&requests);
            std::thread::spawn(move || {
                while let Ok(request) = server.recv() {
                    let seen = requests.fetch_add(1, Ordering::SeqCst);
                    let behavior = Arc::clone(&behavior);
                    std::thread::spawn(move || handle_request(request, &behavior, seen));
                }
            })
        };
        Ok(Self {
            server,
            addr,
            requests,
            handle: Some(handle),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Completion endpoint URL.
    pub fn url(&self) -> String {
        format!("http://{}/v1/completions", self.addr)
    }

    /// Requests received so far.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    /// Block the calling thread serving requests until the process exits.
    pub fn wait(mut self) {
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn handle_request(mut request: tiny_http::Request, behavior: &MockBehavior, seen: usize) {
    let json_header =
        Header::from_bytes("Content-Type", "application/json").expect("static header");
    let mut body = String::new();
    let parsed = request
        .as_reader()
        .read_to_string(&mut body)
        .ok()
        .and_then(|_| serde_json::from_str::<CompletionRequest>(&body).ok());
    let response = match parsed {
        None => Response::from_string(r#"{"error":"bad request"}"#)
            .with_status_code(400)
            .with_header(json_header),
        Some(req) => match behavior.respond(&req, seen) {
            None => Response::from_string(r#"{"error":"scripted failure"}"#)
                .with_status_code(500)
                .with_header(json_header),
            Some(resp) => Response::from_string(serde_json::to_string(&resp).unwrap_or_default())
                .with_header(json_header),
        },
    };
    let _ = request.respond(response);
}
