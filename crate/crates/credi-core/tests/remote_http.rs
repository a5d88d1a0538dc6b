//! Exercises the remote chat backend and remote embedder against a
//! scripted in-process HTTP server.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc;
use std::time::Duration;

use credi_core::inference::{BackendConfig, BackendError, BackendKind};
use credi_core::retrieval::{Embedder, RemoteEmbedder, RetrievalError};

/// One scripted HTTP exchange: respond with `status` and `body` after
/// capturing the request.
struct Scripted {
    status: u16,
    body: String,
}

struct CapturedRequest {
    head: String,
    body: String,
}

/// Serves the scripted responses one connection each, closing every
/// connection to force the client to reconnect per attempt. Captured
/// requests come back through the channel.
fn serve(script: Vec<Scripted>) -> (String, mpsc::Receiver<CapturedRequest>) {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for step in script {
            let Ok((stream, _)) = listener.accept() else { return };
            let captured = handle(stream, &step);
            let _ = tx.send(captured);
        }
    });
    (format!("http://{addr}"), rx)
}

fn handle(mut stream: TcpStream, step: &Scripted) -> CapturedRequest {
    stream.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    let header_end = loop {
        let n = stream.read(&mut chunk).expect("read request");
        buf.extend_from_slice(&chunk[..n]);
        if let Some(pos) = find_header_end(&buf) {
            break pos;
        }
        assert!(n > 0, "connection closed mid-request");
    };
    let head = String::from_utf8_lossy(&buf[..header_end]).to_string();
    let content_length = head
        .lines()
        .find_map(|l| {
            let (name, value) = l.split_once(':')?;
            name.eq_ignore_ascii_case("content-length").then(|| value.trim().parse::<usize>())
        })
        .and_then(Result::ok)
        .unwrap_or(0);
    let mut body = buf[header_end + 4..].to_vec();
    while body.len() < content_length {
        let n = stream.read(&mut chunk).expect("read body");
        assert!(n > 0, "connection closed mid-body");
        body.extend_from_slice(&chunk[..n]);
    }
    let reason = match step.status {
        200 => "OK",
        404 => "Not Found",
        429 => "Too Many Requests",
        _ => "Error",
    };
    let response = format!(
        "HTTP/1.1 {} {}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
        step.status,
        reason,
        step.body.len(),
        step.body
    );
    stream.write_all(response.as_bytes()).unwrap();
    let _ = stream.flush();
    CapturedRequest { head, body: String::from_utf8_lossy(&body).to_string() }
}

fn find_header_end(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n")
}

fn chat_body(content: &str) -> String {
    serde_json::json!({ "choices": [{ "message": { "content": content } }] }).to_string()
}

fn remote_config(endpoint: &str) -> BackendConfig {
    // SAFETY test-only: every test in this binary sets the same value.
    std::env::set_var("CREDI_API_KEY", "test-key");
    BackendConfig {
        kind: BackendKind::RemoteChat,
        endpoint: Some(endpoint.to_string()),
        model: Some("test-model".to_string()),
        max_retries: 2,
        timeout_secs: 5,
        backoff_base_ms: 5,
        ..BackendConfig::default()
    }
}

#[test]
fn chat_success_sends_expected_request_shape() {
    let answer = "polarity=negative; rel_type=affiliative; hierarchy=senior";
    let (endpoint, rx) = serve(vec![Scripted { status: 200, body: chat_body(answer) }]);
    let backend = remote_config(&endpoint).build(None).unwrap();

    let outcome = backend.complete("r1", "PROMPT TEXT").unwrap();
    assert_eq!(outcome.text, answer);
    assert_eq!(outcome.attempts, 1);

    let req = rx.recv_timeout(Duration::from_secs(5)).unwrap();
    assert!(req.head.starts_with("POST /chat/completions HTTP/1.1"));
    assert!(req.head.to_ascii_lowercase().contains("authorization: bearer test-key"));
    let body: serde_json::Value = serde_json::from_str(&req.body).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["messages"][0]["role"], "user");
    assert_eq!(body["messages"][0]["content"], "PROMPT TEXT");
}

#[test]
fn chat_retries_on_500_and_recovers() {
    let (endpoint, rx) = serve(vec![
        Scripted { status: 500, body: "{}".into() },
        Scripted { status: 200, body: chat_body("polarity=positive") },
    ]);
    let backend = remote_config(&endpoint).build(None).unwrap();
    let outcome = backend.complete("r1", "p").unwrap();
    assert_eq!(outcome.attempts, 2);
    assert_eq!(outcome.text, "polarity=positive");
    assert_eq!(rx.iter().take(2).count(), 2, "server saw both attempts");
}

#[test]
fn chat_does_not_retry_on_404() {
    let (endpoint, rx) = serve(vec![Scripted { status: 404, body: "{}".into() }]);
    let backend = remote_config(&endpoint).build(None).unwrap();
    let err = backend.complete("r1", "p").unwrap_err();
    assert!(matches!(err, BackendError::HttpStatus(404)), "got {err:?}");
    assert_eq!(rx.recv_timeout(Duration::from_secs(5)).ok().map(|_| ()), Some(()));
    assert!(
        rx.recv_timeout(Duration::from_millis(200)).is_err(),
        "no second attempt expected"
    );
}

#[test]
fn chat_exhausts_retries_on_persistent_429() {
    let script = (0..3).map(|_| Scripted { status: 429, body: "{}".into() }).collect();
    let (endpoint, rx) = serve(script);
    let backend = remote_config(&endpoint).build(None).unwrap();
    let err = backend.complete("r1", "p").unwrap_err();
    match err {
        BackendError::ExhaustedRetries { attempts, last } => {
            assert_eq!(attempts, 3, "initial try plus max_retries");
            assert!(matches!(*last, BackendError::HttpStatus(429)));
        }
        other => panic!("expected ExhaustedRetries, got {other:?}"),
    }
    assert_eq!(rx.iter().take(3).count(), 3);
}

#[test]
fn chat_malformed_response_is_a_transport_error() {
    let (endpoint, _rx) = serve(vec![Scripted { status: 200, body: "not json".into() }]);
    let backend = remote_config(&endpoint).build(None).unwrap();
    // Malformed bodies count as transport failures and are retried until
    // exhaustion.
    let err = backend.complete("r1", "p").unwrap_err();
    assert!(
        matches!(err, BackendError::Transport(_) | BackendError::ExhaustedRetries { .. }),
        "got {err:?}"
    );
}

#[test]
fn remote_embedder_preserves_order_and_normalizes() {
    let body = serde_json::json!({
        "data": [
            { "embedding": [3.0, 0.0, 0.0, 0.0] },
            { "embedding": [0.0, 4.0, 0.0, 0.0] },
        ]
    })
    .to_string();
    let (endpoint, rx) = serve(vec![Scripted { status: 200, body }]);
    let embedder = RemoteEmbedder::new(&endpoint, Some("emb".into()), 4, Duration::from_secs(5));
    assert_eq!(embedder.dim(), 4);
    assert_eq!(embedder.name(), "remote:emb");

    let vectors = embedder.embed_batch(&["第一", "第二"]).unwrap();
    assert_eq!(vectors.len(), 2);
    assert_eq!(vectors[0].values, vec![1.0, 0.0, 0.0, 0.0]);
    assert_eq!(vectors[1].values, vec![0.0, 1.0, 0.0, 0.0]);

    let req = rx.recv_timeout(Duration::from_secs(5)).unwrap();
    let body: serde_json::Value = serde_json::from_str(&req.body).unwrap();
    assert_eq!(body["input"][0], "第一");
    assert_eq!(body["input"][1], "第二");
    assert_eq!(body["model"], "emb");
}

#[test]
fn remote_embedder_rejects_wrong_dimension_and_count() {
    let wrong_dim = serde_json::json!({ "data": [{ "embedding": [1.0, 2.0] }] }).to_string();
    let (endpoint, _rx) = serve(vec![Scripted { status: 200, body: wrong_dim }]);
    let embedder = RemoteEmbedder::new(&endpoint, None, 4, Duration::from_secs(5));
    let err = embedder.embed("文本").unwrap_err();
    assert!(matches!(err, RetrievalError::DimensionMismatch { expected: 4, got: 2 }));

    let wrong_count = serde_json::json!({ "data": [] }).to_string();
    let (endpoint, _rx) = serve(vec![Scripted { status: 200, body: wrong_count }]);
    let embedder = RemoteEmbedder::new(&endpoint, None, 4, Duration::from_secs(5));
    let err = embedder.embed("文本").unwrap_err();
    assert!(matches!(err, RetrievalError::Http(_)));
}
