use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

use styleforge::backends::{parse_backend_config, BackendSet, GenerationParams};
use styleforge::masking::{am_transfer, MaskedText, MaskingConfig};
use styleforge::{tokenize, Error, StyleLabel, TransferDirection};

type Seen = Arc<Mutex<Vec<(String, Value, Option<String>)>>>;

/// Serves every request with `handler(path, body)` until the test ends.
fn serve(handler: impl Fn(&str, &Value) -> (u16, String) + Send + 'static) -> (String, Seen) {
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let url = format!("http://{}", server.server_addr().to_ip().unwrap());
    let seen: Seen = Arc::default();
    let log = seen.clone();
    thread::spawn(move || {
        for mut request in server.incoming_requests() {
            let mut body = String::new();
            request.as_reader().read_to_string(&mut body).unwrap();
            let body: Value = serde_json::from_str(&body).unwrap_or(Value::Null);
            let auth = request
                .headers()
                .iter()
                .find(|h| h.field.equiv("Authorization"))
                .map(|h| h.value.to_string());
            let path = request.url().to_string();
            let (status, reply) = handler(&path, &body);
            log.lock().unwrap().push((path, body, auth));
            let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
            let response = tiny_http::Response::from_string(reply).with_status_code(status).with_header(header);
            let _ = request.respond(response);
        }
    });
    (url, seen)
}

fn all_http(url: &str) -> BackendSet {
    let cfg = json!({
        "classifier": {"kind": "http", "url": url},
        "filler": {"kind": "http", "url": url},
        "generator": {"kind": "http", "url": url},
        "embedder": {"kind": "http", "url": url},
        "ppl_scorer": {"kind": "http", "url": url}
    });
    BackendSet::from_config(&parse_backend_config(&cfg.to_string()).unwrap(), Path::new(".")).unwrap()
}

fn style(s: &str) -> StyleLabel {
    StyleLabel::new(s).unwrap()
}

fn wire_examples(path: &str, body: &Value) -> (u16, String) {
    let n = |key: &str| body[key].as_array().map_or(0, Vec::len);
    let reply = match path {
        "/v1/classify" => json!({"results": (0..n("texts")).map(|_| json!({
            "probs": {"positive": 0.119, "negative": 0.881},
            "token_scores": [{"token": "it", "score": 0.0}, {"token": "is", "score": 0.0}, {"token": "awful", "score": 2.0}]
        })).collect::<Vec<_>>()}),
        "/v1/fill" => json!({"results": [{"text": "it is wonderful"}]}),
        "/v1/generate" => json!({"results": [{"text": " \"it is wonderful\" "}]}),
        "/v1/embed" => json!({"results": (0..n("texts")).map(|_| json!({"vector": [0.6, 0.8]})).collect::<Vec<_>>()}),
        "/v1/perplexity" => json!({"results": [{"ppl": 74.0}]}),
        _ => return (404, "{}".into()),
    };
    (200, reply.to_string())
}

#[test]
fn five_endpoints_round_trip() {
    let (url, seen) = serve(wire_examples);
    let b = all_http(&url);
    let (pos, neg) = (style("positive"), style("negative"));

    let r = b.classify(&[tokenize("it is awful")], (&pos, &neg)).unwrap();
    assert_eq!(r[0].prob(&neg), 0.881);
    assert_eq!(r[0].token_scores[2].score, 2.0);

    let filled = b.fill(&[(MaskedText::parse("it is [SLOT]"), pos.clone())]).unwrap();
    assert_eq!(filled[0].to_string(), "it is wonderful");

    let gen = GenerationParams::default();
    assert_eq!(b.generate(&["p".to_string()], &gen).unwrap(), [" \"it is wonderful\" "]);
    assert_eq!(b.embed(&["a".to_string(), "b".to_string()]).unwrap(), [vec![0.6, 0.8], vec![0.6, 0.8]]);
    assert_eq!(b.perplexity(&["x".to_string()]).unwrap(), [74.0]);

    let seen = seen.lock().unwrap();
    let bodies: Vec<(&str, &Value)> = seen.iter().map(|(p, b, _)| (p.as_str(), b)).collect();
    assert_eq!(bodies[0], ("/v1/classify", &json!({"texts": ["it is awful"], "styles": ["positive", "negative"]})));
    assert_eq!(bodies[1], ("/v1/fill", &json!({"items": [{"masked": "it is [SLOT]", "target_style": "positive"}]})));
    assert_eq!(bodies[2], ("/v1/generate", &json!({"prompts": ["p"], "temperature": 0.0, "max_tokens": 128})));
    assert_eq!(bodies[3], ("/v1/embed", &json!({"texts": ["a", "b"]})));
    assert_eq!(bodies[4], ("/v1/perplexity", &json!({"texts": ["x"]})));
    assert!(seen.iter().all(|(_, _, auth)| auth.is_none()));
}

#[test]
fn am_transfer_over_http() {
    let (url, _) = serve(wire_examples);
    let b = all_http(&url);
    let dir: TransferDirection = "negative:positive".parse().unwrap();
    let out = am_transfer(&tokenize("it is awful"), &dir, &MaskingConfig::default(), &b).unwrap();
    assert_eq!(out.to_string(), "it is wonderful");
}

#[test]
fn non_success_status_is_a_backend_error() {
    let (url, _) = serve(|_, _| (503, r#"{"error":"loading"}"#.into()));
    let b = all_http(&url);
    let err = b.perplexity(&["x".to_string()]).unwrap_err();
    assert!(matches!(err, Error::MalformedResponse { .. }), "{err:?}");
    assert!(err.to_string().contains("503"));
}

#[test]
fn schema_violations_are_rejected() {
    let (url, _) = serve(|path, _| match path {
        "/v1/classify" => (200, json!({"results": [{"probs": {"positive": 0.9, "negative": 0.9}, "token_scores": []}]}).to_string()),
        "/v1/fill" => (200, json!({"results": [{"text": "it is [SLOT]"}]}).to_string()),
        "/v1/generate" => (200, json!({"results": [{"text": "a"}, {"text": "b"}]}).to_string()),
        "/v1/embed" => (200, json!({"results": [{"vector": "nope"}]}).to_string()),
        _ => (200, "not json".into()),
    });
    let b = all_http(&url);
    let (pos, neg) = (style("positive"), style("negative"));
    assert!(b.classify(&[tokenize("a")], (&pos, &neg)).is_err());
    assert!(matches!(
        b.fill(&[(MaskedText::parse("it is [SLOT]"), pos.clone())]),
        Err(Error::SlotLeftUnfilled { index: 0 })
    ));
    assert!(matches!(
        b.generate(&["p".to_string()], &GenerationParams::default()),
        Err(Error::MalformedResponse { backend: "generator", .. })
    ));
    assert!(matches!(b.embed(&["a".to_string()]), Err(Error::MalformedResponse { .. })));
    assert!(matches!(b.perplexity(&["a".to_string()]), Err(Error::MalformedResponse { .. })));
}

#[test]
fn bearer_token_is_forwarded() {
    let (url, seen) = serve(wire_examples);
    std::env::set_var("STYLEFORGE_TEST_TOKEN", "s3cret");
    let cfg = json!({
        "classifier": {"kind": "lexicon", "preset": "demo"},
        "filler": {"kind": "template", "preset": "demo"},
        "generator": {"kind": "antonym", "preset": "demo"},
        "embedder": {"kind": "hash"},
        "ppl_scorer": {"kind": "http", "url": url, "bearer_token_env": "STYLEFORGE_TEST_TOKEN", "timeout_secs": 5}
    });
    let b = BackendSet::from_config(&parse_backend_config(&cfg.to_string()).unwrap(), Path::new(".")).unwrap();
    b.perplexity(&["x".to_string()]).unwrap();
    assert_eq!(seen.lock().unwrap()[0].2.as_deref(), Some("Bearer s3cret"));
}

#[test]
fn transport_failure_is_retried_once() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        // first connection: read the request, then hang up without replying
        let (mut first, _) = listener.accept().unwrap();
        let mut buf = [0u8; 4096];
        let _ = first.read(&mut buf);
        drop(first);
        let (mut second, _) = listener.accept().unwrap();
        second.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
        let _ = second.read(&mut buf);
        let body = r#"{"results":[{"ppl":12.5}]}"#;
        write!(
            second,
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        )
        .unwrap();
    });
    let b = all_http(&url);
    assert_eq!(b.perplexity(&["x".to_string()]).unwrap(), [12.5]);
    handle.join().unwrap();
}

#[test]
fn unreachable_backend_fails_after_retry() {
    let port = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let b = all_http(&format!("http://127.0.0.1:{port}"));
    let err = b.embed(&["x".to_string()]).unwrap_err();
    assert!(matches!(err, Error::BackendUnreachable { backend: "embedder", .. }), "{err:?}");
}

#[test]
fn token_scores_must_cover_the_input() {
    let (url, _) = serve(wire_examples);
    let b = all_http(&url);
    let (pos, neg) = (style("positive"), style("negative"));
    let err = b.classify(&[tokenize("too short")], (&pos, &neg)).unwrap_err();
    assert!(matches!(err, Error::LengthMismatch { .. }), "{err:?}");
}
