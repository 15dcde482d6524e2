use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use accnote::gateway::{
    ChatBackend, ChatRequest, EmbeddingBackend, EndpointConfig, OpenAiBackend, OpenAiEmbedder, RetryPolicy,
    UserPart,
};
use accnote::GatewayError;
use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

#[derive(Clone)]
struct Server {
    hits: Arc<AtomicUsize>,
    /// Status codes returned before the first success.
    failures: Arc<Vec<u16>>,
}

async fn chat(State(s): State<Server>, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    let n = s.hits.fetch_add(1, Ordering::SeqCst);
    if let Some(code) = s.failures.get(n) {
        return (StatusCode::from_u16(*code).unwrap(), Json(json!({"error": "boom"})));
    }
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["temperature"], 0.0);
    let content = json!({"choices": [{"message": {"role": "assistant", "content": "Deceptive. X."}}]});
    (StatusCode::OK, Json(content))
}

async fn embeddings(State(s): State<Server>, Json(body): Json<Value>) -> Json<Value> {
    s.hits.fetch_add(1, Ordering::SeqCst);
    let len = body["input"].as_str().unwrap().len() as f64;
    Json(json!({"data": [{"embedding": [len, 1.0, 0.5]}]}))
}

async fn serve(failures: Vec<u16>) -> (String, Arc<AtomicUsize>) {
    let hits = Arc::new(AtomicUsize::new(0));
    let state = Server {
        hits: hits.clone(),
        failures: Arc::new(failures),
    };
    let app = Router::new()
        .route("/v1/chat/completions", post(chat))
        .route("/v1/embeddings", post(embeddings))
        .with_state(state);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}/v1"), hits)
}

fn config(base: &str) -> EndpointConfig {
    EndpointConfig {
        api_key: Some("test-key".into()),
        timeout: Duration::from_secs(10),
        retry: RetryPolicy {
            max_retries: 2,
            initial_backoff: Duration::from_millis(5),
            multiplier: 4,
        },
        ..EndpointConfig::new(base)
    }
}

fn request() -> ChatRequest {
    ChatRequest {
        system_text: "You are a fact-checking assistant.".into(),
        user_parts: vec![UserPart::Text("POST DETAILS".into())],
        temperature: 0.0,
        max_tokens: 32,
        model_id: "test-model".into(),
        attempt: 0,
    }
}

#[tokio::test]
async fn persistent_500_exhausts_retries() {
    let (base, hits) = serve(vec![500, 500, 500, 500]).await;
    let backend = OpenAiBackend::new(config(&base)).unwrap();
    let err = backend.complete(&request()).await.unwrap_err();
    assert!(matches!(err, GatewayError::Network(_)));
    assert!(err.to_string().contains("network failure after retries"), "{err}");
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn transient_failures_recover() {
    let (base, hits) = serve(vec![503, 429]).await;
    let backend = OpenAiBackend::new(config(&base)).unwrap();
    assert_eq!(backend.complete(&request()).await.unwrap(), "Deceptive. X.");
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn auth_failure_is_not_retried() {
    let (base, hits) = serve(vec![401]).await;
    let backend = OpenAiBackend::new(config(&base)).unwrap();
    let err = backend.complete(&request()).await.unwrap_err();
    assert!(matches!(err, GatewayError::Auth(_)), "{err}");
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn bad_request_is_schema_error() {
    let (base, _) = serve(vec![400]).await;
    let backend = OpenAiBackend::new(config(&base)).unwrap();
    let err = backend.complete(&request()).await.unwrap_err();
    assert!(matches!(err, GatewayError::Schema(_)), "{err}");
}

#[tokio::test]
async fn embeddings_round_trip() {
    let (base, _) = serve(vec![]).await;
    let embedder = OpenAiEmbedder::new(config(&base), "embed-model").unwrap();
    let v = embedder.embed("abcd").await.unwrap();
    assert_eq!(v, vec![4.0, 1.0, 0.5]);
    assert_eq!(embedder.embed("abcd").await.unwrap(), v);
}

#[tokio::test]
async fn unreachable_endpoint_is_network_error() {
    let backend = OpenAiBackend::new(config("http://127.0.0.1:9/v1")).unwrap();
    let err = backend.complete(&request()).await.unwrap_err();
    assert!(matches!(err, GatewayError::Network(_)), "{err}");
}
