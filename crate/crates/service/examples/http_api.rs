//! Walks through the HTTP API in-process: list topics, open a session,
//! answer until the product is found, then fetch the ranking and the
//! transcript. Run `qsbps serve` to expose the same routes on a socket.

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use qsbps::corpus::generate_synthetic;
use qsbps::{FieldMode, ModelSet, SyntheticSpec};
use qsbps_service::{router, AppState, Catalog, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(state: &AppState, method: &str, uri: &str, body: Option<Value>) -> Value {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json");
    let req = req
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value: Value = serde_json::from_slice(&bytes).unwrap();
    println!("{method} {uri} -> {status}");
    value
}

#[tokio::main(flavor = "current_thread")]
async fn main() {
    let corpus = generate_synthetic(&SyntheticSpec::binary(3, 2, 7), FieldMode::MetadataOnly).unwrap();
    let models = ModelSet::untrained(&[corpus.index("synthetic").unwrap()]);
    let state = AppState::new(Catalog::new(&corpus, &models).unwrap(), ServiceConfig::default());

    println!("{}", call(&state, "GET", "/topics", None).await);
    let mut view = call(
        &state,
        "POST",
        "/topics/synthetic/sessions",
        Some(json!({"gamma": 0.0})),
    )
    .await;
    let id = view["session_id"].as_str().unwrap().to_string();

    // The user is after p00006 = bits 1 and 2 set, bit 0 clear.
    let wanted = ["bit_01", "bit_02"];
    while let Some(q) = view.get("question").filter(|q| !q.is_null()).cloned() {
        let label = q["entity_label"].as_str().unwrap();
        let answer = if wanted.contains(&label) { "yes" } else { "no" };
        println!("  {}  {answer}", q["prompt"].as_str().unwrap());
        let body = json!({"answer": answer, "question": q["number"]});
        view = call(&state, "POST", &format!("/sessions/{id}/answer"), Some(body)).await;
    }

    let ranking = call(&state, "GET", &format!("/sessions/{id}/ranking?k=3"), None).await;
    println!("{}", serde_json::to_string_pretty(&ranking).unwrap());
    let transcript = call(&state, "GET", &format!("/sessions/{id}/transcript"), None).await;
    println!(
        "{} questions in transcript",
        transcript["questions"].as_array().unwrap().len()
    );
}
