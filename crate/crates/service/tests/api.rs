use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use qsbps::corpus::generate_synthetic;
use qsbps::{Answer, FieldMode, ModelSet, Session, SessionConfig, SyntheticSpec, TopicIndex};
use qsbps_service::{router, AppState, Catalog, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

fn state_with(bits: u32, config: ServiceConfig) -> (AppState, Arc<TopicIndex>) {
    let corpus = generate_synthetic(&SyntheticSpec::binary(bits, 2, 7), FieldMode::MetadataOnly).unwrap();
    let index = corpus.index("synthetic").unwrap();
    let models = ModelSet::untrained(std::slice::from_ref(&index));
    let catalog = Catalog::new(&corpus, &models).unwrap();
    (AppState::new(catalog, config), Arc::new(index))
}

fn state(bits: u32) -> (AppState, Arc<TopicIndex>) {
    state_with(bits, ServiceConfig::default())
}

async fn call(state: &AppState, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn create(state: &AppState, body: Value) -> (StatusCode, Value) {
    call(state, "POST", "/topics/synthetic/sessions", Some(body)).await
}

fn truthful(index: &TopicIndex, label: &str, target: usize) -> &'static str {
    let e = index.entity_position(label).unwrap();
    if index.incidence(e).contains(target) {
        "yes"
    } else {
        "no"
    }
}

#[tokio::test]
async fn topics_are_listed_with_sizes() {
    let (st, _) = state(3);
    let (code, body) = call(&st, "GET", "/topics", None).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(
        body,
        json!([{"topic_id": "synthetic", "n_products": 8, "n_entities": 5}])
    );
}

#[tokio::test]
async fn create_returns_first_question() {
    let (st, _) = state(3);
    let (code, body) = create(&st, json!({})).await;
    assert_eq!(code, StatusCode::CREATED);
    assert_eq!(body["status"], "awaiting_answer");
    assert_eq!(body["session_id"].as_str().unwrap().len(), 32);
    let q = &body["question"];
    assert_eq!(q["number"], 1);
    assert_eq!(q["entity_label"], "bit_00");
    assert_eq!(q["prompt"], "Are you interested in bit_00?");
    assert_eq!(body["top"].as_array().unwrap().len(), 8);
}

#[tokio::test]
async fn empty_body_uses_defaults() {
    let (st, _) = state(3);
    let req = Request::builder()
        .method("POST")
        .uri("/topics/synthetic/sessions")
        .body(Body::empty())
        .unwrap();
    let resp = router(st).oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::CREATED);
}

#[tokio::test]
async fn unknown_topic_is_404() {
    let (st, _) = state(3);
    let (code, body) = call(&st, "POST", "/topics/nope/sessions", Some(json!({}))).await;
    assert_eq!(code, StatusCode::NOT_FOUND);
    assert!(body["error"].as_str().unwrap().contains("nope"));
}

#[tokio::test]
async fn invalid_params_are_422_with_field_path() {
    let (st, _) = state(3);
    let (code, body) = create(&st, json!({"gamma": -0.5})).await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["path"], "gamma");
    let (code, body) = create(&st, json!({"beta": -0.1})).await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["path"], "beta");
    let (code, body) = create(&st, json!({"error_model": "fixed:0.7"})).await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["path"], "error_model");
    let (code, body) = create(&st, json!({"n_q_limit": "five"})).await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["path"], "n_q_limit");
}

#[tokio::test]
async fn zero_budget_session_is_finished_with_ranking() {
    let (st, _) = state(3);
    let (code, body) = create(&st, json!({"n_q_limit": 0})).await;
    assert_eq!(code, StatusCode::CREATED);
    assert_eq!(body["status"], "finished");
    assert_eq!(body["finish_reason"], "budget_exhausted");
    assert!(body.get("question").is_none());
    assert_eq!(body["top"].as_array().unwrap().len(), 8);
}

#[tokio::test]
async fn truthful_answers_identify_every_target() {
    let (st, index) = state(3);
    for target in 0..8 {
        let (_, mut body) = create(&st, json!({})).await;
        let id = body["session_id"].as_str().unwrap().to_string();
        let mut answered = 0;
        while body["status"] == "awaiting_answer" {
            let a = truthful(&index, body["question"]["entity_label"].as_str().unwrap(), target);
            let (code, next) = call(
                &st,
                "POST",
                &format!("/sessions/{id}/answer"),
                Some(json!({"answer": a})),
            )
            .await;
            assert_eq!(code, StatusCode::OK);
            body = next;
            answered += 1;
        }
        assert_eq!(answered, 3);
        assert_eq!(body["finish_reason"], "identified");
        let top = body["top"].as_array().unwrap();
        assert_eq!(top[0]["product_id"], index.product_ids()[target].as_str());
        assert!(top[0]["score"].as_f64().unwrap() > top[1]["score"].as_f64().unwrap());

        let (code, body) = call(
            &st,
            "POST",
            &format!("/sessions/{id}/answer"),
            Some(json!({"answer": "yes"})),
        )
        .await;
        assert_eq!(code, StatusCode::CONFLICT, "{body}");
    }
}

#[tokio::test]
async fn bad_answer_token_is_422() {
    let (st, _) = state(3);
    let (_, body) = create(&st, json!({})).await;
    let id = body["session_id"].as_str().unwrap();
    let (code, body) = call(
        &st,
        "POST",
        &format!("/sessions/{id}/answer"),
        Some(json!({"answer": "maybe"})),
    )
    .await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["path"], "answer");
    let (code, body) = call(
        &st,
        "POST",
        &format!("/sessions/{id}/answer"),
        Some(json!({"answer": 3})),
    )
    .await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["path"], "answer");
}

#[tokio::test]
async fn unknown_session_is_404() {
    let (st, _) = state(3);
    for (m, uri, body) in [
        ("POST", "/sessions/abc/answer", Some(json!({"answer": "yes"}))),
        ("GET", "/sessions/abc/ranking", None),
        ("GET", "/sessions/abc/transcript", None),
        ("GET", "/sessions/abc", None),
    ] {
        let (code, _) = call(&st, m, uri, body).await;
        assert_eq!(code, StatusCode::NOT_FOUND, "{uri}");
    }
}

#[tokio::test]
async fn ranking_respects_k_and_defaults_to_ten() {
    let (st, _) = state(4);
    let (_, body) = create(&st, json!({})).await;
    let id = body["session_id"].as_str().unwrap();
    let (code, r) = call(&st, "GET", &format!("/sessions/{id}/ranking?k=5"), None).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(r["products"].as_array().unwrap().len(), 5);
    let (_, r) = call(&st, "GET", &format!("/sessions/{id}/ranking"), None).await;
    let products = r["products"].as_array().unwrap();
    assert_eq!(products.len(), 10);
    // uniform prior: every score equal
    for p in products {
        assert_eq!(p["score"], products[0]["score"]);
    }
    assert_eq!(products[0]["score"].as_f64().unwrap(), 1.0 / 16.0);
}

#[tokio::test]
async fn skip_leaves_ranking_unchanged() {
    let (st, _) = state(3);
    let (_, body) = create(&st, json!({})).await;
    let id = body["session_id"].as_str().unwrap();
    let (code, next) = call(
        &st,
        "POST",
        &format!("/sessions/{id}/answer"),
        Some(json!({"answer": "skip"})),
    )
    .await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(next["top"], body["top"]);
    assert_eq!(next["question"]["number"], 2);
    assert_ne!(next["question"]["entity_label"], body["question"]["entity_label"]);
}

#[tokio::test]
async fn stale_question_number_is_409() {
    let (st, _) = state(3);
    let (_, body) = create(&st, json!({})).await;
    let id = body["session_id"].as_str().unwrap();
    let uri = format!("/sessions/{id}/answer");
    let (code, _) = call(&st, "POST", &uri, Some(json!({"answer": "yes", "question": 1}))).await;
    assert_eq!(code, StatusCode::OK);
    let (code, _) = call(&st, "POST", &uri, Some(json!({"answer": "yes", "question": 1}))).await;
    assert_eq!(code, StatusCode::CONFLICT);
    let (_, t) = call(&st, "GET", &format!("/sessions/{id}/transcript"), None).await;
    assert_eq!(t["questions"].as_array().unwrap().len(), 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_duplicate_answers_are_serialized() {
    let (st, _) = state(4);
    for _ in 0..20 {
        let (_, body) = create(&st, json!({})).await;
        let id = body["session_id"].as_str().unwrap().to_string();
        let uri = format!("/sessions/{id}/answer");
        let tasks: Vec<_> = (0..4)
            .map(|_| {
                let st = st.clone();
                let uri = uri.clone();
                tokio::spawn(async move {
                    call(&st, "POST", &uri, Some(json!({"answer": "no", "question": 1})))
                        .await
                        .0
                })
            })
            .collect();
        let mut ok = 0;
        let mut conflict = 0;
        for t in tasks {
            match t.await.unwrap() {
                StatusCode::OK => ok += 1,
                StatusCode::CONFLICT => conflict += 1,
                other => panic!("unexpected {other}"),
            }
        }
        assert_eq!((ok, conflict), (1, 3));
    }
}

#[tokio::test]
async fn api_replay_matches_in_process_replay() {
    let (st, index) = state(4);
    let answers = [Answer::No, Answer::Skip, Answer::Yes, Answer::Yes];
    let (_, body) = create(&st, json!({"gamma": 0.3, "n_q_limit": 6})).await;
    let id = body["session_id"].as_str().unwrap();
    for a in answers {
        let (code, _) = call(
            &st,
            "POST",
            &format!("/sessions/{id}/answer"),
            Some(json!({"answer": a.as_str()})),
        )
        .await;
        assert_eq!(code, StatusCode::OK);
    }
    let (_, api) = call(&st, "GET", &format!("/sessions/{id}/ranking?k=16"), None).await;

    let model = qsbps::TopicModel::untrained(&index);
    let cfg = SessionConfig::new(
        qsbps::SelectionParams::new(0.3, 0.0).unwrap(),
        qsbps::ErrorModel::NoNoise,
        6,
    );
    let local = Session::replay(index.clone(), &model, cfg, &answers).unwrap();
    assert_eq!(api["products"], serde_json::to_value(local.ranking(16)).unwrap());

    let (_, t) = call(&st, "GET", &format!("/sessions/{id}/transcript"), None).await;
    assert_eq!(t, serde_json::to_value(local.transcript()).unwrap());
}

#[tokio::test]
async fn idle_sessions_expire() {
    let config = ServiceConfig {
        idle_ttl: Duration::from_millis(30),
        ..ServiceConfig::default()
    };
    let (st, _) = state_with(3, config);
    let (_, body) = create(&st, json!({})).await;
    let id = body["session_id"].as_str().unwrap();
    let (code, _) = call(&st, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(code, StatusCode::OK);
    tokio::time::sleep(Duration::from_millis(60)).await;
    let (code, _) = call(&st, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(code, StatusCode::NOT_FOUND);

    create(&st, json!({})).await;
    create(&st, json!({})).await;
    tokio::time::sleep(Duration::from_millis(60)).await;
    assert_eq!(st.reap_expired(), 2);
    assert_eq!(st.session_count(), 0);
}

#[tokio::test]
async fn cors_headers_present() {
    let (st, _) = state(3);
    let req = Request::builder()
        .uri("/topics")
        .header("origin", "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let resp = router(st).oneshot(req).await.unwrap();
    assert!(resp.headers().contains_key("access-control-allow-origin"));
}
