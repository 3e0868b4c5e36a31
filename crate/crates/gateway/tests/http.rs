use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use bwim_core::speakers::{generate_lists, ExperimentList, Mode};
use bwim_core::world::render_wire;
use bwim_gateway::server::{router, AppState};

fn lists() -> Vec<ExperimentList> {
    let mut all = generate_lists(Mode::Qa, 2, 3).unwrap();
    all.extend(generate_lists(Mode::Confidence, 2, 3).unwrap());
    all
}

fn app() -> (Router, Vec<ExperimentList>) {
    let lists = lists();
    (router(Arc::new(AppState::new(lists.clone()))), lists)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value, String) {
    let request = Request::builder().method(method).uri(uri);
    let request = match body {
        Some(b) => request
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => request.body(Body::empty()),
    }
    .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = to_bytes(response.into_body(), usize::MAX).await.unwrap();
    let text = String::from_utf8(bytes.to_vec()).unwrap();
    let value = serde_json::from_str(&text).unwrap_or(Value::Null);
    (status, value, text)
}

async fn create(app: &Router, list_id: &str) -> String {
    let (status, body, _) = call(app, "POST", "/api/sessions", Some(json!({"list_id": list_id}))).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["session_id"].as_str().unwrap().to_string()
}

fn action(id: &str) -> String {
    format!("/api/sessions/{id}/actions")
}

#[tokio::test]
async fn lists_are_advertised() {
    let (app, lists) = app();
    let (status, body, _) = call(&app, "GET", "/api/lists", None).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = body.as_array().unwrap().iter().map(|l| l["id"].as_str().unwrap()).collect();
    assert_eq!(ids.len(), lists.len());
    assert!(body[0]["trials"].as_u64().unwrap() == 40);
}

#[tokio::test]
async fn question_then_correct_build() {
    let (app, lists) = app();
    let list = &lists[0];
    let id = create(&app, &list.id).await;

    let (status, view, _) = call(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["phase"], "awaiting_action");
    assert_eq!(view["questions_remaining"], 1);
    assert_eq!(view["trial"]["index"], 0);

    let (status, reply, _) = call(
        &app,
        "POST",
        &action(&id),
        Some(json!({"action": "question", "text": "What color should it be?"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{reply}");
    assert_eq!(reply["result"], "answer");
    assert!(reply["text"].as_str().unwrap().contains("(-5 points for asking)"), "{reply}");
    assert_eq!(reply["state"]["phase"], "awaiting_build_after_answer");
    assert_eq!(reply["state"]["questions_remaining"], 0);

    let (status, err, _) = call(
        &app,
        "POST",
        &action(&id),
        Some(json!({"action": "question", "text": "And how high?"})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "question_limit");

    let target = render_wire(&list.trial(0).unwrap().1.target);
    let (status, reply, _) = call(
        &app,
        "POST",
        &action(&id),
        Some(json!({"action": "build", "structure": target})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{reply}");
    assert_eq!(reply["result"], "feedback");
    assert_eq!(reply["feedback"]["correct"], true);
    assert_eq!(reply["feedback"]["round_score"], 5);
    assert_eq!(reply["state"]["total_score"], 5);
    assert_eq!(reply["state"]["trial"]["index"], 1);

    let (status, _, ndjson) = call(&app, "GET", &format!("/api/sessions/{id}/transcript"), None).await;
    assert_eq!(status, StatusCode::OK);
    let kinds: Vec<String> = ndjson
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["event"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(kinds[0], "session_start");
    assert!(kinds.contains(&"question_asked".to_string()));
    assert!(!kinds.contains(&"action_rejected".to_string()));
}

#[tokio::test]
async fn errors_have_stable_codes_and_leave_state_alone() {
    let (app, lists) = app();

    let (status, err, _) = call(&app, "GET", "/api/sessions/nope", None).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_session")));
    let (status, err, _) =
        call(&app, "POST", "/api/sessions", Some(json!({"list_id": "missing"}))).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_list")));
    let (status, err, _) = call(&app, "POST", "/api/sessions", Some(json!({"oops": 1}))).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::BAD_REQUEST, Some("bad_request")));

    let qa = create(&app, &lists[0].id).await;
    let (_, before, _) = call(&app, "GET", &format!("/api/sessions/{qa}"), None).await;
    for (body, status, code) in [
        (json!({"action": "build", "structure": "Red,0,150,0"}), StatusCode::UNPROCESSABLE_ENTITY, "invalid_structure"),
        (json!({"action": "build", "structure": "Red,0,50,0", "rating": 3}), StatusCode::UNPROCESSABLE_ENTITY, "unexpected_rating"),
        (json!({"action": "debrief", "text": "done"}), StatusCode::CONFLICT, "wrong_phase"),
    ] {
        let (s, err, _) = call(&app, "POST", &action(&qa), Some(body)).await;
        assert_eq!((s, err["code"].as_str()), (status, Some(code)), "{err}");
    }
    let (_, after, _) = call(&app, "GET", &format!("/api/sessions/{qa}"), None).await;
    assert_eq!(before, after);

    let conf = create(&app, &lists[2].id).await;
    let (s, err, _) = call(
        &app,
        "POST",
        &action(&conf),
        Some(json!({"action": "question", "text": "What color?"})),
    )
    .await;
    assert_eq!((s, err["code"].as_str()), (StatusCode::CONFLICT, Some("wrong_mode")));
    let (s, err, _) = call(
        &app,
        "POST",
        &action(&conf),
        Some(json!({"action": "build", "structure": "nan"})),
    )
    .await;
    assert_eq!((s, err["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("missing_rating")));
    let (s, reply, _) = call(
        &app,
        "POST",
        &action(&conf),
        Some(json!({"action": "build", "structure": "nan", "rating": 2})),
    )
    .await;
    assert_eq!(s, StatusCode::OK, "{reply}");
    assert_eq!(reply["feedback"]["round_score"], 0);
}

#[tokio::test]
async fn sessions_are_isolated_under_concurrency() {
    let (app, lists) = app();
    let list = lists[0].clone();
    let ids: Vec<String> = {
        let mut v = Vec::new();
        for _ in 0..8 {
            v.push(create(&app, &list.id).await);
        }
        v
    };
    let mut tasks = Vec::new();
    for (k, id) in ids.iter().cloned().enumerate() {
        let app = app.clone();
        let list = list.clone();
        tasks.push(tokio::spawn(async move {
            // Session k builds correctly on its first k trials, then stops.
            for t in 0..k {
                let target = render_wire(&list.trial(t).unwrap().1.target);
                let (s, _, _) = call(
                    &app,
                    "POST",
                    &action(&id),
                    Some(json!({"action": "build", "structure": target})),
                )
                .await;
                assert_eq!(s, StatusCode::OK);
                tokio::task::yield_now().await;
            }
        }));
    }
    for t in tasks {
        t.await.unwrap();
    }
    for (k, id) in ids.iter().enumerate() {
        let (_, view, _) = call(&app, "GET", &format!("/api/sessions/{id}"), None).await;
        assert_eq!(view["trial"]["index"], k);
        assert_eq!(view["total_score"], 10 * k as i64);
    }
}
