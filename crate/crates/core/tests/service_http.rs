mod common;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use common::{fixture, knapsack};
use omt_milp::api::{self, CheckSettings, Format};
use omt_milp::emit::write_model;
use omt_milp::lowering::LowerOptions;
use omt_milp::omt::{load_tree, NodeKind};
use omt_milp::oracle::EnumerationLimits;
use omt_milp::service::{router, ServiceConfig};

struct Reply {
    status: StatusCode,
    content_type: String,
    text: String,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("{e}: {}", self.text))
    }
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> Reply {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let content_type =
        response.headers().get("content-type").map(|v| v.to_str().unwrap().to_string()).unwrap_or_default();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    Reply { status, content_type, text: String::from_utf8(bytes.to_vec()).unwrap() }
}

async fn new_session(app: &Router) -> String {
    let reply = call(app, "POST", "/api/v1/sessions", None).await;
    assert_eq!(reply.status, StatusCode::CREATED);
    reply.json()["id"].as_str().unwrap().to_string()
}

async fn declare_binaries(app: &Router, id: &str, names: &[&str]) {
    for name in names {
        let reply =
            call(app, "POST", &format!("/api/v1/sessions/{id}/variables"), Some(json!({"name": name, "kind": "binary"})))
                .await;
        assert_eq!(reply.status, StatusCode::OK, "{}", reply.text);
    }
}

fn knapsack_doc() -> Value {
    serde_json::from_str(&fixture("knapsack.json")).unwrap()
}

#[tokio::test]
async fn fresh_sessions() {
    let app = router(ServiceConfig::default());
    let a = call(&app, "POST", "/api/v1/sessions", None).await.json();
    let b = call(&app, "POST", "/api/v1/sessions", None).await.json();
    assert_ne!(a["id"], b["id"]);
    assert_eq!(a["cursor"], load_tree().root());
    assert_eq!(a["model"]["constraints"], json!([]));
    let state = call(&app, "GET", &format!("/api/v1/sessions/{}", a["id"].as_str().unwrap()), None).await;
    assert_eq!(state.status, StatusCode::OK);
    assert_eq!(state.json()["history"], json!([]));
}

#[tokio::test]
async fn tree_and_mappings() {
    let app = router(ServiceConfig::default());
    let tree = call(&app, "GET", "/api/v1/omt/tree", None).await;
    assert_eq!(tree.status, StatusCode::OK);
    assert_eq!(tree.text, load_tree().to_json());
    let mappings = call(&app, "GET", "/api/v1/mappings", None).await.json();
    let ids: Vec<&str> = mappings["mappings"].as_array().unwrap().iter().map(|m| m["id"].as_str().unwrap()).collect();
    assert!(ids.contains(&"atsp-tour"));
}

/// Walks the shipped tree from the root to leaf 17 by following child links.
fn answers_to(target: u32) -> Vec<String> {
    let tree = load_tree();
    fn search(tree: &omt_milp::omt::OmtTree, at: u32, target: u32, path: &mut Vec<String>) -> bool {
        if at == target {
            return true;
        }
        for child in &tree.node(at).unwrap().children {
            path.push(child.answer.clone());
            if search(tree, child.child, target, path) {
                return true;
            }
            path.pop();
        }
        false
    }
    let mut path = Vec::new();
    assert!(search(tree, tree.root(), target, &mut path));
    path
}

#[tokio::test]
async fn answers_reach_partitioning_leaf() {
    let app = router(ServiceConfig::default());
    let id = new_session(&app).await;
    let uri = format!("/api/v1/sessions/{id}/answers");

    let bad = call(&app, "POST", &uri, Some(json!({"answer": "no such answer"}))).await;
    assert_eq!(bad.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(bad.json()["code"], "UnknownAnswer");
    let state = call(&app, "GET", &format!("/api/v1/sessions/{id}"), None).await.json();
    assert_eq!(state["cursor"], load_tree().root());

    let mut last = Value::Null;
    for answer in answers_to(17) {
        let reply = call(&app, "POST", &uri, Some(json!({ "answer": answer }))).await;
        assert_eq!(reply.status, StatusCode::OK, "{}", reply.text);
        last = reply.json();
    }
    assert_eq!(last["cursor"], 17);
    assert_eq!(last["node"]["kind"], json!(NodeKind::Leaf));
    assert_eq!(last["node"]["template"]["family"], "set_partitioning");

    let at_leaf = call(&app, "POST", &uri, Some(json!({"answer": "anything"}))).await;
    assert_eq!(at_leaf.json()["code"], "AtLeaf");
}

#[tokio::test]
async fn attach_and_implicit() {
    let app = router(ServiceConfig::default());
    let id = new_session(&app).await;
    declare_binaries(&app, &id, &["x1", "x2"]).await;
    let uri = format!("/api/v1/sessions/{id}/constraints");

    let missing = call(&app, "POST", &uri, Some(json!({"leaf": 11, "bindings": {}}))).await;
    assert_eq!(missing.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(missing.json()["code"], "MissingSlot");
    let state = call(&app, "GET", &format!("/api/v1/sessions/{id}"), None).await.json();
    assert_eq!(state["model"]["constraints"], json!([]));

    let reply = call(&app, "POST", &uri, Some(json!({"leaf": 11, "bindings": {"members": ["x1", "x2"]}}))).await;
    assert_eq!(reply.status, StatusCode::OK, "{}", reply.text);
    let state = reply.json();
    assert_eq!(state["model"]["constraints"].as_array().unwrap().len(), 1);
    assert_eq!(state["model"]["constraints"][0]["omt_node"], 11);
    assert_eq!(state["cursor"], load_tree().root());

    let atsp = call(
        &app,
        "POST",
        &format!("/api/v1/sessions/{id}/implicit"),
        Some(json!({"mapping": "atsp-tour", "params": {"n": 3}})),
    )
    .await;
    assert_eq!(atsp.status, StatusCode::OK, "{}", atsp.text);
    assert_eq!(atsp.json()["model"]["constraints"].as_array().unwrap().len(), 1 + 9);

    let unknown = call(
        &app,
        "POST",
        &format!("/api/v1/sessions/{id}/implicit"),
        Some(json!({"mapping": "nope", "params": {"n": 3}})),
    )
    .await;
    assert_eq!(unknown.json()["code"], "UnknownMapping");
}

#[tokio::test]
async fn session_errors() {
    let app = router(ServiceConfig { capacity: 1, ..ServiceConfig::default() });
    let missing = call(&app, "GET", "/api/v1/sessions/deadbeef", None).await;
    assert_eq!(missing.status, StatusCode::NOT_FOUND);
    assert_eq!(missing.json()["code"], "SessionNotFound");
    let id = new_session(&app).await;
    let full = call(&app, "POST", "/api/v1/sessions", None).await;
    assert_eq!(full.status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(full.json()["code"], "CapacityExceeded");
    let garbage = call(&app, "POST", &format!("/api/v1/sessions/{id}/answers"), Some(json!([1, 2]))).await;
    assert_eq!(garbage.status, StatusCode::BAD_REQUEST);
    let dup = call(&app, "POST", &format!("/api/v1/sessions/{id}/variables"), Some(json!({"name": "x", "kind": "binary"})))
        .await;
    assert_eq!(dup.status, StatusCode::OK);
    let dup = call(&app, "POST", &format!("/api/v1/sessions/{id}/variables"), Some(json!({"name": "x", "kind": "binary"})))
        .await;
    assert_eq!(dup.json()["code"], "DuplicateName");
    let nowhere = call(&app, "GET", "/api/v2/anything", None).await;
    assert_eq!(nowhere.status, StatusCode::NOT_FOUND);
    assert_eq!(nowhere.json()["code"], "NotFound");
}

#[tokio::test]
async fn models_match_the_library() {
    let app = router(ServiceConfig::default());
    let model = knapsack();

    let lp = call(&app, "POST", "/api/v1/models/compile", Some(json!({"model": knapsack_doc(), "format": "lp"}))).await;
    assert_eq!(lp.status, StatusCode::OK);
    assert!(lp.content_type.starts_with("text/plain"));
    assert_eq!(lp.text, fixture("knapsack.lp"));
    let mps = call(&app, "POST", "/api/v1/models/compile", Some(json!({"model": knapsack_doc(), "format": "mps"}))).await;
    assert_eq!(mps.text, api::compile(&model, Format::Mps, &LowerOptions::default()).unwrap());

    let solved = call(&app, "POST", "/api/v1/models/solve", Some(json!({"model": knapsack_doc()}))).await;
    assert_eq!(solved.status, StatusCode::OK);
    let solved = solved.json();
    assert_eq!(solved["value"], json!({"num": 4, "den": 1}));
    assert_eq!(solved, api::solve(&model, &EnumerationLimits::default()).unwrap());

    let checked = call(&app, "POST", "/api/v1/models/check", Some(json!({"model": knapsack_doc()}))).await.json();
    assert_eq!(checked, api::check(&model, &CheckSettings::default()).unwrap());
    assert_eq!(checked["holds"], true);

    let tight = call(&app, "POST", "/api/v1/models/check", Some(json!({"model": knapsack_doc(), "box": {"cap": 1}}))).await;
    assert_eq!(tight.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(tight.json()["code"], "BoxTooLarge");

    let too_many = call(
        &app,
        "POST",
        "/api/v1/models/solve",
        Some(json!({"model": knapsack_doc(), "limits": {"max_points": 1}})),
    )
    .await;
    assert_eq!(too_many.json()["code"], "TooLarge");

    let neither = call(&app, "POST", "/api/v1/models/solve", Some(json!({}))).await;
    assert_eq!(neither.status, StatusCode::BAD_REQUEST);
    let mut broken = knapsack_doc();
    broken["schema_version"] = json!("9");
    let mismatch = call(&app, "POST", "/api/v1/models/solve", Some(json!({"model": broken}))).await;
    assert_eq!(mismatch.json()["code"], "SchemaMismatch");
}

#[tokio::test]
async fn knapsack_session_solves_to_four() {
    let app = router(ServiceConfig::default());
    let id = new_session(&app).await;
    declare_binaries(&app, &id, &["x1", "x2"]).await;
    let attach = json!({
        "leaf": 20,
        "bindings": {"weighted_sum": {"terms": [{"var": "x1", "coef": 1}, {"var": "x2", "coef": 2}]}, "count": 2}
    });
    let reply = call(&app, "POST", &format!("/api/v1/sessions/{id}/constraints"), Some(attach)).await;
    assert_eq!(reply.status, StatusCode::OK, "{}", reply.text);
    let objective = json!({"direction": "max", "expr": {"terms": [{"var": "x1", "coef": 3}, {"var": "x2", "coef": 4}]}});
    let reply = call(&app, "POST", &format!("/api/v1/sessions/{id}/objective"), Some(objective)).await;
    assert_eq!(reply.status, StatusCode::OK, "{}", reply.text);

    let doc = call(&app, "GET", &format!("/api/v1/sessions/{id}/model"), None).await;
    assert!(doc.content_type.starts_with("application/json"));
    let solved = call(&app, "POST", "/api/v1/models/solve", Some(json!({"session": id}))).await.json();
    assert_eq!(solved["value"], json!({"num": 4, "den": 1}));
    assert_eq!(solved["witness"]["x2"], json!({"num": 1, "den": 1}));
    let compiled = call(&app, "POST", "/api/v1/models/compile", Some(json!({"session": id, "format": "lp"}))).await;
    assert_eq!(compiled.status, StatusCode::OK);
    assert!(compiled.text.contains("c0: x1 + 2 x2 <= 2"), "{}", compiled.text);
}

#[tokio::test]
async fn history_replays_to_the_same_model() {
    let app = router(ServiceConfig::default());
    let id = new_session(&app).await;
    declare_binaries(&app, &id, &["x", "y", "z"]).await;
    for answer in answers_to(24) {
        call(&app, "POST", &format!("/api/v1/sessions/{id}/answers"), Some(json!({ "answer": answer }))).await;
    }
    let attach = json!({"leaf": 24, "bindings": {"antecedents": ["x"], "consequents": ["y", "z"]}, "label": "x needs y and z"});
    let reply = call(&app, "POST", &format!("/api/v1/sessions/{id}/constraints"), Some(attach)).await;
    assert_eq!(reply.status, StatusCode::OK, "{}", reply.text);
    call(&app, "POST", &format!("/api/v1/sessions/{id}/implicit"), Some(json!({"mapping": "atsp-tour", "params": {"n": 3}})))
        .await;
    for answer in answers_to(11).into_iter().take(1) {
        call(&app, "POST", &format!("/api/v1/sessions/{id}/answers"), Some(json!({ "answer": answer }))).await;
    }

    let original = call(&app, "GET", &format!("/api/v1/sessions/{id}"), None).await.json();
    let replayed = call(&app, "POST", "/api/v1/sessions", Some(json!({"history": original["history"]}))).await;
    assert_eq!(replayed.status, StatusCode::CREATED, "{}", replayed.text);
    let replayed = replayed.json();
    assert_ne!(replayed["id"], original["id"]);
    for key in ["model", "cursor", "path", "history"] {
        assert_eq!(replayed[key], original[key], "{key}");
    }
    let a = call(&app, "GET", &format!("/api/v1/sessions/{id}/model"), None).await.text;
    let b = call(&app, "GET", &format!("/api/v1/sessions/{}/model", replayed["id"].as_str().unwrap()), None).await.text;
    assert_eq!(a, b);
}

#[tokio::test]
async fn posted_document_round_trips() {
    let app = router(ServiceConfig::default());
    let doc: Value = serde_json::from_str(&write_model(&knapsack())).unwrap();
    let reply = call(&app, "POST", "/api/v1/models/check", Some(json!({"model": doc, "if_then_strength": "weak"}))).await;
    assert_eq!(reply.status, StatusCode::OK, "{}", reply.text);
}
