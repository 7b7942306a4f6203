//! HTTP front end under `/api/v1`: the tree, elicitation sessions, implicit
//! mappings, and compile/solve/check over posted or session models.

use std::collections::HashMap;
use std::hash::{BuildHasher, Hasher};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::api::{self, CheckSettings, Format};
use crate::emit;
use crate::implicit::{self, MappingParams};
use crate::lowering::{IfThenStrength, LowerOptions};
use crate::model::{Direction, LinearExpr, Model, ModelError, NodeId, VarId, VarKind};
use crate::omt::{load_tree, Bindings, NodeKind, OmtNode, SlotKind, SlotValue, TreeError};
use crate::oracle::{self, EnumerationLimits};
use crate::rational::Rational;

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_TTL: Duration = Duration::from_secs(24 * 60 * 60);
pub const DEFAULT_CAPACITY: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceConfig {
    /// Live sessions allowed at once.
    pub capacity: usize,
    /// Sessions untouched for this long are dropped.
    pub ttl: Duration,
    /// Largest `limits.max_points` a solve request may ask for.
    pub max_points: u128,
    /// Largest `box.cap` a check request may ask for.
    pub max_box_cap: u128,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            capacity: DEFAULT_CAPACITY,
            ttl: DEFAULT_TTL,
            max_points: oracle::DEFAULT_MAX_POINTS,
            max_box_cap: oracle::DEFAULT_BOX_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ServiceError {
    #[error("malformed request: {0}")]
    MalformedRequest(String),
    #[error("no session {0:?}")]
    SessionNotFound(String),
    #[error("session limit of {0} reached")]
    CapacityExceeded(usize),
    #[error("cursor is at leaf {0}; attach a constraint to continue")]
    AtLeaf(NodeId),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("{what} {requested} exceeds the server limit {limit}")]
    LimitTooHigh { what: &'static str, requested: u128, limit: u128 },
    #[error("request needs exactly one of \"model\" or \"session\"")]
    ModelSource,
    #[error("no route {0}")]
    NoRoute(String),
    #[error(transparent)]
    Domain(#[from] api::Error),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::MalformedRequest(_) => "MalformedRequest",
            ServiceError::SessionNotFound(_) => "SessionNotFound",
            ServiceError::CapacityExceeded(_) => "CapacityExceeded",
            ServiceError::AtLeaf(_) => "AtLeaf",
            ServiceError::UnknownVariable(_) => "UnknownVariable",
            ServiceError::LimitTooHigh { .. } => "LimitTooHigh",
            ServiceError::ModelSource => "MalformedRequest",
            ServiceError::NoRoute(_) => "NotFound",
            ServiceError::Domain(e) => e.code(),
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::MalformedRequest(_) | ServiceError::ModelSource => StatusCode::BAD_REQUEST,
            ServiceError::SessionNotFound(_) | ServiceError::NoRoute(_) => StatusCode::NOT_FOUND,
            ServiceError::CapacityExceeded(_) => StatusCode::SERVICE_UNAVAILABLE,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }

    pub fn envelope(&self) -> Value {
        let subject = match self {
            ServiceError::Domain(e) => e.subject(),
            _ => None,
        };
        json!({ "code": self.code(), "message": self.to_string(), "subject": subject })
    }
}

macro_rules! domain_from {
    ($($t:ty),*) => {$(
        impl From<$t> for ServiceError {
            fn from(e: $t) -> Self {
                ServiceError::Domain(e.into())
            }
        }
    )*};
}
domain_from!(ModelError, TreeError, implicit::ImplicitError, emit::EmitError, oracle::OracleError);

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), axum::Json(self.envelope())).into_response()
    }
}

/// A rational written either as `{"num": n, "den": d}` or as a bare integer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RationalInput {
    Integer(i64),
    Exact(Rational),
}

impl RationalInput {
    fn value(&self) -> Rational {
        match self {
            RationalInput::Integer(i) => Rational::integer(*i as i128),
            RationalInput::Exact(r) => *r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermInput {
    pub var: String,
    pub coef: RationalInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExprInput {
    #[serde(default)]
    pub terms: Vec<TermInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<RationalInput>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableInput {
    pub name: String,
    pub kind: VarKind,
    /// Absent or null means unbounded below; binaries default to 0.
    #[serde(default)]
    pub lower: Option<RationalInput>,
    /// Absent or null means unbounded above; binaries default to 1.
    #[serde(default)]
    pub upper: Option<RationalInput>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerInput {
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttachInput {
    pub leaf: NodeId,
    pub bindings: serde_json::Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImplicitInput {
    pub mapping: String,
    pub params: MappingParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveInput {
    pub direction: Direction,
    pub expr: ExprInput,
}

/// One successful session mutation, in the order applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Step {
    Declare(VariableInput),
    Answer { node: NodeId, answer: String },
    Attach(AttachInput),
    Implicit(ImplicitInput),
    Objective(ObjectiveInput),
}

fn lookup(model: &Model, name: &str) -> Result<VarId, ServiceError> {
    model.find(name).ok_or_else(|| ServiceError::UnknownVariable(name.to_string()))
}

fn decode_expr(model: &Model, input: &ExprInput) -> Result<LinearExpr, ServiceError> {
    let mut expr = LinearExpr::constant(input.constant.as_ref().map_or(Rational::ZERO, RationalInput::value));
    for t in &input.terms {
        expr.add_term(lookup(model, &t.var)?, t.coef.value());
    }
    Ok(expr)
}

fn decode_slot(model: &Model, slot: &str, kind: SlotKind, raw: &Value) -> Result<SlotValue, ServiceError> {
    let mismatch = || ServiceError::from(TreeError::KindMismatch { slot: slot.to_string(), expected: kind });
    let parse = |v: &Value| -> Result<_, ServiceError> {
        match kind {
            SlotKind::Variable => {
                let name: String = serde_json::from_value(v.clone()).map_err(|_| mismatch())?;
                Ok(SlotValue::Variable(lookup(model, &name)?))
            }
            SlotKind::VariableList => {
                let names: Vec<String> = serde_json::from_value(v.clone()).map_err(|_| mismatch())?;
                let ids = names.iter().map(|n| lookup(model, n)).collect::<Result<_, _>>()?;
                Ok(SlotValue::VariableList(ids))
            }
            SlotKind::Expression => {
                let e: ExprInput = serde_json::from_value(v.clone()).map_err(|_| mismatch())?;
                Ok(SlotValue::Expression(decode_expr(model, &e)?))
            }
            SlotKind::Rational => {
                let r: RationalInput = serde_json::from_value(v.clone()).map_err(|_| mismatch())?;
                Ok(SlotValue::Rational(r.value()))
            }
            SlotKind::PositiveInteger => {
                let n: u32 = serde_json::from_value(v.clone()).map_err(|_| mismatch())?;
                Ok(SlotValue::PositiveInteger(n))
            }
        }
    };
    parse(raw)
}

fn unix_seconds(t: SystemTime) -> u64 {
    t.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// An elicitation in progress: the model so far and a cursor into the tree.
#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub cursor: NodeId,
    pub path: Vec<String>,
    pub history: Vec<Step>,
    pub model: Model,
    pub created_at: SystemTime,
    pub updated_at: SystemTime,
}

impl Session {
    pub fn new(id: impl Into<String>) -> Session {
        let now = SystemTime::now();
        Session {
            id: id.into(),
            cursor: load_tree().root(),
            path: Vec::new(),
            history: Vec::new(),
            model: Model::new("session"),
            created_at: now,
            updated_at: now,
        }
    }

    /// Applies `steps` in order to a fresh session, stopping at the first failure.
    pub fn replay(id: impl Into<String>, steps: &[Step]) -> Result<Session, (usize, ServiceError)> {
        let mut s = Session::new(id);
        for (i, step) in steps.iter().enumerate() {
            s.apply(step.clone()).map_err(|e| (i, e))?;
        }
        Ok(s)
    }

    pub fn node(&self) -> &'static OmtNode {
        load_tree().node(self.cursor).expect("cursor is a live node")
    }

    /// Applies one mutation; on error the session is left as it was.
    pub fn apply(&mut self, step: Step) -> Result<Value, ServiceError> {
        let extra = match &step {
            Step::Declare(v) => {
                let (lower, upper) = match v.kind {
                    VarKind::Binary => (
                        Some(v.lower.as_ref().map_or(Rational::ZERO, RationalInput::value)),
                        Some(v.upper.as_ref().map_or(Rational::ONE, RationalInput::value)),
                    ),
                    _ => (v.lower.as_ref().map(RationalInput::value), v.upper.as_ref().map(RationalInput::value)),
                };
                let id = self.model.add_variable(v.name.clone(), v.kind, lower, upper)?;
                json!({ "variable": id.0 })
            }
            Step::Answer { answer, .. } => {
                let node = self.node();
                if node.kind == NodeKind::Leaf {
                    return Err(ServiceError::AtLeaf(node.id));
                }
                let next = load_tree().descend(self.cursor, answer)?;
                self.cursor = next;
                self.path.push(answer.clone());
                json!({})
            }
            Step::Attach(input) => {
                let tree = load_tree();
                let leaf = tree.node(input.leaf)?;
                let template = leaf.template.as_ref().ok_or(TreeError::NotLeaf(input.leaf))?;
                let mut bindings = Bindings::new();
                for (name, raw) in &input.bindings {
                    let slot = template
                        .slots
                        .iter()
                        .find(|s| &s.name == name)
                        .ok_or_else(|| TreeError::UnknownSlot(name.clone()))?;
                    bindings.insert(name.clone(), decode_slot(&self.model, name, slot.kind, raw)?);
                }
                let mut constraint = tree.instantiate(input.leaf, &bindings)?;
                if let Some(label) = &input.label {
                    constraint = constraint.labeled(label.clone());
                }
                let id = self.model.add_constraint(constraint)?;
                self.reset_cursor();
                json!({ "added": [id.0] })
            }
            Step::Implicit(input) => {
                let expansion = implicit::expand(&self.model, &input.mapping, &input.params)?;
                let first = self.model.constraints().len();
                let mut next = self.model.clone();
                expansion.apply(&mut next)?;
                let added: Vec<usize> = (first..next.constraints().len()).collect();
                self.model = next;
                self.reset_cursor();
                json!({ "added": added })
            }
            Step::Objective(input) => {
                let expr = decode_expr(&self.model, &input.expr)?;
                self.model.set_objective(input.direction, expr)?;
                json!({})
            }
        };
        self.history.push(step);
        self.updated_at = SystemTime::now();
        Ok(extra)
    }

    fn reset_cursor(&mut self) {
        self.cursor = load_tree().root();
        self.path.clear();
    }

    pub fn to_json(&self) -> Value {
        let node = self.node();
        json!({
            "id": self.id,
            "cursor": self.cursor,
            "node": node,
            "path": self.path,
            "history": self.history,
            "model": model_value(&self.model),
            "created_at": unix_seconds(self.created_at),
            "updated_at": unix_seconds(self.updated_at),
        })
    }
}

fn model_value(model: &Model) -> Value {
    serde_json::from_str(&emit::write_model(model)).expect("model document is JSON")
}

type SessionMap = HashMap<String, Arc<Mutex<Session>>>;

pub struct AppState {
    config: ServiceConfig,
    sessions: RwLock<SessionMap>,
    counter: AtomicU64,
    hasher: std::collections::hash_map::RandomState,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> AppState {
        AppState {
            config,
            sessions: RwLock::new(HashMap::new()),
            counter: AtomicU64::new(0),
            hasher: std::collections::hash_map::RandomState::new(),
        }
    }

    fn fresh_id(&self) -> String {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let word = |salt: u64| {
            let mut h = self.hasher.build_hasher();
            h.write_u64(n);
            h.write_u64(salt);
            h.write_u128(SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos()));
            h.finish()
        };
        format!("{:016x}{:016x}", word(0), word(1))
    }

    /// Registers a new session built by `make`, after dropping expired ones.
    pub fn create(&self, make: impl FnOnce(String) -> Result<Session, ServiceError>) -> Result<Value, ServiceError> {
        let session = make(self.fresh_id())?;
        let now = SystemTime::now();
        let mut map = self.sessions.write().expect("session map lock");
        map.retain(|_, s| {
            let s = s.lock().expect("session lock");
            now.duration_since(s.updated_at).map_or(true, |age| age < self.config.ttl)
        });
        if map.len() >= self.config.capacity {
            return Err(ServiceError::CapacityExceeded(self.config.capacity));
        }
        let body = session.to_json();
        map.insert(session.id.clone(), Arc::new(Mutex::new(session)));
        Ok(body)
    }

    pub fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        let map = self.sessions.read().expect("session map lock");
        let s = map.get(id).ok_or_else(|| ServiceError::SessionNotFound(id.to_string()))?;
        let expired = {
            let guard = s.lock().expect("session lock");
            SystemTime::now().duration_since(guard.updated_at).is_ok_and(|age| age >= self.config.ttl)
        };
        if expired {
            return Err(ServiceError::SessionNotFound(id.to_string()));
        }
        Ok(s.clone())
    }

    /// Runs one mutation with the session locked and returns the new state.
    pub fn mutate(&self, id: &str, step: Step) -> Result<Value, ServiceError> {
        let session = self.session(id)?;
        let mut guard = session.lock().expect("session lock");
        let extra = guard.apply(step)?;
        let mut body = guard.to_json();
        if let (Some(obj), Value::Object(extra)) = (body.as_object_mut(), extra) {
            obj.extend(extra);
        }
        Ok(body)
    }

    fn snapshot(&self, id: &str) -> Result<Model, ServiceError> {
        Ok(self.session(id)?.lock().expect("session lock").model.clone())
    }
}

fn parse_body<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ServiceError> {
    let bytes = if bytes.iter().all(u8::is_ascii_whitespace) { b"{}".as_slice() } else { bytes };
    serde_json::from_slice(bytes).map_err(|e| ServiceError::MalformedRequest(e.to_string()))
}

type Shared = Arc<AppState>;

fn ok(status: StatusCode, body: Value) -> Response {
    (status, axum::Json(body)).into_response()
}

async fn get_tree() -> Response {
    ([(header::CONTENT_TYPE, "application/json")], load_tree().to_json()).into_response()
}

async fn get_mappings() -> Response {
    let list: Vec<Value> = implicit::list_mappings()
        .into_iter()
        .map(|m| {
            json!({
                "id": m.id,
                "description": m.description,
                "parameters": m.parameters,
                "target_nodes": m.target_nodes,
            })
        })
        .collect();
    ok(StatusCode::OK, json!({ "mappings": list }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateInput {
    #[serde(default)]
    history: Vec<Step>,
}

async fn create_session(State(app): State<Shared>, body: Bytes) -> Result<Response, ServiceError> {
    let input: CreateInput = parse_body(&body)?;
    let state = app.create(|id| Session::replay(id, &input.history).map_err(|(_, e)| e))?;
    Ok(ok(StatusCode::CREATED, state))
}

async fn get_session(State(app): State<Shared>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let state = app.session(&id)?.lock().expect("session lock").to_json();
    Ok(ok(StatusCode::OK, state))
}

async fn get_session_model(State(app): State<Shared>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let text = emit::write_model(&app.snapshot(&id)?);
    Ok(([(header::CONTENT_TYPE, "application/json")], text).into_response())
}

async fn post_variable(State(app): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<Response, ServiceError> {
    let step = Step::Declare(parse_body(&body)?);
    Ok(ok(StatusCode::OK, app.mutate(&id, step)?))
}

async fn post_answer(State(app): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<Response, ServiceError> {
    let input: AnswerInput = parse_body(&body)?;
    let node = app.session(&id)?.lock().expect("session lock").cursor;
    Ok(ok(StatusCode::OK, app.mutate(&id, Step::Answer { node, answer: input.answer })?))
}

async fn post_constraint(State(app): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<Response, ServiceError> {
    let step = Step::Attach(parse_body(&body)?);
    Ok(ok(StatusCode::OK, app.mutate(&id, step)?))
}

async fn post_implicit(State(app): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<Response, ServiceError> {
    let step = Step::Implicit(parse_body(&body)?);
    Ok(ok(StatusCode::OK, app.mutate(&id, step)?))
}

async fn post_objective(State(app): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<Response, ServiceError> {
    let step = Step::Objective(parse_body(&body)?);
    Ok(ok(StatusCode::OK, app.mutate(&id, step)?))
}

/// Resolves the `model` (a ModelDocument) or `session` field of a request.
fn resolve_model(app: &AppState, model: Option<Value>, session: Option<String>) -> Result<Model, ServiceError> {
    match (model, session) {
        (Some(doc), None) => Ok(api::parse_model(&doc.to_string())?),
        (None, Some(id)) => app.snapshot(&id),
        _ => Err(ServiceError::ModelSource),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CompileInput {
    model: Option<Value>,
    session: Option<String>,
    format: Format,
    #[serde(default)]
    if_then_strength: IfThenStrength,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct LimitsInput {
    max_points: Option<u128>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveInput {
    model: Option<Value>,
    session: Option<String>,
    #[serde(default)]
    limits: LimitsInput,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct BoxInput {
    cap: Option<u128>,
    continuous_steps: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckInput {
    model: Option<Value>,
    session: Option<String>,
    #[serde(default, rename = "box")]
    sample_box: BoxInput,
    #[serde(default)]
    if_then_strength: IfThenStrength,
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f).await.expect("worker task panicked")
}

async fn compile(State(app): State<Shared>, body: Bytes) -> Result<Response, ServiceError> {
    let input: CompileInput = parse_body(&body)?;
    let model = resolve_model(&app, input.model, input.session)?;
    let options = LowerOptions::with_strength(input.if_then_strength);
    let text = api::compile(&model, input.format, &options)?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}

async fn solve(State(app): State<Shared>, body: Bytes) -> Result<Response, ServiceError> {
    let input: SolveInput = parse_body(&body)?;
    let model = resolve_model(&app, input.model, input.session)?;
    let requested = input.limits.max_points.unwrap_or(oracle::DEFAULT_MAX_POINTS);
    let limit = app.config.max_points;
    if requested > limit {
        return Err(ServiceError::LimitTooHigh { what: "max_points", requested, limit });
    }
    let report = blocking(move || Ok(api::solve(&model, &EnumerationLimits { max_points: requested })?)).await?;
    Ok(ok(StatusCode::OK, report))
}

async fn check(State(app): State<Shared>, body: Bytes) -> Result<Response, ServiceError> {
    let input: CheckInput = parse_body(&body)?;
    let model = resolve_model(&app, input.model, input.session)?;
    let defaults = CheckSettings::default();
    let cap = input.sample_box.cap.unwrap_or(defaults.cap);
    let limit = app.config.max_box_cap;
    if cap > limit {
        return Err(ServiceError::LimitTooHigh { what: "box.cap", requested: cap, limit });
    }
    let settings = CheckSettings {
        cap,
        continuous_steps: input.sample_box.continuous_steps.unwrap_or(defaults.continuous_steps),
        options: LowerOptions::with_strength(input.if_then_strength),
    };
    let report = blocking(move || Ok(api::check(&model, &settings)?)).await?;
    Ok(ok(StatusCode::OK, report))
}

async fn no_route(uri: axum::http::Uri) -> ServiceError {
    ServiceError::NoRoute(uri.path().to_string())
}

pub fn router(config: ServiceConfig) -> Router {
    let api = Router::new()
        .route("/omt/tree", get(get_tree))
        .route("/mappings", get(get_mappings))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/variables", post(post_variable))
        .route("/sessions/{id}/answers", post(post_answer))
        .route("/sessions/{id}/constraints", post(post_constraint))
        .route("/sessions/{id}/implicit", post(post_implicit))
        .route("/sessions/{id}/objective", post(post_objective))
        .route("/sessions/{id}/model", get(get_session_model))
        .route("/models/compile", post(compile))
        .route("/models/solve", post(solve))
        .route("/models/check", post(check));
    Router::new().nest("/api/v1", api).fallback(no_route).with_state(Arc::new(AppState::new(config)))
}

pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(config)).await
}

#[cfg(test)]
mod tests {
    use super::*;

    fn declare(s: &mut Session, name: &str) {
        let v = VariableInput { name: name.into(), kind: VarKind::Binary, lower: None, upper: None };
        s.apply(Step::Declare(v)).unwrap();
    }

    #[test]
    fn answer_walk_and_leaf() {
        let mut s = Session::new("t");
        for answer in load_tree().path_to(17).unwrap() {
            s.apply(Step::Answer { node: s.cursor, answer }).unwrap();
        }
        assert_eq!(s.cursor, 17);
        let err = s.apply(Step::Answer { node: 17, answer: "anything".into() }).unwrap_err();
        assert_eq!(err.code(), "AtLeaf");
        assert_eq!(s.history.len(), load_tree().path_to(17).unwrap().len());
    }

    #[test]
    fn attach_decodes_bindings_by_kind() {
        let mut s = Session::new("t");
        declare(&mut s, "x1");
        declare(&mut s, "x2");
        let bindings = json!({ "members": ["x1", "x2"] }).as_object().unwrap().clone();
        s.apply(Step::Attach(AttachInput { leaf: 11, bindings, label: Some("one task".into()) })).unwrap();
        assert_eq!(s.model.constraints()[0].omt_node, Some(11));
        assert_eq!(s.model.constraints()[0].label, "one task");

        let bad = json!({ "members": "x1" }).as_object().unwrap().clone();
        let err = s.apply(Step::Attach(AttachInput { leaf: 11, bindings: bad, label: None })).unwrap_err();
        assert_eq!(err.code(), "KindMismatch");
        let ghost = json!({ "members": ["x1", "ghost"] }).as_object().unwrap().clone();
        let err = s.apply(Step::Attach(AttachInput { leaf: 11, bindings: ghost, label: None })).unwrap_err();
        assert_eq!(err, ServiceError::UnknownVariable("ghost".into()));
        assert_eq!(s.model.constraints().len(), 1);
    }

    #[test]
    fn error_status_mapping() {
        assert_eq!(ServiceError::SessionNotFound("x".into()).status(), StatusCode::NOT_FOUND);
        assert_eq!(ServiceError::CapacityExceeded(1).status(), StatusCode::SERVICE_UNAVAILABLE);
        assert_eq!(ServiceError::MalformedRequest("x".into()).status(), StatusCode::BAD_REQUEST);
        let e = ServiceError::from(TreeError::MissingSlot("members".into()));
        assert_eq!((e.status(), e.code()), (StatusCode::UNPROCESSABLE_ENTITY, "MissingSlot"));
    }

    #[test]
    fn capacity_and_expiry() {
        let app = AppState::new(ServiceConfig { capacity: 1, ttl: Duration::from_secs(3600), ..Default::default() });
        let first = app.create(|id| Ok(Session::new(id))).unwrap();
        let err = app.create(|id| Ok(Session::new(id))).unwrap_err();
        assert_eq!(err.code(), "CapacityExceeded");
        let id = first["id"].as_str().unwrap().to_string();
        app.session(&id).unwrap().lock().unwrap().updated_at = SystemTime::now() - Duration::from_secs(7200);
        assert_eq!(app.session(&id).unwrap_err().code(), "SessionNotFound");
        app.create(|id| Ok(Session::new(id))).unwrap();
    }
}
