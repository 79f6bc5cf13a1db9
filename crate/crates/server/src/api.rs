//! JSON-over-HTTP facade.
//!
//! Mutations are `POST`s; each one becomes a single engine [`Command`] whose
//! fields come from the JSON body plus the route's path parameters. The
//! command's event batch is on disk before the response is sent. Reads take
//! the same lock, so every request sees a consistent state.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path, Query, RawPathParams, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, MethodRouter};
use axum::{Json, Router};
use chrono::{NaiveDate, Utc};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use itil_forge::assets::AssetTag;
use itil_forge::audit::{read_batches, EventLog};
use itil_forge::common::{ChangeId, ProcurementId, ProjectId, VendorId};
use itil_forge::notifications::{deliver, FileSink, MemorySink, NotificationKind, NotificationSink};
use itil_forge::period::Period;
use itil_forge::procurement::{parse_quotation_csv, write_quotation_csv};
use itil_forge::service_desk::TicketId;
use itil_forge::{ActorId, Command, Ctx, Engine, EngineConfig, Error, ErrorClass, Timestamp};

use crate::config::{ServiceConfig, SinkKind};

pub type Clock = Arc<dyn Fn() -> Timestamp + Send + Sync>;

struct Inner {
    engine: Engine,
    log: EventLog,
    /// Set when the in-memory state could not be re-synchronised with the log.
    poisoned: bool,
}

/// Shared server state: the engine, its log and the delivery sink.
pub struct AppState {
    inner: Mutex<Inner>,
    engine_config: EngineConfig,
    tokens: BTreeMap<String, ActorId>,
    sink: Arc<dyn NotificationSink>,
    clock: Clock,
}

impl AppState {
    /// Opens the data directory and replays its log.
    pub fn open(config: &ServiceConfig, sink: Arc<dyn NotificationSink>) -> Result<Self, Error> {
        std::fs::create_dir_all(&config.data_dir).map_err(|e| Error::Storage {
            message: format!("cannot create {}: {e}", config.data_dir.display()),
        })?;
        let engine_config = config.engine_config();
        let (log, batches) = EventLog::open(config.log_path())?;
        let engine = Engine::replay(engine_config.clone(), &batches)?;
        Ok(Self {
            inner: Mutex::new(Inner { engine, log, poisoned: false }),
            engine_config,
            tokens: config
                .tokens
                .iter()
                .map(|(t, a)| (t.clone(), ActorId::new(a.clone())))
                .collect(),
            sink,
            clock: Arc::new(Utc::now),
        })
    }

    /// The sink named by the configuration.
    pub fn configured_sink(config: &ServiceConfig) -> Arc<dyn NotificationSink> {
        match config.notifications.sink {
            SinkKind::Memory => Arc::new(MemorySink::default()),
            SinkKind::File => Arc::new(FileSink::new(config.sink_path())),
        }
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn read<R>(&self, f: impl FnOnce(&Engine) -> R) -> R {
        f(&self.lock().engine)
    }

    pub fn state_json(&self) -> String {
        self.read(Engine::state_json)
    }

    pub fn log_path(&self) -> PathBuf {
        self.lock().log.path().to_path_buf()
    }

    pub fn event_count(&self) -> u64 {
        self.lock().log.next_seq() - 1
    }

    /// Makes the next log append fail (for exercising the 503 path).
    pub fn inject_log_failure(&self) {
        self.lock().log.inject_failure();
    }

    pub fn actor_for(&self, headers: &HeaderMap) -> Result<ActorId, ApiError> {
        let token = headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim)
            .ok_or_else(ApiError::unauthorized)?;
        self.tokens.get(token).cloned().ok_or_else(ApiError::unauthorized)
    }

    /// Executes, persists and then delivers. Returns the command's response.
    pub fn submit(&self, command: Command, actor: ActorId, at: Option<Timestamp>) -> Result<Value, Error> {
        let mut inner = self.lock();
        if inner.poisoned {
            return Err(Error::Storage {
                message: "state is out of sync with the log; restart the server".into(),
            });
        }
        let ctx = Ctx { actor, at: at.unwrap_or_else(|| (self.clock)()) };
        let executed = inner.engine.execute(&command, &ctx)?;
        self.persist(&mut inner, &ctx, executed.events)?;
        for n in &executed.notifications {
            let accepted = deliver(self.sink.as_ref(), n);
            if !accepted {
                tracing::warn!(notification = %n.id, "delivery failed");
            }
            let mark = Command::MarkDelivered { notification_id: n.id.clone(), accepted };
            let follow = inner.engine.execute(&mark, &ctx).and_then(|m| self.persist(&mut inner, &ctx, m.events));
            if let Err(e) = follow {
                tracing::warn!(notification = %n.id, error = %e, "could not record delivery");
            }
        }
        Ok(executed.response)
    }

    fn persist(&self, inner: &mut Inner, ctx: &Ctx, events: Vec<itil_forge::audit::EventDraft>) -> Result<(), Error> {
        if let Err(e) = inner.log.append(&ctx.actor, ctx.at, events) {
            // the engine already applied the command; rebuild it from the log
            match read_batches(inner.log.path()).and_then(|b| Engine::replay(self.engine_config.clone(), &b)) {
                Ok(engine) => inner.engine = engine,
                Err(_) => inner.poisoned = true,
            }
            return Err(e);
        }
        Ok(())
    }
}

/// Error response `{code, message, details}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub details: Value,
}

impl ApiError {
    pub fn unauthorized() -> Self {
        Self {
            status: StatusCode::UNAUTHORIZED,
            code: "unauthorized".into(),
            message: "missing or unknown bearer token".into(),
            details: Value::Null,
        }
    }

    pub fn bad_request(field: &str, message: impl ToString) -> Self {
        Error::Validation {
            field: field.to_string(),
            message: message.to_string(),
        }
        .into()
    }
}

pub fn status_for(class: ErrorClass) -> StatusCode {
    match class {
        ErrorClass::Validation => StatusCode::BAD_REQUEST,
        ErrorClass::NotFound => StatusCode::NOT_FOUND,
        ErrorClass::Conflict => StatusCode::CONFLICT,
        ErrorClass::Rule => StatusCode::UNPROCESSABLE_ENTITY,
        ErrorClass::Storage => StatusCode::SERVICE_UNAVAILABLE,
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        Self {
            status: status_for(e.class()),
            code: e.code(),
            message: e.to_string(),
            details: e.details(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "code": self.code, "message": self.message, "details": self.details });
        (self.status, Json(body)).into_response()
    }
}

type App = Arc<AppState>;
type ApiResult = Result<Response, ApiError>;

fn ok(value: impl serde::Serialize) -> ApiResult {
    Ok(Json(serde_json::to_value(value).map_err(|e| ApiError::bad_request("response", e))?).into_response())
}

fn text(content_type: &'static str, body: String) -> ApiResult {
    Ok(([(header::CONTENT_TYPE, content_type)], body).into_response())
}

fn parse_object(body: &Bytes) -> Result<Map<String, Value>, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(Map::new());
    }
    match serde_json::from_slice::<Value>(body) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(ApiError::bad_request("body", "expected a JSON object")),
        Err(e) => Err(ApiError::bad_request("body", format!("invalid JSON: {e}"))),
    }
}

fn take_at(body: &mut Map<String, Value>) -> Result<Option<Timestamp>, ApiError> {
    match body.remove("at") {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v)
            .map(Some)
            .map_err(|e| ApiError::bad_request("at", format!("expected an RFC 3339 timestamp: {e}"))),
    }
}

/// Builds a command from body and path parameters. `wrap` nests the body
/// under that field; path parameters always land at the top level.
fn build_command(
    kind: &str,
    wrap: Option<&str>,
    params: &RawPathParams,
    mut body: Map<String, Value>,
) -> Result<(Command, Option<Timestamp>), ApiError> {
    let at = take_at(&mut body)?;
    if kind == "attach_quotation" {
        if let Some(csv) = body.remove("csv") {
            let csv = csv
                .as_str()
                .ok_or_else(|| ApiError::bad_request("csv", "expected CSV text"))?
                .to_string();
            let currency = body
                .remove("currency")
                .and_then(|c| c.as_str().map(str::to_string))
                .unwrap_or_else(|| "INR".into());
            let lines = parse_quotation_csv(&csv, &currency)?;
            body.insert("lines".into(), serde_json::to_value(lines).expect("lines serialize"));
        }
    }
    let mut obj = match wrap {
        Some(field) => {
            let mut m = Map::new();
            m.insert(field.to_string(), Value::Object(body));
            m
        }
        None => body,
    };
    for (name, value) in params.iter() {
        obj.insert(name.to_string(), Value::String(value.to_string()));
    }
    obj.insert("type".into(), Value::String(kind.to_string()));
    let command = serde_json::from_value(Value::Object(obj)).map_err(|e| ApiError::bad_request("body", e))?;
    Ok((command, at))
}

fn mutate(kind: &'static str, wrap: Option<&'static str>, created: bool) -> MethodRouter<App> {
    post(
        move |State(app): State<App>, headers: HeaderMap, params: RawPathParams, body: Bytes| async move {
            let actor = app.actor_for(&headers)?;
            let (command, at) = build_command(kind, wrap, &params, parse_object(&body)?)?;
            let response = app.submit(command, actor, at)?;
            let status = if created { StatusCode::CREATED } else { StatusCode::OK };
            Ok::<_, ApiError>((status, Json(response)).into_response())
        },
    )
}

#[derive(Debug, Default, Deserialize)]
struct ListQuery {
    format: Option<String>,
    view: Option<String>,
    period: Option<String>,
    year: Option<i32>,
    on: Option<NaiveDate>,
    now: Option<Timestamp>,
    issue: Option<String>,
    kind: Option<NotificationKind>,
    entity: Option<String>,
}

impl ListQuery {
    fn wants(&self, format: &str) -> bool {
        self.format.as_deref() == Some(format)
    }

    fn period(&self) -> Result<Period, ApiError> {
        self.period
            .as_deref()
            .ok_or_else(|| ApiError::bad_request("period", "required, e.g. 2016Q3"))?
            .parse()
            .map_err(ApiError::from)
    }

    fn year(&self) -> Result<i32, ApiError> {
        self.year.ok_or_else(|| ApiError::bad_request("year", "required"))
    }
}

async fn status(State(app): State<App>) -> ApiResult {
    let events = app.event_count();
    let counts = app.read(|e| {
        json!({
            "projects": e.lifecycle().projects().count(),
            "vendors": e.procurement().vendors().count(),
            "procurements": e.procurement().requests().count(),
            "assets": e.assets().assets().count(),
            "changes": e.changes().changes().count(),
            "tickets": e.desk().tickets().count(),
            "notifications": e.notifier().notifications().count(),
        })
    });
    ok(json!({ "service": "itil-forge", "events": events, "empty": events == 0, "counts": counts }))
}

async fn full_state(State(app): State<App>, headers: HeaderMap) -> ApiResult {
    app.actor_for(&headers)?;
    text("application/json", app.state_json())
}

async fn list_projects(State(app): State<App>, headers: HeaderMap) -> ApiResult {
    app.actor_for(&headers)?;
    ok(app.read(|e| e.lifecycle().projects().cloned().collect::<Vec<_>>()))
}

async fn show_project(State(app): State<App>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult {
    app.actor_for(&headers)?;
    let view = app.read(|e| {
        e.lifecycle().get(&ProjectId::new(id)).map(|p| {
            let gates: Map<String, Value> = p
                .gates
                .iter()
                .map(|(phase, g)| {
                    (phase.as_str().to_string(), json!({ "closed": g.closed, "missing": g.missing() }))
                })
                .collect();
            json!({ "project": p, "current_phase": p.current_phase, "gate_status": gates })
        })
    })?;
    ok(view)
}

async fn change_digest(
    State(app): State<App>,
    headers: HeaderMap,
    Path(id): Path<String>,
    Query(q): Query<ListQuery>,
) -> ApiResult {
    app.actor_for(&headers)?;
    let period = q.period()?;
    let digest = app.read(|e| e.change_digest(&ProjectId::new(id), period))?;
    if q.wants("text") {
        return text("text/plain; charset=utf-8", digest.render_text());
    }
    ok(digest)
}

async fn list_vendors(State(app): State<App>, headers: HeaderMap) -> ApiResult {
    app.actor_for(&headers)?;
    ok(app.read(|e| e.procurement().vendors().cloned().collect::<Vec<_>>()))
}

async fn show_vendor(State(app): State<App>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult {
    app.actor_for(&headers)?;
    ok(app.read(|e| e.procurement().vendor(&VendorId::new(id)).cloned())?)
}

async fn vendor_report(
    State(app): State<App>,
    headers: HeaderMap,
    Path(id): Path<String>,
    Query(q): Query<ListQuery>,
) -> ApiResult {
    app.actor_for(&headers)?;
    let period = q.period()?;
    let report = app.read(|e| e.vendor_report(&VendorId::new(id), period))?;
    if q.wants("text") {
        return text("text/plain; charset=utf-8", report.render_text());
    }
    ok(report)
}

async fn vendor_annual(
    State(app): State<App>,
    headers: HeaderMap,
    Path(id): Path<String>,
    Query(q): Query<ListQuery>,
) -> ApiResult {
    app.actor_for(&headers)?;
    let year = q.year()?;
    ok(app.read(|e| e.annual_report(&VendorId::new(id), year))?)
}

async fn vendor_surveys(State(app): State<App>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult {
    app.actor_for(&headers)?;
    let vendor = VendorId::new(id);
    ok(app.read(|e| {
        e.surveys()
            .iter()
            .filter(|s| s.vendor_id == vendor)
            .cloned()
            .collect::<Vec<_>>()
    }))
}

async fn vendor_renewal(
    State(app): State<App>,
    headers: HeaderMap,
    Path(id): Path<String>,
    Query(q): Query<ListQuery>,
) -> ApiResult {
    app.actor_for(&headers)?;
    let year = q.year()?;
    let vendor = VendorId::new(id);
    let decision = app.read(|e| e.renewal(&vendor, year).cloned());
    ok(decision.ok_or_else(|| Error::NotFound {
        entity: "renewal decision".into(),
        id: format!("{vendor}/{year}"),
    })?)
}

fn procurement_view(e: &Engine, id: &ProcurementId) -> Result<Value, Error> {
    let r = e.procurement().request(id)?;
    let lowest = r.lowest_quotation()?.map(|q| q.vendor_id.clone());
    Ok(json!({ "request": r, "overall_status": r.overall_status(), "lowest_quote_vendor": lowest }))
}

async fn list_procurements(State(app): State<App>, headers: HeaderMap) -> ApiResult {
    app.actor_for(&headers)?;
    ok(app.read(|e| e.procurement().requests().cloned().collect::<Vec<_>>()))
}

async fn show_procurement(State(app): State<App>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult {
    app.actor_for(&headers)?;
    ok(app.read(|e| procurement_view(e, &ProcurementId::new(id)))?)
}

async fn quotation_csv(
    State(app): State<App>,
    headers: HeaderMap,
    Path((id, vendor)): Path<(String, String)>,
) -> ApiResult {
    app.actor_for(&headers)?;
    let csv = app.read(|e| {
        let r = e.procurement().request(&ProcurementId::new(id.clone()))?;
        r.quotation(&VendorId::new(vendor.clone()))
            .map(|q| write_quotation_csv(&q.lines))
            .ok_or_else(|| Error::NotFound {
                entity: "quotation".into(),
                id: format!("{id}/{vendor}"),
            })
    })?;
    text("text/csv; charset=utf-8", csv)
}

async fn list_assets(State(app): State<App>, headers: HeaderMap, Query(q): Query<ListQuery>) -> ApiResult {
    app.actor_for(&headers)?;
    if q.wants("csv") {
        return text("text/csv; charset=utf-8", app.read(|e| e.assets().export_assets_csv()));
    }
    ok(app.read(|e| e.assets().assets().cloned().collect::<Vec<_>>()))
}

async fn show_asset(State(app): State<App>, headers: HeaderMap, Path(tag): Path<String>) -> ApiResult {
    app.actor_for(&headers)?;
    ok(app.read(|e| e.assets().asset(&AssetTag::new(tag)).cloned())?)
}

async fn asset_warranty(
    State(app): State<App>,
    headers: HeaderMap,
    Path(tag): Path<String>,
    Query(q): Query<ListQuery>,
) -> ApiResult {
    app.actor_for(&headers)?;
    let on = q.on.ok_or_else(|| ApiError::bad_request("on", "required, YYYY-MM-DD"))?;
    let tag = AssetTag::new(tag);
    let (status, expiry) = app.read(|e| {
        let asset = e.assets().asset(&tag)?;
        Ok::<_, Error>((asset.warranty_status(on)?, asset.warranty_expiry()))
    })?;
    ok(json!({ "asset_tag": tag, "on": on, "status": status, "expires": expiry }))
}

async fn asset_server_docs(State(app): State<App>, headers: HeaderMap, Path(tag): Path<String>) -> ApiResult {
    app.actor_for(&headers)?;
    let tag = AssetTag::new(tag);
    ok(app.read(|e| e.assets().asset(&tag).map(|_| e.assets().server_docs(&tag).to_vec()))?)
}

async fn list_licenses(State(app): State<App>, headers: HeaderMap, Query(q): Query<ListQuery>) -> ApiResult {
    app.actor_for(&headers)?;
    if q.wants("csv") {
        return text("text/csv; charset=utf-8", app.read(|e| e.assets().export_licenses_csv()));
    }
    ok(app.read(|e| {
        e.assets()
            .license_pools()
            .map(|p| json!({ "pool": p, "available": p.available() }))
            .collect::<Vec<_>>()
    }))
}

async fn show_license(State(app): State<App>, headers: HeaderMap, Path(product): Path<String>) -> ApiResult {
    app.actor_for(&headers)?;
    ok(app.read(|e| {
        e.assets()
            .license_pool(&product)
            .map(|p| json!({ "pool": p, "available": p.available() }))
    })?)
}

async fn list_ports(State(app): State<App>, headers: HeaderMap) -> ApiResult {
    app.actor_for(&headers)?;
    ok(app.read(|e| e.assets().ports().cloned().collect::<Vec<_>>()))
}

async fn show_port(
    State(app): State<App>,
    headers: HeaderMap,
    Path((site, port)): Path<(String, String)>,
) -> ApiResult {
    app.actor_for(&headers)?;
    ok(app.read(|e| e.assets().port(&site, &port).cloned())?)
}

async fn list_power(State(app): State<App>, headers: HeaderMap) -> ApiResult {
    app.actor_for(&headers)?;
    ok(app.read(|e| e.assets().power_plans().cloned().collect::<Vec<_>>()))
}

async fn show_power(State(app): State<App>, headers: HeaderMap, Path(room): Path<String>) -> ApiResult {
    app.actor_for(&headers)?;
    ok(app.read(|e| e.assets().power_plan(&room).cloned())?)
}

async fn list_changes(State(app): State<App>, headers: HeaderMap) -> ApiResult {
    app.actor_for(&headers)?;
    ok(app.read(|e| e.changes().changes().cloned().collect::<Vec<_>>()))
}

async fn show_change(State(app): State<App>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult {
    app.actor_for(&headers)?;
    ok(app.read(|e| e.changes().get(&ChangeId::new(id)).cloned())?)
}

async fn list_tickets(State(app): State<App>, headers: HeaderMap, Query(q): Query<ListQuery>) -> ApiResult {
    app.actor_for(&headers)?;
    if q.wants("csv") {
        return text("text/csv; charset=utf-8", app.read(|e| e.desk().export_csv()));
    }
    if q.view.as_deref() == Some("queue") {
        return ok(app.read(|e| e.desk().queue().into_iter().cloned().collect::<Vec<_>>()));
    }
    ok(app.read(|e| e.desk().tickets().cloned().collect::<Vec<_>>()))
}

async fn show_ticket(State(app): State<App>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult {
    app.actor_for(&headers)?;
    let id = TicketId::parse(&id).map_err(|_| Error::NotFound { entity: "ticket".into(), id })?;
    ok(app.read(|e| e.desk().get(&id).cloned())?)
}

async fn ticket_breaches(State(app): State<App>, headers: HeaderMap, Query(q): Query<ListQuery>) -> ApiResult {
    app.actor_for(&headers)?;
    let now = q.now.unwrap_or_else(|| (app.clock)());
    ok(app.read(|e| e.escalation_breaches(now).into_iter().cloned().collect::<Vec<_>>()))
}

async fn ticket_knowledge(State(app): State<App>, headers: HeaderMap, Query(q): Query<ListQuery>) -> ApiResult {
    app.actor_for(&headers)?;
    match q.issue {
        Some(issue) => ok(app.read(|e| e.desk().knowledge(&issue).cloned())),
        None => ok(app.read(|e| e.desk().knowledge_entries().cloned().collect::<Vec<_>>())),
    }
}

async fn list_notifications(State(app): State<App>, headers: HeaderMap, Query(q): Query<ListQuery>) -> ApiResult {
    app.actor_for(&headers)?;
    ok(app.read(|e| {
        e.notifier()
            .notifications()
            .filter(|n| q.kind.is_none_or(|k| n.kind == k))
            .filter(|n| q.entity.as_deref().is_none_or(|id| n.entity_id == id))
            .cloned()
            .collect::<Vec<_>>()
    }))
}

async fn list_outages(State(app): State<App>, headers: HeaderMap) -> ApiResult {
    app.actor_for(&headers)?;
    ok(app.read(|e| e.notifier().outages().to_vec()))
}

async fn not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        code: "not_found".into(),
        message: "no such route".into(),
        details: Value::Null,
    }
}

pub fn router(state: App) -> Router {
    Router::new()
        .route("/status", get(status))
        .route("/state", get(full_state))
        // projects
        .route("/projects", mutate("create_project", None, true).get(list_projects))
        .route("/projects/{project_id}", get(show_project))
        .route("/projects/{project_id}/evidence", mutate("submit_evidence", None, false))
        .route("/projects/{project_id}/gates/{phase}/close", mutate("close_gate", None, false))
        .route("/projects/{project_id}/advance", mutate("advance_phase", None, false))
        .route("/projects/{project_id}/change-digest", get(change_digest))
        // vendors
        .route("/vendors", mutate("register_vendor", None, true).get(list_vendors))
        .route("/vendors/{vendor_id}", get(show_vendor))
        .route("/vendors/{vendor_id}/reports", get(vendor_report))
        .route("/vendors/{vendor_id}/annual", get(vendor_annual))
        .route("/vendors/{vendor_id}/surveys", mutate("record_survey", None, true).get(vendor_surveys))
        .route("/vendors/{vendor_id}/renewal-evaluation", mutate("evaluate_renewal", None, false))
        .route("/vendors/{vendor_id}/renewal", get(vendor_renewal))
        // procurement
        .route("/procurements", mutate("submit_requirement", None, true).get(list_procurements))
        .route("/procurements/{procurement_id}", get(show_procurement))
        .route("/procurements/{procurement_id}/quotations", mutate("attach_quotation", None, true))
        .route("/procurements/{procurement_id}/quotations/{vendor_id}", get(quotation_csv))
        .route("/procurements/{procurement_id}/selection", mutate("select_vendor", None, false))
        .route("/procurements/{procurement_id}/approvals", mutate("record_approval", Some("decision"), false))
        .route("/procurements/{procurement_id}/vendor-ack", mutate("record_vendor_ack", None, false))
        .route("/procurements/{procurement_id}/lop", mutate("close_lop", None, false))
        // assets
        .route("/assets", mutate("register_asset", Some("asset"), true).get(list_assets))
        .route("/assets/{asset_tag}", get(show_asset))
        .route("/assets/{asset_tag}/retire", mutate("retire_asset", None, false))
        .route("/assets/{asset_tag}/warranty", get(asset_warranty))
        .route(
            "/assets/{asset_tag}/server-docs",
            mutate("record_server_doc", Some("doc"), true).get(asset_server_docs),
        )
        .route("/licenses", mutate("create_license_pool", None, true).get(list_licenses))
        .route("/licenses/{product}", get(show_license))
        .route("/licenses/{product}/allocations", mutate("allocate_license", None, false))
        .route("/licenses/{product}/releases", mutate("release_license", None, false))
        .route("/ports", mutate("register_port", None, true).get(list_ports))
        .route("/ports/{site}/{port_id}", get(show_port))
        .route("/ports/{site}/{port_id}/status", mutate("mark_port", None, false))
        .route("/power-plans", mutate("plan_power", None, true).get(list_power))
        .route("/power-plans/{room}", get(show_power))
        .route("/power-plans/{room}/approval", mutate("approve_power_plan", None, false))
        // changes
        .route("/changes", mutate("submit_change", Some("draft"), true).get(list_changes))
        .route("/changes/{change_id}", get(show_change))
        .route("/changes/{change_id}/cab", mutate("cab_decide", None, false))
        .route("/changes/{change_id}/schedule", mutate("schedule_change", None, false))
        .route("/changes/{change_id}/test-runs", mutate("record_test_run", None, true))
        .route("/changes/{change_id}/release", mutate("approve_release", None, false))
        // tickets
        .route("/tickets", mutate("open_ticket", Some("ticket"), true).get(list_tickets))
        .route("/tickets/breaches", get(ticket_breaches))
        .route("/tickets/knowledge", get(ticket_knowledge))
        .route("/tickets/{ticket_id}", get(show_ticket))
        .route("/tickets/{ticket_id}/analyze", mutate("analyze_ticket", None, false))
        .route("/tickets/{ticket_id}/attempts", mutate("record_attempt", None, false))
        .route("/tickets/{ticket_id}/resolve", mutate("resolve_ticket", None, false))
        .route("/tickets/{ticket_id}/escalate", mutate("escalate_ticket", None, false))
        .route("/tickets/{ticket_id}/annotate", mutate("annotate_ticket", None, false))
        .route("/tickets/{ticket_id}/close", mutate("close_ticket", None, false))
        // notifications and outages
        .route("/notifications", get(list_notifications))
        .route("/notifications/{notification_id}/delivery", mutate("mark_delivered", None, false))
        .route("/outages", mutate("open_outage", None, true).get(list_outages))
        .route("/outages/subscribers", mutate("register_service_user", None, true))
        .route("/outages/{service}/close", mutate("close_outage", None, false))
        .fallback(not_found)
        .with_state(state)
}

/// Binds the configured address and returns it with the running server.
pub async fn spawn(
    config: &ServiceConfig,
    state: App,
) -> std::io::Result<(SocketAddr, tokio::task::JoinHandle<std::io::Result<()>>)> {
    let listener = tokio::net::TcpListener::bind(&config.listen).await?;
    let addr = listener.local_addr()?;
    let app = router(state);
    let handle = tokio::spawn(async move { axum::serve(listener, app).await });
    Ok((addr, handle))
}

/// Runs until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let sink = AppState::configured_sink(&config);
    let state = Arc::new(AppState::open(&config, sink)?);
    let listener = tokio::net::TcpListener::bind(&config.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, events = state.event_count(), "itil-forge listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
