//! Admin CLI. Every remote verb is one API call; `serve` and `verify-log`
//! are the only verbs that touch the data directory.
//!
//! Exit codes: 0 ok, 2 connection failure, 3 validation / not found / bad
//! usage, 4 state conflict or rule violation, 5 unauthorized, 6 server or
//! storage failure.

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use itil_forge::audit::{read_batches, repair_torn_tail};
use itil_forge::procurement::DeviceCategory;
use itil_forge::service_desk::TicketCategory;
use itil_forge::{Engine, ErrorClass};

use crate::client::{Body, Client, ClientError};
use crate::config::ServiceConfig;

pub const EXIT_CONNECT: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_CONFLICT: i32 = 4;
pub const EXIT_UNAUTHORIZED: i32 = 5;
pub const EXIT_SERVER: i32 = 6;

pub fn exit_for_status(status: u16) -> i32 {
    match status {
        401 | 403 => EXIT_UNAUTHORIZED,
        409 | 422 => EXIT_CONFLICT,
        400..=499 => EXIT_INVALID,
        _ => EXIT_SERVER,
    }
}

pub fn exit_for_class(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Validation | ErrorClass::NotFound => EXIT_INVALID,
        ErrorClass::Conflict | ErrorClass::Rule => EXIT_CONFLICT,
        ErrorClass::Storage => EXIT_SERVER,
    }
}

#[derive(Debug, Parser)]
#[command(name = "itil-forge", version, about = "ITIL lifecycle engine: server and admin client")]
pub struct Cli {
    #[arg(long, global = true, env = "ITIL_FORGE_SERVER", default_value = "http://127.0.0.1:8080")]
    pub server: String,
    #[arg(long, global = true, env = "ITIL_FORGE_TOKEN", hide_env_values = true)]
    pub token: Option<String>,
    /// Print the raw API response.
    #[arg(long, global = true)]
    pub json: bool,
    /// Business time for the mutation (RFC 3339); defaults to the server clock.
    #[arg(long = "as-of", global = true)]
    pub as_of: Option<String>,
    #[command(subcommand)]
    pub command: Verb,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Run the HTTP server.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Drop a torn final log line before starting.
        #[arg(long)]
        repair_log: bool,
    },
    /// Replay the event log offline and report its consistency.
    VerifyLog {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Apply a fixture (JSON array of `{method, path, body}`) to an empty server.
    Seed { file: PathBuf },
    Status,
    /// Full engine state as JSON.
    State,
    #[command(subcommand)]
    Project(ProjectVerb),
    #[command(subcommand)]
    Vendor(VendorVerb),
    #[command(subcommand)]
    Procurement(ProcurementVerb),
    #[command(subcommand)]
    Asset(AssetVerb),
    #[command(subcommand)]
    License(LicenseVerb),
    #[command(subcommand)]
    Port(PortVerb),
    #[command(subcommand)]
    Power(PowerVerb),
    #[command(subcommand)]
    Change(ChangeVerb),
    #[command(subcommand)]
    Ticket(TicketVerb),
    #[command(subcommand)]
    Outage(OutageVerb),
    #[command(subcommand)]
    Notification(NotificationVerb),
    /// Raw GET.
    Get { path: String },
    /// Raw POST with a JSON body.
    Post {
        path: String,
        #[arg(default_value = "{}")]
        body: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum ProjectVerb {
    Create {
        #[arg(long)]
        name: String,
        #[arg(long)]
        organization: String,
    },
    List,
    Show { id: String },
    Evidence {
        id: String,
        #[arg(long)]
        phase: String,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        doc_ref: String,
    },
    CloseGate { id: String, phase: String },
    Advance { id: String },
    Digest {
        id: String,
        #[arg(long)]
        quarter: String,
        #[arg(long)]
        text: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum VendorVerb {
    Register {
        #[arg(long)]
        name: String,
        #[arg(long)]
        contact: String,
        /// Repeatable; prefix with `!` for "tracked but not authorized".
        #[arg(long = "category")]
        categories: Vec<String>,
    },
    List,
    Show { id: String },
    Report {
        id: String,
        #[arg(long)]
        quarter: String,
        #[arg(long)]
        text: bool,
    },
    Annual {
        id: String,
        #[arg(long)]
        year: i32,
    },
    Survey {
        id: String,
        #[arg(long)]
        period: String,
        /// Comma-separated 1–5 scores.
        #[arg(long, value_delimiter = ',')]
        scores: Vec<i64>,
    },
    Surveys { id: String },
    RenewalEval {
        id: String,
        #[arg(long)]
        year: i32,
    },
    Renewal {
        id: String,
        #[arg(long)]
        year: i32,
    },
}

#[derive(Debug, Subcommand)]
pub enum ProcurementVerb {
    Submit {
        #[arg(long)]
        project: String,
        #[arg(long)]
        requirement_doc: String,
    },
    List,
    Show { id: String },
    /// Attach a quotation sheet (CSV with the procurement-sheet header).
    Quote {
        id: String,
        #[arg(long)]
        vendor: String,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "INR")]
        currency: String,
    },
    QuoteCsv {
        id: String,
        #[arg(long)]
        vendor: String,
    },
    Select {
        id: String,
        #[arg(long)]
        vendor: String,
        #[arg(long, default_value = "")]
        justification: String,
    },
    Approve {
        id: String,
        #[arg(long)]
        role: String,
        #[arg(long)]
        approver: String,
        #[arg(long)]
        date: String,
        /// approved | not-approved
        #[arg(long, default_value = "approved")]
        status: String,
        #[arg(long, default_value = "")]
        reason: String,
    },
    VendorAck { id: String },
    CloseLop { id: String },
}

#[derive(Debug, Subcommand)]
pub enum AssetVerb {
    Register {
        #[arg(long)]
        device: String,
        #[arg(long)]
        category: String,
        #[arg(long)]
        vendor: String,
        #[arg(long)]
        location: String,
        #[arg(long)]
        purchase_date: String,
        #[arg(long)]
        warranty_months: i64,
    },
    List {
        #[arg(long)]
        csv: bool,
    },
    Show { tag: String },
    Retire { tag: String },
    Warranty {
        tag: String,
        #[arg(long)]
        on: String,
    },
    /// Record a server documentation sheet from a JSON file.
    ServerDoc { tag: String, file: PathBuf },
    ServerDocs { tag: String },
}

#[derive(Debug, Subcommand)]
pub enum LicenseVerb {
    Create {
        #[arg(long)]
        product: String,
        #[arg(long)]
        total: u32,
    },
    List {
        #[arg(long)]
        csv: bool,
    },
    Show { product: String },
    Allocate {
        product: String,
        #[arg(long)]
        user: String,
        #[arg(long)]
        asset: String,
    },
    Release {
        product: String,
        #[arg(long)]
        user: String,
        #[arg(long)]
        asset: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum PortVerb {
    Register {
        #[arg(long)]
        site: String,
        #[arg(long)]
        port: String,
        /// data | voice
        #[arg(long)]
        kind: String,
        #[arg(long)]
        location: String,
    },
    List,
    Show { site: String, port: String },
    Mark {
        site: String,
        port: String,
        /// ok | faulty
        #[arg(long)]
        status: String,
        #[arg(long, default_value = "")]
        note: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum PowerVerb {
    Plan {
        #[arg(long)]
        room: String,
        /// Measured average load in kW.
        #[arg(long)]
        load: f64,
    },
    List,
    Show { room: String },
    Approve { room: String },
}

#[derive(Debug, Args)]
pub struct ChangeDraftArgs {
    #[arg(long)]
    project: String,
    #[arg(long)]
    target: String,
    /// software | hardware
    #[arg(long)]
    kind: Option<String>,
    /// normal | emergency
    #[arg(long)]
    priority: Option<String>,
    #[arg(long)]
    downtime_minutes: Option<i64>,
    #[arg(long)]
    risk_note: Option<String>,
    #[arg(long)]
    alternate_solution: Option<String>,
    #[arg(long)]
    roi: Option<String>,
    #[arg(long = "department")]
    departments: Vec<String>,
    #[arg(long)]
    vendor: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum ChangeVerb {
    Submit(ChangeDraftArgs),
    List,
    Show { id: String },
    Cab {
        id: String,
        #[arg(long)]
        head_signoff: String,
        /// Reject with this reason instead of approving.
        #[arg(long)]
        reject: Option<String>,
    },
    Schedule {
        id: String,
        /// Window start (RFC 3339).
        #[arg(long)]
        at: String,
    },
    Test {
        id: String,
        #[arg(long)]
        dummy_input: String,
        /// pass | fail
        #[arg(long)]
        outcome: String,
        #[arg(long, default_value = "")]
        notes: String,
    },
    Release {
        id: String,
        #[arg(long, default_value = "")]
        location: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum TicketVerb {
    Open {
        /// application | hardware | network | security
        #[arg(long)]
        category: String,
        #[arg(long)]
        issue: String,
        #[arg(long)]
        username: String,
        #[arg(long)]
        asset: String,
        /// low | medium | high | critical
        #[arg(long, default_value = "low")]
        risk: String,
        /// Department affected; omit for a single user.
        #[arg(long)]
        department: Option<String>,
    },
    List {
        #[arg(long)]
        queue: bool,
        #[arg(long)]
        csv: bool,
    },
    Show { id: String },
    Analyze {
        id: String,
        #[arg(long)]
        root_cause: Option<String>,
    },
    Attempt {
        id: String,
        #[arg(long)]
        resolution: String,
    },
    Resolve {
        id: String,
        #[arg(long)]
        resolution: String,
        #[arg(long)]
        temporary: bool,
    },
    Escalate {
        id: String,
        /// l1 | l2 | l3 | expert
        #[arg(long)]
        level: String,
        #[arg(long)]
        reason: String,
    },
    Annotate {
        id: String,
        #[arg(long)]
        reason: String,
    },
    Close {
        id: String,
        /// Close against an approved procurement instead of a fix.
        #[arg(long)]
        procurement: Option<String>,
    },
    Breaches {
        #[arg(long)]
        now: Option<String>,
    },
    Knowledge {
        #[arg(long)]
        issue: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum OutageVerb {
    Subscribe {
        #[arg(long)]
        service: String,
        #[arg(long)]
        recipient: String,
    },
    Open {
        service: String,
        #[arg(long)]
        vendor: Option<String>,
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        alternate: Option<String>,
    },
    Close {
        service: String,
        #[arg(long)]
        end: Option<String>,
    },
    List,
}

#[derive(Debug, Subcommand)]
pub enum NotificationVerb {
    List {
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        entity: Option<String>,
    },
}

enum Call {
    Get(String),
    Post(String, Value),
}

/// `"not-approved"` → `"NotApproved"`.
fn pascal(text: &str) -> String {
    text.split(['-', '_', ' '])
        .filter(|w| !w.is_empty())
        .map(|w| {
            let mut c = w.chars();
            match c.next() {
                Some(f) => f.to_uppercase().chain(c.flat_map(char::to_lowercase)).collect::<String>(),
                None => String::new(),
            }
        })
        .collect()
}

fn level(text: &str) -> String {
    match text.to_ascii_lowercase().as_str() {
        "l1" | "l2" | "l3" => text.to_ascii_uppercase(),
        other => pascal(other),
    }
}

fn enc(segment: &str) -> String {
    let mut out = String::new();
    for b in segment.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => out.push(b as char),
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

fn obj(value: Value) -> Map<String, Value> {
    match value {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

fn insert_opt(map: &mut Map<String, Value>, key: &str, value: Option<impl Into<Value>>) {
    if let Some(v) = value {
        map.insert(key.into(), v.into());
    }
}

fn query(pairs: &[(&str, Option<String>)]) -> String {
    let parts: Vec<String> = pairs
        .iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| format!("{k}={}", enc(v))))
        .collect();
    if parts.is_empty() {
        String::new()
    } else {
        format!("?{}", parts.join("&"))
    }
}

struct Usage(String);

fn remote_call(verb: Verb) -> Result<Call, Usage> {
    use Call::{Get, Post};
    Ok(match verb {
        Verb::Serve { .. } | Verb::VerifyLog { .. } | Verb::Seed { .. } => unreachable!("handled locally"),
        Verb::Status => Get("/status".into()),
        Verb::State => Get("/state".into()),
        Verb::Get { path } => Get(path),
        Verb::Post { path, body } => {
            let body = serde_json::from_str(&body).map_err(|e| Usage(format!("body is not JSON: {e}")))?;
            Post(path, body)
        }
        Verb::Project(v) => match v {
            ProjectVerb::Create { name, organization } => {
                Post("/projects".into(), json!({ "name": name, "organization": organization }))
            }
            ProjectVerb::List => Get("/projects".into()),
            ProjectVerb::Show { id } => Get(format!("/projects/{}", enc(&id))),
            ProjectVerb::Evidence { id, phase, kind, doc_ref } => Post(
                format!("/projects/{}/evidence", enc(&id)),
                json!({ "phase": phase_name(&phase), "kind": pascal(&kind), "doc_ref": doc_ref }),
            ),
            ProjectVerb::CloseGate { id, phase } => Post(
                format!("/projects/{}/gates/{}/close", enc(&id), phase_name(&phase)),
                json!({}),
            ),
            ProjectVerb::Advance { id } => Post(format!("/projects/{}/advance", enc(&id)), json!({})),
            ProjectVerb::Digest { id, quarter, text } => Get(format!(
                "/projects/{}/change-digest{}",
                enc(&id),
                query(&[("period", Some(quarter)), ("format", text.then(|| "text".into()))])
            )),
        },
        Verb::Vendor(v) => match v {
            VendorVerb::Register { name, contact, categories } => {
                let mut map = Map::new();
                for c in categories {
                    let (authorized, label) = match c.strip_prefix('!') {
                        Some(rest) => (false, rest),
                        None => (true, c.as_str()),
                    };
                    let cat = DeviceCategory::from_str(label).map_err(|e| Usage(e.to_string()))?;
                    map.insert(json!(cat).as_str().unwrap_or_default().to_string(), json!(authorized));
                }
                Post("/vendors".into(), json!({ "name": name, "contact": contact, "categories": map }))
            }
            VendorVerb::List => Get("/vendors".into()),
            VendorVerb::Show { id } => Get(format!("/vendors/{}", enc(&id))),
            VendorVerb::Report { id, quarter, text } => Get(format!(
                "/vendors/{}/reports{}",
                enc(&id),
                query(&[("period", Some(quarter)), ("format", text.then(|| "text".into()))])
            )),
            VendorVerb::Annual { id, year } => Get(format!("/vendors/{}/annual?year={year}", enc(&id))),
            VendorVerb::Survey { id, period, scores } => Post(
                format!("/vendors/{}/surveys", enc(&id)),
                json!({ "period": period, "scores": scores }),
            ),
            VendorVerb::Surveys { id } => Get(format!("/vendors/{}/surveys", enc(&id))),
            VendorVerb::RenewalEval { id, year } => Post(
                format!("/vendors/{}/renewal-evaluation", enc(&id)),
                json!({ "year": year }),
            ),
            VendorVerb::Renewal { id, year } => Get(format!("/vendors/{}/renewal?year={year}", enc(&id))),
        },
        Verb::Procurement(v) => match v {
            ProcurementVerb::Submit { project, requirement_doc } => Post(
                "/procurements".into(),
                json!({ "project_id": project, "requirement_doc": requirement_doc }),
            ),
            ProcurementVerb::List => Get("/procurements".into()),
            ProcurementVerb::Show { id } => Get(format!("/procurements/{}", enc(&id))),
            ProcurementVerb::Quote { id, vendor, csv, currency } => {
                let text = std::fs::read_to_string(&csv)
                    .map_err(|e| Usage(format!("cannot read {}: {e}", csv.display())))?;
                Post(
                    format!("/procurements/{}/quotations", enc(&id)),
                    json!({ "vendor_id": vendor, "csv": text, "currency": currency }),
                )
            }
            ProcurementVerb::QuoteCsv { id, vendor } => {
                Get(format!("/procurements/{}/quotations/{}", enc(&id), enc(&vendor)))
            }
            ProcurementVerb::Select { id, vendor, justification } => Post(
                format!("/procurements/{}/selection", enc(&id)),
                json!({ "vendor_id": vendor, "justification": justification }),
            ),
            ProcurementVerb::Approve { id, role, approver, date, status, reason } => {
                if pascal(&status) == "NotApproved" && reason.trim().is_empty() {
                    return Err(Usage("--reason is required when not approving".into()));
                }
                let role = match role.to_ascii_lowercase().as_str() {
                    "it" => "IT".to_string(),
                    other => pascal(other),
                };
                Post(
                    format!("/procurements/{}/approvals", enc(&id)),
                    json!({ "role": role, "approver_name": approver, "date": date,
                            "status": pascal(&status), "reason": reason }),
                )
            }
            ProcurementVerb::VendorAck { id } => Post(format!("/procurements/{}/vendor-ack", enc(&id)), json!({})),
            ProcurementVerb::CloseLop { id } => Post(format!("/procurements/{}/lop", enc(&id)), json!({})),
        },
        Verb::Asset(v) => match v {
            AssetVerb::Register { device, category, vendor, location, purchase_date, warranty_months } => {
                let cat = DeviceCategory::from_str(&category).map_err(|e| Usage(e.to_string()))?;
                Post(
                    "/assets".into(),
                    json!({ "device": device, "category": cat, "vendor_id": vendor, "location": location,
                            "purchase_date": purchase_date, "warranty_months": warranty_months }),
                )
            }
            AssetVerb::List { csv } => Get(format!("/assets{}", if csv { "?format=csv" } else { "" })),
            AssetVerb::Show { tag } => Get(format!("/assets/{}", enc(&tag))),
            AssetVerb::Retire { tag } => Post(format!("/assets/{}/retire", enc(&tag)), json!({})),
            AssetVerb::Warranty { tag, on } => Get(format!("/assets/{}/warranty?on={}", enc(&tag), enc(&on))),
            AssetVerb::ServerDoc { tag, file } => {
                let text = std::fs::read_to_string(&file)
                    .map_err(|e| Usage(format!("cannot read {}: {e}", file.display())))?;
                let doc: Value = serde_json::from_str(&text).map_err(|e| Usage(format!("{}: {e}", file.display())))?;
                Post(format!("/assets/{}/server-docs", enc(&tag)), doc)
            }
            AssetVerb::ServerDocs { tag } => Get(format!("/assets/{}/server-docs", enc(&tag))),
        },
        Verb::License(v) => match v {
            LicenseVerb::Create { product, total } => {
                Post("/licenses".into(), json!({ "product": product, "total": total }))
            }
            LicenseVerb::List { csv } => Get(format!("/licenses{}", if csv { "?format=csv" } else { "" })),
            LicenseVerb::Show { product } => Get(format!("/licenses/{}", enc(&product))),
            LicenseVerb::Allocate { product, user, asset } => Post(
                format!("/licenses/{}/allocations", enc(&product)),
                json!({ "user": user, "asset_tag": asset }),
            ),
            LicenseVerb::Release { product, user, asset } => Post(
                format!("/licenses/{}/releases", enc(&product)),
                json!({ "user": user, "asset_tag": asset }),
            ),
        },
        Verb::Port(v) => match v {
            PortVerb::Register { site, port, kind, location } => Post(
                "/ports".into(),
                json!({ "site": site, "port_id": port, "kind": pascal(&kind), "location": location }),
            ),
            PortVerb::List => Get("/ports".into()),
            PortVerb::Show { site, port } => Get(format!("/ports/{}/{}", enc(&site), enc(&port))),
            PortVerb::Mark { site, port, status, note } => {
                let status = if status.eq_ignore_ascii_case("ok") { "OK".into() } else { pascal(&status) };
                Post(
                    format!("/ports/{}/{}/status", enc(&site), enc(&port)),
                    json!({ "status": status, "note": note }),
                )
            }
        },
        Verb::Power(v) => match v {
            PowerVerb::Plan { room, load } => {
                Post("/power-plans".into(), json!({ "room": room, "measured_avg_load": load }))
            }
            PowerVerb::List => Get("/power-plans".into()),
            PowerVerb::Show { room } => Get(format!("/power-plans/{}", enc(&room))),
            PowerVerb::Approve { room } => Post(format!("/power-plans/{}/approval", enc(&room)), json!({})),
        },
        Verb::Change(v) => match v {
            ChangeVerb::Submit(d) => {
                let mut m = obj(json!({
                    "project_id": d.project,
                    "target": d.target,
                    "affected_departments": d.departments,
                }));
                insert_opt(&mut m, "kind", d.kind.as_deref().map(pascal));
                insert_opt(&mut m, "priority", d.priority.as_deref().map(pascal));
                insert_opt(&mut m, "downtime_estimate_minutes", d.downtime_minutes);
                insert_opt(&mut m, "risk_note", d.risk_note);
                insert_opt(&mut m, "alternate_solution", d.alternate_solution);
                insert_opt(&mut m, "roi_justification", d.roi);
                insert_opt(&mut m, "vendor_id", d.vendor);
                Post("/changes".into(), Value::Object(m))
            }
            ChangeVerb::List => Get("/changes".into()),
            ChangeVerb::Show { id } => Get(format!("/changes/{}", enc(&id))),
            ChangeVerb::Cab { id, head_signoff, reject } => {
                let verdict = match reject {
                    Some(reason) => json!({ "Reject": { "reason": reason } }),
                    None => json!("Approve"),
                };
                Post(
                    format!("/changes/{}/cab", enc(&id)),
                    json!({ "verdict": verdict, "head_signoff": head_signoff }),
                )
            }
            ChangeVerb::Schedule { id, at } => {
                Post(format!("/changes/{}/schedule", enc(&id)), json!({ "scheduled_at": at }))
            }
            ChangeVerb::Test { id, dummy_input, outcome, notes } => Post(
                format!("/changes/{}/test-runs", enc(&id)),
                json!({ "dummy_input": dummy_input, "outcome": pascal(&outcome), "notes": notes }),
            ),
            ChangeVerb::Release { id, location } => {
                Post(format!("/changes/{}/release", enc(&id)), json!({ "location": location }))
            }
        },
        Verb::Ticket(v) => match v {
            TicketVerb::Open { category, issue, username, asset, risk, department } => {
                let category = TicketCategory::from_str(&category).map_err(|e| Usage(e.to_string()))?;
                let scope = match department {
                    Some(d) => json!({ "Department": d }),
                    None => json!("SingleUser"),
                };
                Post(
                    "/tickets".into(),
                    json!({ "category": category, "issue": issue, "username": username,
                            "asset_tag": asset, "risk_level": pascal(&risk), "scope": scope }),
                )
            }
            TicketVerb::List { queue, csv } => Get(format!(
                "/tickets{}",
                query(&[
                    ("view", queue.then(|| "queue".into())),
                    ("format", csv.then(|| "csv".into())),
                ])
            )),
            TicketVerb::Show { id } => Get(format!("/tickets/{}", enc(&id))),
            TicketVerb::Analyze { id, root_cause } => {
                Post(format!("/tickets/{}/analyze", enc(&id)), json!({ "root_cause": root_cause }))
            }
            TicketVerb::Attempt { id, resolution } => {
                Post(format!("/tickets/{}/attempts", enc(&id)), json!({ "resolution": resolution }))
            }
            TicketVerb::Resolve { id, resolution, temporary } => Post(
                format!("/tickets/{}/resolve", enc(&id)),
                json!({ "resolution": resolution,
                        "permanence": if temporary { "Temporary" } else { "Permanent" } }),
            ),
            TicketVerb::Escalate { id, level: l, reason } => Post(
                format!("/tickets/{}/escalate", enc(&id)),
                json!({ "level": level(&l), "reason": reason }),
            ),
            TicketVerb::Annotate { id, reason } => {
                Post(format!("/tickets/{}/annotate", enc(&id)), json!({ "reason": reason }))
            }
            TicketVerb::Close { id, procurement } => {
                let closure = match procurement {
                    Some(p) => json!({ "ProcurementApproved": { "reference": p } }),
                    None => json!("Solved"),
                };
                Post(format!("/tickets/{}/close", enc(&id)), json!({ "closure": closure }))
            }
            TicketVerb::Breaches { now } => Get(format!("/tickets/breaches{}", query(&[("now", now)]))),
            TicketVerb::Knowledge { issue } => Get(format!("/tickets/knowledge{}", query(&[("issue", issue)]))),
        },
        Verb::Outage(v) => match v {
            OutageVerb::Subscribe { service, recipient } => Post(
                "/outages/subscribers".into(),
                json!({ "service": service, "recipient": recipient }),
            ),
            OutageVerb::Open { service, vendor, start, alternate } => {
                let mut m = obj(json!({ "service": service }));
                insert_opt(&mut m, "vendor_id", vendor);
                insert_opt(&mut m, "start", start);
                insert_opt(&mut m, "alternate_endpoint", alternate);
                Post("/outages".into(), Value::Object(m))
            }
            OutageVerb::Close { service, end } => {
                let mut m = Map::new();
                insert_opt(&mut m, "end", end);
                Post(format!("/outages/{}/close", enc(&service)), Value::Object(m))
            }
            OutageVerb::List => Get("/outages".into()),
        },
        Verb::Notification(NotificationVerb::List { kind, entity }) => Get(format!(
            "/notifications{}",
            query(&[("kind", kind.as_deref().map(pascal)), ("entity", entity)])
        )),
    })
}

fn phase_name(text: &str) -> String {
    if text.eq_ignore_ascii_case("csi") {
        "CSI".into()
    } else {
        pascal(text)
    }
}

/// Human rendering: an entity prints its id; other objects print one
/// `key: value` line per field; arrays print one line per item.
fn render_human(body: &Body) -> String {
    match body {
        Body::Text(t) => t.trim_end().to_string(),
        Body::Json(Value::Object(m)) => match m.get("id").and_then(Value::as_str) {
            Some(id) => id.to_string(),
            None => m
                .iter()
                .map(|(k, v)| format!("{k}: {}", scalar(v)))
                .collect::<Vec<_>>()
                .join("\n"),
        },
        Body::Json(Value::Array(items)) => items
            .iter()
            .map(|item| match item.get("id").and_then(Value::as_str) {
                Some(id) => summary_line(id, item),
                None => scalar(item),
            })
            .collect::<Vec<_>>()
            .join("\n"),
        Body::Json(other) => scalar(other),
    }
}

fn summary_line(id: &str, item: &Value) -> String {
    let extra: Vec<String> = ["state", "status", "current_phase", "name", "issue"]
        .iter()
        .filter_map(|k| item.get(*k).map(|v| scalar(v)))
        .collect();
    if extra.is_empty() {
        id.to_string()
    } else {
        format!("{id}\t{}", extra.join("\t"))
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

fn report_error(io: &mut Io, e: &ClientError) -> i32 {
    let _ = writeln!(io.err, "error: {e}");
    match e {
        ClientError::Connect(_) => EXIT_CONNECT,
        ClientError::Api { status, .. } => exit_for_status(*status),
    }
}

fn with_as_of(call: Call, as_of: &Option<String>) -> Call {
    match (call, as_of) {
        (Call::Post(path, Value::Object(mut m)), Some(at)) => {
            m.insert("at".into(), Value::String(at.clone()));
            Call::Post(path, Value::Object(m))
        }
        (call, _) => call,
    }
}

/// Parses `argv` and runs the verb, writing to the given streams.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    let mut io = Io { out, err };
    match cli.command {
        Verb::Serve { config, repair_log } => serve(config, repair_log, &mut io),
        Verb::VerifyLog { config, data_dir } => verify_log(config, data_dir, &mut io),
        Verb::Seed { ref file } => {
            let file = file.clone();
            seed(&cli, &file, &mut io)
        }
        verb => {
            let call = match remote_call(verb) {
                Ok(call) => with_as_of(call, &cli.as_of),
                Err(Usage(msg)) => {
                    let _ = writeln!(io.err, "error: {msg}");
                    return EXIT_INVALID;
                }
            };
            let client = match Client::new(&cli.server, cli.token.clone()) {
                Ok(c) => c,
                Err(e) => return report_error(&mut io, &e),
            };
            let result = match &call {
                Call::Get(path) => client.get(path),
                Call::Post(path, body) => client.post(path, body),
            };
            match result {
                Ok(body) => {
                    let text = if cli.json { body.render() } else { render_human(&body) };
                    let _ = writeln!(io.out, "{text}");
                    0
                }
                Err(e) => {
                    if cli.json {
                        if let ClientError::Api { body, .. } = &e {
                            let _ = writeln!(io.out, "{}", body.render());
                        }
                    }
                    report_error(&mut io, &e)
                }
            }
        }
    }
}

fn seed(cli: &Cli, file: &PathBuf, io: &mut Io) -> i32 {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(io.err, "error: cannot read {}: {e}", file.display());
            return EXIT_INVALID;
        }
    };
    let calls: Vec<Value> = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(io.err, "error: {} is not a JSON array of calls: {e}", file.display());
            return EXIT_INVALID;
        }
    };
    let client = match Client::new(&cli.server, cli.token.clone()) {
        Ok(c) => c,
        Err(e) => return report_error(io, &e),
    };
    match client.get("/status") {
        Ok(Body::Json(s)) if s["empty"] == json!(true) => {}
        Ok(_) => {
            let _ = writeln!(io.err, "error: refusing to seed a non-empty store");
            return EXIT_CONFLICT;
        }
        Err(e) => return report_error(io, &e),
    }
    for (i, call) in calls.iter().enumerate() {
        let method = call["method"].as_str().unwrap_or("POST");
        let Some(path) = call["path"].as_str() else {
            let _ = writeln!(io.err, "error: call {i} has no path");
            return EXIT_INVALID;
        };
        if let Err(e) = client.request(method, path, call.get("body")) {
            let _ = writeln!(io.err, "error: call {i} ({method} {path}) failed");
            return report_error(io, &e);
        }
    }
    let _ = writeln!(io.out, "seeded {} calls", calls.len());
    0
}

fn load_config(path: Option<PathBuf>, io: &mut Io) -> Option<ServiceConfig> {
    match ServiceConfig::load(path.as_deref()) {
        Ok(c) => Some(c),
        Err(e) => {
            let _ = writeln!(io.err, "error: {e}");
            None
        }
    }
}

fn serve(config: Option<PathBuf>, repair_log: bool, io: &mut Io) -> i32 {
    let Some(config) = load_config(config, io) else {
        return EXIT_INVALID;
    };
    if repair_log {
        match repair_torn_tail(&config.log_path()) {
            Ok(true) => {
                let _ = writeln!(io.err, "dropped a torn final line from {}", config.log_path().display());
            }
            Ok(false) => {}
            Err(e) => {
                let _ = writeln!(io.err, "error: {e}");
                return exit_for_class(e.class());
            }
        }
    }
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e}");
            return EXIT_SERVER;
        }
    };
    match runtime.block_on(crate::api::serve(config)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e}");
            match e.downcast_ref::<itil_forge::Error>() {
                Some(core) => exit_for_class(core.class()),
                None => EXIT_SERVER,
            }
        }
    }
}

fn verify_log(config: Option<PathBuf>, data_dir: Option<PathBuf>, io: &mut Io) -> i32 {
    let mut cfg = match config {
        Some(path) => match load_config(Some(path), io) {
            Some(c) => c,
            None => return EXIT_INVALID,
        },
        None => ServiceConfig::default(),
    };
    if let Some(dir) = data_dir {
        cfg.data_dir = dir;
    }
    let result = read_batches(&cfg.log_path()).and_then(|batches| {
        let events: usize = batches.iter().map(|b| b.events.len()).sum();
        Engine::replay(cfg.engine_config(), &batches).map(|_| (batches.len(), events))
    });
    match result {
        Ok((batches, events)) => {
            let _ = writeln!(io.out, "ok: {events} events in {batches} batches");
            0
        }
        Err(e) => {
            let _ = writeln!(io.err, "error: {e}");
            exit_for_class(e.class())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Call {
        let mut argv = vec!["itil-forge".to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        let cli = Cli::try_parse_from(argv).unwrap();
        match remote_call(cli.command) {
            Ok(c) => c,
            Err(Usage(m)) => panic!("{m}"),
        }
    }

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(exit_for_status(400), EXIT_INVALID);
        assert_eq!(exit_for_status(404), EXIT_INVALID);
        assert_eq!(exit_for_status(409), EXIT_CONFLICT);
        assert_eq!(exit_for_status(422), EXIT_CONFLICT);
        assert_eq!(exit_for_status(401), EXIT_UNAUTHORIZED);
        assert_eq!(exit_for_status(503), EXIT_SERVER);
    }

    #[test]
    fn ticket_open_builds_api_body() {
        let Call::Post(path, body) = parse(&[
            "ticket", "open", "--category", "hardware", "--issue", "fan noise", "--username", "ravi",
            "--asset", "AST000001", "--risk", "critical", "--department", "Finance",
        ]) else {
            panic!("expected POST")
        };
        assert_eq!(path, "/tickets");
        assert_eq!(body["category"], "Hardware");
        assert_eq!(body["risk_level"], "Critical");
        assert_eq!(body["scope"], json!({ "Department": "Finance" }));
    }

    #[test]
    fn names_are_normalised() {
        assert_eq!(pascal("not-approved"), "NotApproved");
        assert_eq!(pascal("project_management"), "ProjectManagement");
        assert_eq!(level("l3"), "L3");
        assert_eq!(level("expert"), "Expert");
        assert_eq!(phase_name("csi"), "CSI");
        assert_eq!(enc("a b/c"), "a%20b%2Fc");
    }

    #[test]
    fn not_approved_without_reason_is_blocked_locally() {
        let argv: Vec<String> = [
            "itil-forge", "procurement", "approve", "prc000001", "--role", "it", "--approver", "x",
            "--date", "2016-01-01", "--status", "not-approved",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(&argv, &mut out, &mut err), EXIT_INVALID);
    }

    #[test]
    fn human_output_prints_entity_ids() {
        let body = Body::Json(json!({ "id": "hrd000001", "state": "Open" }));
        assert_eq!(render_human(&body), "hrd000001");
    }
}
