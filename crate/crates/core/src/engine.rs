//! The command layer over all modules.
//!
//! A [`Command`] is validated and applied against the in-memory state and
//! yields an event batch: the command itself first, then any events derived
//! from it (notifications, gate evidence). Only successful commands produce
//! batches, and a failed command leaves state untouched. Replaying the logged
//! commands in order rebuilds the same state, and the derived events must
//! come out identical to the logged ones.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::assets::{AssetRegistry, AssetTag, Kilowatts, NewAsset, PortKind, PortStatus, ServerDoc};
use crate::audit::{AuditEvent, Batch, EventDraft};
use crate::change::{CabVerdict, ChangeBoard, ChangeDigest, ChangeDraft, TestOutcome};
use crate::common::{ActorId, ChangeId, DocRef, NotificationId, ProcurementId, ProjectId, Recipient, Timestamp, VendorId};
use crate::error::{Error, Result};
use crate::lifecycle::{EvidenceKind, GateChecklist, Lifecycle, Phase};
use crate::notifications::{CopyAddresses, Notification, Notifier};
use crate::period::Period;
use crate::procurement::{
    lop_doc_ref, ApprovalDecision, DeviceCategory, OverallStatus, Procurement, QuotationLine,
};
use crate::service_desk::{Closure, EscalationLevel, NewTicket, Permanence, ServiceDesk, Ticket, TicketId};
use crate::sla::{
    self, AnnualReport, QuarterlyReport, RenewalDecision, ReviewPeriod, SatisfactionSurvey, SlaConfig,
};

/// Who issues a command and the instant it takes effect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ctx {
    pub actor: ActorId,
    pub at: Timestamp,
}

impl Ctx {
    pub fn new(actor: impl Into<ActorId>, at: Timestamp) -> Self {
        Self { actor: actor.into(), at }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Command {
    CreateProject { name: String, organization: String },
    SubmitEvidence { project_id: ProjectId, phase: Phase, kind: EvidenceKind, doc_ref: DocRef },
    CloseGate { project_id: ProjectId, phase: Phase },
    AdvancePhase { project_id: ProjectId },

    RegisterVendor { name: String, contact: String, categories: BTreeMap<DeviceCategory, bool> },
    SubmitRequirement { project_id: ProjectId, requirement_doc: DocRef },
    AttachQuotation { procurement_id: ProcurementId, vendor_id: VendorId, lines: Vec<QuotationLine> },
    SelectVendor { procurement_id: ProcurementId, vendor_id: VendorId, justification: String },
    RecordApproval { procurement_id: ProcurementId, decision: ApprovalDecision },
    RecordVendorAck { procurement_id: ProcurementId },
    CloseLop { procurement_id: ProcurementId },

    RegisterAsset { asset: NewAsset },
    RetireAsset { asset_tag: AssetTag },
    CreateLicensePool { product: String, total: u32 },
    AllocateLicense { product: String, user: String, asset_tag: AssetTag },
    ReleaseLicense { product: String, user: String, asset_tag: AssetTag },
    RecordServerDoc { asset_tag: AssetTag, doc: ServerDoc },
    RegisterPort { site: String, port_id: String, kind: PortKind, location: String },
    MarkPort { site: String, port_id: String, status: PortStatus, #[serde(default)] note: String },
    PlanPower { room: String, measured_avg_load: Kilowatts },
    ApprovePowerPlan { room: String },

    SubmitChange { draft: ChangeDraft },
    CabDecide { change_id: ChangeId, verdict: CabVerdict, head_signoff: String },
    ScheduleChange { change_id: ChangeId, scheduled_at: Timestamp },
    RecordTestRun { change_id: ChangeId, dummy_input: String, outcome: TestOutcome, #[serde(default)] notes: String },
    ApproveRelease { change_id: ChangeId, #[serde(default)] location: String },

    OpenTicket { ticket: NewTicket },
    AnalyzeTicket { ticket_id: TicketId, #[serde(default)] root_cause: Option<String> },
    RecordAttempt { ticket_id: TicketId, resolution: String },
    ResolveTicket { ticket_id: TicketId, resolution: String, permanence: Permanence },
    EscalateTicket { ticket_id: TicketId, level: EscalationLevel, reason: String },
    AnnotateTicket { ticket_id: TicketId, reason: String },
    CloseTicket { ticket_id: TicketId, closure: Closure },

    RecordSurvey { vendor_id: VendorId, period: Period, scores: Vec<i64> },
    EvaluateRenewal { vendor_id: VendorId, year: i32 },

    RegisterServiceUser { service: String, recipient: Recipient },
    OpenOutage {
        service: String,
        #[serde(default)]
        vendor_id: Option<VendorId>,
        #[serde(default)]
        start: Option<Timestamp>,
        #[serde(default)]
        alternate_endpoint: Option<String>,
    },
    CloseOutage { service: String, #[serde(default)] end: Option<Timestamp> },
    MarkDelivered { notification_id: NotificationId, accepted: bool },
}

impl Command {
    /// Snake-case variant name, used as the event kind.
    pub fn name(&self) -> String {
        match serde_json::to_value(self) {
            Ok(Value::Object(map)) => map
                .get("type")
                .and_then(Value::as_str)
                .unwrap_or("command")
                .to_string(),
            _ => "command".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub checklist: GateChecklist,
    pub min_quotations: usize,
    pub sla: SlaConfig,
    pub copies: CopyAddresses,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            checklist: GateChecklist::default(),
            min_quotations: 2,
            sla: SlaConfig::default(),
            copies: CopyAddresses::default(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_quotations < 1 {
            return Err(Error::validation("min_quotations", "must be at least 1"));
        }
        self.sla.validate()
    }
}

/// What a successful command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Executed {
    pub events: Vec<EventDraft>,
    pub response: Value,
    /// Notifications created by this command, for delivery.
    pub notifications: Vec<Notification>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Engine {
    config: EngineConfig,
    lifecycle: Lifecycle,
    procurement: Procurement,
    assets: AssetRegistry,
    changes: ChangeBoard,
    desk: ServiceDesk,
    notifier: Notifier,
    surveys: Vec<SatisfactionSurvey>,
    /// Keyed by `vendor/year`.
    renewals: BTreeMap<String, RenewalDecision>,
}

impl Default for Engine {
    fn default() -> Self {
        Self::new(EngineConfig::default())
    }
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Value {
    serde_json::to_value(value).expect("state is serializable")
}

fn renewal_key(vendor: &VendorId, year: i32) -> String {
    format!("{vendor}/{year}")
}

impl Engine {
    pub fn new(config: EngineConfig) -> Self {
        Self {
            lifecycle: Lifecycle::new(config.checklist.clone()),
            procurement: Procurement::new(config.min_quotations),
            assets: AssetRegistry::default(),
            changes: ChangeBoard::default(),
            desk: ServiceDesk::default(),
            notifier: Notifier::new(config.copies.clone()),
            surveys: Vec::new(),
            renewals: BTreeMap::new(),
            config,
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn lifecycle(&self) -> &Lifecycle {
        &self.lifecycle
    }

    pub fn procurement(&self) -> &Procurement {
        &self.procurement
    }

    pub fn assets(&self) -> &AssetRegistry {
        &self.assets
    }

    pub fn changes(&self) -> &ChangeBoard {
        &self.changes
    }

    pub fn desk(&self) -> &ServiceDesk {
        &self.desk
    }

    pub fn notifier(&self) -> &Notifier {
        &self.notifier
    }

    pub fn surveys(&self) -> &[SatisfactionSurvey] {
        &self.surveys
    }

    pub fn renewal(&self, vendor: &VendorId, year: i32) -> Option<&RenewalDecision> {
        self.renewals.get(&renewal_key(vendor, year))
    }

    pub fn renewals(&self) -> impl Iterator<Item = &RenewalDecision> {
        self.renewals.values()
    }

    /// True when nothing has been recorded yet.
    pub fn is_empty(&self) -> bool {
        self.lifecycle.projects().next().is_none()
            && self.procurement.vendors().next().is_none()
            && self.assets.assets().next().is_none()
            && self.desk.tickets().next().is_none()
            && self.changes.changes().next().is_none()
            && self.notifier.notifications().next().is_none()
    }

    /// Canonical serialization; equal states give equal strings.
    pub fn state_json(&self) -> String {
        serde_json::to_string(self).expect("state is serializable")
    }

    pub fn vendor_tickets<'a>(&'a self, vendor: &'a VendorId) -> impl Iterator<Item = &'a Ticket> + 'a {
        self.desk.tickets().filter(move |t| {
            self.assets
                .asset(&t.asset_tag)
                .map(|a| &a.vendor_id == vendor)
                .unwrap_or(false)
        })
    }

    pub fn vendor_report(&self, vendor: &VendorId, period: Period) -> Result<QuarterlyReport> {
        self.procurement.vendor(vendor)?;
        let outages = self
            .notifier
            .outages()
            .iter()
            .filter(|o| o.vendor_id.as_ref() == Some(vendor));
        sla::build_quarterly_report(vendor, period, self.vendor_tickets(vendor), outages)
    }

    pub fn annual_report(&self, vendor: &VendorId, year: i32) -> Result<AnnualReport> {
        let periods: Vec<Period> = match self.config.sla.review_period {
            ReviewPeriod::Quarterly => (1..=4).map(|q| Period::quarter(year, q)).collect::<Result<_>>()?,
            ReviewPeriod::HalfYearly => (1..=2).map(|h| Period::half(year, h)).collect::<Result<_>>()?,
        };
        let reports = periods
            .into_iter()
            .map(|p| self.vendor_report(vendor, p))
            .collect::<Result<Vec<_>>>()?;
        sla::consolidate_annual(&reports)
    }

    /// All survey scores for the vendor in the year, pooled.
    pub fn year_survey(&self, vendor: &VendorId, year: i32) -> Result<SatisfactionSurvey> {
        let scores: Vec<i64> = self
            .surveys
            .iter()
            .filter(|s| &s.vendor_id == vendor && s.period.year == year)
            .flat_map(|s| s.scores.iter().map(|&x| x as i64))
            .collect();
        if scores.is_empty() {
            return Err(Error::not_found("survey", renewal_key(vendor, year)));
        }
        sla::record_survey(vendor, Period::year(year), &scores)
    }

    pub fn escalation_breaches(&self, now: Timestamp) -> Vec<&Ticket> {
        self.desk.check_escalation_breaches(now)
    }

    pub fn change_digest(&self, project: &ProjectId, period: Period) -> Result<ChangeDigest> {
        self.lifecycle.get(project)?;
        Ok(self.changes.quarterly_digest(project, period))
    }

    /// Validates and applies a command.
    pub fn execute(&mut self, command: &Command, ctx: &Ctx) -> Result<Executed> {
        let mut derived: Vec<EventDraft> = Vec::new();
        let mut notes: Vec<Notification> = Vec::new();
        let at = ctx.at;
        let actor = &ctx.actor;
        let (entity_type, entity_id, response): (&str, String, Value) = match command {
            Command::CreateProject { name, organization } => {
                let p = self.lifecycle.create_project(name, organization, at)?;
                ("project", p.id.to_string(), to_json(p))
            }
            Command::SubmitEvidence { project_id, phase, kind, doc_ref } => {
                let receipt = self.lifecycle.submit_evidence(project_id, *phase, *kind, doc_ref.clone(), at)?;
                let p = self.lifecycle.get(project_id)?;
                (
                    "project",
                    project_id.to_string(),
                    json!({ "added": receipt.added, "project": p }),
                )
            }
            Command::CloseGate { project_id, phase } => {
                let p = self.lifecycle.close_gate(project_id, *phase, actor, at)?;
                ("project", project_id.to_string(), to_json(p))
            }
            Command::AdvancePhase { project_id } => {
                let p = self.lifecycle.advance_phase(project_id)?;
                ("project", project_id.to_string(), to_json(p))
            }

            Command::RegisterVendor { name, contact, categories } => {
                let v = self.procurement.register_vendor(name, contact, categories.clone())?;
                ("vendor", v.id.to_string(), to_json(v))
            }
            Command::SubmitRequirement { project_id, requirement_doc } => {
                let project = self.lifecycle.get(project_id)?;
                let r = self.procurement.submit_requirement(project, requirement_doc.clone(), at)?;
                ("procurement", r.id.to_string(), to_json(r))
            }
            Command::AttachQuotation { procurement_id, vendor_id, lines } => {
                let vendor = self.procurement.vendor(vendor_id)?.clone();
                let r = self
                    .procurement
                    .attach_quotation(procurement_id, vendor_id, lines.clone(), at)?;
                let response = to_json(r);
                let n = self.notifier.notify_quotation_received(procurement_id, &vendor, at)?;
                notes.push(n);
                ("procurement", procurement_id.to_string(), response)
            }
            Command::SelectVendor { procurement_id, vendor_id, justification } => {
                let r = self.procurement.select_vendor(procurement_id, vendor_id, justification)?;
                ("procurement", procurement_id.to_string(), to_json(r))
            }
            Command::RecordApproval { procurement_id, decision } => {
                let outcome = self.procurement.record_approval(procurement_id, decision.clone())?;
                let r = self.procurement.request(procurement_id)?.clone();
                if outcome.became_approved {
                    let vendor_id = r.selected_vendor.as_ref().expect("approved requests have a vendor");
                    let vendor = self.procurement.vendor(vendor_id)?.clone();
                    notes.push(self.notifier.notify_vendor_approval(&r, &vendor, at)?);
                }
                (
                    "procurement",
                    procurement_id.to_string(),
                    json!({ "overall": outcome.overall, "became_approved": outcome.became_approved, "request": r }),
                )
            }
            Command::RecordVendorAck { procurement_id } => {
                self.procurement.request(procurement_id)?;
                let n = self.notifier.record_vendor_ack(procurement_id, at)?;
                ("procurement", procurement_id.to_string(), to_json(n))
            }
            Command::CloseLop { procurement_id } => {
                let project_id = self.procurement.check_close_lop(procurement_id)?.project_id.clone();
                let doc = lop_doc_ref(procurement_id);
                let evidence_ok = self.lifecycle.check_evidence(&project_id, Phase::Strategy).is_ok();
                let r = self.procurement.close_lop(procurement_id, actor, at)?.clone();
                if evidence_ok {
                    let receipt = self.lifecycle.submit_evidence(
                        &project_id,
                        Phase::Strategy,
                        EvidenceKind::ProcurementClosure,
                        doc.clone(),
                        at,
                    )?;
                    if receipt.added {
                        derived.push(EventDraft::new(
                            "project",
                            &project_id,
                            "evidence_recorded",
                            json!({ "phase": Phase::Strategy, "kind": EvidenceKind::ProcurementClosure, "doc_ref": doc }),
                        ));
                    }
                }
                ("procurement", procurement_id.to_string(), to_json(&r))
            }

            Command::RegisterAsset { asset } => {
                self.procurement.vendor(&asset.vendor_id)?;
                let a = self.assets.register_asset(asset.clone())?;
                ("asset", a.tag.to_string(), to_json(a))
            }
            Command::RetireAsset { asset_tag } => {
                let a = self.assets.retire_asset(asset_tag)?;
                ("asset", asset_tag.to_string(), to_json(a))
            }
            Command::CreateLicensePool { product, total } => {
                let p = self.assets.create_license_pool(product, *total)?;
                ("license_pool", product.clone(), to_json(p))
            }
            Command::AllocateLicense { product, user, asset_tag } => {
                let p = self.assets.allocate_license(product, user, asset_tag, at)?;
                ("license_pool", product.clone(), to_json(p))
            }
            Command::ReleaseLicense { product, user, asset_tag } => {
                let p = self.assets.release_license(product, user, asset_tag, at)?;
                ("license_pool", product.clone(), to_json(p))
            }
            Command::RecordServerDoc { asset_tag, doc } => {
                let v = self.assets.record_server_doc(asset_tag, doc.clone(), at)?;
                ("server_doc", asset_tag.to_string(), to_json(v))
            }
            Command::RegisterPort { site, port_id, kind, location } => {
                let p = self.assets.register_port(site, port_id, *kind, location)?;
                ("port", format!("{site}/{port_id}"), to_json(p))
            }
            Command::MarkPort { site, port_id, status, note } => {
                let p = self.assets.mark_port(site, port_id, *status, note, at)?;
                ("port", format!("{site}/{port_id}"), to_json(p))
            }
            Command::PlanPower { room, measured_avg_load } => {
                let p = self.assets.plan_power(room, *measured_avg_load, at)?;
                ("power_plan", room.clone(), to_json(p))
            }
            Command::ApprovePowerPlan { room } => {
                let p = self.assets.approve_power_plan(room, actor)?;
                ("power_plan", room.clone(), to_json(p))
            }

            Command::SubmitChange { draft } => {
                self.lifecycle.get(&draft.project_id)?;
                if let Some(v) = &draft.vendor_id {
                    self.procurement.vendor(v)?;
                }
                let c = self.changes.submit_change(draft.clone(), at)?;
                ("change", c.id.to_string(), to_json(c))
            }
            Command::CabDecide { change_id, verdict, head_signoff } => {
                let c = self.changes.cab_decide(change_id, verdict.clone(), head_signoff, at)?;
                ("change", change_id.to_string(), to_json(c))
            }
            Command::ScheduleChange { change_id, scheduled_at } => {
                let c = self.changes.check_schedule(change_id, *scheduled_at, at)?;
                if c.affected_departments.is_empty() {
                    return Err(Error::validation("affected_departments", "no department to notify"));
                }
                let c = self.changes.schedule_change(change_id, *scheduled_at, at)?.clone();
                notes.extend(self.notifier.notify_change_scheduled(&c, at)?);
                ("change", change_id.to_string(), to_json(&c))
            }
            Command::RecordTestRun { change_id, dummy_input, outcome, notes: run_notes } => {
                let c = self
                    .changes
                    .record_test_run(change_id, dummy_input, *outcome, at, actor, run_notes)?;
                ("change", change_id.to_string(), to_json(c))
            }
            Command::ApproveRelease { change_id, location } => {
                let c = self.changes.approve_release(change_id, at, actor, location)?.clone();
                notes.extend(self.notifier.notify_change_released(&c, at)?);
                ("change", change_id.to_string(), to_json(&c))
            }

            Command::OpenTicket { ticket } => {
                self.assets.asset(&ticket.asset_tag)?;
                let t = self.desk.open_ticket(ticket.clone(), at)?;
                ("ticket", t.id.to_string(), to_json(t))
            }
            Command::AnalyzeTicket { ticket_id, root_cause } => {
                let (t, suggestion) = self.desk.analyze(ticket_id, root_cause.clone(), at)?;
                (
                    "ticket",
                    ticket_id.to_string(),
                    json!({ "ticket": t, "suggestion": suggestion }),
                )
            }
            Command::RecordAttempt { ticket_id, resolution } => {
                let k = self.desk.record_failed_attempt(ticket_id, resolution)?;
                ("ticket", ticket_id.to_string(), to_json(k))
            }
            Command::ResolveTicket { ticket_id, resolution, permanence } => {
                let t = self.desk.resolve(ticket_id, resolution, *permanence, at)?;
                ("ticket", ticket_id.to_string(), to_json(t))
            }
            Command::EscalateTicket { ticket_id, level, reason } => {
                let t = self.desk.escalate(ticket_id, *level, reason, at)?;
                ("ticket", ticket_id.to_string(), to_json(t))
            }
            Command::AnnotateTicket { ticket_id, reason } => {
                let t = self.desk.annotate_unresolved(ticket_id, reason)?;
                ("ticket", ticket_id.to_string(), to_json(t))
            }
            Command::CloseTicket { ticket_id, closure } => {
                if let Closure::ProcurementApproved { reference } = closure {
                    let request = self.procurement.request(reference)?;
                    if request.overall_status() != OverallStatus::Approved {
                        return Err(Error::blocked(
                            "ticket",
                            ticket_id,
                            format!("procurement {reference} is not approved"),
                        ));
                    }
                }
                let t = self.desk.close_ticket(ticket_id, closure.clone(), at)?;
                ("ticket", ticket_id.to_string(), to_json(t))
            }

            Command::RecordSurvey { vendor_id, period, scores } => {
                self.procurement.vendor(vendor_id)?;
                let s = sla::record_survey(vendor_id, *period, scores)?;
                let response = to_json(&s);
                self.surveys.push(s);
                ("vendor", vendor_id.to_string(), response)
            }
            Command::EvaluateRenewal { vendor_id, year } => {
                let annual = self.annual_report(vendor_id, *year)?;
                let survey = self.year_survey(vendor_id, *year)?;
                let decision = sla::evaluate_renewal(&annual, &survey, &self.config.sla)?;
                let response = json!({ "decision": decision, "annual": annual, "survey": survey });
                self.renewals.insert(renewal_key(vendor_id, *year), decision);
                ("vendor", vendor_id.to_string(), response)
            }

            Command::RegisterServiceUser { service, recipient } => {
                let added = self.notifier.register_service_user(service, recipient.clone())?;
                let users: Vec<&Recipient> = self.notifier.service_users(service).collect();
                (
                    "service",
                    service.clone(),
                    json!({ "service": service, "added": added, "users": users }),
                )
            }
            Command::OpenOutage { service, vendor_id, start, alternate_endpoint } => {
                if let Some(v) = vendor_id {
                    self.procurement.vendor(v)?;
                }
                let (record, notice) = self.notifier.open_outage(
                    service,
                    vendor_id.clone(),
                    start.unwrap_or(at),
                    alternate_endpoint.clone(),
                    at,
                )?;
                notes.push(notice);
                ("outage", service.clone(), to_json(&record))
            }
            Command::CloseOutage { service, end } => {
                let (record, notice) = self.notifier.close_outage(service, end.unwrap_or(at), at)?;
                notes.push(notice);
                ("outage", service.clone(), to_json(&record))
            }
            Command::MarkDelivered { notification_id, accepted } => {
                let n = self.notifier.mark_delivered(notification_id, *accepted)?;
                ("notification", notification_id.to_string(), to_json(n))
            }
        };
        for n in &notes {
            derived.push(EventDraft::new("notification", &n.id, "notification_emitted", to_json(n)));
        }
        let mut events = Vec::with_capacity(derived.len() + 1);
        events.push(EventDraft::new(
            entity_type,
            entity_id,
            &command.name(),
            json!({ "command": command }),
        ));
        events.extend(derived);
        Ok(Executed {
            events,
            response,
            notifications: notes,
        })
    }

    /// Rebuilds state from logged batches.
    pub fn replay(config: EngineConfig, batches: &[Batch]) -> Result<Self> {
        let mut engine = Engine::new(config);
        for batch in batches {
            engine.apply_batch(batch)?;
        }
        Ok(engine)
    }

    /// Re-executes one logged batch and checks its derived events.
    pub fn apply_batch(&mut self, batch: &Batch) -> Result<()> {
        let corrupt = |offset: usize, message: String| Error::CorruptLog {
            line: batch.first_line + offset,
            message,
        };
        let head = &batch.events[0];
        let command: Command = head
            .payload
            .get("command")
            .cloned()
            .ok_or_else(|| corrupt(0, "batch head has no command".into()))
            .and_then(|v| serde_json::from_value(v).map_err(|e| corrupt(0, format!("bad command: {e}"))))?;
        let ctx = Ctx {
            actor: head.actor.clone(),
            at: head.ts,
        };
        let executed = self
            .execute(&command, &ctx)
            .map_err(|e| corrupt(0, format!("command {} no longer applies: {e}", command.name())))?;
        if executed.events.len() != batch.events.len() {
            return Err(corrupt(
                0,
                format!(
                    "batch has {} events, replay produced {}",
                    batch.events.len(),
                    executed.events.len()
                ),
            ));
        }
        for (i, (logged, produced)) in batch.events.iter().zip(&executed.events).enumerate() {
            let mut payload = logged.payload.clone();
            if i == 0 {
                if let Value::Object(map) = &mut payload {
                    map.remove("batch_len");
                }
            }
            if !same_event(logged, &payload, produced) {
                return Err(corrupt(i, format!("event {} differs from replay", logged.seq)));
            }
        }
        Ok(())
    }
}

fn same_event(logged: &AuditEvent, payload: &Value, produced: &EventDraft) -> bool {
    logged.entity_type == produced.entity_type
        && logged.entity_id == produced.entity_id
        && logged.event_kind == produced.event_kind
        && *payload == round_trip(&produced.payload)
}

/// The value as it reads back from the log text.
fn round_trip(value: &Value) -> Value {
    serde_json::from_str(&value.to_string()).expect("own output parses")
}

/// Every procurement-approval notification recipient set, for checks.
pub fn audiences(n: &Notification) -> BTreeSet<&str> {
    n.audience.iter().map(Recipient::as_str).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audit::frame;
    use crate::procurement::{ApprovalStatus, ApproverRole, Money};
    use crate::service_desk::{RiskLevel, Scope, TicketCategory};
    use chrono::{Duration, NaiveDate, TimeZone, Utc};

    fn t0() -> Timestamp {
        Utc.with_ymd_and_hms(2016, 7, 4, 9, 0, 0).unwrap()
    }

    fn run(engine: &mut Engine, log: &mut Vec<Batch>, cmd: Command, at: Timestamp) -> Result<Value> {
        let ctx = Ctx::new("tester", at);
        let executed = engine.execute(&cmd, &ctx)?;
        let first_seq = log.iter().map(|b| b.events.len() as u64).sum::<u64>() + 1;
        let first_line = first_seq as usize;
        let events = frame(first_seq, &ctx.actor, at, executed.events)?;
        // go through text so replay sees what a file would hold
        let events = events
            .into_iter()
            .map(|e| serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap())
            .collect();
        log.push(Batch { first_line, events });
        Ok(executed.response)
    }

    fn vendor_cmd() -> Command {
        Command::RegisterVendor {
            name: "Acme Systems".into(),
            contact: "+91-80-5550100".into(),
            categories: [(DeviceCategory::Laptops, true), (DeviceCategory::Servers, true)].into(),
        }
    }

    #[test]
    fn ticket_flow_and_replay() {
        let mut e = Engine::default();
        let mut log = Vec::new();
        run(&mut e, &mut log, vendor_cmd(), t0()).unwrap();
        let asset = NewAsset {
            device: "ThinkPad".into(),
            category: DeviceCategory::Laptops,
            vendor_id: "ven000001".into(),
            location: "HQ".into(),
            purchase_date: NaiveDate::from_ymd_opt(2016, 1, 1).unwrap(),
            warranty_months: 36,
        };
        run(&mut e, &mut log, Command::RegisterAsset { asset }, t0()).unwrap();
        let open = Command::OpenTicket {
            ticket: NewTicket {
                category: TicketCategory::Hardware,
                issue: "screen flicker".into(),
                username: "asha".into(),
                asset_tag: "AST000001".into(),
                risk_level: RiskLevel::Critical,
                scope: Scope::SingleUser,
            },
        };
        let r = run(&mut e, &mut log, open.clone(), t0()).unwrap();
        assert_eq!(r["id"], "hrd000001");
        let id = TicketId::parse("hrd000001").unwrap();
        run(&mut e, &mut log, Command::AnalyzeTicket { ticket_id: id.clone(), root_cause: None }, t0()).unwrap();
        run(
            &mut e,
            &mut log,
            Command::EscalateTicket { ticket_id: id.clone(), level: EscalationLevel::Expert, reason: "panel".into() },
            t0(),
        )
        .unwrap();
        assert_eq!(e.escalation_breaches(t0() + Duration::minutes(61)).len(), 1);

        // unknown asset fails without touching state
        let before = e.state_json();
        let mut bad = open.clone();
        if let Command::OpenTicket { ticket } = &mut bad {
            ticket.asset_tag = "AST999999".into();
        }
        assert!(matches!(run(&mut e, &mut log, bad, t0()), Err(Error::NotFound { .. })));
        assert_eq!(before, e.state_json());

        let replayed = Engine::replay(EngineConfig::default(), &log).unwrap();
        assert_eq!(replayed.state_json(), e.state_json());
        let again = Engine::replay(EngineConfig::default(), &log).unwrap();
        assert_eq!(again.state_json(), replayed.state_json());
    }

    #[test]
    fn tampered_derived_event_is_detected() {
        let mut e = Engine::default();
        let mut log = Vec::new();
        run(
            &mut e,
            &mut log,
            Command::RegisterServiceUser { service: "mail".into(), recipient: "+91-1".into() },
            t0(),
        )
        .unwrap();
        run(
            &mut e,
            &mut log,
            Command::OpenOutage { service: "mail".into(), vendor_id: None, start: None, alternate_endpoint: None },
            t0(),
        )
        .unwrap();
        assert_eq!(log[1].events.len(), 2);
        log[1].events[1].payload["body"] = json!("edited");
        match Engine::replay(EngineConfig::default(), &log) {
            Err(Error::CorruptLog { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected corruption, got {other:?}"),
        }
    }

    #[test]
    fn procurement_through_lop_records_strategy_evidence() {
        let mut e = Engine::default();
        let mut log = Vec::new();
        run(&mut e, &mut log, Command::CreateProject { name: "Rollout".into(), organization: "Org".into() }, t0()).unwrap();
        run(&mut e, &mut log, vendor_cmd(), t0()).unwrap();
        run(
            &mut e,
            &mut log,
            Command::RegisterVendor {
                name: "Beta Traders".into(),
                contact: "+91-80-5550200".into(),
                categories: [(DeviceCategory::Laptops, true)].into(),
            },
            t0(),
        )
        .unwrap();
        let prj = ProjectId::new("prj000001");
        run(&mut e, &mut log, Command::SubmitRequirement { project_id: prj.clone(), requirement_doc: "REQ-1".into() }, t0()).unwrap();
        let pid = ProcurementId::new("prc000001");
        for (v, price) in [("ven000001", 50_000_00), ("ven000002", 52_000_00)] {
            let line = QuotationLine {
                serial: 1,
                device: "Laptop".into(),
                device_type: DeviceCategory::Laptops,
                manufacturer: "Dell".into(),
                purpose: "staff".into(),
                warranty_months: 12,
                vendor_id: v.into(),
                authorized_flag: true,
                vendor_contact: "c".into(),
                location: "HQ".into(),
                quantity: 2,
                unit_price: Money::inr(price),
                quotation_person: "p".into(),
            };
            run(
                &mut e,
                &mut log,
                Command::AttachQuotation { procurement_id: pid.clone(), vendor_id: v.into(), lines: vec![line] },
                t0(),
            )
            .unwrap();
        }
        run(
            &mut e,
            &mut log,
            Command::SelectVendor { procurement_id: pid.clone(), vendor_id: "ven000001".into(), justification: "lowest".into() },
            t0(),
        )
        .unwrap();
        assert!(matches!(
            run(&mut e, &mut log, Command::CloseLop { procurement_id: pid.clone() }, t0()),
            Err(Error::Blocked { .. })
        ));
        for role in [ApproverRole::It, ApproverRole::ProjectManagement, ApproverRole::Operations, ApproverRole::FinanceHead] {
            run(
                &mut e,
                &mut log,
                Command::RecordApproval {
                    procurement_id: pid.clone(),
                    decision: ApprovalDecision {
                        role,
                        approver_name: format!("{role}"),
                        date: NaiveDate::from_ymd_opt(2016, 7, 4).unwrap(),
                        status: ApprovalStatus::Approved,
                        reason: String::new(),
                    },
                },
                t0(),
            )
            .unwrap();
        }
        let approval = e
            .notifier()
            .for_entity(crate::notifications::NotificationKind::VendorApproval, "prc000001")
            .next()
            .unwrap();
        assert_eq!(audiences(approval), ["finance", "management", "vendor:ven000001 <+91-80-5550100>"].into());
        run(&mut e, &mut log, Command::CloseLop { procurement_id: pid.clone() }, t0()).unwrap();
        let gate = e.lifecycle().get(&prj).unwrap().gate(Phase::Strategy).clone();
        assert!(gate.has(EvidenceKind::ProcurementClosure, &"LOP:prc000001".into()));
        let replayed = Engine::replay(EngineConfig::default(), &log).unwrap();
        assert_eq!(replayed.state_json(), e.state_json());
    }

    #[test]
    fn commands_round_trip_through_json() {
        let cmd = Command::ScheduleChange { change_id: "chg000001".into(), scheduled_at: t0() };
        let text = serde_json::to_string(&cmd).unwrap();
        assert!(text.contains("\"type\":\"schedule_change\""));
        assert_eq!(serde_json::from_str::<Command>(&text).unwrap(), cmd);
        assert_eq!(cmd.name(), "schedule_change");
    }
}
