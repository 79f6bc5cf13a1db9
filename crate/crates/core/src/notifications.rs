//! Automated messages and outage records.
//!
//! Emission is idempotent per (kind, entity, audience): asking twice for the
//! same message returns the one already created. Delivery happens through a
//! [`NotificationSink`] outside the engine; the outcome is fed back with
//! [`Notifier::mark_delivered`].

use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use crate::change::{ChangeRequest, ChangeState};
use crate::common::{Counter, NotificationId, ProcurementId, Recipient, Timestamp, VendorId};
use crate::error::{require_text, Error, Result};
use crate::procurement::{OverallStatus, ProcurementRequest, Vendor};

/// Restoration notices later than this after the outage end are flagged.
pub const RESTORATION_NOTICE_LIMIT: Duration = Duration::minutes(15);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NotificationKind {
    ChangeScheduled,
    ChangeReleased,
    VendorApproval,
    VendorAck,
    OutageStart,
    OutageEnd,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub id: NotificationId,
    pub kind: NotificationKind,
    pub entity_id: String,
    pub audience: Vec<Recipient>,
    pub subject: String,
    pub body: String,
    pub created_at: Timestamp,
    pub delivered: bool,
    pub late: bool,
    pub acknowledged_at: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutageRecord {
    pub service: String,
    pub vendor_id: Option<VendorId>,
    pub start: Timestamp,
    pub end: Option<Timestamp>,
    pub alternate_endpoint: Option<String>,
    pub start_notice: NotificationId,
    pub end_notice: Option<NotificationId>,
}

impl OutageRecord {
    pub fn duration(&self) -> Option<Duration> {
        self.end.map(|e| e - self.start)
    }
}

/// Management and finance mailboxes copied on vendor approvals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CopyAddresses {
    pub management: Recipient,
    pub finance: Recipient,
}

impl Default for CopyAddresses {
    fn default() -> Self {
        Self {
            management: "management".into(),
            finance: "finance".into(),
        }
    }
}

type DedupKey = (NotificationKind, String, Vec<Recipient>);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Notifier {
    copies: CopyAddresses,
    notifications: BTreeMap<NotificationId, Notification>,
    #[serde(skip)]
    index: BTreeMap<DedupKey, NotificationId>,
    service_users: BTreeMap<String, BTreeSet<Recipient>>,
    outages: Vec<OutageRecord>,
    ids: Counter,
}

impl Default for Notifier {
    fn default() -> Self {
        Self::new(CopyAddresses::default())
    }
}

impl Notifier {
    pub fn new(copies: CopyAddresses) -> Self {
        Self {
            copies,
            notifications: BTreeMap::new(),
            index: BTreeMap::new(),
            service_users: BTreeMap::new(),
            outages: Vec::new(),
            ids: Counter::new("ntf", 6),
        }
    }

    pub fn get(&self, id: &NotificationId) -> Result<&Notification> {
        self.notifications
            .get(id)
            .ok_or_else(|| Error::not_found("notification", id))
    }

    pub fn notifications(&self) -> impl Iterator<Item = &Notification> {
        self.notifications.values()
    }

    pub fn for_entity<'a>(&'a self, kind: NotificationKind, entity: &'a str) -> impl Iterator<Item = &'a Notification> {
        self.notifications
            .values()
            .filter(move |n| n.kind == kind && n.entity_id == entity)
    }

    pub fn outages(&self) -> &[OutageRecord] {
        &self.outages
    }

    pub fn open_outage_for(&self, service: &str) -> Option<&OutageRecord> {
        self.outages.iter().find(|o| o.service == service && o.end.is_none())
    }

    pub fn service_users(&self, service: &str) -> impl Iterator<Item = &Recipient> {
        self.service_users.get(service).into_iter().flatten()
    }

    fn emit(
        &mut self,
        kind: NotificationKind,
        entity_id: &str,
        audience: Vec<Recipient>,
        subject: String,
        body: String,
        at: Timestamp,
    ) -> Result<&Notification> {
        if audience.is_empty() {
            return Err(Error::validation("audience", "notification needs at least one recipient"));
        }
        debug_assert!(body.contains(entity_id));
        let key = (kind, entity_id.to_string(), audience.clone());
        if let Some(existing) = self.index.get(&key) {
            return Ok(&self.notifications[existing]);
        }
        let id = NotificationId::new(self.ids.next()?);
        self.index.insert(key, id.clone());
        let n = Notification {
            id: id.clone(),
            kind,
            entity_id: entity_id.to_string(),
            audience,
            subject,
            body,
            created_at: at,
            delivered: false,
            late: false,
            acknowledged_at: None,
        };
        Ok(self.notifications.entry(id).or_insert(n))
    }

    /// Rebuilds the dedup index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .notifications
            .values()
            .map(|n| ((n.kind, n.entity_id.clone(), n.audience.clone()), n.id.clone()))
            .collect();
    }

    pub fn register_service_user(&mut self, service: &str, recipient: Recipient) -> Result<bool> {
        require_text("service", service)?;
        require_text("recipient", recipient.as_str())?;
        Ok(self
            .service_users
            .entry(service.to_string())
            .or_default()
            .insert(recipient))
    }

    pub fn check_change_scheduled(change: &ChangeRequest) -> Result<()> {
        if change.state != ChangeState::Scheduled {
            return Err(Error::invalid_state("change", &change.id, change.state, "announce schedule"));
        }
        if change.affected_departments.is_empty() {
            return Err(Error::validation("affected_departments", "no department to notify"));
        }
        Ok(())
    }

    /// One message per affected department, naming the change target.
    pub fn notify_change_scheduled(&mut self, change: &ChangeRequest, at: Timestamp) -> Result<Vec<Notification>> {
        Self::check_change_scheduled(change)?;
        let when = change.scheduled_at.expect("scheduled change has a time");
        let mut out = Vec::new();
        for dept in &change.affected_departments {
            let subject = format!("Scheduled change {} on {}", change.id, change.target);
            let body = format!(
                "Change {} on {} is scheduled for {}. Expected downtime {} minutes. Department: {}.",
                change.id,
                change.target,
                when.format("%Y-%m-%d %H:%M UTC"),
                change.downtime_estimate_minutes,
                dept
            );
            let n = self.emit(
                NotificationKind::ChangeScheduled,
                change.id.as_str(),
                vec![Recipient::new(dept.clone())],
                subject,
                body,
                at,
            )?;
            out.push(n.clone());
        }
        Ok(out)
    }

    pub fn notify_change_released(&mut self, change: &ChangeRequest, at: Timestamp) -> Result<Vec<Notification>> {
        let release = change
            .release
            .as_ref()
            .ok_or_else(|| Error::invalid_state("change", &change.id, change.state, "announce release"))?;
        let mut out = Vec::new();
        for dept in &change.affected_departments {
            let subject = format!("Change {} released", change.id);
            let body = format!(
                "Change {} on {} is live. Find it at {}.",
                change.id, change.target, release.location
            );
            let n = self.emit(
                NotificationKind::ChangeReleased,
                change.id.as_str(),
                vec![Recipient::new(dept.clone())],
                subject,
                body,
                at,
            )?;
            out.push(n.clone());
        }
        Ok(out)
    }

    /// Acknowledges a vendor's quotation.
    pub fn notify_quotation_received(
        &mut self,
        request: &ProcurementId,
        vendor: &Vendor,
        at: Timestamp,
    ) -> Result<Notification> {
        let subject = format!("Quotation received for {request}");
        let body = format!("Your quotation for procurement {request} has been received and is under review.");
        self.emit(
            NotificationKind::VendorAck,
            request.as_str(),
            vec![vendor.recipient()],
            subject,
            body,
            at,
        )
        .cloned()
    }

    pub fn notify_vendor_approval(
        &mut self,
        request: &ProcurementRequest,
        vendor: &Vendor,
        at: Timestamp,
    ) -> Result<Notification> {
        if request.overall_status() != OverallStatus::Approved {
            return Err(Error::invalid_state(
                "procurement",
                &request.id,
                format!("{:?}", request.overall_status()),
                "notify vendor",
            ));
        }
        let audience = vec![
            vendor.recipient(),
            self.copies.management.clone(),
            self.copies.finance.clone(),
        ];
        let subject = format!("Purchase approved: {}", request.id);
        let body = format!(
            "Procurement {} has been approved for {}. Please proceed with delivery.",
            request.id, vendor.name
        );
        self.emit(NotificationKind::VendorApproval, request.id.as_str(), audience, subject, body, at)
            .cloned()
    }

    /// Records that the vendor saw the approval. A second ack keeps the first date.
    pub fn record_vendor_ack(&mut self, request: &ProcurementId, at: Timestamp) -> Result<&Notification> {
        let id = self
            .for_entity(NotificationKind::VendorApproval, request.as_str())
            .map(|n| n.id.clone())
            .next()
            .ok_or_else(|| Error::not_found("vendor approval notification", request))?;
        let n = self.notifications.get_mut(&id).expect("indexed");
        if n.acknowledged_at.is_none() {
            n.acknowledged_at = Some(at);
        }
        Ok(n)
    }

    pub fn check_open_outage(&self, service: &str) -> Result<()> {
        require_text("service", service)?;
        if self.open_outage_for(service).is_some() {
            return Err(Error::duplicate("open outage", service));
        }
        if self.service_users(service).next().is_none() {
            return Err(Error::validation("service", format!("no registered users for {service}")));
        }
        Ok(())
    }

    pub fn open_outage(
        &mut self,
        service: &str,
        vendor_id: Option<VendorId>,
        start: Timestamp,
        alternate_endpoint: Option<String>,
        now: Timestamp,
    ) -> Result<(OutageRecord, Notification)> {
        self.check_open_outage(service)?;
        let alternate_endpoint = alternate_endpoint.filter(|s| !s.trim().is_empty());
        let audience: Vec<Recipient> = self.service_users(service).cloned().collect();
        let started = self.outages.iter().filter(|o| o.service == service).count() + 1;
        let entity = format!("{service}#{started}");
        let mut body = format!(
            "Outage {entity}: {service} is unavailable since {}.",
            start.format("%Y-%m-%d %H:%M UTC")
        );
        if let Some(alt) = &alternate_endpoint {
            body.push_str(&format!(" Please use {alt} meanwhile."));
        }
        let notice = self
            .emit(NotificationKind::OutageStart, &entity, audience, format!("{service} outage"), body, now)?
            .clone();
        let record = OutageRecord {
            service: service.to_string(),
            vendor_id,
            start,
            end: None,
            alternate_endpoint,
            start_notice: notice.id.clone(),
            end_notice: None,
        };
        self.outages.push(record.clone());
        Ok((record, notice))
    }

    pub fn check_close_outage(&self, service: &str, end: Timestamp) -> Result<&OutageRecord> {
        let open = self
            .open_outage_for(service)
            .ok_or_else(|| Error::not_found("open outage", service))?;
        if end < open.start {
            return Err(Error::validation("end", "outage cannot end before it started"));
        }
        Ok(open)
    }

    /// Closes the outage at `end`; the restoration notice goes out at `now`
    /// and is flagged late past the limit.
    pub fn close_outage(&mut self, service: &str, end: Timestamp, now: Timestamp) -> Result<(OutageRecord, Notification)> {
        self.check_close_outage(service, end)?;
        let pos = self
            .outages
            .iter()
            .position(|o| o.service == service && o.end.is_none())
            .expect("checked");
        let start_entity = self.notifications[&self.outages[pos].start_notice].entity_id.clone();
        let audience: Vec<Recipient> = self.service_users(service).cloned().collect();
        let minutes = (end - self.outages[pos].start).num_minutes();
        let body = format!(
            "Outage {start_entity}: {service} is restored as of {} after {minutes} minutes.",
            end.format("%Y-%m-%d %H:%M UTC")
        );
        let late = now - end > RESTORATION_NOTICE_LIMIT;
        let id = self
            .emit(
                NotificationKind::OutageEnd,
                &start_entity,
                audience,
                format!("{service} restored"),
                body,
                now,
            )?
            .id
            .clone();
        let notice = self.notifications.get_mut(&id).expect("just emitted");
        notice.late = late;
        let notice = notice.clone();
        let record = &mut self.outages[pos];
        record.end = Some(end);
        record.end_notice = Some(id);
        Ok((record.clone(), notice))
    }

    pub fn mark_delivered(&mut self, id: &NotificationId, accepted: bool) -> Result<&Notification> {
        let n = self
            .notifications
            .get_mut(id)
            .ok_or_else(|| Error::not_found("notification", id))?;
        n.delivered = accepted;
        Ok(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeliveryStatus {
    Accepted,
    Failed,
}

pub trait NotificationSink: Send + Sync {
    fn deliver(&self, recipient: &Recipient, subject: &str, body: &str) -> DeliveryStatus;
}

/// Keeps every delivered message in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    delivered: Mutex<Vec<(Recipient, String, String)>>,
}

impl MemorySink {
    pub fn delivered(&self) -> Vec<(Recipient, String, String)> {
        self.delivered.lock().expect("sink lock").clone()
    }
}

impl NotificationSink for MemorySink {
    fn deliver(&self, recipient: &Recipient, subject: &str, body: &str) -> DeliveryStatus {
        self.delivered
            .lock()
            .expect("sink lock")
            .push((recipient.clone(), subject.to_string(), body.to_string()));
        DeliveryStatus::Accepted
    }
}

/// Appends one JSON object per delivered message.
#[derive(Debug)]
pub struct FileSink {
    path: PathBuf,
}

impl FileSink {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }
}

impl NotificationSink for FileSink {
    fn deliver(&self, recipient: &Recipient, subject: &str, body: &str) -> DeliveryStatus {
        let line = serde_json::json!({ "recipient": recipient, "subject": subject, "body": body });
        let written = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .and_then(|mut f| writeln!(f, "{line}"));
        match written {
            Ok(()) => DeliveryStatus::Accepted,
            Err(_) => DeliveryStatus::Failed,
        }
    }
}

/// Sends a notification to each recipient; delivered only if all accept.
pub fn deliver(sink: &dyn NotificationSink, n: &Notification) -> bool {
    n.audience
        .iter()
        .map(|r| sink.deliver(r, &n.subject, &n.body))
        .fold(true, |ok, s| ok && s == DeliveryStatus::Accepted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn t0() -> Timestamp {
        Utc.with_ymd_and_hms(2016, 11, 1, 9, 0, 0).unwrap()
    }

    fn notifier_with_users() -> Notifier {
        let mut n = Notifier::default();
        n.register_service_user("netbanking", "+91-98000-00001".into()).unwrap();
        n.register_service_user("netbanking", "+91-98000-00002".into()).unwrap();
        n
    }

    #[test]
    fn outage_start_carries_alternate() {
        let mut n = notifier_with_users();
        let (rec, notice) = n
            .open_outage("netbanking", None, t0(), Some("alt.example".into()), t0())
            .unwrap();
        assert_eq!(rec.end, None);
        assert_eq!(notice.kind, NotificationKind::OutageStart);
        assert_eq!(notice.audience.len(), 2);
        assert!(notice.body.contains("alt.example"));
        assert!(matches!(
            n.open_outage("netbanking", None, t0(), None, t0()),
            Err(Error::Duplicate { .. })
        ));
    }

    #[test]
    fn outage_without_users_is_rejected() {
        let mut n = Notifier::default();
        assert!(matches!(
            n.open_outage("mail", None, t0(), None, t0()),
            Err(Error::Validation { .. })
        ));
        assert!(n.outages().is_empty());
        assert_eq!(n.notifications().count(), 0);
    }

    #[test]
    fn restoration_notice_lateness() {
        let mut n = notifier_with_users();
        n.open_outage("netbanking", None, t0(), None, t0()).unwrap();
        let end = t0() + Duration::minutes(40);
        let (rec, notice) = n.close_outage("netbanking", end, end + Duration::minutes(5)).unwrap();
        assert_eq!(rec.duration(), Some(Duration::minutes(40)));
        assert!(!notice.late);

        n.open_outage("netbanking", None, t0() + Duration::hours(2), None, t0()).unwrap();
        let end = t0() + Duration::hours(3);
        let (_, notice) = n.close_outage("netbanking", end, end + Duration::minutes(20)).unwrap();
        assert!(notice.late);

        n.open_outage("netbanking", None, t0() + Duration::hours(4), None, t0()).unwrap();
        let end = t0() + Duration::hours(5);
        let (_, notice) = n.close_outage("netbanking", end, end + RESTORATION_NOTICE_LIMIT).unwrap();
        assert!(!notice.late, "exactly 15 minutes is on time");

        assert!(matches!(n.close_outage("unknown", end, end), Err(Error::NotFound { .. })));
        for o in n.outages() {
            let starts = n.for_entity(NotificationKind::OutageStart, &n.get(&o.start_notice).unwrap().entity_id).count();
            let ends = n.for_entity(NotificationKind::OutageEnd, &n.get(&o.start_notice).unwrap().entity_id).count();
            assert_eq!((starts, ends), (1, 1));
        }
    }

    #[test]
    fn close_before_start_is_rejected() {
        let mut n = notifier_with_users();
        n.open_outage("netbanking", None, t0(), None, t0()).unwrap();
        assert!(matches!(
            n.close_outage("netbanking", t0() - Duration::minutes(1), t0()),
            Err(Error::Validation { .. })
        ));
        assert!(n.open_outage_for("netbanking").is_some());
    }

    #[test]
    fn emission_is_idempotent() {
        let mut n = Notifier::default();
        let a = n
            .emit(NotificationKind::VendorAck, "prc000001", vec!["v".into()], "s".into(), "prc000001".into(), t0())
            .unwrap()
            .id
            .clone();
        let b = n
            .emit(NotificationKind::VendorAck, "prc000001", vec!["v".into()], "s".into(), "prc000001".into(), t0())
            .unwrap()
            .id
            .clone();
        assert_eq!(a, b);
        assert_eq!(n.notifications().count(), 1);
        let mut copy: Notifier = serde_json::from_str(&serde_json::to_string(&n).unwrap()).unwrap();
        copy.reindex();
        copy.emit(NotificationKind::VendorAck, "prc000001", vec!["v".into()], "s".into(), "prc000001".into(), t0())
            .unwrap();
        assert_eq!(copy.notifications().count(), 1);
    }

    #[test]
    fn memory_sink_collects_each_recipient() {
        let mut n = notifier_with_users();
        let (_, notice) = n.open_outage("netbanking", None, t0(), None, t0()).unwrap();
        let sink = MemorySink::default();
        assert!(deliver(&sink, &notice));
        assert_eq!(sink.delivered().len(), 2);
    }

    #[test]
    fn file_sink_writes_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let sink = FileSink::new(dir.path().join("out.jsonl"));
        assert_eq!(sink.deliver(&"ops".into(), "hello", "body"), DeliveryStatus::Accepted);
        let text = std::fs::read_to_string(dir.path().join("out.jsonl")).unwrap();
        let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(v["recipient"], "ops");
        let bad = FileSink::new(dir.path().join("missing/dir/out.jsonl"));
        assert_eq!(bad.deliver(&"ops".into(), "s", "b"), DeliveryStatus::Failed);
    }
}
