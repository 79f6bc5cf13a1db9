//! Procurement: requirement, competing vendor quotations, four-role approval
//! and LOP closure.
//!
//! Quotation sheets travel as CSV with the management procurement-sheet
//! header (see [`QUOTATION_CSV_HEADER`]). Money is held in integer minor
//! units.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::common::{ActorId, Counter, DocRef, ProcurementId, Recipient, Timestamp, VendorId};
use crate::error::{require_text, Error, Result};
use crate::lifecycle::{Phase, Project};
use crate::common::ProjectId;

pub const DEFAULT_MIN_QUOTATIONS: usize = 2;

/// Product category a vendor supplies ("Supplier for").
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DeviceCategory {
    NetworkingDevice,
    Laptops,
    Desktops,
    Servers,
    Storage,
    SecurityDevice,
}

impl DeviceCategory {
    pub const ALL: [DeviceCategory; 6] = [
        DeviceCategory::NetworkingDevice,
        DeviceCategory::Laptops,
        DeviceCategory::Desktops,
        DeviceCategory::Servers,
        DeviceCategory::Storage,
        DeviceCategory::SecurityDevice,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DeviceCategory::NetworkingDevice => "Networking Device",
            DeviceCategory::Laptops => "Laptops",
            DeviceCategory::Desktops => "Desktops",
            DeviceCategory::Servers => "Servers",
            DeviceCategory::Storage => "Storage",
            DeviceCategory::SecurityDevice => "Security Device",
        }
    }

    pub fn is_server_like(self) -> bool {
        matches!(self, DeviceCategory::Servers)
    }
}

impl fmt::Display for DeviceCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DeviceCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted: String = s.chars().filter(|c| c.is_alphanumeric()).collect();
        DeviceCategory::ALL
            .into_iter()
            .find(|c| {
                let label: String = c.label().chars().filter(|ch| ch.is_alphanumeric()).collect();
                label.eq_ignore_ascii_case(&wanted)
            })
            .ok_or_else(|| Error::validation("device_type", format!("unknown category {s:?}")))
    }
}

/// An amount in minor currency units.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Money {
    pub minor: i64,
    pub currency: String,
}

impl Money {
    pub fn inr(minor: i64) -> Self {
        Money { minor, currency: "INR".to_string() }
    }

    /// Parses `"1250"`, `"1250.5"` or `"1,250.50"` with at most two decimals.
    pub fn parse(text: &str, currency: &str) -> Result<Self> {
        let bad = || Error::validation("unit_price", format!("invalid amount {text:?}"));
        let cleaned: String = text.trim().chars().filter(|c| *c != ',').collect();
        let (whole, frac) = match cleaned.split_once('.') {
            Some((w, f)) => (w, f),
            None => (cleaned.as_str(), ""),
        };
        if whole.is_empty() || frac.len() > 2 {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let digits = whole.trim_start_matches('-');
        if !digits.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let units: i64 = digits.parse().map_err(|_| bad())?;
        let cents: i64 = format!("{frac:0<2}").parse().map_err(|_| bad())?;
        let minor = units.checked_mul(100).and_then(|u| u.checked_add(cents)).ok_or_else(bad)?;
        Ok(Money {
            minor: if negative { -minor } else { minor },
            currency: currency.to_string(),
        })
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.minor < 0 { "-" } else { "" };
        let abs = self.minor.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vendor {
    pub id: VendorId,
    pub name: String,
    pub contact: String,
    /// Categories the vendor supplies, with the authorized-dealer flag for each.
    pub categories: BTreeMap<DeviceCategory, bool>,
}

impl Vendor {
    pub fn is_authorized_for(&self, category: DeviceCategory) -> bool {
        self.categories.get(&category).copied().unwrap_or(false)
    }

    pub fn authorized_for(&self) -> BTreeSet<DeviceCategory> {
        self.categories
            .iter()
            .filter(|(_, ok)| **ok)
            .map(|(c, _)| *c)
            .collect()
    }

    pub fn recipient(&self) -> Recipient {
        Recipient::new(format!("vendor:{} <{}>", self.id, self.contact))
    }
}

/// One row of the procurement sheet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotationLine {
    pub serial: u32,
    pub device: String,
    pub device_type: DeviceCategory,
    pub manufacturer: String,
    pub purpose: String,
    pub warranty_months: i64,
    pub vendor_id: VendorId,
    pub authorized_flag: bool,
    pub vendor_contact: String,
    pub location: String,
    pub quantity: i64,
    pub unit_price: Money,
    pub quotation_person: String,
}

/// Procurement-sheet header, spellings preserved.
pub const QUOTATION_CSV_HEADER: [&str; 13] = [
    "Sl.",
    "Device",
    "Device Type",
    "Manufacturer",
    "Propose",
    "Warranty",
    "Vendor",
    "Authorized or not",
    "Vendor contact no",
    "Location",
    "Quantity",
    "Price (in RS)",
    "Quotation person",
];

/// Sheet column → [`QuotationLine`] field.
pub const QUOTATION_COLUMNS: [(&str, &str); 13] = [
    ("Sl.", "serial"),
    ("Device", "device"),
    ("Device Type", "device_type"),
    ("Manufacturer", "manufacturer"),
    ("Propose", "purpose"),
    ("Warranty", "warranty_months"),
    ("Vendor", "vendor_id"),
    ("Authorized or not", "authorized_flag"),
    ("Vendor contact no", "vendor_contact"),
    ("Location", "location"),
    ("Quantity", "quantity"),
    ("Price (in RS)", "unit_price"),
    ("Quotation person", "quotation_person"),
];

const LONG_PERSON_COLUMN: &str = "Quotation person (File by vendor)";

impl QuotationLine {
    pub fn total(&self) -> Result<i64> {
        self.quantity
            .checked_mul(self.unit_price.minor)
            .ok_or_else(|| Error::validation("unit_price", "line total overflows"))
    }

    pub fn validate(&self) -> Result<()> {
        let row = self.serial;
        if self.quantity <= 0 {
            return Err(Error::validation("quantity", format!("line {row}: must be > 0")));
        }
        if self.unit_price.minor < 0 {
            return Err(Error::validation("unit_price", format!("line {row}: must be >= 0")));
        }
        if self.warranty_months < 0 {
            return Err(Error::validation("warranty_months", format!("line {row}: must be >= 0")));
        }
        require_text("device", &self.device)?;
        self.total().map(|_| ())
    }
}

fn parse_flag(text: &str) -> Result<bool> {
    match text.trim().to_ascii_lowercase().as_str() {
        "yes" | "y" | "true" | "authorized" | "1" => Ok(true),
        "no" | "n" | "false" | "not authorized" | "unauthorized" | "0" => Ok(false),
        other => Err(Error::validation("authorized_flag", format!("expected yes/no, got {other:?}"))),
    }
}

fn parse_int(field: &str, text: &str) -> Result<i64> {
    let t = text.trim();
    let t = t
        .strip_suffix("months")
        .or_else(|| t.strip_suffix("month"))
        .unwrap_or(t)
        .trim();
    t.parse()
        .map_err(|_| Error::validation(field, format!("expected an integer, got {text:?}")))
}

/// Reads a quotation sheet. The header row must match [`QUOTATION_CSV_HEADER`].
pub fn parse_quotation_csv(text: &str, currency: &str) -> Result<Vec<QuotationLine>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::validation("csv", e.to_string()))?
        .clone();
    let header_ok = headers.len() == QUOTATION_CSV_HEADER.len()
        && headers
            .iter()
            .zip(QUOTATION_CSV_HEADER)
            .enumerate()
            .all(|(i, (got, want))| got == want || (i == 12 && got == LONG_PERSON_COLUMN));
    if !header_ok {
        return Err(Error::validation(
            "csv",
            format!("header must be {:?}", QUOTATION_CSV_HEADER.join(",")),
        ));
    }
    let mut lines = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::validation("csv", format!("row {}: {e}", i + 2)))?;
        let get = |idx: usize| record.get(idx).unwrap_or("").to_string();
        let line = QuotationLine {
            serial: parse_int("serial", &get(0))?
                .try_into()
                .map_err(|_| Error::validation("serial", "out of range"))?,
            device: get(1),
            device_type: get(2).parse()?,
            manufacturer: get(3),
            purpose: get(4),
            warranty_months: parse_int("warranty_months", &get(5))?,
            vendor_id: VendorId::new(get(6)),
            authorized_flag: parse_flag(&get(7))?,
            vendor_contact: get(8),
            location: get(9),
            quantity: parse_int("quantity", &get(10))?,
            unit_price: Money::parse(&get(11), currency)?,
            quotation_person: get(12),
        };
        line.validate()?;
        lines.push(line);
    }
    Ok(lines)
}

pub fn write_quotation_csv(lines: &[QuotationLine]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(QUOTATION_CSV_HEADER).expect("in-memory write");
    for l in lines {
        writer
            .write_record([
                l.serial.to_string(),
                l.device.clone(),
                l.device_type.label().to_string(),
                l.manufacturer.clone(),
                l.purpose.clone(),
                l.warranty_months.to_string(),
                l.vendor_id.to_string(),
                if l.authorized_flag { "Yes" } else { "No" }.to_string(),
                l.vendor_contact.clone(),
                l.location.clone(),
                l.quantity.to_string(),
                l.unit_price.to_string(),
                l.quotation_person.clone(),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("flush")).expect("utf8 csv")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quotation {
    pub vendor_id: VendorId,
    pub lines: Vec<QuotationLine>,
    pub attached_at: Timestamp,
}

impl Quotation {
    /// Σ quantity × unit_price in minor units.
    pub fn total(&self) -> Result<i64> {
        self.lines.iter().try_fold(0i64, |acc, l| {
            acc.checked_add(l.total()?)
                .ok_or_else(|| Error::validation("unit_price", "quotation total overflows"))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ApproverRole {
    #[serde(rename = "IT")]
    It,
    ProjectManagement,
    Operations,
    FinanceHead,
}

impl ApproverRole {
    pub const ALL: [ApproverRole; 4] = [
        ApproverRole::It,
        ApproverRole::ProjectManagement,
        ApproverRole::Operations,
        ApproverRole::FinanceHead,
    ];
}

impl fmt::Display for ApproverRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ApproverRole::It => "IT",
            ApproverRole::ProjectManagement => "ProjectManagement",
            ApproverRole::Operations => "Operations",
            ApproverRole::FinanceHead => "FinanceHead",
        })
    }
}

impl FromStr for ApproverRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted: String = s.chars().filter(|c| c.is_alphanumeric()).collect();
        ApproverRole::ALL
            .into_iter()
            .find(|r| r.to_string().eq_ignore_ascii_case(&wanted))
            .ok_or_else(|| Error::validation("role", format!("unknown approver role {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApprovalStatus {
    Approved,
    NotApproved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApprovalDecision {
    pub role: ApproverRole,
    pub approver_name: String,
    pub date: NaiveDate,
    pub status: ApprovalStatus,
    #[serde(default)]
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OverallStatus {
    Pending,
    Approved,
    NotApproved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CopyTarget {
    Vendor,
    Management,
    Finance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcurementRequest {
    pub id: ProcurementId,
    pub project_id: ProjectId,
    pub requirement_doc: DocRef,
    pub quotations: Vec<Quotation>,
    pub selected_vendor: Option<VendorId>,
    pub selection_justification: Option<String>,
    pub approvals: BTreeMap<ApproverRole, ApprovalDecision>,
    pub lop_closed: bool,
    pub lop_closed_by: Option<ActorId>,
    pub lop_closed_at: Option<Timestamp>,
    pub copies_routed: BTreeSet<CopyTarget>,
    pub created_at: Timestamp,
}

impl ProcurementRequest {
    pub fn overall_status(&self) -> OverallStatus {
        if self
            .approvals
            .values()
            .any(|d| d.status == ApprovalStatus::NotApproved)
        {
            OverallStatus::NotApproved
        } else if ApproverRole::ALL.iter().all(|r| {
            self.approvals
                .get(r)
                .is_some_and(|d| d.status == ApprovalStatus::Approved)
        }) {
            OverallStatus::Approved
        } else {
            OverallStatus::Pending
        }
    }

    pub fn quotation(&self, vendor: &VendorId) -> Option<&Quotation> {
        self.quotations.iter().find(|q| &q.vendor_id == vendor)
    }

    /// The quotation with the smallest total; ties go to the earliest attached.
    pub fn lowest_quotation(&self) -> Result<Option<&Quotation>> {
        let mut best: Option<(&Quotation, i64)> = None;
        for q in &self.quotations {
            let total = q.total()?;
            if best.is_none_or(|(_, b)| total < b) {
                best = Some((q, total));
            }
        }
        Ok(best.map(|(q, _)| q))
    }

    fn frozen(&self) -> bool {
        !self.approvals.is_empty()
    }
}

/// Vendors and procurement requests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Procurement {
    min_quotations: usize,
    vendors: BTreeMap<VendorId, Vendor>,
    requests: BTreeMap<ProcurementId, ProcurementRequest>,
    vendor_ids: Counter,
    request_ids: Counter,
}

impl Default for Procurement {
    fn default() -> Self {
        Self::new(DEFAULT_MIN_QUOTATIONS)
    }
}

/// What [`Procurement::record_approval`] changed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApprovalOutcome {
    pub overall: OverallStatus,
    /// True when this decision completed the four approvals.
    pub became_approved: bool,
}

impl Procurement {
    pub fn new(min_quotations: usize) -> Self {
        Self {
            min_quotations: min_quotations.max(1),
            vendors: BTreeMap::new(),
            requests: BTreeMap::new(),
            vendor_ids: Counter::new("ven", 6),
            request_ids: Counter::new("prc", 6),
        }
    }

    pub fn min_quotations(&self) -> usize {
        self.min_quotations
    }

    pub fn vendor(&self, id: &VendorId) -> Result<&Vendor> {
        self.vendors.get(id).ok_or_else(|| Error::not_found("vendor", id))
    }

    pub fn vendors(&self) -> impl Iterator<Item = &Vendor> {
        self.vendors.values()
    }

    pub fn request(&self, id: &ProcurementId) -> Result<&ProcurementRequest> {
        self.requests
            .get(id)
            .ok_or_else(|| Error::not_found("procurement", id))
    }

    pub fn requests(&self) -> impl Iterator<Item = &ProcurementRequest> {
        self.requests.values()
    }

    fn request_mut(&mut self, id: &ProcurementId) -> Result<&mut ProcurementRequest> {
        self.requests
            .get_mut(id)
            .ok_or_else(|| Error::not_found("procurement", id))
    }

    pub fn register_vendor(
        &mut self,
        name: &str,
        contact: &str,
        categories: BTreeMap<DeviceCategory, bool>,
    ) -> Result<&Vendor> {
        require_text("name", name)?;
        require_text("contact", contact)?;
        if self.vendors.values().any(|v| v.name == name) {
            return Err(Error::duplicate("vendor", name));
        }
        let id = VendorId::new(self.vendor_ids.next()?);
        let vendor = Vendor {
            id: id.clone(),
            name: name.to_string(),
            contact: contact.to_string(),
            categories,
        };
        Ok(self.vendors.entry(id).or_insert(vendor))
    }

    pub fn submit_requirement(
        &mut self,
        project: &Project,
        requirement_doc: DocRef,
        at: Timestamp,
    ) -> Result<&ProcurementRequest> {
        require_text("requirement_doc", requirement_doc.as_str())?;
        if project.current_phase != Phase::Strategy {
            return Err(Error::OutOfOrder {
                current: project.current_phase,
                requested: Phase::Strategy,
            });
        }
        let id = ProcurementId::new(self.request_ids.next()?);
        let request = ProcurementRequest {
            id: id.clone(),
            project_id: project.id.clone(),
            requirement_doc,
            quotations: Vec::new(),
            selected_vendor: None,
            selection_justification: None,
            approvals: BTreeMap::new(),
            lop_closed: false,
            lop_closed_by: None,
            lop_closed_at: None,
            copies_routed: BTreeSet::new(),
            created_at: at,
        };
        Ok(self.requests.entry(id).or_insert(request))
    }

    pub fn attach_quotation(
        &mut self,
        request_id: &ProcurementId,
        vendor_id: &VendorId,
        lines: Vec<QuotationLine>,
        at: Timestamp,
    ) -> Result<&ProcurementRequest> {
        let vendor = self.vendor(vendor_id)?.clone();
        let request = self.request(request_id)?;
        if request.frozen() || request.selected_vendor.is_some() {
            return Err(Error::immutable(
                "procurement",
                request_id,
                "quotations are frozen once a vendor is selected",
            ));
        }
        if request.quotation(vendor_id).is_some() {
            return Err(Error::duplicate("quotation", format!("{request_id}/{vendor_id}")));
        }
        if lines.is_empty() {
            return Err(Error::validation("lines", "a quotation needs at least one line"));
        }
        for line in &lines {
            line.validate()?;
            if &line.vendor_id != vendor_id {
                return Err(Error::validation(
                    "vendor_id",
                    format!("line {} names vendor {}, expected {}", line.serial, line.vendor_id, vendor_id),
                ));
            }
            if !line.authorized_flag || !vendor.is_authorized_for(line.device_type) {
                return Err(Error::VendorNotAuthorized {
                    vendor: vendor_id.to_string(),
                    category: line.device_type,
                });
            }
        }
        Quotation { vendor_id: vendor_id.clone(), lines: lines.clone(), attached_at: at }.total()?;
        let request = self.request_mut(request_id)?;
        request.quotations.push(Quotation {
            vendor_id: vendor_id.clone(),
            lines,
            attached_at: at,
        });
        Ok(request)
    }

    pub fn select_vendor(
        &mut self,
        request_id: &ProcurementId,
        vendor_id: &VendorId,
        justification: &str,
    ) -> Result<&ProcurementRequest> {
        let min = self.min_quotations;
        let request = self.request(request_id)?;
        if request.frozen() {
            return Err(Error::immutable(
                "procurement",
                request_id,
                "selection is frozen once approvals exist",
            ));
        }
        if request.quotations.len() < min {
            return Err(Error::InsufficientCompetition {
                required: min,
                found: request.quotations.len(),
            });
        }
        if request.quotation(vendor_id).is_none() {
            return Err(Error::not_found("quotation", format!("{request_id}/{vendor_id}")));
        }
        require_text("justification", justification)?;
        let request = self.request_mut(request_id)?;
        request.selected_vendor = Some(vendor_id.clone());
        request.selection_justification = Some(justification.to_string());
        Ok(request)
    }

    pub fn record_approval(
        &mut self,
        request_id: &ProcurementId,
        decision: ApprovalDecision,
    ) -> Result<ApprovalOutcome> {
        let request = self.request(request_id)?;
        if request.selected_vendor.is_none() {
            return Err(Error::invalid_state(
                "procurement",
                request_id,
                "awaiting vendor selection",
                "record approval",
            ));
        }
        if request.lop_closed {
            return Err(Error::immutable("procurement", request_id, "LOP already closed"));
        }
        if request.approvals.contains_key(&decision.role) {
            return Err(Error::immutable(
                "approval",
                format!("{request_id}/{}", decision.role),
                "role has already decided",
            ));
        }
        require_text("approver_name", &decision.approver_name)?;
        if decision.status == ApprovalStatus::NotApproved {
            require_text("reason", &decision.reason)?;
        }
        let request = self.request_mut(request_id)?;
        let before = request.overall_status();
        request.approvals.insert(decision.role, decision);
        let overall = request.overall_status();
        Ok(ApprovalOutcome {
            overall,
            became_approved: before != OverallStatus::Approved && overall == OverallStatus::Approved,
        })
    }

    pub fn check_close_lop(&self, request_id: &ProcurementId) -> Result<&ProcurementRequest> {
        let request = self.request(request_id)?;
        if request.lop_closed {
            return Err(Error::immutable("procurement", request_id, "LOP already closed"));
        }
        let status = request.overall_status();
        if status != OverallStatus::Approved {
            return Err(Error::blocked(
                "procurement",
                request_id,
                format!(
                    "overall status is {status:?} with {}/4 approvals",
                    request
                        .approvals
                        .values()
                        .filter(|d| d.status == ApprovalStatus::Approved)
                        .count()
                ),
            ));
        }
        Ok(request)
    }

    pub fn close_lop(
        &mut self,
        request_id: &ProcurementId,
        actor: &ActorId,
        at: Timestamp,
    ) -> Result<&ProcurementRequest> {
        self.check_close_lop(request_id)?;
        let request = self.request_mut(request_id)?;
        request.lop_closed = true;
        request.lop_closed_by = Some(actor.clone());
        request.lop_closed_at = Some(at);
        request.copies_routed = [CopyTarget::Vendor, CopyTarget::Management, CopyTarget::Finance].into();
        Ok(request)
    }
}

/// Document reference emitted as Strategy-gate evidence when an LOP closes.
pub fn lop_doc_ref(request_id: &ProcurementId) -> DocRef {
    DocRef::new(format!("LOP:{request_id}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifecycle::Lifecycle;
    use chrono::{TimeZone, Utc};

    fn t0() -> Timestamp {
        Utc.with_ymd_and_hms(2016, 1, 4, 9, 0, 0).unwrap()
    }

    fn line(serial: u32, vendor: &VendorId, category: DeviceCategory, qty: i64, price: i64) -> QuotationLine {
        QuotationLine {
            serial,
            device: format!("device-{serial}"),
            device_type: category,
            manufacturer: "HP".into(),
            purpose: "office".into(),
            warranty_months: 12,
            vendor_id: vendor.clone(),
            authorized_flag: true,
            vendor_contact: "9840000000".into(),
            location: "Chennai".into(),
            quantity: qty,
            unit_price: Money::inr(price),
            quotation_person: "R. Kumar".into(),
        }
    }

    struct Fixture {
        proc: Procurement,
        request: ProcurementId,
        vendors: Vec<VendorId>,
    }

    fn fixture() -> Fixture {
        let mut lc = Lifecycle::default();
        let project = lc.create_project("HQ", "Acme", t0()).unwrap().clone();
        let mut proc = Procurement::default();
        let all: BTreeMap<_, _> = DeviceCategory::ALL.iter().map(|c| (*c, true)).collect();
        let mut vendors = Vec::new();
        for name in ["Alpha", "Beta", "Gamma"] {
            vendors.push(proc.register_vendor(name, "contact", all.clone()).unwrap().id.clone());
        }
        let request = proc
            .submit_requirement(&project, "req#3".into(), t0())
            .unwrap()
            .id
            .clone();
        Fixture { proc, request, vendors }
    }

    fn approve(role: ApproverRole) -> ApprovalDecision {
        ApprovalDecision {
            role,
            approver_name: format!("{role} head"),
            date: NaiveDate::from_ymd_opt(2016, 11, 1).unwrap(),
            status: ApprovalStatus::Approved,
            reason: String::new(),
        }
    }

    #[test]
    fn requirement_needs_strategy_phase_and_doc() {
        let mut lc = Lifecycle::default();
        let project = lc.create_project("HQ", "Acme", t0()).unwrap().clone();
        let mut proc = Procurement::default();
        let r = proc.submit_requirement(&project, "doc#3".into(), t0()).unwrap();
        assert!(r.quotations.is_empty());
        assert!(matches!(
            proc.submit_requirement(&project, "".into(), t0()),
            Err(Error::Validation { .. })
        ));
        let mut later = project.clone();
        later.current_phase = Phase::Operation;
        assert!(matches!(
            proc.submit_requirement(&later, "doc".into(), t0()),
            Err(Error::OutOfOrder { .. })
        ));
    }

    #[test]
    fn unauthorized_category_is_named() {
        let mut f = fixture();
        let mut cats = BTreeMap::new();
        cats.insert(DeviceCategory::Laptops, true);
        cats.insert(DeviceCategory::Servers, false);
        let v = f.proc.register_vendor("Delta", "c", cats).unwrap().id.clone();
        let err = f
            .proc
            .attach_quotation(&f.request, &v, vec![line(1, &v, DeviceCategory::Servers, 1, 100)], t0())
            .unwrap_err();
        assert_eq!(
            err,
            Error::VendorNotAuthorized { vendor: v.to_string(), category: DeviceCategory::Servers }
        );
        assert!(err.to_string().contains("Servers"));
        f.proc
            .attach_quotation(&f.request, &v, vec![line(1, &v, DeviceCategory::Laptops, 1, 100)], t0())
            .unwrap();
    }

    #[test]
    fn attach_validates_lines() {
        let mut f = fixture();
        let v = f.vendors[0].clone();
        assert!(matches!(
            f.proc.attach_quotation(&f.request, &v, vec![], t0()),
            Err(Error::Validation { .. })
        ));
        let mut bad = line(1, &v, DeviceCategory::Laptops, 0, 100);
        assert!(f.proc.attach_quotation(&f.request, &v, vec![bad.clone()], t0()).is_err());
        bad.quantity = 1;
        bad.unit_price = Money::inr(-1);
        assert!(f.proc.attach_quotation(&f.request, &v, vec![bad], t0()).is_err());
        let three: Vec<_> = (1..=3).map(|i| line(i, &v, DeviceCategory::Desktops, 2, 1000)).collect();
        let r = f.proc.attach_quotation(&f.request, &v, three, t0()).unwrap();
        assert_eq!(r.quotations.len(), 1);
        assert_eq!(r.quotations[0].lines.len(), 3);
    }

    #[test]
    fn select_lowest_total_matches_direct_summation() {
        let mut f = fixture();
        let prices = [(3, 52_000i64), (5, 30_000), (2, 76_000)];
        for (v, (qty, price)) in f.vendors.clone().iter().zip(prices) {
            let lines = vec![
                line(1, v, DeviceCategory::Laptops, qty, price),
                line(2, v, DeviceCategory::NetworkingDevice, 1, 4_500),
            ];
            f.proc.attach_quotation(&f.request, v, lines, t0()).unwrap();
        }
        // oracle: direct totals
        let totals: Vec<i64> = prices.iter().map(|(q, p)| q * p + 4_500).collect();
        assert_eq!(totals, vec![160_500, 154_500, 156_500]);
        let cheapest = f.proc.request(&f.request).unwrap().lowest_quotation().unwrap().unwrap().vendor_id.clone();
        assert_eq!(cheapest, f.vendors[1]);
        let r = f.proc.select_vendor(&f.request, &cheapest, "lowest total").unwrap();
        assert_eq!(r.selected_vendor.as_ref(), Some(&f.vendors[1]));
    }

    #[test]
    fn select_requires_competition_and_membership() {
        let mut f = fixture();
        let v0 = f.vendors[0].clone();
        f.proc
            .attach_quotation(&f.request, &v0, vec![line(1, &v0, DeviceCategory::Laptops, 1, 10)], t0())
            .unwrap();
        assert_eq!(
            f.proc.select_vendor(&f.request, &v0, "only one").unwrap_err(),
            Error::InsufficientCompetition { required: 2, found: 1 }
        );
        let v1 = f.vendors[1].clone();
        f.proc
            .attach_quotation(&f.request, &v1, vec![line(1, &v1, DeviceCategory::Laptops, 1, 10)], t0())
            .unwrap();
        assert!(matches!(
            f.proc.select_vendor(&f.request, &f.vendors[2], "not quoted"),
            Err(Error::NotFound { .. })
        ));
    }

    fn selected_fixture() -> Fixture {
        let mut f = fixture();
        for v in f.vendors.clone() {
            f.proc
                .attach_quotation(&f.request, &v, vec![line(1, &v, DeviceCategory::Servers, 1, 10)], t0())
                .unwrap();
        }
        let v0 = f.vendors[0].clone();
        f.proc.select_vendor(&f.request, &v0, "best support").unwrap();
        f
    }

    #[test]
    fn four_approvals_make_overall_approved() {
        let mut f = selected_fixture();
        for (i, role) in ApproverRole::ALL.into_iter().enumerate() {
            let out = f.proc.record_approval(&f.request, approve(role)).unwrap();
            assert_eq!(out.became_approved, i == 3);
        }
        assert_eq!(f.proc.request(&f.request).unwrap().overall_status(), OverallStatus::Approved);
    }

    #[test]
    fn rejection_needs_reason_and_flips_overall() {
        let mut f = selected_fixture();
        let mut no = approve(ApproverRole::FinanceHead);
        no.status = ApprovalStatus::NotApproved;
        assert!(matches!(
            f.proc.record_approval(&f.request, no.clone()),
            Err(Error::Validation { .. })
        ));
        no.reason = "over budget".into();
        let out = f.proc.record_approval(&f.request, no).unwrap();
        assert_eq!(out.overall, OverallStatus::NotApproved);
    }

    #[test]
    fn duplicate_role_decision_is_immutable() {
        let mut f = selected_fixture();
        f.proc.record_approval(&f.request, approve(ApproverRole::It)).unwrap();
        assert!(matches!(
            f.proc.record_approval(&f.request, approve(ApproverRole::It)),
            Err(Error::Immutable { .. })
        ));
    }

    #[test]
    fn approvals_freeze_quotations() {
        let mut f = selected_fixture();
        f.proc.record_approval(&f.request, approve(ApproverRole::It)).unwrap();
        let v = f.vendors[1].clone();
        assert!(matches!(
            f.proc.select_vendor(&f.request, &v, "change of mind"),
            Err(Error::Immutable { .. })
        ));
    }

    #[test]
    fn close_lop_requires_full_approval_once() {
        let mut f = selected_fixture();
        for role in &ApproverRole::ALL[..3] {
            f.proc.record_approval(&f.request, approve(*role)).unwrap();
        }
        let actor = ActorId::new("it");
        assert!(matches!(f.proc.close_lop(&f.request, &actor, t0()), Err(Error::Blocked { .. })));
        f.proc.record_approval(&f.request, approve(ApproverRole::FinanceHead)).unwrap();
        let r = f.proc.close_lop(&f.request, &actor, t0()).unwrap();
        assert!(r.lop_closed);
        assert_eq!(r.copies_routed.len(), 3);
        assert!(matches!(f.proc.close_lop(&f.request, &actor, t0()), Err(Error::Immutable { .. })));
    }

    #[test]
    fn csv_header_and_field_set_conform_to_sheet() {
        let v = VendorId::new("ven000001");
        let json = serde_json::to_value(line(1, &v, DeviceCategory::Servers, 1, 1)).unwrap();
        let fields: BTreeSet<String> = json.as_object().unwrap().keys().cloned().collect();
        let mapped: BTreeSet<String> = QUOTATION_COLUMNS.iter().map(|(_, f)| f.to_string()).collect();
        assert_eq!(fields, mapped);
        let columns: Vec<&str> = QUOTATION_COLUMNS.iter().map(|(c, _)| *c).collect();
        assert_eq!(columns, QUOTATION_CSV_HEADER.to_vec());
        assert_eq!(
            QUOTATION_CSV_HEADER.join(","),
            "Sl.,Device,Device Type,Manufacturer,Propose,Warranty,Vendor,Authorized or not,Vendor contact no,Location,Quantity,Price (in RS),Quotation person"
        );
    }

    #[test]
    fn csv_round_trip_and_header_check() {
        let v = VendorId::new("ven000001");
        let lines = vec![
            line(1, &v, DeviceCategory::Servers, 2, 125_050),
            line(2, &v, DeviceCategory::Storage, 1, 99),
        ];
        let text = write_quotation_csv(&lines);
        assert!(text.starts_with("Sl.,Device,Device Type,"));
        assert_eq!(parse_quotation_csv(&text, "INR").unwrap(), lines);

        let long = text.replacen("Quotation person", LONG_PERSON_COLUMN, 1);
        assert_eq!(parse_quotation_csv(&long, "INR").unwrap(), lines);

        let wrong = text.replacen("Propose", "Purpose", 1);
        assert!(parse_quotation_csv(&wrong, "INR").is_err());
    }

    #[test]
    fn money_parsing() {
        assert_eq!(Money::parse("1250.5", "INR").unwrap().minor, 125_050);
        assert_eq!(Money::parse("1,250.50", "INR").unwrap().minor, 125_050);
        assert_eq!(Money::parse("7", "INR").unwrap().minor, 700);
        assert!(Money::parse("1.234", "INR").is_err());
        assert!(Money::parse("abc", "INR").is_err());
        assert_eq!(Money::inr(125_050).to_string(), "1250.50");
    }

    #[test]
    fn category_labels_parse() {
        assert_eq!("Networking Device".parse::<DeviceCategory>().unwrap(), DeviceCategory::NetworkingDevice);
        assert_eq!("security_device".parse::<DeviceCategory>().unwrap(), DeviceCategory::SecurityDevice);
        assert_eq!("it".parse::<ApproverRole>().unwrap(), ApproverRole::It);
        assert_eq!("Finance Head".parse::<ApproverRole>().unwrap(), ApproverRole::FinanceHead);
    }
}
