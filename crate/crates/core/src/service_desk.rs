//! Service desk: incident tickets, tiered escalation and a knowledge base of
//! earlier resolutions.
//!
//! Ticket ids are `apl` (application) or `hrd` (everything else) followed by
//! a six-digit per-prefix counter starting at 000001.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use crate::assets::AssetTag;
use crate::common::{Counter, ProcurementId, Timestamp};
use crate::error::{require_text, Error, Result};

pub const EXPERT_DEADLINE: Duration = Duration::hours(1);
pub const EXPERT_WARNING: Duration = Duration::minutes(30);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TicketCategory {
    Application,
    Hardware,
    Network,
    Security,
}

impl TicketCategory {
    pub fn prefix(self) -> TicketPrefix {
        match self {
            TicketCategory::Application => TicketPrefix::Apl,
            _ => TicketPrefix::Hrd,
        }
    }
}

impl FromStr for TicketCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "application" | "apl" | "software" => Ok(TicketCategory::Application),
            "hardware" | "hrd" => Ok(TicketCategory::Hardware),
            "network" => Ok(TicketCategory::Network),
            "security" => Ok(TicketCategory::Security),
            other => Err(Error::validation("category", format!("unknown ticket category {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TicketPrefix {
    Apl,
    Hrd,
}

impl TicketPrefix {
    pub fn as_str(self) -> &'static str {
        match self {
            TicketPrefix::Apl => "apl",
            TicketPrefix::Hrd => "hrd",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TicketId(String);

impl TicketId {
    /// Accepts exactly `^(apl|hrd)[0-9]{6}$`.
    pub fn parse(text: &str) -> Result<Self> {
        if is_valid_ticket_id(text) {
            Ok(TicketId(text.to_string()))
        } else {
            Err(Error::validation("ticket_id", format!("{text:?} is not aplNNNNNN or hrdNNNNNN")))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn prefix(&self) -> TicketPrefix {
        if self.0.starts_with("apl") {
            TicketPrefix::Apl
        } else {
            TicketPrefix::Hrd
        }
    }

    pub fn number(&self) -> u32 {
        self.0[3..].parse().expect("validated digits")
    }
}

pub fn is_valid_ticket_id(text: &str) -> bool {
    let bytes = text.as_bytes();
    bytes.len() == 9
        && (text.starts_with("apl") || text.starts_with("hrd"))
        && bytes[3..].iter().all(u8::is_ascii_digit)
}

impl TryFrom<String> for TicketId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        TicketId::parse(&value)
    }
}

impl From<TicketId> for String {
    fn from(value: TicketId) -> Self {
        value.0
    }
}

impl fmt::Display for TicketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RiskLevel {
    Low,
    Medium,
    High,
    Critical,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scope {
    SingleUser,
    Department(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EscalationLevel {
    L1,
    L2,
    L3,
    Expert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TicketState {
    Open,
    Analyzing,
    Resolved,
    Escalated(EscalationLevel),
    Closed,
}

impl fmt::Display for TicketState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TicketState::Escalated(l) => write!(f, "Escalated({l:?})"),
            other => fmt::Debug::fmt(other, f),
        }
    }
}

impl TicketState {
    /// Edges of the ticket state graph.
    pub fn can_move_to(self, next: TicketState) -> bool {
        use TicketState::*;
        match (self, next) {
            (Open, Analyzing) => true,
            (Analyzing, Resolved) => true,
            (Analyzing, Escalated(l)) => l > EscalationLevel::L1,
            (Escalated(from), Escalated(to)) => to > from,
            (Escalated(_), Resolved) => true,
            (Resolved, Closed) => true,
            // procurement closure of an unresolved ticket
            (Open | Analyzing | Escalated(_), Closed) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Permanence {
    Permanent,
    Temporary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub text: String,
    pub permanence: Permanence,
    pub resolved_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Closure {
    Solved,
    ProcurementApproved { reference: ProcurementId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: TicketState,
    pub to: TicketState,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ticket {
    pub id: TicketId,
    pub category: TicketCategory,
    pub issue: String,
    pub username: String,
    pub asset_tag: AssetTag,
    pub root_cause: Option<String>,
    pub risk_level: RiskLevel,
    pub scope: Scope,
    pub state: TicketState,
    pub resolution: Option<Resolution>,
    pub closure: Option<Closure>,
    pub opened_at: Timestamp,
    pub closed_at: Option<Timestamp>,
    pub escalation_deadline: Option<Timestamp>,
    pub escalation_warning_at: Option<Timestamp>,
    /// Why the ticket is still open, for the vendor report.
    pub unresolved_reason: Option<String>,
    pub transitions: Vec<Transition>,
}

impl Ticket {
    pub fn level(&self) -> EscalationLevel {
        match self.state {
            TicketState::Escalated(l) => l,
            _ => EscalationLevel::L1,
        }
    }

    pub fn is_resolved(&self) -> bool {
        matches!(self.state, TicketState::Resolved | TicketState::Closed)
    }

    /// Minutes from opening to resolution.
    pub fn downtime_contribution(&self) -> Option<Duration> {
        self.resolution.as_ref().map(|r| r.resolved_at - self.opened_at)
    }

    fn move_to(&mut self, next: TicketState, at: Timestamp) {
        debug_assert!(self.state.can_move_to(next), "{} -> {}", self.state, next);
        self.transitions.push(Transition { from: self.state, to: next, at });
        self.state = next;
    }
}

/// Input for [`ServiceDesk::open_ticket`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewTicket {
    pub category: TicketCategory,
    pub issue: String,
    pub username: String,
    pub asset_tag: AssetTag,
    pub risk_level: RiskLevel,
    pub scope: Scope,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub resolution: String,
    pub worked: bool,
    pub ticket_id: TicketId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeEntry {
    pub issue_signature: String,
    pub attempts: Vec<Attempt>,
}

impl KnowledgeEntry {
    pub fn latest_working(&self) -> Option<&Attempt> {
        self.attempts.iter().rev().find(|a| a.worked)
    }
}

/// Normalised issue text used as the knowledge-base key.
pub fn issue_signature(issue: &str) -> String {
    issue
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServiceDesk {
    tickets: BTreeMap<TicketId, Ticket>,
    counters: BTreeMap<TicketPrefix, Counter>,
    knowledge: BTreeMap<String, KnowledgeEntry>,
}

impl Default for ServiceDesk {
    fn default() -> Self {
        let counters = [TicketPrefix::Apl, TicketPrefix::Hrd]
            .into_iter()
            .map(|p| (p, Counter::new(p.as_str(), 6)))
            .collect();
        Self {
            tickets: BTreeMap::new(),
            counters,
            knowledge: BTreeMap::new(),
        }
    }
}

impl ServiceDesk {
    pub fn get(&self, id: &TicketId) -> Result<&Ticket> {
        self.tickets.get(id).ok_or_else(|| Error::not_found("ticket", id))
    }

    pub fn tickets(&self) -> impl Iterator<Item = &Ticket> {
        self.tickets.values()
    }

    pub fn knowledge(&self, issue: &str) -> Option<&KnowledgeEntry> {
        self.knowledge.get(&issue_signature(issue))
    }

    pub fn knowledge_entries(&self) -> impl Iterator<Item = &KnowledgeEntry> {
        self.knowledge.values()
    }

    fn get_mut(&mut self, id: &TicketId) -> Result<&mut Ticket> {
        self.tickets
            .get_mut(id)
            .ok_or_else(|| Error::not_found("ticket", id))
    }

    fn expect(ticket: &Ticket, ok: bool, action: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::invalid_state("ticket", &ticket.id, ticket.state, action))
        }
    }

    /// Opens a ticket. The caller has already confirmed the asset exists.
    pub fn open_ticket(&mut self, input: NewTicket, at: Timestamp) -> Result<&Ticket> {
        require_text("issue", &input.issue)?;
        require_text("username", &input.username)?;
        if let Scope::Department(name) = &input.scope {
            require_text("scope", name)?;
        }
        let prefix = input.category.prefix();
        let id = TicketId::parse(&self.counters.get_mut(&prefix).expect("both prefixes").next()?)?;
        let ticket = Ticket {
            id: id.clone(),
            category: input.category,
            issue: input.issue,
            username: input.username,
            asset_tag: input.asset_tag,
            root_cause: None,
            risk_level: input.risk_level,
            scope: input.scope,
            state: TicketState::Open,
            resolution: None,
            closure: None,
            opened_at: at,
            closed_at: None,
            escalation_deadline: None,
            escalation_warning_at: None,
            unresolved_reason: None,
            transitions: Vec::new(),
        };
        Ok(self.tickets.entry(id).or_insert(ticket))
    }

    /// Moves Open to Analyzing and returns the latest fix that worked for the
    /// same issue, if any.
    pub fn analyze(
        &mut self,
        id: &TicketId,
        root_cause: Option<String>,
        at: Timestamp,
    ) -> Result<(&Ticket, Option<Attempt>)> {
        let ticket = self.get(id)?;
        Self::expect(ticket, ticket.state == TicketState::Open, "analyze")?;
        let suggestion = self
            .knowledge(&ticket.issue)
            .and_then(|k| k.latest_working().cloned());
        let ticket = self.get_mut(id)?;
        ticket.root_cause = root_cause.filter(|r| !r.trim().is_empty());
        ticket.move_to(TicketState::Analyzing, at);
        Ok((ticket, suggestion))
    }

    /// Records a resolution attempt that did not fix the issue.
    pub fn record_failed_attempt(&mut self, id: &TicketId, resolution: &str) -> Result<&KnowledgeEntry> {
        require_text("resolution", resolution)?;
        let ticket = self.get(id)?;
        let working = matches!(ticket.state, TicketState::Analyzing | TicketState::Escalated(_));
        Self::expect(ticket, working, "record an attempt")?;
        let signature = issue_signature(&ticket.issue);
        let entry = self.knowledge.entry(signature.clone()).or_insert_with(|| KnowledgeEntry {
            issue_signature: signature,
            attempts: Vec::new(),
        });
        entry.attempts.push(Attempt {
            resolution: resolution.to_string(),
            worked: false,
            ticket_id: id.clone(),
        });
        Ok(entry)
    }

    pub fn resolve(
        &mut self,
        id: &TicketId,
        text: &str,
        permanence: Permanence,
        at: Timestamp,
    ) -> Result<&Ticket> {
        require_text("resolution", text)?;
        let ticket = self.get(id)?;
        let ok = matches!(ticket.state, TicketState::Analyzing | TicketState::Escalated(_));
        Self::expect(ticket, ok, "resolve")?;
        if at < ticket.opened_at {
            return Err(Error::validation("at", "resolution precedes opening"));
        }
        let signature = issue_signature(&ticket.issue);
        let entry = self.knowledge.entry(signature.clone()).or_insert_with(|| KnowledgeEntry {
            issue_signature: signature,
            attempts: Vec::new(),
        });
        entry.attempts.push(Attempt {
            resolution: text.to_string(),
            worked: true,
            ticket_id: id.clone(),
        });
        let ticket = self.get_mut(id)?;
        ticket.resolution = Some(Resolution {
            text: text.to_string(),
            permanence,
            resolved_at: at,
        });
        ticket.escalation_deadline = None;
        ticket.escalation_warning_at = None;
        ticket.unresolved_reason = None;
        ticket.move_to(TicketState::Resolved, at);
        Ok(ticket)
    }

    pub fn escalate(
        &mut self,
        id: &TicketId,
        to: EscalationLevel,
        reason: &str,
        at: Timestamp,
    ) -> Result<&Ticket> {
        let ticket = self.get(id)?;
        let ok = matches!(ticket.state, TicketState::Analyzing | TicketState::Escalated(_));
        Self::expect(ticket, ok, "escalate")?;
        let current = ticket.level();
        if to <= current {
            return Err(Error::RuleViolation {
                rule: format!("escalation must increase: {current:?} -> {to:?}"),
            });
        }
        if to == EscalationLevel::Expert
            && current != EscalationLevel::L3
            && ticket.risk_level != RiskLevel::Critical
        {
            return Err(Error::RuleViolation {
                rule: format!("only Critical tickets may skip from {current:?} to Expert"),
            });
        }
        require_text("reason", reason)?;
        let ticket = self.get_mut(id)?;
        if to == EscalationLevel::Expert {
            ticket.escalation_deadline = Some(at + EXPERT_DEADLINE);
            ticket.escalation_warning_at = Some(at + EXPERT_WARNING);
        }
        ticket.unresolved_reason = Some(reason.to_string());
        ticket.move_to(TicketState::Escalated(to), at);
        Ok(ticket)
    }

    pub fn annotate_unresolved(&mut self, id: &TicketId, reason: &str) -> Result<&Ticket> {
        require_text("reason", reason)?;
        let ticket = self.get(id)?;
        Self::expect(ticket, !ticket.is_resolved(), "annotate")?;
        let ticket = self.get_mut(id)?;
        ticket.unresolved_reason = Some(reason.to_string());
        Ok(ticket)
    }

    /// Expert-level tickets still unresolved after their deadline.
    pub fn check_escalation_breaches(&self, now: Timestamp) -> Vec<&Ticket> {
        self.tickets
            .values()
            .filter(|t| t.state == TicketState::Escalated(EscalationLevel::Expert))
            .filter(|t| t.escalation_deadline.is_some_and(|d| d < now))
            .collect()
    }

    /// Validates a closure without applying it.
    pub fn check_close(&self, id: &TicketId, closure: &Closure) -> Result<&Ticket> {
        let ticket = self.get(id)?;
        match closure {
            Closure::Solved => {
                Self::expect(ticket, ticket.state == TicketState::Resolved, "close as solved")?;
            }
            Closure::ProcurementApproved { .. } => {
                Self::expect(ticket, ticket.state != TicketState::Closed, "close")?;
            }
        }
        Ok(ticket)
    }

    pub fn close_ticket(&mut self, id: &TicketId, closure: Closure, at: Timestamp) -> Result<&Ticket> {
        self.check_close(id, &closure)?;
        let ticket = self.get_mut(id)?;
        ticket.closure = Some(closure);
        ticket.closed_at = Some(at);
        ticket.escalation_deadline = None;
        ticket.escalation_warning_at = None;
        ticket.move_to(TicketState::Closed, at);
        Ok(ticket)
    }

    /// Unfinished tickets ordered for pickup: department scope before single
    /// user, then higher risk, then oldest.
    pub fn queue(&self) -> Vec<&Ticket> {
        let mut open: Vec<&Ticket> = self.tickets.values().filter(|t| !t.is_resolved()).collect();
        open.sort_by(|a, b| {
            let rank = |t: &Ticket| matches!(t.scope, Scope::Department(_));
            rank(b)
                .cmp(&rank(a))
                .then(b.risk_level.cmp(&a.risk_level))
                .then(a.opened_at.cmp(&b.opened_at))
                .then(a.id.cmp(&b.id))
        });
        open
    }

    /// Ticket sheet: id followed by the six documentation fields.
    pub fn export_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "Ticket",
            "Issue",
            "Username",
            "IT tag no",
            "Root cause",
            "Risk level",
            "Resolution",
            "Closure/approval",
        ])
        .expect("in-memory write");
        for t in self.tickets.values() {
            let resolution = t
                .resolution
                .as_ref()
                .map(|r| format!("{} ({:?})", r.text, r.permanence))
                .unwrap_or_default();
            let closure = match &t.closure {
                Some(Closure::Solved) => "Solved".to_string(),
                Some(Closure::ProcurementApproved { reference }) => format!("Procurement {reference}"),
                None => String::new(),
            };
            w.write_record([
                t.id.to_string(),
                t.issue.clone(),
                t.username.clone(),
                t.asset_tag.to_string(),
                t.root_cause.clone().unwrap_or_default(),
                format!("{:?}", t.risk_level),
                resolution,
                closure,
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}
