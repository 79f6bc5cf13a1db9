//! Change management.
//!
//! A change moves Draft → CabApproved → Scheduled → Tested → Released, or
//! Draft → Rejected. Every time check uses timestamps supplied by the caller.
//!
//! Windows:
//! - Normal changes are announced at least 72 hours ahead.
//! - Emergency changes land between 24 and 48 hours ahead, both inclusive.
//! - Release approval follows the latest passing test run by at most 3 hours
//!   (inclusive); past 2 hours the release carries a warning.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use crate::common::{ActorId, ChangeId, Counter, ProjectId, Timestamp, VendorId};
use crate::error::{require_text, Error, Result};
use crate::exact::{self, Rational};
use crate::period::Period;

pub const NORMAL_MIN_LEAD: Duration = Duration::hours(72);
pub const EMERGENCY_MIN_LEAD: Duration = Duration::hours(24);
pub const EMERGENCY_MAX_LEAD: Duration = Duration::hours(48);
pub const RELEASE_MAX_AFTER_PASS: Duration = Duration::hours(3);
pub const RELEASE_WARN_AFTER_PASS: Duration = Duration::hours(2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChangeKind {
    Software,
    Hardware,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChangePriority {
    Normal,
    Emergency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChangeState {
    Draft,
    CabApproved,
    Scheduled,
    Tested,
    Released,
    Rejected,
}

impl fmt::Display for ChangeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CopyRecipient {
    Vendor,
    ChangeAdvisory,
    Finance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestOutcome {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestRun {
    pub change_id: ChangeId,
    pub dummy_input: String,
    pub outcome: TestOutcome,
    pub completed_at: Timestamp,
    pub tester: ActorId,
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseApproval {
    pub change_id: ChangeId,
    pub approved_at: Timestamp,
    pub approver: ActorId,
    /// Where users find the change.
    pub location: String,
    /// Set when approval came more than 2 hours after the pass.
    pub late_warning: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CabVerdict {
    Approve,
    Reject { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CabDecision {
    pub verdict: CabVerdict,
    pub head_signoff: String,
    pub decided_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeRequest {
    pub id: ChangeId,
    pub project_id: ProjectId,
    pub target: String,
    pub kind: ChangeKind,
    pub priority: ChangePriority,
    pub downtime_estimate_minutes: u32,
    pub risk_note: String,
    pub alternate_solution: String,
    pub roi_justification: String,
    pub affected_departments: BTreeSet<String>,
    pub vendor_id: Option<VendorId>,
    pub state: ChangeState,
    pub submitted_at: Timestamp,
    pub cab: Option<CabDecision>,
    pub scheduled_at: Option<Timestamp>,
    pub copies_routed: BTreeSet<CopyRecipient>,
    pub test_runs: Vec<TestRun>,
    pub release: Option<ReleaseApproval>,
    /// Every state held, oldest first.
    pub history: Vec<ChangeState>,
}

impl ChangeRequest {
    pub fn last_pass(&self) -> Option<&TestRun> {
        self.test_runs
            .iter()
            .rev()
            .find(|r| r.outcome == TestOutcome::Pass)
    }

    fn set_state(&mut self, state: ChangeState) {
        self.state = state;
        self.history.push(state);
    }
}

/// Input for [`ChangeBoard::submit_change`]; the optional fields are the
/// three change criteria plus the return-on-investment note.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeDraft {
    pub project_id: ProjectId,
    pub target: String,
    pub kind: Option<ChangeKind>,
    #[serde(default)]
    pub priority: Option<ChangePriority>,
    pub downtime_estimate_minutes: Option<i64>,
    pub risk_note: Option<String>,
    pub alternate_solution: Option<String>,
    pub roi_justification: Option<String>,
    #[serde(default)]
    pub affected_departments: Vec<String>,
    #[serde(default)]
    pub vendor_id: Option<VendorId>,
}

fn present(text: &Option<String>) -> Option<&str> {
    text.as_deref().filter(|s| !s.trim().is_empty())
}

/// Checks the Normal/Emergency lead-time window.
pub fn check_schedule_window(priority: ChangePriority, when: Timestamp, now: Timestamp) -> Result<()> {
    let lead = when - now;
    let ok = match priority {
        ChangePriority::Normal => lead >= NORMAL_MIN_LEAD,
        ChangePriority::Emergency => lead >= EMERGENCY_MIN_LEAD && lead <= EMERGENCY_MAX_LEAD,
    };
    if ok {
        return Ok(());
    }
    let required = match priority {
        ChangePriority::Normal => "normal changes must be scheduled at least 72 hours ahead",
        ChangePriority::Emergency => "emergency changes must be scheduled 24 to 48 hours ahead",
    };
    Err(Error::ScheduleWindow {
        required: required.to_string(),
        lead_minutes: lead.num_minutes(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChangeBoard {
    changes: BTreeMap<ChangeId, ChangeRequest>,
    ids: Counter,
}

impl Default for ChangeBoard {
    fn default() -> Self {
        Self {
            changes: BTreeMap::new(),
            ids: Counter::new("chg", 6),
        }
    }
}

impl ChangeBoard {
    pub fn get(&self, id: &ChangeId) -> Result<&ChangeRequest> {
        self.changes.get(id).ok_or_else(|| Error::not_found("change", id))
    }

    pub fn changes(&self) -> impl Iterator<Item = &ChangeRequest> {
        self.changes.values()
    }

    fn get_mut(&mut self, id: &ChangeId) -> Result<&mut ChangeRequest> {
        self.changes
            .get_mut(id)
            .ok_or_else(|| Error::not_found("change", id))
    }

    fn expect_state(change: &ChangeRequest, allowed: &[ChangeState], action: &str) -> Result<()> {
        if allowed.contains(&change.state) {
            Ok(())
        } else {
            Err(Error::invalid_state("change", &change.id, change.state, action))
        }
    }

    pub fn submit_change(&mut self, draft: ChangeDraft, at: Timestamp) -> Result<&ChangeRequest> {
        require_text("target", &draft.target)?;
        let mut missing = Vec::new();
        if draft.downtime_estimate_minutes.is_none() {
            missing.push("downtime");
        }
        if present(&draft.risk_note).is_none() {
            missing.push("risk");
        }
        if present(&draft.alternate_solution).is_none() {
            missing.push("alternate");
        }
        if present(&draft.roi_justification).is_none() {
            missing.push("roi");
        }
        if !missing.is_empty() {
            return Err(Error::MissingCriteria {
                missing: missing.into_iter().map(String::from).collect(),
            });
        }
        let downtime = draft.downtime_estimate_minutes.unwrap_or_default();
        let downtime: u32 = downtime.try_into().map_err(|_| {
            Error::validation("downtime_estimate_minutes", format!("must be >= 0, got {downtime}"))
        })?;
        let kind = draft
            .kind
            .ok_or_else(|| Error::validation("kind", "Software or Hardware required"))?;
        let departments: BTreeSet<String> = draft
            .affected_departments
            .iter()
            .map(|d| d.trim().to_string())
            .filter(|d| !d.is_empty())
            .collect();
        let id = ChangeId::new(self.ids.next()?);
        let change = ChangeRequest {
            id: id.clone(),
            project_id: draft.project_id,
            target: draft.target,
            kind,
            priority: draft.priority.unwrap_or(ChangePriority::Normal),
            downtime_estimate_minutes: downtime,
            risk_note: draft.risk_note.unwrap_or_default(),
            alternate_solution: draft.alternate_solution.unwrap_or_default(),
            roi_justification: draft.roi_justification.unwrap_or_default(),
            affected_departments: departments,
            vendor_id: draft.vendor_id,
            state: ChangeState::Draft,
            submitted_at: at,
            cab: None,
            scheduled_at: None,
            copies_routed: BTreeSet::new(),
            test_runs: Vec::new(),
            release: None,
            history: vec![ChangeState::Draft],
        };
        Ok(self.changes.entry(id).or_insert(change))
    }

    pub fn cab_decide(
        &mut self,
        id: &ChangeId,
        verdict: CabVerdict,
        head_signoff: &str,
        at: Timestamp,
    ) -> Result<&ChangeRequest> {
        let change = self.get(id)?;
        Self::expect_state(change, &[ChangeState::Draft], "take a CAB decision")?;
        require_text("head_signoff", head_signoff)?;
        if let CabVerdict::Reject { reason } = &verdict {
            require_text("reason", reason)?;
        }
        let change = self.get_mut(id)?;
        let approved = verdict == CabVerdict::Approve;
        change.cab = Some(CabDecision {
            verdict,
            head_signoff: head_signoff.to_string(),
            decided_at: at,
        });
        if approved {
            change.copies_routed = [
                CopyRecipient::Vendor,
                CopyRecipient::ChangeAdvisory,
                CopyRecipient::Finance,
            ]
            .into();
            change.set_state(ChangeState::CabApproved);
        } else {
            change.set_state(ChangeState::Rejected);
        }
        Ok(change)
    }

    pub fn check_schedule(&self, id: &ChangeId, when: Timestamp, now: Timestamp) -> Result<&ChangeRequest> {
        let change = self.get(id)?;
        Self::expect_state(change, &[ChangeState::CabApproved], "schedule")?;
        check_schedule_window(change.priority, when, now)?;
        Ok(change)
    }

    pub fn schedule_change(
        &mut self,
        id: &ChangeId,
        when: Timestamp,
        now: Timestamp,
    ) -> Result<&ChangeRequest> {
        self.check_schedule(id, when, now)?;
        let change = self.get_mut(id)?;
        change.scheduled_at = Some(when);
        change.set_state(ChangeState::Scheduled);
        Ok(change)
    }

    /// A pass moves Scheduled to Tested; a fail is logged and the state kept.
    pub fn record_test_run(
        &mut self,
        id: &ChangeId,
        dummy_input: &str,
        outcome: TestOutcome,
        at: Timestamp,
        tester: &ActorId,
        notes: &str,
    ) -> Result<&ChangeRequest> {
        let change = self.get(id)?;
        Self::expect_state(change, &[ChangeState::Scheduled, ChangeState::Tested], "record a test run")?;
        require_text("dummy_input", dummy_input)?;
        if let Some(when) = change.scheduled_at {
            if at < when {
                return Err(Error::RuleViolation {
                    rule: format!("test run at {at} precedes the scheduled change window {when}"),
                });
            }
        }
        let change = self.get_mut(id)?;
        change.test_runs.push(TestRun {
            change_id: id.clone(),
            dummy_input: dummy_input.to_string(),
            outcome,
            completed_at: at,
            tester: tester.clone(),
            notes: notes.to_string(),
        });
        if outcome == TestOutcome::Pass && change.state == ChangeState::Scheduled {
            change.set_state(ChangeState::Tested);
        }
        Ok(change)
    }

    pub fn check_release(&self, id: &ChangeId, at: Timestamp) -> Result<(&ChangeRequest, bool)> {
        let change = self.get(id)?;
        Self::expect_state(change, &[ChangeState::Tested], "approve release")?;
        let latest = change.test_runs.last().expect("Tested implies a run");
        if latest.outcome != TestOutcome::Pass {
            return Err(Error::StaleTest {
                reason: format!("latest test run at {} failed", latest.completed_at),
            });
        }
        let elapsed = at - latest.completed_at;
        if elapsed < Duration::zero() {
            return Err(Error::validation("at", "release approval precedes the passing test run"));
        }
        if elapsed > RELEASE_MAX_AFTER_PASS {
            return Err(Error::StaleTest {
                reason: format!(
                    "{} minutes since the passing run exceeds the 180-minute release window",
                    elapsed.num_minutes()
                ),
            });
        }
        Ok((change, elapsed > RELEASE_WARN_AFTER_PASS))
    }

    pub fn approve_release(
        &mut self,
        id: &ChangeId,
        at: Timestamp,
        approver: &ActorId,
        location: &str,
    ) -> Result<&ChangeRequest> {
        let (_, late_warning) = self.check_release(id, at)?;
        let change = self.get_mut(id)?;
        change.release = Some(ReleaseApproval {
            change_id: id.clone(),
            approved_at: at,
            approver: approver.clone(),
            location: if location.trim().is_empty() {
                change.target.clone()
            } else {
                location.to_string()
            },
            late_warning,
        });
        change.set_state(ChangeState::Released);
        Ok(change)
    }

    pub fn quarterly_digest(&self, project: &ProjectId, period: Period) -> ChangeDigest {
        let changes: Vec<&ChangeRequest> = self
            .changes
            .values()
            .filter(|c| &c.project_id == project && period.contains(c.submitted_at))
            .collect();
        let entries = changes.iter().map(|c| DigestEntry::from_change(c)).collect();
        let released: Vec<_> = changes.iter().filter(|c| c.state == ChangeState::Released).collect();
        let first_pass = released
            .iter()
            .filter(|c| c.test_runs.first().is_some_and(|r| r.outcome == TestOutcome::Pass))
            .count();
        ChangeDigest {
            project_id: project.clone(),
            period,
            entries,
            first_pass_ratio: exact::ratio(first_pass as u64, released.len() as u64),
        }
    }
}

/// One change as documented in the quarterly digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DigestEntry {
    pub change_id: ChangeId,
    pub state: ChangeState,
    pub approver: Option<String>,
    pub vendor: Option<VendorId>,
    pub area_of_change: String,
    pub bugs: Vec<String>,
    pub solution: Option<String>,
    pub downtime_minutes: u32,
    pub departments_affected: Vec<String>,
}

impl DigestEntry {
    fn from_change(c: &ChangeRequest) -> Self {
        let bugs = c
            .test_runs
            .iter()
            .filter(|r| r.outcome == TestOutcome::Fail)
            .map(|r| {
                if r.notes.is_empty() {
                    format!("test with {:?} failed", r.dummy_input)
                } else {
                    r.notes.clone()
                }
            })
            .collect();
        let solution = c
            .release
            .as_ref()
            .and(c.last_pass())
            .map(|r| r.notes.clone())
            .filter(|n| !n.is_empty());
        DigestEntry {
            change_id: c.id.clone(),
            state: c.state,
            approver: c.cab.as_ref().map(|d| d.head_signoff.clone()),
            vendor: c.vendor_id.clone(),
            area_of_change: c.target.clone(),
            bugs,
            solution,
            downtime_minutes: c.downtime_estimate_minutes,
            departments_affected: c.affected_departments.iter().cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChangeDigest {
    pub project_id: ProjectId,
    pub period: Period,
    pub entries: Vec<DigestEntry>,
    /// Released changes whose first test run passed; `None` when nothing was released.
    #[serde(with = "exact::opt_number")]
    pub first_pass_ratio: Option<Rational>,
}

impl ChangeDigest {
    pub fn render_text(&self) -> String {
        use fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "Change digest {} for project {}", self.period, self.project_id);
        let _ = writeln!(out, "{} change(s)", self.entries.len());
        for e in &self.entries {
            let _ = writeln!(out);
            let _ = writeln!(out, "{} [{}]", e.change_id, e.state);
            let _ = writeln!(out, "  approver:    {}", e.approver.as_deref().unwrap_or("-"));
            let _ = writeln!(out, "  vendor:      {}", e.vendor.as_ref().map(|v| v.as_str()).unwrap_or("-"));
            let _ = writeln!(out, "  area:        {}", e.area_of_change);
            let _ = writeln!(
                out,
                "  bugs:        {}",
                if e.bugs.is_empty() { "-".to_string() } else { e.bugs.join("; ") }
            );
            let _ = writeln!(out, "  solution:    {}", e.solution.as_deref().unwrap_or("-"));
            let _ = writeln!(out, "  downtime:    {} min", e.downtime_minutes);
            let _ = writeln!(out, "  departments: {}", e.departments_affected.join(", "));
        }
        if let Some(r) = &self.first_pass_ratio {
            let _ = writeln!(out);
            let _ = writeln!(out, "first-pass ratio: {}/{}", r.numer(), r.denom());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn now() -> Timestamp {
        Utc.with_ymd_and_hms(2016, 8, 1, 10, 0, 0).unwrap()
    }

    fn draft() -> ChangeDraft {
        ChangeDraft {
            project_id: ProjectId::new("prj000001"),
            target: "netbanking".into(),
            kind: Some(ChangeKind::Software),
            priority: Some(ChangePriority::Normal),
            downtime_estimate_minutes: Some(30),
            risk_note: Some("customer data exposure during sync".into()),
            alternate_solution: Some("mirror site".into()),
            roi_justification: Some("cuts manual reconciliation".into()),
            affected_departments: vec!["Sales".into(), "HR".into()],
            vendor_id: Some(VendorId::new("ven000001")),
        }
    }

    fn tester() -> ActorId {
        ActorId::new("qa")
    }

    fn approved(board: &mut ChangeBoard, d: ChangeDraft) -> ChangeId {
        let id = board.submit_change(d, now()).unwrap().id.clone();
        board.cab_decide(&id, CabVerdict::Approve, "CAB head", now()).unwrap();
        id
    }

    #[test]
    fn submit_lists_missing_criteria() {
        let mut board = ChangeBoard::default();
        assert_eq!(board.submit_change(draft(), now()).unwrap().state, ChangeState::Draft);
        let mut d = draft();
        d.alternate_solution = None;
        assert_eq!(
            board.submit_change(d, now()).unwrap_err(),
            Error::MissingCriteria { missing: vec!["alternate".into()] }
        );
        let d = ChangeDraft { target: "x".into(), kind: Some(ChangeKind::Hardware), ..Default::default() };
        match board.submit_change(d, now()).unwrap_err() {
            Error::MissingCriteria { missing } => assert_eq!(missing, ["downtime", "risk", "alternate", "roi"]),
            e => panic!("{e:?}"),
        }
        let mut d = draft();
        d.downtime_estimate_minutes = Some(-5);
        assert!(matches!(board.submit_change(d, now()), Err(Error::Validation { .. })));
    }

    #[test]
    fn cab_routes_copies_or_rejects() {
        let mut board = ChangeBoard::default();
        let id = approved(&mut board, draft());
        let c = board.get(&id).unwrap();
        assert_eq!(c.state, ChangeState::CabApproved);
        assert_eq!(
            c.copies_routed,
            [CopyRecipient::Vendor, CopyRecipient::ChangeAdvisory, CopyRecipient::Finance].into()
        );
        let other = board.submit_change(draft(), now()).unwrap().id.clone();
        let c = board
            .cab_decide(&other, CabVerdict::Reject { reason: "no budget".into() }, "CAB head", now())
            .unwrap();
        assert_eq!(c.state, ChangeState::Rejected);
        assert!(c.copies_routed.is_empty());
        assert!(matches!(
            board.cab_decide(&id, CabVerdict::Approve, "CAB head", now()),
            Err(Error::InvalidState { .. })
        ));
    }

    #[test]
    fn normal_window_boundaries() {
        let mut board = ChangeBoard::default();
        let id = approved(&mut board, draft());
        let err = board
            .schedule_change(&id, now() + Duration::hours(48), now())
            .unwrap_err();
        assert!(matches!(err, Error::ScheduleWindow { lead_minutes: 2880, .. }));
        assert!(err.to_string().contains("72 hours"));
        assert!(board
            .schedule_change(&id, now() + Duration::hours(72) - Duration::minutes(1), now())
            .is_err());
        let c = board.schedule_change(&id, now() + Duration::hours(80), now()).unwrap();
        assert_eq!(c.state, ChangeState::Scheduled);
    }

    #[test]
    fn emergency_window_boundaries() {
        let cases = [(23, false), (24, true), (30, true), (48, true), (49, false)];
        for (hours, ok) in cases {
            let res = check_schedule_window(ChangePriority::Emergency, now() + Duration::hours(hours), now());
            assert_eq!(res.is_ok(), ok, "{hours}h");
        }
        assert!(check_schedule_window(ChangePriority::Normal, now() + Duration::hours(72), now()).is_ok());
    }

    fn tested(board: &mut ChangeBoard) -> (ChangeId, Timestamp) {
        let id = approved(board, draft());
        let when = now() + Duration::hours(80);
        board.schedule_change(&id, when, now()).unwrap();
        let pass_at = when + Duration::minutes(30);
        board.record_test_run(&id, "dummy txn 0001", TestOutcome::Pass, pass_at, &tester(), "ok").unwrap();
        (id, pass_at)
    }

    #[test]
    fn failed_run_holds_scheduled() {
        let mut board = ChangeBoard::default();
        let id = approved(&mut board, draft());
        assert!(matches!(
            board.record_test_run(&id, "x", TestOutcome::Pass, now(), &tester(), ""),
            Err(Error::InvalidState { .. })
        ));
        let when = now() + Duration::hours(80);
        board.schedule_change(&id, when, now()).unwrap();
        let c = board.record_test_run(&id, "dummy", TestOutcome::Fail, when, &tester(), "timeout").unwrap();
        assert_eq!(c.state, ChangeState::Scheduled);
        assert_eq!(c.test_runs.len(), 1);
        assert!(board.record_test_run(&id, "dummy", TestOutcome::Pass, when - Duration::hours(1), &tester(), "").is_err());
    }

    #[test]
    fn release_window_is_three_hours_inclusive() {
        for (minutes, ok, warn) in [(120, true, false), (121, true, true), (180, true, true), (181, false, false), (240, false, false)] {
            let mut board = ChangeBoard::default();
            let (id, pass_at) = tested(&mut board);
            let res = board.approve_release(&id, pass_at + Duration::minutes(minutes), &tester(), "");
            assert_eq!(res.is_ok(), ok, "{minutes} min");
            match res {
                Ok(c) => {
                    assert_eq!(c.state, ChangeState::Released);
                    assert_eq!(c.release.as_ref().unwrap().late_warning, warn);
                }
                Err(e) => assert!(matches!(e, Error::StaleTest { .. })),
            }
        }
    }

    #[test]
    fn fresh_run_after_stale_test_allows_release() {
        let mut board = ChangeBoard::default();
        let (id, pass_at) = tested(&mut board);
        let late = pass_at + Duration::hours(4);
        assert!(board.approve_release(&id, late, &tester(), "").is_err());
        board.record_test_run(&id, "dummy", TestOutcome::Fail, late, &tester(), "regression").unwrap();
        assert!(matches!(board.approve_release(&id, late, &tester(), ""), Err(Error::StaleTest { .. })));
        board.record_test_run(&id, "dummy", TestOutcome::Pass, late, &tester(), "patched").unwrap();
        let c = board.approve_release(&id, late + Duration::hours(1), &tester(), "https://alt.example").unwrap();
        assert_eq!(c.release.as_ref().unwrap().location, "https://alt.example");
    }

    #[test]
    fn digest_lists_all_fields_and_is_deterministic() {
        let mut board = ChangeBoard::default();
        let project = ProjectId::new("prj000001");
        let q = Period::quarter_of(now());
        let empty = board.quarterly_digest(&project, q);
        assert!(empty.entries.is_empty());
        assert!(empty.render_text().starts_with("Change digest 2016Q3"));

        let (a, pass_at) = tested(&mut board);
        board.approve_release(&a, pass_at + Duration::hours(1), &tester(), "").unwrap();
        approved(&mut board, draft());
        board.submit_change(draft(), now()).unwrap();
        let digest = board.quarterly_digest(&project, q);
        assert_eq!(digest.entries.len(), 3);
        let json = serde_json::to_value(&digest).unwrap();
        for entry in json["entries"].as_array().unwrap() {
            for field in ["approver", "vendor", "area_of_change", "bugs", "solution", "downtime_minutes", "departments_affected"] {
                assert!(entry.get(field).is_some(), "{field}");
            }
        }
        assert_eq!(digest.first_pass_ratio, Some(Rational::from_integer(1)));
        assert_eq!(digest, board.quarterly_digest(&project, q));
        assert!(board.quarterly_digest(&project, q.successor()).entries.is_empty());
    }
}
