//! Vendor performance: periodic reports, satisfaction surveys, annual
//! consolidation and the contract renewal recommendation.
//!
//! Everything here is a pure function of its inputs and computed in exact
//! rationals. A period with no tickets counts as fully resolved.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::common::{Timestamp, VendorId};
use crate::error::{Error, Result};
use crate::exact::{self, Percent, Rational};
use crate::notifications::OutageRecord;
use crate::period::{Period, PeriodKind};
use crate::service_desk::{Permanence, RiskLevel, Ticket, TicketId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReviewPeriod {
    Quarterly,
    HalfYearly,
}

/// Unresolved-ticket percentages in `(low, high]` call for a vendor review.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Band {
    pub low: Percent,
    pub high: Percent,
}

impl Band {
    pub fn contains(&self, value: Percent) -> bool {
        value > self.low && value <= self.high
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlaConfig {
    pub unresolved_target_pct: Percent,
    pub fault_tolerance_band: Band,
    pub review_period: ReviewPeriod,
    #[serde(with = "exact::as_number")]
    pub satisfaction_review_threshold: Rational,
}

impl Default for SlaConfig {
    fn default() -> Self {
        Self {
            unresolved_target_pct: Percent::from_integer(1),
            fault_tolerance_band: Band {
                low: Percent::new(Rational::new(1, 2)),
                high: Percent::from_integer(1),
            },
            review_period: ReviewPeriod::Quarterly,
            satisfaction_review_threshold: Rational::from_integer(4),
        }
    }
}

impl SlaConfig {
    pub fn validate(&self) -> Result<()> {
        let zero = Percent::from_integer(0);
        let target = self.unresolved_target_pct;
        if target <= zero || target > Percent::HUNDRED {
            return Err(Error::validation("unresolved_target_pct", "must lie in (0, 100]"));
        }
        let band = self.fault_tolerance_band;
        if band.low < zero || band.low > band.high || band.high > Percent::HUNDRED {
            return Err(Error::validation("fault_tolerance_band", "need 0 <= low <= high <= 100"));
        }
        // A band ending below the target would let outcomes improve as the
        // resolution rate drops.
        if band.high < target {
            return Err(Error::validation(
                "fault_tolerance_band",
                "band high must not be below unresolved_target_pct",
            ));
        }
        let t = self.satisfaction_review_threshold;
        if t < Rational::from_integer(1) || t > Rational::from_integer(5) {
            return Err(Error::validation("satisfaction_review_threshold", "must lie in [1, 5]"));
        }
        Ok(())
    }

    pub fn period_kind_ok(&self, period: &Period) -> bool {
        match self.review_period {
            ReviewPeriod::Quarterly => period.is_quarter(),
            ReviewPeriod::HalfYearly => period.is_half(),
        }
    }
}

fn in_period<'a>(tickets: impl IntoIterator<Item = &'a Ticket>, period: &Period) -> Vec<&'a Ticket> {
    tickets
        .into_iter()
        .filter(|t| period.contains(t.opened_at))
        .collect()
}

/// Share of tickets opened in the period that are resolved or closed.
pub fn compute_resolution_rate<'a>(tickets: impl IntoIterator<Item = &'a Ticket>, period: &Period) -> Percent {
    let tickets = in_period(tickets, period);
    let resolved = tickets.iter().filter(|t| t.is_resolved()).count();
    Percent::of(resolved as u64, tickets.len() as u64)
}

/// Minutes of outage inside the period, with overlapping outages of the
/// same service counted once. Open outages are not counted.
pub fn compute_downtime<'a>(
    outages: impl IntoIterator<Item = &'a OutageRecord>,
    period: &Period,
) -> Result<Rational> {
    let mut by_service: BTreeMap<&str, Vec<(Timestamp, Timestamp)>> = BTreeMap::new();
    for o in outages {
        let Some(end) = o.end else { continue };
        if o.start > end {
            return Err(Error::validation("outage", format!("{} ends before it starts", o.service)));
        }
        let start = o.start.max(period.start());
        let end = end.min(period.end());
        if start < end {
            by_service.entry(&o.service).or_default().push((start, end));
        }
    }
    let mut seconds: i64 = 0;
    for intervals in by_service.values_mut() {
        intervals.sort();
        let mut current: Option<(Timestamp, Timestamp)> = None;
        for &(s, e) in intervals.iter() {
            current = match current {
                Some((cs, ce)) if s <= ce => Some((cs, ce.max(e))),
                Some((cs, ce)) => {
                    seconds += (ce - cs).num_seconds();
                    Some((s, e))
                }
                None => Some((s, e)),
            };
        }
        if let Some((cs, ce)) = current {
            seconds += (ce - cs).num_seconds();
        }
    }
    Ok(Rational::new(seconds, 60))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnresolvedTicket {
    pub ticket_id: TicketId,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuarterlyReport {
    pub vendor_id: VendorId,
    pub period: Period,
    pub total_tickets: u64,
    pub resolved: u64,
    pub resolution_pct: Percent,
    #[serde(with = "exact::as_number")]
    pub total_downtime_minutes: Rational,
    /// Permanent fixes among resolutions; absent when nothing was resolved.
    #[serde(with = "exact::opt_number")]
    pub permanent_fix_ratio: Option<Rational>,
    pub critical_handled: u64,
    pub critical_resolved: u64,
    pub unresolved_reasons: Vec<UnresolvedTicket>,
    /// Unresolved tickets nobody explained.
    pub documentation_gaps: Vec<TicketId>,
}

impl QuarterlyReport {
    pub fn unresolved_pct(&self) -> Percent {
        self.resolution_pct.complement()
    }

    pub fn render_text(&self) -> String {
        let mut out = format!(
            "Vendor {} - {}\nTickets: {}  Resolved: {}  Resolution: {}\nDowntime: {} min\nPermanent fixes: {}\nCritical handled/resolved: {}/{}\n",
            self.vendor_id,
            self.period,
            self.total_tickets,
            self.resolved,
            self.resolution_pct,
            fmt_rational(&self.total_downtime_minutes),
            self.permanent_fix_ratio
                .map(|r| Percent::new(r * Rational::from_integer(100)).to_string())
                .unwrap_or_else(|| "n/a".into()),
            self.critical_handled,
            self.critical_resolved,
        );
        for u in &self.unresolved_reasons {
            out.push_str(&format!(
                "  {}: {}\n",
                u.ticket_id,
                u.reason.as_deref().unwrap_or("(no reason recorded)")
            ));
        }
        out
    }
}

fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        exact::to_f64(r).to_string()
    }
}

/// Report over the vendor's tickets opened in the period and its outages.
pub fn build_quarterly_report<'a>(
    vendor: &VendorId,
    period: Period,
    tickets: impl IntoIterator<Item = &'a Ticket>,
    outages: impl IntoIterator<Item = &'a OutageRecord>,
) -> Result<QuarterlyReport> {
    let tickets = in_period(tickets, &period);
    let total = tickets.len() as u64;
    let resolved: Vec<&&Ticket> = tickets.iter().filter(|t| t.is_resolved()).collect();
    let with_fix: Vec<_> = resolved.iter().filter_map(|t| t.resolution.as_ref()).collect();
    let permanent = with_fix
        .iter()
        .filter(|r| r.permanence == Permanence::Permanent)
        .count();
    let permanent_fix_ratio = exact::ratio(permanent as u64, with_fix.len() as u64);
    let critical: Vec<_> = tickets.iter().filter(|t| t.risk_level == RiskLevel::Critical).collect();
    let unresolved_reasons: Vec<UnresolvedTicket> = tickets
        .iter()
        .filter(|t| !t.is_resolved())
        .map(|t| UnresolvedTicket {
            ticket_id: t.id.clone(),
            reason: t.unresolved_reason.clone(),
        })
        .collect();
    let documentation_gaps = unresolved_reasons
        .iter()
        .filter(|u| u.reason.is_none())
        .map(|u| u.ticket_id.clone())
        .collect();
    Ok(QuarterlyReport {
        vendor_id: vendor.clone(),
        period,
        total_tickets: total,
        resolved: resolved.len() as u64,
        resolution_pct: Percent::of(resolved.len() as u64, total),
        total_downtime_minutes: compute_downtime(outages, &period)?,
        permanent_fix_ratio,
        critical_handled: critical.len() as u64,
        critical_resolved: critical.iter().filter(|t| t.is_resolved()).count() as u64,
        unresolved_reasons,
        documentation_gaps,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnualReport {
    pub vendor_id: VendorId,
    pub year: i32,
    pub periods: Vec<Period>,
    pub total_tickets: u64,
    pub resolved: u64,
    pub resolution_pct: Percent,
    #[serde(with = "exact::as_number")]
    pub total_downtime_minutes: Rational,
    pub critical_handled: u64,
    pub critical_resolved: u64,
    pub min_resolution_pct: Percent,
    pub max_resolution_pct: Percent,
    #[serde(with = "exact::as_number")]
    pub min_downtime_minutes: Rational,
    #[serde(with = "exact::as_number")]
    pub max_downtime_minutes: Rational,
    pub unresolved_reasons: Vec<UnresolvedTicket>,
}

impl AnnualReport {
    pub fn unresolved_pct(&self) -> Percent {
        self.resolution_pct.complement()
    }
}

/// Combines four consecutive quarters (or two halves) of one vendor's year.
pub fn consolidate_annual(reports: &[QuarterlyReport]) -> Result<AnnualReport> {
    let Some(first) = reports.first() else {
        return Err(Error::validation("reports", "no reports to consolidate"));
    };
    if let Some(other) = reports.iter().find(|r| r.vendor_id != first.vendor_id) {
        return Err(Error::validation(
            "reports",
            format!("mixed vendors {} and {}", first.vendor_id, other.vendor_id),
        ));
    }
    let year = first.period.year;
    let mut periods: Vec<Period> = reports.iter().map(|r| r.period).collect();
    periods.sort();
    let expected: Vec<Period> = match first.period.kind {
        PeriodKind::Quarter(_) => (1..=4).map(|q| Period::quarter(year, q)).collect::<Result<_>>()?,
        PeriodKind::Half(_) => (1..=2).map(|h| Period::half(year, h)).collect::<Result<_>>()?,
        PeriodKind::Year => Vec::new(),
    };
    if periods != expected {
        let shown: Vec<String> = periods.iter().map(Period::to_string).collect();
        return Err(Error::validation(
            "reports",
            format!("need all quarters or both halves of one year, got [{}]", shown.join(", ")),
        ));
    }
    let total: u64 = reports.iter().map(|r| r.total_tickets).sum();
    let resolved: u64 = reports.iter().map(|r| r.resolved).sum();
    let downtime = reports
        .iter()
        .fold(Rational::zero(), |acc, r| acc + r.total_downtime_minutes);
    let rates = reports.iter().map(|r| r.resolution_pct);
    let downs = reports.iter().map(|r| r.total_downtime_minutes);
    let mut by_period: Vec<&QuarterlyReport> = reports.iter().collect();
    by_period.sort_by_key(|r| r.period);
    Ok(AnnualReport {
        vendor_id: first.vendor_id.clone(),
        year,
        periods,
        total_tickets: total,
        resolved,
        resolution_pct: Percent::of(resolved, total),
        total_downtime_minutes: downtime,
        critical_handled: reports.iter().map(|r| r.critical_handled).sum(),
        critical_resolved: reports.iter().map(|r| r.critical_resolved).sum(),
        min_resolution_pct: rates.clone().min().expect("non-empty"),
        max_resolution_pct: rates.max().expect("non-empty"),
        min_downtime_minutes: downs.clone().min().expect("non-empty"),
        max_downtime_minutes: downs.max().expect("non-empty"),
        unresolved_reasons: by_period
            .iter()
            .flat_map(|r| r.unresolved_reasons.iter().cloned())
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatisfactionSurvey {
    pub vendor_id: VendorId,
    pub period: Period,
    pub scores: Vec<u8>,
    #[serde(with = "exact::as_number")]
    pub mean: Rational,
}

pub fn record_survey(vendor: &VendorId, period: Period, scores: &[i64]) -> Result<SatisfactionSurvey> {
    if scores.is_empty() {
        return Err(Error::validation("scores", "empty survey"));
    }
    if let Some(bad) = scores.iter().find(|s| !(1..=5).contains(*s)) {
        return Err(Error::validation("scores", format!("score {bad} outside 1..=5")));
    }
    let sum: i64 = scores.iter().sum();
    Ok(SatisfactionSurvey {
        vendor_id: vendor.clone(),
        period,
        scores: scores.iter().map(|&s| s as u8).collect(),
        mean: Rational::new(sum, scores.len() as i64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RenewalOutcome {
    Renew,
    ReviewRequired,
    Terminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleId {
    /// Unresolved share above target.
    R1,
    /// Low satisfaction or unresolved share inside the tolerance band.
    R2,
    /// Nothing triggered.
    R3,
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenewalDecision {
    pub vendor_id: VendorId,
    pub year: i32,
    pub outcome: RenewalOutcome,
    pub reasons: Vec<RuleId>,
    pub unresolved_pct: Percent,
    #[serde(with = "exact::as_number")]
    pub survey_mean: Rational,
}

/// Renewal recommendation; Terminate is advice for management, never acted on.
pub fn evaluate_renewal(
    annual: &AnnualReport,
    survey: &SatisfactionSurvey,
    config: &SlaConfig,
) -> Result<RenewalDecision> {
    if survey.vendor_id != annual.vendor_id {
        return Err(Error::validation(
            "survey",
            format!("survey is for {}, report for {}", survey.vendor_id, annual.vendor_id),
        ));
    }
    if survey.period.year != annual.year {
        return Err(Error::validation(
            "survey",
            format!("survey year {} does not match report year {}", survey.period.year, annual.year),
        ));
    }
    let unresolved = annual.unresolved_pct();
    let mut reasons = Vec::new();
    let mut outcome = RenewalOutcome::Renew;
    if unresolved > config.unresolved_target_pct {
        reasons.push(RuleId::R1);
        outcome = RenewalOutcome::Terminate;
    }
    if survey.mean < config.satisfaction_review_threshold || config.fault_tolerance_band.contains(unresolved) {
        reasons.push(RuleId::R2);
        outcome = outcome.max(RenewalOutcome::ReviewRequired);
    }
    if reasons.is_empty() {
        reasons.push(RuleId::R3);
    }
    Ok(RenewalDecision {
        vendor_id: annual.vendor_id.clone(),
        year: annual.year,
        outcome,
        reasons,
        unresolved_pct: unresolved,
        survey_mean: survey.mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::common::NotificationId;
    use crate::service_desk::{Closure, Resolution, Scope, TicketCategory, TicketState};
    use chrono::{Duration, TimeZone, Utc};

    fn ts(month: u32, day: u32, hour: u32, min: u32) -> Timestamp {
        Utc.with_ymd_and_hms(2016, month, day, hour, min, 0).unwrap()
    }

    pub(crate) fn ticket(n: u32, opened: Timestamp, resolved: bool, critical: bool) -> Ticket {
        Ticket {
            id: TicketId::parse(&format!("hrd{n:06}")).unwrap(),
            category: TicketCategory::Hardware,
            issue: "disk".into(),
            username: "u".into(),
            asset_tag: "AST000001".into(),
            root_cause: None,
            risk_level: if critical { RiskLevel::Critical } else { RiskLevel::Low },
            scope: Scope::SingleUser,
            state: if resolved { TicketState::Resolved } else { TicketState::Analyzing },
            resolution: resolved.then(|| Resolution {
                text: "fix".into(),
                permanence: Permanence::Permanent,
                resolved_at: opened,
            }),
            closure: None::<Closure>,
            opened_at: opened,
            closed_at: None,
            escalation_deadline: None,
            escalation_warning_at: None,
            unresolved_reason: None,
            transitions: Vec::new(),
        }
    }

    fn outage(service: &str, start: Timestamp, minutes: i64) -> OutageRecord {
        OutageRecord {
            service: service.into(),
            vendor_id: None,
            start,
            end: Some(start + Duration::minutes(minutes)),
            alternate_endpoint: None,
            start_notice: NotificationId::new("ntf000001"),
            end_notice: None,
        }
    }

    fn q3() -> Period {
        Period::quarter(2016, 3).unwrap()
    }

    fn pct(text: &str) -> Percent {
        Percent::parse(text).unwrap()
    }

    #[test]
    fn resolution_rate_examples() {
        let tickets: Vec<Ticket> = (1..=50).map(|n| ticket(n, ts(8, 1, 10, 0), n <= 47, false)).collect();
        assert_eq!(compute_resolution_rate(&tickets, &q3()), pct("94"));
        assert_eq!(compute_resolution_rate(&[], &q3()), Percent::HUNDRED);
        let none: Vec<Ticket> = (1..=10).map(|n| ticket(n, ts(8, 1, 10, 0), false, false)).collect();
        assert_eq!(compute_resolution_rate(&none, &q3()), pct("0"));
        // tickets outside the period do not count
        assert_eq!(compute_resolution_rate(&none, &Period::quarter(2016, 2).unwrap()), Percent::HUNDRED);
    }

    #[test]
    fn downtime_examples() {
        let disjoint = [outage("mail", ts(8, 1, 10, 0), 30), outage("mail", ts(8, 2, 10, 0), 30)];
        assert_eq!(compute_downtime(&disjoint, &q3()).unwrap(), Rational::from_integer(60));
        let same = [outage("mail", ts(8, 1, 10, 0), 30), outage("mail", ts(8, 1, 10, 0), 30)];
        assert_eq!(compute_downtime(&same, &q3()).unwrap(), Rational::from_integer(30));
        let other_service = [outage("mail", ts(8, 1, 10, 0), 30), outage("web", ts(8, 1, 10, 0), 30)];
        assert_eq!(compute_downtime(&other_service, &q3()).unwrap(), Rational::from_integer(60));
        let straddle = [outage("mail", ts(6, 30, 23, 30), 60)];
        assert_eq!(compute_downtime(&straddle, &q3()).unwrap(), Rational::from_integer(30));
        let mut backwards = outage("mail", ts(8, 1, 10, 0), 30);
        backwards.end = Some(ts(8, 1, 9, 0));
        assert!(compute_downtime(&[backwards], &q3()).is_err());
    }

    #[test]
    fn quarterly_report_counts() {
        let mut tickets: Vec<Ticket> = (1..=50)
            .map(|n| ticket(n, ts(8, 1, 10, 0), n <= 47, n <= 3))
            .collect();
        tickets[47].unresolved_reason = Some("waiting for spare part".into());
        let r = build_quarterly_report(&"ven000001".into(), q3(), &tickets, &[]).unwrap();
        assert_eq!((r.total_tickets, r.resolved), (50, 47));
        assert_eq!((r.critical_handled, r.critical_resolved), (3, 3));
        assert_eq!(r.unresolved_reasons.len(), 3);
        assert_eq!(r.documentation_gaps.len(), 2);
        assert_eq!(r.permanent_fix_ratio, Some(Rational::from_integer(1)));

        let empty = build_quarterly_report(&"ven000001".into(), q3(), &[], &[]).unwrap();
        assert_eq!(empty.resolution_pct, Percent::HUNDRED);
        assert_eq!(empty.total_tickets, 0);
        assert_eq!(empty.permanent_fix_ratio, None);
        assert!(empty.render_text().contains("Resolution: 100%"));
    }

    fn report(vendor: &str, period: Period, total: u64, resolved: u64) -> QuarterlyReport {
        QuarterlyReport {
            vendor_id: vendor.into(),
            period,
            total_tickets: total,
            resolved,
            resolution_pct: Percent::of(resolved, total),
            total_downtime_minutes: Rational::from_integer(10),
            permanent_fix_ratio: None,
            critical_handled: 0,
            critical_resolved: 0,
            unresolved_reasons: Vec::new(),
            documentation_gaps: Vec::new(),
        }
    }

    #[test]
    fn annual_consolidation() {
        let qs: Vec<_> = [(10, 10), (10, 9), (10, 10), (10, 10)]
            .iter()
            .enumerate()
            .map(|(i, &(t, r))| report("v", Period::quarter(2016, i as u8 + 1).unwrap(), t, r))
            .collect();
        let a = consolidate_annual(&qs).unwrap();
        assert_eq!(a.resolution_pct, pct("97.5"));
        assert_eq!(a.total_downtime_minutes, Rational::from_integer(40));
        assert_eq!(a.min_resolution_pct, pct("90"));
        assert!(consolidate_annual(&qs[..3]).is_err());
        let mut mixed = qs.clone();
        mixed[2].vendor_id = "w".into();
        assert!(consolidate_annual(&mixed).is_err());
        let mut dup = qs.clone();
        dup[3].period = dup[2].period;
        assert!(consolidate_annual(&dup).is_err());
        let halves = [report("v", Period::half(2016, 1).unwrap(), 4, 4), report("v", Period::half(2016, 2).unwrap(), 4, 3)];
        assert_eq!(consolidate_annual(&halves).unwrap().resolution_pct, pct("87.5"));
    }

    #[test]
    fn survey_examples() {
        let y = Period::year(2016);
        assert_eq!(record_survey(&"v".into(), y, &[4, 4, 5, 3]).unwrap().mean, Rational::from_integer(4));
        assert!(record_survey(&"v".into(), y, &[6]).is_err());
        assert!(record_survey(&"v".into(), y, &[0]).is_err());
        assert!(record_survey(&"v".into(), y, &[]).is_err());
    }

    fn annual_with_resolution(resolution: &str) -> AnnualReport {
        let rate = pct(resolution);
        AnnualReport {
            vendor_id: "v".into(),
            year: 2016,
            periods: Vec::new(),
            total_tickets: 1000,
            resolved: 0,
            resolution_pct: rate,
            total_downtime_minutes: Rational::zero(),
            critical_handled: 0,
            critical_resolved: 0,
            min_resolution_pct: rate,
            max_resolution_pct: rate,
            min_downtime_minutes: Rational::zero(),
            max_downtime_minutes: Rational::zero(),
            unresolved_reasons: Vec::new(),
        }
    }

    fn survey(mean: &str) -> SatisfactionSurvey {
        SatisfactionSurvey {
            vendor_id: "v".into(),
            period: Period::year(2016),
            scores: Vec::new(),
            mean: exact::parse_decimal(mean).unwrap(),
        }
    }

    #[test]
    fn renewal_rule_table() {
        let cfg = SlaConfig::default();
        let eval = |res: &str, mean: &str| evaluate_renewal(&annual_with_resolution(res), &survey(mean), &cfg).unwrap();
        let d = eval("99.6", "4.5");
        assert_eq!((d.outcome, d.reasons), (RenewalOutcome::Renew, vec![RuleId::R3]));
        let d = eval("99.2", "4.5");
        assert_eq!((d.outcome, d.reasons), (RenewalOutcome::ReviewRequired, vec![RuleId::R2]));
        let d = eval("99.8", "3.9");
        assert_eq!((d.outcome, d.reasons), (RenewalOutcome::ReviewRequired, vec![RuleId::R2]));
        let d = eval("97", "5");
        assert_eq!((d.outcome, d.reasons), (RenewalOutcome::Terminate, vec![RuleId::R1]));
        let d = eval("97", "2");
        assert_eq!((d.outcome, d.reasons), (RenewalOutcome::Terminate, vec![RuleId::R1, RuleId::R2]));
        // band edges: 0.5 is outside, 1.0 inside
        assert_eq!(eval("99.5", "4.5").outcome, RenewalOutcome::Renew);
        assert_eq!(eval("99", "4.5").outcome, RenewalOutcome::ReviewRequired);
        assert_eq!(eval("98.99", "4.5").outcome, RenewalOutcome::Terminate);
        // threshold itself is satisfied
        assert_eq!(eval("100", "4").outcome, RenewalOutcome::Renew);
    }

    #[test]
    fn renewal_checks_vendor_and_year() {
        let cfg = SlaConfig::default();
        let mut s = survey("4.5");
        s.vendor_id = "w".into();
        assert!(evaluate_renewal(&annual_with_resolution("100"), &s, &cfg).is_err());
        let mut s = survey("4.5");
        s.period = Period::year(2017);
        assert!(evaluate_renewal(&annual_with_resolution("100"), &s, &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SlaConfig::default().validate().is_ok());
        let mut c = SlaConfig::default();
        c.unresolved_target_pct = pct("0");
        assert!(c.validate().is_err());
        let mut c = SlaConfig::default();
        c.fault_tolerance_band = Band { low: pct("1"), high: pct("0.5") };
        assert!(c.validate().is_err());
        let mut c = SlaConfig::default();
        c.unresolved_target_pct = pct("2");
        assert!(c.validate().is_err(), "band ending below target");
        let c: SlaConfig = serde_json::from_str(r#"{"unresolved_target_pct": 0.3, "fault_tolerance_band": {"low": 0.1, "high": 0.3}}"#).unwrap();
        assert_eq!(c.unresolved_target_pct, pct("0.3"));
        assert!(c.validate().is_ok());
    }

    proptest::proptest! {
        #[test]
        fn outcome_is_monotone_in_resolution(a in 9000u32..=10000, b in 9000u32..=10000, mean in 10u32..=50) {
            let cfg = SlaConfig::default();
            let (hi, lo) = (a.max(b), a.min(b));
            let s = survey(&format!("{}.{}", mean / 10, mean % 10));
            let at = |v: u32| evaluate_renewal(&annual_with_resolution(&format!("{}.{:02}", v / 100, v % 100)), &s, &cfg).unwrap();
            let (better, worse) = (at(hi), at(lo));
            proptest::prop_assert!(worse.outcome >= better.outcome);
            proptest::prop_assert_eq!(at(hi), better);
        }
    }
}
