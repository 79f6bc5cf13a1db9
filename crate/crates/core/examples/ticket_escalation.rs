//! The service desk on its own: prefixed ids, the L1 → Expert ladder, the
//! one-hour expert deadline and the knowledge base feeding later tickets.

use chrono::Duration;
use itil_forge::service_desk::{
    Closure, EscalationLevel, NewTicket, Permanence, RiskLevel, Scope, ServiceDesk, TicketCategory,
};
use itil_forge::Timestamp;

fn ticket(category: TicketCategory, issue: &str, risk: RiskLevel) -> NewTicket {
    NewTicket {
        category,
        issue: issue.into(),
        username: "asha".into(),
        asset_tag: "AST000001".into(),
        risk_level: risk,
        scope: Scope::Department("Finance".into()),
    }
}

fn main() -> itil_forge::Result<()> {
    let t0: Timestamp = "2016-05-02T09:00:00Z".parse().unwrap();
    let mut desk = ServiceDesk::default();

    let erp = desk.open_ticket(ticket(TicketCategory::Application, "ERP report export fails", RiskLevel::Critical), t0)?.id.clone();
    let disk = desk.open_ticket(ticket(TicketCategory::Hardware, "Disk failure on file server", RiskLevel::High), t0)?.id.clone();
    println!("opened {erp} and {disk}");

    desk.analyze(&erp, Some("report template corrupted".into()), t0)?;
    desk.record_failed_attempt(&erp, "restart ERP client")?;
    for (i, level) in [EscalationLevel::L2, EscalationLevel::L3, EscalationLevel::Expert].into_iter().enumerate() {
        let t = desk.escalate(&erp, level, "not fixed at previous level", t0 + Duration::minutes(10 * i as i64))?;
        println!("{} -> {} (deadline {:?})", erp, t.state, t.escalation_deadline);
    }
    let deadline = desk.get(&erp)?.escalation_deadline.expect("expert tickets carry a deadline");
    for probe in [deadline - Duration::seconds(1), deadline, deadline + Duration::seconds(1)] {
        let breached: Vec<_> = desk.check_escalation_breaches(probe).iter().map(|t| t.id.to_string()).collect();
        println!("breaches at {probe}: {breached:?}");
    }
    desk.resolve(&erp, "restore report template from backup", Permanence::Permanent, deadline)?;
    desk.close_ticket(&erp, Closure::Solved, deadline + Duration::minutes(5))?;

    // the same issue, reworded, gets the working fix suggested
    let again = desk.open_ticket(ticket(TicketCategory::Application, "erp  Report export FAILS", RiskLevel::Low), t0 + Duration::days(3))?.id.clone();
    let (_, suggestion) = desk.analyze(&again, None, t0 + Duration::days(3))?;
    println!("{again}: suggested fix {:?}", suggestion.map(|a| a.resolution));

    desk.analyze(&disk, None, t0)?;
    desk.annotate_unresolved(&disk, "replacement disk on order")?;
    desk.close_ticket(&disk, Closure::ProcurementApproved { reference: "prc000007".into() }, t0 + Duration::days(1))?;

    for t in desk.queue() {
        println!("queue: {} {:?} {}", t.id, t.risk_level, t.state);
    }
    print!("{}", desk.export_csv());
    Ok(())
}
