//! A year of tickets and outages against one vendor, scored into quarterly
//! reports, consolidated, and run through the renewal rules.

use chrono::Duration;
use itil_forge::period::Period;
use itil_forge::{Command, Ctx, Engine, Timestamp};
use serde_json::{json, Value};

fn run(engine: &mut Engine, at: Timestamp, cmd: Value) -> itil_forge::Result<Value> {
    let cmd: Command = serde_json::from_value(cmd).expect("well-formed command");
    Ok(engine.execute(&cmd, &Ctx::new("it-manager", at))?.response)
}

fn main() -> itil_forge::Result<()> {
    let jan: Timestamp = "2016-01-04T09:00:00Z".parse().unwrap();
    let mut e = Engine::default();
    run(&mut e, jan, json!({ "type": "register_vendor", "name": "Acme Systems", "contact": "+91-80-5550100",
                             "categories": { "Laptops": true, "Servers": true } }))?;
    run(&mut e, jan, json!({ "type": "register_asset", "asset": {
        "device": "PowerEdge R730", "category": "Servers", "vendor_id": "ven000001", "location": "DC-1",
        "purchase_date": "2016-01-04", "warranty_months": 36 } }))?;

    // 150 tickets, one a week-ish; one is left open at year end
    for i in 0..150 {
        let at = jan + Duration::hours(56 * i);
        let t = run(&mut e, at, json!({ "type": "open_ticket", "ticket": {
            "category": if i % 2 == 0 { "Application" } else { "Hardware" },
            "issue": format!("issue {}", i % 12), "username": format!("user{}", i % 9),
            "asset_tag": "AST000001", "risk_level": "Medium", "scope": "SingleUser" } }))?;
        let id = t["id"].as_str().unwrap().to_string();
        run(&mut e, at, json!({ "type": "analyze_ticket", "ticket_id": id }))?;
        if i == 77 {
            run(&mut e, at, json!({ "type": "annotate_ticket", "ticket_id": id, "reason": "vendor part backordered" }))?;
            continue;
        }
        let permanence = if i % 5 == 0 { "Temporary" } else { "Permanent" };
        run(&mut e, at + Duration::hours(2), json!({ "type": "resolve_ticket", "ticket_id": id,
                                                     "resolution": "fixed", "permanence": permanence }))?;
    }
    // a Q3 outage that spills into Q4
    let start: Timestamp = "2016-09-30T22:00:00Z".parse().unwrap();
    run(&mut e, jan, json!({ "type": "register_service_user", "service": "erp", "recipient": "Finance" }))?;
    run(&mut e, start, json!({ "type": "open_outage", "service": "erp", "vendor_id": "ven000001" }))?;
    run(&mut e, start + Duration::hours(5), json!({ "type": "close_outage", "service": "erp" }))?;

    let vendor = "ven000001".into();
    print!("{}", e.vendor_report(&vendor, Period::quarter(2016, 3)?)?.render_text());

    let scores = [[4, 5, 4, 4], [5, 4, 4, 5], [4, 4, 5, 4], [4, 4, 4, 5]];
    let review = e.config().sla.clone();
    for (q, s) in scores.iter().enumerate() {
        let period = Period::quarter(2016, q as u8 + 1)?;
        assert!(review.period_kind_ok(&period));
        run(&mut e, jan + Duration::days(370), json!({ "type": "record_survey", "vendor_id": "ven000001",
                                                        "period": period, "scores": s }))?;
    }
    let annual = e.annual_report(&vendor, 2016)?;
    println!("2016: {} tickets, {} unresolved", annual.total_tickets, annual.unresolved_pct());
    let decision = run(&mut e, jan + Duration::days(370), json!({ "type": "evaluate_renewal", "vendor_id": "ven000001", "year": 2016 }))?;
    let d = &decision["decision"];
    println!("renewal: {} {} (survey mean {}, unresolved {}%)", d["outcome"], d["reasons"], d["survey_mean"], d["unresolved_pct"]);
    Ok(())
}
