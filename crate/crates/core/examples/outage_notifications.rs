//! Outage start/end notices to registered service users, with the 15-minute
//! lateness flag, plus delivery through a sink.

use chrono::Duration;
use itil_forge::notifications::{deliver, MemorySink};
use itil_forge::{Command, Ctx, Engine, Timestamp};
use serde_json::{json, Value};

fn run(engine: &mut Engine, at: Timestamp, cmd: Value) -> itil_forge::Result<itil_forge::engine::Executed> {
    let cmd: Command = serde_json::from_value(cmd).expect("well-formed command");
    engine.execute(&cmd, &Ctx::new("noc", at))
}

fn main() -> itil_forge::Result<()> {
    let t0: Timestamp = "2016-07-11T08:00:00Z".parse().unwrap();
    let mut e = Engine::default();
    let sink = MemorySink::default();
    for who in ["Finance", "Sales", "hr-desk@example.com"] {
        run(&mut e, t0, json!({ "type": "register_service_user", "service": "email", "recipient": who }))?;
    }

    let opened = run(&mut e, t0, json!({ "type": "open_outage", "service": "email",
                                         "alternate_endpoint": "https://webmail-dr.example.com" }))?;
    let again = run(&mut e, t0, json!({ "type": "open_outage", "service": "email" }));
    println!("second open while down: {}", again.unwrap_err());

    // ended at 09:30, but nobody closed it until 09:46 — 16 minutes late
    let end = t0 + Duration::minutes(90);
    let closed = run(&mut e, end + Duration::minutes(16), json!({ "type": "close_outage", "service": "email", "end": end }))?;

    for n in opened.notifications.iter().chain(&closed.notifications) {
        let ok = deliver(&sink, n);
        run(&mut e, n.created_at, json!({ "type": "mark_delivered", "notification_id": n.id, "accepted": ok }))?;
    }
    for n in e.notifier().notifications() {
        println!("{} {:?} late={} delivered={} to {:?}", n.id, n.kind, n.late, n.delivered, n.audience);
        println!("    {}", n.subject);
    }
    let o = &e.notifier().outages()[0];
    println!("outage lasted {} minutes", o.duration().unwrap().num_minutes());
    println!("sink received {} messages", sink.delivered().len());
    Ok(())
}
