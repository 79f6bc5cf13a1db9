//! Scheduling windows and release timing for Normal vs Emergency changes.

use chrono::Duration;
use itil_forge::change::{check_schedule_window, ChangePriority};
use itil_forge::{Command, Ctx, Engine, Timestamp};
use serde_json::{json, Value};

fn run(engine: &mut Engine, at: Timestamp, cmd: Value) -> itil_forge::Result<Value> {
    let cmd: Command = serde_json::from_value(cmd).expect("well-formed command");
    Ok(engine.execute(&cmd, &Ctx::new("change-manager", at))?.response)
}

fn main() -> itil_forge::Result<()> {
    let now: Timestamp = "2016-03-01T09:00:00Z".parse().unwrap();
    println!("lead time      Normal  Emergency");
    for hours in [23, 24, 36, 48, 49, 71, 72, 96] {
        let when = now + Duration::hours(hours);
        let ok = |p| if check_schedule_window(p, when, now).is_ok() { "ok" } else { "-" };
        println!("{hours:>4}h          {:<7} {}", ok(ChangePriority::Normal), ok(ChangePriority::Emergency));
    }

    let mut e = Engine::default();
    run(&mut e, now, json!({ "type": "create_project", "name": "Mail migration", "organization": "Acme Textiles" }))?;
    run(&mut e, now, json!({ "type": "submit_change", "draft": {
        "project_id": "prj000001", "target": "mail-server", "kind": "Software", "priority": "Emergency",
        "downtime_estimate_minutes": 30, "risk_note": "mail queue may back up",
        "alternate_solution": "webmail on the old host", "roi_justification": "security patch",
        "affected_departments": ["Finance", "Sales"] } }))?;
    run(&mut e, now, json!({ "type": "cab_decide", "change_id": "chg000001", "verdict": "Approve", "head_signoff": "CIO" }))?;

    let err = run(&mut e, now, json!({ "type": "schedule_change", "change_id": "chg000001",
                                       "scheduled_at": now + Duration::hours(72) })).unwrap_err();
    println!("emergency at +72h: {err}");
    let start = now + Duration::hours(30);
    run(&mut e, now, json!({ "type": "schedule_change", "change_id": "chg000001", "scheduled_at": start }))?;

    run(&mut e, start, json!({ "type": "record_test_run", "change_id": "chg000001",
                               "dummy_input": "1000 test mails", "outcome": "Fail", "notes": "TLS misconfigured" }))?;
    let pass = start + Duration::minutes(40);
    run(&mut e, pass, json!({ "type": "record_test_run", "change_id": "chg000001",
                              "dummy_input": "1000 test mails", "outcome": "Pass" }))?;

    let stale = run(&mut e, pass + Duration::minutes(181), json!({ "type": "approve_release", "change_id": "chg000001" }));
    println!("release 3h01m after the pass: {}", stale.unwrap_err());
    let r = run(&mut e, pass + Duration::minutes(150), json!({ "type": "approve_release", "change_id": "chg000001",
                                                               "location": "DC-1 rack 4" }))?;
    println!("release 2h30m after the pass: state {}, late warning {}", r["state"], r["release"]["late_warning"]);

    let digest = e.change_digest(&"prj000001".into(), itil_forge::period::Period::quarter(2016, 1)?)?;
    print!("{}", digest.render_text());
    Ok(())
}
