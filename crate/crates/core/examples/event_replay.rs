//! Commands go through the append-only log; the log alone rebuilds the same
//! state, and a torn final line is reported by line number, then repaired.

use std::io::Write;

use itil_forge::audit::{read_batches, repair_torn_tail, EventLog};
use itil_forge::{ActorId, Command, Ctx, Engine, EngineConfig, Error, Timestamp};
use serde_json::json;

fn main() -> itil_forge::Result<()> {
    let dir = std::env::temp_dir().join(format!("itil-forge-replay-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let path = dir.join("events.jsonl");
    let _ = std::fs::remove_file(&path);

    let (mut log, _) = EventLog::open(&path)?;
    let mut live = Engine::default();
    let actor = ActorId::new("it-manager");
    let t0: Timestamp = "2016-01-04T09:00:00Z".parse().unwrap();
    let commands = [
        json!({ "type": "create_project", "name": "Campus network refresh", "organization": "Acme Textiles" }),
        json!({ "type": "submit_evidence", "project_id": "prj000001", "phase": "Strategy",
                "kind": "RequirementDoc", "doc_ref": "REQ-1" }),
        json!({ "type": "register_service_user", "service": "email", "recipient": "Finance" }),
        json!({ "type": "open_outage", "service": "email" }),
        json!({ "type": "advance_phase", "project_id": "prj000001" }), // refused: gate open
        json!({ "type": "close_outage", "service": "email" }),
    ];
    for (i, c) in commands.into_iter().enumerate() {
        let cmd: Command = serde_json::from_value(c).expect("well-formed command");
        let at = t0 + chrono::Duration::minutes(10 * i as i64);
        match live.execute(&cmd, &Ctx::new(actor.clone(), at)) {
            Ok(done) => {
                let (first, last) = log.append(&actor, at, done.events)?;
                println!("{:<22} events {first}..={last}", cmd.name());
            }
            Err(e) => println!("{:<22} rejected, nothing logged: {e}", cmd.name()),
        }
    }
    drop(log);

    let batches = read_batches(&path)?;
    let rebuilt = Engine::replay(EngineConfig::default(), &batches)?;
    println!("{} batches replayed; state identical: {}", batches.len(), rebuilt.state_json() == live.state_json());

    // simulate a crash halfway through writing a line
    let mut f = std::fs::OpenOptions::new().append(true).open(&path).expect("log");
    f.write_all(br#"{"seq":99,"entity_ty"#).expect("write");
    drop(f);
    match read_batches(&path) {
        Err(Error::CorruptLog { line, message }) => println!("corrupt log at line {line}: {message}"),
        other => println!("unexpected: {other:?}"),
    }
    println!("repaired: {}", repair_torn_tail(&path)?);
    println!("batches after repair: {}", read_batches(&path)?.len());
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
