//! A project walks Strategy → CSI; each advance is refused until the
//! current gate has its evidence and has been closed.

use itil_forge::lifecycle::{EvidenceKind, GateChecklist, Lifecycle, Phase};
use itil_forge::{ActorId, Timestamp};

fn main() -> itil_forge::Result<()> {
    let at: Timestamp = "2016-01-04T09:00:00Z".parse().unwrap();
    let actor = ActorId::new("it-manager");
    let mut lc = Lifecycle::new(GateChecklist::default());
    let id = lc.create_project("Campus network refresh", "Acme Textiles", at)?.id.clone();

    loop {
        let phase = lc.get(&id)?.current_phase;
        let missing = lc.get(&id)?.current_gate().missing();
        println!("{phase}: needs {missing:?}");

        if phase.successor().is_some() {
            println!("  advance refused: {}", lc.advance_phase(&id).unwrap_err());
        }
        for kind in missing {
            let doc = format!("{}-{kind:?}", phase.as_str()).into();
            lc.submit_evidence(&id, phase, kind, doc, at)?;
        }
        lc.close_gate(&id, phase, &actor, at)?;
        match lc.advance_phase(&id) {
            Ok(p) => println!("  advanced to {}", p.current_phase),
            Err(e) => {
                println!("  {e}");
                break;
            }
        }
    }

    // evidence for a phase the project has left is rejected
    let late = lc.submit_evidence(&id, Phase::Strategy, EvidenceKind::RequirementDoc, "REQ-late".into(), at);
    println!("late Strategy evidence: {}", late.unwrap_err());
    let history: Vec<String> = lc.get(&id)?.phase_history.iter().map(Phase::to_string).collect();
    println!("history: {}", history.join(" -> "));
    Ok(())
}
