use std::io::Write;

use itil_forge::audit::{read_batches, EventDraft, EventLog};
use itil_forge::{ActorId, Error, Timestamp};
use serde_json::json;

fn ts() -> Timestamp {
    "2016-01-04T09:00:00Z".parse().unwrap()
}

fn drafts(n: usize) -> Vec<EventDraft> {
    (0..n).map(|i| EventDraft::new("ticket", format!("apl{i:06}"), "open_ticket", json!({ "i": i }))).collect()
}

#[test]
fn batches_carry_their_length_on_the_first_event() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    let (mut log, batches) = EventLog::open(&path).unwrap();
    assert!(batches.is_empty() && log.is_empty());
    let actor = ActorId::new("a");
    assert_eq!(log.append(&actor, ts(), drafts(3)).unwrap(), (1, 3));
    assert_eq!(log.append(&actor, ts(), drafts(1)).unwrap(), (4, 4));

    let batches = read_batches(&path).unwrap();
    assert_eq!(batches.len(), 2);
    assert_eq!(batches[0].events[0].batch_len(), Some(3));
    assert_eq!(batches[0].events[1].batch_len(), None);
    assert_eq!(batches[1].first_line, 4);
    let seqs: Vec<u64> = batches.iter().flat_map(|b| b.events.iter().map(|e| e.seq)).collect();
    assert_eq!(seqs, [1, 2, 3, 4]);
}

#[test]
fn failed_append_leaves_the_file_as_it_was() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    let (mut log, _) = EventLog::open(&path).unwrap();
    let actor = ActorId::new("a");
    log.append(&actor, ts(), drafts(2)).unwrap();
    let before = std::fs::read(&path).unwrap();

    log.inject_failure();
    assert!(matches!(log.append(&actor, ts(), drafts(4)), Err(Error::Storage { .. })));
    assert_eq!(std::fs::read(&path).unwrap(), before);
    assert_eq!(log.next_seq(), 3);
    assert_eq!(log.append(&actor, ts(), drafts(1)).unwrap(), (3, 3));
    assert_eq!(read_batches(&path).unwrap().len(), 2);
}

#[test]
fn torn_tail_is_reported_by_line_then_cut_on_open() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    {
        let (mut log, _) = EventLog::open(&path).unwrap();
        log.append(&ActorId::new("a"), ts(), drafts(2)).unwrap();
        log.append(&ActorId::new("a"), ts(), drafts(3)).unwrap();
    }
    let full = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &full[..full.len() - 7]).unwrap();

    match read_batches(&path) {
        Err(Error::CorruptLog { line, .. }) => assert_eq!(line, 5),
        other => panic!("expected a corrupt-log error, got {other:?}"),
    }
    // a torn line is not something the writer can silently drop
    assert!(EventLog::open(&path).is_err());

    std::fs::write(&path, full.lines().take(4).map(|l| format!("{l}\n")).collect::<String>()).unwrap();
    let (log, batches) = EventLog::open(&path).unwrap();
    assert_eq!(batches.len(), 1, "the half-written second batch is dropped");
    assert_eq!(log.next_seq(), 3);
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
}

#[test]
fn garbage_in_the_middle_is_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    {
        let (mut log, _) = EventLog::open(&path).unwrap();
        log.append(&ActorId::new("a"), ts(), drafts(1)).unwrap();
    }
    let mut f = std::fs::OpenOptions::new().append(true).open(&path).unwrap();
    f.write_all(b"not json\n{}\n").unwrap();
    drop(f);
    assert!(matches!(read_batches(&path), Err(Error::CorruptLog { line: 2, .. })));
}
