//! Append-only JSON-lines audit log.
//!
//! Every line is one [`AuditEvent`]. Events are written in batches; the first
//! event of a batch carries `batch_len` in its payload so a reader can tell a
//! complete batch from one cut short by a crash. Sequence numbers are dense
//! from 1.

use std::fs::{self, File, OpenOptions};
use std::io::{Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::common::{ActorId, Timestamp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditEvent {
    pub seq: u64,
    pub ts: Timestamp,
    pub actor: ActorId,
    pub entity_type: String,
    pub entity_id: String,
    pub event_kind: String,
    pub payload: Value,
}

impl AuditEvent {
    pub fn batch_len(&self) -> Option<u64> {
        self.payload.get("batch_len").and_then(Value::as_u64)
    }
}

/// An event before it has a place in the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDraft {
    pub entity_type: String,
    pub entity_id: String,
    pub event_kind: String,
    pub payload: Value,
}

impl EventDraft {
    pub fn new(entity_type: &str, entity_id: impl ToString, event_kind: &str, payload: Value) -> Self {
        Self {
            entity_type: entity_type.to_string(),
            entity_id: entity_id.to_string(),
            event_kind: event_kind.to_string(),
            payload,
        }
    }
}

/// A batch read back from the log, with the 1-based line of its first event.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub first_line: usize,
    pub events: Vec<AuditEvent>,
}

/// Result of scanning log text.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub batches: Vec<Batch>,
    /// Byte length of the complete batches.
    pub complete_len: u64,
    /// Events of an unfinished final batch, if any.
    pub unfinished: usize,
}

/// Parses a log, rejecting any malformed or unterminated line.
pub fn scan(text: &str) -> Result<Scan> {
    let mut batches: Vec<Batch> = Vec::new();
    let mut current: Option<(Batch, u64)> = None;
    let mut offset = 0u64;
    let mut complete_len = 0u64;
    let mut expected_seq = 1u64;
    for (idx, raw) in text.split_inclusive('\n').enumerate() {
        let line_no = idx + 1;
        offset += raw.len() as u64;
        let Some(body) = raw.strip_suffix('\n') else {
            return Err(Error::CorruptLog {
                line: line_no,
                message: "truncated line (no terminating newline)".into(),
            });
        };
        let event: AuditEvent = serde_json::from_str(body).map_err(|e| Error::CorruptLog {
            line: line_no,
            message: e.to_string(),
        })?;
        if event.seq != expected_seq {
            return Err(Error::CorruptLog {
                line: line_no,
                message: format!("expected seq {expected_seq}, found {}", event.seq),
            });
        }
        expected_seq += 1;
        match current.take() {
            None => {
                let len = event.batch_len().filter(|&n| n >= 1).ok_or_else(|| Error::CorruptLog {
                    line: line_no,
                    message: "batch start without batch_len".into(),
                })?;
                current = Some((Batch { first_line: line_no, events: vec![event] }, len));
            }
            Some((mut batch, len)) => {
                if event.batch_len().is_some() {
                    return Err(Error::CorruptLog {
                        line: line_no,
                        message: format!("new batch starts inside batch at line {}", batch.first_line),
                    });
                }
                batch.events.push(event);
                current = Some((batch, len));
            }
        }
        if let Some((batch, len)) = &current {
            if batch.events.len() as u64 == *len {
                batches.push(current.take().expect("present").0);
                complete_len = offset;
            }
        }
    }
    Ok(Scan {
        batches,
        complete_len,
        unfinished: current.map(|(b, _)| b.events.len()).unwrap_or(0),
    })
}

pub fn read_batches(path: &Path) -> Result<Vec<Batch>> {
    let text = read_text(path)?;
    Ok(scan(&text)?.batches)
}

fn read_text(path: &Path) -> Result<String> {
    match fs::read(path) {
        Ok(bytes) => String::from_utf8(bytes).map_err(|e| {
            let line = e.as_bytes()[..e.utf8_error().valid_up_to()]
                .iter()
                .filter(|&&b| b == b'\n')
                .count()
                + 1;
            Error::CorruptLog { line, message: "invalid UTF-8".into() }
        }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(String::new()),
        Err(e) => Err(storage(e)),
    }
}

fn storage(e: std::io::Error) -> Error {
    Error::Storage { message: e.to_string() }
}

/// Drops a final line that is unterminated or does not parse. Returns
/// whether anything was removed.
pub fn repair_torn_tail(path: &Path) -> Result<bool> {
    let text = read_text(path)?;
    if text.is_empty() {
        return Ok(false);
    }
    let body = text.strip_suffix('\n').unwrap_or(&text);
    let last_start = body.rfind('\n').map(|i| i + 1).unwrap_or(0);
    let last = &text[last_start..];
    let torn = !last.ends_with('\n')
        || serde_json::from_str::<AuditEvent>(last.trim_end_matches('\n')).is_err();
    if !torn {
        return Ok(false);
    }
    let file = OpenOptions::new().write(true).open(path).map_err(storage)?;
    file.set_len(last_start as u64).map_err(storage)?;
    file.sync_all().map_err(storage)?;
    Ok(true)
}

/// Writer for a log file. One writer per file.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
    len: u64,
    next_seq: u64,
    fail_next: bool,
}

impl EventLog {
    /// Opens (creating if needed) and returns the complete batches. An
    /// unfinished final batch is cut off the file.
    pub fn open(path: impl Into<PathBuf>) -> Result<(Self, Vec<Batch>)> {
        let path = path.into();
        let text = read_text(&path)?;
        let scan = scan(&text)?;
        let file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&path)
            .map_err(storage)?;
        if scan.complete_len < text.len() as u64 {
            file.set_len(scan.complete_len).map_err(storage)?;
            file.sync_all().map_err(storage)?;
        }
        let next_seq = scan
            .batches
            .last()
            .and_then(|b| b.events.last())
            .map(|e| e.seq + 1)
            .unwrap_or(1);
        Ok((
            Self {
                path,
                file,
                len: scan.complete_len,
                next_seq,
                fail_next: false,
            },
            scan.batches,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn is_empty(&self) -> bool {
        self.next_seq == 1
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// Makes the next append write half its bytes and then fail, as a crash
    /// mid-write would.
    pub fn inject_failure(&mut self) {
        self.fail_next = true;
    }

    /// Durably appends a batch and returns its seq range. On failure the
    /// file is cut back to its previous length.
    pub fn append(&mut self, actor: &ActorId, ts: Timestamp, drafts: Vec<EventDraft>) -> Result<(u64, u64)> {
        let events = frame(self.next_seq, actor, ts, drafts)?;
        let mut bytes = Vec::new();
        for e in &events {
            serde_json::to_writer(&mut bytes, e).map_err(|e| Error::Storage { message: e.to_string() })?;
            bytes.push(b'\n');
        }
        let written = if self.fail_next {
            self.fail_next = false;
            let _ = self.file.write_all(&bytes[..bytes.len() / 2]);
            Err(std::io::Error::other("injected write failure"))
        } else {
            self.file.write_all(&bytes).and_then(|_| self.file.sync_data())
        };
        if let Err(e) = written {
            let _ = self.file.set_len(self.len);
            let _ = self.file.seek(SeekFrom::End(0));
            return Err(storage(e));
        }
        self.len += bytes.len() as u64;
        let first = self.next_seq;
        self.next_seq += events.len() as u64;
        Ok((first, self.next_seq - 1))
    }
}

/// Assigns seqs and the batch header; the same framing the writer uses.
pub fn frame(first_seq: u64, actor: &ActorId, ts: Timestamp, drafts: Vec<EventDraft>) -> Result<Vec<AuditEvent>> {
    if drafts.is_empty() {
        return Err(Error::validation("batch", "empty batch"));
    }
    let len = drafts.len() as u64;
    drafts
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            let mut payload = d.payload;
            if i == 0 {
                match &mut payload {
                    Value::Object(map) => {
                        map.insert("batch_len".into(), Value::from(len));
                    }
                    _ => return Err(Error::validation("payload", "batch head payload must be an object")),
                }
            }
            Ok(AuditEvent {
                seq: first_seq + i as u64,
                ts,
                actor: actor.clone(),
                entity_type: d.entity_type,
                entity_id: d.entity_id,
                event_kind: d.event_kind,
                payload,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};
    use serde_json::json;

    fn ts() -> Timestamp {
        Utc.with_ymd_and_hms(2016, 8, 1, 10, 0, 0).unwrap()
    }

    fn draft(kind: &str) -> EventDraft {
        EventDraft::new("ticket", "hrd000001", kind, json!({ "n": kind }))
    }

    fn actor() -> ActorId {
        "ops".into()
    }

    #[test]
    fn append_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let (mut log, batches) = EventLog::open(&path).unwrap();
        assert!(batches.is_empty());
        assert!(log.is_empty());
        assert_eq!(log.append(&actor(), ts(), vec![draft("a")]).unwrap(), (1, 1));
        assert_eq!(log.append(&actor(), ts(), vec![draft("b"), draft("c")]).unwrap(), (2, 3));
        assert!(log.append(&actor(), ts(), vec![]).is_err());
        drop(log);
        let (log, batches) = EventLog::open(&path).unwrap();
        assert_eq!(batches.len(), 2);
        assert_eq!(batches[1].first_line, 2);
        assert_eq!(batches[1].events[0].batch_len(), Some(2));
        assert_eq!(log.next_seq(), 4);
    }

    #[test]
    fn unterminated_last_line_names_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let (mut log, _) = EventLog::open(&path).unwrap();
        log.append(&actor(), ts(), vec![draft("a")]).unwrap();
        log.append(&actor(), ts(), vec![draft("b")]).unwrap();
        drop(log);
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, &text[..text.len() - 10]).unwrap();
        match EventLog::open(&path) {
            Err(Error::CorruptLog { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected corrupt log, got {other:?}"),
        }
        assert!(repair_torn_tail(&path).unwrap());
        let (_, batches) = EventLog::open(&path).unwrap();
        assert_eq!(batches.len(), 1);
        assert!(!repair_torn_tail(&path).unwrap());
    }

    #[test]
    fn garbage_line_is_rejected() {
        let text = "{\"seq\":1}\n";
        assert!(matches!(scan(text), Err(Error::CorruptLog { line: 1, .. })));
    }

    #[test]
    fn unfinished_batch_is_dropped_on_open() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let (mut log, _) = EventLog::open(&path).unwrap();
        log.append(&actor(), ts(), vec![draft("a")]).unwrap();
        log.append(&actor(), ts(), vec![draft("b"), draft("c"), draft("d")]).unwrap();
        drop(log);
        let text = fs::read_to_string(&path).unwrap();
        let keep: Vec<&str> = text.split_inclusive('\n').take(3).collect();
        fs::write(&path, keep.concat()).unwrap();
        let scanned = scan(&keep.concat()).unwrap();
        assert_eq!((scanned.batches.len(), scanned.unfinished), (1, 2));
        let (mut log, batches) = EventLog::open(&path).unwrap();
        assert_eq!(batches.len(), 1);
        assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 1);
        assert_eq!(log.append(&actor(), ts(), vec![draft("e")]).unwrap(), (2, 2));
    }

    #[test]
    fn failed_append_leaves_no_partial_batch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let (mut log, _) = EventLog::open(&path).unwrap();
        log.append(&actor(), ts(), vec![draft("a")]).unwrap();
        let before = fs::read(&path).unwrap();
        log.inject_failure();
        assert!(matches!(
            log.append(&actor(), ts(), vec![draft("b"), draft("c")]),
            Err(Error::Storage { .. })
        ));
        assert_eq!(fs::read(&path).unwrap(), before);
        assert_eq!(log.append(&actor(), ts(), vec![draft("b")]).unwrap(), (2, 2));
        let (_, batches) = EventLog::open(&path).unwrap();
        assert_eq!(batches.len(), 2);
    }

    #[test]
    fn seq_gaps_are_corruption() {
        let e = |seq: u64| {
            serde_json::to_string(&AuditEvent {
                seq,
                ts: ts(),
                actor: actor(),
                entity_type: "t".into(),
                entity_id: "x".into(),
                event_kind: "k".into(),
                payload: json!({ "batch_len": 1 }),
            })
            .unwrap()
        };
        let text = format!("{}\n{}\n", e(1), e(3));
        assert!(matches!(scan(&text), Err(Error::CorruptLog { line: 2, .. })));
    }
}
