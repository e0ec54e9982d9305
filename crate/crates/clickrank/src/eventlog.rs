//! JSON-lines persistence of usage events.
//!
//! One event per line:
//!
//! ```text
//! {"type":"search","user":"alice","query":"card","ts":"2026-10-16T12:00:00Z"}
//! {"type":"click_open","user":"alice","query":"card","doc":"d3","ts":"2026-10-16T12:00:05Z","position":3}
//! {"type":"click_close","user":"alice","query":"card","doc":"d3","ts":"2026-10-16T12:05:35Z"}
//! ```
//!
//! `doc` is absent on search events; `position` is optional on opens.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use clickrank_core::usage::{Timestamp, UsageError, UsageEvent, UsageLog};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Apply { line: usize, source: UsageError },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl ReplayError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ReplayError::Parse { line, .. } | ReplayError::Apply { line, .. } => Some(*line),
            ReplayError::Io(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum LineKind {
    Search,
    ClickOpen,
    ClickClose,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogLine {
    #[serde(rename = "type")]
    kind: LineKind,
    user: String,
    query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    doc: Option<String>,
    ts: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    position: Option<u32>,
}

pub fn format_ts(ts: Timestamp) -> String {
    DateTime::from_timestamp(ts.0, 0)
        .expect("timestamp in chrono range")
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Parses an RFC 3339 timestamp, truncating to whole seconds.
pub fn parse_ts(s: &str) -> Result<Timestamp, chrono::ParseError> {
    Ok(Timestamp(DateTime::parse_from_rfc3339(s)?.timestamp()))
}

pub fn to_timestamp(t: DateTime<Utc>) -> Timestamp {
    Timestamp(t.timestamp())
}

pub fn encode(event: &UsageEvent) -> String {
    let line = match event {
        UsageEvent::Search { user, query, ts } => LogLine {
            kind: LineKind::Search,
            user: user.clone(),
            query: query.clone(),
            doc: None,
            ts: format_ts(*ts),
            position: None,
        },
        UsageEvent::ClickOpen { user, query, doc_id, ts, position } => LogLine {
            kind: LineKind::ClickOpen,
            user: user.clone(),
            query: query.clone(),
            doc: Some(doc_id.clone()),
            ts: format_ts(*ts),
            position: *position,
        },
        UsageEvent::ClickClose { user, query, doc_id, ts } => LogLine {
            kind: LineKind::ClickClose,
            user: user.clone(),
            query: query.clone(),
            doc: Some(doc_id.clone()),
            ts: format_ts(*ts),
            position: None,
        },
    };
    serde_json::to_string(&line).expect("log line serializes")
}

pub fn decode(text: &str) -> Result<UsageEvent, String> {
    let line: LogLine = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let ts = parse_ts(&line.ts).map_err(|e| format!("bad timestamp {:?}: {e}", line.ts))?;
    let doc = |kind: &str| line.doc.clone().ok_or_else(|| format!("{kind} event without \"doc\""));
    Ok(match line.kind {
        LineKind::Search => {
            if line.doc.is_some() {
                return Err("search event must not carry \"doc\"".into());
            }
            UsageEvent::Search { user: line.user, query: line.query, ts }
        }
        LineKind::ClickOpen => UsageEvent::ClickOpen {
            doc_id: doc("click_open")?,
            user: line.user,
            query: line.query,
            ts,
            position: line.position,
        },
        LineKind::ClickClose => UsageEvent::ClickClose {
            doc_id: doc("click_close")?,
            user: line.user,
            query: line.query,
            ts,
        },
    })
}

/// Rebuilds a usage log from JSONL. Blank lines are skipped; line numbers
/// in errors are 1-based.
pub fn replay<R: BufRead>(reader: R) -> Result<UsageLog, ReplayError> {
    let mut log = UsageLog::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = decode(&line).map_err(|message| ReplayError::Parse { line: i + 1, message })?;
        log.apply(event).map_err(|source| ReplayError::Apply { line: i + 1, source })?;
    }
    Ok(log)
}

pub fn replay_file(path: &Path) -> Result<UsageLog, ReplayError> {
    match File::open(path) {
        Ok(f) => replay(BufReader::new(f)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(UsageLog::new()),
        Err(e) => Err(e.into()),
    }
}

/// Writes every event of `log` in the order it was applied.
pub fn emit<W: Write>(log: &UsageLog, mut out: W) -> io::Result<()> {
    for event in log.journal() {
        writeln!(out, "{}", encode(event))?;
    }
    out.flush()
}

/// Append-only handle on the log file. Each append is one line, flushed
/// before returning.
#[derive(Debug)]
pub struct EventWriter {
    file: File,
}

impl EventWriter {
    pub fn open(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { file })
    }

    pub fn append(&mut self, event: &UsageEvent) -> io::Result<()> {
        let mut line = encode(event);
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const T0: i64 = 1_792_152_000; // 2026-10-16T12:00:00Z

    #[test]
    fn line_format() {
        let ev = UsageEvent::Search { user: "alice".into(), query: "card".into(), ts: Timestamp(T0) };
        assert_eq!(
            encode(&ev),
            r#"{"type":"search","user":"alice","query":"card","ts":"2026-10-16T12:00:00Z"}"#
        );
        let ev = UsageEvent::ClickClose {
            user: "alice".into(),
            query: "card".into(),
            doc_id: "d3".into(),
            ts: Timestamp(T0 + 330),
        };
        assert_eq!(
            encode(&ev),
            r#"{"type":"click_close","user":"alice","query":"card","doc":"d3","ts":"2026-10-16T12:05:30Z"}"#
        );
    }

    #[test]
    fn decode_accepts_offsets_and_rejects_garbage() {
        let ev = decode(r#"{"type":"search","user":"a","query":"q","ts":"2026-10-16T14:00:00+02:00"}"#).unwrap();
        assert_eq!(ev.ts(), Timestamp(T0));
        assert!(decode(r#"{"type":"click_open","user":"a","query":"q","ts":"2026-10-16T12:00:00Z"}"#).is_err());
        assert!(decode(r#"{"type":"search","user":"a","query":"q","doc":"d","ts":"2026-10-16T12:00:00Z"}"#).is_err());
        assert!(decode(r#"{"type":"search","user":"a","query":"q","ts":"yesterday"}"#).is_err());
        assert!(decode("not json").is_err());
    }

    #[test]
    fn garbage_line_reports_its_number() {
        let log = "\
{\"type\":\"search\",\"user\":\"a\",\"query\":\"q\",\"ts\":\"2026-10-16T12:00:00Z\"}
{\"type\":\"click_open\",\"user\":\"a\",\"query\":\"q\",\"doc\":\"d\",\"ts\":\"2026-10-16T12:00:01Z\"}
%%% garbage %%%
";
        let err = replay(log.as_bytes()).unwrap_err();
        assert_eq!(err.line(), Some(3));
        assert!(err.to_string().starts_with("line 3:"));
    }

    #[test]
    fn orphan_close_in_log_is_an_error() {
        let log = "{\"type\":\"click_close\",\"user\":\"a\",\"query\":\"q\",\"doc\":\"d\",\"ts\":\"2026-10-16T12:00:00Z\"}\n";
        assert!(matches!(replay(log.as_bytes()), Err(ReplayError::Apply { line: 1, .. })));
    }

    #[test]
    fn empty_log_is_empty_state() {
        assert_eq!(replay("".as_bytes()).unwrap(), UsageLog::new());
        assert_eq!(replay("\n\n".as_bytes()).unwrap(), UsageLog::new());
    }

    #[test]
    fn writer_appends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let ev = UsageEvent::Search { user: "a".into(), query: "q".into(), ts: Timestamp(T0) };
        EventWriter::open(&path).unwrap().append(&ev).unwrap();
        EventWriter::open(&path).unwrap().append(&ev).unwrap();
        let log = replay_file(&path).unwrap();
        assert_eq!(log.searches().len(), 2);
        assert_eq!(replay_file(&dir.path().join("missing.jsonl")).unwrap(), UsageLog::new());
    }

    fn arb_event() -> impl Strategy<Value = UsageEvent> {
        let user = "[a-c]".prop_map(String::from);
        let query = prop_oneof![Just("card"), Just("atm games"), Just("ünïcode \"q\"")].prop_map(String::from);
        let doc = "d[0-3]".prop_map(String::from);
        (0u8..3, user, query, doc, 0i64..100_000, proptest::option::of(1u32..20)).prop_map(
            |(kind, user, query, doc_id, dt, position)| {
                let ts = Timestamp(T0 + dt);
                match kind {
                    0 => UsageEvent::Search { user, query, ts },
                    1 => UsageEvent::ClickOpen { user, query, doc_id, ts, position },
                    _ => UsageEvent::ClickClose { user, query, doc_id, ts },
                }
            },
        )
    }

    proptest! {
        #[test]
        fn replay_of_emit_is_identity(events in proptest::collection::vec(arb_event(), 0..50)) {
            let mut state = UsageLog::new();
            for ev in events {
                let _ = state.apply(ev);
            }
            let mut buf = Vec::new();
            emit(&state, &mut buf).unwrap();
            let back = replay(buf.as_slice()).unwrap();
            prop_assert_eq!(&back, &state);
            // idempotent: a second round trip changes nothing
            let mut again = Vec::new();
            emit(&back, &mut again).unwrap();
            prop_assert_eq!(again, buf);
        }
    }
}
