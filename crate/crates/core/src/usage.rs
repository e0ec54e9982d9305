//! Per-user search and click history.
//!
//! [`UsageLog`] is rebuilt by applying [`UsageEvent`]s in order; the same
//! event sequence always produces the same state. Events are never changed
//! once applied: a close event completes the pending open it pairs with in
//! the derived click table, while the journal keeps both.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::miner::SequenceRecord;

/// Default inactivity gap that splits sessions, in seconds.
pub const DEFAULT_SESSION_TIMEOUT_SECS: i64 = 30 * 60;

/// Unix time in whole seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn seconds(self) -> i64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum UsageEvent {
    Search {
        user: String,
        query: String,
        ts: Timestamp,
    },
    ClickOpen {
        user: String,
        query: String,
        doc_id: String,
        ts: Timestamp,
        /// 1-based position of the link in the list the user clicked from.
        position: Option<u32>,
    },
    ClickClose {
        user: String,
        query: String,
        doc_id: String,
        ts: Timestamp,
    },
}

impl UsageEvent {
    pub fn user(&self) -> &str {
        match self {
            UsageEvent::Search { user, .. }
            | UsageEvent::ClickOpen { user, .. }
            | UsageEvent::ClickClose { user, .. } => user,
        }
    }

    pub fn ts(&self) -> Timestamp {
        match self {
            UsageEvent::Search { ts, .. } | UsageEvent::ClickOpen { ts, .. } | UsageEvent::ClickClose { ts, .. } => *ts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchEvent {
    pub user: String,
    pub query: String,
    pub ts: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickEvent {
    pub user: String,
    pub query: String,
    pub doc_id: String,
    pub open_ts: Timestamp,
    /// Never earlier than `open_ts`.
    pub close_ts: Option<Timestamp>,
    pub position: Option<u32>,
    /// The close arrived with a timestamp before the open and was clamped.
    pub clamped: bool,
}

impl ClickEvent {
    pub fn is_complete(&self) -> bool {
        self.close_ts.is_some()
    }

    /// Close minus open; 0 while the click is still pending.
    pub fn dwell_seconds(&self) -> i64 {
        self.close_ts.map_or(0, |c| c.0 - self.open_ts.0)
    }

    /// Close time, or open time for a pending click.
    pub fn last_ts(&self) -> Timestamp {
        self.close_ts.unwrap_or(self.open_ts)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UsageError {
    OrphanClose { user: String, query: String, doc_id: String },
    /// A user's searches must be appended in time order.
    OutOfOrder { user: String, ts: Timestamp, last: Timestamp },
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UsageError::OrphanClose { user, query, doc_id } => {
                write!(f, "close for {doc_id:?} (user {user:?}, query {query:?}) has no pending open")
            }
            UsageError::OutOfOrder { user, ts, last } => {
                write!(f, "search by {user:?} at {} precedes their last search at {}", ts.0, last.0)
            }
        }
    }
}

impl core::error::Error for UsageError {}

/// What applying an event did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Applied {
    Search,
    Opened,
    Closed { dwell_seconds: i64, clamped: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionItem {
    pub doc_id: String,
    pub open_ts: Timestamp,
    pub dwell_seconds: i64,
}

/// A run of one user's completed clicks with no inactivity gap above the
/// session timeout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickSequence {
    pub user: String,
    pub session_id: usize,
    pub items: Vec<SessionItem>,
}

impl ClickSequence {
    /// Miner input: doc ids, open times, and dwell converted to minutes.
    pub fn to_record(&self) -> SequenceRecord<String> {
        let items = self.items.iter().map(|i| i.doc_id.clone()).collect();
        let ts = self.items.iter().map(|i| i.open_ts.0).collect();
        let dwell = self.items.iter().map(|i| i.dwell_seconds as f64 / 60.0).collect();
        SequenceRecord::new(items, ts, dwell).expect("sessions are non-empty with parallel fields")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkHistory {
    pub doc_id: String,
    pub clicks: usize,
    pub total_dwell_seconds: i64,
}

/// One row group of the per-user search-key table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryHistory {
    pub query: String,
    pub visits: usize,
    pub links: Vec<LinkHistory>,
}

type PendingKey = (String, String, String);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UsageLog {
    journal: Vec<UsageEvent>,
    searches: Vec<SearchEvent>,
    clicks: Vec<ClickEvent>,
    /// Indices into `clicks` of still-open clicks, most recent last.
    pending: BTreeMap<PendingKey, Vec<usize>>,
    last_search: BTreeMap<String, Timestamp>,
}

impl UsageLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds state from an event sequence, stopping at the first event
    /// that cannot be applied (its index is returned with the error).
    pub fn from_events<I>(events: I) -> Result<Self, (usize, UsageError)>
    where
        I: IntoIterator<Item = UsageEvent>,
    {
        let mut log = Self::new();
        for (i, ev) in events.into_iter().enumerate() {
            log.apply(ev).map_err(|e| (i, e))?;
        }
        Ok(log)
    }

    /// Whether `event` can be applied, without applying it.
    pub fn check(&self, event: &UsageEvent) -> Result<(), UsageError> {
        match event {
            UsageEvent::Search { user, ts, .. } => match self.last_search.get(user) {
                Some(last) if ts < last => Err(UsageError::OutOfOrder { user: user.clone(), ts: *ts, last: *last }),
                _ => Ok(()),
            },
            UsageEvent::ClickOpen { .. } => Ok(()),
            UsageEvent::ClickClose { user, query, doc_id, .. } => {
                if self.has_pending(user, query, doc_id) {
                    Ok(())
                } else {
                    Err(UsageError::OrphanClose { user: user.clone(), query: query.clone(), doc_id: doc_id.clone() })
                }
            }
        }
    }

    /// Applies one event. On error the log is unchanged.
    ///
    /// A close pairs with the most recent pending open for the same
    /// (user, query, doc). A close timestamp before its open is clamped to
    /// the open time (dwell 0) and the click is flagged.
    pub fn apply(&mut self, event: UsageEvent) -> Result<Applied, UsageError> {
        self.check(&event)?;
        let applied = match &event {
            UsageEvent::Search { user, query, ts } => {
                self.last_search.insert(user.clone(), *ts);
                self.searches.push(SearchEvent { user: user.clone(), query: query.clone(), ts: *ts });
                Applied::Search
            }
            UsageEvent::ClickOpen { user, query, doc_id, ts, position } => {
                self.pending
                    .entry((user.clone(), query.clone(), doc_id.clone()))
                    .or_default()
                    .push(self.clicks.len());
                self.clicks.push(ClickEvent {
                    user: user.clone(),
                    query: query.clone(),
                    doc_id: doc_id.clone(),
                    open_ts: *ts,
                    close_ts: None,
                    position: *position,
                    clamped: false,
                });
                Applied::Opened
            }
            UsageEvent::ClickClose { user, query, doc_id, ts } => {
                let key = (user.clone(), query.clone(), doc_id.clone());
                let stack = self.pending.get_mut(&key).expect("checked above");
                let idx = stack.pop().expect("pending stacks are never left empty");
                if stack.is_empty() {
                    self.pending.remove(&key);
                }
                let click = &mut self.clicks[idx];
                let clamped = *ts < click.open_ts;
                if clamped {
                    log::warn!(
                        "close for {doc_id:?} at {} precedes open at {}; dwell clamped to 0",
                        ts.0,
                        click.open_ts.0
                    );
                }
                click.close_ts = Some(if clamped { click.open_ts } else { *ts });
                click.clamped = clamped;
                Applied::Closed { dwell_seconds: click.dwell_seconds(), clamped }
            }
        };
        self.journal.push(event);
        Ok(applied)
    }

    pub fn record_search(&mut self, user: &str, query: &str, ts: Timestamp) -> Result<Applied, UsageError> {
        self.apply(UsageEvent::Search { user: user.into(), query: query.into(), ts })
    }

    pub fn open_click(
        &mut self,
        user: &str,
        query: &str,
        doc_id: &str,
        ts: Timestamp,
        position: Option<u32>,
    ) -> Result<Applied, UsageError> {
        self.apply(UsageEvent::ClickOpen {
            user: user.into(),
            query: query.into(),
            doc_id: doc_id.into(),
            ts,
            position,
        })
    }

    pub fn close_click(&mut self, user: &str, query: &str, doc_id: &str, ts: Timestamp) -> Result<Applied, UsageError> {
        self.apply(UsageEvent::ClickClose { user: user.into(), query: query.into(), doc_id: doc_id.into(), ts })
    }

    /// Every applied event, in order.
    pub fn journal(&self) -> &[UsageEvent] {
        &self.journal
    }

    pub fn searches(&self) -> &[SearchEvent] {
        &self.searches
    }

    pub fn clicks(&self) -> &[ClickEvent] {
        &self.clicks
    }

    pub fn is_empty(&self) -> bool {
        self.journal.is_empty()
    }

    pub fn has_pending(&self, user: &str, query: &str, doc_id: &str) -> bool {
        self.pending.contains_key(&(user.into(), query.into(), doc_id.into()))
    }

    pub fn last_search_ts(&self, user: &str) -> Option<Timestamp> {
        self.last_search.get(user).copied()
    }

    /// Number of times `user` searched for `query`.
    pub fn search_count(&self, user: &str, query: &str) -> usize {
        self.searches.iter().filter(|s| s.user == user && s.query == query).count()
    }

    /// The user's clicks (pending and completed) recorded under `query`.
    pub fn clicks_for<'a>(&'a self, user: &'a str, query: &'a str) -> impl Iterator<Item = &'a ClickEvent> + 'a {
        self.clicks.iter().filter(move |c| c.user == user && c.query == query)
    }

    /// Users with at least one event, ascending.
    pub fn users(&self) -> Vec<&str> {
        let mut users: Vec<&str> = self.journal.iter().map(UsageEvent::user).collect();
        users.sort_unstable();
        users.dedup();
        users
    }

    /// The user's completed clicks ordered by open time, split wherever
    /// consecutive opens are more than `timeout_secs` apart.
    pub fn sessions_of(&self, user: &str, timeout_secs: i64) -> Vec<ClickSequence> {
        let mut done: Vec<&ClickEvent> = self.clicks.iter().filter(|c| c.user == user && c.is_complete()).collect();
        done.sort_by_key(|c| c.open_ts);

        let mut sessions: Vec<ClickSequence> = Vec::new();
        let mut prev: Option<Timestamp> = None;
        for click in done {
            let item = SessionItem {
                doc_id: click.doc_id.clone(),
                open_ts: click.open_ts,
                dwell_seconds: click.dwell_seconds(),
            };
            match (prev, sessions.last_mut()) {
                (Some(p), Some(current)) if click.open_ts.0 - p.0 <= timeout_secs => current.items.push(item),
                _ => sessions.push(ClickSequence {
                    user: user.into(),
                    session_id: sessions.len(),
                    items: alloc::vec![item],
                }),
            }
            prev = Some(click.open_ts);
        }
        sessions
    }

    /// Per query: how often the user searched it, and per link how often
    /// it was opened and the total completed dwell.
    pub fn history(&self, user: &str) -> Vec<QueryHistory> {
        let mut by_query: BTreeMap<&str, (usize, BTreeMap<&str, LinkHistory>)> = BTreeMap::new();
        for s in self.searches.iter().filter(|s| s.user == user) {
            by_query.entry(&s.query).or_default().0 += 1;
        }
        for c in self.clicks.iter().filter(|c| c.user == user) {
            let link = by_query
                .entry(&c.query)
                .or_default()
                .1
                .entry(&c.doc_id)
                .or_insert_with(|| LinkHistory { doc_id: c.doc_id.clone(), clicks: 0, total_dwell_seconds: 0 });
            link.clicks += 1;
            link.total_dwell_seconds += c.dwell_seconds();
        }
        by_query
            .into_iter()
            .map(|(query, (visits, links))| QueryHistory {
                query: query.into(),
                visits,
                links: links.into_values().collect(),
            })
            .collect()
    }
}
