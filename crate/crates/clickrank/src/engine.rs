//! The search engine behind the HTTP API.
//!
//! [`Engine`] owns the keyword index, the user store and the usage log.
//! Every state change is first validated against the in-memory log, then
//! appended to `events.jsonl`, then applied, all under one write lock, so
//! the file is always a replayable prefix of the in-memory state.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use clickrank_core::index::{self, CorpusIndex, Document};
use clickrank_core::miner::{self, MinerError, MiningConfig, MiningMode, SequenceRecord};
use clickrank_core::rank::{self, RankedResult};
use clickrank_core::text::StopwordList;
use clickrank_core::usage::{Applied, QueryHistory, UsageError, UsageEvent, UsageLog};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ServiceConfig;
use crate::corpus::{self, CorpusError};
use crate::eventlog::{self, to_timestamp, EventWriter, ReplayError};
use crate::users::{NewUser, PublicProfile, UserError, UserStore};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0}")]
    Unauthorized(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Internal(String),
}

impl From<UserError> for ServiceError {
    fn from(e: UserError) -> Self {
        match e {
            UserError::BadCredentials | UserError::InvalidToken => ServiceError::Unauthorized(e.to_string()),
            UserError::Conflict(_) => ServiceError::Conflict(e.to_string()),
            UserError::InvalidInput(_) => ServiceError::BadRequest(e.to_string()),
            UserError::Io { .. } | UserError::Corrupt { .. } => ServiceError::Internal(e.to_string()),
        }
    }
}

impl From<MinerError> for ServiceError {
    fn from(e: MinerError) -> Self {
        match e {
            MinerError::InvalidConfig(_) => ServiceError::BadRequest(e.to_string()),
            _ => ServiceError::Internal(e.to_string()),
        }
    }
}

#[derive(Debug, Error)]
pub enum OpenError {
    #[error("cannot create data directory {0}: {1}")]
    DataDir(String, std::io::Error),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Users(#[from] UserError),
    #[error("event log: {0}")]
    Replay(#[from] ReplayError),
    #[error("cannot open event log: {0}")]
    Log(std::io::Error),
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock that only moves when told to.
#[derive(Debug)]
pub struct ManualClock(Mutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self(Mutex::new(start))
    }

    pub fn set(&self, t: DateTime<Utc>) {
        *self.0.lock().unwrap() = t;
    }

    pub fn advance(&self, by: chrono::Duration) {
        *self.0.lock().unwrap() += by;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().unwrap()
    }
}

/// Which of the three miners to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Gsp,
    Wtgsp,
    Wmgsp,
}

impl Algorithm {
    pub fn mode(self) -> MiningMode {
        match self {
            Algorithm::Gsp => MiningMode::Plain,
            Algorithm::Wtgsp => MiningMode::TimeWeighted,
            Algorithm::Wmgsp => MiningMode::DwellWeighted,
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gsp" => Ok(Algorithm::Gsp),
            "wtgsp" => Ok(Algorithm::Wtgsp),
            "wmgsp" => Ok(Algorithm::Wmgsp),
            other => Err(format!("unknown algorithm {other:?} (expected gsp, wtgsp or wmgsp)")),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Gsp => "gsp",
            Algorithm::Wtgsp => "wtgsp",
            Algorithm::Wmgsp => "wmgsp",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub query: String,
    pub results: Vec<RankedResult>,
    pub first_search: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoginResponse {
    pub token: String,
    pub expires_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClickAction {
    Open,
    Close,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickRequest {
    pub query: String,
    pub doc_id: String,
    pub action: ClickAction,
    #[serde(default)]
    pub ts: Option<DateTime<Utc>>,
    /// Rank the link was shown at, if the client knows it.
    #[serde(default)]
    pub position: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickAck {
    pub ts: DateTime<Utc>,
    /// The client timestamp was missing or too far off and server time was used.
    pub ts_substituted: bool,
    pub dwell_seconds: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternView {
    pub items: Vec<String>,
    pub support: f64,
}

impl PatternView {
    /// `⟨a,b,c⟩<TAB>support`
    pub fn to_line(&self) -> String {
        format!("⟨{}⟩\t{}", self.items.join(","), self.support)
    }
}

/// Frequent click patterns of one user (or of everyone when `user` is
/// `None`), one input sequence per session.
pub fn mine_sessions(
    log: &UsageLog,
    user: Option<&str>,
    session_timeout_secs: i64,
    algorithm: Algorithm,
    min_sup: f64,
) -> Result<Vec<PatternView>, MinerError> {
    let users: Vec<&str> = match user {
        Some(u) => vec![u],
        None => log.users(),
    };
    let db: Vec<SequenceRecord<String>> = users
        .into_iter()
        .flat_map(|u| log.sessions_of(u, session_timeout_secs))
        .map(|s| s.to_record())
        .collect();
    let config = MiningConfig::covering(algorithm.mode(), min_sup, &db)?;
    Ok(miner::mine(&db, &config)?
        .into_iter()
        .map(|p| PatternView { items: p.items, support: p.support })
        .collect())
}

struct State {
    log: UsageLog,
    writer: Option<EventWriter>,
}

impl State {
    /// Validate, persist, apply.
    fn record(&mut self, event: UsageEvent) -> Result<Applied, ServiceError> {
        self.log.check(&event).map_err(usage_error)?;
        if let Some(w) = self.writer.as_mut() {
            w.append(&event).map_err(|e| ServiceError::Internal(format!("event log write failed: {e}")))?;
        }
        self.log.apply(event).map_err(usage_error)
    }
}

fn usage_error(e: UsageError) -> ServiceError {
    match e {
        UsageError::OrphanClose { .. } => ServiceError::Conflict(e.to_string()),
        UsageError::OutOfOrder { .. } => ServiceError::Internal(e.to_string()),
    }
}

pub struct Engine {
    config: ServiceConfig,
    stopwords: StopwordList,
    index: CorpusIndex,
    users: UserStore,
    state: RwLock<State>,
    clock: Arc<dyn Clock>,
}

impl fmt::Debug for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Engine")
            .field("data_dir", &self.config.data_dir)
            .field("documents", &self.index.len())
            .field("users", &self.users.len())
            .finish()
    }
}

/// Builds the keyword index for `docs` and stores them as the data
/// directory's corpus.
pub fn install_corpus(config: &ServiceConfig, docs: Vec<Document>) -> Result<CorpusIndex, OpenError> {
    std::fs::create_dir_all(&config.data_dir)
        .map_err(|e| OpenError::DataDir(config.data_dir.display().to_string(), e))?;
    let stopwords = corpus::load_stopwords(config.stopwords_file.as_deref())?;
    let index = corpus::build_index(docs.clone(), &stopwords, config.keyword_k)?;
    corpus::save_manifest(&config.corpus_path(), &docs)?;
    Ok(index)
}

impl Engine {
    /// Loads the corpus, profiles and event log from the data directory.
    pub fn open(config: ServiceConfig, clock: Arc<dyn Clock>) -> Result<Self, OpenError> {
        std::fs::create_dir_all(&config.data_dir)
            .map_err(|e| OpenError::DataDir(config.data_dir.display().to_string(), e))?;
        let stopwords = corpus::load_stopwords(config.stopwords_file.as_deref())?;
        let corpus_path = config.corpus_path();
        let docs = if corpus_path.exists() { corpus::load_manifest(&corpus_path)? } else { Vec::new() };
        let index = corpus::build_index(docs, &stopwords, config.keyword_k)?;
        let users = UserStore::open(&config.users_path(), config.hash_iterations, config.token_lifetime)?;
        let log = eventlog::replay_file(&config.events_path())?;
        let writer = EventWriter::open(&config.events_path()).map_err(OpenError::Log)?;
        log::info!(
            "opened {}: {} documents, {} users, {} events",
            config.data_dir.display(),
            index.len(),
            users.len(),
            log.journal().len()
        );
        Ok(Self {
            config,
            stopwords,
            index,
            users,
            state: RwLock::new(State { log, writer: Some(writer) }),
            clock,
        })
    }

    /// An engine with no persistence.
    pub fn ephemeral(config: ServiceConfig, docs: Vec<Document>, clock: Arc<dyn Clock>) -> Result<Self, OpenError> {
        let stopwords = corpus::load_stopwords(config.stopwords_file.as_deref())?;
        let index = corpus::build_index(docs, &stopwords, config.keyword_k)?;
        let users = UserStore::in_memory(config.hash_iterations, config.token_lifetime);
        Ok(Self {
            config,
            stopwords,
            index,
            users,
            state: RwLock::new(State { log: UsageLog::new(), writer: None }),
            clock,
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn index(&self) -> &CorpusIndex {
        &self.index
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    /// A copy of the current usage log.
    pub fn usage_snapshot(&self) -> UsageLog {
        self.state.read().expect("state lock poisoned").log.clone()
    }

    pub fn register(&self, req: NewUser) -> Result<PublicProfile, ServiceError> {
        let profile = self.users.register(req, self.now())?;
        Ok(PublicProfile::from(&profile))
    }

    pub fn login(&self, username: &str, password: &str) -> Result<LoginResponse, ServiceError> {
        let t = self.users.authenticate(username, password, self.now())?;
        Ok(LoginResponse { token: t.token, expires_at: t.expires_at })
    }

    pub fn authorize(&self, token: &str) -> Result<String, ServiceError> {
        Ok(self.users.validate(token, self.now())?)
    }

    fn normalize(&self, raw: &str) -> Result<(Vec<String>, String), ServiceError> {
        let terms = index::tokenize_query(raw, &self.stopwords);
        if terms.is_empty() {
            return Err(ServiceError::BadRequest("query has no searchable terms".into()));
        }
        let normalized = terms.join(" ");
        Ok((terms, normalized))
    }

    /// Ranks the results for `raw_query`, then records the search. The
    /// recorded search does not influence the response it belongs to.
    pub fn search(&self, token: &str, raw_query: &str) -> Result<SearchResponse, ServiceError> {
        let user = self.authorize(token)?;
        let (terms, query) = self.normalize(raw_query)?;
        let baseline = self.index.match_query(&terms).map_err(|e| ServiceError::BadRequest(e.to_string()))?;

        let mut state = self.state.write().expect("state lock poisoned");
        let first_search = state.log.search_count(&user, &query) == 0;
        let results = rank::rank(&state.log, &user, &query, &baseline);
        let mut ts = to_timestamp(self.now());
        if let Some(last) = state.log.last_search_ts(&user) {
            ts = ts.max(last);
        }
        state.record(UsageEvent::Search { user, query: query.clone(), ts })?;
        Ok(SearchResponse { query, results, first_search })
    }

    pub fn click(&self, token: &str, req: ClickRequest) -> Result<ClickAck, ServiceError> {
        let user = self.authorize(token)?;
        let (_, query) = self.normalize(&req.query)?;
        if !self.index.contains(&req.doc_id) {
            return Err(ServiceError::NotFound(format!("unknown document {:?}", req.doc_id)));
        }
        let now = self.now();
        let skew = chrono::Duration::from_std(self.config.max_clock_skew).unwrap_or(chrono::Duration::zero());
        let (at, ts_substituted) = match req.ts {
            Some(t) if (t - now).abs() <= skew => (t, false),
            Some(t) => {
                log::warn!("client click timestamp {t} is more than {skew} from server time; using {now}");
                (now, true)
            }
            None => (now, true),
        };
        let ts = to_timestamp(at);
        let event = match req.action {
            ClickAction::Open => UsageEvent::ClickOpen { user, query, doc_id: req.doc_id, ts, position: req.position },
            ClickAction::Close => UsageEvent::ClickClose { user, query, doc_id: req.doc_id, ts },
        };
        let applied = self.state.write().expect("state lock poisoned").record(event)?;
        let dwell_seconds = match applied {
            Applied::Closed { dwell_seconds, .. } => Some(dwell_seconds),
            _ => None,
        };
        Ok(ClickAck {
            ts: DateTime::from_timestamp(ts.seconds(), 0).expect("in range"),
            ts_substituted,
            dwell_seconds,
        })
    }

    pub fn history(&self, token: &str) -> Result<Vec<QueryHistory>, ServiceError> {
        let user = self.authorize(token)?;
        Ok(self.state.read().expect("state lock poisoned").log.history(&user))
    }

    pub fn patterns(&self, token: &str, algorithm: Algorithm, min_sup: f64) -> Result<Vec<PatternView>, ServiceError> {
        let user = self.authorize(token)?;
        let state = self.state.read().expect("state lock poisoned");
        Ok(mine_sessions(&state.log, Some(&user), self.config.session_timeout_secs(), algorithm, min_sup)?)
    }

    /// Appends already-validated events straight to the log (used to
    /// import history, e.g. in tests and migrations).
    pub fn import(&self, events: impl IntoIterator<Item = UsageEvent>) -> Result<usize, ServiceError> {
        let mut state = self.state.write().expect("state lock poisoned");
        let mut n = 0;
        for ev in events {
            state.record(ev)?;
            n += 1;
        }
        Ok(n)
    }
}
