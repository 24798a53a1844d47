//! Human betting sessions over a frozen query stream.
//!
//! A scenario is a finished program run; its traces fix the queries a
//! person answers. Sessions are stored as append-only choice logs and
//! every ledger is recomputed from the log.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

use crate::betting::{self, Choice, Ledger, ReportRow, Stake};
use crate::data;
use crate::harness::{self, QueryInstance, RunReport};

/// Shown to a subject when a session starts.
pub const ADVISORY: &str = "Treat every question as a single bet that will not be repeated. \
If the target seems more likely than the payoff ratio, place the ante. \
If it seems less likely, offer the pot. If you cannot say either way, abstain.";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("session is finished")]
    Finished,
    #[error("query {index} was already answered; next is {expected}")]
    Duplicate { index: usize, expected: usize },
    #[error("query {index} is not open; next is {expected}")]
    OutOfOrder { index: usize, expected: usize },
    #[error("storage: {0}")]
    Storage(String),
}

/// A named, frozen query stream with the programs' results on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub run: RunReport,
}

impl Scenario {
    pub fn new(name: impl Into<String>, run: RunReport) -> Self {
        Scenario { name: name.into(), run }
    }

    pub fn len(&self) -> usize {
        self.run.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.run.traces.is_empty()
    }

    pub fn query(&self, i: usize) -> &QueryInstance {
        &self.run.traces[i].query
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioInfo {
    pub name: String,
    pub queries: usize,
    pub methods: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Active,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: Uuid,
    pub scenario: String,
    pub subject: String,
    pub familiarity: String,
    /// One entry per answered query, in order.
    pub choices: Vec<Choice>,
}

impl Session {
    pub fn cursor(&self) -> usize {
        self.choices.len()
    }
}

/// Ledger obtained by settling `choices` against the first queries of the stream.
pub fn replay(choices: &[Choice], queries: &[QueryInstance]) -> Ledger {
    let mut l = Ledger::default();
    for (c, q) in choices.iter().zip(queries) {
        l.record(*c, &q.offer, q.truth);
    }
    l
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStart {
    pub session: Uuid,
    pub scenario: String,
    pub queries: usize,
    pub advisory: String,
}

/// What a subject sees before choosing. Carries no outcome and no beliefs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryPayload {
    pub session: Uuid,
    pub index: usize,
    pub total: usize,
    pub announced: Vec<String>,
    pub target: String,
    pub pot: Stake,
    pub ratio: f64,
    pub ante: Stake,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settlement {
    pub index: usize,
    pub choice: Choice,
    /// Revealed only after the choice is recorded.
    pub target_held: bool,
    pub delta: Stake,
    pub ledger: Ledger,
    pub state: SessionState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub session: Uuid,
    pub subject: String,
    pub answered: usize,
    pub total: usize,
    /// Set when the session has unanswered queries; rows then cover the
    /// answered prefix only.
    pub partial: bool,
    /// The subject's row and one per method, best net first.
    pub rows: Vec<ReportRow>,
    pub ledger: Ledger,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LogHeader {
    session: Uuid,
    scenario: String,
    subject: String,
    familiarity: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LogEntry {
    index: usize,
    choice: Choice,
}

/// Scenarios plus live sessions, optionally persisted under a directory.
#[derive(Debug, Default)]
pub struct SessionStore {
    scenarios: BTreeMap<String, Arc<Scenario>>,
    sessions: RwLock<BTreeMap<Uuid, Arc<Mutex<Session>>>>,
    dir: Option<PathBuf>,
}

fn storage<E: std::fmt::Display>(e: E) -> SessionError {
    SessionError::Storage(e.to_string())
}

impl SessionStore {
    pub fn new(scenarios: impl IntoIterator<Item = Scenario>) -> Self {
        SessionStore {
            scenarios: scenarios.into_iter().map(|s| (s.name.clone(), Arc::new(s))).collect(),
            sessions: RwLock::default(),
            dir: None,
        }
    }

    /// A store that logs to `dir`, reloading any session logs already there.
    pub fn open(scenarios: impl IntoIterator<Item = Scenario>, dir: &Path) -> Result<Self, SessionError> {
        let mut store = SessionStore::new(scenarios);
        fs::create_dir_all(dir).map_err(storage)?;
        let mut loaded = BTreeMap::new();
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(storage)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for p in paths {
            let s = load_log(&p)?;
            loaded.insert(s.id, Arc::new(Mutex::new(s)));
        }
        store.sessions = RwLock::new(loaded);
        store.dir = Some(dir.to_path_buf());
        Ok(store)
    }

    pub fn scenarios(&self) -> Vec<ScenarioInfo> {
        self.scenarios
            .values()
            .map(|s| ScenarioInfo {
                name: s.name.clone(),
                queries: s.len(),
                methods: s.run.config.methods.iter().map(|m| m.to_string()).collect(),
            })
            .collect()
    }

    pub fn scenario(&self, name: &str) -> Result<&Arc<Scenario>, SessionError> {
        self.scenarios
            .get(name)
            .ok_or_else(|| SessionError::UnknownScenario(name.to_string()))
    }

    fn log_path(&self, id: Uuid) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{id}.jsonl")))
    }

    fn append(&self, id: Uuid, line: &impl Serialize) -> Result<(), SessionError> {
        let Some(path) = self.log_path(id) else {
            return Ok(());
        };
        let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(storage)?;
        data::write_jsonl(&mut f, std::slice::from_ref(line)).map_err(storage)?;
        f.flush().map_err(storage)
    }

    fn get(&self, id: Uuid) -> Result<Arc<Mutex<Session>>, SessionError> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(&id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(id.to_string()))
    }

    pub fn session(&self, id: Uuid) -> Result<Session, SessionError> {
        Ok(self.get(id)?.lock().expect("session lock").clone())
    }

    pub fn create(&self, scenario: &str, subject: &str, familiarity: &str) -> Result<SessionStart, SessionError> {
        let sc = self.scenario(scenario)?;
        let id = Uuid::new_v4();
        self.append(
            id,
            &LogHeader {
                session: id,
                scenario: scenario.to_string(),
                subject: subject.to_string(),
                familiarity: familiarity.to_string(),
            },
        )?;
        let s = Session {
            id,
            scenario: scenario.to_string(),
            subject: subject.to_string(),
            familiarity: familiarity.to_string(),
            choices: Vec::new(),
        };
        self.sessions.write().expect("session map lock").insert(id, Arc::new(Mutex::new(s)));
        Ok(SessionStart {
            session: id,
            scenario: scenario.to_string(),
            queries: sc.len(),
            advisory: ADVISORY.to_string(),
        })
    }

    pub fn next_query(&self, id: Uuid) -> Result<QueryPayload, SessionError> {
        let s = self.session(id)?;
        let sc = self.scenario(&s.scenario)?;
        let i = s.cursor();
        if i >= sc.len() {
            return Err(SessionError::Finished);
        }
        let q = sc.query(i);
        Ok(QueryPayload {
            session: id,
            index: i,
            total: sc.len(),
            announced: q.announced.iter().map(ToString::to_string).collect(),
            target: q.target.to_string(),
            pot: q.offer.pot,
            ratio: q.offer.ratio,
            ante: q.offer.ante(),
        })
    }

    /// Records `choice` for query `index`, which must be the next open one.
    pub fn submit(&self, id: Uuid, index: usize, choice: Choice) -> Result<Settlement, SessionError> {
        let cell = self.get(id)?;
        let mut s = cell.lock().expect("session lock");
        let sc = self.scenario(&s.scenario)?.clone();
        let expected = s.cursor();
        if index < expected {
            return Err(SessionError::Duplicate { index, expected });
        }
        if expected >= sc.len() {
            return Err(SessionError::Finished);
        }
        if index > expected {
            return Err(SessionError::OutOfOrder { index, expected });
        }
        self.append(id, &LogEntry { index, choice })?;
        s.choices.push(choice);
        let q = sc.query(index);
        let queries = sc.run.queries();
        Ok(Settlement {
            index,
            choice,
            target_held: q.truth,
            delta: betting::settle(choice, &q.offer, q.truth),
            ledger: replay(&s.choices, &queries),
            state: if s.cursor() >= sc.len() {
                SessionState::Finished
            } else {
                SessionState::Active
            },
        })
    }

    /// The subject's row beside every method's row over the answered queries.
    pub fn report(&self, id: Uuid) -> Result<SessionReport, SessionError> {
        let s = self.session(id)?;
        let sc = self.scenario(&s.scenario)?;
        let n = s.cursor();
        let queries = sc.run.queries();
        let ledger = replay(&s.choices, &queries);
        let programs = harness::tabulate(sc.run.config.clone(), sc.run.traces[..n].to_vec());
        let data = if s.familiarity.is_empty() { "-".to_string() } else { s.familiarity.clone() };
        let mut rows = vec![betting::metrics(s.subject.clone(), data, &ledger, programs.perfect, Stake::ZERO)];
        rows.extend(programs.rows);
        harness::sort_rows(&mut rows);
        betting::normalize_rel(&mut rows);
        Ok(SessionReport {
            session: id,
            subject: s.subject,
            answered: n,
            total: sc.len(),
            partial: n < sc.len(),
            rows,
            ledger,
        })
    }
}

fn load_log(path: &Path) -> Result<Session, SessionError> {
    let text = fs::read_to_string(path).map_err(storage)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: LogHeader = lines
        .next()
        .ok_or_else(|| storage(format!("{}: empty session log", path.display())))
        .and_then(|l| serde_json::from_str(l).map_err(storage))?;
    let mut choices = Vec::new();
    for (k, l) in lines.enumerate() {
        let e: LogEntry = serde_json::from_str(l).map_err(storage)?;
        if e.index != k {
            return Err(storage(format!("{}: entry {k} has index {}", path.display(), e.index)));
        }
        choices.push(e.choice);
    }
    Ok(Session {
        id: header.session,
        scenario: header.scenario,
        subject: header.subject,
        familiarity: header.familiarity,
        choices,
    })
}
