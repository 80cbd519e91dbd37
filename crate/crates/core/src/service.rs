//! JSON session server core: request/response types and a registry of named
//! sessions. Transports live outside this crate and call
//! [`SessionRegistry::handle_line`] or [`SessionRegistry::handle_request`].

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::query::Verdict;
use crate::shell::{EntailmentMode, Outcome, Session};
use crate::solver::Satisfiability;
use crate::state::StateDigest;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    #[default]
    Command,
    Create,
    Destroy,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub id: String,
    pub session: String,
    #[serde(default)]
    pub command: String,
    #[serde(default)]
    pub op: Op,
}

impl Request {
    pub fn command(id: impl Into<String>, session: impl Into<String>, command: impl Into<String>) -> Self {
        Request { id: id.into(), session: session.into(), command: command.into(), op: Op::Command }
    }

    pub fn create(id: impl Into<String>, session: impl Into<String>) -> Self {
        Request { id: id.into(), session: session.into(), command: String::new(), op: Op::Create }
    }

    pub fn destroy(id: impl Into<String>, session: impl Into<String>) -> Self {
        Request { id: id.into(), session: session.into(), command: String::new(), op: Op::Destroy }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub id: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub verdict: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub satisfiability: Option<Satisfiability>,
    #[serde(default)]
    pub models: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub consolidated: Option<Vec<String>>,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub messages: Vec<String>,
    #[serde(rename = "state-digest", skip_serializing_if = "Option::is_none", default)]
    pub state_digest: Option<StateDigest>,
    #[serde(default)]
    pub exit: bool,
}

impl Response {
    fn ok(id: String) -> Self {
        Response {
            id,
            status: Status::Ok,
            error: None,
            verdict: None,
            satisfiability: None,
            models: Vec::new(),
            consolidated: None,
            warnings: Vec::new(),
            messages: Vec::new(),
            state_digest: None,
            exit: false,
        }
    }

    fn error(id: String, message: impl Into<String>) -> Self {
        Response { status: Status::Error, error: Some(message.into()), ..Response::ok(id) }
    }

    fn from_outcome(id: String, outcome: Outcome, digest: StateDigest) -> Self {
        let mut r = Response::ok(id);
        r.warnings = outcome.warnings;
        r.messages = outcome.messages;
        r.exit = outcome.exit;
        r.state_digest = Some(digest);
        if let Some(answer) = outcome.answer {
            let text = |atoms: Vec<crate::syntax::Atom>| atoms.iter().map(ToString::to_string).collect();
            r.verdict = Some(answer.verdict);
            r.satisfiability = Some(answer.status);
            r.models = answer.models.into_iter().map(text).collect();
            if answer.mode != EntailmentMode::Enumerate {
                r.consolidated = answer.consolidated.map(text);
            }
        }
        r
    }
}

/// Named sessions. Each session has its own lock, so commands on one session
/// are serialized while different sessions proceed independently.
#[derive(Debug, Default)]
pub struct SessionRegistry {
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    base_dir: Option<PathBuf>,
}

impl SessionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sessions resolve relative `load` paths against `dir`.
    pub fn with_base_dir(dir: impl Into<PathBuf>) -> Self {
        SessionRegistry { sessions: Mutex::default(), base_dir: Some(dir.into()) }
    }

    pub fn create(&self, name: &str) -> Result<(), String> {
        let mut sessions = self.sessions.lock().unwrap_or_else(|e| e.into_inner());
        if sessions.contains_key(name) {
            return Err(format!("session '{name}' already exists"));
        }
        let session = match &self.base_dir {
            Some(dir) => Session::with_base_dir(dir.clone()),
            None => Session::new(),
        };
        sessions.insert(name.to_string(), Arc::new(Mutex::new(session)));
        Ok(())
    }

    pub fn destroy(&self, name: &str) -> Result<(), String> {
        let mut sessions = self.sessions.lock().unwrap_or_else(|e| e.into_inner());
        sessions.remove(name).map(|_| ()).ok_or_else(|| unknown(name))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.sessions.lock().unwrap_or_else(|e| e.into_inner()).contains_key(name)
    }

    fn get(&self, name: &str) -> Option<Arc<Mutex<Session>>> {
        self.sessions.lock().unwrap_or_else(|e| e.into_inner()).get(name).cloned()
    }

    pub fn handle_request(&self, req: Request) -> Response {
        match req.op {
            Op::Create => match self.create(&req.session) {
                Ok(()) => Response::ok(req.id),
                Err(e) => Response::error(req.id, e),
            },
            Op::Destroy => match self.destroy(&req.session) {
                Ok(()) => Response::ok(req.id),
                Err(e) => Response::error(req.id, e),
            },
            Op::Command => {
                let Some(session) = self.get(&req.session) else {
                    return Response::error(req.id, unknown(&req.session));
                };
                let mut guard = session.lock().unwrap_or_else(|e| e.into_inner());
                let mut work = guard.clone();
                match work.execute_text(&req.command) {
                    Ok(outcome) => {
                        let digest = work.state().digest();
                        *guard = work;
                        Response::from_outcome(req.id, outcome, digest)
                    }
                    Err(e) => Response::error(req.id, e.to_string()),
                }
            }
        }
    }

    /// Handles one JSON-encoded request and returns the JSON response.
    pub fn handle_line(&self, line: &str) -> String {
        let response = match serde_json::from_str::<Request>(line) {
            Ok(req) => self.handle_request(req),
            Err(e) => {
                let id = serde_json::from_str::<serde_json::Value>(line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(|i| i.as_str()).map(str::to_string))
                    .unwrap_or_default();
                Response::error(id, format!("malformed request: {e}"))
            }
        };
        serde_json::to_string(&response).expect("responses serialize")
    }
}

fn unknown(name: &str) -> String {
    format!("unknown session '{name}'")
}
