use std::collections::BTreeMap;

use thiserror::Error;

use super::filter::FilterConfig;
use crate::frame::CommandFrame;
use crate::hash::fnv1a;
use crate::preprocess::AtomicAction;
use crate::robot::{RobotSpec, RobotState};
use crate::scene::{SceneSnapshot, WorldModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("missing credential: set the {0} environment variable")]
    MissingCredential(String),
    #[error("unexpected response: {0}")]
    InvalidResponse(String),
    #[error("scripted backend has no reply for call {0}")]
    Exhausted(usize),
}

/// What the loop knows just before a query. Language-model backends ignore
/// it; the oracle reads ground truth from it.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub tick: u64,
    pub action: &'a AtomicAction,
    pub world: &'a WorldModel,
    pub robot: &'a RobotState,
    pub spec: &'a RobotSpec,
    pub snapshot: &'a SceneSnapshot,
    pub last_accepted: Option<&'a CommandFrame>,
    pub filter: &'a FilterConfig,
}

pub trait ControllerBackend: Send {
    fn name(&self) -> &str;

    fn observe(&mut self, _observation: &Observation<'_>) {}

    fn query(&mut self, context: &str) -> Result<String, BackendError>;
}

/// Canned replies: an exact-context table first, then the call index, then
/// an optional fallback.
#[derive(Debug, Clone, Default)]
pub struct MockScripted {
    by_context: BTreeMap<u64, String>,
    steps: Vec<String>,
    fallback: Option<String>,
    calls: usize,
}

impl MockScripted {
    pub fn sequence(steps: Vec<String>) -> Self {
        Self { steps, ..Self::default() }
    }

    /// Answers every query with `reply`.
    pub fn constant(reply: &str) -> Self {
        Self { fallback: Some(reply.to_string()), ..Self::default() }
    }

    pub fn with_reply_for(mut self, context: &str, reply: &str) -> Self {
        self.by_context.insert(fnv1a(context.as_bytes()), reply.to_string());
        self
    }

    pub fn with_fallback(mut self, reply: &str) -> Self {
        self.fallback = Some(reply.to_string());
        self
    }

    pub fn call_count(&self) -> usize {
        self.calls
    }
}

impl ControllerBackend for MockScripted {
    fn name(&self) -> &str {
        "mock"
    }

    fn query(&mut self, context: &str) -> Result<String, BackendError> {
        let index = self.calls;
        self.calls += 1;
        if let Some(r) = self.by_context.get(&fnv1a(context.as_bytes())) {
            return Ok(r.clone());
        }
        self.steps
            .get(index)
            .or(self.fallback.as_ref())
            .cloned()
            .ok_or(BackendError::Exhausted(index))
    }
}
