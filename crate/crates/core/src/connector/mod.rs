//! Session-oriented access to a skill.
//!
//! A [`Connector`] is one conversation lineage with one skill: sessions are
//! opened, driven with [`Connector::say`] / [`Connector::wait_silence`], and
//! end when the skill closes them. State the skill keeps between sessions
//! (first use, setup, exploration) persists for the connector's lifetime.

pub mod adapter;
pub mod sim;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SkillDescriptor, Stage};

pub use adapter::{AdapterConnector, AdapterFactory, AdapterRequest};
pub use sim::{SimConnector, SimFactory};

/// Listen window for adapter connectors when the plan does not set one.
pub const DEFAULT_ADAPTER_TIMEOUT_MS: u64 = 8000;

/// One observation from the skill.
///
/// The serialized form is the adapter-to-harness wire message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConnectorEvent {
    Response {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        confidence: Option<f64>,
    },
    Silence,
    /// The skill ended the session, optionally speaking a final line.
    Closed {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        text: Option<String>,
    },
    Error {
        detail: String,
    },
}

impl ConnectorEvent {
    pub fn response(text: impl Into<String>) -> Self {
        ConnectorEvent::Response { text: text.into(), confidence: Some(1.0) }
    }

    pub fn closed(text: Option<impl Into<String>>) -> Self {
        ConnectorEvent::Closed { text: text.map(Into::into) }
    }

    pub fn error(detail: impl Into<String>) -> Self {
        ConnectorEvent::Error { detail: detail.into() }
    }

    /// Text the skill spoke with this event, if any.
    pub fn spoken_text(&self) -> Option<&str> {
        match self {
            ConnectorEvent::Response { text, .. } => Some(text),
            ConnectorEvent::Closed { text } => text.as_deref(),
            _ => None,
        }
    }

    pub fn confidence(&self) -> Option<f64> {
        match self {
            ConnectorEvent::Response { confidence, .. } => *confidence,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandleState {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionHandle {
    id: u64,
    state: HandleState,
}

impl SessionHandle {
    pub fn new(id: u64) -> Self {
        SessionHandle { id, state: HandleState::Open }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn state(&self) -> HandleState {
        self.state
    }

    pub fn is_open(&self) -> bool {
        self.state == HandleState::Open
    }

    /// Closes the handle if `event` ends the session.
    pub fn observe(&mut self, event: &ConnectorEvent) {
        if matches!(event, ConnectorEvent::Closed { .. } | ConnectorEvent::Error { .. }) {
            self.state = HandleState::Closed;
        }
    }

    pub(crate) fn ensure_open(&self) -> Result<()> {
        if self.is_open() {
            Ok(())
        } else {
            Err(Error::precondition(format!("session {} is closed", self.id)))
        }
    }
}

/// An event plus how long the connector waited for it.
#[derive(Debug, Clone, PartialEq)]
pub struct Observed {
    pub event: ConnectorEvent,
    pub elapsed_ms: u64,
}

impl Observed {
    pub fn instant(event: ConnectorEvent) -> Self {
        Observed { event, elapsed_ms: 0 }
    }
}

pub trait Connector: Send {
    /// Speaks the open command. `stage` tells the connector which usage
    /// stage the harness believes the skill is in; real skills may ignore it.
    fn open_session(&mut self, invocation_name: &str, stage: Stage, timeout_ms: u64) -> (SessionHandle, Observed);

    /// Speaks `text` in an open session. Calling this on a closed handle is a
    /// precondition violation.
    fn say(&mut self, handle: &mut SessionHandle, text: &str, timeout_ms: u64) -> Result<Observed>;

    /// Stays silent for up to `timeout_ms` and reports what the skill did.
    fn wait_silence(&mut self, handle: &mut SessionHandle, timeout_ms: u64) -> Result<Observed>;
}

/// Creates one connector lineage per skill.
pub trait ConnectorFactory: Sync {
    fn connect(&self, skill: &SkillDescriptor) -> Result<Box<dyn Connector>>;

    /// Timeout used when the plan leaves it unset.
    fn default_timeout_ms(&self) -> u64 {
        DEFAULT_ADAPTER_TIMEOUT_MS
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn events_use_wire_shapes() {
        let cases = [
            (ConnectorEvent::response("hi"), r#"{"type":"response","text":"hi","confidence":1.0}"#),
            (ConnectorEvent::Silence, r#"{"type":"silence"}"#),
            (ConnectorEvent::closed(Some("bye")), r#"{"type":"closed","text":"bye"}"#),
            (ConnectorEvent::closed(None::<String>), r#"{"type":"closed"}"#),
            (ConnectorEvent::error("boom"), r#"{"type":"error","detail":"boom"}"#),
        ];
        for (event, wire) in cases {
            assert_eq!(serde_json::to_string(&event).unwrap(), wire);
            assert_eq!(serde_json::from_str::<ConnectorEvent>(wire).unwrap(), event);
        }
        let with_extra: ConnectorEvent =
            serde_json::from_str(r#"{"type":"response","text":"x","confidence":0.5,"latency":3}"#).unwrap();
        assert_eq!(with_extra.confidence(), Some(0.5));
    }

    #[test]
    fn handle_closes_on_terminal_events() {
        let mut h = SessionHandle::new(1);
        h.observe(&ConnectorEvent::response("x"));
        assert!(h.is_open());
        h.observe(&ConnectorEvent::closed(None::<String>));
        assert!(!h.is_open());
        assert!(h.ensure_open().is_err());
    }
}
