//! Client side of the adapter wire protocol.
//!
//! The adapter is a child process speaking line-delimited JSON on its
//! standard streams, one reply line per request line. The harness spawns one
//! process per skill and reuses it for every session with that skill.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{Connector, ConnectorEvent, ConnectorFactory, Observed, SessionHandle, DEFAULT_ADAPTER_TIMEOUT_MS};
use crate::error::Result;
use crate::model::{SkillDescriptor, Stage};

/// Extra time allowed on top of the listen window before the adapter is
/// considered hung.
pub const REPLY_GRACE: Duration = Duration::from_secs(2);

/// Harness-to-adapter message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AdapterRequest {
    Open {
        invocation: String,
        timeout_ms: u64,
        /// Advisory; adapters that do not model usage stages ignore it.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stage: Option<Stage>,
    },
    Say {
        text: String,
        timeout_ms: u64,
    },
    Wait {
        timeout_ms: u64,
    },
    Close,
}

impl AdapterRequest {
    fn timeout_ms(&self) -> u64 {
        match self {
            AdapterRequest::Open { timeout_ms, .. }
            | AdapterRequest::Say { timeout_ms, .. }
            | AdapterRequest::Wait { timeout_ms } => *timeout_ms,
            AdapterRequest::Close => 0,
        }
    }
}

/// Parses one reply line. Anything that is not a well-formed reply becomes an
/// error event.
pub fn parse_reply(line: &str) -> ConnectorEvent {
    match serde_json::from_str::<ConnectorEvent>(line.trim()) {
        Ok(ConnectorEvent::Response { confidence: Some(c), .. }) if !(0.0..=1.0).contains(&c) => {
            ConnectorEvent::error(format!("confidence {c} outside [0, 1]"))
        }
        Ok(event) => event,
        Err(e) => ConnectorEvent::error(format!("malformed adapter reply: {e}")),
    }
}

struct Process {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

pub struct AdapterConnector {
    command: String,
    process: Option<Process>,
    /// Set once the stream can no longer be trusted to stay in step.
    broken: Option<String>,
    next_handle: u64,
}

impl AdapterConnector {
    /// Starts `command` through `sh -c`. Spawn failures are reported as
    /// error events on first use rather than here.
    pub fn spawn(command: &str) -> Self {
        let mut conn = AdapterConnector { command: command.to_string(), process: None, broken: None, next_handle: 1 };
        match Self::start(command) {
            Ok(p) => conn.process = Some(p),
            Err(e) => conn.broken = Some(format!("cannot start adapter {command:?}: {e}")),
        }
        conn
    }

    fn start(command: &str) -> std::io::Result<Process> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        Ok(Process { child, stdin, lines: rx })
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    fn exchange(&mut self, request: &AdapterRequest) -> Observed {
        let started = Instant::now();
        let event = self.exchange_inner(request);
        if let ConnectorEvent::Error { detail } = &event {
            if self.broken.is_none() {
                self.broken = Some(detail.clone());
            }
        }
        Observed { event, elapsed_ms: started.elapsed().as_millis() as u64 }
    }

    fn exchange_inner(&mut self, request: &AdapterRequest) -> ConnectorEvent {
        if let Some(reason) = &self.broken {
            return ConnectorEvent::error(reason.clone());
        }
        let Some(process) = self.process.as_mut() else {
            return ConnectorEvent::error("adapter not running");
        };
        let mut line = serde_json::to_string(request).expect("requests always serialize");
        line.push('\n');
        if let Err(e) = process.stdin.write_all(line.as_bytes()).and_then(|_| process.stdin.flush()) {
            return ConnectorEvent::error(format!("adapter write failed: {e}"));
        }
        let wait = Duration::from_millis(request.timeout_ms()) + REPLY_GRACE;
        loop {
            return match process.lines.recv_timeout(wait) {
                Ok(Ok(reply)) if reply.trim().is_empty() => continue,
                Ok(Ok(reply)) => parse_reply(&reply),
                Ok(Err(e)) => ConnectorEvent::error(format!("adapter read failed: {e}")),
                Err(RecvTimeoutError::Timeout) => {
                    ConnectorEvent::error(format!("adapter gave no reply within {} ms", wait.as_millis()))
                }
                Err(RecvTimeoutError::Disconnected) => ConnectorEvent::error("adapter exited"),
            };
        }
    }
}

impl Connector for AdapterConnector {
    fn open_session(&mut self, invocation_name: &str, stage: Stage, timeout_ms: u64) -> (SessionHandle, Observed) {
        let mut handle = SessionHandle::new(self.next_handle);
        self.next_handle += 1;
        let observed = self.exchange(&AdapterRequest::Open {
            invocation: invocation_name.to_string(),
            timeout_ms,
            stage: Some(stage),
        });
        handle.observe(&observed.event);
        (handle, observed)
    }

    fn say(&mut self, handle: &mut SessionHandle, text: &str, timeout_ms: u64) -> Result<Observed> {
        handle.ensure_open()?;
        let observed = self.exchange(&AdapterRequest::Say { text: text.to_string(), timeout_ms });
        handle.observe(&observed.event);
        Ok(observed)
    }

    fn wait_silence(&mut self, handle: &mut SessionHandle, timeout_ms: u64) -> Result<Observed> {
        handle.ensure_open()?;
        let observed = self.exchange(&AdapterRequest::Wait { timeout_ms });
        handle.observe(&observed.event);
        Ok(observed)
    }
}

impl Drop for AdapterConnector {
    fn drop(&mut self) {
        let Some(mut process) = self.process.take() else { return };
        if self.broken.is_none() {
            let _ = process.stdin.write_all(b"{\"type\":\"close\"}\n").and_then(|_| process.stdin.flush());
            let _ = process.lines.recv_timeout(Duration::from_millis(500));
        }
        drop(process.stdin);
        let deadline = Instant::now() + Duration::from_millis(500);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = process.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = process.child.kill();
        let _ = process.child.wait();
    }
}

/// Spawns one adapter process per skill.
#[derive(Debug, Clone)]
pub struct AdapterFactory {
    command: String,
}

impl AdapterFactory {
    pub fn new(command: impl Into<String>) -> Self {
        AdapterFactory { command: command.into() }
    }
}

impl ConnectorFactory for AdapterFactory {
    fn connect(&self, _skill: &SkillDescriptor) -> Result<Box<dyn Connector>> {
        Ok(Box::new(AdapterConnector::spawn(&self.command)))
    }

    fn default_timeout_ms(&self) -> u64 {
        DEFAULT_ADAPTER_TIMEOUT_MS
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A python adapter that answers `say` by echoing, closes on "stop",
    /// re-prompts on wait, and exits after `crash_after` requests.
    fn script(crash_after: usize) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".py").tempfile().unwrap();
        write!(
            f,
            r#"
import json, sys
n = 0
for line in sys.stdin:
    n += 1
    if n > {crash_after}:
        sys.exit(3)
    try:
        req = json.loads(line)
    except Exception:
        print(json.dumps({{"type": "error", "detail": "bad json"}}), flush=True)
        continue
    t = req.get("type")
    if t == "open":
        print(json.dumps({{"type": "response", "text": "welcome to " + req["invocation"], "confidence": 0.9}}), flush=True)
    elif t == "say" and req["text"] == "stop":
        print(json.dumps({{"type": "closed", "text": "bye"}}), flush=True)
    elif t == "say" and req["text"] == "garbage":
        print("this is not json", flush=True)
    elif t == "say":
        print(json.dumps({{"type": "response", "text": "you said " + req["text"], "extra": 1}}), flush=True)
    elif t == "wait":
        print(json.dumps({{"type": "silence"}}), flush=True)
    elif t == "close":
        print(json.dumps({{"type": "closed"}}), flush=True)
        sys.exit(0)
    else:
        print(json.dumps({{"type": "error", "detail": "unknown type"}}), flush=True)
"#
        )
        .unwrap();
        f
    }

    fn command(f: &tempfile::NamedTempFile) -> String {
        format!("python3 {}", f.path().display())
    }

    #[test]
    fn request_wire_shapes() {
        let cases = [
            (
                AdapterRequest::Open { invocation: "cat facts".into(), timeout_ms: 8000, stage: None },
                r#"{"type":"open","invocation":"cat facts","timeout_ms":8000}"#,
            ),
            (
                AdapterRequest::Say { text: "help".into(), timeout_ms: 5 },
                r#"{"type":"say","text":"help","timeout_ms":5}"#,
            ),
            (AdapterRequest::Wait { timeout_ms: 0 }, r#"{"type":"wait","timeout_ms":0}"#),
            (AdapterRequest::Close, r#"{"type":"close"}"#),
        ];
        for (req, wire) in cases {
            assert_eq!(serde_json::to_string(&req).unwrap(), wire);
            assert_eq!(serde_json::from_str::<AdapterRequest>(wire).unwrap(), req);
        }
    }

    #[test]
    fn malformed_replies_become_errors() {
        assert!(matches!(parse_reply("nope"), ConnectorEvent::Error { .. }));
        assert!(matches!(parse_reply(r#"{"type":"shout"}"#), ConnectorEvent::Error { .. }));
        assert!(matches!(parse_reply(r#"{"type":"response"}"#), ConnectorEvent::Error { .. }));
        assert!(matches!(
            parse_reply(r#"{"type":"response","text":"x","confidence":7}"#),
            ConnectorEvent::Error { .. }
        ));
        assert_eq!(parse_reply(r#"{"type":"silence","x":1}"#), ConnectorEvent::Silence);
    }

    #[test]
    fn drives_a_scripted_adapter() {
        let f = script(100);
        let mut c = AdapterConnector::spawn(&command(&f));
        let (mut h, obs) = c.open_session("echo", Stage::FirstUse, 1000);
        assert_eq!(obs.event, ConnectorEvent::Response { text: "welcome to echo".into(), confidence: Some(0.9) });
        let obs = c.say(&mut h, "help", 1000).unwrap();
        assert_eq!(obs.event.spoken_text(), Some("you said help"));
        assert_eq!(c.wait_silence(&mut h, 10).unwrap().event, ConnectorEvent::Silence);
        assert_eq!(c.say(&mut h, "stop", 1000).unwrap().event, ConnectorEvent::closed(Some("bye")));
        assert!(!h.is_open());
        assert!(c.say(&mut h, "help", 1000).is_err());
    }

    #[test]
    fn unreachable_adapter_yields_error_event() {
        let mut c = AdapterConnector::spawn("/nonexistent/adapter-binary-xyz");
        let (h, obs) = c.open_session("anything", Stage::FirstUse, 100);
        assert!(matches!(obs.event, ConnectorEvent::Error { .. }), "{:?}", obs.event);
        assert!(!h.is_open());
    }

    #[test]
    fn crash_and_garbage_do_not_hang() {
        let f = script(2);
        let mut c = AdapterConnector::spawn(&command(&f));
        let (mut h, _) = c.open_session("echo", Stage::FirstUse, 100);
        let obs = c.say(&mut h, "garbage", 100).unwrap();
        assert!(matches!(obs.event, ConnectorEvent::Error { .. }));
        // Further use keeps reporting errors instead of blocking.
        let (_, obs) = c.open_session("echo", Stage::FirstUse, 100);
        assert!(matches!(obs.event, ConnectorEvent::Error { .. }));

        let f = script(1);
        let mut c = AdapterConnector::spawn(&command(&f));
        let (mut h, obs) = c.open_session("echo", Stage::FirstUse, 100);
        assert!(h.is_open(), "{:?}", obs.event);
        let obs = c.say(&mut h, "help", 100).unwrap();
        assert_eq!(obs.event, ConnectorEvent::error("adapter exited"));
    }
}
