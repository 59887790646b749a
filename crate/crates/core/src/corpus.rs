//! File formats: session corpora as JSON Lines, everything else as JSON.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Session;

/// One session per line, in corpus order.
pub fn sessions_to_jsonl(sessions: &[Session]) -> Result<String> {
    let mut out = String::new();
    for s in sessions {
        out.push_str(&serde_json::to_string(s).map_err(|e| Error::json("session", e))?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses a JSONL corpus; `path` only labels errors. Blank lines are skipped.
pub fn parse_sessions(text: &str, path: &Path) -> Result<Vec<Session>> {
    let mut sessions = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { path: path.to_path_buf(), row: i + 1, message };
        let session: Session = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        session.check_invariants().map_err(|e| parse_err(e.to_string()))?;
        sessions.push(session);
    }
    Ok(sessions)
}

pub fn read_sessions(path: &Path) -> Result<Vec<Session>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sessions(&text, path)
}

pub fn write_sessions(path: &Path, sessions: &[Session]) -> Result<()> {
    write_text(path, &sessions_to_jsonl(sessions)?)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json("output", e))?;
    text.push('\n');
    Ok(text)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Probe, Stage, Termination, Turn, TurnCommand, TurnResponse, Utterance};

    fn session() -> Session {
        Session {
            skill_id: "s1".into(),
            probe: Probe::SilenceProbe,
            run_index: 1,
            stage: Stage::PostExploration,
            turns: vec![
                Turn {
                    command: TurnCommand::Spoken(Utterance::crawler("open s", 0)),
                    response: TurnResponse::Spoken(Utterance::skill("Hi there.", Some(0.9), 3)),
                    wait_elapsed: 3,
                    skill_exited: false,
                },
                Turn {
                    command: TurnCommand::Silence,
                    response: TurnResponse::NoResponse,
                    wait_elapsed: 8,
                    skill_exited: false,
                },
            ],
            termination: Termination::Timeout,
            unsent: vec!["stop".into()],
            error: None,
        }
    }

    #[test]
    fn jsonl_round_trip_preserves_order() {
        let mut second = session();
        second.run_index = 2;
        let sessions = vec![session(), second];
        let text = sessions_to_jsonl(&sessions).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains(r#""command":"SILENCE""#));
        assert!(text.contains(r#""response":"NO_RESPONSE""#));
        assert_eq!(parse_sessions(&text, Path::new("c.jsonl")).unwrap(), sessions);
    }

    #[test]
    fn bad_lines_report_their_row() {
        let good = sessions_to_jsonl(&[session()]).unwrap();
        let text = format!("{good}\n{{\"skill_id\":1}}\n");
        let err = parse_sessions(&text, Path::new("c.jsonl")).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");

        let mut empty = session();
        empty.turns.clear();
        let text = sessions_to_jsonl(&[empty]).unwrap();
        assert!(matches!(parse_sessions(&text, Path::new("c")), Err(Error::Parse { row: 1, .. })));
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/corpus.jsonl");
        write_sessions(&path, &[session()]).unwrap();
        assert_eq!(read_sessions(&path).unwrap(), [session()]);
        let jpath = dir.path().join("v.json");
        write_json(&jpath, &vec![1, 2]).unwrap();
        assert_eq!(read_json::<Vec<u8>>(&jpath).unwrap(), [1, 2]);
        assert!(read_sessions(&dir.path().join("missing")).is_err());
    }
}
