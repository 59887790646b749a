//! Serves simulated skills over the adapter wire protocol.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use super::{step, SimInput, SimProfile, SimState};
use crate::connector::{AdapterRequest, ConnectorEvent};
use crate::model::Stage;
use crate::text::normalize;

struct Served<'a> {
    profile: &'a SimProfile,
    state: SimState,
    opened: bool,
}

/// Answers one reply line per request line until `close` or end of input.
///
/// `open` selects the profile whose invocation name matches (after
/// normalization), else the profile with id `default_skill`, else the only
/// profile. State is kept per profile for the life of the server.
pub fn serve<R: BufRead, W: Write>(
    profiles: &[SimProfile],
    default_skill: Option<&str>,
    input: R,
    mut output: W,
) -> io::Result<()> {
    let mut served: HashMap<usize, Served<'_>> = HashMap::new();
    let mut current: Option<usize> = None;

    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<AdapterRequest>(&line) {
            Err(e) => ConnectorEvent::error(format!("malformed request: {e}")),
            Ok(AdapterRequest::Close) => {
                writeln!(output, "{}", serde_json::to_string(&ConnectorEvent::closed(None::<String>))?)?;
                output.flush()?;
                return Ok(());
            }
            Ok(AdapterRequest::Open { invocation, stage, .. }) => {
                match select(profiles, default_skill, &invocation) {
                    None => ConnectorEvent::error(format!("no simulated skill answers to {invocation:?}")),
                    Some(idx) => {
                        current = Some(idx);
                        let entry = served.entry(idx).or_insert_with(|| Served {
                            profile: &profiles[idx],
                            state: SimState::new(),
                            opened: false,
                        });
                        // Without a stage hint, every open after the first counts as post-setup.
                        let stage = stage.unwrap_or(if entry.opened { Stage::PostSetup } else { Stage::FirstUse });
                        entry.opened = true;
                        advance(entry, SimInput::Open { stage })
                    }
                }
            }
            Ok(AdapterRequest::Say { text, .. }) => match current.and_then(|i| served.get_mut(&i)) {
                Some(entry) => advance(entry, SimInput::Say(text)),
                None => ConnectorEvent::error("no open session"),
            },
            Ok(AdapterRequest::Wait { timeout_ms }) => match current.and_then(|i| served.get_mut(&i)) {
                Some(entry) if timeout_ms == 0 && entry.state.session_open => ConnectorEvent::Silence,
                Some(entry) => advance(entry, SimInput::Silence),
                None => ConnectorEvent::error("no open session"),
            },
        };
        writeln!(output, "{}", serde_json::to_string(&reply)?)?;
        output.flush()?;
    }
    Ok(())
}

fn advance(entry: &mut Served<'_>, input: SimInput) -> ConnectorEvent {
    let (event, next) = step(entry.profile, &entry.state, &input);
    entry.state = next;
    event
}

fn select(profiles: &[SimProfile], default_skill: Option<&str>, invocation: &str) -> Option<usize> {
    let wanted = normalize(invocation);
    let wanted = wanted.strip_prefix("open ").unwrap_or(&wanted);
    profiles
        .iter()
        .position(|p| normalize(&p.skill.invocation_name) == wanted)
        .or_else(|| default_skill.and_then(|id| profiles.iter().position(|p| p.skill.id == id)))
        .or_else(|| (profiles.len() == 1).then_some(0))
}
