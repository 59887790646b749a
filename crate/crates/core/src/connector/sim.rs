//! Text connector bound to an in-process simulated skill.

use std::collections::HashMap;
use std::sync::Arc;

use super::{Connector, ConnectorEvent, ConnectorFactory, Observed, SessionHandle};
use crate::error::{Error, Result};
use crate::model::{SkillDescriptor, Stage};
use crate::simulator::{step, SimInput, SimProfile, SimState};

/// Rewrites skill output text, e.g. to imitate transcription noise.
pub type Perturbation = Arc<dyn Fn(&str) -> String + Send + Sync>;

pub struct SimConnector {
    profile: Arc<SimProfile>,
    state: SimState,
    next_handle: u64,
    perturb: Option<Perturbation>,
}

impl SimConnector {
    pub fn new(profile: Arc<SimProfile>) -> Self {
        SimConnector { profile, state: SimState::new(), next_handle: 1, perturb: None }
    }

    pub fn with_perturbation(mut self, perturb: Perturbation) -> Self {
        self.perturb = Some(perturb);
        self
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    fn apply(&mut self, input: SimInput) -> ConnectorEvent {
        let (event, next) = step(&self.profile, &self.state, &input);
        self.state = next;
        match (&self.perturb, event) {
            (Some(f), ConnectorEvent::Response { text, confidence }) => {
                ConnectorEvent::Response { text: f(&text), confidence }
            }
            (Some(f), ConnectorEvent::Closed { text: Some(text) }) => ConnectorEvent::Closed { text: Some(f(&text)) },
            (_, event) => event,
        }
    }
}

impl Connector for SimConnector {
    fn open_session(&mut self, _invocation_name: &str, stage: Stage, _timeout_ms: u64) -> (SessionHandle, Observed) {
        let mut handle = SessionHandle::new(self.next_handle);
        self.next_handle += 1;
        let event = self.apply(SimInput::Open { stage });
        handle.observe(&event);
        (handle, Observed::instant(event))
    }

    fn say(&mut self, handle: &mut SessionHandle, text: &str, _timeout_ms: u64) -> Result<Observed> {
        handle.ensure_open()?;
        let event = self.apply(SimInput::Say(text.to_string()));
        handle.observe(&event);
        Ok(Observed::instant(event))
    }

    fn wait_silence(&mut self, handle: &mut SessionHandle, timeout_ms: u64) -> Result<Observed> {
        handle.ensure_open()?;
        if timeout_ms == 0 {
            return Ok(Observed::instant(ConnectorEvent::Silence));
        }
        let event = self.apply(SimInput::Silence);
        handle.observe(&event);
        Ok(Observed::instant(event))
    }
}

/// Hands out a fresh simulated skill per roster entry, matched by skill id.
#[derive(Clone, Default)]
pub struct SimFactory {
    profiles: HashMap<String, Arc<SimProfile>>,
    perturb: Option<Perturbation>,
}

impl SimFactory {
    pub fn new(profiles: impl IntoIterator<Item = SimProfile>) -> Result<Self> {
        let mut map = HashMap::new();
        for p in profiles {
            p.validate().map_err(|e| Error::validation("profile", format!("{}: {e}", p.skill.id)))?;
            if map.insert(p.skill.id.clone(), Arc::new(p)).is_some() {
                return Err(Error::validation("profile", "duplicate skill id in profile set"));
            }
        }
        Ok(SimFactory { profiles: map, perturb: None })
    }

    pub fn with_perturbation(mut self, perturb: Perturbation) -> Self {
        self.perturb = Some(perturb);
        self
    }

    pub fn profile(&self, skill_id: &str) -> Option<&SimProfile> {
        self.profiles.get(skill_id).map(Arc::as_ref)
    }
}

impl ConnectorFactory for SimFactory {
    fn connect(&self, skill: &SkillDescriptor) -> Result<Box<dyn Connector>> {
        let profile = self
            .profiles
            .get(&skill.id)
            .ok_or_else(|| Error::validation("skill", format!("no simulated profile for {:?}", skill.id)))?;
        let mut conn = SimConnector::new(Arc::clone(profile));
        if let Some(p) = &self.perturb {
            conn = conn.with_perturbation(Arc::clone(p));
        }
        Ok(Box::new(conn))
    }

    fn default_timeout_ms(&self) -> u64 {
        // Text connector answers immediately; any non-zero window works.
        1
    }
}
