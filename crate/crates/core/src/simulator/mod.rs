//! In-process simulated skills.
//!
//! A [`SimProfile`] describes how a skill behaves; [`step`] is its
//! deterministic transition function and [`ground_truth`] derives the
//! guideline verdicts the profile should earn, directly from its fields.

pub mod generate;
pub mod serve;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::connector::ConnectorEvent;
use crate::error::{Error, Result};
use crate::model::{GuidelineId, SkillDescriptor, Stage, Verdict};
use crate::text::{contains_phrase, normalize};

pub use generate::{generate_profiles, GeneratorConfig};

/// Reply to commands the skill does not understand. Kept under the default
/// informative-help word threshold.
pub const FALLBACK_RESPONSE: &str = "Hmm, what was that?";

pub const STOP_COMMANDS: [&str; 3] = ["stop", "cancel", "exit"];
pub const HELP_COMMAND: &str = "help";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WelcomeVariants {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_use: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_setup: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_exploration: Option<String>,
}

impl WelcomeVariants {
    pub fn is_empty(&self) -> bool {
        self.first_use.is_none() && self.post_setup.is_none() && self.post_exploration.is_none()
    }

    /// The welcome spoken at `stage`, falling back to the closest earlier stage.
    pub fn for_stage(&self, stage: Stage) -> Option<&str> {
        let chain: &[&Option<String>] = match stage {
            Stage::FirstUse | Stage::NotApplicable => &[&self.first_use],
            Stage::PostSetup => &[&self.post_setup, &self.first_use],
            Stage::PostExploration => &[&self.post_exploration, &self.post_setup, &self.first_use],
        };
        chain.iter().find_map(|w| w.as_deref())
    }

    /// Welcomes heard at first use, after setup and after exploration.
    pub fn staged(&self) -> Vec<&str> {
        [Stage::FirstUse, Stage::PostSetup, Stage::PostExploration]
            .into_iter()
            .filter_map(|s| self.for_stage(s))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepromptMode {
    #[default]
    None,
    Fixed,
    Reworded,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryMode {
    #[default]
    None,
    ResumePrompt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimProfile {
    pub skill: SkillDescriptor,
    #[serde(default)]
    pub welcome_variants: WelcomeVariants,
    #[serde(default)]
    pub help_text: Option<String>,
    #[serde(default)]
    pub goodbye_variants: Vec<String>,
    #[serde(default)]
    pub one_shot: bool,
    #[serde(default)]
    pub reprompt_mode: RepromptMode,
    #[serde(default)]
    pub reprompt_texts: Vec<String>,
    #[serde(default)]
    pub memory_mode: MemoryMode,
    #[serde(default)]
    pub memory_markers: Vec<String>,
    /// Keyed by normalized command.
    #[serde(default)]
    pub command_responses: BTreeMap<String, String>,
    /// Commands after which the skill answers and then exits.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exit_after_commands: Vec<String>,
    #[serde(default)]
    pub rng_seed: u64,
}

/// Keeps the first of each group of entries that normalize identically.
pub(crate) fn distinct_by_normalized(texts: &[String]) -> Vec<&str> {
    let mut seen = BTreeSet::new();
    texts.iter().filter(|t| seen.insert(normalize(t))).map(String::as_str).collect()
}

impl SimProfile {
    /// Minimal profile: fixed welcome, no help, no goodbye, no re-prompt.
    pub fn new(skill: SkillDescriptor, welcome: impl Into<String>) -> Self {
        SimProfile {
            skill,
            welcome_variants: WelcomeVariants { first_use: Some(welcome.into()), ..Default::default() },
            help_text: None,
            goodbye_variants: Vec::new(),
            one_shot: false,
            reprompt_mode: RepromptMode::None,
            reprompt_texts: Vec::new(),
            memory_mode: MemoryMode::None,
            memory_markers: Vec::new(),
            command_responses: BTreeMap::new(),
            exit_after_commands: Vec::new(),
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.skill.validate()?;
        let w = &self.welcome_variants;
        for text in [&w.first_use, &w.post_setup, &w.post_exploration].into_iter().flatten() {
            if normalize(text).is_empty() {
                return Err(Error::invariant("welcome variants must not be blank"));
            }
        }
        if !w.is_empty() && w.first_use.is_none() {
            return Err(Error::invariant("a first_use welcome is required when any welcome is set"));
        }
        if self.goodbye_variants.iter().any(|g| normalize(g).is_empty()) {
            return Err(Error::invariant("goodbye variants must not be blank"));
        }
        if self.one_shot {
            if self.help_text.is_some() {
                return Err(Error::invariant("one-shot skills have no help text"));
            }
            if self.reprompt_mode != RepromptMode::None {
                return Err(Error::invariant("one-shot skills do not re-prompt"));
            }
            if !self.goodbye_variants.is_empty() {
                return Err(Error::invariant("one-shot skills are never stopped, so cannot say goodbye"));
            }
        }
        match self.reprompt_mode {
            RepromptMode::None => {}
            RepromptMode::Fixed => {
                if self.reprompt_texts.is_empty() {
                    return Err(Error::invariant("fixed re-prompt mode needs a re-prompt text"));
                }
            }
            RepromptMode::Reworded => {
                if distinct_by_normalized(&self.reprompt_texts).len() < 2 {
                    return Err(Error::invariant("reworded re-prompt mode needs two differing texts"));
                }
            }
        }
        if self.reprompt_mode != RepromptMode::None && self.reprompt_texts.iter().any(|t| normalize(t).is_empty()) {
            return Err(Error::invariant("re-prompt texts must not be blank"));
        }
        if self.memory_mode == MemoryMode::ResumePrompt {
            let resumed = w.post_exploration.as_deref().unwrap_or_default();
            if !self.memory_markers.iter().any(|m| contains_phrase(resumed, m)) {
                return Err(Error::invariant(
                    "resume_prompt mode needs a post_exploration welcome with a memory marker",
                ));
            }
            let first = w.first_use.as_deref().unwrap_or_default();
            if self.memory_markers.iter().any(|m| contains_phrase(first, m)) {
                return Err(Error::invariant("the first_use welcome must not contain a memory marker"));
            }
        }
        Ok(())
    }

    fn is_stop(command: &str) -> bool {
        STOP_COMMANDS.contains(&command)
    }
}

/// Server-side memory of one simulated skill.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimState {
    pub first_use: bool,
    pub setup_done: bool,
    pub explored_commands: BTreeSet<String>,
    pub session_open: bool,
    /// Sessions that ended after setup was complete.
    pub sessions_after_setup: u32,
    /// Stops heard so far; drives goodbye rotation.
    pub stop_count: u64,
    /// Re-prompts given in the current session.
    pub session_reprompts: u64,
}

impl SimState {
    pub fn new() -> Self {
        SimState { first_use: true, ..Default::default() }
    }

    /// Usage stage the skill considers itself in.
    pub fn stage(&self) -> Stage {
        if !self.explored_commands.is_empty() || self.sessions_after_setup > 0 {
            Stage::PostExploration
        } else if self.setup_done {
            Stage::PostSetup
        } else {
            Stage::FirstUse
        }
    }

    fn end_session(&mut self) {
        self.session_open = false;
        self.first_use = false;
        if self.setup_done {
            self.sessions_after_setup += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimInput {
    /// Open the skill; `stage` is the harness's stage signal.
    Open {
        stage: Stage,
    },
    Say(String),
    Silence,
}

/// Deterministic transition function of a simulated skill.
pub fn step(profile: &SimProfile, state: &SimState, input: &SimInput) -> (ConnectorEvent, SimState) {
    let mut next = state.clone();
    let event = match input {
        SimInput::Open { stage } => {
            if matches!(stage, Stage::PostSetup | Stage::PostExploration) {
                next.setup_done = true;
            }
            next.session_open = true;
            next.session_reprompts = 0;
            let welcome = profile.welcome_variants.for_stage(next.stage()).map(str::to_string);
            if profile.one_shot {
                next.end_session();
                ConnectorEvent::closed(welcome)
            } else {
                match welcome {
                    Some(text) => ConnectorEvent::response(text),
                    None => ConnectorEvent::Silence,
                }
            }
        }
        _ if !state.session_open => ConnectorEvent::error("no open session"),
        SimInput::Say(text) => {
            let command = normalize(text);
            if SimProfile::is_stop(&command) {
                let goodbyes = distinct_by_normalized(&profile.goodbye_variants);
                let goodbye = if goodbyes.is_empty() {
                    None
                } else {
                    let idx = profile.rng_seed.wrapping_add(next.stop_count) % goodbyes.len() as u64;
                    Some(goodbyes[idx as usize].to_string())
                };
                next.stop_count += 1;
                next.end_session();
                ConnectorEvent::closed(goodbye)
            } else if command == HELP_COMMAND {
                ConnectorEvent::response(profile.help_text.as_deref().unwrap_or(FALLBACK_RESPONSE))
            } else if let Some(reply) = profile.command_responses.get(&command) {
                next.explored_commands.insert(command.clone());
                if profile.exit_after_commands.iter().any(|c| normalize(c) == command) {
                    next.end_session();
                    ConnectorEvent::closed(Some(reply.clone()))
                } else {
                    ConnectorEvent::response(reply.clone())
                }
            } else {
                ConnectorEvent::response(FALLBACK_RESPONSE)
            }
        }
        SimInput::Silence => match profile.reprompt_mode {
            RepromptMode::None => {
                next.end_session();
                ConnectorEvent::closed(None::<String>)
            }
            RepromptMode::Fixed => ConnectorEvent::response(profile.reprompt_texts[0].clone()),
            RepromptMode::Reworded => {
                let texts = distinct_by_normalized(&profile.reprompt_texts);
                let text = texts[(next.session_reprompts % texts.len() as u64) as usize];
                next.session_reprompts += 1;
                ConnectorEvent::response(text)
            }
        },
    };
    (event, next)
}

/// Expected outcome for a profile, derived from its fields alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub skill_id: String,
    pub verdicts: BTreeMap<GuidelineId, Verdict>,
    pub goodbye_present: bool,
}

pub fn ground_truth(profile: &SimProfile) -> Result<GroundTruth> {
    use GuidelineId::*;
    profile.validate()?;
    let has_welcome = !profile.welcome_variants.is_empty();
    let help = profile.help_text.as_deref().map(normalize).unwrap_or_default();
    let staged = profile.welcome_variants.staged();
    let distinct_welcomes: BTreeSet<String> = staged.iter().map(|w| normalize(w)).collect();
    let distinct_goodbyes = distinct_by_normalized(&profile.goodbye_variants).len();

    let mut verdicts = BTreeMap::new();
    verdicts.insert(G1, Verdict::from_bool(has_welcome));
    verdicts.insert(G2, Verdict::from_bool(!help.is_empty() && !profile.one_shot));
    verdicts.insert(G3, Verdict::Compliant);
    verdicts.insert(G4, Verdict::from_bool(distinct_welcomes.len() >= 2));
    verdicts.insert(G5, Verdict::from_bool(distinct_goodbyes >= 2));
    verdicts.insert(
        G6,
        if profile.one_shot {
            Verdict::NotApplicable
        } else {
            Verdict::from_bool(profile.reprompt_mode != RepromptMode::None)
        },
    );
    verdicts.insert(G7, Verdict::from_bool(profile.reprompt_mode == RepromptMode::Reworded));
    verdicts.insert(G8, Verdict::from_bool(profile.memory_mode == MemoryMode::ResumePrompt));

    Ok(GroundTruth {
        skill_id: profile.skill.id.clone(),
        verdicts,
        goodbye_present: !profile.goodbye_variants.is_empty(),
    })
}

/// Hand-written profiles modelled on skills described in the study.
pub mod exemplars {
    use super::*;
    use crate::model::Category;

    fn skill(id: &str, name: &str, category: Category) -> SkillDescriptor {
        SkillDescriptor {
            id: id.into(),
            display_name: name.into(),
            invocation_name: name.to_lowercase(),
            category,
            subcategory: None,
            review_count: 1000,
            avg_rating: Some(4.5),
            excluded_reason: None,
        }
    }

    /// Three distinct staged openings and three goodbye variants.
    pub fn zyrtec() -> SimProfile {
        SimProfile {
            welcome_variants: WelcomeVariants {
                first_use: Some("Hello! Let's get ahead of your allergies with today's Allergycast based on your location. Just follow these steps. One, Open your Alexa app on your phone.".into()),
                post_setup: Some("let's start with your city and state, then we can get ahead of those allergies by setting up your allergy test report. What's your city and state?".into()),
                post_exploration: Some("Welcome to Zyrtec. Today in Boulder, the pollen count is High, at 9.2 out of 12.".into()),
            },
            help_text: Some("You can say what's the pollen count, or ask for today's Allergycast.".into()),
            goodbye_variants: vec![
                "Ok. If you need allergy info, I am here for you. Unless you move me. Then I am over there for you. If you need to stock up on Zyrtec, just say my name, then order Zyrtec.".into(),
                "Ok, if you need allergen information, I will be here for you. Remember, if you need to stock up on Zyrtec, I can help. Just say my name, then order Zyrtec".into(),
                "Ok. When you need allergen information, I am here 24 7 365. If you need to stock up on Zyrtec, just say my name, then order Zyrtec.".into(),
            ],
            reprompt_mode: RepromptMode::Reworded,
            reprompt_texts: vec![
                "What's your city and state?".into(),
                "To get your Allergycast, tell me the city and state you live in.".into(),
            ],
            command_responses: BTreeMap::from([
                ("whats the pollen count".into(), "The pollen count is High, at 9.2 out of 12.".into()),
                ("for todays allergycast".into(), "Today's Allergycast: trees are the predominant allergen.".into()),
            ]),
            ..SimProfile::new(skill("zyrtec", "Zyrtec", Category::HealthFitness), "")
        }
    }

    /// Same opening every time; fixed help text listing three commands.
    pub fn scriptures_daily() -> SimProfile {
        SimProfile {
            help_text: Some("You can say tell me my daily text for today or read me my daily text for last Monday. You can also say read me tomorrow's daily text.".into()),
            goodbye_variants: vec!["Goodbye.".into()],
            reprompt_mode: RepromptMode::Fixed,
            reprompt_texts: vec!["Which day do you like to hear".into()],
            command_responses: BTreeMap::from([
                ("tell me my daily text for today".into(), "Today's text is from Psalms.".into()),
                ("read me my daily text for last monday".into(), "Last Monday's text is from Proverbs.".into()),
                ("read me tomorrows daily text".into(), "Tomorrow's text is from John.".into()),
            ]),
            ..SimProfile::new(
                skill("scriptures", "Examining the Scriptures Daily", Category::EducationReference),
                "Which day do you like to hear",
            )
        }
    }

    /// One-shot fact skill.
    pub fn cat_facts() -> SimProfile {
        SimProfile {
            one_shot: true,
            ..SimProfile::new(
                skill("cat-facts", "Cat Facts", Category::Entertainment),
                "Here's your cat fact: cats sleep for around thirteen to sixteen hours a day.",
            )
        }
    }

    /// Remembers an interrupted workout.
    pub fn seven_minute_workout() -> SimProfile {
        SimProfile {
            welcome_variants: WelcomeVariants {
                first_use: Some("Welcome to Seven Minute Workout. When you are ready, just say start workout.".into()),
                post_setup: None,
                post_exploration: Some("Welcome to Seven Minute Workout. To continue where you last left off, say ready. Otherwise, just say start workout.".into()),
            },
            help_text: Some("Seven Minute Workout guides you through twelve exercises. Just say start workout.".into()),
            goodbye_variants: vec!["Great job today.".into(), "See you next workout.".into()],
            reprompt_mode: RepromptMode::Reworded,
            reprompt_texts: vec![
                "Say start workout when you are ready.".into(),
                "You can say start workout, or say stop to finish.".into(),
            ],
            memory_mode: MemoryMode::ResumePrompt,
            memory_markers: vec!["continue where you".into(), "left off".into()],
            command_responses: BTreeMap::from([("start workout".into(), "Starting with jumping jacks.".into())]),
            ..SimProfile::new(skill("7min", "Seven Minute Workout", Category::HealthFitness), "")
        }
    }

    /// Always the same greeting; game restarts every time.
    pub fn categories_game() -> SimProfile {
        let welcome = "howdy. You're playing Categories Game! For instructions, say help me or, say start playing!";
        SimProfile {
            help_text: Some("Name as many things in the category as you can. Say start playing.".into()),
            goodbye_variants: vec!["OK".into()],
            reprompt_mode: RepromptMode::Fixed,
            reprompt_texts: vec![welcome.into()],
            command_responses: BTreeMap::from([
                ("help me".into(), "Name as many things in the category as you can.".into()),
                ("start playing".into(), "The category is fruit. Go!".into()),
            ]),
            ..SimProfile::new(skill("categories", "Categories Game", Category::GamesTriviaAccessories), welcome)
        }
    }

    /// Stays silent when the user does.
    pub fn bring() -> SimProfile {
        SimProfile {
            help_text: Some("You can say add milk to my list, or ask what is on my list.".into()),
            goodbye_variants: vec!["Goodbye.".into()],
            command_responses: BTreeMap::from([
                ("add milk to my list".into(), "Milk was added.".into()),
                ("what is on my list".into(), "Your list has milk on it.".into()),
            ]),
            ..SimProfile::new(
                skill("bring", "Bring", Category::ShoppingFinance),
                "Welcome to Bring! What should I add?",
            )
        }
    }

    /// Every feature present: staged variety, goodbyes, reworded re-prompts, memory.
    pub fn fully_featured() -> SimProfile {
        SimProfile {
            welcome_variants: WelcomeVariants {
                first_use: Some("Welcome to Amazon Story Time! Would you like to hear a story?".into()),
                post_setup: Some("Hello again from Amazon Story Time. Ready for a story?".into()),
                post_exploration: Some(
                    "Welcome back to Amazon Story time! Would you like to resume The Mouse and the Unicorn?".into(),
                ),
            },
            help_text: Some("You can say play a story, or ask for a story about animals.".into()),
            goodbye_variants: vec!["Sweet dreams.".into(), "See you at story time.".into(), "Goodbye for now.".into()],
            reprompt_mode: RepromptMode::Reworded,
            reprompt_texts: vec![
                "you can say yes to resume or no to play the next story".into(),
                "Should I keep going with The Mouse and the Unicorn? Say yes or no.".into(),
            ],
            memory_mode: MemoryMode::ResumePrompt,
            memory_markers: vec!["welcome back".into(), "resume".into()],
            command_responses: BTreeMap::from([
                ("play a story".into(), "Once upon a time, a mouse met a unicorn.".into()),
                ("for a story about animals".into(), "Here is a story about a brave fox.".into()),
            ]),
            ..SimProfile::new(skill("story-time", "Amazon Story Time", Category::Kids), "")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::exemplars::*;
    use super::*;
    use GuidelineId::*;

    fn run(profile: &SimProfile, inputs: &[SimInput]) -> Vec<ConnectorEvent> {
        let mut state = SimState::new();
        inputs
            .iter()
            .map(|i| {
                let (e, s) = step(profile, &state, i);
                state = s;
                e
            })
            .collect()
    }

    fn open(stage: Stage) -> SimInput {
        SimInput::Open { stage }
    }

    #[test]
    fn exemplars_are_valid() {
        for p in [
            zyrtec(),
            scriptures_daily(),
            cat_facts(),
            seven_minute_workout(),
            categories_game(),
            bring(),
            fully_featured(),
        ] {
            p.validate().unwrap_or_else(|e| panic!("{}: {e}", p.skill.id));
        }
    }

    #[test]
    fn memory_profile_resumes_after_exploration() {
        let p = seven_minute_workout();
        let mut state = SimState::new();
        state.explored_commands.insert("start workout".into());
        let (event, next) = step(&p, &state, &open(Stage::PostExploration));
        assert!(event.spoken_text().unwrap().contains("continue where you last left off"));
        assert!(next.session_open);
    }

    #[test]
    fn stop_always_closes() {
        for p in [zyrtec(), scriptures_daily(), bring(), categories_game(), fully_featured()] {
            let events = run(&p, &[open(Stage::FirstUse), SimInput::Say("stop".into())]);
            assert!(matches!(events[1], ConnectorEvent::Closed { .. }), "{}", p.skill.id);
        }
    }

    #[test]
    fn fixed_reprompt_repeats() {
        let events = run(&scriptures_daily(), &[open(Stage::FirstUse), SimInput::Silence, SimInput::Silence]);
        assert_eq!(events[1], events[2]);
        assert_eq!(events[1].spoken_text(), Some("Which day do you like to hear"));
    }

    #[test]
    fn reworded_reprompt_cycles() {
        let events =
            run(&fully_featured(), &[open(Stage::FirstUse), SimInput::Silence, SimInput::Silence, SimInput::Silence]);
        assert_ne!(events[1], events[2]);
        assert_eq!(events[1], events[3]);
    }

    #[test]
    fn no_reprompt_closes_on_silence() {
        let events = run(&bring(), &[open(Stage::FirstUse), SimInput::Silence]);
        assert_eq!(events[1], ConnectorEvent::Closed { text: None });
    }

    #[test]
    fn one_shot_closes_at_open() {
        let (event, state) = step(&cat_facts(), &SimState::new(), &open(Stage::FirstUse));
        assert!(matches!(event, ConnectorEvent::Closed { text: Some(_) }));
        assert!(!state.session_open);
        let (event, _) = step(&cat_facts(), &state, &SimInput::Say("help".into()));
        assert!(matches!(event, ConnectorEvent::Error { .. }));
    }

    #[test]
    fn staged_welcomes_follow_state() {
        let p = zyrtec();
        let events = run(
            &p,
            &[
                open(Stage::FirstUse),
                SimInput::Say("stop".into()),
                open(Stage::PostSetup),
                SimInput::Say("stop".into()),
                open(Stage::PostExploration),
            ],
        );
        let staged = p.welcome_variants.staged();
        assert_eq!(events[0].spoken_text(), Some(staged[0]));
        assert_eq!(events[2].spoken_text(), Some(staged[1]));
        assert_eq!(events[4].spoken_text(), Some(staged[2]));
    }

    #[test]
    fn goodbyes_rotate_from_seed() {
        let mut p = zyrtec();
        p.rng_seed = 1;
        let inputs: Vec<SimInput> =
            (0..3).flat_map(|_| [open(Stage::FirstUse), SimInput::Say("stop".into())]).collect();
        let events = run(&p, &inputs);
        let said: Vec<&str> = events.iter().skip(1).step_by(2).map(|e| e.spoken_text().unwrap()).collect();
        assert_eq!(said, [&p.goodbye_variants[1], &p.goodbye_variants[2], &p.goodbye_variants[0]]);
    }

    #[test]
    fn known_commands_are_recorded_and_unknown_fall_back() {
        let p = scriptures_daily();
        let mut state = SimState::new();
        for input in [open(Stage::PostSetup), SimInput::Say("Read me tomorrow's daily text.".into())] {
            state = step(&p, &state, &input).1;
        }
        assert!(state.explored_commands.contains("read me tomorrows daily text"));
        let (event, _) = step(&p, &state, &SimInput::Say("sing a song".into()));
        assert_eq!(event.spoken_text(), Some(FALLBACK_RESPONSE));
    }

    #[test]
    fn step_is_deterministic() {
        let p = fully_featured();
        let inputs =
            [open(Stage::FirstUse), SimInput::Silence, SimInput::Say("help".into()), SimInput::Say("stop".into())];
        assert_eq!(run(&p, &inputs), run(&p, &inputs));
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        let mut p = cat_facts();
        p.help_text = Some("help".into());
        assert!(ground_truth(&p).is_err());

        let mut p = fully_featured();
        p.reprompt_texts = vec!["Same.".into(), "same".into()];
        assert!(p.validate().is_err());

        let mut p = fully_featured();
        p.memory_markers = vec!["never said".into()];
        assert!(p.validate().is_err());

        let mut p = bring();
        p.welcome_variants = WelcomeVariants { post_setup: Some("hi".into()), ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn fully_featured_truth_is_all_compliant() {
        let truth = ground_truth(&fully_featured()).unwrap();
        assert!(truth.verdicts.values().all(|v| *v == Verdict::Compliant));
        assert!(truth.goodbye_present);
    }

    #[test]
    fn one_shot_truth_by_clause() {
        let truth = ground_truth(&cat_facts()).unwrap();
        let expected = BTreeMap::from([
            (G1, Verdict::Compliant),
            (G2, Verdict::NonCompliant),
            (G3, Verdict::Compliant),
            (G4, Verdict::NonCompliant),
            (G5, Verdict::NonCompliant),
            (G6, Verdict::NotApplicable),
            (G7, Verdict::NonCompliant),
            (G8, Verdict::NonCompliant),
        ]);
        assert_eq!(truth.verdicts, expected);
        assert!(!truth.goodbye_present);
    }

    #[test]
    fn fixed_reprompt_truth() {
        let truth = ground_truth(&scriptures_daily()).unwrap();
        assert_eq!(truth.verdicts[&G6], Verdict::Compliant);
        assert_eq!(truth.verdicts[&G7], Verdict::NonCompliant);
    }

    #[test]
    fn profile_json_round_trip() {
        let p = seven_minute_workout();
        let json = serde_json::to_string(&p).unwrap();
        let back: SimProfile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }
}
