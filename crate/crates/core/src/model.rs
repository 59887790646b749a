//! Domain types shared by every stage of the harness.
//!
//! All types serialize to snake_case JSON; sessions are stored one per line
//! (see [`crate::corpus`]).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::text::normalize;

/// The ten store categories a skill roster is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    DailyActivities,
    Entertainment,
    EducationReference,
    HealthFitness,
    TravelTransportation,
    GamesTriviaAccessories,
    FoodDrink,
    ShoppingFinance,
    CommunicationSocial,
    Kids,
}

impl Category {
    pub const ALL: [Category; 10] = [
        Category::DailyActivities,
        Category::Entertainment,
        Category::EducationReference,
        Category::HealthFitness,
        Category::TravelTransportation,
        Category::GamesTriviaAccessories,
        Category::FoodDrink,
        Category::ShoppingFinance,
        Category::CommunicationSocial,
        Category::Kids,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            Category::DailyActivities => "daily_activities",
            Category::Entertainment => "entertainment",
            Category::EducationReference => "education_reference",
            Category::HealthFitness => "health_fitness",
            Category::TravelTransportation => "travel_transportation",
            Category::GamesTriviaAccessories => "games_trivia_accessories",
            Category::FoodDrink => "food_drink",
            Category::ShoppingFinance => "shopping_finance",
            Category::CommunicationSocial => "communication_social",
            Category::Kids => "kids",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Category::DailyActivities => "Daily Activities",
            Category::Entertainment => "Entertainment",
            Category::EducationReference => "Education & Reference",
            Category::HealthFitness => "Health & Fitness",
            Category::TravelTransportation => "Travel & Transportation",
            Category::GamesTriviaAccessories => "Games, Trivia & Accessories",
            Category::FoodDrink => "Food & Drink",
            Category::ShoppingFinance => "Shopping & Finance",
            Category::CommunicationSocial => "Communication & Social",
            Category::Kids => "Kids",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for Category {
    type Err = Error;

    /// Accepts either the snake_case slug or the store display name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = normalize(&s.replace('_', " ").replace('&', " and "));
        Category::ALL
            .into_iter()
            .find(|c| {
                normalize(&c.slug().replace('_', " ")) == wanted
                    || normalize(&c.display_name().replace('&', " and ")) == wanted
            })
            .ok_or_else(|| Error::validation("category", format!("unknown category {s:?}")))
    }
}

/// One roster row: a skill to be crawled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillDescriptor {
    pub id: String,
    pub display_name: String,
    pub invocation_name: String,
    pub category: Category,
    #[serde(default)]
    pub subcategory: Option<String>,
    pub review_count: u64,
    #[serde(default)]
    pub avg_rating: Option<f64>,
    /// Set when the skill is left out of crawling and aggregation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded_reason: Option<String>,
}

impl SkillDescriptor {
    pub fn validate(&self) -> Result<(), Error> {
        if self.id.trim().is_empty() {
            return Err(Error::validation("id", "must not be empty"));
        }
        if self.invocation_name.trim().is_empty() {
            return Err(Error::validation("invocation_name", "must not be empty"));
        }
        if let Some(r) = self.avg_rating {
            if !(0.0..=5.0).contains(&r) {
                return Err(Error::validation("avg_rating", format!("{r} is outside [0, 5]")));
            }
        }
        Ok(())
    }

    pub fn is_excluded(&self) -> bool {
        self.excluded_reason.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Crawler,
    Skill,
}

/// A single transcribed utterance.
///
/// `normalized_text` is always recomputed from `text`, including on
/// deserialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawUtterance")]
pub struct Utterance {
    role: Role,
    text: String,
    normalized_text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    confidence: Option<f64>,
    timestamp: u64,
}

#[derive(Deserialize)]
struct RawUtterance {
    role: Role,
    text: String,
    #[serde(default)]
    confidence: Option<f64>,
    #[serde(default)]
    timestamp: u64,
}

impl From<RawUtterance> for Utterance {
    fn from(raw: RawUtterance) -> Self {
        let confidence = match raw.role {
            Role::Skill => raw.confidence.map(|c| c.clamp(0.0, 1.0)),
            Role::Crawler => None,
        };
        Utterance {
            role: raw.role,
            normalized_text: normalize(&raw.text),
            text: raw.text,
            confidence,
            timestamp: raw.timestamp,
        }
    }
}

impl Utterance {
    pub fn crawler(text: impl Into<String>, timestamp: u64) -> Self {
        RawUtterance { role: Role::Crawler, text: text.into(), confidence: None, timestamp }.into()
    }

    pub fn skill(text: impl Into<String>, confidence: Option<f64>, timestamp: u64) -> Self {
        RawUtterance { role: Role::Skill, text: text.into(), confidence, timestamp }.into()
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn normalized_text(&self) -> &str {
        &self.normalized_text
    }

    pub fn confidence(&self) -> Option<f64> {
        self.confidence
    }

    pub fn timestamp(&self) -> u64 {
        self.timestamp
    }

    pub fn set_text(&mut self, text: impl Into<String>) {
        self.text = text.into();
        self.normalized_text = normalize(&self.text);
    }
}

/// What the crawler did on a turn: spoke a command or stayed silent.
#[derive(Debug, Clone, PartialEq)]
pub enum TurnCommand {
    Spoken(Utterance),
    Silence,
}

/// What the skill did on a turn.
#[derive(Debug, Clone, PartialEq)]
pub enum TurnResponse {
    Spoken(Utterance),
    NoResponse,
}

const SILENCE_MARKER: &str = "SILENCE";
const NO_RESPONSE_MARKER: &str = "NO_RESPONSE";

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SlotRepr {
    Marker(String),
    Spoken(Utterance),
}

impl Serialize for TurnCommand {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TurnCommand::Spoken(u) => u.serialize(s),
            TurnCommand::Silence => s.serialize_str(SILENCE_MARKER),
        }
    }
}

impl<'de> Deserialize<'de> for TurnCommand {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match SlotRepr::deserialize(d)? {
            SlotRepr::Spoken(u) => Ok(TurnCommand::Spoken(u)),
            SlotRepr::Marker(m) if m == SILENCE_MARKER => Ok(TurnCommand::Silence),
            SlotRepr::Marker(m) => Err(serde::de::Error::custom(format!("unknown command marker {m:?}"))),
        }
    }
}

impl Serialize for TurnResponse {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TurnResponse::Spoken(u) => u.serialize(s),
            TurnResponse::NoResponse => s.serialize_str(NO_RESPONSE_MARKER),
        }
    }
}

impl<'de> Deserialize<'de> for TurnResponse {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match SlotRepr::deserialize(d)? {
            SlotRepr::Spoken(u) => Ok(TurnResponse::Spoken(u)),
            SlotRepr::Marker(m) if m == NO_RESPONSE_MARKER => Ok(TurnResponse::NoResponse),
            SlotRepr::Marker(m) => Err(serde::de::Error::custom(format!("unknown response marker {m:?}"))),
        }
    }
}

/// One command/response exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub command: TurnCommand,
    pub response: TurnResponse,
    pub wait_elapsed: u64,
    /// The skill ended the session on this turn.
    #[serde(default)]
    pub skill_exited: bool,
}

impl Turn {
    pub fn command_text(&self) -> Option<&str> {
        match &self.command {
            TurnCommand::Spoken(u) => Some(u.text()),
            TurnCommand::Silence => None,
        }
    }

    pub fn is_silence(&self) -> bool {
        matches!(self.command, TurnCommand::Silence)
    }

    /// Response text, or `None` for `NO_RESPONSE`.
    pub fn response_text(&self) -> Option<&str> {
        match &self.response {
            TurnResponse::Spoken(u) => Some(u.text()),
            TurnResponse::NoResponse => None,
        }
    }

    /// Normalized response text; empty for `NO_RESPONSE`.
    pub fn normalized_response(&self) -> &str {
        match &self.response {
            TurnResponse::Spoken(u) => u.normalized_text(),
            TurnResponse::NoResponse => "",
        }
    }

    pub fn has_response(&self) -> bool {
        !self.normalized_response().is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    BasicLoop,
    VarietyRun,
    Exploration,
    SilenceProbe,
    MemoryCheck,
}

impl Probe {
    /// Probes whose sessions follow the open-help-stop shape.
    pub fn is_basic_loop(self) -> bool {
        matches!(self, Probe::BasicLoop | Probe::VarietyRun | Probe::MemoryCheck)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    FirstUse,
    PostSetup,
    PostExploration,
    #[serde(rename = "n/a")]
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ExitedByStop,
    AutoExit,
    Timeout,
    ConnectorError,
}

/// Identifies a session within one skill's slice of the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SessionRef {
    pub probe: Probe,
    pub run_index: u32,
}

impl fmt::Display for SessionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let probe = serde_json::to_value(self.probe).ok();
        let name = probe.as_ref().and_then(|v| v.as_str()).unwrap_or("?");
        write!(f, "{name}#{}", self.run_index)
    }
}

/// One recorded conversation with a skill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub skill_id: String,
    pub probe: Probe,
    pub run_index: u32,
    pub stage: Stage,
    pub turns: Vec<Turn>,
    pub termination: Termination,
    /// Commands the protocol called for but never delivered because the
    /// session had already ended.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unsent: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Session {
    pub fn session_ref(&self) -> SessionRef {
        SessionRef { probe: self.probe, run_index: self.run_index }
    }

    pub fn is_successful(&self) -> bool {
        self.termination != Termination::ConnectorError
    }

    /// The opening exchange, if it was recorded.
    pub fn open_turn(&self) -> Option<&Turn> {
        self.turns.first()
    }

    /// The first turn whose spoken command normalizes to `command`.
    pub fn find_command(&self, command: &str) -> Option<(usize, &Turn)> {
        let wanted = normalize(command);
        self.turns.iter().enumerate().skip(1).find(|(_, t)| match &t.command {
            TurnCommand::Spoken(u) => u.normalized_text() == wanted,
            TurnCommand::Silence => false,
        })
    }

    pub fn check_invariants(&self) -> Result<(), Error> {
        if self.run_index == 0 {
            return Err(Error::invariant("session run_index must be positive"));
        }
        if self.turns.is_empty() && self.termination != Termination::ConnectorError {
            return Err(Error::invariant("session without turns must end in connector_error"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GuidelineId {
    G1,
    G2,
    G3,
    G4,
    G5,
    G6,
    G7,
    G8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    BasicCommands,
    Variety,
    ErrorHandling,
    Memorizing,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 4] =
        [FeatureGroup::BasicCommands, FeatureGroup::Variety, FeatureGroup::ErrorHandling, FeatureGroup::Memorizing];

    pub fn guidelines(self) -> &'static [GuidelineId] {
        use GuidelineId::*;
        match self {
            FeatureGroup::BasicCommands => &[G1, G2, G3],
            FeatureGroup::Variety => &[G4, G5],
            FeatureGroup::ErrorHandling => &[G6, G7],
            FeatureGroup::Memorizing => &[G8],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FeatureGroup::BasicCommands => "basic_commands",
            FeatureGroup::Variety => "variety",
            FeatureGroup::ErrorHandling => "error_handling",
            FeatureGroup::Memorizing => "memorizing",
        }
    }
}

impl GuidelineId {
    pub const ALL: [GuidelineId; 8] = [
        GuidelineId::G1,
        GuidelineId::G2,
        GuidelineId::G3,
        GuidelineId::G4,
        GuidelineId::G5,
        GuidelineId::G6,
        GuidelineId::G7,
        GuidelineId::G8,
    ];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn feature_group(self) -> FeatureGroup {
        use GuidelineId::*;
        match self {
            G1 | G2 | G3 => FeatureGroup::BasicCommands,
            G4 | G5 => FeatureGroup::Variety,
            G6 | G7 => FeatureGroup::ErrorHandling,
            G8 => FeatureGroup::Memorizing,
        }
    }

    pub fn title(self) -> &'static str {
        use GuidelineId::*;
        match self {
            G1 => "Open command",
            G2 => "Help command",
            G3 => "Stop command",
            G4 => "Open response variety",
            G5 => "Stop response variety",
            G6 => "Re-prompting",
            G7 => "Re-prompt rewording",
            G8 => "Memorizing",
        }
    }
}

impl fmt::Display for GuidelineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Compliant,
    NonCompliant,
    NotApplicable,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(compliant: bool) -> Self {
        if compliant {
            Verdict::Compliant
        } else {
            Verdict::NonCompliant
        }
    }
}

/// Pointer to the turn a verdict was decided on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Evidence {
    pub session: SessionRef,
    pub turn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidelineVerdict {
    pub guideline: GuidelineId,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub facets: BTreeMap<String, bool>,
    #[serde(default)]
    pub evidence: Vec<Evidence>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl GuidelineVerdict {
    pub fn new(guideline: GuidelineId, verdict: Verdict, evidence: Vec<Evidence>) -> Self {
        GuidelineVerdict { guideline, verdict, facets: BTreeMap::new(), evidence, note: String::new() }
    }

    pub fn inconclusive(guideline: GuidelineId, note: impl Into<String>) -> Self {
        GuidelineVerdict {
            guideline,
            verdict: Verdict::Inconclusive,
            facets: BTreeMap::new(),
            evidence: Vec::new(),
            note: note.into(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn with_evidence(mut self, evidence: Vec<Evidence>) -> Self {
        self.evidence = evidence;
        self
    }

    pub fn with_facet(mut self, name: &str, value: bool) -> Self {
        self.facets.insert(name.to_string(), value);
        self
    }

    pub fn check_invariants(&self) -> Result<(), Error> {
        let decided = matches!(self.verdict, Verdict::Compliant | Verdict::NonCompliant);
        if decided && self.evidence.is_empty() {
            return Err(Error::invariant(format!("{} verdict carries no evidence", self.guideline)));
        }
        Ok(())
    }
}

pub const GOODBYE_FACET: &str = "goodbye_present";
