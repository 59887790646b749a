//! Elicitation protocols run against any [`Connector`].
//!
//! Per skill the crawler runs, on one connector, the staged variety probe
//! (open-help-stop loops with an exploration session after the second run),
//! then the silence probe, then one more loop for the memory check.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connector::{Connector, ConnectorEvent, ConnectorFactory, Observed, SessionHandle};
use crate::error::{Error, Result};
use crate::ingestion::Roster;
use crate::model::{Probe, Session, SkillDescriptor, Stage, Termination, Turn, TurnCommand, TurnResponse, Utterance};
use crate::simulator::HELP_COMMAND;
use crate::text::{normalize, trim_punctuation};

pub const STOP_COMMAND: &str = "stop";

fn default_variety_runs() -> u32 {
    3
}
fn default_silence_count() -> u32 {
    2
}
fn default_max_extracted() -> usize {
    8
}
fn default_max_failed_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElicitationPlan {
    #[serde(default = "default_variety_runs")]
    pub variety_runs: u32,
    #[serde(default = "default_silence_count")]
    pub silence_count: u32,
    /// Listen window per exchange; `None` uses the connector's default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_timeout_ms: Option<u64>,
    #[serde(default = "default_max_extracted")]
    pub max_extracted_commands: usize,
    /// Share of crawled skills allowed to fail outright before the crawl
    /// counts as a connector failure.
    #[serde(default = "default_max_failed_fraction")]
    pub max_failed_fraction: f64,
}

impl Default for ElicitationPlan {
    fn default() -> Self {
        ElicitationPlan {
            variety_runs: default_variety_runs(),
            silence_count: default_silence_count(),
            response_timeout_ms: None,
            max_extracted_commands: default_max_extracted(),
            max_failed_fraction: default_max_failed_fraction(),
        }
    }
}

impl ElicitationPlan {
    pub fn validate(&self) -> Result<()> {
        if self.variety_runs < 2 {
            return Err(Error::validation("variety_runs", "must be at least 2"));
        }
        if self.silence_count == 0 {
            return Err(Error::validation("silence_count", "must be positive"));
        }
        if self.max_extracted_commands == 0 {
            return Err(Error::validation("max_extracted_commands", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.max_failed_fraction) {
            return Err(Error::validation("max_failed_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }

    fn stage_for_run(run_index: u32) -> Stage {
        match run_index {
            1 => Stage::FirstUse,
            2 => Stage::PostSetup,
            _ => Stage::PostExploration,
        }
    }
}

/// Cue phrases and conjunctions used to pull commands out of help text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRules {
    pub cue_phrases: Vec<String>,
    pub conjunctions: Vec<String>,
}

impl ExtractionRules {
    pub fn from_json(text: &str) -> Result<Self> {
        let rules: ExtractionRules = serde_json::from_str(text).map_err(|e| Error::json("extraction rules", e))?;
        if rules.cue_phrases.iter().all(|c| normalize(c).is_empty()) {
            return Err(Error::validation("cue_phrases", "at least one cue phrase is required"));
        }
        Ok(rules)
    }

    pub fn builtin() -> &'static ExtractionRules {
        static RULES: OnceLock<ExtractionRules> = OnceLock::new();
        RULES.get_or_init(|| {
            ExtractionRules::from_json(include_str!("../config/extraction.json"))
                .expect("bundled extraction rules parse")
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandSet {
    pub commands: Vec<String>,
    pub source_text: String,
}

/// Commands suggested by `help_text`, using the bundled rules.
pub fn extract_commands(help_text: &str, max: usize) -> CommandSet {
    extract_commands_with(ExtractionRules::builtin(), help_text, max)
}

/// Splits out each clause introduced by a cue phrase, then splits clauses on
/// conjunctions. Matching is done on normalized words, so the result only
/// depends on the normalized help text; surviving words keep their casing.
pub fn extract_commands_with(rules: &ExtractionRules, help_text: &str, max: usize) -> CommandSet {
    // Words that normalize to nothing vanish under normalization, so drop them up front.
    let words: Vec<(&str, String)> =
        help_text.split_whitespace().map(|w| (w, normalize(w))).filter(|(_, n)| !n.is_empty()).collect();

    let mut cues: Vec<Vec<String>> = rules
        .cue_phrases
        .iter()
        .map(|c| normalize(c).split(' ').map(str::to_string).collect::<Vec<_>>())
        .filter(|c| !c[0].is_empty())
        .collect();
    cues.sort_by_key(|c| std::cmp::Reverse(c.len()));
    let conjunctions: Vec<String> = rules.conjunctions.iter().map(|c| normalize(c)).collect();

    let cue_at = |i: usize| {
        cues.iter()
            .find(|cue| cue.len() <= words.len() - i && cue.iter().zip(&words[i..]).all(|(c, (_, w))| c == w))
            .map(Vec::len)
    };

    // Clauses: word ranges between the end of one cue and the start of the next.
    let mut clauses: Vec<(usize, usize)> = Vec::new();
    let mut open: Option<usize> = None;
    let mut i = 0;
    while i < words.len() {
        if let Some(len) = cue_at(i) {
            if let Some(start) = open {
                clauses.push((start, i));
            }
            i += len;
            open = Some(i);
        } else {
            i += 1;
        }
    }
    if let Some(start) = open {
        clauses.push((start, words.len()));
    }

    let mut commands: Vec<String> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    'clauses: for (start, end) in clauses {
        for piece in words[start..end].split(|(_, n)| conjunctions.contains(n)) {
            let joined = piece.iter().map(|(w, _)| *w).collect::<Vec<_>>().join(" ");
            let command = trim_punctuation(&joined);
            let key = normalize(command);
            if key.is_empty() || !seen.insert(key) {
                continue;
            }
            commands.push(command.to_string());
            if commands.len() == max {
                break 'clauses;
            }
        }
    }
    CommandSet { commands, source_text: help_text.to_string() }
}

pub fn open_command(skill: &SkillDescriptor) -> String {
    format!("open {}", skill.invocation_name)
}

enum Outcome {
    Responded,
    Silent,
    Exited,
    Failed,
}

/// Records one session's turns against a connector, keeping a logical clock.
struct Recorder<'c> {
    conn: &'c mut dyn Connector,
    timeout_ms: u64,
    clock: u64,
    handle: Option<SessionHandle>,
    session: Session,
}

impl<'c> Recorder<'c> {
    fn new(
        conn: &'c mut dyn Connector,
        skill: &SkillDescriptor,
        timeout_ms: u64,
        probe: Probe,
        run_index: u32,
        stage: Stage,
    ) -> Self {
        Recorder {
            conn,
            timeout_ms,
            clock: 0,
            handle: None,
            session: Session {
                skill_id: skill.id.clone(),
                probe,
                run_index,
                stage,
                turns: Vec::new(),
                termination: Termination::Timeout,
                unsent: Vec::new(),
                error: None,
            },
        }
    }

    fn open(&mut self, skill: &SkillDescriptor, stage: Stage) -> Outcome {
        let command = open_command(skill);
        let (handle, observed) = self.conn.open_session(&skill.invocation_name, stage, self.timeout_ms);
        self.handle = Some(handle);
        self.record(Some(command), Ok(observed))
    }

    fn say(&mut self, text: &str) -> Outcome {
        let observed = match self.handle.as_mut() {
            Some(h) => self.conn.say(h, text, self.timeout_ms),
            None => Err(Error::precondition("say before open")),
        };
        self.record(Some(text.to_string()), observed)
    }

    fn silence(&mut self) -> Outcome {
        let observed = match self.handle.as_mut() {
            Some(h) => self.conn.wait_silence(h, self.timeout_ms),
            None => Err(Error::precondition("wait before open")),
        };
        self.record(None, observed)
    }

    fn record(&mut self, command: Option<String>, observed: Result<Observed>) -> Outcome {
        let observed = match observed {
            Ok(o) => o,
            Err(e) => return self.fail(e.to_string()),
        };
        let (response, exited, outcome) = match observed.event {
            ConnectorEvent::Error { detail } => return self.fail(detail),
            ConnectorEvent::Response { text, confidence } => (Some((text, confidence)), false, Outcome::Responded),
            ConnectorEvent::Silence => (None, false, Outcome::Silent),
            ConnectorEvent::Closed { text } => (text.map(|t| (t, None)), true, Outcome::Exited),
        };
        let sent_at = self.clock;
        let waited = observed.elapsed_ms.min(self.timeout_ms);
        self.clock += waited;
        let command = match command {
            Some(text) => TurnCommand::Spoken(Utterance::crawler(text, sent_at)),
            None => TurnCommand::Silence,
        };
        let response = match response {
            Some((text, confidence)) if !text.trim().is_empty() => {
                TurnResponse::Spoken(Utterance::skill(text, confidence, self.clock))
            }
            _ => TurnResponse::NoResponse,
        };
        self.session.turns.push(Turn { command, response, wait_elapsed: waited, skill_exited: exited });
        if exited {
            self.session.termination = Termination::AutoExit;
        }
        outcome
    }

    fn fail(&mut self, detail: String) -> Outcome {
        self.session.termination = Termination::ConnectorError;
        self.session.error = Some(detail);
        Outcome::Failed
    }

    fn finish(self, termination: Termination, unsent: &[&str]) -> Session {
        let mut session = self.session;
        if session.termination != Termination::ConnectorError {
            session.termination = termination;
        }
        session.unsent = unsent.iter().map(|s| s.to_string()).collect();
        session
    }

    fn finish_as_is(self) -> Session {
        self.session
    }
}

/// Sends `commands` in order, then stop; returns the finished session.
fn drive(mut rec: Recorder<'_>, skill: &SkillDescriptor, stage: Stage, commands: &[&str]) -> Session {
    let mut script: Vec<&str> = commands.to_vec();
    script.push(STOP_COMMAND);
    match rec.open(skill, stage) {
        Outcome::Exited => return rec.finish(Termination::AutoExit, &script),
        Outcome::Failed => return rec.finish_as_is(),
        Outcome::Responded | Outcome::Silent => {}
    }
    for (i, cmd) in script.iter().enumerate() {
        let last = i + 1 == script.len();
        match rec.say(cmd) {
            Outcome::Failed => return rec.finish_as_is(),
            Outcome::Exited if last => return rec.finish(Termination::ExitedByStop, &[]),
            Outcome::Exited => return rec.finish(Termination::AutoExit, &script[i + 1..]),
            // A skill that stays open after stop is recorded as timing out.
            Outcome::Responded | Outcome::Silent if last => return rec.finish(Termination::Timeout, &[]),
            Outcome::Responded | Outcome::Silent => {}
        }
    }
    unreachable!("script always ends with stop")
}

fn timeout_for(plan: &ElicitationPlan, conn_default: u64) -> u64 {
    plan.response_timeout_ms.unwrap_or(conn_default)
}

/// One open-help-stop loop.
pub fn run_basic_loop(
    conn: &mut dyn Connector,
    skill: &SkillDescriptor,
    plan: &ElicitationPlan,
    timeout_ms: u64,
    stage: Stage,
) -> Session {
    basic_loop(conn, skill, plan, timeout_ms, Probe::BasicLoop, 1, stage)
}

fn basic_loop(
    conn: &mut dyn Connector,
    skill: &SkillDescriptor,
    _plan: &ElicitationPlan,
    timeout_ms: u64,
    probe: Probe,
    run_index: u32,
    stage: Stage,
) -> Session {
    let rec = Recorder::new(conn, skill, timeout_ms, probe, run_index, stage);
    drive(rec, skill, stage, &[HELP_COMMAND])
}

/// Open, each extracted command, stop.
pub fn run_exploration(
    conn: &mut dyn Connector,
    skill: &SkillDescriptor,
    commands: &CommandSet,
    timeout_ms: u64,
) -> Session {
    let rec = Recorder::new(conn, skill, timeout_ms, Probe::Exploration, 1, Stage::PostSetup);
    let cmds: Vec<&str> = commands.commands.iter().map(String::as_str).collect();
    drive(rec, skill, Stage::PostSetup, &cmds)
}

/// What the variety probe learned besides its sessions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VarietyOutcome {
    pub sessions: Vec<Session>,
    /// `None` when exploration was skipped.
    pub commands: Option<CommandSet>,
    pub flags: Vec<String>,
}

pub const FLAG_EXPLORATION_SKIPPED: &str = "exploration_skipped";
pub const FLAG_SILENT_HELP: &str = "help_response_silent";
pub const FLAG_NO_COMMANDS: &str = "no_commands_extracted";

/// Staged open-help-stop runs with an exploration session after run 2.
pub fn run_variety_probe(
    conn: &mut dyn Connector,
    skill: &SkillDescriptor,
    plan: &ElicitationPlan,
    timeout_ms: u64,
) -> VarietyOutcome {
    let mut out = VarietyOutcome::default();
    for run in 1..=plan.variety_runs {
        let stage = ElicitationPlan::stage_for_run(run);
        let session = basic_loop(conn, skill, plan, timeout_ms, Probe::VarietyRun, run, stage);
        let help = session.find_command(HELP_COMMAND).map(|(_, t)| t.response_text().unwrap_or("").to_string());
        out.sessions.push(session);
        if run != 2 {
            continue;
        }
        match help {
            None => out.flags.push(FLAG_EXPLORATION_SKIPPED.into()),
            Some(help) => {
                if help.trim().is_empty() {
                    out.flags.push(FLAG_SILENT_HELP.into());
                }
                let commands = extract_commands(&help, plan.max_extracted_commands);
                if commands.commands.is_empty() {
                    out.flags.push(FLAG_NO_COMMANDS.into());
                }
                out.sessions.push(run_exploration(conn, skill, &commands, timeout_ms));
                out.commands = Some(commands);
            }
        }
    }
    out
}

/// Open, then `silence_count` silent turns, then stop if the skill is still there.
pub fn run_silence_probe(
    conn: &mut dyn Connector,
    skill: &SkillDescriptor,
    plan: &ElicitationPlan,
    timeout_ms: u64,
) -> Session {
    let stage = Stage::PostExploration;
    let mut rec = Recorder::new(conn, skill, timeout_ms, Probe::SilenceProbe, 1, stage);
    match rec.open(skill, stage) {
        Outcome::Exited => return rec.finish(Termination::AutoExit, &[STOP_COMMAND]),
        Outcome::Failed => return rec.finish_as_is(),
        Outcome::Responded | Outcome::Silent => {}
    }
    for _ in 0..plan.silence_count {
        match rec.silence() {
            Outcome::Responded => {}
            Outcome::Exited => return rec.finish(Termination::AutoExit, &[STOP_COMMAND]),
            Outcome::Failed => return rec.finish_as_is(),
            // Nothing came back within the window; the session is left to time out.
            Outcome::Silent => return rec.finish(Termination::Timeout, &[STOP_COMMAND]),
        }
    }
    match rec.say(STOP_COMMAND) {
        Outcome::Exited => rec.finish(Termination::ExitedByStop, &[]),
        Outcome::Failed => rec.finish_as_is(),
        Outcome::Responded | Outcome::Silent => rec.finish(Termination::Timeout, &[]),
    }
}

/// One more open-help-stop loop after the skill has been explored.
pub fn run_memory_probe(
    conn: &mut dyn Connector,
    skill: &SkillDescriptor,
    plan: &ElicitationPlan,
    timeout_ms: u64,
) -> Session {
    basic_loop(conn, skill, plan, timeout_ms, Probe::MemoryCheck, 1, Stage::PostExploration)
}

/// Per-skill line of the crawl manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillCrawl {
    pub skill_id: String,
    pub sessions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commands: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Exclusion {
    pub skill_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlManifest {
    pub plan: ElicitationPlan,
    pub timeout_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub skills: Vec<SkillCrawl>,
    pub exclusions: Vec<Exclusion>,
    pub session_count: usize,
}

impl CrawlManifest {
    /// Skills that were crawled but produced nothing usable.
    pub fn failed_count(&self) -> usize {
        self.skills.iter().filter(|s| s.failed).count()
    }

    pub fn failure_threshold_exceeded(&self) -> bool {
        let crawled = self.skills.len();
        crawled > 0 && self.failed_count() as f64 / crawled as f64 > self.plan.max_failed_fraction
    }

    pub fn is_excluded(&self, skill_id: &str) -> bool {
        self.exclusions.iter().any(|e| e.skill_id == skill_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrawlOutput {
    pub sessions: Vec<Session>,
    pub manifest: CrawlManifest,
}

/// All probes for one skill, in protocol order, on one connector.
pub fn crawl_skill(
    conn: &mut dyn Connector,
    skill: &SkillDescriptor,
    plan: &ElicitationPlan,
    timeout_ms: u64,
) -> (Vec<Session>, SkillCrawl) {
    let variety = run_variety_probe(conn, skill, plan, timeout_ms);
    let mut sessions = variety.sessions;
    sessions.push(run_silence_probe(conn, skill, plan, timeout_ms));
    sessions.push(run_memory_probe(conn, skill, plan, timeout_ms));
    let failed = sessions.iter().all(|s| s.termination == Termination::ConnectorError);
    let report = SkillCrawl {
        skill_id: skill.id.clone(),
        sessions: sessions.len(),
        commands: variety.commands.map(|c| c.commands),
        flags: variety.flags,
        failed,
    };
    (sessions, report)
}

/// Crawls every included roster skill, up to `parallelism` at a time.
/// Output order follows the roster regardless of scheduling.
pub fn run_crawl(
    roster: &Roster,
    plan: &ElicitationPlan,
    factory: &dyn ConnectorFactory,
    parallelism: usize,
    seed: Option<u64>,
) -> Result<CrawlOutput> {
    if roster.skills.is_empty() {
        return Err(Error::precondition("cannot crawl an empty roster"));
    }
    plan.validate()?;
    let timeout_ms = timeout_for(plan, factory.default_timeout_ms());
    let included: Vec<&SkillDescriptor> = roster.skills.iter().filter(|s| !s.is_excluded()).collect();

    let crawl_one = |skill: &&SkillDescriptor| -> (Vec<Session>, SkillCrawl) {
        match factory.connect(skill) {
            Ok(mut conn) => crawl_skill(conn.as_mut(), skill, plan, timeout_ms),
            Err(e) => (
                Vec::new(),
                SkillCrawl {
                    skill_id: skill.id.clone(),
                    sessions: 0,
                    commands: None,
                    flags: vec![format!("connect_failed: {e}")],
                    failed: true,
                },
            ),
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Connector(format!("cannot start crawl workers: {e}")))?;
    let results: Vec<(Vec<Session>, SkillCrawl)> = pool.install(|| included.par_iter().map(crawl_one).collect());

    let mut exclusions: Vec<Exclusion> = roster
        .skills
        .iter()
        .filter_map(|s| {
            s.excluded_reason
                .as_ref()
                .filter(|_| s.is_excluded())
                .map(|r| Exclusion { skill_id: s.id.clone(), reason: r.clone() })
        })
        .collect();
    let mut sessions = Vec::new();
    let mut skills = Vec::new();
    for (skill_sessions, report) in results {
        if report.failed {
            let detail = skill_sessions
                .iter()
                .find_map(|s| s.error.clone())
                .or_else(|| report.flags.first().cloned())
                .unwrap_or_default();
            exclusions.push(Exclusion {
                skill_id: report.skill_id.clone(),
                reason: format!("every session failed: {detail}"),
            });
        }
        sessions.extend(skill_sessions);
        skills.push(report);
    }
    let manifest =
        CrawlManifest { plan: plan.clone(), timeout_ms, seed, session_count: sessions.len(), skills, exclusions };
    Ok(CrawlOutput { sessions, manifest })
}
