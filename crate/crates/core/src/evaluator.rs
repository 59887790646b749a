//! Turns a skill's recorded sessions into G1-G8 verdicts.
//!
//! Every comparison runs on normalized text. Judgments a human coder would
//! make ("informative", "personalized") go through the [`MarkerLexicon`];
//! when the evidence cannot settle a guideline the verdict is `inconclusive`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::crawler::STOP_COMMAND;
use crate::error::{Error, Result};
use crate::model::{
    Evidence, GuidelineId, GuidelineVerdict, Probe, Session, Termination, Turn, Verdict, GOODBYE_FACET,
};
use crate::simulator::HELP_COMMAND;
use crate::text::{contains_phrase, word_count};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerLexicon {
    pub instruction_markers: Vec<String>,
    pub memory_markers: Vec<String>,
    pub min_informative_words: usize,
}

impl MarkerLexicon {
    pub fn from_json(text: &str) -> Result<Self> {
        let lexicon: MarkerLexicon = serde_json::from_str(text).map_err(|e| Error::json("lexicon", e))?;
        lexicon.validate()?;
        Ok(lexicon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.instruction_markers.is_empty() {
            return Err(Error::validation("instruction_markers", "must not be empty"));
        }
        if self.memory_markers.is_empty() {
            return Err(Error::validation("memory_markers", "must not be empty"));
        }
        if self.min_informative_words == 0 {
            return Err(Error::validation("min_informative_words", "must be positive"));
        }
        Ok(())
    }

    pub fn builtin() -> &'static MarkerLexicon {
        static LEXICON: OnceLock<MarkerLexicon> = OnceLock::new();
        LEXICON.get_or_init(|| {
            MarkerLexicon::from_json(include_str!("../config/lexicon.json")).expect("bundled lexicon parses")
        })
    }

    pub fn has_instruction(&self, text: &str) -> bool {
        self.instruction_markers.iter().any(|m| contains_phrase(text, m))
    }

    /// Enough words, or an explicit instruction.
    pub fn is_informative(&self, text: &str) -> bool {
        word_count(text) >= self.min_informative_words || self.has_instruction(text)
    }
}

impl Default for MarkerLexicon {
    fn default() -> Self {
        MarkerLexicon::builtin().clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillEvaluation {
    pub skill_id: String,
    pub verdicts: BTreeMap<GuidelineId, GuidelineVerdict>,
    pub one_shot: bool,
}

impl SkillEvaluation {
    pub fn verdict(&self, g: GuidelineId) -> Verdict {
        self.verdicts.get(&g).map_or(Verdict::Inconclusive, |v| v.verdict)
    }

    pub fn compliant_count(&self) -> usize {
        self.verdicts.values().filter(|v| v.verdict == Verdict::Compliant).count()
    }

    pub fn check_invariants(&self) -> Result<()> {
        for g in GuidelineId::ALL {
            let v = self
                .verdicts
                .get(&g)
                .ok_or_else(|| Error::invariant(format!("{}: missing verdict for {g}", self.skill_id)))?;
            if v.guideline != g {
                return Err(Error::invariant(format!("{}: verdict filed under the wrong guideline", self.skill_id)));
            }
            v.check_invariants()?;
        }
        Ok(())
    }
}

fn evidence(session: &Session, turn: usize) -> Evidence {
    Evidence { session: session.session_ref(), turn }
}

fn successful<'a>(sessions: &'a [&'a Session]) -> impl Iterator<Item = &'a Session> + 'a {
    sessions.iter().copied().filter(|s| s.is_successful())
}

fn basic_loops<'a>(sessions: &[&'a Session]) -> Vec<&'a Session> {
    sessions.iter().copied().filter(|s| s.is_successful() && s.probe.is_basic_loop()).collect()
}

/// `Some(true)` when every successful open-help-stop loop ended with the
/// skill exiting on its opening turn; `None` when no such loop succeeded.
pub fn detect_one_shot(sessions: &[&Session]) -> Option<bool> {
    let loops = basic_loops(sessions);
    if loops.is_empty() {
        return None;
    }
    Some(loops.iter().all(|s| s.termination == Termination::AutoExit && s.turns.len() == 1 && s.turns[0].skill_exited))
}

/// G1 (opens and waits), G2 (informative help), G3 (exits on stop).
pub fn eval_basic(sessions: &[&Session], lexicon: &MarkerLexicon, one_shot: bool) -> [GuidelineVerdict; 3] {
    use GuidelineId::*;
    let ok: Vec<&Session> = successful(sessions).filter(|s| s.open_turn().is_some()).collect();
    if ok.is_empty() {
        return [
            GuidelineVerdict::inconclusive(G1, "no successful session"),
            GuidelineVerdict::inconclusive(G2, "no successful session"),
            GuidelineVerdict::inconclusive(G3, "no successful session"),
        ];
    }

    let silent_opens: Vec<Evidence> =
        ok.iter().filter(|s| !s.turns[0].has_response()).map(|s| evidence(s, 0)).collect();
    let g1 = if silent_opens.is_empty() {
        GuidelineVerdict::new(G1, Verdict::Compliant, ok.iter().map(|s| evidence(s, 0)).collect())
    } else {
        GuidelineVerdict::new(G1, Verdict::NonCompliant, silent_opens).with_note("open produced no response")
    };

    let loops = basic_loops(sessions);
    let help_turns: Vec<(&Session, usize, &Turn)> =
        loops.iter().filter_map(|s| s.find_command(HELP_COMMAND).map(|(i, t)| (*s, i, t))).collect();
    let g2 = if one_shot {
        let ev = loops.iter().map(|s| evidence(s, 0)).collect();
        GuidelineVerdict::new(G2, Verdict::NonCompliant, ev).with_note("one-shot skill exits before help")
    } else if let Some((s, i, _)) =
        help_turns.iter().find(|(_, _, t)| t.has_response() && lexicon.is_informative(t.normalized_response()))
    {
        GuidelineVerdict::new(G2, Verdict::Compliant, vec![evidence(s, *i)])
    } else if help_turns.is_empty() {
        GuidelineVerdict::inconclusive(G2, "help was never delivered")
    } else {
        let ev = help_turns.iter().map(|(s, i, _)| evidence(s, *i)).collect();
        GuidelineVerdict::new(G2, Verdict::NonCompliant, ev).with_note("help response missing or uninformative")
    };

    // Every stop must end the session; auto-exits end it by themselves.
    let mut ended = Vec::new();
    let mut stayed = Vec::new();
    let mut goodbye = false;
    for s in &ok {
        if let Some((i, t)) = s.find_command(STOP_COMMAND) {
            if t.skill_exited {
                goodbye |= t.has_response();
                ended.push(evidence(s, i));
            } else {
                stayed.push(evidence(s, i));
            }
        } else if s.termination == Termination::AutoExit {
            ended.push(evidence(s, s.turns.len() - 1));
        }
    }
    let g3 = if !stayed.is_empty() {
        GuidelineVerdict::new(G3, Verdict::NonCompliant, stayed).with_note("skill stayed open after stop")
    } else if ended.is_empty() {
        GuidelineVerdict::inconclusive(G3, "no session reached its end")
    } else {
        GuidelineVerdict::new(G3, Verdict::Compliant, ended)
    };
    [g1, g2, g3.with_facet(GOODBYE_FACET, goodbye)]
}

/// Differing pair among `(session, turn)` responses, compared on normalized text.
fn variety_verdict(g: GuidelineId, items: &[(&Session, usize)], what: &str) -> GuidelineVerdict {
    if items.len() < 2 {
        return GuidelineVerdict::inconclusive(g, format!("fewer than two comparable {what} responses"));
    }
    let text = |(s, i): &(&Session, usize)| s.turns[*i].normalized_response().to_string();
    for (a, x) in items.iter().enumerate() {
        for y in &items[a + 1..] {
            if text(x) != text(y) {
                return GuidelineVerdict::new(g, Verdict::Compliant, vec![evidence(x.0, x.1), evidence(y.0, y.1)]);
            }
        }
    }
    let ev = items.iter().map(|(s, i)| evidence(s, *i)).collect();
    GuidelineVerdict::new(g, Verdict::NonCompliant, ev).with_note(format!("identical {what} responses"))
}

/// G4 (varied openings) and G5 (varied goodbyes), pairwise over the staged runs.
pub fn eval_variety(sessions: &[&Session], one_shot: bool) -> [GuidelineVerdict; 2] {
    use GuidelineId::*;
    let loops = basic_loops(sessions);
    let staged: Vec<&Session> = loops.iter().copied().filter(|s| s.probe == Probe::VarietyRun).collect();
    let runs = if staged.is_empty() { loops } else { staged };

    let opens: Vec<(&Session, usize)> = runs.iter().filter(|s| s.open_turn().is_some()).map(|s| (*s, 0)).collect();
    let g4 = variety_verdict(G4, &opens, "open");

    let g5 = if one_shot {
        let ev = runs.iter().map(|s| evidence(s, 0)).collect();
        GuidelineVerdict::new(G5, Verdict::NonCompliant, ev).with_note("one-shot skill is never stopped")
    } else {
        let stops: Vec<(&Session, usize)> =
            runs.iter().filter_map(|s| s.find_command(STOP_COMMAND).map(|(i, _)| (*s, i))).collect();
        variety_verdict(G5, &stops, "stop")
    };
    [g4, g5]
}

/// G6 (re-prompts after silence) and G7 (re-prompt reworded or more instructive).
pub fn eval_error_handling(
    silence_session: Option<&Session>,
    one_shot: bool,
    lexicon: &MarkerLexicon,
) -> [GuidelineVerdict; 2] {
    use GuidelineId::*;
    let Some(s) = silence_session.filter(|s| s.is_successful() && s.open_turn().is_some()) else {
        if one_shot {
            return [
                GuidelineVerdict::new(G6, Verdict::NotApplicable, Vec::new()).with_note("one-shot skill"),
                GuidelineVerdict::inconclusive(G7, "silence probe missing or failed"),
            ];
        }
        return [
            GuidelineVerdict::inconclusive(G6, "silence probe missing or failed"),
            GuidelineVerdict::inconclusive(G7, "silence probe missing or failed"),
        ];
    };
    if one_shot {
        return [
            GuidelineVerdict::new(G6, Verdict::NotApplicable, vec![evidence(s, 0)]).with_note("one-shot skill"),
            GuidelineVerdict::new(G7, Verdict::NonCompliant, vec![evidence(s, 0)]).with_note("no re-prompt to reword"),
        ];
    }

    let silences: Vec<usize> = s.turns.iter().enumerate().filter(|(_, t)| t.is_silence()).map(|(i, _)| i).collect();
    let reprompts: Vec<usize> = silences.iter().copied().filter(|&i| s.turns[i].has_response()).collect();
    let fallback_ev = || {
        let idx: Vec<usize> = if silences.is_empty() { vec![0] } else { silences.clone() };
        idx.into_iter().map(|i| evidence(s, i)).collect::<Vec<_>>()
    };
    if reprompts.is_empty() {
        return [
            GuidelineVerdict::new(G6, Verdict::NonCompliant, fallback_ev()).with_note("no re-prompt after silence"),
            GuidelineVerdict::new(G7, Verdict::NonCompliant, fallback_ev()).with_note("no re-prompt to reword"),
        ];
    }
    let g6 = GuidelineVerdict::new(G6, Verdict::Compliant, reprompts.iter().map(|&i| evidence(s, i)).collect());

    let opening = s.turns[0].normalized_response();
    let opening_words = word_count(opening);
    let mut prior: Vec<&str> = Vec::new();
    let mut qualifying = None;
    for &i in &reprompts {
        let text = s.turns[i].normalized_response();
        let reworded = !prior.is_empty() && prior.iter().all(|p| *p != text);
        let elaborated = lexicon.has_instruction(text) || word_count(text) > opening_words;
        if text != opening && (reworded || elaborated) {
            qualifying = Some(i);
            break;
        }
        prior.push(text);
    }
    let g7 = match qualifying {
        Some(i) => GuidelineVerdict::new(G7, Verdict::Compliant, vec![evidence(s, 0), evidence(s, i)]),
        None => {
            let mut ev = vec![evidence(s, 0)];
            ev.extend(reprompts.iter().map(|&i| evidence(s, i)));
            GuidelineVerdict::new(G7, Verdict::NonCompliant, ev).with_note("re-prompts repeat the prompt")
        }
    };
    [g6, g7]
}

/// G8: the later opening refers back to earlier use.
pub fn eval_memory(first: Option<&Session>, memory: Option<&Session>, lexicon: &MarkerLexicon) -> GuidelineVerdict {
    fn usable(s: Option<&Session>) -> Option<&Session> {
        s.filter(|s| s.is_successful() && s.open_turn().is_some())
    }
    let (Some(first), Some(memory)) = (usable(first), usable(memory)) else {
        return GuidelineVerdict::inconclusive(GuidelineId::G8, "an opening response is missing");
    };
    let ev = vec![evidence(first, 0), evidence(memory, 0)];
    let before = first.turns[0].normalized_response();
    let after = memory.turns[0].normalized_response();
    if before == after {
        return GuidelineVerdict::new(GuidelineId::G8, Verdict::NonCompliant, ev).with_note("opening unchanged");
    }
    match lexicon.memory_markers.iter().find(|m| contains_phrase(after, m) && !contains_phrase(before, m)) {
        Some(m) => GuidelineVerdict::new(GuidelineId::G8, Verdict::Compliant, ev).with_note(format!("marker: {m}")),
        None => GuidelineVerdict::inconclusive(GuidelineId::G8, "opening changed but no memory marker found")
            .with_evidence(ev),
    }
}

/// All eight verdicts for one skill's sessions.
pub fn evaluate_skill(skill_id: &str, sessions: &[&Session], lexicon: &MarkerLexicon) -> SkillEvaluation {
    let one_shot = detect_one_shot(sessions);
    let is_one_shot = one_shot.unwrap_or(false);
    let mut verdicts = BTreeMap::new();
    let [g1, g2, g3] = eval_basic(sessions, lexicon, is_one_shot);
    let [g4, g5] = eval_variety(sessions, is_one_shot);

    let silence = sessions.iter().copied().find(|s| s.probe == Probe::SilenceProbe);
    let [g6, g7] = eval_error_handling(silence, is_one_shot, lexicon);

    let loops = basic_loops(sessions);
    let first = loops
        .iter()
        .copied()
        .find(|s| s.probe == Probe::VarietyRun && s.run_index == 1)
        .or_else(|| loops.iter().copied().find(|s| s.probe != Probe::MemoryCheck));
    let memory = sessions.iter().copied().find(|s| s.probe == Probe::MemoryCheck);
    let g8 = eval_memory(first, memory, lexicon);

    let mut all = [g1, g2, g3, g4, g5, g6, g7, g8];
    if one_shot.is_none() {
        // Nothing usable was recorded, so no verdict can stand.
        for v in &mut all {
            if v.verdict != Verdict::Inconclusive {
                *v = GuidelineVerdict::inconclusive(v.guideline, "no successful open-help-stop loop");
            }
        }
    }
    for v in all {
        verdicts.insert(v.guideline, v);
    }
    SkillEvaluation { skill_id: skill_id.to_string(), verdicts, one_shot: is_one_shot }
}

/// Evaluates every skill in the corpus, in order of first appearance.
pub fn evaluate_corpus(sessions: &[Session], lexicon: &MarkerLexicon) -> Vec<SkillEvaluation> {
    let mut order: Vec<&str> = Vec::new();
    let mut by_skill: BTreeMap<&str, Vec<&Session>> = BTreeMap::new();
    for s in sessions {
        by_skill
            .entry(s.skill_id.as_str())
            .or_insert_with(|| {
                order.push(s.skill_id.as_str());
                Vec::new()
            })
            .push(s);
    }
    order.into_iter().map(|id| evaluate_skill(id, &by_skill[id], lexicon)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Stage, TurnCommand, TurnResponse, Utterance};
    use GuidelineId::*;

    fn turn(command: Option<&str>, response: Option<&str>, exited: bool) -> Turn {
        Turn {
            command: command.map_or(TurnCommand::Silence, |c| TurnCommand::Spoken(Utterance::crawler(c, 0))),
            response: response
                .map_or(TurnResponse::NoResponse, |r| TurnResponse::Spoken(Utterance::skill(r, Some(1.0), 0))),
            wait_elapsed: 0,
            skill_exited: exited,
        }
    }

    fn session(probe: Probe, run: u32, turns: Vec<Turn>, termination: Termination) -> Session {
        Session {
            skill_id: "s".into(),
            probe,
            run_index: run,
            stage: Stage::PostExploration,
            turns,
            termination,
            unsent: Vec::new(),
            error: None,
        }
    }

    fn loop_session(probe: Probe, run: u32, open: &str, help: &str, bye: Option<&str>) -> Session {
        session(
            probe,
            run,
            vec![
                turn(Some("open s"), Some(open), false),
                turn(Some("help"), Some(help), false),
                turn(Some("stop"), bye, true),
            ],
            Termination::ExitedByStop,
        )
    }

    fn lex() -> &'static MarkerLexicon {
        MarkerLexicon::builtin()
    }

    const STORY_OPEN: &str = "Welcome back to Amazon Story time! Would you like to resume The Mouse and the Unicorn?";

    #[test]
    fn story_time_error_handling() {
        let s = session(
            Probe::SilenceProbe,
            1,
            vec![
                turn(Some("open story time"), Some(STORY_OPEN), false),
                turn(None, Some("you can say yes to resume or no to play the next story"), false),
                turn(None, Some("you can say yes to resume or no to play the next story"), false),
                turn(Some("stop"), Some("Goodbye"), true),
            ],
            Termination::ExitedByStop,
        );
        let [g6, g7] = eval_error_handling(Some(&s), false, lex());
        assert_eq!(g6.verdict, Verdict::Compliant);
        assert_eq!(g7.verdict, Verdict::Compliant);
        assert_eq!(g7.evidence[1].turn, 1);
    }

    #[test]
    fn bring_stays_silent() {
        let s = session(
            Probe::SilenceProbe,
            1,
            vec![turn(Some("open bring"), Some("Welcome to Bring!"), false), turn(None, None, true)],
            Termination::AutoExit,
        );
        let [g6, g7] = eval_error_handling(Some(&s), false, lex());
        assert_eq!((g6.verdict, g7.verdict), (Verdict::NonCompliant, Verdict::NonCompliant));
        g6.check_invariants().unwrap();
        g7.check_invariants().unwrap();
    }

    #[test]
    fn repeated_prompt_is_not_rewording() {
        let open = "howdy. You're playing Categories Game! For instructions, say help me or, say start playing!";
        let s = session(
            Probe::SilenceProbe,
            1,
            vec![
                turn(Some("open c"), Some(open), false),
                turn(None, Some(open), false),
                turn(None, Some(&open.to_uppercase()), false),
            ],
            Termination::Timeout,
        );
        let [g6, g7] = eval_error_handling(Some(&s), false, lex());
        assert_eq!((g6.verdict, g7.verdict), (Verdict::Compliant, Verdict::NonCompliant));
    }

    #[test]
    fn one_shot_and_failed_silence_probe() {
        let s =
            session(Probe::SilenceProbe, 1, vec![turn(Some("open c"), Some("A fact."), true)], Termination::AutoExit);
        let [g6, g7] = eval_error_handling(Some(&s), true, lex());
        assert_eq!((g6.verdict, g7.verdict), (Verdict::NotApplicable, Verdict::NonCompliant));
        let failed = session(Probe::SilenceProbe, 1, Vec::new(), Termination::ConnectorError);
        let [g6, g7] = eval_error_handling(Some(&failed), false, lex());
        assert_eq!((g6.verdict, g7.verdict), (Verdict::Inconclusive, Verdict::Inconclusive));
    }

    #[test]
    fn memory_examples() {
        let first =
            loop_session(Probe::VarietyRun, 1, "Welcome to Seven Minute Workout. Just say start workout.", "h", None);
        let later = loop_session(
            Probe::MemoryCheck,
            1,
            "Welcome to Seven Minute Workout. To continue where you last left off, say ready.",
            "h",
            None,
        );
        assert_eq!(eval_memory(Some(&first), Some(&later), lex()).verdict, Verdict::Compliant);

        let howdy = "howdy. You're playing Categories Game!";
        let a = loop_session(Probe::VarietyRun, 1, howdy, "h", None);
        let b = loop_session(Probe::MemoryCheck, 1, howdy, "h", None);
        assert_eq!(eval_memory(Some(&a), Some(&b), lex()).verdict, Verdict::NonCompliant);

        let a = loop_session(Probe::VarietyRun, 1, "Welcome to Lemonade Stand.", "h", None);
        let b = loop_session(
            Probe::MemoryCheck,
            1,
            "Today is your twelfth day selling lemonade. You have three dollars and fifty cents.",
            "h",
            None,
        );
        let v = eval_memory(Some(&a), Some(&b), lex());
        assert_eq!(v.verdict, Verdict::Inconclusive);
        assert_eq!(v.evidence.len(), 2);
        assert_eq!(eval_memory(Some(&a), None, lex()).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn marker_already_present_at_first_does_not_count() {
        let a = loop_session(Probe::VarietyRun, 1, "Welcome back. Let's play.", "h", None);
        let b = loop_session(Probe::MemoryCheck, 1, "Welcome back. Let's play again.", "h", None);
        assert_eq!(eval_memory(Some(&a), Some(&b), lex()).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn variety_examples() {
        let zyrtec = [
            loop_session(
                Probe::VarietyRun,
                1,
                "Hello! Let's get ahead of your allergies.",
                "h",
                Some("Ok. I am here for you."),
            ),
            loop_session(
                Probe::VarietyRun,
                2,
                "let's start with your city and state",
                "h",
                Some("Ok, I will be here for you."),
            ),
            loop_session(
                Probe::VarietyRun,
                3,
                "Welcome to Zyrtec. Today in xxx.",
                "h",
                Some("Ok. I am here 24 7 365."),
            ),
        ];
        let refs: Vec<&Session> = zyrtec.iter().collect();
        let [g4, g5] = eval_variety(&refs, false);
        assert_eq!((g4.verdict, g5.verdict), (Verdict::Compliant, Verdict::Compliant));

        let same: Vec<Session> = (1..=3)
            .map(|i| loop_session(Probe::VarietyRun, i, "Which day do you like to hear", "h", Some("OK")))
            .collect();
        let refs: Vec<&Session> = same.iter().collect();
        let [g4, g5] = eval_variety(&refs, false);
        assert_eq!((g4.verdict, g5.verdict), (Verdict::NonCompliant, Verdict::NonCompliant));
        assert_eq!(g4.evidence.len(), 3);

        let [g4, g5] = eval_variety(&refs[..1], false);
        assert_eq!((g4.verdict, g5.verdict), (Verdict::Inconclusive, Verdict::Inconclusive));
    }

    #[test]
    fn adding_a_differing_open_only_helps_g4() {
        let mut runs: Vec<Session> =
            (1..=3).map(|i| loop_session(Probe::VarietyRun, i, "Same words.", "h", None)).collect();
        let before = eval_variety(&runs.iter().collect::<Vec<_>>(), false)[0].verdict;
        runs.push(loop_session(Probe::VarietyRun, 4, "Other words.", "h", None));
        let after = eval_variety(&runs.iter().collect::<Vec<_>>(), false)[0].verdict;
        assert_eq!((before, after), (Verdict::NonCompliant, Verdict::Compliant));
    }

    #[test]
    fn basic_examples() {
        let help = "You can say play a story, or ask for a story about animals.";
        let s = loop_session(Probe::VarietyRun, 1, STORY_OPEN, help, Some("Sweet dreams."));
        let [g1, g2, g3] = eval_basic(&[&s], lex(), false);
        assert_eq!((g1.verdict, g2.verdict, g3.verdict), (Verdict::Compliant, Verdict::Compliant, Verdict::Compliant));
        assert!(g3.facets[GOODBYE_FACET]);

        let quiet = loop_session(Probe::VarietyRun, 1, STORY_OPEN, "Hmm, what was that?", None);
        let [_, g2, g3] = eval_basic(&[&quiet], lex(), false);
        assert_eq!(g2.verdict, Verdict::NonCompliant);
        assert_eq!((g3.verdict, g3.facets[GOODBYE_FACET]), (Verdict::Compliant, false));

        let mut stuck = quiet.clone();
        stuck.turns[2].skill_exited = false;
        stuck.termination = Termination::Timeout;
        assert_eq!(eval_basic(&[&stuck], lex(), false)[2].verdict, Verdict::NonCompliant);

        let mut mute = quiet;
        mute.turns[0].response = TurnResponse::NoResponse;
        assert_eq!(eval_basic(&[&mute], lex(), false)[0].verdict, Verdict::NonCompliant);
    }

    #[test]
    fn one_shot_detection() {
        let fact = |run| {
            session(
                Probe::VarietyRun,
                run,
                vec![turn(Some("open cat facts"), Some("Cats purr."), true)],
                Termination::AutoExit,
            )
        };
        let facts: Vec<Session> = (1..=3).map(fact).collect();
        let refs: Vec<&Session> = facts.iter().collect();
        assert_eq!(detect_one_shot(&refs), Some(true));
        let full = loop_session(Probe::VarietyRun, 2, "Hi", "h", None);
        assert_eq!(detect_one_shot(&[&facts[0], &full]), Some(false));
        let failed = session(Probe::VarietyRun, 1, Vec::new(), Termination::ConnectorError);
        assert_eq!(detect_one_shot(&[&failed]), None);

        let eval = evaluate_skill("cat", &refs, lex());
        assert!(eval.one_shot);
        assert_eq!(eval.verdict(G2), Verdict::NonCompliant);
        assert_eq!(eval.verdict(G5), Verdict::NonCompliant);
    }

    #[test]
    fn only_failures_give_all_inconclusive() {
        let failed: Vec<Session> =
            (1..=3).map(|i| session(Probe::VarietyRun, i, Vec::new(), Termination::ConnectorError)).collect();
        let eval = evaluate_skill("x", &failed.iter().collect::<Vec<_>>(), lex());
        assert!(eval.verdicts.values().all(|v| v.verdict == Verdict::Inconclusive));
        eval.check_invariants().unwrap();
    }

    #[test]
    fn lexicon_loading() {
        assert!(lex().is_informative("you can say hi"));
        assert!(!lex().is_informative("Hmm, what was that?"));
        assert!(MarkerLexicon::from_json(
            r#"{"instruction_markers":[],"memory_markers":["a"],"min_informative_words":5}"#
        )
        .is_err());
        assert!(MarkerLexicon::from_json(
            r#"{"instruction_markers":["a"],"memory_markers":["b"],"min_informative_words":0}"#
        )
        .is_err());
    }
}
