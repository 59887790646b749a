//! Seeded generation of valid simulated-skill profiles.
//!
//! Profiles are spread round-robin over every feasible combination of
//! one-shot behavior, re-prompt mode, memory mode and open/stop variety; the
//! remaining details (wording, help text, command set, roster metadata) are
//! drawn from the seed. Some combinations cannot exist: a resume prompt
//! always changes the opening, and a one-shot skill is never stopped, so
//! those cells are skipped.
//!
//! Texts are constructed so a crawl through the text connector can observe
//! every feature the profile has, and nothing it does not have:
//! a fixed re-prompt repeats the opening question, and a skill without memory
//! returns to its first opening once it has been explored.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MemoryMode, RepromptMode, SimProfile, WelcomeVariants};
use crate::model::{Category, SkillDescriptor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureCombo {
    pub one_shot: bool,
    pub reprompt: RepromptMode,
    pub memory: MemoryMode,
    pub open_variety: bool,
    pub stop_variety: bool,
}

/// Every combination a valid profile can realize.
pub fn feasible_combos() -> Vec<FeatureCombo> {
    let mut out = Vec::new();
    for one_shot in [false, true] {
        let reprompts: &[RepromptMode] = if one_shot {
            &[RepromptMode::None]
        } else {
            &[RepromptMode::None, RepromptMode::Fixed, RepromptMode::Reworded]
        };
        for &reprompt in reprompts {
            for memory in [MemoryMode::None, MemoryMode::ResumePrompt] {
                for open_variety in [false, true] {
                    if memory == MemoryMode::ResumePrompt && !open_variety {
                        continue;
                    }
                    for stop_variety in [false, true] {
                        if one_shot && stop_variety {
                            continue;
                        }
                        out.push(FeatureCombo { one_shot, reprompt, memory, open_variety, stop_variety });
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub count: usize,
    pub seed: u64,
    /// Probability that a non-one-shot profile has no help text.
    pub helpless_rate: f64,
    /// Probability that an eligible profile speaks no welcome at all.
    pub silent_open_rate: f64,
}

impl GeneratorConfig {
    pub fn new(count: usize, seed: u64) -> Self {
        GeneratorConfig { count, seed, helpless_rate: 0.15, silent_open_rate: 0.1 }
    }
}

const SKILL_NOUNS: &[&str] = &[
    "Pollen", "Trivia", "Recipe", "Budget", "Bedtime", "Traffic", "Workout", "Lemonade", "Planet", "Weather", "Quiz",
    "Garden", "Chess", "Podcast", "Commute", "Spelling",
];
const SKILL_SUFFIXES: &[&str] = &["Buddy", "Daily", "Helper", "Coach", "Quest", "Radio", "Club", "Lab"];

const OPENERS: &[&str] = &[
    "What would you like to do?",
    "Are you ready to begin?",
    "Which topic should we start with?",
    "How can I help today?",
    "Shall we get started?",
];
const SETUP_LINES: &[&str] = &[
    "your account is linked and your settings are saved.",
    "now that your location is set, here is today's report.",
    "your profile is ready, so here are your picks for today.",
    "setup is complete and your first list is ready.",
];
const RESUME_LINES: &[(&str, &str)] = &[
    ("welcome back", "Welcome back! Your last score was twelve points. Shall we keep playing?"),
    ("continue where you", "To continue where you last stopped, say ready. Otherwise, say start over."),
    ("resume", "Would you like to resume the chapter about the unicorn?"),
    ("last time", "Last time you finished level three. Ready for level four?"),
];
const COMMANDS: &[(&str, &str)] = &[
    ("tell me a fact", "Octopuses have three hearts."),
    ("start a quiz", "First question: what is the capital of Peru?"),
    ("read today's report", "Today's report: clear skies and low pollen."),
    ("add milk to my list", "Milk was added to your list."),
    ("play the next story", "Once upon a time there was a curious fox."),
    ("what's my balance", "Your balance is forty two dollars."),
    ("set a timer", "Timer set for ten minutes."),
    ("give me a recipe", "Try a tomato soup with basil."),
];
const REPROMPTS: &[&str] = &[
    "Sorry, I didn't hear anything. You can say start a quiz or tell me a fact.",
    "Are you still there? Try saying read today's report.",
    "I'm still listening. Which one would you like?",
    "If you need ideas, just say help.",
    "You can ask me for a recipe, or say stop to leave.",
];
const GOODBYES: &[&str] = &["Goodbye.", "See you soon!", "Have a great day.", "Talk to you later.", "Bye for now."];
const FACTS: &[&str] = &[
    "Here's your fact: honey never spoils.",
    "Here's your fact: a group of flamingos is called a flamboyance.",
    "Here's your fact: bananas are berries but strawberries are not.",
];

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

/// Two distinct entries of `items`.
fn pick_two<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> (&'a T, &'a T) {
    let a = rng.random_range(0..items.len());
    let b = (a + 1 + rng.random_range(0..items.len() - 1)) % items.len();
    (&items[a], &items[b])
}

/// Changes case and punctuation without changing the normalized text.
fn restyle(rng: &mut ChaCha8Rng, text: &str) -> String {
    match rng.random_range(0..4) {
        0 => text.to_uppercase(),
        1 => text.to_lowercase(),
        2 => format!("{}!", text.trim_end_matches(['.', '?', '!'])),
        _ => text.replace(['.', ','], ""),
    }
}

fn generate_one(rng: &mut ChaCha8Rng, index: usize, combo: FeatureCombo, cfg: &GeneratorConfig) -> SimProfile {
    let name = format!("{} {}", pick(rng, SKILL_NOUNS), pick(rng, SKILL_SUFFIXES));
    let skill = SkillDescriptor {
        id: format!("sim-{index:04}"),
        display_name: name.clone(),
        invocation_name: format!("{} {index}", name.to_lowercase()),
        category: Category::ALL[rng.random_range(0..Category::ALL.len())],
        subcategory: None,
        review_count: rng.random_range(0..5000),
        avg_rating: Some(f64::from(rng.random_range(10..=50u32)) / 10.0),
        excluded_reason: None,
    };

    let first = if combo.one_shot {
        pick(rng, FACTS).to_string()
    } else {
        format!("Welcome to {name}. {}", pick(rng, OPENERS))
    };
    let silent_open = !combo.one_shot
        && !combo.open_variety
        && combo.memory == MemoryMode::None
        && combo.reprompt != RepromptMode::Fixed
        && rng.random_bool(cfg.silent_open_rate);

    let mut memory_markers = Vec::new();
    let welcome_variants = if silent_open {
        WelcomeVariants::default()
    } else if !combo.open_variety {
        // Same words every time, possibly styled differently per stage.
        WelcomeVariants {
            post_setup: rng.random_bool(0.5).then(|| restyle(rng, &first)),
            post_exploration: rng.random_bool(0.5).then(|| restyle(rng, &first)),
            first_use: Some(first),
        }
    } else if combo.memory == MemoryMode::ResumePrompt {
        let (marker, line) = pick(rng, RESUME_LINES);
        memory_markers.push(marker.to_string());
        WelcomeVariants {
            post_setup: rng.random_bool(0.5).then(|| format!("Hi, {name} here: {}", pick(rng, SETUP_LINES))),
            post_exploration: Some(format!("{name}. {line}")),
            first_use: Some(first),
        }
    } else {
        let setup = if combo.one_shot {
            let (_, other) = pick_two(rng, FACTS);
            let other = other.to_string();
            if crate::text::texts_differ(&other, &first) {
                other
            } else {
                format!("{other} Isn't that neat?")
            }
        } else {
            format!("Hi, {name} here: {}", pick(rng, SETUP_LINES))
        };
        WelcomeVariants {
            post_setup: Some(setup),
            post_exploration: Some(restyle(rng, &first)),
            first_use: Some(first),
        }
    };

    let mut command_responses = BTreeMap::new();
    let mut exit_after_commands = Vec::new();
    let help_text = if combo.one_shot || rng.random_bool(cfg.helpless_rate) {
        None
    } else {
        let (a, b) = pick_two(rng, COMMANDS);
        for (cmd, reply) in [a, b] {
            command_responses.insert(crate::text::normalize(cmd), reply.to_string());
        }
        if rng.random_bool(0.15) {
            exit_after_commands.push(a.0.to_string());
        }
        Some(match rng.random_range(0..3) {
            0 => format!("You can say {}, or {}.", a.0, b.0),
            1 => format!("{name} helps you every day. Try saying {} or, just say {}!", a.0, b.0),
            _ => format!("Here's how it works. You can say {}. You can also say {}.", a.0, b.0),
        })
    };

    let goodbye_variants: Vec<String> = if combo.one_shot {
        Vec::new()
    } else if combo.stop_variety {
        let (a, b) = pick_two(rng, GOODBYES);
        let mut v = vec![a.to_string(), b.to_string()];
        if rng.random_bool(0.5) {
            v.push(restyle(rng, a));
        }
        v
    } else {
        match rng.random_range(0..3) {
            0 => Vec::new(),
            1 => vec![pick(rng, GOODBYES).to_string()],
            _ => {
                let g = pick(rng, GOODBYES).to_string();
                vec![g.clone(), restyle(rng, &g)]
            }
        }
    };

    let reprompt_texts = match combo.reprompt {
        RepromptMode::None => Vec::new(),
        RepromptMode::Fixed => {
            let opening = welcome_variants
                .for_stage(crate::model::Stage::PostExploration)
                .expect("fixed re-prompt profiles always have a welcome");
            vec![restyle(rng, opening)]
        }
        RepromptMode::Reworded => {
            let (a, b) = pick_two(rng, REPROMPTS);
            vec![a.to_string(), b.to_string()]
        }
    };

    SimProfile {
        skill,
        welcome_variants,
        help_text,
        goodbye_variants,
        one_shot: combo.one_shot,
        reprompt_mode: combo.reprompt,
        reprompt_texts,
        memory_mode: combo.memory,
        memory_markers,
        command_responses,
        exit_after_commands,
        rng_seed: rng.random::<u64>(),
    }
}

/// Generates `cfg.count` valid profiles; identical configs give identical output.
pub fn generate_profiles(cfg: &GeneratorConfig) -> Vec<SimProfile> {
    let combos = feasible_combos();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.count).map(|i| generate_one(&mut rng, i + 1, combos[i % combos.len()], cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn combos_cover_feasible_space() {
        let combos = feasible_combos();
        assert_eq!(combos.len(), 21);
        let cells: BTreeSet<(bool, u8, u8)> =
            combos.iter().map(|c| (c.one_shot, c.reprompt as u8, c.memory as u8)).collect();
        // 3 re-prompt modes × 2 memory modes for multi-turn skills, 2 memory modes for one-shot.
        assert_eq!(cells.len(), 8);
    }

    #[test]
    fn generated_profiles_are_valid_and_deterministic() {
        let cfg = GeneratorConfig::new(210, 42);
        let a = generate_profiles(&cfg);
        assert_eq!(a, generate_profiles(&cfg));
        assert_ne!(a, generate_profiles(&GeneratorConfig::new(210, 43)));
        for p in &a {
            p.validate().unwrap_or_else(|e| panic!("{}: {e}\n{p:#?}", p.skill.id));
        }
        let ids: BTreeSet<&str> = a.iter().map(|p| p.skill.id.as_str()).collect();
        assert_eq!(ids.len(), a.len());
        assert!(a.iter().any(|p| p.welcome_variants.is_empty()));
        assert!(a.iter().any(|p| !p.one_shot && p.help_text.is_none()));
    }
}
