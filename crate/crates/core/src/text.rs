//! Deterministic text utilities shared by the crawler, simulator and evaluator.
//!
//! Every comparison the harness makes between transcripts goes through
//! [`normalize`], so case and punctuation differences introduced by speech
//! recognition never count as a "variation".

use unicode_general_category::{get_general_category, GeneralCategory};

/// Returns true for characters in any of the Unicode `P*` general categories.
pub fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Lowercases, strips punctuation, collapses whitespace runs and trims.
///
/// ```
/// assert_eq!(skillprobe::text::normalize("  OK,   Goodbye! "), "ok goodbye");
/// ```
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars().flat_map(char::to_lowercase) {
        if is_punctuation(c) {
            continue;
        }
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(c);
    }
    out
}

/// True iff the two texts are different after normalization.
pub fn texts_differ(a: &str, b: &str) -> bool {
    normalize(a) != normalize(b)
}

/// Number of words in the normalized form of `text`.
pub fn word_count(text: &str) -> usize {
    normalize(text).split(' ').filter(|w| !w.is_empty()).count()
}

/// Whole-word phrase containment on normalized text.
pub fn contains_phrase(text: &str, phrase: &str) -> bool {
    let phrase = normalize(phrase);
    if phrase.is_empty() {
        return false;
    }
    let haystack = format!(" {} ", normalize(text));
    haystack.contains(&format!(" {phrase} "))
}

/// Strips leading and trailing punctuation and whitespace.
pub fn trim_punctuation(text: &str) -> &str {
    text.trim_matches(|c: char| c.is_whitespace() || is_punctuation(c))
}
