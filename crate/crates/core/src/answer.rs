//! Answer-declaration parsing shared by rationale filtering and evaluation.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;

fn answer_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\banswer\s*:\s*\(?([a-z])\)?(?:[^\p{L}\p{N}]|$)").expect("valid regex")
    })
}

fn option_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\(([A-Z])\)|(?:^|\s)([A-Z])[.)](?:\s|$)").expect("valid regex"))
}

/// Letter from the last `Answer: X` declaration in `text`, uppercased.
///
/// `X` must be a single letter (optionally parenthesized) followed by
/// punctuation, whitespace or end of text; "Answer: Because" yields nothing.
pub fn extract_answer(text: &str) -> Option<char> {
    answer_re()
        .captures_iter(text)
        .last()
        .and_then(|c| c.get(1))
        .and_then(|m| m.as_str().chars().next())
        .map(|c| c.to_ascii_uppercase())
}

/// Splits a rationale into its explanation body and a trailing answer declaration.
///
/// The declaration is only removed when it is the last thing in the text
/// (ignoring trailing whitespace and punctuation).
pub fn split_rationale(text: &str) -> (&str, Option<char>) {
    let Some(caps) = answer_re().captures_iter(text).last() else {
        return (text.trim_end(), None);
    };
    let whole = caps.get(0).expect("group 0");
    let letter = caps
        .get(1)
        .and_then(|m| m.as_str().chars().next())
        .map(|c| c.to_ascii_uppercase());
    let rest = &text[whole.end()..];
    if rest
        .chars()
        .all(|c| c.is_whitespace() || c.is_ascii_punctuation())
    {
        (text[..whole.start()].trim_end(), letter)
    } else {
        (text.trim_end(), letter)
    }
}

/// Option letters listed in a question, as `(A)` or `A.` / `A)` markers.
pub fn option_letters(question: &str) -> BTreeSet<char> {
    option_re()
        .captures_iter(question)
        .filter_map(|c| c.get(1).or_else(|| c.get(2)))
        .filter_map(|m| m.as_str().chars().next())
        .collect()
}
