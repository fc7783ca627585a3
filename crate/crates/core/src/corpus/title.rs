use deunicode::deunicode_with_tofu;

/// Words removed from titles before matching.
pub const STOP_WORDS: &[&str] = &[
    "a", "an", "and", "as", "at", "by", "for", "from", "in", "of", "on", "the", "to", "with",
];

/// Transliterates to ASCII; characters without a mapping are dropped.
pub fn fold_ascii(text: &str) -> String {
    if text.is_ascii() {
        return text.to_string();
    }
    deunicode_with_tofu(text, "")
}

/// Canonical form used to match titles across sources.
///
/// Steps, in order: transliterate to ASCII, lowercase, replace punctuation
/// with word breaks, drop [`STOP_WORDS`], delete all whitespace. A result that
/// is itself a stop-word (e.g. from "o f") collapses to the empty string so
/// the function stays idempotent.
pub fn normalize_title(title: &str) -> String {
    let lowered = fold_ascii(title).to_ascii_lowercase();
    let cleaned: String = lowered
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { ' ' })
        .collect();
    let joined: String = cleaned
        .split_whitespace()
        .filter(|w| !STOP_WORDS.contains(w))
        .collect();
    if STOP_WORDS.contains(&joined.as_str()) {
        String::new()
    } else {
        joined
    }
}
