//! Token normalization.
//!
//! A token is a maximal run of alphanumeric characters, ASCII-lowercased.
//! Everything else (whitespace, punctuation, hyphens) separates tokens. No
//! stemming and no stop-word removal is applied.

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Lowercases `raw` and strips surrounding non-alphanumeric characters.
///
/// Returns an empty string when nothing survives.
pub fn normalize_token(raw: &str) -> String {
    raw.trim_matches(|c: char| !is_token_char(c))
        .chars()
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Splits `raw` into normalized tokens, preserving order and duplicates.
pub fn tokenize(raw: &str) -> Vec<String> {
    raw.split(|c: char| !is_token_char(c))
        .filter(|piece| !piece.is_empty())
        .map(normalize_token)
        .collect()
}

/// Canonical form of a whole label: its tokens joined by single spaces.
///
/// Two labels are considered equal when their keys are equal.
pub fn label_key(label: &str) -> String {
    tokenize(label).join(" ")
}
