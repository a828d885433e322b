//! Tokenization shared by the offline providers and lexical alignment.

use std::collections::BTreeSet;

/// Lowercased tokens split on any non-alphanumeric character.
///
/// Strings with no alphanumeric content fall back to their whitespace-split
/// pieces so that e.g. `"??"` still yields one token.
pub fn tokens(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let words: Vec<String> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect();
    if words.is_empty() {
        lower.split_whitespace().map(str::to_owned).collect()
    } else {
        words
    }
}

pub fn token_set(text: &str) -> BTreeSet<String> {
    tokens(text).into_iter().collect()
}
