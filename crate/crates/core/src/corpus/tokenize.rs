use std::collections::HashSet;

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || c == '.' || c == '-'
}

fn is_edge_punct(c: char) -> bool {
    c == '.' || c == '-'
}

/// Splits `text` into the ordered, deduplicated token set used for vectorization.
///
/// Tokens are runs of letters, digits, periods and hyphens. Periods and
/// hyphens are stripped from both ends, so `"GM.N"` and `"2.6"` stay whole
/// while a sentence-final `"vehicles."` becomes `vehicles`. Case folding is
/// ASCII-only.
///
/// ```
/// use newspulse_core::corpus::tokenize;
///
/// assert_eq!(
///     tokenize("GM recalls 2.6 mln vehicles"),
///     ["gm", "recalls", "2.6", "mln", "vehicles"],
/// );
/// assert!(tokenize("").is_empty());
/// ```
pub fn tokenize(text: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut tokens = Vec::new();
    for raw in text.split(|c: char| !is_token_char(c)) {
        let trimmed = raw.trim_matches(is_edge_punct);
        if trimmed.is_empty() {
            continue;
        }
        let token = trimmed.to_ascii_lowercase();
        if seen.insert(token.clone()) {
            tokens.push(token);
        }
    }
    tokens
}
