//! Text normalisation and similarity measures used by the label index.

use std::collections::BTreeSet;

/// Lowercases, turns punctuation into separators and collapses whitespace.
/// Apostrophes are dropped so that "Tesla's" normalises to "teslas".
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for ch in text.chars() {
        if ch == '\'' || ch == '\u{2019}' {
            continue;
        }
        if ch.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.extend(ch.to_lowercase());
        } else {
            pending_space = true;
        }
    }
    out
}

pub fn tokens(normalized: &str) -> BTreeSet<&str> {
    normalized.split(' ').filter(|t| !t.is_empty()).collect()
}

/// Character trigrams of a normalised string padded with one space on each
/// side, so single-character words still produce a trigram.
pub fn trigrams(normalized: &str) -> BTreeSet<String> {
    if normalized.is_empty() {
        return BTreeSet::new();
    }
    let padded: Vec<char> = std::iter::once(' ')
        .chain(normalized.chars())
        .chain(std::iter::once(' '))
        .collect();
    padded.windows(3).map(|w| w.iter().collect()).collect()
}

pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

pub fn dice<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 0.0;
    }
    2.0 * a.intersection(b).count() as f64 / total as f64
}

pub const TOKEN_WEIGHT: f64 = 0.6;
pub const TRIGRAM_WEIGHT: f64 = 0.4;

/// Blend of token Jaccard and trigram Dice over normalised strings.
pub fn similarity(query: &str, label: &str) -> f64 {
    TOKEN_WEIGHT * jaccard(&tokens(query), &tokens(label))
        + TRIGRAM_WEIGHT * dice(&trigrams(query), &trigrams(label))
}
