//! Text normalisation shared by every stage.
//!
//! Tokenisation is deliberately simple: lowercase, split on Unicode
//! whitespace, trim non-alphanumeric characters from both ends of each token
//! and drop tokens that become empty. Internal punctuation survives, so
//! `covid-19` stays one token. Normalised phrases are the surviving tokens
//! joined by a single space.

/// Lowercased, punctuation-trimmed tokens of `text`.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| {
            t.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn normalize_phrase(text: &str) -> String {
    tokenize(text).join(" ")
}

/// Resolve the headword of a normalised phrase.
///
/// A supplied head is kept when, after normalisation, it is a single token of
/// the phrase. Otherwise the last token is used. Returns the head and whether
/// the fallback was taken, or `None` for an empty phrase.
pub fn resolve_head(phrase: &str, supplied: Option<&str>) -> Option<(String, bool)> {
    let last = phrase.rsplit(' ').next().filter(|t| !t.is_empty())?;
    if let Some(head) = supplied {
        let head = tokenize(head);
        if head.len() == 1 && phrase.split(' ').any(|t| t == head[0]) {
            return Some((head[0].clone(), false));
        }
    }
    Some((last.to_string(), supplied.is_some()))
}

/// Number of (possibly overlapping) occurrences of `needle` as a contiguous
/// token run inside `haystack`.
pub fn count_token_runs<S: AsRef<str>>(haystack: &[S], needle: &[S]) -> usize {
    if needle.is_empty() || needle.len() > haystack.len() {
        return 0;
    }
    haystack
        .windows(needle.len())
        .filter(|w| w.iter().zip(needle).all(|(a, b)| a.as_ref() == b.as_ref()))
        .count()
}

/// True when the normalised `entry` (one or more tokens) occurs inside the
/// token list of a phrase.
pub fn phrase_contains(phrase_tokens: &[&str], entry: &str) -> bool {
    let needle: Vec<&str> = entry.split(' ').collect();
    count_token_runs(phrase_tokens, &needle) > 0
}

/// The English stop list shipped with the crate.
pub fn default_stop_words() -> impl Iterator<Item = &'static str> {
    include_str!("../data/stopwords.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_trims_boundary_punctuation() {
        assert_eq!(normalize_phrase("  Bill   Gates, "), "bill gates");
        assert_eq!(
            normalize_phrase("{5G} to depopulate the world."),
            "5g to depopulate the world"
        );
        assert_eq!(normalize_phrase("covid-19 (virus)"), "covid-19 virus");
        assert_eq!(normalize_phrase("... !!"), "");
    }

    #[test]
    fn head_falls_back_to_last_token() {
        assert_eq!(
            resolve_head("bill gates", Some("Gates")),
            Some(("gates".into(), false))
        );
        assert_eq!(
            resolve_head("bill gates", None),
            Some(("gates".into(), false))
        );
        assert_eq!(
            resolve_head("bill gates", Some("melinda")),
            Some(("gates".into(), true))
        );
        assert_eq!(
            resolve_head("bill gates", Some("bill gates")),
            Some(("gates".into(), true))
        );
        assert_eq!(resolve_head("", Some("x")), None);
    }

    #[test]
    fn token_runs_count_overlaps() {
        let hay = ["a", "a", "a"];
        assert_eq!(count_token_runs(&hay, &["a", "a"]), 2);
        assert_eq!(count_token_runs(&hay, &["b"]), 0);
        assert!(phrase_contains(&["wuhan", "lab", "leak"], "lab leak"));
        assert!(!phrase_contains(&["wuhan", "lab", "leak"], "wuhan leak"));
    }

    #[test]
    fn stop_list_contains_copulas() {
        let words: Vec<_> = default_stop_words().collect();
        assert!(words.contains(&"is"));
        assert!(!words.contains(&"invented"));
    }
}
