use std::collections::HashSet;
use std::sync::OnceLock;

/// Familiar-word list, one lowercase word per line.
pub const FAMILIAR_WORDS: &str = include_str!("../../data/dale_chall_familiar.txt");

/// SHA-256 of [`FAMILIAR_WORDS`]; readability values depend on the exact list.
pub const FAMILIAR_WORDS_SHA256: &str = "8f1b4e4e13017fc3b87879fcb8bc66965ca46f766f0684a3865828abb346230c";

fn familiar_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        FAMILIAR_WORDS
            .lines()
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .collect()
    })
}

pub fn familiar_word_count() -> usize {
    familiar_set().len()
}

/// Case-insensitive lookup with simple inflection stripping (`-s`, `-es`,
/// `-ies`, `-ed`, `-ied`, `-d`, `-ing`, `'s`). Numbers count as familiar.
pub fn is_familiar(word: &str) -> bool {
    if word.chars().all(|c| c.is_ascii_digit()) {
        return true;
    }
    let w = word.to_lowercase().replace('’', "'");
    let set = familiar_set();
    if set.contains(w.as_str()) {
        return true;
    }
    let w = w.strip_suffix("'s").unwrap_or(&w);
    if set.contains(w) {
        return true;
    }
    let mut candidates: Vec<String> = Vec::new();
    for (suffix, replacement) in [("ies", "y"), ("ied", "y"), ("es", ""), ("s", ""), ("ed", ""), ("d", ""), ("ing", ""), ("ing", "e")] {
        if let Some(stem) = w.strip_suffix(suffix) {
            if !stem.is_empty() {
                candidates.push(format!("{stem}{replacement}"));
            }
        }
    }
    candidates.iter().any(|c| set.contains(c.as_str()))
}
